"""Basic null forms and the two representations of A^mu d_mu phi.

Q0(u,v)   = d_t u d_t v - grad u . grad v
Qij(u,v)  = d_i u d_j v - d_j u d_i v
Q0j(u,v)  = d_t u d_j v - d_j u d_t v

Arguments may be scalar (N, N) fields or stacked 3-vector (3, N, N) fields;
vector arguments are contracted componentwise with the Euclidean target
inner product, spacetime derivatives act per component.

The gauge advection A^mu d_mu phi admits, under the Lorenz condition
d_t A_0 = div (A_1, A_2), the null decomposition

    A^mu d_mu phi = -1/2 Q_ik(D^-1 (R^i A^k - R^k A^i), phi)
                    + Q_0i(D^-1 R^i A_0, phi)

with plain Riesz transforms R_i = D^-1 d_i and latin gauge indices raised
with the spatial metric (A^k = -A_k).  On the torus the identity holds for
mean-free gauge components: the D^-1 convention maps the mean mode to zero,
so any constant part of (A_0, A_1, A_2) is invisible to the right-hand side.
"""

from __future__ import annotations

import numpy as np

from .fields import State, n3_cross, target_dot
from .spectral import Grid, random_band_limited


def _contract(prod: np.ndarray) -> np.ndarray:
    """Sum a possible leading component axis."""
    return prod.sum(axis=0) if prod.ndim == 3 else prod


def q0(grid: Grid, u, ut, v, vt) -> np.ndarray:
    """Q0(u, v); ut, vt are the time-derivative slices."""
    out = _contract(ut * vt)
    for axis in (1, 2):
        out = out - _contract(grid.spatial_derivative(u, axis) * grid.spatial_derivative(v, axis))
    return out


def qij(grid: Grid, u, v, i: int, j: int) -> np.ndarray:
    du_i = grid.spatial_derivative(u, i)
    du_j = grid.spatial_derivative(u, j)
    dv_i = grid.spatial_derivative(v, i)
    dv_j = grid.spatial_derivative(v, j)
    return _contract(du_i * dv_j) - _contract(du_j * dv_i)


def q0j(grid: Grid, u, ut, v, vt, j: int) -> np.ndarray:
    dv_j = grid.spatial_derivative(v, j)
    du_j = grid.spatial_derivative(u, j)
    return _contract(ut * dv_j) - _contract(du_j * vt)


def advection_direct(state: State) -> np.ndarray:
    """A^mu d_mu phi = A_0 d_t phi - A_1 d_1 phi - A_2 d_2 phi."""
    g = state.grid
    return (state.a[0] * state.dphi
            - state.a[1] * g.spatial_derivative(state.phi, 1)
            - state.a[2] * g.spatial_derivative(state.phi, 2))


def advection_nullform(state: State) -> np.ndarray:
    """Null-form representation of A^mu d_mu phi.

    Equals :func:`advection_direct` (to spectral accuracy) whenever the state
    satisfies the Lorenz condition and the gauge components are mean-free.
    The time derivative of the auxiliary potential D^-1 R^i A_0 is computed
    as D^-1 R^i (d_t A_0) from the stored da.
    """
    g = state.grid
    phi, dphi = state.phi, state.dphi
    a0, da0 = state.a[0], state.da[0]

    # P1 = sum_j Q_0j(D^-1 R_j A_0, phi)
    out = np.zeros_like(phi)
    for j in (1, 2):
        u_j = g.dinv(g.riesz(a0, j))
        ut_j = g.dinv(g.riesz(da0, j))
        out += ut_j * g.spatial_derivative(phi, j) - g.spatial_derivative(u_j, j) * dphi

    # P2 = -1/2 sum_ik Q_ik(B_ik, phi) with B_ik = D^-1(R_i A^k - R_k A^i);
    # antisymmetry reduces the sum to -Q_12(B_12, phi).
    a_up1, a_up2 = -state.a[1], -state.a[2]
    b12 = g.dinv(g.riesz(a_up2, 1) - g.riesz(a_up1, 2))
    out -= (g.spatial_derivative(b12, 1) * g.spatial_derivative(phi, 2)
            - g.spatial_derivative(b12, 2) * g.spatial_derivative(phi, 1))
    return out


def lorenz_residual(state: State) -> np.ndarray:
    """d_mu A^mu = d_t A_0 - d_1 A_1 - d_2 A_2 (zero in the Lorenz gauge)."""
    g = state.grid
    return (state.da[0]
            - g.spatial_derivative(state.a[1], 1)
            - g.spatial_derivative(state.a[2], 2))


def manufactured_lorenz_state(grid: Grid, rng: np.random.Generator, kappa: float = 1.0,
                              m_max: int = 4, amplitude: float = 0.5,
                              break_gauge: bool = False) -> State:
    """Random smooth state satisfying the Lorenz condition exactly.

    A_0 is time independent and mean-free, (A_1, A_2) is the mean-free curl
    of a random stream function (divergence free), phi is a smooth on-sphere
    field with tangent velocity.  With ``break_gauge`` the spatial potential
    acquires a gradient part while d_t A_0 stays zero, so the Lorenz residual
    is nonzero by construction.
    """
    n = grid.n_points
    a0 = random_band_limited(grid, rng, m_max, amplitude, mean_free=True)
    stream = random_band_limited(grid, rng, m_max, amplitude, mean_free=True)
    a1 = -grid.spatial_derivative(stream, 2)
    a2 = grid.spatial_derivative(stream, 1)
    if break_gauge:
        pot = random_band_limited(grid, rng, m_max, amplitude, mean_free=True)
        a1 = a1 + grid.spatial_derivative(pot, 1)
        a2 = a2 + grid.spatial_derivative(pot, 2)
    a = np.stack([a0, a1, a2])
    da = np.stack([np.zeros((n, n)),
                   random_band_limited(grid, rng, m_max, amplitude),
                   random_band_limited(grid, rng, m_max, amplitude)])

    raw = np.stack([random_band_limited(grid, rng, m_max, 0.3) for _ in range(3)])
    raw[2] += 1.0
    phi = raw / np.sqrt(target_dot(raw, raw))
    vel = np.stack([random_band_limited(grid, rng, m_max, amplitude) for _ in range(3)])
    dphi = vel - target_dot(vel, phi) * phi
    return State(grid, phi, dphi, a, da, t=0.0, kappa=kappa)
