"""Matter and gauge field containers plus index conventions.

The matter field phi maps into S^2 in R^3 and is stored as a (3, N, N)
array of components; the gauge potential A = (A_0, A_1, A_2) likewise.
Spacetime indices are raised and lowered with diag(1, -1, -1); the totally
antisymmetric tensor uses the raised convention eps^{012} = +1, which under
this metric gives the lowered component eps_{012} = +1 as well.

A :class:`State` is one Cauchy slice (phi, d_t phi, A, d_t A) together with
time, the coupling kappa and the bound constant for 1/(2 kappa^2).  States
are immutable by contract: every evolution step returns a new State.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import Grid

N3 = np.array([0.0, 0.0, 1.0])

SPHERE_TOL = 1e-8  # default pointwise tolerance for |phi|^2 = 1


def metric_sign(mu: int) -> float:
    """Sign of the diagonal Minkowski metric diag(1, -1, -1)."""
    if mu == 0:
        return 1.0
    if mu in (1, 2):
        return -1.0
    raise ValueError(f"index must be in {{0,1,2}}, got {mu}")


def epsilon_lower() -> np.ndarray:
    """Totally antisymmetric eps_{mu nu rho} as a (3,3,3) table.

    Built from eps^{012} = +1 by lowering all three indices with
    diag(1,-1,-1); the two minus signs cancel, so eps_{012} = +1.
    """
    eps_up = np.zeros((3, 3, 3))
    for (a, b, c), sign in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
                            ((0, 2, 1), -1), ((2, 1, 0), -1), ((1, 0, 2), -1)):
        eps_up[a, b, c] = sign
    g = np.diag([1.0, -1.0, -1.0])
    return np.einsum("ad,be,cf,def->abc", g, g, g, eps_up)


def n3_cross(v: np.ndarray) -> np.ndarray:
    """n3 x v for a stacked 3-vector field: (-v2, v1, 0) pointwise."""
    out = np.empty_like(v)
    out[0] = -v[1]
    out[1] = v[0]
    out[2] = 0.0
    return out


def target_dot(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Pointwise inner product over the leading 3-component axis."""
    return np.einsum("a...,a...->...", u, v)


@dataclass(frozen=True, eq=False)
class State:
    """Full Cauchy slice of the first-order system.

    Attributes
    ----------
    grid : Grid
    phi, dphi : (3, N, N) arrays, matter field and its time derivative
    a, da : (3, N, N) arrays, gauge potential (A_0, A_1, A_2) and d_t A
    t : float, current time
    kappa : float, Chern-Simons coupling (> 0)
    m_bound : float, constant m with 0 < 1/(2 kappa^2) <= m
    """

    grid: Grid
    phi: np.ndarray
    dphi: np.ndarray
    a: np.ndarray
    da: np.ndarray
    t: float = 0.0
    kappa: float = 1.0
    m_bound: float | None = None

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.m_bound is None:
            object.__setattr__(self, "m_bound", 1.0 / (2.0 * self.kappa**2))
        if not 0 < 1.0 / (2.0 * self.kappa**2) <= self.m_bound:
            raise ValueError(
                f"need 0 < 1/(2 kappa^2) <= m_bound, got kappa={self.kappa}, m_bound={self.m_bound}")
        n = self.grid.n_points
        for name in ("phi", "dphi", "a", "da"):
            arr = getattr(self, name)
            if arr.shape != (3, n, n):
                raise ValueError(f"{name} must have shape (3, {n}, {n}), got {arr.shape}")

    def sphere_deviation(self) -> float:
        """max over the grid of | |phi|^2 - 1 |."""
        return float(np.max(np.abs(target_dot(self.phi, self.phi) - 1.0)))

    def tangency_deviation(self) -> float:
        """max over the grid of | <phi, d_t phi> |."""
        return float(np.max(np.abs(target_dot(self.phi, self.dphi))))

    def with_fields(self, phi, dphi, a, da, t) -> "State":
        return State(self.grid, phi, dphi, a, da, t, self.kappa, self.m_bound)


def vacuum_state(grid: Grid, kappa: float = 1.0, m_bound: float | None = None) -> State:
    """phi == n3, A == 0, all velocities zero."""
    n = grid.n_points
    phi = np.zeros((3, n, n))
    phi[2] = 1.0
    zeros = np.zeros((3, n, n))
    return State(grid, phi, zeros.copy(), zeros.copy(), zeros.copy(),
                 t=0.0, kappa=kappa, m_bound=m_bound)


def spacetime_derivative(state: State, field: str, mu: int) -> np.ndarray:
    """d_mu of the matter field or gauge potential of a state.

    Time derivatives come from the stored conjugate slices (dphi, da);
    spatial ones are spectral.
    """
    arr, darr = (state.phi, state.dphi) if field == "phi" else (state.a, state.da)
    if mu == 0:
        return darr
    return state.grid.spatial_derivative(arr, mu)


def covariant_derivative(state: State, mu: int) -> np.ndarray:
    """D_mu phi = d_mu phi + A_mu (n3 x phi)."""
    dmu_phi = spacetime_derivative(state, "phi", mu)
    return dmu_phi + state.a[mu] * n3_cross(state.phi)


def curvature(state: State, mu: int, nu: int) -> np.ndarray:
    """F_{mu nu} = d_mu A_nu - d_nu A_mu (antisymmetric, zero diagonal)."""
    if mu == nu:
        return np.zeros((state.grid.n_points, state.grid.n_points))
    d_mu_a_nu = state.da[nu] if mu == 0 else state.grid.spatial_derivative(state.a[nu], mu)
    d_nu_a_mu = state.da[mu] if nu == 0 else state.grid.spatial_derivative(state.a[mu], nu)
    return d_mu_a_nu - d_nu_a_mu
