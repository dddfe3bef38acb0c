"""Construction of compatible Cauchy data.

Raw user profiles (psi0, psi1) are turned into admissible initial data in
three stages: pointwise normalization onto the sphere, tangential projection
of the velocity, and the gauge solve.  The gauge solve fixes

  * the constant part of a_0 so the required curl has zero torus mean
    (on the plane the compatibility condition is solvable by decay; on the
    torus the mean of a curl must vanish),
  * (a_1, a_2) as the divergence-free field with that curl, via a stream
    function, plus an optional user-supplied curl-free seed,
  * d_t a_0 from the Lorenz condition at t = 0,
  * d_t a_1, d_t a_2 from the two curvature equations coupling F_{0i} to the
    covariant matter gradient.

The remaining gauge freedom (curl-free part of the spatial potential,
fluctuation of a_0) is exposed through the seed fields on FreeData.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import State, n3_cross, target_dot
from .spectral import Grid, random_band_limited

EPS_MIN = 1e-6  # pointwise lower bound on |psi0| for safe normalization


class DegenerateProfile(ValueError):
    """|psi0| fell below the normalization floor somewhere."""


class GaugeDegenerate(ValueError):
    """mean |n3 x phi0|^2 too small to fix the constant part of a_0."""


class UnknownPreset(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FreeData:
    """Raw matter profiles plus optional gauge seeds.

    psi0, psi1 : (3, N, N) raw matter profile and velocity
    acf_seed   : optional (N, N) potential whose gradient is added to
                 (a_1, a_2) (curl-free gauge degree of freedom)
    a0_seed    : optional (N, N) fluctuation of a_0 (its mean impact on the
                 compatibility condition is absorbed by the constant part)
    rng_seed   : seed that generated any random content (determinism record)
    """

    psi0: np.ndarray
    psi1: np.ndarray
    acf_seed: np.ndarray | None = None
    a0_seed: np.ndarray | None = None
    rng_seed: int = 0


def make_matter(free: FreeData) -> tuple[np.ndarray, np.ndarray]:
    """Normalize psi0 onto the sphere and project psi1 onto its tangent.

    Returns (phi0, phi1) with |phi0| = 1 and <phi0, phi1> = 0 pointwise to
    roundoff.  Raises DegenerateProfile if |psi0| < EPS_MIN anywhere.
    """
    norm = np.sqrt(target_dot(free.psi0, free.psi0))
    if np.min(norm) < EPS_MIN:
        raise DegenerateProfile(
            f"|psi0| dropped to {np.min(norm):.3e} < {EPS_MIN:g}; cannot normalize")
    phi0 = free.psi0 / norm
    phi1 = free.psi1 - target_dot(free.psi1, phi0) * phi0
    return phi0, phi1


def make_gauge(grid: Grid, phi0: np.ndarray, phi1: np.ndarray, free: FreeData,
               kappa: float) -> tuple[np.ndarray, np.ndarray]:
    """Solve the compatibility system for (a, a') at t = 0.

    Output satisfies the curvature compatibility, the two F_{0i} curvature
    equations and the Lorenz condition, all to spectral accuracy.
    """
    n = grid.n_points
    cross0 = n3_cross(phi0)
    nsq = target_dot(cross0, cross0)
    g_inner = target_dot(cross0, phi1)
    fluct = free.a0_seed if free.a0_seed is not None else 0.0

    denom = float(np.mean(nsq))
    mean_forced = float(np.mean(g_inner + fluct * nsq))
    if denom < 1e-10:
        if abs(mean_forced) > 1e-12:
            raise GaugeDegenerate(
                "phi0 is (anti)parallel to n3 almost everywhere and the forced "
                f"curl has nonzero mean {mean_forced:.3e}; a_0 cannot be fixed")
        const = 0.0
    else:
        const = -mean_forced / denom
    if isinstance(fluct, np.ndarray):
        a0 = const + fluct
    else:
        a0 = np.full((n, n), const)

    w = -(g_inner + a0 * nsq) / kappa
    stream = grid.inverse_laplacian(w)
    a1 = -grid.spatial_derivative(stream, 2)
    a2 = grid.spatial_derivative(stream, 1)
    if free.acf_seed is not None:
        a1 = a1 + grid.spatial_derivative(free.acf_seed, 1)
        a2 = a2 + grid.spatial_derivative(free.acf_seed, 2)

    da0 = grid.spatial_derivative(a1, 1) + grid.spatial_derivative(a2, 2)
    # gauge velocities from the two F_{0i} curvature equations in their
    # integrable sign assignment (kappa F_01 = +s_2, kappa F_02 = -s_1)
    d2phi0 = grid.spatial_derivative(phi0, 2) + a2 * cross0
    da1 = grid.spatial_derivative(a0, 1) + target_dot(cross0, d2phi0) / kappa
    d1phi0 = grid.spatial_derivative(phi0, 1) + a1 * cross0
    da2 = grid.spatial_derivative(a0, 2) - target_dot(cross0, d1phi0) / kappa

    return np.stack([a0, a1, a2]), np.stack([da0, da1, da2])


def make_state(grid: Grid, free: FreeData, kappa: float = 1.0,
               m_bound: float | None = None) -> State:
    """FreeData -> compatible State at t = 0."""
    phi0, phi1 = make_matter(free)
    a, da = make_gauge(grid, phi0, phi1, free, kappa)
    return State(grid, phi0, phi1, a, da, t=0.0, kappa=kappa, m_bound=m_bound)


# ---------------------------------------------------------------------------
# presets

def _periodized_gaussian(grid: Grid, center: tuple[float, float], sigma: float) -> np.ndarray:
    """exp(-|x - c|^2 / sigma^2) summed over periodic images.

    The 7x7 image sum makes the profile periodic to machine precision for
    sigma <= 0.3 L, removing the seam the bare Gaussian would have.
    """
    L = grid.side_length
    out = np.zeros((grid.n_points, grid.n_points))
    for m1 in range(-3, 4):
        for m2 in range(-3, 4):
            r2 = (grid.x1 - center[0] + m1 * L) ** 2 + (grid.x2 - center[1] + m2 * L) ** 2
            out += np.exp(-r2 / sigma**2)
    return out


def _tilt_fields(grid: Grid, theta: np.ndarray, envelope: np.ndarray,
                 vel: float) -> tuple[np.ndarray, np.ndarray]:
    """Rotate n3 in the (1,3) target plane by the angle field theta.

    The velocity is azimuthal, vel * envelope * (n3 x psi0): it is tangent
    to the sphere, vanishes where the tilt does, and rotates the field about
    the gauged axis, so it actually excites the gauge sector.  (A velocity
    inside the tilt plane would leave the whole flow in the ungauged planar
    subspace, with A identically zero.)
    """
    psi0 = np.stack([np.sin(theta), np.zeros_like(theta), np.cos(theta)])
    psi1 = vel * envelope * n3_cross(psi0)
    return psi0, psi1


def preset(name: str, grid: Grid, *, delta: float = 0.1, sigma: float | None = None,
           center: tuple[float, float] | None = None, separation: float | None = None,
           mode: int = 1, vel: float = 0.0, a0_amp: float = 0.0, acf_amp: float = 0.0,
           rng_seed: int = 0) -> FreeData:
    """Named deterministic data families.

    vacuum        constant n3 data.
    bump          n3 tilted by a Gaussian-windowed rotation of angle
                  delta * exp(-|x - c|^2 / sigma^2) (periodized).
    two_bump      two such tilts of opposite sign separated along x1.
    plane_perturb tilt angle delta * cos(2 pi mode x1 / L).

    ``vel`` adds a tangential velocity with the same envelope; a0_amp and
    acf_amp switch on random band-limited gauge seeds drawn from rng_seed.
    """
    L = grid.side_length
    if sigma is None:
        sigma = 0.15 * L
    if center is None:
        center = (L / 2.0, L / 2.0)
    n = grid.n_points

    if name == "vacuum":
        theta = np.zeros((n, n))
        envelope = np.zeros((n, n))
    elif name == "bump":
        _check_bump_params(delta, sigma, L)
        envelope = _periodized_gaussian(grid, center, sigma)
        theta = delta * envelope
    elif name == "two_bump":
        _check_bump_params(delta, sigma, L)
        sep = separation if separation is not None else 0.3 * L
        c_left = (center[0] - sep / 2.0, center[1])
        c_right = (center[0] + sep / 2.0, center[1])
        envelope = (_periodized_gaussian(grid, c_left, sigma)
                    - _periodized_gaussian(grid, c_right, sigma))
        theta = delta * envelope
    elif name == "plane_perturb":
        if not 0.0 <= delta <= 0.5:
            raise ValueError(f"amplitude delta must be in [0, 0.5], got {delta}")
        envelope = np.cos(2.0 * np.pi * mode * (grid.x1 - center[0]) / L)
        theta = delta * envelope
    else:
        raise UnknownPreset(f"unknown preset {name!r}")

    psi0, psi1 = _tilt_fields(grid, theta, envelope, vel)
    rng = np.random.default_rng(rng_seed)
    a0_seed = random_band_limited(grid, rng, 3, a0_amp, mean_free=True) if a0_amp > 0 else None
    acf_seed = random_band_limited(grid, rng, 3, acf_amp, mean_free=True) if acf_amp > 0 else None
    return FreeData(psi0=psi0, psi1=psi1, acf_seed=acf_seed, a0_seed=a0_seed,
                    rng_seed=rng_seed)


def _check_bump_params(delta: float, sigma: float, L: float):
    if not 0.0 <= delta <= 0.5:
        raise ValueError(f"amplitude delta must be in [0, 0.5], got {delta}")
    if not 0.05 * L < sigma < 0.3 * L:
        raise ValueError(f"width sigma must lie in (0.05 L, 0.3 L) = "
                         f"({0.05 * L:g}, {0.3 * L:g}), got {sigma}")


def preset_state(name: str, grid: Grid, kappa: float = 1.0,
                 m_bound: float | None = None, **params) -> State:
    """Convenience: preset -> FreeData -> compatible State."""
    return make_state(grid, preset(name, grid, **params), kappa=kappa, m_bound=m_bound)
