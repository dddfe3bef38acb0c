"""Nonlinearities, time integrators, trajectories and the fixed-point iteration.

The evolved system is the first-order form of the wave equations

    d_t^2 phi = Lap phi + G(phi, d_t phi, A)
    d_t^2 A   = Lap A   + H(phi, d_t phi, A)

where G collects the matter nonlinearity (null form, gauge advection,
quadratic gauge potential and the symmetry-breaking potential) and H the
Chern-Simons current.  Both are assembled pointwise from spectral
derivatives and truncated with the 2/3 rule after assembly.

Two one-step methods are provided: classical RK4 on the first-order system,
and a trigonometric integrator that propagates the linear part exactly
mode-wise (cos(t D), D^-1 sin(t D)) and treats the nonlinear source with a
two-stage midpoint quadrature (second order).  The trigonometric propagator
also drives the fixed-point iteration, which solves a sequence of linear
wave equations with the source frozen from the previous iterate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _sfft

from .fields import State, n3_cross, target_dot
from .nullforms import advection_nullform
from .spectral import Grid

OVERFLOW_GUARD = 1e12
DEFAULT_CFL_FACTOR = 0.5


class StepUnstable(RuntimeError):
    """A field exceeded the overflow guard: blow-up or CFL violation."""

    def __init__(self, t: float):
        super().__init__(f"field exceeded overflow guard {OVERFLOW_GUARD:g} at t={t:g}")
        self.t = t


class NotContracting(RuntimeError):
    """Successive-difference ratios exceeded 1 for three iterations."""

    def __init__(self, report: "PicardReport"):
        super().__init__(
            "iteration is not contracting (ratios > 1 for 3 consecutive iterations); "
            "reduce T or smooth the data")
        self.report = report


@dataclass
class Trajectory:
    """States recorded every ``record_stride`` steps of a uniform-dt run."""

    states: list
    dt: float
    record_stride: int
    scheme: str
    linear: bool = False

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def initial(self) -> State:
        return self.states[0]

    @property
    def final(self) -> State:
        return self.states[-1]


@dataclass
class PicardReport:
    """Successive-difference table of the fixed-point iteration.

    ``diff_phi[m-1]`` is the sup-in-time H^s norm of phi^(m+1) - phi^(m),
    ``diff_a`` the H^(s-1/2) analogue for the gauge potential, and
    ``ratios`` the contraction factors of the combined differences.
    """

    s: float
    tol: float
    diff_phi: list = field(default_factory=list)
    diff_a: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    @property
    def combined(self) -> list:
        return [p + a for p, a in zip(self.diff_phi, self.diff_a)]


# ---------------------------------------------------------------------------
# nonlinear sources

def _sources_raw(grid: Grid, kappa: float, phi, dphi, a, advection: str = "direct"):
    """Assemble (G, H) from raw (3, N, N) slices; both dealiased."""
    pa_hat = _fft(np.concatenate([phi, a[0:1]]))
    d1 = _ifft(1j * grid.k1_half * pa_hat)
    d2 = _ifft(1j * grid.k2_half * pa_hat)
    return _sources_core(grid, kappa, phi, dphi, a,
                         d1[0:3], d2[0:3], d1[3], d2[3], advection)


def _sources_with_hats(grid: Grid, kappa: float, phi, dphi, a, pa0_hat):
    """(G, H) given the stacked half spectra of (phi, A_0)."""
    d1 = _ifft(1j * grid.k1_half * pa0_hat)
    d2 = _ifft(1j * grid.k2_half * pa0_hat)
    return _sources_core(grid, kappa, phi, dphi, a, d1[0:3], d2[0:3], d1[3], d2[3])


def _sources_core(grid: Grid, kappa: float, phi, dphi, a,
                  d1phi, d2phi, d1_a0, d2_a0, advection: str = "direct"):
    """(G, H) given the spatial derivatives of phi and A_0."""
    dmu_phi = (dphi, d1phi, d2phi)

    cross_phi = n3_cross(phi)
    adv = a[0] * dphi - a[1] * d1phi - a[2] * d2phi
    q0_phi = target_dot(dphi, dphi) - target_dot(d1phi, d1phi) - target_dot(d2phi, d2phi)
    amm = a[0] ** 2 - a[1] ** 2 - a[2] ** 2
    nsq = phi[0] ** 2 + phi[1] ** 2

    phi3 = phi[2]
    phisq = target_dot(phi, phi)
    pot_vec = phi * phi3
    pot_vec[2] -= phisq
    pot_scal = (1.0 - phi3) ** 2 * (1.0 + 2.0 * phi3) / kappa**2

    if advection == "nullform":
        # verification path: route the rotated-field advection through the
        # null decomposition, A^mu (n3 x d_mu phi) = A^mu d_mu (n3 x phi)
        rotated = _RotatedView(grid, kappa, cross_phi, n3_cross(dphi), a, None)
        adv_rotated = advection_nullform(rotated)
    else:
        adv_rotated = n3_cross(adv)

    g_field = (-phi * (q0_phi + 2.0 * target_dot(adv, cross_phi) + amm * nsq)
               - 2.0 * adv_rotated
               - amm * n3_cross(cross_phi)
               - pot_vec * pot_scal)

    # Gauge source, written so the curvature system propagates identically.
    # With the current s_mu = <n3 x phi, D_mu phi>, the integrable sign
    # assignment of the curvature equations (the one fixed by the Lagrangian
    # and by current conservation d_t s_0 = d_1 s_1 + d_2 s_2) is
    #   kappa F_01 = +s_2,  kappa F_12 = -s_0,  kappa F_02 = -s_1,
    # and the Lorenz-gauge divergence of the Maxwell field then gives
    #   kappa Box A_0 = d1 s_2 - d2 s_1
    #   kappa Box A_1 = dt s_2 - d2 s_0
    #   kappa Box A_2 = d1 s_0 - dt s_1
    # where dt of the gauge potential inside dt s_i is eliminated with the
    # same curvature equations (dt A_1 = d1 A_0 + s_2/kappa, dt A_2 =
    # d2 A_0 - s_1/kappa).  Under this source the constraint residuals obey
    # a homogeneous linear system, so compatible data keeps them at the
    # discretization level.
    w = nsq
    sigma = [phi[0] * d[1] - phi[1] * d[0] for d in dmu_phi]
    s_mu = [sigma[mu] + a[mu] * w for mu in range(3)]
    dt_w = 2.0 * (phi[0] * dphi[0] + phi[1] * dphi[1])
    dphi_hat = _fft(dphi[0:2])
    d1_dphi = _ifft(1j * grid.k1_half * dphi_hat)
    d2_dphi = _ifft(1j * grid.k2_half * dphi_hat)
    dt_sigma1 = (dphi[0] * d1phi[1] + phi[0] * d1_dphi[1]
                 - dphi[1] * d1phi[0] - phi[1] * d1_dphi[0])
    dt_sigma2 = (dphi[0] * d2phi[1] + phi[0] * d2_dphi[1]
                 - dphi[1] * d2phi[0] - phi[1] * d2_dphi[0])
    dt_s1 = dt_sigma1 + (d1_a0 + s_mu[2] / kappa) * w + a[1] * dt_w
    dt_s2 = dt_sigma2 + (d2_a0 - s_mu[1] / kappa) * w + a[2] * dt_w
    s_hat = _fft(np.stack(s_mu))
    ds1 = _ifft(1j * grid.k1_half * s_hat[[0, 2]])  # d1 s0, d1 s2
    ds2 = _ifft(1j * grid.k2_half * s_hat[[0, 1]])  # d2 s0, d2 s1
    h_field = np.stack([
        ds1[1] - ds2[1],
        dt_s2 - ds2[0],
        ds1[0] - dt_s1,
    ]) / kappa

    both = _ifft(grid.dealias_mask_half * _fft(np.concatenate([g_field, h_field])))
    return both[0:3], both[3:6]


class _RotatedView:
    """Duck-typed stand-in for State carrying a rotated matter field."""

    def __init__(self, grid, kappa, phi, dphi, a, da):
        self.grid = grid
        self.kappa = kappa
        self.phi = phi
        self.dphi = dphi
        self.a = a
        n = grid.n_points
        self.da = da if da is not None else np.zeros((3, n, n))


def compute_G(state: State, advection: str = "direct") -> np.ndarray:
    """Matter nonlinearity G; ``advection`` selects the verification path."""
    g, _ = _sources_raw(state.grid, state.kappa, state.phi, state.dphi, state.a, advection)
    return g


def compute_H(state: State) -> np.ndarray:
    """Gauge nonlinearity H = (H_0, H_1, H_2)."""
    _, h = _sources_raw(state.grid, state.kappa, state.phi, state.dphi, state.a)
    return h


def rhs_first_order(state: State, linear: bool = False):
    """(d_t phi, d_t dphi, d_t A, d_t dA) of the first-order system."""
    grid = state.grid
    lap_phi = grid.laplacian(state.phi)
    lap_a = grid.laplacian(state.a)
    if linear:
        return state.dphi.copy(), lap_phi, state.da.copy(), lap_a
    g_field, h_field = _sources_raw(grid, state.kappa, state.phi, state.dphi, state.a)
    return state.dphi.copy(), lap_phi + g_field, state.da.copy(), lap_a + h_field


# ---------------------------------------------------------------------------
# packed-array internals (phi, dphi, a, da stacked as (12, N, N))

def _pack(state: State) -> np.ndarray:
    return np.concatenate([state.phi, state.dphi, state.a, state.da])


def _unpack(grid: Grid, y: np.ndarray, t: float, kappa: float, m_bound: float) -> State:
    return State(grid, y[0:3], y[3:6], y[6:9], y[9:12], t=t, kappa=kappa, m_bound=m_bound)


def _rhs_packed(grid: Grid, kappa: float, y: np.ndarray, linear: bool) -> np.ndarray:
    out = np.empty_like(y)
    out[0:3] = y[3:6]
    out[6:9] = y[9:12]
    pa_hat = _fft(np.concatenate([y[0:3], y[6:9]]))
    lap = _ifft(-(grid.k_abs_half**2) * pa_hat)
    out[3:6] = lap[0:3]
    out[9:12] = lap[3:6]
    if not linear:
        d1 = _ifft(1j * grid.k1_half * pa_hat[0:4])  # d1 of (phi, a0)
        d2 = _ifft(1j * grid.k2_half * pa_hat[0:4])
        g_field, h_field = _sources_core(grid, kappa, y[0:3], y[3:6], y[6:9],
                                         d1[0:3], d2[0:3], d1[3], d2[3])
        out[3:6] += g_field
        out[9:12] += h_field
    return out


def _check_guard(y: np.ndarray, t: float):
    m = np.max(np.abs(y))
    if not np.isfinite(m) or m > OVERFLOW_GUARD:
        raise StepUnstable(t)


def _check_cfl(grid: Grid, dt: float, cfl_factor: float):
    if dt > cfl_factor * grid.dx:
        raise ValueError(
            f"dt={dt:g} violates the CFL guard dt <= {cfl_factor:g} * dx = "
            f"{cfl_factor * grid.dx:g}")


# ---------------------------------------------------------------------------
# one-step methods

def step_rk4(state: State, dt: float, linear: bool = False,
             cfl_factor: float = DEFAULT_CFL_FACTOR) -> State:
    """Classical 4th-order step on the first-order system."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    _check_cfl(state.grid, dt, cfl_factor)
    grid, kappa = state.grid, state.kappa
    y = _pack(state)
    k1 = _rhs_packed(grid, kappa, y, linear)
    k2 = _rhs_packed(grid, kappa, y + (dt / 2.0) * k1, linear)
    k3 = _rhs_packed(grid, kappa, y + (dt / 2.0) * k2, linear)
    k4 = _rhs_packed(grid, kappa, y + dt * k3, linear)
    y_new = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    t_new = state.t + dt
    _check_guard(y_new, t_new)
    return _unpack(grid, y_new, t_new, kappa, state.m_bound)


def _propagator_coeffs(grid: Grid, dt: float):
    """Mode-wise exact wave propagator pieces for step size dt.

    Returns (C, S, Q) with C = cos(w dt), S = sin(w dt)/w and
    Q = (1 - cos(w dt))/w^2, all with their w -> 0 limits (1, dt, dt^2/2);
    shaped for the half spectrum.
    """
    w = grid.k_abs_half
    c = np.cos(w * dt)
    s = dt * np.sinc(w * dt / np.pi)
    q = (dt * dt / 2.0) * np.sinc(w * dt / (2.0 * np.pi)) ** 2
    return c, s, q


def _propagate_pair(uh, vh, sh, w2, c, s, q):
    """One exact-propagator step of (u, v) with constant source spectrum sh."""
    u_new = c * uh + s * vh + q * sh
    v_new = -w2 * s * uh + c * vh + s * sh
    return u_new, v_new


def _fft(arr):
    return _sfft.rfft2(arr, axes=(-2, -1))


def _ifft(arr):
    n = 2 * (arr.shape[-1] - 1)
    return _sfft.irfft2(arr, s=(n, n), axes=(-2, -1))


def step_trig(state: State, dt: float, linear: bool = False) -> State:
    """Trigonometric step: exact linear propagation + midpoint source quadrature.

    Exact (to roundoff) when the nonlinearity is disabled; accepts negative
    dt, which inverts the linear flow.
    """
    if dt == 0:
        raise ValueError("dt must be nonzero")
    grid, kappa = state.grid, state.kappa
    w2 = grid.k_abs_half**2
    y = _pack(state)
    yh = _fft(y)
    if linear:
        c, s, q = _propagator_coeffs(grid, dt)
        ph, dph = _propagate_pair(yh[0:3], yh[3:6], 0.0, w2, c, s, 0.0)
        ah, dah = _propagate_pair(yh[6:9], yh[9:12], 0.0, w2, c, s, 0.0)
    else:
        g1, h1 = _sources_with_hats(grid, kappa, y[0:3], y[3:6], y[6:9],
                                    np.concatenate([yh[0:3], yh[6:7]]))
        s1h = _fft(np.concatenate([g1, h1]))
        ch, sh_, qh = _propagator_coeffs(grid, dt / 2.0)
        pmh, dpmh = _propagate_pair(yh[0:3], yh[3:6], s1h[0:3], w2, ch, sh_, qh)
        amh, damh = _propagate_pair(yh[6:9], yh[9:12], s1h[3:6], w2, ch, sh_, qh)
        mid = _ifft(np.concatenate([pmh, dpmh, amh]))
        g2, h2 = _sources_with_hats(grid, kappa, mid[0:3], mid[3:6], mid[6:9],
                                    np.concatenate([pmh, amh[0:1]]))
        s2h = _fft(np.concatenate([g2, h2]))
        c, s, q = _propagator_coeffs(grid, dt)
        ph, dph = _propagate_pair(yh[0:3], yh[3:6], s2h[0:3], w2, c, s, q)
        ah, dah = _propagate_pair(yh[6:9], yh[9:12], s2h[3:6], w2, c, s, q)
    y_new = _ifft(np.concatenate([ph, dph, ah, dah]))
    t_new = state.t + dt
    _check_guard(y_new, t_new)
    return _unpack(grid, y_new, t_new, kappa, state.m_bound)


_STEPPERS = {"rk4": step_rk4, "trig": step_trig}


def _n_steps(T: float, dt: float) -> int:
    """ceil(T/dt) with a guard against spurious extra steps from roundoff."""
    ratio = T / dt
    nearest = round(ratio)
    if abs(ratio - nearest) < 1e-9 * max(1.0, abs(nearest)):
        return max(1, int(nearest))
    return max(1, int(np.ceil(ratio)))


def evolve(state: State, T: float, dt: float, scheme: str = "rk4", *,
           linear: bool = False, record_stride: int = 1,
           callback=None, callback_stride: int = 1,
           cfl_factor: float = DEFAULT_CFL_FACTOR) -> Trajectory:
    """March ceil(T/dt) steps and record states every ``record_stride``.

    ``callback(step, state)`` is invoked on the callback stride (including
    step 0 and the final step).  Raises StepUnstable with the failing time
    if the overflow guard trips.
    """
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if scheme not in _STEPPERS:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {sorted(_STEPPERS)}")
    if scheme == "rk4":
        _check_cfl(state.grid, dt, cfl_factor)
    n = _n_steps(T, dt)
    states = [state]
    if callback is not None:
        callback(0, state)
    current = state
    for i in range(1, n + 1):
        if scheme == "rk4":
            current = step_rk4(current, dt, linear, cfl_factor)
        else:
            current = step_trig(current, dt, linear)
        if i % record_stride == 0 or i == n:
            states.append(current)
        if callback is not None and (i % callback_stride == 0 or i == n):
            callback(i, current)
    return Trajectory(states=states, dt=dt, record_stride=record_stride,
                      scheme=scheme, linear=linear)


# ---------------------------------------------------------------------------
# fixed-point iteration on the linear wave solver

_HALF_WEIGHTS_INTERIOR = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0
_HALF_WEIGHTS_EDGE = np.array([5.0, 15.0, -5.0, 1.0]) / 16.0  # cubic at x=0.5 from samples 0..3


def _midpoint_interp(samples: np.ndarray, j: int) -> np.ndarray:
    """Cubic interpolation of a uniform sample stack at index j + 1/2."""
    n = samples.shape[0]
    if n < 4:
        lo, hi = samples[j], samples[min(j + 1, n - 1)]
        return 0.5 * (lo + hi)
    if j == 0:
        w, idx = _HALF_WEIGHTS_EDGE, (0, 1, 2, 3)
    elif j >= n - 2:
        w, idx = _HALF_WEIGHTS_EDGE[::-1], (n - 4, n - 3, n - 2, n - 1)
    else:
        w, idx = _HALF_WEIGHTS_INTERIOR, (j - 1, j, j + 1, j + 2)
    out = w[0] * samples[idx[0]]
    for c, i in zip(w[1:], idx[1:]):
        out = out + c * samples[i]
    return out


def _solve_linear_wave(grid: Grid, y0h: np.ndarray, n: int, dt: float,
                       source_samples: np.ndarray | None) -> np.ndarray:
    """Spectra of the solution of the linear wave system at every step.

    ``source_samples`` holds (G, H) stacks of shape (n+1, 6, N, N) sampled at
    the step times of the previous iterate; the per-step constant source is
    its cubic midpoint interpolation.  Returns spectra (n+1, 12, N, N).
    """
    w2 = grid.k_abs_half**2
    c, s, q = _propagator_coeffs(grid, dt)
    out = np.empty((n + 1,) + y0h.shape, dtype=complex)
    out[0] = y0h
    cur = y0h
    for j in range(n):
        if source_samples is None:
            ph, dph = _propagate_pair(cur[0:3], cur[3:6], 0.0, w2, c, s, 0.0)
            ah, dah = _propagate_pair(cur[6:9], cur[9:12], 0.0, w2, c, s, 0.0)
        else:
            smid = _midpoint_interp(source_samples, j)
            sh = _fft(smid)
            ph, dph = _propagate_pair(cur[0:3], cur[3:6], sh[0:3], w2, c, s, q)
            ah, dah = _propagate_pair(cur[6:9], cur[9:12], sh[3:6], w2, c, s, q)
        cur = np.concatenate([ph, dph, ah, dah])
        out[j + 1] = cur
    return out


def _sources_on_stack(grid: Grid, kappa: float, spectra: np.ndarray) -> np.ndarray:
    """(G, H) at every sample of a spectral solution stack."""
    n_samp = spectra.shape[0]
    n = grid.n_points
    out = np.empty((n_samp, 6, n, n))
    for j in range(n_samp):
        y = _ifft(spectra[j])
        g_field, h_field = _sources_raw(grid, kappa, y[0:3], y[3:6], y[6:9])
        out[j, 0:3] = g_field
        out[j, 3:6] = h_field
    return out


def _sup_norm_diff(grid: Grid, new: np.ndarray, old: np.ndarray, sl: slice, s: float) -> float:
    """sup over samples of the H^s norm of a half-spectral difference block."""
    scale = (grid.dx / grid.n_points) ** 2
    w2 = (1.0 + grid.k_abs_half) ** (2.0 * s) * grid.rfft_multiplicity
    diff = new[:, sl] - old[:, sl]
    vals = np.sqrt(np.sum(w2 * np.abs(diff) ** 2, axis=(1, 2, 3)) * scale)
    return float(np.max(vals))


def picard_iterate(init: State, T: float, dt: float, m_max: int = 25,
                   tol: float = 1e-8, s: float = 1.1,
                   record_stride: int = 1) -> tuple[PicardReport, Trajectory]:
    """Iterated linear wave solves with sources frozen from the last iterate.

    Each iterate solves box u = source^(m) as a linear equation with the
    original initial data; differences between consecutive iterates are
    measured sup-in-time in H^s (matter) and H^(s-1/2) (gauge).  Stops when
    the combined difference falls below ``tol`` or after ``m_max`` iterates;
    raises NotContracting when the ratios exceed 1 three times in a row.
    """
    if T <= 0 or dt <= 0:
        raise ValueError("T and dt must be positive")
    grid, kappa = init.grid, init.kappa
    n = _n_steps(T, dt)
    y0h = _fft(_pack(init))
    report = PicardReport(s=s, tol=tol)

    prev = _solve_linear_wave(grid, y0h, n, dt, None)
    prev_src = _sources_on_stack(grid, kappa, prev)
    final = prev
    for m in range(1, m_max + 1):
        new = _solve_linear_wave(grid, y0h, n, dt, prev_src)
        d_phi = _sup_norm_diff(grid, new, prev, slice(0, 3), s)
        d_a = _sup_norm_diff(grid, new, prev, slice(6, 9), s - 0.5)
        report.diff_phi.append(d_phi)
        report.diff_a.append(d_a)
        report.iterations = m
        combined = report.combined
        if m >= 2:
            prev_d = combined[-2]
            report.ratios.append(combined[-1] / prev_d if prev_d > 0 else 0.0)
        final = new
        if combined[-1] <= tol:
            report.converged = True
            break
        if len(report.ratios) >= 3 and all(r > 1.0 for r in report.ratios[-3:]):
            raise NotContracting(report)
        prev = new
        prev_src = _sources_on_stack(grid, kappa, new)

    states = []
    for j in range(0, n + 1, record_stride):
        y = _ifft(final[j])
        states.append(_unpack(grid, y, init.t + j * dt, kappa, init.m_bound))
    if (n % record_stride) != 0:
        y = _ifft(final[n])
        states.append(_unpack(grid, y, init.t + n * dt, kappa, init.m_bound))
    traj = Trajectory(states=states, dt=dt, record_stride=record_stride,
                      scheme="trig", linear=False)
    return report, traj
