"""Exponent-condition checkers for bilinear estimates and an empirical harness.

Two families of decision procedures:

  * :func:`product_conditions` checks the 14 inequalities under which an
    exponent matrix (s0, s1, s2; b0, b1, b2) defines a spacetime product
    estimate H^{s1,b1} . H^{s2,b2} -> H^{-s0,-b0} in 1+2 dimensions.
  * :func:`nullform_conditions` checks the dimensional identity, bounds and
    excluded endpoint pairs under which a weighted L2 null-form estimate
    || D^b0 D+^b+ D-^b- Q(u,v) || <~ || D^a1 f1 || || D^a2 f2 || holds for
    free waves with vanishing initial velocity (n >= 2 spatial dimensions).

Strict versus non-strict inequalities are transcribed exactly; each
condition is individually named in the verdict.  The empirical harness
synthesizes random free waves on a tapered spacetime window and reports the
observed left/right ratios; it asserts boundedness only, never a constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _sfft

from .diagnostics import WindowTooShort, taper_window
from .spectral import Grid, random_band_limited

EXCLUSION_TOL = 1e-12
DIMENSION_TOL = 1e-12


@dataclass(frozen=True)
class ExponentMatrix:
    s0: float
    s1: float
    s2: float
    b0: float
    b1: float
    b2: float


@dataclass(frozen=True)
class NullformExponents:
    kind: str            # "Q0", "Qij" or "Q0j"
    alpha1: float
    alpha2: float
    beta0: float
    beta_plus: float
    beta_minus: float
    n: int = 2

    def __post_init__(self):
        if self.kind not in ("Q0", "Qij", "Q0j"):
            raise ValueError(f"kind must be Q0, Qij or Q0j, got {self.kind!r}")
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")


@dataclass
class Condition:
    name: str
    detail: str
    satisfied: bool
    margin: float  # signed slack; > 0 strictly inside, < 0 violated


@dataclass
class Verdict:
    passed: bool
    conditions: list

    @property
    def violated(self) -> list:
        return [c.name for c in self.conditions if not c.satisfied]

    def condition(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)


def _cond(name, detail, lhs, rhs, strict):
    margin = lhs - rhs
    ok = margin > 0 if strict else margin >= 0
    return Condition(name, detail, bool(ok), float(margin))


def product_conditions(m: ExponentMatrix) -> Verdict:
    """All 14 inequalities of the product-estimate criterion, by name."""
    s0, s1, s2, b0, b1, b2 = m.s0, m.s1, m.s2, m.b0, m.b1, m.b2
    b_sum = b0 + b1 + b2
    s_sum = s0 + s1 + s2
    min_pair_b = min(b0 + b1, b0 + b2, b1 + b2)
    min_b = min(b0, b1, b2)
    conds = [
        _cond("b_sum", "b0+b1+b2 > 1/2", b_sum, 0.5, True),
        _cond("b01_pair", "b0+b1 >= 0", b0 + b1, 0.0, False),
        _cond("b12_pair", "b1+b2 >= 0", b1 + b2, 0.0, False),
        _cond("b02_pair", "b0+b2 >= 0", b0 + b2, 0.0, False),
        _cond("s_sum_vs_b_sum", "s0+s1+s2 > 3/2-(b0+b1+b2)", s_sum, 1.5 - b_sum, True),
        _cond("s_sum_vs_min_pair", "s0+s1+s2 > 1-min pairwise b", s_sum, 1.0 - min_pair_b, True),
        _cond("s_sum_vs_min_b", "s0+s1+s2 > 1/2-min b", s_sum, 0.5 - min_b, True),
        _cond("s_sum_quarter", "s0+s1+s2 > 3/4", s_sum, 0.75, True),
        _cond("weighted_0", "(s0+b0)+2s1+2s2 > 1", s0 + b0 + 2 * s1 + 2 * s2, 1.0, True),
        _cond("weighted_1", "2s0+(s1+b1)+2s2 > 1", 2 * s0 + s1 + b1 + 2 * s2, 1.0, True),
        _cond("weighted_2", "2s0+2s1+(s2+b2) > 1", 2 * s0 + 2 * s1 + s2 + b2, 1.0, True),
        _cond("s01_pair", "s0+s1 >= max(0,-b2)", s0 + s1, max(0.0, -b2), False),
        _cond("s12_pair", "s1+s2 >= max(0,-b0)", s1 + s2, max(0.0, -b0), False),
        _cond("s02_pair", "s0+s2 >= max(0,-b1)", s0 + s2, max(0.0, -b1), False),
    ]
    return Verdict(all(c.satisfied for c in conds), conds)


def _exclusion(name, detail, x, y, px, py):
    hit = abs(x - px) <= EXCLUSION_TOL and abs(y - py) <= EXCLUSION_TOL
    margin = max(abs(x - px), abs(y - py))
    return Condition(name, detail, not hit, float(margin))


def nullform_conditions(p: NullformExponents) -> Verdict:
    """Dimensional identity, bounds and endpoint exclusions per form kind.

    Q0 and Q0j share one condition set; Qij has the shifted bounds.  The
    dimension condition's margin carries the signed offset lhs - rhs.
    """
    n = p.n
    a1, a2 = p.alpha1, p.alpha2
    asum = a1 + a2
    bm = p.beta_minus
    lhs_dim = p.beta0 + p.beta_plus + p.beta_minus
    rhs_dim = asum - (n + 3) / 2.0
    offset = lhs_dim - rhs_dim
    dim = Condition("dimension", "beta0+beta_plus+beta_minus = alpha1+alpha2-(n+3)/2",
                    abs(offset) <= DIMENSION_TOL, float(offset))

    if p.kind in ("Q0", "Q0j"):
        bm_lo, b0_lo, asum_lo = -(n + 1) / 4.0, -(n - 1) / 2.0, 0.5
        excl_sum = (0.5, -(n + 1) / 4.0)
        excl_ai = ((n + 1) / 4.0, -(n + 1) / 4.0)
    else:
        bm_lo, b0_lo, asum_lo = -(n - 1) / 4.0, -(n + 1) / 2.0, 1.5
        excl_sum = (0.5, -(n - 1) / 4.0)
        excl_ai = ((n + 3) / 4.0, -(n - 1) / 4.0)

    cap = bm + (n + 1) / 2.0
    conds = [
        dim,
        _cond("beta_minus_low", f"beta_minus >= {bm_lo}", bm, bm_lo, False),
        _cond("beta0_low", f"beta0 > {b0_lo}", p.beta0, b0_lo, True),
        _cond("alpha_sum_low", f"alpha1+alpha2 >= {asum_lo}", asum, asum_lo, False),
        _cond("alpha1_cap", "alpha1 <= beta_minus+(n+1)/2", cap, a1, False),
        _cond("alpha2_cap", "alpha2 <= beta_minus+(n+1)/2", cap, a2, False),
        _exclusion("exclusion_sum", f"(alpha1+alpha2, beta_minus) != {excl_sum}",
                   asum, bm, *excl_sum),
        _exclusion("exclusion_alpha1", f"(alpha1, beta_minus) != {excl_ai}",
                   a1, bm, *excl_ai),
        _exclusion("exclusion_alpha2", f"(alpha2, beta_minus) != {excl_ai}",
                   a2, bm, *excl_ai),
    ]
    return Verdict(all(c.satisfied for c in conds), conds)


# ---------------------------------------------------------------------------
# the three exponent choices the a-priori bounds instantiate

def instantiation_exponents(name: str, s: float, eps: float = 0.0) -> NullformExponents:
    """Named exponent sets used to bound the three nonlinear terms.

    q0_cubic      Q0 set for the cubic matter term (beta_minus = b-1+eps,
                  beta0 = s-1, alpha1 = s, alpha2 = 1/2+b-eps, b = s/2);
                  its dimensional identity holds only at eps = 0 and the
                  checker reports the 2*eps offset otherwise.
    q0j_gauge     Q0j set for the gauge advection (beta0 = s-1,
                  alpha1 = 3/2, alpha2 = s).
    qij_gradient  Qij set for the matter null form in the current
                  (beta0 = s-3/2, alpha1 = 1, alpha2 = s).
    """
    b = s / 2.0
    if name == "q0_cubic":
        return NullformExponents("Q0", alpha1=s, alpha2=0.5 + b - eps,
                                 beta0=s - 1.0, beta_plus=0.0, beta_minus=b - 1.0 + eps)
    if name == "q0j_gauge":
        return NullformExponents("Q0j", alpha1=1.5, alpha2=s,
                                 beta0=s - 1.0, beta_plus=0.0, beta_minus=0.0)
    if name == "qij_gradient":
        return NullformExponents("Qij", alpha1=1.0, alpha2=s,
                                 beta0=s - 1.5, beta_plus=0.0, beta_minus=0.0)
    raise KeyError(f"unknown instantiation {name!r}")


INSTANTIATION_NAMES = ("q0_cubic", "q0j_gauge", "qij_gradient")


def standard_instantiations(s: float, eps: float = 0.0) -> dict:
    """Run the checker on all three instantiations at regularity s.

    Valid for s > 1, eps in [0, 1).  Returns name -> (exponents, verdict);
    the q0_cubic dimension offset is the signed margin on its "dimension"
    condition (equal to 2*eps up to roundoff).
    """
    if not s > 1:
        raise ValueError(f"the estimates are instantiated for s > 1, got s={s}")
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    out = {}
    for name in INSTANTIATION_NAMES:
        p = instantiation_exponents(name, s, eps)
        out[name] = (p, nullform_conditions(p))
    return out


# ---------------------------------------------------------------------------
# empirical ratio harness

@dataclass
class RatioReport:
    kind: str
    exponents: NullformExponents
    ratios: list = field(default_factory=list)
    degenerate_trials: int = 0
    taper_loss: float = 0.0  # mean tapered/untapered L2 of the null form

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0


def _homogeneous_weight(base: np.ndarray, beta: float) -> np.ndarray:
    """base**beta with 0^0 = 1 and 0^negative = 0 (zero-mode convention)."""
    if beta == 0:
        return np.ones_like(base)
    with np.errstate(divide="ignore"):
        w = base**beta
    if beta < 0:
        w[base == 0.0] = 0.0
    return w


def _free_wave_stack(grid: Grid, fh: np.ndarray, times: np.ndarray):
    """u(t) = cos(tD) f and its exact derivative stacks from spectrum fh.

    Returns (u, ut, u1, u2) stacks of shape (n_t, N, N).
    """
    w = grid.k_abs[None, :, :]
    ct = np.cos(w * times[:, None, None])
    st = np.sin(w * times[:, None, None])
    uh = ct * fh[None, :, :]
    uth = -w * st * fh[None, :, :]
    def back(x):
        return _sfft.ifftn(x, axes=(-2, -1)).real
    return (back(uh), back(uth),
            back(1j * grid.k1[None, :, :] * uh), back(1j * grid.k2[None, :, :] * uh))


def _assemble_form(kind: str, u_parts, v_parts) -> np.ndarray:
    u, ut, u1, u2 = u_parts
    v, vt, v1, v2 = v_parts
    if kind == "Q0":
        return ut * vt - u1 * v1 - u2 * v2
    if kind == "Qij":
        return u1 * v2 - u2 * v1
    if kind == "Q0j":
        return ut * v1 - u1 * vt
    raise ValueError(kind)


def empirical_ratio(kind: str, p: NullformExponents, trials: int, grid: Grid,
                    n_t: int = 64, t_len: float = 16.0, seed: int = 0,
                    m_max: int = 4, amplitude2: float = 1.0,
                    data: tuple | None = None) -> RatioReport:
    """Observed LHS/RHS ratios of the null-form estimate on random free waves.

    Both waves start from random band-limited data with vanishing velocity
    and are propagated exactly mode-wise.  The spacetime multipliers
    |xi|^b0 ||tau|+|xi||^b+ ||tau|-|xi||^b- act on the tapered window, whose
    leakage is reported as ``taper_loss``.  Per-trial seeds are ``seed + i``
    so enlarging ``trials`` extends the same sample.  ``amplitude2`` scales
    the second datum (zero makes every trial degenerate); ``data`` fixes
    (f1, f2) explicitly instead of drawing them.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n_t < 8:
        raise WindowTooShort(f"need >= 8 time samples, got {n_t}")
    dt = t_len / n_t
    times = np.arange(n_t) * dt
    tau = 2.0 * np.pi * np.fft.fftfreq(n_t, d=dt)
    kabs = grid.k_abs[None, :, :]
    tau3 = np.abs(tau)[:, None, None]
    weight = (_homogeneous_weight(kabs * np.ones_like(tau3), p.beta0)
              * _homogeneous_weight(np.abs(tau3 + kabs), p.beta_plus)
              * _homogeneous_weight(np.abs(tau3 - kabs), p.beta_minus))
    tap = taper_window(n_t)[:, None, None]
    scale = (grid.dx**2 * dt) / (n_t * grid.n_points**2)

    report = RatioReport(kind=kind, exponents=p)
    loss_acc = 0.0
    for i in range(trials):
        if data is not None:
            f1, f2 = data
        else:
            rng = np.random.default_rng(seed + i)
            f1 = random_band_limited(grid, rng, m_max, 1.0)
            f2 = random_band_limited(grid, rng, m_max, amplitude2)
        rhs = (grid.homogeneous_sobolev_norm(f1, p.alpha1)
               * grid.homogeneous_sobolev_norm(f2, p.alpha2))
        if rhs == 0.0:
            report.degenerate_trials += 1
            continue
        f1h = _sfft.fftn(f1)
        f2h = _sfft.fftn(f2)
        q = _assemble_form(kind, _free_wave_stack(grid, f1h, times),
                           _free_wave_stack(grid, f2h, times))
        phys = grid.dx**2 * dt
        raw_l2 = float(np.sqrt(np.sum(q * q) * phys))
        spec = _sfft.fftn(q * tap, axes=(0, 1, 2))
        lhs = float(np.sqrt(np.sum((weight * np.abs(spec)) ** 2) * scale))
        tap_l2 = float(np.sqrt(np.sum((tap * q) ** 2) * phys))
        if raw_l2 > 0:
            loss_acc += tap_l2 / raw_l2
        report.ratios.append(lhs / rhs)
    done = trials - report.degenerate_trials
    report.taper_loss = loss_acc / done if done else 0.0
    return report
