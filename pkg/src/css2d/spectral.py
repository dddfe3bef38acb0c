"""Periodic grid and Fourier-multiplier operators.

Everything acts on real sample arrays over the ``[0, L)^2`` torus with an
``N x N`` lattice, N a power of two.  Arrays are row-major with the x1 index
varying fastest, i.e. ``u[j2, j1] = u(x1[j1], x2[j2])``; derivative axis 1 is
the last array axis.  All operators are pure (inputs are never mutated) and
use single-threaded deterministic transforms, so repeated calls on the same
data are bit-reproducible.

The forward transform is normalized so the discrete Parseval identity holds
with the physical measure:

    sum_x |u(x)|^2 dx^2 = sum_k |forward(u)(k)|^2

Fractional multipliers use the bracket weight <k> = 1 + |k| (not the common
(1 + |k|^2)^(1/2)).  Operators singular at k = 0 (D^alpha with alpha < 0,
Riesz transforms) map the mean mode to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _sfft


@dataclass(frozen=True, eq=False)
class Grid:
    """Square periodic grid with cached wavenumber lattices.

    Parameters
    ----------
    n_points : int
        Points per axis; must be a power of two, >= 8.
    side_length : float
        Physical torus side L > 0.
    """

    n_points: int
    side_length: float
    # cached, derived in __post_init__
    dx: float = field(init=False, repr=False)
    k1: np.ndarray = field(init=False, repr=False)   # (N,N), varies along axis -1
    k2: np.ndarray = field(init=False, repr=False)   # (N,N), varies along axis -2
    k_abs: np.ndarray = field(init=False, repr=False)
    x1: np.ndarray = field(init=False, repr=False)
    x2: np.ndarray = field(init=False, repr=False)
    dealias_mask: np.ndarray = field(init=False, repr=False)
    k1_half: np.ndarray = field(init=False, repr=False)
    k2_half: np.ndarray = field(init=False, repr=False)
    k_abs_half: np.ndarray = field(init=False, repr=False)
    dealias_mask_half: np.ndarray = field(init=False, repr=False)
    rfft_multiplicity: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.n_points
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError(f"n_points must be a power of two >= 8, got {n}")
        if not (np.isfinite(self.side_length) and self.side_length > 0):
            raise ValueError(f"side_length must be positive and finite, got {self.side_length}")
        L = float(self.side_length)
        object.__setattr__(self, "dx", L / n)
        k1d = 2.0 * np.pi * np.fft.fftfreq(n, d=L / n)
        object.__setattr__(self, "k1", np.broadcast_to(k1d[None, :], (n, n)))
        object.__setattr__(self, "k2", np.broadcast_to(k1d[:, None], (n, n)))
        object.__setattr__(self, "k_abs", np.hypot(self.k1, self.k2))
        x1d = np.arange(n) * self.dx
        object.__setattr__(self, "x1", np.broadcast_to(x1d[None, :], (n, n)))
        object.__setattr__(self, "x2", np.broadcast_to(x1d[:, None], (n, n)))
        m = np.abs(np.fft.fftfreq(n) * n)
        keep = m <= n // 3
        object.__setattr__(self, "dealias_mask", np.logical_and(keep[None, :], keep[:, None]))
        # odd-derivative multipliers drop their own Nyquist line (the sign of
        # that mode's derivative is not representable on the grid); this
        # keeps d/dx_i skew-adjoint and the full- and half-spectrum paths
        # in exact agreement
        ik1 = (1j * self.k1).copy()
        ik1[:, n // 2] = 0.0
        ik2 = (1j * self.k2).copy()
        ik2[n // 2, :] = 0.0
        object.__setattr__(self, "_ik1", ik1)
        object.__setattr__(self, "_ik2", ik2)
        # half-spectrum (rfft2) companions for the evolution hot path
        half = n // 2 + 1
        k1_half = np.ascontiguousarray(self.k1[:, :half])
        k1_half[:, -1] = 0.0
        k2_half = np.ascontiguousarray(self.k2[:, :half])
        k2_half[n // 2, :] = 0.0
        object.__setattr__(self, "k1_half", k1_half)
        object.__setattr__(self, "k2_half", k2_half)
        object.__setattr__(self, "k_abs_half", np.ascontiguousarray(self.k_abs[:, :half]))
        object.__setattr__(self, "dealias_mask_half",
                           np.ascontiguousarray(self.dealias_mask[:, :half]))
        mult = np.full((n, half), 2.0)
        mult[:, 0] = 1.0
        mult[:, -1] = 1.0
        object.__setattr__(self, "rfft_multiplicity", mult)

    # -- transforms ---------------------------------------------------------

    def forward(self, u: np.ndarray) -> np.ndarray:
        """Parseval-normalized forward transform (last two axes)."""
        return _sfft.fftn(u, axes=(-2, -1)) * (self.dx / self.n_points)

    def inverse(self, uh: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`forward`; returns the real part."""
        return _sfft.ifftn(uh * (self.n_points / self.dx), axes=(-2, -1)).real

    def _apply_multiplier(self, u: np.ndarray, mult: np.ndarray) -> np.ndarray:
        return _sfft.ifftn(mult * _sfft.fftn(u, axes=(-2, -1)), axes=(-2, -1)).real

    # -- differential / fractional operators --------------------------------

    def spatial_derivative(self, u: np.ndarray, axis: int) -> np.ndarray:
        """Spectral d/dx_axis, axis in {1, 2}. Output has zero mean."""
        if axis == 1:
            return self._apply_multiplier(u, self._ik1)
        if axis == 2:
            return self._apply_multiplier(u, self._ik2)
        raise ValueError(f"axis must be 1 or 2, got {axis}")

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        return self._apply_multiplier(u, -(self.k_abs**2))

    def lambda_op(self, u: np.ndarray, alpha: float) -> np.ndarray:
        """Bracket multiplier (1 + |k|)^alpha."""
        return self._apply_multiplier(u, (1.0 + self.k_abs) ** alpha)

    def d_op(self, u: np.ndarray, alpha: float) -> np.ndarray:
        """Homogeneous multiplier |k|^alpha.

        The mean mode passes through unchanged for alpha = 0 and maps to zero
        otherwise (for alpha > 0 that is the natural value; for alpha < 0 it
        is the zero-mode convention).
        """
        if alpha == 0:
            mult = np.ones_like(self.k_abs)
        else:
            with np.errstate(divide="ignore"):
                mult = self.k_abs**alpha
            mult[0, 0] = 0.0
        return self._apply_multiplier(u, mult)

    def dinv(self, u: np.ndarray) -> np.ndarray:
        """D^(-1) = |k|^(-1) with zero mean mode."""
        return self.d_op(u, -1.0)

    def inverse_laplacian(self, u: np.ndarray) -> np.ndarray:
        """Delta^(-1) with zero mean mode (used by gauge construction)."""
        mult = np.zeros_like(self.k_abs)
        nz = self.k_abs > 0
        mult[nz] = -1.0 / self.k_abs[nz] ** 2
        return self._apply_multiplier(u, mult)

    def riesz(self, u: np.ndarray, i: int) -> np.ndarray:
        """Riesz transform D^(-1) d/dx_i, multiplier i k_i / |k|, mean -> 0.

        Like the derivative, the multiplier drops its own Nyquist line.
        """
        if i == 1:
            iki = self._ik1
        elif i == 2:
            iki = self._ik2
        else:
            raise ValueError(f"index must be 1 or 2, got {i}")
        mult = np.zeros(iki.shape, dtype=complex)
        nz = self.k_abs > 0
        mult[nz] = iki[nz] / self.k_abs[nz]
        return self._apply_multiplier(u, mult)

    def multiplier_op(self, kind: str, alpha: float, u: np.ndarray) -> np.ndarray:
        """Dispatch by multiplier name: 'lambda', 'd', 'dinv' or 'laplacian'."""
        if kind == "lambda":
            return self.lambda_op(u, alpha)
        if kind == "d":
            return self.d_op(u, alpha)
        if kind == "dinv":
            return self.dinv(u)
        if kind == "laplacian":
            return self.laplacian(u)
        raise ValueError(f"unknown multiplier kind {kind!r}")

    def dealias(self, u: np.ndarray) -> np.ndarray:
        """2/3-rule spectral truncation (applied after nonlinear products)."""
        return _sfft.ifftn(self.dealias_mask * _sfft.fftn(u, axes=(-2, -1)), axes=(-2, -1)).real

    # -- norms ---------------------------------------------------------------

    def l2_norm(self, u: np.ndarray) -> float:
        """Discrete L^2 norm sqrt(sum u^2 dx^2) over the trailing two axes."""
        return float(np.sqrt(np.sum(u * u) * self.dx**2))

    def sobolev_norm(self, u: np.ndarray, s: float) -> float:
        """Discrete H^s norm with weight (1 + |k|)^s, Parseval scaling.

        A leading component axis, if present, is summed in quadrature.
        """
        uh = self.forward(u)
        w2 = (1.0 + self.k_abs) ** (2.0 * s)
        return float(np.sqrt(np.sum(w2 * np.abs(uh) ** 2)))

    def homogeneous_sobolev_norm(self, u: np.ndarray, s: float = 1.0) -> float:
        """Homogeneous norm with weight |k|^s (mean mode carries no weight)."""
        uh = self.forward(u)
        w2 = self.k_abs ** (2.0 * s) if s != 0 else np.ones_like(self.k_abs)
        if s < 0:
            w2 = w2.copy()
            w2[0, 0] = 0.0
        return float(np.sqrt(np.sum(w2 * np.abs(uh) ** 2)))

    def mean(self, u: np.ndarray) -> float:
        return float(np.mean(u))


def random_band_limited(grid: Grid, rng: np.random.Generator, m_max: int = 4,
                        amplitude: float = 1.0, mean_free: bool = False) -> np.ndarray:
    """Random real field supported on modes |m_i| <= m_max per axis.

    Deterministic for a fixed generator state; used by tests and the
    empirical estimate harness.
    """
    n = grid.n_points
    if not (0 < m_max < n // 2):
        raise ValueError(f"m_max must be in (0, {n // 2}), got {m_max}")
    coeffs = np.zeros((n, n), dtype=complex)
    raw = rng.standard_normal((2 * m_max + 1, 2 * m_max + 1, 2))
    for p in range(-m_max, m_max + 1):
        for q in range(-m_max, m_max + 1):
            coeffs[q % n, p % n] = raw[p + m_max, q + m_max, 0] + 1j * raw[p + m_max, q + m_max, 1]
    if mean_free:
        coeffs[0, 0] = 0.0
    u = np.fft.ifftn(coeffs).real
    peak = np.max(np.abs(u))
    if peak > 0:
        u = u * (amplitude / peak)
    return u
