"""Sampling grids, sampled fields and the spectral calculus used everywhere else.

Points of the plane are treated as complex numbers ``x = x1 + i x2``.  A grid
covers the square ``[-L, L)^2`` with ``n`` samples per axis; array index
``(i, j)`` is the point ``(-L + i h) + i (-L + j h)``.

Fourier convention: ``f_hat(xi) = int exp(-i x.xi) f(x) dm(x)``.  Under it the
Wirtinger derivatives act as multipliers

    d    = (d1 - i d2)/2  ->  i * conj(zeta) / 2
    dbar = (d1 + i d2)/2  ->  i * zeta / 2

with ``zeta = xi1 + i xi2``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "Grid2D",
    "Field",
    "make_grid",
    "spectral_derivative",
    "windowed_derivative",
    "smooth_window",
    "cauchy_transform",
    "cauchy_kernel_hat",
    "embedded_dbar",
    "pairing_factor",
    "resample",
    "LATTICE_LOG_CONSTANT",
]

# Punctured-trapezoid correction for a log|z| singularity on the unit square
# lattice: h^2 * sum' log|jh| phi(jh) + h^2 (log h + C) phi(0) -> int log|z| phi.
# C = -(log(2 pi)/2 + log(Gamma(1/4)^2 / (2 pi sqrt 2))).
LATTICE_LOG_CONSTANT = -1.3105329259115093

_DERIVATIVES = ("d", "dbar", "d3", "dbar3")


@dataclass(frozen=True)
class Grid2D:
    """Square periodic lattice on ``[-L, L)^2`` with ``n`` points per axis."""

    L: float
    n: int
    kind: str = "x"

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n)

    @cached_property
    def points(self) -> np.ndarray:
        """Complex coordinates of every sample, shape ``(n, n)``."""
        a = self.axis
        return a[:, None] + 1j * a[None, :]

    @cached_property
    def xi(self) -> np.ndarray:
        """1-D angular frequencies in FFT order, ``(pi/L) * {-n/2, ..., n/2-1}``."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    @cached_property
    def zeta(self) -> np.ndarray:
        """Complex frequency lattice ``xi1 + i xi2`` in FFT order."""
        return self.xi[:, None] + 1j * self.xi[None, :]

    @cached_property
    def zeta_deriv(self) -> np.ndarray:
        """Frequency lattice with the unpaired Nyquist entries set to zero.

        Odd-order multipliers must map real fields to real fields, which the
        lone Nyquist frequency cannot do.
        """
        xi = self.xi.copy()
        xi[self.n // 2] = 0.0
        return xi[:, None] + 1j * xi[None, :]

    def zeros(self) -> "Field":
        return Field(self, np.zeros((self.n, self.n), dtype=complex))

    def field(self, values, real: bool = False) -> "Field":
        return Field(self, np.asarray(values, dtype=complex), real=real)


@dataclass
class Field:
    """Complex samples of a function on a :class:`Grid2D`."""

    grid: Grid2D
    values: np.ndarray
    real: bool = dc_field(default=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        n = self.grid.n
        if self.values.shape != (n, n):
            raise ConfigurationError(
                f"field shape {self.values.shape} does not match grid n={n}"
            )

    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.real)

    def with_values(self, values, real: bool | None = None) -> "Field":
        return Field(self.grid, values, self.real if real is None else real)


def make_grid(L: float, n: int, kind: str = "x") -> Grid2D:
    """Validate and build a grid; ``n`` must be a power of two, at least 16."""
    try:
        n_int = int(n)
    except (TypeError, ValueError):
        raise ConfigurationError(f"grid size must be an integer, got {n!r}") from None
    if n_int != n or n_int < 16 or (n_int & (n_int - 1)):
        raise ConfigurationError(f"grid size must be a power of two >= 16, got {n!r}")
    if not np.isfinite(L) or L <= 0:
        raise ConfigurationError(f"half width must be positive, got {L!r}")
    if kind not in ("x", "k"):
        raise ConfigurationError(f"grid kind must be 'x' or 'k', got {kind!r}")
    return Grid2D(float(L), n_int, kind)


def derivative_symbol(grid: Grid2D, which: str) -> np.ndarray:
    if which not in _DERIVATIVES:
        raise ValueError(f"unknown derivative {which!r}; expected one of {_DERIVATIVES}")
    z = grid.zeta_deriv
    base = 0.5j * (np.conj(z) if which in ("d", "d3") else z)
    return base**3 if which.endswith("3") else base


def spectral_derivative(f: Field, which: str) -> Field:
    """Apply ``d``, ``dbar`` or their cubes as Fourier multipliers.

    The input is assumed periodic-representable: smooth, or vanishing near
    the edge of the box.
    """
    sym = derivative_symbol(f.grid, which)
    out = np.fft.ifft2(np.fft.fft2(f.values) * sym)
    return Field(f.grid, out)


def smooth_window(grid: Grid2D, r_flat: float | None = None, r_zero: float | None = None) -> np.ndarray:
    """Radial C-infinity window: 1 for ``|x| <= r_flat``, 0 for ``|x| >= r_zero``."""
    r_flat = 0.7 * grid.L if r_flat is None else r_flat
    r_zero = 0.95 * grid.L if r_zero is None else r_zero
    r = np.abs(grid.points)
    s = np.clip((r - r_flat) / (r_zero - r_flat), 0.0, 1.0)
    return _smooth_step(1.0 - s)


def _smooth_step(s):
    """C-infinity step rising from 0 at s<=0 to 1 at s>=1."""
    s = np.asarray(s, dtype=float)
    a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


def windowed_derivative(f: Field, which: str, window: np.ndarray | None = None) -> Field:
    """Derivative of a slowly decaying field, exact where the window is 1.

    Fields like ``P q`` decay only as ``1/|x|`` and are not periodic on the
    box.  Multiplying by a smooth window first makes them so; inside the flat
    part of the window the result is the true derivative.
    """
    w = smooth_window(f.grid) if window is None else window
    return spectral_derivative(f.with_values(f.values * w), which)


def embedded_dbar(inner: Field, source: Field, embed: int = 3) -> Field:
    """``dbar`` of ``inner`` on its whole grid, edge included.

    ``inner`` is taken to equal ``P source`` away from the box (as ``P f`` or
    ``mu - 1`` do).  It is continued by that Cauchy transform on a box
    ``embed`` times wider and differentiated there behind a window whose
    transition lies outside the original grid, corners included.
    """
    if embed < 2:
        raise ConfigurationError("embed must be at least 2")
    g = inner.grid
    n = g.n
    big = Grid2D(embed * g.L, embed * n, g.kind)
    o = (embed * n - n) // 2
    src = np.zeros((big.n, big.n), dtype=complex)
    src[o:o + n, o:o + n] = source.values
    ext = cauchy_transform(Field(big, src)).values
    ext[o:o + n, o:o + n] = inner.values
    # the box corners sit at sqrt(2) L; keep the flat part beyond them
    w = smooth_window(big, 1.5 * g.L, 0.95 * big.L)
    d = windowed_derivative(Field(big, ext), "dbar", w).values
    return Field(g, d[o:o + n, o:o + n])


@functools.lru_cache(maxsize=16)
def cauchy_kernel_hat(L: float, n: int, corrected: bool = True) -> np.ndarray:
    """FFT of ``h^2/(pi z)`` sampled on the doubled (zero-padded) lattice.

    The kernel value at ``z = 0`` is 0 (principal value cell).  With
    ``corrected`` the local term ``-(h^2/pi) * d f`` is folded into the same
    multiplier, which lifts the punctured rule from O(h^2) to O(h^4) for
    smooth integrands.
    """
    h = 2.0 * L / n
    off = h * np.fft.fftfreq(2 * n, d=1.0 / (2 * n))
    z = off[:, None] + 1j * off[None, :]
    kern = np.zeros_like(z)
    nz = z != 0
    kern[nz] = h * h / (np.pi * z[nz])
    kh = np.fft.fft2(kern)
    if corrected:
        pad = Grid2D(2.0 * L, 2 * n)
        kh = kh - (h * h / np.pi) * (0.5j * np.conj(pad.zeta_deriv))
    kh.setflags(write=False)
    return kh


def cauchy_transform(f: Field, corrected: bool = True) -> Field:
    """Solid Cauchy transform ``(1/pi) int f(zeta)/(z - zeta) dm(zeta)``.

    Discrete linear convolution on the zero-padded doubled grid, so no
    periodic images enter.  ``f`` should vanish near the edge of the box.
    """
    n = f.grid.n
    kh = cauchy_kernel_hat(f.grid.L, n, corrected)
    return Field(f.grid, _padded_convolve(f.values, kh))


def _padded_convolve(values: np.ndarray, kernel_hat: np.ndarray) -> np.ndarray:
    """Linear convolution of ``values[..., n, n]`` with a padded kernel spectrum."""
    n = values.shape[-1]
    pad = np.zeros(values.shape[:-2] + (2 * n, 2 * n), dtype=complex)
    pad[..., :n, :n] = values
    out = np.fft.ifft2(np.fft.fft2(pad) * kernel_hat)
    return out[..., :n, :n]


def pairing_factor(grid: Grid2D, k: complex, sign: int = 1) -> Field:
    """Unimodular factor ``exp(i sign (k x + conj(k x)))`` sampled on ``grid``.

    With ``sign=+1`` this is ``e_k(x)``; read on a k-grid with ``k`` replaced
    by a point ``x`` it is ``e_{-x}(k)`` for ``sign=-1``.
    """
    phase = 2.0 * np.real(complex(k) * grid.points)
    return Field(grid, np.exp(1j * sign * phase))


def resample(f: Field, n_new: int) -> Field:
    """Spectral resampling onto a grid with the same half width."""
    n = f.grid.n
    if n_new < 16 or n_new % 2:
        raise ConfigurationError(f"resampled size must be even and >= 16, got {n_new}")
    new = Grid2D(f.grid.L, int(n_new), f.grid.kind)
    if n_new == n:
        return f.copy()
    fh = np.fft.fftshift(np.fft.fft2(f.values))
    out = np.zeros((n_new, n_new), dtype=complex)
    if n_new < n:
        lo = (n - n_new) // 2
        out[:] = fh[lo:lo + n_new, lo:lo + n_new]
        # Nyquist row/column of the coarse grid gets folded energy; keep it symmetric.
        out[0, :] = 0.0
        out[:, 0] = 0.0
    else:
        lo = (n_new - n) // 2
        out[lo:lo + n, lo:lo + n] = fh
        out[lo, :] = 0.0
        out[:, lo] = 0.0
    vals = np.fft.ifft2(np.fft.ifftshift(out)) * (n_new / n) ** 2
    return Field(new, vals, f.real)
