"""Complex geometric optics solutions ``mu(x, k)`` of ``dbar (d + i k) mu = q mu``.

``mu - 1 = m`` solves the Lippmann-Schwinger equation

    m - g_k * (q m) = g_k * q

with ``g_k`` the fundamental solution of ``dbar (d + i k)``.  In closed form

    g_k(x) = g_1(k x),   g_1(z) = -(2/pi) exp(-i z) Re E1(-i z)

where ``E1`` is the exponential integral; near the origin
``g_k(x) ~ (2/pi) (euler_gamma + log|k x|)``.

Two discretisations are provided.  The default samples ``g_k`` in real space
and convolves on a zero-padded grid, so no periodic images enter.  The
"periodic" route divides by the Fourier symbol ``-zeta (conj(zeta) + 2k) / 4``
on a frequency lattice shifted by half a cell (quasi-periodic boundary
conditions), which avoids the zero of the symbol at ``zeta = 0``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy.special import exp1

from .errors import ConfigurationError, NumericalError
from .field import LATTICE_LOG_CONSTANT, Field, Grid2D
from .krylov import gmres

log = logging.getLogger(__name__)

__all__ = [
    "CGOConfig",
    "CGOResult",
    "faddeev_green",
    "faddeev_multiplier",
    "faddeev_operator",
    "apply_faddeev_periodic",
    "snap_k",
    "support_box",
    "solve_cgo",
    "solve_cgo_batch",
]


@dataclass(frozen=True)
class CGOConfig:
    tol: float = 1e-8
    max_iter: int = 300
    restart: int = 30
    blowup: float = 1e6
    chunk: int = 48


@dataclass
class CGOResult:
    k: complex
    mu: Field
    residual: float
    iterations: int
    exceptional: bool
    k_requested: complex | None = None
    snapped: bool = False


def faddeev_green(z: np.ndarray) -> np.ndarray:
    """``g_1(z)`` for ``z != 0``; ``g_k(x) = g_1(k x)``."""
    z = np.asarray(z, dtype=complex)
    w = -1j * z
    return -(2.0 / np.pi) * np.exp(w) * exp1(w).real


def _center_weight(k: np.ndarray, h: float) -> np.ndarray:
    return (2.0 / np.pi) * (np.euler_gamma + np.log(np.abs(k) * h) + LATTICE_LOG_CONSTANT)


# --------------------------------------------------------------------------
# periodic (multiplier) route

def _default_offset(grid: Grid2D) -> complex:
    half = 0.5 * np.pi / grid.L
    return half * (1 + 1j)


def snap_k(grid: Grid2D, k: complex, offset: complex | None = None, rtol: float = 1e-6):
    """Move ``k`` by a quarter cell if ``-2 conj(k)`` sits on the shifted lattice.

    Returns ``(k_used, snapped)``.  A quarter cell in ``k`` is half a cell on
    the frequency lattice.
    """
    offset = _default_offset(grid) if offset is None else offset
    cell = np.pi / grid.L
    target = -2.0 * np.conj(complex(k)) - offset
    frac = target / cell
    dist = abs(frac - (np.round(frac.real) + 1j * np.round(frac.imag)))
    if dist < rtol:
        return complex(k) + 0.25 * cell, True
    return complex(k), False


def _shifted_zeta(grid: Grid2D, offset: complex) -> np.ndarray:
    return grid.zeta + offset


def faddeev_multiplier(grid: Grid2D, k: complex, offset: complex | None = None) -> Field:
    """``-4 / (zeta (conj(zeta) + 2k))`` on the half-cell shifted lattice.

    The lattice is ``zeta + offset`` with ``zeta`` the usual FFT frequencies.
    """
    offset = _default_offset(grid) if offset is None else offset
    z = _shifted_zeta(grid, offset)
    den = z * (np.conj(z) + 2.0 * k)
    if np.any(den == 0):
        raise NumericalError("multiplier lattice hits a zero of the symbol", stage="cgo")
    return Field(grid, -4.0 / den)


def _twist(grid: Grid2D, offset: complex, sign: int) -> np.ndarray:
    # exp(i sign x . offset) with x . offset = Re(conj(offset) x)
    return np.exp(1j * sign * np.real(np.conj(offset) * grid.points))


def apply_faddeev_periodic(f: Field, k: complex, offset: complex | None = None) -> Field:
    """Quasi-periodic ``g_k * f`` via the shifted-lattice multiplier."""
    grid = f.grid
    offset = _default_offset(grid) if offset is None else offset
    mult = faddeev_multiplier(grid, k, offset).values
    tw = _twist(grid, offset, 1)
    out = tw * np.fft.ifft2(mult * np.fft.fft2(f.values / tw))
    return Field(grid, out)


def faddeev_operator(f: Field, k: complex, offset: complex | None = None) -> Field:
    """Spectral ``dbar (d + i k) f`` on the same shifted lattice."""
    grid = f.grid
    offset = _default_offset(grid) if offset is None else offset
    z = _shifted_zeta(grid, offset)
    sym = -z * (np.conj(z) + 2.0 * k) / 4.0
    tw = _twist(grid, offset, 1)
    return Field(grid, tw * np.fft.ifft2(sym * np.fft.fft2(f.values / tw)))


# --------------------------------------------------------------------------
# real-space kernel route

def support_box(q: Field):
    """Smallest index square containing every nonzero sample of ``q``.

    Returns ``(i0, j0, nb)`` or ``None`` when ``q`` vanishes identically.
    """
    nz = np.nonzero(q.values)
    if nz[0].size == 0:
        return None
    i0, i1 = nz[0].min(), nz[0].max()
    j0, j1 = nz[1].min(), nz[1].max()
    nb = int(max(i1 - i0, j1 - j0) + 1)
    n = q.grid.n
    i0 = min(int(i0), n - nb)
    j0 = min(int(j0), n - nb)
    return i0, j0, nb


def _kernel_hats(ks: np.ndarray, h: float, nb: int, P: int) -> np.ndarray:
    """Spectra of ``h^2 g_k`` sampled on lattice offsets, padded to ``P``."""
    idx = np.arange(P)
    idx = np.where(idx < P - nb + 1, idx, idx - P)
    idx = np.where(idx < nb, idx, 0)  # unused wrap region
    off = h * idx
    w = off[:, None] + 1j * off[None, :]
    kern = np.empty((len(ks), P, P), dtype=complex)
    center = w == 0
    for b, k in enumerate(ks):
        g = np.empty((P, P), dtype=complex)
        g[~center] = faddeev_green(k * w[~center])
        g[center] = _center_weight(np.asarray(k), h)
        kern[b] = g
    kern *= h * h
    return sfft.fft2(kern, axes=(-2, -1), overwrite_x=True)


def _conv(values: np.ndarray, khat: np.ndarray, P: int) -> np.ndarray:
    nb = values.shape[-1]
    spec = sfft.fft2(values, s=(P, P), axes=(-2, -1))
    return sfft.ifft2(spec * khat, axes=(-2, -1), overwrite_x=True)[..., :nb, :nb]


@dataclass
class CGOBatch:
    ks: np.ndarray
    box: tuple | None
    m: np.ndarray | None          # (B, nb, nb), mu - 1 on the support box
    residual: np.ndarray
    iterations: np.ndarray
    exceptional: np.ndarray
    t: np.ndarray                 # scattering amplitude per k


def solve_cgo_batch(q: Field, ks, cfg: CGOConfig | None = None) -> CGOBatch:
    """Solve for every ``k`` in ``ks`` on the support box of ``q``.

    Also returns ``t(k) = h^2 sum e_k q mu`` since that only needs the box.
    """
    cfg = cfg or CGOConfig()
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    if np.any(ks == 0):
        raise ConfigurationError("k = 0 is outside the domain of the CGO problem")
    B = len(ks)
    box = support_box(q)
    if box is None:
        z = np.zeros(B)
        return CGOBatch(ks, None, None, z, np.zeros(B, int), np.zeros(B, bool), np.zeros(B, complex))

    i0, j0, nb = box
    grid = q.grid
    h = grid.h
    qb = q.values[i0:i0 + nb, j0:j0 + nb]
    pts = grid.points[i0:i0 + nb, j0:j0 + nb]
    P = sfft.next_fast_len(2 * nb - 1)

    m_all = np.empty((B, nb, nb), dtype=complex)
    res = np.empty(B)
    its = np.empty(B, dtype=int)
    t = np.empty(B, dtype=complex)
    for c0 in range(0, B, cfg.chunk):
        kc = ks[c0:c0 + cfg.chunk]
        khat = _kernel_hats(kc, h, nb, P)

        def matvec(v, sel):
            return v - _conv(qb * v, khat[sel], P)

        rhs = _conv(np.broadcast_to(qb, (len(kc), nb, nb)), khat, P)
        m, info = gmres(matvec, rhs, tol=cfg.tol, restart=cfg.restart, maxiter=cfg.max_iter)
        m_all[c0:c0 + len(kc)] = m
        res[c0:c0 + len(kc)] = info.residual
        its[c0:c0 + len(kc)] = info.iterations
        ek = np.exp(2j * np.real(kc[:, None, None] * pts[None]))
        t[c0:c0 + len(kc)] = h * h * np.sum(ek * qb * (1.0 + m), axis=(-2, -1))

    sup = np.max(np.abs(m_all), axis=(-2, -1))
    bad = ~np.isfinite(sup)
    exceptional = (res > cfg.tol) | bad | (sup > cfg.blowup)
    return CGOBatch(ks, box, m_all, res, its, exceptional, t)


def _periodic_solve(q: Field, k: complex, cfg: CGOConfig):
    # quasi-periodic solve on the doubled box [-2L, 2L)^2
    grid = q.grid
    n = grid.n
    big = Grid2D(2 * grid.L, 2 * n)
    qq = np.zeros((2 * n, 2 * n), dtype=complex)
    qq[n // 2:n // 2 + n, n // 2:n // 2 + n] = q.values
    k_used, snapped = snap_k(big, k)
    offset = _default_offset(big)
    mult = faddeev_multiplier(big, k_used, offset).values
    tw = _twist(big, offset, 1)

    def G(v):
        return tw * np.fft.ifft2(mult * np.fft.fft2(v / tw))

    def matvec(v, sel):
        return v - G(qq * v[0])[None]

    rhs = G(qq)[None]
    m, info = gmres(matvec, rhs, tol=cfg.tol, restart=cfg.restart, maxiter=cfg.max_iter)
    m = m[0][n // 2:n // 2 + n, n // 2:n // 2 + n]
    return k_used, snapped, m, float(info.residual[0]), int(info.iterations[0])


def solve_cgo(q: Field, k: complex, cfg: CGOConfig | None = None, method: str = "kernel") -> CGOResult:
    """``mu(., k)`` on the whole grid of ``q``.

    ``method="kernel"`` (default) solves on the support box with the exact
    kernel and extends ``mu`` to the grid by one more convolution.
    ``method="periodic"`` uses the shifted-lattice multiplier on a doubled
    periodic box; it is cheaper to set up but carries periodisation error.
    """
    cfg = cfg or CGOConfig()
    k = complex(k)
    if k == 0:
        raise ConfigurationError("k = 0 is outside the domain of the CGO problem")
    grid = q.grid

    if method == "periodic":
        k_used, snapped, m, res, its = _periodic_solve(q, k, cfg)
        sup = float(np.max(np.abs(m)))
        exc = res > cfg.tol or not np.isfinite(sup) or sup > cfg.blowup
        return CGOResult(k_used, Field(grid, 1.0 + m), res, its, exc, k, snapped)
    if method != "kernel":
        raise ConfigurationError(f"unknown CGO method {method!r}")

    batch = solve_cgo_batch(q, [k], cfg)
    if batch.box is None:
        return CGOResult(k, Field(grid, np.ones((grid.n, grid.n))), 0.0, 0, False, k)
    i0, j0, nb = batch.box
    src = np.zeros((grid.n, grid.n), dtype=complex)
    src[i0:i0 + nb, j0:j0 + nb] = q.values[i0:i0 + nb, j0:j0 + nb] * (1.0 + batch.m[0])
    P = sfft.next_fast_len(2 * grid.n - 1)
    khat = _kernel_hats(np.array([k]), grid.h, grid.n, P)
    m_full = _conv(src[None], khat, P)[0]
    return CGOResult(k, Field(grid, 1.0 + m_full), float(batch.residual[0]),
                     int(batch.iterations[0]), bool(batch.exceptional[0]), k)
