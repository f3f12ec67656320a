"""The dbar problem in ``k``: ``dbar_k mu = e_{-x}(k) s(k) conj(mu)``, ``mu -> 1``.

Written as ``mu - 1 = T(mu)`` with ``T f = P[s e_{-x} conj f]`` and ``P`` the
solid Cauchy transform on the k-grid.  The large-k expansion

    mu(x, k) = 1 + a1(x)/k + a2(x)/k^2 + ...

has ``a_j = (1/pi) int k^(j-1) s e_{-x} conj(mu) dm(k)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .field import Field, _padded_convolve, cauchy_kernel_hat, embedded_dbar
from .krylov import gmres
from .scatter import ScatteringData

log = logging.getLogger(__name__)

__all__ = [
    "DbarConfig",
    "DbarResult",
    "dbar_data",
    "apply_T",
    "solve_mu",
    "solve_mu_batch",
    "dbar_residual",
]


@dataclass(frozen=True)
class DbarConfig:
    tol: float = 1e-8
    max_iter: int = 300
    restart: int = 30
    subk_model: bool = False
    chunk: int = 64


@dataclass
class DbarResult:
    x: complex
    tau: float
    mu_k: Field
    a1: complex
    a2: complex
    residual: float
    iterations: int = 0


def dbar_data(sd: ScatteringData, subk_model: bool = False) -> np.ndarray:
    """``s`` on the k-grid, zero where masked.

    With ``subk_model`` the excluded disk around ``k = 0`` is filled with the
    small-k asymptote ``-1/(conj(k) log|k|^2)`` instead of zeros.  The model
    is only meaningful for subcritical data.
    """
    s = sd.s.copy()
    if subk_model:
        k = sd.kgrid.points
        r = np.abs(k)
        disk = (r < sd.kgrid.k_min) & (r > 0)
        s[disk] = -1.0 / (np.conj(k[disk]) * np.log(r[disk] ** 2))
        if sd.tau:
            s[disk] *= np.exp(1j * sd.tau * 2.0 * np.real(k[disk] ** 3))
    return s


def _e_minus_x(k: np.ndarray, xs: np.ndarray) -> np.ndarray:
    # e_{-x}(k) = exp(-i (k x + conj(k x)))
    return np.exp(-2j * np.real(xs[:, None, None] * k[None]))


def apply_T(sd: ScatteringData, x: complex, f: Field, subk_model: bool = False) -> Field:
    """``P[s e_{-x} conj f]`` on the k-grid of ``sd``."""
    kg = sd.kgrid
    s = dbar_data(sd, subk_model)
    w = s * _e_minus_x(kg.points, np.array([complex(x)]))[0]
    kh = cauchy_kernel_hat(kg.k_max, kg.m)
    return Field(kg.grid, _padded_convolve(w * np.conj(f.values), kh))


def solve_mu_batch(s: np.ndarray, kg, xs, cfg: DbarConfig | None = None, derivatives: bool = False):
    """Solve at every ``x`` in ``xs`` (1-D).  Returns a dict of arrays.

    Keys: ``mu`` (B, m, m), ``a1``, ``a2``, ``residual``, ``iterations`` and,
    with ``derivatives``, ``dbar_integral``: the x-dbar of
    ``int s e_{-x} conj(mu) dm(k)`` computed by differentiating under the
    integral (needs two further solves per point).
    """
    cfg = cfg or DbarConfig()
    xs = np.atleast_1d(np.asarray(xs, dtype=complex))
    k = kg.points
    wq = kg.hk ** 2
    kh = cauchy_kernel_hat(kg.k_max, kg.m)
    B, m = len(xs), kg.m
    out = {
        "mu": np.empty((B, m, m), dtype=complex),
        "a1": np.empty(B, dtype=complex),
        "a2": np.empty(B, dtype=complex),
        "residual": np.empty(B),
        "iterations": np.empty(B, dtype=int),
    }
    if derivatives:
        out["dbar_integral"] = np.empty(B, dtype=complex)
    if not np.any(s):
        out["mu"][:] = 1.0
        out["a1"][:] = out["a2"][:] = 0.0
        out["residual"][:] = 0.0
        out["iterations"][:] = 0
        if derivatives:
            out["dbar_integral"][:] = 0.0
        return out

    for c0 in range(0, B, cfg.chunk):
        xc = xs[c0:c0 + cfg.chunk]
        W = s[None] * _e_minus_x(k, xc)

        def matvec(v, sel):
            return v - _padded_convolve(W[sel] * np.conj(v), kh)

        rhs = _padded_convolve(W, kh)
        mm, info = gmres(matvec, rhs, tol=cfg.tol, restart=cfg.restart,
                         maxiter=cfg.max_iter, real_linear=True)
        if not info.converged.all():
            worst = float(info.residual.max())
            raise NumericalError(f"dbar solve did not converge (residual {worst:.2e})",
                                 stage="dbar", residual=worst)
        mu = 1.0 + mm
        f = W * np.conj(mu)
        sl = slice(c0, c0 + len(xc))
        out["mu"][sl] = mu
        out["a1"][sl] = wq / np.pi * np.sum(f, axis=(-2, -1))
        out["a2"][sl] = wq / np.pi * np.sum(k * f, axis=(-2, -1))
        out["residual"][sl] = info.residual
        out["iterations"][sl] = info.iterations

        if derivatives:
            # d/dx1 e_{-x} = -2i k1 e_{-x},  d/dx2 e_{-x} = 2i k2 e_{-x}
            src1 = _padded_convolve(-2j * k.real * f, kh)
            src2 = _padded_convolve(2j * k.imag * f, kh)
            W2 = np.concatenate([W, W])

            def matvec2(v, sel):
                return v - _padded_convolve(W2[sel] * np.conj(v), kh)

            v, _ = gmres(matvec2, np.concatenate([src1, src2]), tol=cfg.tol,
                         restart=cfg.restart, maxiter=cfg.max_iter, real_linear=True)
            n = len(xc)
            dmu = 0.5 * (v[:n] - 1j * v[n:])      # d_x mu
            term = -1j * np.conj(k) * f + W * np.conj(dmu)
            out["dbar_integral"][sl] = wq * np.sum(term, axis=(-2, -1))
    return out


def solve_mu(sd: ScatteringData, x: complex, cfg: DbarConfig | None = None) -> DbarResult:
    cfg = cfg or DbarConfig()
    s = dbar_data(sd, cfg.subk_model)
    r = solve_mu_batch(s, sd.kgrid, [x], cfg)
    return DbarResult(complex(x), sd.tau, Field(sd.kgrid.grid, r["mu"][0]), complex(r["a1"][0]),
                      complex(r["a2"][0]), float(r["residual"][0]), int(r["iterations"][0]))


def dbar_residual(s: np.ndarray, kg, x: complex, mu: np.ndarray, r_lo: float = 1.0,
                  r_hi: float | None = None, embed: int = 2) -> float:
    """``sup |dbar_k mu - s e_{-x} conj(mu)| / sup |s|`` on ``r_lo <= |k| <= r_hi``.

    ``mu - 1`` decays only like ``1/k`` and is not periodic on the k-box.
    It is continued outside the grid by the Cauchy transform of the right
    hand side on a box ``embed`` times larger and differentiated there, so
    the derivative window's transition lies far outside the k-grid.
    """
    k = kg.points
    r = np.abs(k)
    r_hi = 2.0 * kg.k_max / 3.0 if r_hi is None else r_hi
    f = s * np.exp(-2j * np.real(complex(x) * k)) * np.conj(mu)
    d = embedded_dbar(Field(kg.grid, mu - 1.0), Field(kg.grid, f), embed).values
    sel = (r >= r_lo) & (r <= r_hi)
    smax = np.max(np.abs(s))
    return float(np.max(np.abs(d - f)[sel]) / smax) if smax > 0 else 0.0
