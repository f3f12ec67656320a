"""Test potentials and their classification as critical, subcritical or supercritical.

The Schrodinger operator throughout is ``-dbar d + q``.  Since
``dbar d = Laplacian / 4`` its fundamental solution is ``-(2/pi) log|x|``.
"""

from __future__ import annotations

import functools
import logging
import warnings
from dataclasses import dataclass, asdict

import numpy as np
from scipy.sparse.linalg import LinearOperator, lobpcg

from .errors import ClassificationConflict, ConfigurationError, PotentialSpecError
from .field import LATTICE_LOG_CONSTANT, Field, Grid2D, _padded_convolve
from .krylov import gmres

log = logging.getLogger(__name__)

__all__ = [
    "PotentialSpec",
    "ClassificationReport",
    "bump",
    "dbar_d",
    "conductivity_potential",
    "make_potential",
    "perturb",
    "classify_by_form",
    "positive_solution",
    "classify",
]

# bump(rho) = exp(-BUMP_DECAY rho^2 / (1 - (rho/2)^2)) for rho < 2, else 0.
# Gaussian near the center, flattened to zero in a Gevrey-smooth way at rho = 2,
# so its spectrum is resolved to ~1e-11 on h = 1/16.
BUMP_DECAY = 3.0
_CUT_END = 2.0


@dataclass(frozen=True)
class PotentialSpec:
    family: str = "conductivity"      # "conductivity" or "perturbed"
    beta: float = 0.5                 # conductivity amplitude, sigma = 1 + beta * bump
    center: complex = 0j
    radius: float = 1.0
    eps: float = 0.0                  # perturbation strength (family "perturbed")
    scale: float = 1.0                # overall factor applied to q (linear-regime tests)

    def to_dict(self):
        d = asdict(self)
        d["center"] = [float(np.real(self.center)), float(np.imag(self.center))]
        return d


@dataclass
class ClassificationReport:
    lambda_min: float
    class_guess: str
    tol_eig: float
    a_est: float = float("nan")
    c_inf_est: float = float("nan")
    small_k_slope: float = float("nan")
    converged: bool = True
    diagnostic: str = ""

    @property
    def supercritical(self) -> bool:
        return self.class_guess == "supercritical"

    def to_dict(self):
        return asdict(self)


def bump(grid: Grid2D, center: complex = 0j, radius: float = 1.0) -> np.ndarray:
    """Smooth nonnegative bump with peak 1, supported in ``|x - c| < 2 r``."""
    rho = np.abs(grid.points - center) / radius
    out = np.zeros(rho.shape)
    inside = rho < _CUT_END
    r2 = rho[inside] ** 2
    out[inside] = np.exp(-BUMP_DECAY * r2 / (1.0 - r2 / _CUT_END**2))
    return out


def dbar_d(values: np.ndarray, grid: Grid2D) -> np.ndarray:
    """``dbar d f`` as the even multiplier ``-|zeta|^2 / 4`` (Nyquist kept)."""
    sym = -0.25 * np.abs(grid.zeta) ** 2
    return np.fft.ifft2(np.fft.fft2(values) * sym)


def _check_support(grid: Grid2D, center, radius):
    reach = abs(complex(center)) + _CUT_END * radius
    if reach > 0.5 * grid.L + 1e-12:
        raise ConfigurationError(
            f"bump reaches |x| = {reach:.3g}, beyond L/2 = {0.5 * grid.L:.3g}"
        )


def conductivity_potential(grid: Grid2D, spec: PotentialSpec) -> Field:
    """``q = (dbar d sqrt(sigma)) / sqrt(sigma)`` for ``sigma = 1 + beta * bump``.

    By construction ``(-dbar d + q) sqrt(sigma) = 0`` with a bounded positive
    solution, so ``q`` is critical.
    """
    _check_support(grid, spec.center, spec.radius)
    b = bump(grid, spec.center, spec.radius)
    sigma = 1.0 + spec.beta * b
    if np.min(sigma) <= 0:
        raise PotentialSpecError(f"sigma = 1 + beta*bump is not positive (beta={spec.beta})")
    psi = np.sqrt(sigma)
    q = dbar_d(psi - 1.0, grid).real / psi
    q[b == 0] = 0.0
    return Field(grid, q, real=True)


def perturb(q: Field, bump_values: np.ndarray, eps: float) -> Field:
    """``q + eps * bump``; the bump must be nonnegative."""
    bump_values = np.asarray(bump_values)
    if np.any(np.real(bump_values) < 0):
        raise ConfigurationError("perturbation bump must be nonnegative")
    return Field(q.grid, q.values + eps * bump_values, real=q.real)


def make_potential(grid: Grid2D, spec: PotentialSpec) -> Field:
    if spec.family == "conductivity":
        q = conductivity_potential(grid, spec)
    elif spec.family == "perturbed":
        q = perturb(conductivity_potential(grid, spec), bump(grid, spec.center, spec.radius), spec.eps)
    else:
        raise ConfigurationError(f"unknown potential family {spec.family!r}")
    if spec.scale != 1.0:
        q = q.with_values(spec.scale * q.values)
    return q


def _form_operator(q: Field):
    grid = q.grid
    n = grid.n
    kin = 0.25 * np.abs(grid.zeta) ** 2
    qv = q.values.real

    def apply(v):
        v = np.asarray(v)
        cols = v.reshape(n, n, -1)
        out = np.fft.ifft2(np.fft.fft2(cols, axes=(0, 1)) * kin[..., None], axes=(0, 1)).real
        out += qv[..., None] * cols
        return out.reshape(v.shape)

    shift = max(1.0, 1.0 - float(np.min(qv)))

    def precond(v):
        v = np.asarray(v)
        cols = v.reshape(n, n, -1)
        out = np.fft.ifft2(np.fft.fft2(cols, axes=(0, 1)) / (kin + shift)[..., None], axes=(0, 1)).real
        return out.reshape(v.shape)

    N = n * n
    A = LinearOperator((N, N), matvec=apply, matmat=apply, dtype=float)
    M = LinearOperator((N, N), matvec=precond, matmat=precond, dtype=float)
    return A, M


def classify_by_form(q: Field, tol_eig: float | None = None, rtol: float = 1e-6,
                     maxiter: int = 500) -> ClassificationReport:
    """Smallest eigenvalue of the discretised form ``int |d phi|^2 + q |phi|^2``.

    The kinetic part is the spectral ``-dbar d`` on the periodic box.  The
    eigenpair comes from preconditioned inverse iteration (LOBPCG with the
    shifted inverse kinetic operator as preconditioner).
    """
    qmax = float(np.max(np.abs(q.values))) if q.values.size else 0.0
    if tol_eig is None:
        tol_eig = 1e-6 * qmax if qmax > 0 else 1e-10
    if qmax == 0:
        return ClassificationReport(0.0, "critical-or-subcritical", tol_eig)

    A, M = _form_operator(q)
    n = q.grid.n
    rng = np.random.default_rng(0)
    X = np.ones((n * n, 3))
    X[:, 1:] += 0.1 * rng.standard_normal((n * n, 2))
    scale = max(qmax, 1.0)
    with warnings.catch_warnings():
        # only the lowest pair matters; lobpcg complains about the others
        warnings.simplefilter("ignore", UserWarning)
        vals, vecs = lobpcg(A, X, M=M, largest=False, tol=rtol * scale * 1e-3, maxiter=maxiter)
    order = np.argsort(vals)
    lam = float(vals[order[0]])
    v = vecs[:, order[0]]
    res = np.linalg.norm(A @ v - lam * v) / np.linalg.norm(v)
    converged = res <= rtol * scale
    if not converged:
        return ClassificationReport(lam, "indeterminate", tol_eig, converged=False,
                                    diagnostic=f"eigensolver residual {res:.3e}")
    guess = "supercritical" if lam < -tol_eig else "critical-or-subcritical"
    return ClassificationReport(lam, guess, tol_eig, diagnostic=f"eigen residual {res:.2e}")


@functools.lru_cache(maxsize=8)
def _log_kernel_hat(L: float, n: int) -> np.ndarray:
    """Padded spectrum of ``h^2 G`` with ``G = -(2/pi) log|x|``."""
    h = 2.0 * L / n
    off = h * np.fft.fftfreq(2 * n, d=1.0 / (2 * n))
    r = np.abs(off[:, None] + 1j * off[None, :])
    kern = np.empty_like(r)
    nz = r > 0
    kern[nz] = -(2.0 / np.pi) * np.log(r[nz]) * h * h
    kern[0, 0] = -(2.0 / np.pi) * h * h * (np.log(h) + LATTICE_LOG_CONSTANT)
    kh = np.fft.fft2(kern)
    kh.setflags(write=False)
    return kh


def green_convolve(f: np.ndarray, grid: Grid2D) -> np.ndarray:
    """``G * f`` for the fundamental solution of ``-dbar d``, no periodic images."""
    return _padded_convolve(f, _log_kernel_hat(grid.L, grid.n))


def positive_solution(q: Field, tol: float = 1e-10, maxiter: int = 400):
    """Solve ``psi + G * (q psi) = 1`` and read off log growth and mean level.

    Returns ``(psi, a_est, c_inf_est)`` where ``psi ~ a log|x| + c`` is fitted
    on the annulus ``L/2 <= |x| <= 3L/4`` and ``c_inf_est`` averages
    ``psi - a log|x|`` over ``|x| < 3L/4``.
    """
    grid = q.grid
    qv = q.values.real
    ones = np.ones((1, grid.n, grid.n), dtype=complex)

    def matvec(v, sel):
        return v + green_convolve(qv * v, grid)

    psi, info = gmres(matvec, ones, tol=tol, maxiter=maxiter, restart=40)
    psi = psi[0].real
    if not info.converged[0]:
        log.warning("positive solution: GMRES residual %.2e", info.residual[0])

    r = np.abs(grid.points)
    ring = (r >= 0.5 * grid.L) & (r <= 0.75 * grid.L)
    if np.any(psi[ring] <= 0):
        raise ClassificationConflict(
            "positive solution changes sign on the fit annulus", stage="classify"
        )
    A = np.column_stack([np.log(r[ring]), np.ones(ring.sum())])
    (a_est, _c), *_ = np.linalg.lstsq(A, psi[ring], rcond=None)
    disk = (r < 0.75 * grid.L) & (r > 0)
    c_inf = float(np.mean(psi[disk] - a_est * np.log(r[disk])))
    return Field(grid, psi, real=True), float(a_est), c_inf


def classify(q: Field, tol_eig: float | None = None, a_tol: float = 0.02) -> ClassificationReport:
    """Full classification: form eigenvalue, then positive-solution growth.

    A nonnegative form with ``|a/c_inf| <= a_tol`` is reported critical,
    otherwise subcritical.
    """
    rep = classify_by_form(q, tol_eig)
    if rep.class_guess != "critical-or-subcritical":
        return rep
    if np.max(np.abs(q.values)) == 0:
        rep.a_est, rep.c_inf_est, rep.class_guess = 0.0, 1.0, "critical"
        return rep
    _, a, c = positive_solution(q)
    rep.a_est, rep.c_inf_est = a, c
    rep.class_guess = "critical" if abs(a) <= a_tol * abs(c) else "subcritical"
    return rep
