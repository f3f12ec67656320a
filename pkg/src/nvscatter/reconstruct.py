"""Recover ``q(x, tau)`` and ``u(x, tau)`` from (evolved) scattering data.

``q = i dbar_x a1`` and ``u = i d_x a1`` where ``a1`` is the first large-k
coefficient of ``mu``.  Since ``a1`` decays only like ``1/|x|`` the
derivatives are taken spectrally after a smooth radial window (flat on
``|x| <= 0.7 L``).  Outside the flat part the derivative picks up a
``(dbar w) a1`` term, so that ring is not part of the reconstruction; every
defect reported here is measured on the flat disk or inside it.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dbar import DbarConfig, dbar_data, solve_mu_batch
from .errors import SymmetryViolation
from .evolve import evolve
from .field import Field, Grid2D, spectral_derivative, windowed_derivative, smooth_window
from .scatter import ScatteringData

log = logging.getLogger(__name__)

__all__ = [
    "ReconstructedState",
    "reconstruct_q",
    "compute_u",
    "identity_defects",
    "nv_rhs",
    "nv_residual",
    "INTERIOR_FRACTION",
    "valid_region",
]

# identity defects and residual norms are measured on |x| <= INTERIOR_FRACTION * L
INTERIOR_FRACTION = 0.6


@dataclass
class ReconstructedState:
    tau: float
    q: Field
    u: Field
    a1: Field
    a2: Field
    reality_defect: float
    max_iterations: int = 0
    q_direct: Field | None = None

    def to_dict(self):
        return {
            "tau": self.tau,
            "reality_defect": self.reality_defect,
            "max_iterations": self.max_iterations,
            "n": self.q.grid.n,
            "L": self.q.grid.L,
        }


def valid_region(grid: Grid2D) -> np.ndarray:
    """Mask of points where the derivative window is identically 1."""
    return smooth_window(grid) == 1.0


def _x_worker(args):
    s, kg, xs, cfg, derivatives = args
    return solve_mu_batch(s, kg, xs, cfg, derivatives)


def reconstruct_q(sd: ScatteringData, xgrid: Grid2D, cfg: DbarConfig | None = None,
                  workers: int = 1, reality_tol: float = 1e-3,
                  direct: bool = False) -> ReconstructedState:
    """Solve the dbar problem at every point of ``xgrid`` and assemble fields.

    With ``direct=True`` a second estimate of ``q`` is formed by
    differentiating the k-integral under the integral sign (three solves per
    point instead of one); it is stored as ``q_direct``.
    """
    cfg = cfg or DbarConfig()
    s = dbar_data(sd, cfg.subk_model)
    xs = xgrid.points.ravel()
    step = cfg.chunk
    jobs = [(s, sd.kgrid, xs[i:i + step], cfg, direct) for i in range(0, xs.size, step)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_x_worker, jobs))
    else:
        parts = [_x_worker(j) for j in jobs]

    def gather(key):
        return np.concatenate([p[key] for p in parts]).reshape(xgrid.n, xgrid.n)

    a1 = Field(xgrid, gather("a1"))
    a2 = Field(xgrid, gather("a2"))
    iters = int(max(p["iterations"].max() for p in parts))

    q = windowed_derivative(a1, "dbar").values * 1j
    u = windowed_derivative(a1, "d").values * 1j
    ok = valid_region(xgrid)
    qmax = np.max(np.abs(q[ok]))
    defect = float(np.max(np.abs(q.imag[ok])) / qmax) if qmax > 0 else 0.0
    if defect > reality_tol:
        raise SymmetryViolation(
            f"reconstructed q has relative imaginary part {defect:.2e}", stage="reconstruct",
            residual=defect,
        )
    q_direct = None
    if direct:
        qd = 1j / np.pi * gather("dbar_integral")
        q_direct = Field(xgrid, qd.real * smooth_window(xgrid), real=True)
    return ReconstructedState(sd.tau, Field(xgrid, q.real, real=True), Field(xgrid, u), a1, a2,
                              defect, iters, q_direct)


def compute_u(q: Field) -> Field:
    """``u`` with ``dbar u = d q``: Fourier multiplier ``conj(zeta)/zeta``, zero mode 0.

    Uses the same Nyquist-free lattice as the derivatives, so the identity
    holds to rounding on every mode.
    """
    z = q.grid.zeta_deriv
    mult = np.zeros_like(z)
    nz = z != 0
    mult[nz] = np.conj(z[nz]) / z[nz]
    return Field(q.grid, np.fft.ifft2(np.fft.fft2(q.values) * mult))


def _interior(grid: Grid2D) -> np.ndarray:
    return np.abs(grid.points) <= INTERIOR_FRACTION * grid.L


def identity_defects(state: ReconstructedState):
    """Relative residuals of ``i D a2 = D(-d a1 + i a1^2/2)`` for ``D = dbar, d``.

    Measured on the interior disk where the derivative window is flat.
    """
    a1, a2 = state.a1, state.a2
    if np.max(np.abs(a1.values)) == 0 and np.max(np.abs(a2.values)) == 0:
        return 0.0, 0.0
    inner = _interior(a1.grid)
    da1 = windowed_derivative(a1, "d")
    B = a1.with_values(-da1.values + 0.5j * a1.values**2)
    out = []
    for which in ("dbar", "d"):
        lhs = 1j * windowed_derivative(a2, which).values
        rhs = windowed_derivative(B, which).values
        scale = max(np.max(np.abs(lhs[inner])), np.max(np.abs(rhs[inner])))
        out.append(float(np.max(np.abs(lhs - rhs)[inner]) / scale) if scale > 0 else 0.0)
    return out[0], out[1]


def nv_rhs(q: Field, u: Field | None = None) -> Field:
    """``dbar^3 q + d^3 q - 3 dbar(conj(u) q) - 3 d(u q)``."""
    u = compute_u(q) if u is None else u
    qv = q.values
    val = (
        spectral_derivative(q, "dbar3").values
        + spectral_derivative(q, "d3").values
        - 3.0 * spectral_derivative(q.with_values(np.conj(u.values) * qv), "dbar").values
        - 3.0 * spectral_derivative(q.with_values(u.values * qv), "d").values
    )
    return Field(q.grid, val)


def nv_residual(sd0: ScatteringData, xgrid: Grid2D, tau: float, dtau: float = 1e-3,
                cfg: DbarConfig | None = None, workers: int = 1, linear: bool = False,
                states=None):
    """Residual of the evolution equation for the reconstructed ``q``.

    ``q`` is reconstructed at ``tau - dtau``, ``tau`` and ``tau + dtau``; the
    time derivative is the centred difference.  With ``linear=True`` the
    nonlinear terms are dropped.  Returns ``(residual_field, relative_sup,
    states)``; the relative norm is taken on the interior disk.
    """
    if states is None:
        states = [reconstruct_q(evolve(sd0, t), xgrid, cfg, workers)
                  for t in (tau - dtau, tau, tau + dtau)]
    qm, q0, qp = (s.q for s in states)
    dq = (qp.values - qm.values) / (2.0 * dtau)
    if linear:
        rhs = spectral_derivative(q0, "dbar3").values + spectral_derivative(q0, "d3").values
    else:
        rhs = nv_rhs(q0).values
    res = dq - rhs
    inner = _interior(xgrid)
    scale = np.max(np.abs(dq[inner]))
    rel = float(np.max(np.abs(res[inner])) / scale) if scale > 0 else 0.0
    return Field(xgrid, res), rel, states
