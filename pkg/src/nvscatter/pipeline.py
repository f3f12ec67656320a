"""End-to-end run: potential, classification, forward transform, then
evolve / invert / verify for every time in the schedule.

Every stage writes its artifacts into the output directory and adds its
diagnostics to ``manifest.json``.  A stage error is recorded in the manifest
before it propagates, so a failed run still leaves a readable summary.
"""

from __future__ import annotations

import logging
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import io, plotting
from .config import RunConfig, config_to_ini
from .errors import NumericalError, NVError, SupercriticalRefusal
from .evolve import evolve
from .field import Field, Grid2D, resample
from .oracle import step_nv
from .potentials import ClassificationReport, classify, make_potential
from .reconstruct import (
    ReconstructedState,
    identity_defects,
    nv_residual,
    reconstruct_q,
    valid_region,
)
from .scatter import ScatteringData, scattering_transform, small_k_fit, symmetry_defect, x_norm

log = logging.getLogger(__name__)

__all__ = [
    "run_pipeline",
    "generate_potential",
    "classify_potential",
    "forward",
    "invert",
    "verify",
    "relative_error",
    "reference_solution",
    "refuse_if_supercritical",
]


def relative_error(a: np.ndarray, ref: np.ndarray, mask: np.ndarray | None = None) -> float:
    """``max |a - ref| / max |ref|`` (absolute when ``ref`` vanishes)."""
    if mask is not None:
        a, ref = a[mask], ref[mask]
    diff = float(np.max(np.abs(a - ref))) if a.size else 0.0
    scale = float(np.max(np.abs(ref))) if ref.size else 0.0
    return diff / scale if scale > 0 else diff


def generate_potential(cfg: RunConfig) -> Field:
    return make_potential(cfg.x_grid(), cfg.potential_spec())


def classify_potential(q: Field, cfg: RunConfig) -> ClassificationReport:
    return classify(q, cfg.tolerances.tol_eig)


def refuse_if_supercritical(report: ClassificationReport, stage: str):
    if report.supercritical:
        raise SupercriticalRefusal(
            f"{stage} refused: potential is supercritical (lambda_min = {report.lambda_min:.3e}); "
            "inverse scattering is only defined for critical and subcritical potentials"
        )


def forward(q: Field, cfg: RunConfig, workers: int | None = None):
    """Scattering data plus their diagnostics.

    Raises ``NumericalError`` when the symmetry defect exceeds ``sym_tol``.
    """
    workers = workers or cfg.run.workers
    sd = scattering_transform(q, cfg.k_grid(), cfg.cgo_config(), workers)
    sym = symmetry_defect(sd)
    norm, rel = x_norm(sd)
    diag = {
        "symmetry_defect": sym,
        "x_norm": norm,
        "x_relation_defect": rel,
        "exceptional_count": int(sd.exceptional.sum()),
        "ray_exceptional_count": int(np.sum(sd.ray_exceptional)),
        "exceptional_rings": list(sd.rings),
    }
    if np.any(sd.ray_t != 0) and not np.any(sd.ray_exceptional):
        fit = small_k_fit(sd)
        diag["small_k"] = {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "a_est": fit.a_est,
            "degenerate": fit.degenerate,
            "decade_ratio": fit.decade_ratio,
        }
    if sym > cfg.tolerances.sym_tol:
        raise NumericalError(f"symmetry defect {sym:.2e} exceeds {cfg.tolerances.sym_tol:.1e}",
                             stage="forward", residual=sym)
    return sd, diag


def invert(sd: ScatteringData, cfg: RunConfig, tau: float, workers: int | None = None) -> ReconstructedState:
    """Evolve ``sd`` (taken at its own time) to ``tau`` and reconstruct."""
    workers = workers or cfg.run.workers
    return reconstruct_q(evolve(sd, tau - sd.tau), cfg.rec_grid(), cfg.dbar_config(), workers,
                         cfg.tolerances.reality_tol)


def reference_solution(q0: Field, tau: float, grid: Grid2D) -> Field:
    """Direct-integration solution at ``tau`` on ``grid``."""
    return _to_grid(q0 if tau == 0 else step_nv(q0, tau), grid)


def verify(sd0: ScatteringData, q0: Field, state: ReconstructedState, cfg: RunConfig,
           workers: int | None = None, q_ref: Field | None = None) -> dict:
    """Identity defects, evolution-equation residual and agreement with the
    direct integrator, for a state reconstructed from ``sd0`` (taken at 0)."""
    workers = workers or cfg.run.workers
    tau = state.tau
    dtau = cfg.run.dtau
    d1, d2 = identity_defects(state)
    grid = state.q.grid
    ok = valid_region(grid)
    others = [invert(sd0, cfg, t, workers) for t in (tau - dtau, tau + dtau)]
    _, nv_rel, _ = nv_residual(sd0, grid, tau, dtau, states=[others[0], state, others[1]])
    if q_ref is None:
        q_ref = reference_solution(q0, tau, grid)
    ref = q_ref.values.real
    return {
        "identity_defect_dbar": d1,
        "identity_defect_d": d2,
        "nv_residual": nv_rel,
        "oracle_difference": relative_error(state.q.values, ref, ok),
        "oracle_difference_full": relative_error(state.q.values, ref),
        "max_iterations_neighbours": max(s.max_iterations for s in others),
    }


def _to_grid(f: Field, grid: Grid2D) -> Field:
    if f.grid.n == grid.n and f.grid.L == grid.L:
        return f
    if f.grid.L != grid.L:
        raise NVError("reconstruction grid must share the box of the potential grid")
    return resample(f, grid.n)


def _state_name(tau: float) -> str:
    return f"tau_{tau:+.4f}".replace("+", "p").replace("-", "m").replace(".", "_")


def run_pipeline(cfg: RunConfig, out_dir=None, report: bool = True) -> dict:
    """Run every stage and return the manifest (also written to disk)."""
    out = Path(out_dir or cfg.run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(config_to_ini(cfg))
    manifest = {
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": cfg.to_dict(),
        "stages": {},
        "states": [],
        "timing": {},
        "status": "running",
    }
    stage = "gen-potential"

    def done(name, t0):
        manifest["timing"][name] = round(time.perf_counter() - t0, 3)

    try:
        t0 = time.perf_counter()
        q0 = generate_potential(cfg)
        io.save_field(q0, out / "potential")
        manifest["stages"]["gen-potential"] = {"sup": q0.sup(), "spec": cfg.potential_spec().to_dict()}
        if report:
            plotting.plot_field(q0, out / "potential.png", "q0")
        done(stage, t0)

        stage = "classify"
        t0 = time.perf_counter()
        rep = classify_potential(q0, cfg)
        manifest["stages"]["classify"] = rep.to_dict()
        done(stage, t0)
        if rep.supercritical and not cfg.run.allow_supercritical:
            refuse_if_supercritical(rep, "forward")

        stage = "forward"
        t0 = time.perf_counter()
        sd, diag = forward(q0, cfg)
        io.save_scattering(sd, out / "scattering")
        if "small_k" in diag:
            rep.small_k_slope = diag["small_k"]["slope"]
            manifest["stages"]["classify"] = rep.to_dict()
        manifest["stages"]["forward"] = diag
        if report:
            plotting.plot_scattering(sd, out / "scattering.png")
            plotting.plot_small_k(sd, out / "small_k.png")
        done(stage, t0)
        refuse_if_supercritical(rep, "invert")

        q0_rec = _to_grid(q0, cfg.rec_grid())
        for tau in cfg.run.tau:
            stage = "invert"
            t0 = time.perf_counter()
            st = invert(sd, cfg, tau)
            name = _state_name(tau)
            io.save_field(st.q, out / f"q_{name}", {"tau": tau})
            io.save_field(st.u, out / f"u_{name}", {"tau": tau})
            entry = st.to_dict()
            if tau == 0:
                entry["roundtrip_error"] = relative_error(st.q.values, q0_rec.values.real)
            done(f"invert {tau:g}", t0)

            stage = "verify"
            t0 = time.perf_counter()
            q_ref = reference_solution(q0, tau, st.q.grid)
            entry.update(verify(sd, q0, st, cfg, q_ref=q_ref))
            done(f"verify {tau:g}", t0)
            if report:
                plotting.plot_field(st.q, out / f"q_{name}.png", f"q at tau={tau:g}")
                plotting.plot_comparison(st.q, q_ref, out / f"slice_{name}.png",
                                         ("inverse scattering", "direct"))
            manifest["states"].append(entry)
        manifest["status"] = "ok"
    except NVError as exc:
        manifest["status"] = "refused" if isinstance(exc, SupercriticalRefusal) else "failed"
        manifest["error"] = {
            "stage": getattr(exc, "stage", None) or stage,
            "type": type(exc).__name__,
            "message": str(exc),
            "exit_code": exc.exit_code,
        }
        io.write_json(out / "manifest.json", manifest)
        raise
    io.write_json(out / "manifest.json", manifest)
    return manifest
