"""``nvscatter`` command line tool.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 refusal (supercritical potential).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .config import RunConfig, load_config
from .errors import ConfigurationError, NVError, SupercriticalRefusal
from .evolve import evolve as evolve_data
from .pipeline import (
    classify_potential,
    forward,
    generate_potential,
    invert,
    reference_solution,
    refuse_if_supercritical,
    relative_error,
    run_pipeline,
    verify,
    _state_name,
)

log = logging.getLogger("nvscatter")


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    run = cfg.run
    kw = {}
    if args.tau:
        kw["tau"] = tuple(sorted(args.tau))
    if args.workers is not None:
        kw["workers"] = args.workers
    if args.subk_model:
        kw["subk_model"] = True
    if args.out:
        kw["output_dir"] = args.out
    return replace(cfg, run=replace(run, **kw)) if kw else cfg


def _out(cfg: RunConfig) -> Path:
    p = Path(cfg.run.output_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=io._jsonable))


def _need_input(args, what="--input"):
    if not args.input:
        raise ConfigurationError(f"{what} is required for '{args.command}'")
    return args.input


def cmd_gen_potential(args, cfg):
    q = generate_potential(cfg)
    stem = io.save_field(q, _out(cfg) / "potential")
    _emit({"potential": str(stem), "sup": q.sup()})


def cmd_classify(args, cfg):
    q = io.load_field(args.input) if args.input else generate_potential(cfg)
    rep = classify_potential(q, cfg)
    _emit(rep.to_dict())


def cmd_forward(args, cfg):
    q = io.load_field(args.input) if args.input else generate_potential(cfg)
    rep = classify_potential(q, cfg)
    if not cfg.run.allow_supercritical:
        refuse_if_supercritical(rep, "forward")
    sd, diag = forward(q, cfg)
    out = _out(cfg)
    stem = io.save_scattering(sd, out / "scattering")
    diag["classification"] = rep.to_dict()
    io.write_json(out / "forward.json", diag)
    _emit({"scattering": str(stem), **diag})


def cmd_evolve(args, cfg):
    sd = io.load_scattering(_need_input(args))
    out = _out(cfg)
    written = []
    for tau in cfg.run.tau:
        stem = io.save_scattering(evolve_data(sd, tau - sd.tau), out / f"scattering_{_state_name(tau)}")
        written.append(str(stem))
    _emit({"written": written})


def _refuse_exceptional(sd):
    if np.any(sd.exceptional) or np.any(sd.ray_exceptional) or sd.rings:
        raise SupercriticalRefusal(
            "inversion refused: scattering data contain exceptional points "
            f"({int(np.sum(sd.exceptional))} grid samples, rings at {sd.rings})"
        )


def cmd_invert(args, cfg):
    sd = io.load_scattering(_need_input(args))
    _refuse_exceptional(sd)
    out = _out(cfg)
    rows = []
    for tau in cfg.run.tau:
        st = invert(sd, cfg, tau)
        name = _state_name(tau)
        io.save_field(st.q, out / f"q_{name}", {"tau": tau})
        io.save_field(st.u, out / f"u_{name}", {"tau": tau})
        rows.append(st.to_dict())
    io.write_json(out / "invert.json", rows)
    _emit(rows)


def cmd_solve(args, cfg):
    manifest = run_pipeline(cfg, report=not args.no_report)
    _emit({"status": manifest["status"], "states": manifest["states"],
           "manifest": str(Path(cfg.run.output_dir) / "manifest.json")})


def cmd_verify(args, cfg):
    src = Path(args.input) if args.input else Path(cfg.run.output_dir)
    q0 = io.load_field(src / "potential")
    sd = io.load_scattering(src / "scattering")
    _refuse_exceptional(sd)
    rows = []
    for tau in cfg.run.tau:
        st = invert(sd, cfg, tau)
        entry = st.to_dict()
        q_ref = reference_solution(q0, tau, st.q.grid)
        if tau == 0:
            entry["roundtrip_error"] = relative_error(st.q.values, q_ref.values.real)
        entry.update(verify(sd, q0, st, cfg, q_ref=q_ref))
        rows.append(entry)
    io.write_json(_out(cfg) / "verify.json", rows)
    _emit(rows)


def cmd_export_csv(args, cfg):
    src = Path(_need_input(args))
    stem = src.with_suffix("") if src.suffix in (".json", ".bin") else src
    target = Path(args.out) if args.out else stem.with_suffix(".csv")
    if target.suffix != ".csv":
        target.mkdir(parents=True, exist_ok=True)
        target = target / (stem.name + ".csv")
    if stem.with_suffix(".mask.bin").exists():
        io.scattering_to_csv(io.load_scattering(stem), target)
    else:
        io.field_to_csv(io.load_field(stem), target)
    _emit({"csv": str(target)})


COMMANDS = {
    "gen-potential": (cmd_gen_potential, "build the potential from the config"),
    "classify": (cmd_classify, "classify the potential (critical / subcritical / supercritical)"),
    "forward": (cmd_forward, "compute scattering data"),
    "evolve": (cmd_evolve, "evolve scattering data to each --tau"),
    "invert": (cmd_invert, "reconstruct q and u at each --tau"),
    "solve": (cmd_solve, "run the full pipeline and write manifest.json"),
    "verify": (cmd_verify, "check reconstructions against the direct integrator"),
    "export-csv": (cmd_export_csv, "write a field or scattering bundle as CSV"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (file for export-csv)")
    common.add_argument("--tau", metavar="T", type=float, action="append",
                        help="evolution time; repeat for several")
    common.add_argument("--workers", metavar="N", type=int, help="worker processes")
    common.add_argument("--subk-model", action="store_true",
                        help="fill the excluded small-k disk with the asymptotic model")
    common.add_argument("--input", metavar="PATH", help="input bundle (potential or scattering data)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="nvscatter", description="Inverse scattering solver for the zero-energy Novikov-Veselov equation.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "solve":
            p.add_argument("--no-report", action="store_true", help="skip the PNG figures")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        COMMANDS[args.command][0](args, cfg)
    except NVError as exc:
        stage = getattr(exc, "stage", None)
        prefix = f"[{stage}] " if stage else ""
        print(f"nvscatter: {type(exc).__name__}: {prefix}{exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
