"""On-disk formats.

A field is a pair ``name.json`` + ``name.bin``: the JSON sidecar holds
``{"n", "L", "kind", "dtype": "c128"}`` and the binary file the raw
little-endian complex128 samples in C order.  Scattering data add
``name.mask.bin`` (uint8, 1 = masked) and carry ``tau`` plus the k-grid
parameters in the sidecar.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .field import Field, Grid2D
from .scatter import KGrid, ScatteringData

__all__ = [
    "save_field",
    "load_field",
    "save_scattering",
    "load_scattering",
    "field_to_csv",
    "scattering_to_csv",
    "write_json",
]

_DTYPE = "<c16"


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _stem(path) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".json", ".bin") else p


def save_field(f: Field, path, extra: dict | None = None) -> Path:
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    meta = {"n": f.grid.n, "L": f.grid.L, "kind": f.grid.kind, "dtype": "c128", "real": f.real}
    if extra:
        meta.update(extra)
    write_json(stem.with_suffix(".json"), meta)
    np.ascontiguousarray(f.values, dtype=_DTYPE).tofile(stem.with_suffix(".bin"))
    return stem


def _read_meta(stem: Path) -> dict:
    meta_path = stem.with_suffix(".json")
    if not meta_path.is_file():
        raise ConfigurationError(f"missing sidecar {meta_path}")
    meta = json.loads(meta_path.read_text())
    if meta.get("dtype") != "c128":
        raise ConfigurationError(f"unsupported dtype {meta.get('dtype')!r}")
    return meta


def load_field(path) -> Field:
    stem = _stem(path)
    meta = _read_meta(stem)
    n = int(meta["n"])
    vals = np.fromfile(stem.with_suffix(".bin"), dtype=_DTYPE)
    if vals.size != n * n:
        raise ConfigurationError(f"{stem}.bin holds {vals.size} samples, expected {n * n}")
    return Field(Grid2D(float(meta["L"]), n, meta.get("kind", "x")), vals.reshape(n, n),
                 real=bool(meta.get("real", False)))


def save_scattering(sd: ScatteringData, path) -> Path:
    kg = sd.kgrid
    extra = {
        "tau": sd.tau,
        "k_max": kg.k_max,
        "m": kg.m,
        "k_min": kg.k_min,
        "ray_lo": kg.ray_lo,
        "ray_hi": kg.ray_hi,
        "ray_count": kg.ray_count,
        "ray_angle": kg.ray_angle,
        "ray_t": np.stack([sd.ray_t.real, sd.ray_t.imag], axis=-1),
        "ray_exceptional": sd.ray_exceptional.astype(bool),
        "rings": list(sd.rings),
    }
    stem = save_field(Field(kg.grid, sd.t), path, extra)
    sd.exceptional.astype(np.uint8).tofile(stem.with_suffix(".mask.bin"))
    return stem


def load_scattering(path) -> ScatteringData:
    stem = _stem(path)
    meta = _read_meta(stem)
    f = load_field(stem)
    kg = KGrid(k_max=float(meta["k_max"]), m=int(meta["m"]), k_min=float(meta["k_min"]),
               ray_lo=float(meta["ray_lo"]), ray_hi=float(meta["ray_hi"]),
               ray_count=int(meta["ray_count"]), ray_angle=float(meta["ray_angle"]))
    exc = np.fromfile(stem.with_suffix(".mask.bin"), dtype=np.uint8).reshape(kg.m, kg.m).astype(bool)
    ray = np.asarray(meta.get("ray_t", []), dtype=float).reshape(-1, 2)
    return ScatteringData(kg, f.values, exc, float(meta["tau"]), ray[:, 0] + 1j * ray[:, 1],
                          np.asarray(meta.get("ray_exceptional", []), dtype=bool), list(meta.get("rings", [])))


def field_to_csv(f: Field, path):
    pts = f.grid.points.ravel()
    vals = f.values.ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "re", "im"])
        for p, v in zip(pts, vals):
            w.writerow([f"{p.real:.10g}", f"{p.imag:.10g}", f"{v.real:.17g}", f"{v.imag:.17g}"])


def scattering_to_csv(sd: ScatteringData, path):
    pts = sd.kgrid.points.ravel()
    t = sd.t.ravel()
    mask = sd.mask.ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k1", "k2", "re_t", "im_t", "masked"])
        for p, v, mk in zip(pts, t, mask):
            w.writerow([f"{p.real:.10g}", f"{p.imag:.10g}", f"{v.real:.17g}", f"{v.imag:.17g}", int(mk)])
