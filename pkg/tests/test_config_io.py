import csv

import numpy as np
import pytest

from nvscatter.config import RunConfig, config_to_ini, load_config, parse_config
from nvscatter.errors import ConfigurationError
from nvscatter.field import Field, make_grid
from nvscatter.io import (
    field_to_csv,
    load_field,
    load_scattering,
    save_field,
    save_scattering,
    scattering_to_csv,
)


def test_defaults():
    cfg = parse_config("")
    assert cfg == RunConfig()
    assert cfg.x_grid().n == 128 and cfg.rec_grid().n == 64
    kg = cfg.k_grid()
    assert (kg.k_max, kg.m) == (6.0, 64)
    assert cfg.run.tau == (0.0, 0.05, 0.1)


def test_parse_values():
    cfg = parse_config(
        "[xgrid]\nL = 5\nn = 64\nrec_n = 32\n"
        "[kgrid]\nk_max = 8\nm = 96\n"
        "[potential]\nfamily = perturbed\neps = -0.25\ncenter_x = 0.5\n"
        "[tolerances]\ntol_eig = auto\nsym_tol = 1e-5\n"
        "[run]\ntau = 0, 0.02 0.04\nsubk_model = yes\nworkers = 3\n"
    )
    assert cfg.xgrid.L == 5.0 and cfg.xgrid.n == 64
    assert cfg.k_grid().m == 96
    spec = cfg.potential_spec()
    assert spec.family == "perturbed" and spec.eps == -0.25 and spec.center == 0.5
    assert cfg.tolerances.tol_eig is None and cfg.tolerances.sym_tol == 1e-5
    assert cfg.run.tau == (0.0, 0.02, 0.04)
    assert cfg.run.subk_model is True and cfg.run.workers == 3
    assert cfg.dbar_config().subk_model


@pytest.mark.parametrize("text", [
    "[mystery]\na = 1\n",
    "[xgrid]\nwidth = 3\n",
    "[xgrid]\nn = many\n",
    "[xgrid]\nn = 100\n",
    "[kgrid]\nk_min_cells = 1\n",
    "[run]\ntau = 0.1, 0.05\n",
    "[run]\ndtau = 0\n",
    "[run]\nsubk_model = maybe\n",
    "[tolerances]\ncgo_tol = -1\n",
    "[potential]\nfamily = gaussian\n",
    "[potential]\nbeta = -2\n",
    "no section header\n",
])
def test_rejects(text):
    with pytest.raises(ConfigurationError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "nope.ini")


def test_ini_roundtrip(tmp_path):
    cfg = parse_config("[run]\ntau = 0, 0.025\nallow_supercritical = true\n[tolerances]\ntol_eig = 1e-7\n")
    again = parse_config(config_to_ini(cfg))
    assert again == cfg
    p = tmp_path / "c.ini"
    p.write_text(config_to_ini(RunConfig()))
    assert load_config(p) == RunConfig()


def test_field_roundtrip(tmp_path):
    g = make_grid(3.0, 32)
    rng = np.random.default_rng(0)
    f = Field(g, rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32)))
    stem = save_field(f, tmp_path / "f.json", extra={"tag": "x"})
    assert (tmp_path / "f.bin").stat().st_size == 32 * 32 * 16
    back = load_field(stem)
    assert np.array_equal(back.values, f.values)
    assert back.grid == g and back.real is False


def test_field_size_mismatch(tmp_path):
    g = make_grid(3.0, 32)
    stem = save_field(g.zeros(), tmp_path / "f")
    np.zeros(10, dtype="<c16").tofile(tmp_path / "f.bin")
    with pytest.raises(ConfigurationError):
        load_field(stem)
    with pytest.raises(ConfigurationError):
        load_field(tmp_path / "absent")


def test_scattering_roundtrip(tmp_path, sd_sub_coarse):
    sd = sd_sub_coarse.with_t(sd_sub_coarse.t, tau=0.03)
    sd.exceptional[3, 4] = True
    stem = save_scattering(sd, tmp_path / "sd")
    assert (tmp_path / "sd.mask.bin").stat().st_size == sd.kgrid.m**2
    back = load_scattering(stem)
    assert np.array_equal(back.t, sd.t)
    assert np.array_equal(back.exceptional, sd.exceptional)
    assert np.array_equal(back.ray_t, sd.ray_t)
    assert back.kgrid == sd.kgrid and back.tau == 0.03 and back.rings == sd.rings
    sd.exceptional[3, 4] = False


def test_csv_exports(tmp_path, sd_sub_coarse):
    g = make_grid(3.0, 16)
    field_to_csv(Field(g, np.full((16, 16), 1 - 2j)), tmp_path / "f.csv")
    rows = list(csv.reader(open(tmp_path / "f.csv")))
    assert rows[0] == ["x1", "x2", "re", "im"] and len(rows) == 257
    assert float(rows[1][0]) == -3.0 and float(rows[1][3]) == -2.0

    scattering_to_csv(sd_sub_coarse, tmp_path / "t.csv")
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["k1", "k2", "re_t", "im_t", "masked"]
    assert len(rows) == sd_sub_coarse.kgrid.m**2 + 1
    assert sum(int(r[4]) for r in rows[1:]) == int(sd_sub_coarse.mask.sum())
