import hashlib
import math

import pytest

from cylscat import __version__
from cylscat.classical import BoundaryPoint, scattering_map
from cylscat.cli import DEFAULT_TOLS, default_centers, main
from cylscat.config import parse_config, preset_config
from cylscat.errors import ConfigError
from cylscat.geometry import ModelSpec, bulge, open_channels
from cylscat.io import read_csv

BULGE_CFG = """\
[profile]
kind = bulge
amplitude = 0.3

[model]
h = 0.1
"""


@pytest.fixture
def bulge_cfg(tmp_path):
    p = tmp_path / "bulge.cfg"
    p.write_text(BULGE_CFG)
    return p


def header(path):
    return [ln[2:].rstrip("\n") for ln in open(path) if ln.startswith("#")]


# --- configuration ------------------------------------------------------------


def test_parse_config_fields():
    cfg = parse_config(BULGE_CFG + "[potential]\nV0 = 0.05, 0.0 0.02 ; comment\nV0_width = 0.8\n"
                       "[run]\nh = 0.04, 0.02\nout = res\nthreads = 3\n")
    assert cfg.spec.profile.kind == "bulge" and cfg.spec.profile.amplitude == 0.3
    assert cfg.spec.potential.V0.coeffs == (0.05, 0.0, 0.02) and cfg.spec.potential.V0.width == 0.8
    assert cfg.hs == (0.04, 0.02) and cfg.out == "res" and cfg.threads == 3


def test_config_hash_is_of_text():
    assert parse_config(BULGE_CFG).sha256 == hashlib.sha256(BULGE_CFG.encode()).hexdigest()
    assert parse_config(BULGE_CFG).sha256 != parse_config(BULGE_CFG + "\n").sha256


@pytest.mark.parametrize("text", [
    "[profile]\nkind = bulge\ncolour = red\n",
    "[extras]\nx = 1\n",
    "[profile]\nkind = torus\n",
    "[profile]\namplitude = abc\n",
    "[profile]\nkind = bulge\namplitude = -1.5\n",
    "[model]\nh = -0.1\n",
    "[run]\nthreads = two\n",
    "[potential]\nV0 = 1 x\n",
    "not an ini file",
])
def test_bad_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_presets():
    assert preset_config("cylinder").spec.profile.kind == "constant"
    assert preset_config("hourglass").spec.profile.amplitude == -0.2
    assert preset_config("bulge").spec == parse_config("[profile]\nkind = bulge\n").spec
    with pytest.raises(ConfigError):
        preset_config("torus")


# --- exit codes -----------------------------------------------------------------


def test_verify_free_exits_zero(tmp_path, capsys):
    assert main(["verify", "--suite", "free", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "verify_free.csv")
    assert rows and all(r["passed"] == "true" for r in rows)
    assert "FAIL" not in capsys.readouterr().out


def test_verify_failure_exits_one(tmp_path):
    assert main(["verify", "--suite", "free", "--out", str(tmp_path), "--tol", "verify_scale=0"]) == 1


def test_config_errors_exit_two(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[profile]\nshape = round\n")
    assert main(["kappa", "--config", str(bad), "--theta", "1", "--eta", "0.5", "--out", str(tmp_path)]) == 2
    assert main(["kappa", "--config", str(tmp_path / "missing.cfg"), "--theta", "1", "--eta", "0.5"]) == 2
    assert main(["kappa", "--theta", "1", "--eta", "1.5", "--out", str(tmp_path)]) == 2
    assert main(["kappa", "--theta", "1", "--eta", "0.5", "--tol", "bogus=1", "--out", str(tmp_path)]) == 2
    assert main(["smatrix", "--h", "0.1,x", "--out", str(tmp_path)]) == 2
    assert main(["smatrix", "--threads", "0", "--out", str(tmp_path)]) == 2


def test_numerical_error_exits_three(tmp_path):
    # the dichotomy report is only defined for an hourglass
    assert main(["dichotomy", "--model", "bulge", "--out", str(tmp_path)]) == 3


def test_env_threads(tmp_path, monkeypatch):
    monkeypatch.setenv("CYLSCAT_THREADS", "zero")
    assert main(["smatrix", "--h", "0.3", "--out", str(tmp_path)]) == 2
    monkeypatch.setenv("CYLSCAT_THREADS", "2")
    assert main(["smatrix", "--h", "0.3", "--out", str(tmp_path)]) == 0


def test_tol_names_documented():
    assert set(DEFAULT_TOLS) == {"unitary_input", "power", "husimi_threshold", "verify_scale"}


# --- artifacts ------------------------------------------------------------------


def test_kappa_example(bulge_cfg, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["kappa", "--config", str(bulge_cfg), "--theta", "1.0", "--eta", "0.5", "--out", str(out)]) == 0
    line = capsys.readouterr().out.strip().splitlines()
    assert len(line) == 1
    fields = line[0].split(",")
    ref = scattering_map(BoundaryPoint("R", 1.0, 0.5), bulge())
    assert fields[3] == "exited" and fields[4] == ref.exit.end
    assert float(fields[5]) == pytest.approx(ref.exit.theta, abs=1e-12)
    assert float(fields[6]) == pytest.approx(ref.exit.eta, abs=1e-12)
    assert float(fields[7]) == pytest.approx(ref.t_plus, rel=1e-12)
    hdr = header(out / "kappa.csv")
    assert hdr[0] == f"cylscat {__version__}"
    assert hdr[1] == "config_sha256 " + hashlib.sha256(BULGE_CFG.encode()).hexdigest()
    assert hdr[2] == "command kappa"


def test_smatrix_reruns_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["smatrix", "--model", "hourglass", "--h", "0.2,0.1", "--out", str(a), "--threads", "1"]) == 0
    assert main(["smatrix", "--model", "hourglass", "--h", "0.2,0.1", "--out", str(b), "--threads", "4"]) == 0
    for name in ("smatrix_h0.2.csv", "smatrix_h0.1.csv", "smatrix_h0.1.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rows = read_csv(a / "smatrix_h0.1.csv")
    assert list(rows[0]) == ["m", "tau_m", "re_rL", "im_rL", "re_t", "im_t", "re_rR", "im_rR", "unitarity_defect"]


@pytest.mark.slow
def test_smatrix_prop_thread_independent(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["smatrix-prop", "--model", "cylinder", "--h", "0.2", "--out", str(a), "--threads", "1"]) == 0
    assert main(["smatrix-prop", "--model", "cylinder", "--h", "0.2", "--out", str(b), "--threads", "2"]) == 0
    assert (a / "smatrix_prop_h0.2.csv").read_bytes() == (b / "smatrix_prop_h0.2.csv").read_bytes()
    rows = read_csv(a / "smatrix_prop_h0.2.csv")
    assert max(float(r["rel_err"]) for r in rows) <= 1e-3


def test_equidist_example(bulge_cfg, tmp_path):
    assert main(["equidist", "--config", str(bulge_cfg), "--h", "0.04,0.02", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "equidist.csv")
    assert {r["f_id"] for r in rows} == {"e0", "e1", "e2", "e3", "e4"}
    e0 = [r for r in rows if r["f_id"] == "e0"]
    assert all(float(r["re_trace_scaled"]) == pytest.approx(float(r["h"]) * int(r["dim"])) for r in e0)
    for name in ("hist_h0.04.dat", "hist_h0.04.dat.gp", "trend_e1.dat", "trend_e1.dat.gp"):
        assert (tmp_path / name).exists()
    counts = [int(ln.split()[2]) for ln in open(tmp_path / "hist_h0.02.dat")]
    assert sum(counts) == int(e0[1]["dim"])


def test_equidist_hourglass_needs_flag(tmp_path):
    assert main(["equidist", "--model", "hourglass", "--h", "0.1", "--out", str(tmp_path)]) == 2
    assert main(["equidist", "--model", "hourglass", "--h", "0.1", "--out", str(tmp_path),
                 "--allow-unverified"]) == 0
    assert any("caveat" in ln for ln in header(tmp_path / "equidist.csv"))


def test_other_commands_write_reports(tmp_path):
    o = str(tmp_path)
    assert main(["domain", "--model", "hourglass", "--n-theta", "2", "--n-eta", "11", "--out", o]) == 0
    assert len(read_csv(tmp_path / "domain.csv")) == 22
    assert main(["phases", "--h", "0.2", "--out", o]) == 0
    assert len(read_csv(tmp_path / "phases_h0.2.csv")) == open_channels(ModelSpec(h=0.2)).dim
    assert main(["dichotomy", "--model", "hourglass", "--h", "0.05", "--out", o]) == 0
    assert read_csv(tmp_path / "dichotomy.csv")
    assert main(["coherent", "--h", "0.05", "--eta", "0.4", "--theta", "1.0", "--out", o]) == 0
    assert len(read_csv(tmp_path / "coherent.csv")) == 1
    assert main(["resolvent", "--h", "0.1,0.05", "--n-tau", "3", "--out", o]) == 0
    assert len(read_csv(tmp_path / "resolvent.csv")) == 6
    summary = read_csv(tmp_path / "resolvent_summary.csv")
    assert [r["absorber_sensitive"] for r in summary] == ["false", "false"]
    slope = [ln for ln in header(tmp_path / "resolvent_summary.csv") if ln.startswith("loglog_slope")]
    assert math.isfinite(float(slope[0].split()[1]))


def test_default_centres():
    c = default_centers()
    assert len(c) == 32 and len(set(c)) == 32


def test_tol_overrides_reach_commands(tmp_path):
    o = str(tmp_path)
    # a zero unitarity tolerance rejects any floating-point S_U: numerical error
    assert main(["phases", "--h", "0.2", "--tol", "unitary_input=0", "--out", o]) == 3
    assert main(["equidist", "--h", "0.2", "--tol", "unitary_input=0", "--out", o]) == 3
    assert main(["coherent", "--h", "0.05", "--eta", "0.4", "--tol", "husimi_threshold=0.5", "--out", o]) == 0
