import json
import subprocess
import sys

import numpy as np
import pytest

from petzlyap.cli import CSV_COLUMNS, fmt, main


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(path)


@pytest.fixture(autouse=True)
def quiet(monkeypatch):
    monkeypatch.setenv("LYAP_LOG", "quiet")


def _load_csv(path):
    text = path.read_bytes().decode()
    assert "\r" not in text
    lines = text.split("\n")
    assert lines[-1] == ""
    assert lines[0] == ",".join(CSV_COLUMNS)
    return np.array([[float(x) for x in ln.split(",")] for ln in lines[1:-1]])


def test_fmt_roundtrip():
    for x in (0.1, 1 / 3, 1e-300, -2.5e17, np.pi):
        assert float(fmt(x)) == x
    assert fmt(float("nan")) == "nan"


def test_simulate_photon_loss(tmp_path):
    cfg = _write(tmp_path, "c.json", {
        "model": "photon_loss",
        "params": {"nmax": 10},
        "integrator": {"h": 0.001, "t_end": 15},
        "initial_states": [{"kind": "coherent", "alpha": [1, 0]}],
    })
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--output-dir", str(out)]) == 0
    data = _load_csv(out / "simulate_traj00_coherent_1.csv")
    d_trace = data[:, 4]
    assert d_trace[0] > 0.5 and d_trace[-1] < 1e-3
    assert np.all(np.diff(d_trace) <= 1e-15)
    assert np.all(np.isnan(data[:, 1]))
    rep = json.loads((out / "simulate_report.json").read_text())
    assert rep["steady_state"]["kernel_dimension"] == 1
    assert rep["steady_state"]["full_rank"] is False
    assert rep["certified"] is None


def test_simulate_eq18_monotone_and_recomputable(tmp_path):
    cfg = _write(tmp_path, "c.json", {
        "model": "eq18",
        "params": {"nmax": 6, "beta": 1.0},
        "integrator": {"h": 0.001, "t_end": 4, "sample_every": 50},
        "initial_states": [{"kind": "vacuum"}, {"kind": "cat2", "alpha": 0.8}, {"kind": "random"}],
    })
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--output-dir", str(out)]) == 0
    rep = json.loads((out / "simulate_report.json").read_text())
    assert rep["certified"] is True
    for t in rep["trajectories"]:
        data = _load_csv(out / t["csv"])
        v, rate = data[:, 1], data[:, 2]
        assert np.all(np.diff(v) <= 0)
        # verdicts follow from the CSV alone
        assert t["strict_rate"]["max_rate"] == rate[v > 1e-8].max()
        assert t["final_d_bures"] == data[-1, 5]
        assert t["monotone"]["worst_violation"] == max(0.0, np.diff(v)[v[:-1] > 1e-9].max())


def test_determinism_and_jobs(tmp_path):
    cfg = _write(tmp_path, "c.json", {
        "model": "eq18", "params": {"nmax": 5, "beta": 0.8},
        "integrator": {"h": 0.002, "t_end": 1}, "seed": 11,
    })
    outs = []
    for jobs in ("1", "1", "3"):
        out = tmp_path / f"o{len(outs)}"
        assert main(["simulate", "--config", cfg, "--output-dir", str(out), "--jobs", jobs]) == 0
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir() if "timings" not in p.name)
    assert len(names) == 6
    for name in names:
        blobs = [(o / name).read_bytes() for o in outs]
        assert blobs[0] == blobs[1] == blobs[2], name


@pytest.mark.parametrize("obj,needle", [
    ({"integrator": {"h": 0}}, "integrator.h"),
    ({"integrator": {"h": 0.1, "t_end": 0.01}}, "integrator.t_end"),
    ({"model": "nope"}, "model"),
    ({"initial_states": [{"kind": "coherent", "alpha": [1, 2, 3]}]}, "initial_states[0].alpha"),
    ({"measure": [[1.5, 1.0]]}, "measure"),
    ({"model": "custom"}, "hamiltonian"),
    ({"model": "custom", "hamiltonian": "missing.json"}, "does not exist"),
    ({"params": {"beta": [1, 1]}}, "allow_complex_beta"),
    ({"bogus": 1}, "bogus"),
])
def test_config_errors(tmp_path, capsys, obj, needle):
    cfg = _write(tmp_path, "c.json", obj)
    assert main(["simulate", "--config", cfg, "--output-dir", str(tmp_path / "o")]) == 2
    assert needle in capsys.readouterr().err


def test_config_syntax_error_has_line(tmp_path, capsys):
    cfg = _write(tmp_path, "c.json", '{"model": "eq18",\n "seed": }')
    assert main(["steady-state", "--config", cfg]) == 2
    assert "line 2" in capsys.readouterr().err


def test_bad_log_level(tmp_path, monkeypatch):
    monkeypatch.setenv("LYAP_LOG", "chatty")
    assert main(["steady-state", "--output-dir", str(tmp_path)]) == 2


def test_override_h_zero(tmp_path):
    assert main(["simulate", "--h", "0", "--output-dir", str(tmp_path)]) == 2


def test_steady_state_photon_loss(tmp_path):
    cfg = _write(tmp_path, "c.json", {"model": "photon_loss", "params": {"nmax": 8}})
    assert main(["steady-state", "--config", cfg, "--output-dir", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "steady_state.json").read_text())
    rho = np.array(rep["rho_inf"])[..., 0] + 1j * np.array(rep["rho_inf"])[..., 1]
    assert rep["kernel_dimension"] == 1
    assert abs(rho[0, 0] - 1) < 1e-12


def test_steady_state_eq18_crosscheck(tmp_path):
    assert main(["steady-state", "--nmax", "16", "--beta", "1", "--output-dir", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "steady_state.json").read_text())
    chk = rep["checks"]["equilibrium_crosscheck"]
    assert chk["pass"] and chk["bures_distance"] < 1e-3


def test_steady_state_pure_drive(tmp_path):
    cfg = _write(tmp_path, "c.json", {"model": "eq16", "params": {"beta": 1.0, "nmax": 30}})
    assert main(["steady-state", "--config", cfg, "--output-dir", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "steady_state.json").read_text())
    assert rep["checks"]["coherent_fidelity"]["fidelity"] > 1 - 1e-5


def test_custom_model(tmp_path):
    (tmp_path / "l.json").write_text(json.dumps([[0, [0.5, 0]], [0, 0]]))
    cfg = _write(tmp_path, "c.json", {
        "model": "custom",
        "hamiltonian": [[1, [0, -0.3]], [[0, 0.3], -1]],
        "jumps": ["l.json", [[0.2, 0], [0, -0.2]]],
        "initial_states": [{"kind": "inline", "rho": [[0.5, 0.1], [0.1, 0.5]]}, {"kind": "mixed"}],
        "integrator": {"h": 0.01, "t_end": 2},
    })
    assert main(["simulate", "--config", cfg, "--output-dir", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "simulate_report.json").read_text())
    assert rep["steady_state"]["full_rank"]
    assert rep["certified"] is True


def test_contraction_small(tmp_path):
    cfg = _write(tmp_path, "c.json", {
        "seed": 2,
        "measure": [[0.5, 1.0]],
        "contraction": {"channels": 5, "pairs": 4, "flow_generators": 1, "measures": 1, "flow_t_end": 0.2},
    })
    outs = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        assert main(["contraction", "--config", cfg, "--output-dir", str(out)]) == 0
        outs.append((out / "contraction_report.json").read_bytes())
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert rep["total_violations"] == 0
    assert rep["lindblad_flow"]["measures"] == 2


def test_contraction_unitary(tmp_path):
    cfg = _write(tmp_path, "c.json", {
        "contraction": {"channels": 5, "pairs": 4, "unitary_only": True, "flow_generators": 0},
    })
    assert main(["contraction", "--config", cfg, "--output-dir", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "contraction_report.json").read_text())
    for v in rep["channels"]["distances"].values():
        assert v["worst_isometry_defect"] < 1e-9


def test_cat_demo_small(tmp_path):
    args = ["cat-demo", "--nmax", "10", "--beta", "1", "--output-dir", str(tmp_path)]
    assert main(args) == 0
    rep = json.loads((tmp_path / "cat_demo_report.json").read_text())
    assert rep["failed"] == []
    assert rep["verdicts"]["lyapunov_certification"]["pass"] is True
    assert rep["verdicts"]["commutant_dimension"]["value"] == 1


def test_cat_demo_without_photon_loss(tmp_path):
    args = ["cat-demo", "--nmax", "12", "--beta", "0.5", "--kappa-c", "0", "--t-end", "5",
            "--output-dir", str(tmp_path)]
    main(args)
    rep = json.loads((tmp_path / "cat_demo_report.json").read_text())
    assert any("rank deficient" in n for n in rep["notices"])
    assert rep["verdicts"]["lyapunov_certification"] == {"pass": None, "skipped": True}
    assert rep["verdicts"]["coherent_equilibrium"]["pass"]


def test_cat_demo_truncation_warning(tmp_path):
    args = ["cat-demo", "--nmax", "10", "--t-end", "0.5", "--output-dir", str(tmp_path)]
    main(args)
    rep = json.loads((tmp_path / "cat_demo_report.json").read_text())
    assert rep["truncation_ok"] is False
    assert rep["truncation_warnings"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "petzlyap", "simulate", "--h", "-1", "--output-dir", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert "integrator.h" in proc.stderr
