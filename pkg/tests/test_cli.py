import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from wqed import cli

FIG3A = {"omega_c": 1.0, "omega_a": 1.0, "g": 0.5, "gamma_wg": 0.09}
FIG5 = {"omega_c": 6.0446, "omega_a": 6.0444, "g": 0.00573, "gamma_wg": 0.000361,
        "gamma_a": 0.00086, "unit": "GHz"}


def config(tmp_path, body, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(body))
    return path


def run(tmp_path, command, body, *extra):
    out = tmp_path / "out"
    code = cli.main([command, "--config", str(config(tmp_path, body)), "--out", str(out), *extra])
    return code, out


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def test_spectrum_fig3a(tmp_path):
    code, out = run(tmp_path, "spectrum", {"params": FIG3A, "scan": {"omega_min": 0.0, "omega_max": 2.0,
                                                                      "n_points": 2001}})
    assert code == 0
    data = read_csv(out / "spectrum.csv")
    assert list(data) == ["omega", "T", "R", "Pc", "Pa", "phase"]
    for w in (0.5, 1.5):
        assert data["T"][np.argmin(np.abs(data["omega"] - w))] < 1e-20
    assert data["T"][1000] == pytest.approx(1.0) and data["omega"][1000] == pytest.approx(1.0)


def test_spectrum_fig4a_dip(tmp_path):
    body = {"params": dict(FIG3A, gamma_c=0.05), "scan": {"omega_min": 0.0, "omega_max": 2.0, "n_points": 2001}}
    code, out = run(tmp_path, "spectrum", body)
    data = read_csv(out / "spectrum.csv")
    k = np.argmin(np.abs(data["omega"] - 1.5))
    assert data["T"][k] == pytest.approx((0.05 / 0.14) ** 2, rel=1e-12)


def test_spectrum_empty_range(tmp_path):
    code, out = run(tmp_path, "spectrum", {"params": FIG3A, "scan": {"omega_min": 1.0, "omega_max": 1.0,
                                                                      "n_points": 10}})
    assert code == 2 and not out.exists()


def test_extrema(tmp_path):
    code, out = run(tmp_path, "extrema", {"params": FIG3A, "extrema": {"bracket": [-0.5, 2.5], "fwhm": True}})
    assert code == 0
    ext = json.loads((out / "extrema.json").read_text())
    assert [e["kind"] for e in ext] == ["minimum", "maximum", "minimum"]
    assert ext[0]["omega"] == pytest.approx(0.5, abs=1e-9) and ext[0]["fwhm"] == pytest.approx(0.09)


def test_extrema_none_found_is_numerical(tmp_path):
    code, out = run(tmp_path, "extrema", {"params": FIG3A, "extrema": {"bracket": [3.0, 4.0]}})
    assert code == 3 and not out.exists()


def test_evolve(tmp_path):
    body = {"params": FIG3A, "packet": {"omega_carrier": 1.5, "record_every": 50, "snapshot": True}}
    code, out = run(tmp_path, "evolve", body)
    assert code == 0
    res = json.loads((out / "transport.json").read_text())
    assert res["T"] <= 0.02 and res["R"] >= 0.97
    series = read_csv(out / "timeseries.csv")
    assert list(series) == ["time", "N", "Pc", "Pa"]
    assert np.max(np.abs(series["N"] - 1)) < 1e-12
    assert (out / "snapshot.csv").read_text().startswith("x,Re_phiR,Im_phiR,Re_phiL,Im_phiL")


def test_switch(tmp_path):
    body = {"params": dict(FIG3A, g=0.03), "switch": {"off": {"omega_a": 3.0}}}
    code, out = run(tmp_path, "switch", body)
    res = json.loads((out / "switch.json").read_text())
    assert code == 0 and res["T_on"] == pytest.approx(1.0) and res["T_off"] < 1e-3
    assert res["contrast"] >= 1e3


def test_reservoir_check(tmp_path):
    body = {"params": dict(FIG3A, gamma_a=0.05), "bath": {"n_oscillators": 2000, "span_halfwidth": 1.0,
                                                         "dt": 0.1}}
    code, out = run(tmp_path, "reservoir-check", body)
    assert code == 0
    res = json.loads((out / "reservoir.json").read_text())
    assert set(res) >= {"gamma_target", "gamma_est", "max_scatter_deviation"}
    assert res["gamma_est"] == pytest.approx(0.05, rel=0.05)
    assert (out / "decay.csv").read_text().startswith("time,abs_ea")


def test_reservoir_check_horizon(tmp_path):
    body = {"params": dict(FIG3A, gamma_a=0.05), "bath": {"n_oscillators": 200, "span_halfwidth": 1.0,
                                                         "t_final": 400.0}}
    code, out = run(tmp_path, "reservoir-check", body)
    assert code == 2 and not out.exists()


def test_fit_synthetic_with_in_tune_comparison(tmp_path):
    body = {"params": FIG5, "seed": 7,
            "fit": {"synthesize": {"noise_sigma": 0.01}, "initial": {"g": 0.0068}, "compare_in_tune": True}}
    code, out = run(tmp_path, "fit", body)
    assert code == 0
    res = json.loads((out / "fit.json").read_text())
    assert res["converged"] and res["params"]["g"] == pytest.approx(0.00573, rel=0.02)
    assert res["in_tune_fit"]["residual_rms"] > res["residual_rms"]


def test_fit_from_file(tmp_path):
    from wqed import fitting
    p = fitting.fig5_params()
    w = fitting.fit_window(p, 120)
    T = fitting.model_transmission(p, w)
    (tmp_path / "data.csv").write_text("omega,T\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(w, T)))
    code, out = run(tmp_path, "fit", {"params": FIG5, "fit": {"data": "data.csv", "free": ["g", "omega_c"]}})
    assert code == 0
    assert json.loads((out / "fit.json").read_text())["params"]["g"] == pytest.approx(0.00573, rel=1e-6)


def test_fit_missing_file(tmp_path):
    code, out = run(tmp_path, "fit", {"params": FIG5, "fit": {"data": "nope.csv"}})
    assert code == 2 and not out.exists()


def test_fit_not_converged_writes_partial(tmp_path):
    body = {"params": FIG5, "fit": {"synthesize": {"noise_sigma": 0.0}, "initial": {"g": 0.0068},
                                    "max_iter": 5}}
    code, out = run(tmp_path, "fit", body)
    assert code == 4
    assert json.loads((out / "fit.json").read_text())["converged"] is False


def test_seed_override_and_determinism(tmp_path):
    body = {"params": FIG5, "seed": 1, "fit": {"synthesize": {"noise_sigma": 0.01}, "free": ["g", "omega_c"]}}
    path = config(tmp_path, body)
    outs = []
    for tag, seed in (("a", None), ("b", None), ("c", "2")):
        args = ["fit", "--config", str(path), "--out", str(tmp_path / tag)]
        if seed:
            args += ["--seed", seed]
        assert cli.main(args) == 0
        outs.append((tmp_path / tag / "fit.json").read_bytes())
    assert outs[0] == outs[1] and outs[0] != outs[2]


@pytest.mark.parametrize("body", [
    {"params": FIG3A},
    {"params": FIG3A, "scan": {"omega_min": 0, "omega_max": 2, "n_points": 5}, "switch": {"off": {}}},
    {"params": FIG3A, "extrema": {"bracket": [0, 2]}},
    {"params": FIG3A, "scan": {"omega_min": 0, "omega_max": 2, "n_points": 5, "colour": 1}},
    {"params": dict(FIG3A, gamma_wg=0.0), "scan": {"omega_min": 0, "omega_max": 2, "n_points": 5}},
    {"params": FIG3A, "scan": {"omega_min": "zero", "omega_max": 2, "n_points": 5}},
    {"scan": {"omega_min": 0, "omega_max": 2, "n_points": 5}},
])
def test_config_errors(tmp_path, body):
    code, out = run(tmp_path, "spectrum", body)
    assert code == 2 and not out.exists()


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert cli.main(["spectrum", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_console_script(tmp_path):
    path = config(tmp_path, {"params": FIG3A, "scan": {"omega_min": 0, "omega_max": 2, "n_points": 5}})
    proc = subprocess.run([sys.executable, "-m", "wqed.cli", "spectrum", "--config", str(path),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0 and (tmp_path / "o" / "spectrum.csv").exists()
