import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from robustpois.harness.cli import main
from robustpois.harness.config import ConfigError, parse_config
from robustpois.harness.files import SeriesFormatError, dumps, fmt, read_series_csv
from robustpois.model import HyperParams, ModelParams, ObservationSet, objective
from robustpois.prox import soft_threshold
from robustpois.sim import generate_run

from oracles import golden_section

MINIMAL = "p = 2\nq = 0\nlambda = 5\nmu = 10\n"


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# config


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    h = cfg.hyper()
    assert (h.p, h.q, h.lam, h.mu) == (2, 0, 5.0, 10.0)
    assert (h.r, h.s, h.tau, h.eps) == (0.5, 1.0, 1e-4, 1e-6)
    assert cfg.solver == "hybrid"


def test_comments_and_blank_lines():
    cfg = parse_config("# header\n\np = 1  # order\nq=0\nlambda=1\nmu=0\nsolver = palm\n")
    assert cfg.p == 1 and cfg.mu == 0.0 and cfg.solver == "palm"


@pytest.mark.parametrize(
    "line, fragment",
    [
        ("r = 1.5", "(0, 1]"),
        ("r = 0", "(0, 1]"),
        ("lambda = 0", "lambda"),
        ("mu = -1", "mu"),
        ("observed_fraction = 0", "(0, 1]"),
        ("solver = newton", "fista"),
        ("p = 1.5", "p"),
        ("seed = -1", "2**64"),
    ],
)
def test_out_of_range_rejected(line, fragment):
    with pytest.raises(ConfigError) as err:
        parse_config("q = 0\n" + line + "\n")
    msg = str(err.value)
    assert "line 2" in msg and fragment in msg


def test_duplicate_key_reports_both_lines():
    with pytest.raises(ConfigError, match=r"line 4: duplicate key 'mu' \(first set on line 2\)"):
        parse_config("p = 1\nmu = 1\nq = 0\nmu = 2\n")


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown key 'alpha'"):
        parse_config(MINIMAL + "alpha = 3\n")


def test_missing_equals_rejected():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("p 3\n")


def test_missing_model_keys():
    cfg = parse_config("p = 1\n")
    with pytest.raises(ConfigError, match="lambda, mu"):
        cfg.hyper()


def test_prox_grid_order_checked():
    with pytest.raises(ConfigError, match="prox_t_min"):
        parse_config("prox_t_min = 2\nprox_t_max = 1\n")


def test_seed_override():
    cfg = parse_config(MINIMAL + "seed = 3\n").with_seed(2**64 - 1)
    assert cfg.seed == 2**64 - 1 and cfg.true_model().seed == 2**64 - 1
    with pytest.raises(ConfigError):
        cfg.with_seed(2**64)


def test_relative_input_resolved(tmp_path):
    cfg = parse_config(MINIMAL + "input = data/y.csv\n", base_dir=tmp_path)
    assert cfg.input == str(tmp_path / "data" / "y.csv")


# files


def test_read_three_rows_all_observed(tmp_path):
    obs = read_series_csv(write(tmp_path / "y.csv", "t,y,observed\n1,3,1\n2,0,1\n3,5,1\n"))
    assert obs.mask.tolist() == [True, True, True]
    assert obs.values.tolist() == [3.0, 0.0, 5.0]


def test_read_missing_row(tmp_path):
    obs = read_series_csv(write(tmp_path / "y.csv", "t,y,observed\n1,3,1\n2,,0\n3,5,1\n"))
    assert obs.mask.tolist() == [True, False, True]
    assert obs.values.tolist() == [3.0, 5.0]


def test_unobserved_value_ignored(tmp_path):
    obs = read_series_csv(write(tmp_path / "y.csv", "t,y,observed\n1,3,1\n2,-7,0\n"))
    assert obs.mask.tolist() == [True, False]


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("1,3,1\n2,-1,1\n", "row 3"),
        ("1,3,1\n3,1,1\n", "contiguous"),
        ("1,3,1\n2,x,1\n", "row 3"),
        ("1,3,1\n2,1,2\n", "observed"),
        ("1,3\n", "row 2"),
        ("1,,0\n", "no observed rows"),
        ("", "no data rows"),
        ("1,nan,1\n", "finite"),
    ],
)
def test_malformed_series_rejected(tmp_path, body, fragment):
    with pytest.raises(SeriesFormatError, match=fragment):
        read_series_csv(write(tmp_path / "y.csv", "t,y,observed\n" + body))


def test_bad_header_rejected(tmp_path):
    with pytest.raises(SeriesFormatError, match="header"):
        read_series_csv(write(tmp_path / "y.csv", "time,y,observed\n1,3,1\n"))


def test_number_format_round_trips():
    for x in (0.1, 1 / 3, 1e-300, 123456789.123456789, -2.5e17):
        assert float(fmt(x)) == x
    assert fmt(None) == "" and fmt(True) == "1" and fmt(np.int64(4)) == "4"


def test_json_is_valid_and_stable():
    doc = {"x": 0.1, "v": np.array([1.0, 2.5]), "n": None, "bad": math.nan, "s": 'a"b'}
    text = dumps(doc)
    back = json.loads(text)
    assert back == {"x": 0.1, "v": [1.0, 2.5], "n": None, "bad": None, "s": 'a"b'}
    assert text == dumps(doc)


# subcommands


SIM = """p = 2
q = 0
lambda = 5
mu = 5
a0_true = 1
a_true = 0.3, -0.2
N = 200
observed_fraction = 0.75
contamination_fraction = 0.025
tau = 1e-5
tau_y = 0.01
init = mean
M = 3
seed = 11
"""


@pytest.fixture
def sim_dir(tmp_path):
    cfg = write(tmp_path / "sim.cfg", SIM)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "sim")]) == 0
    return tmp_path


def test_simulate_round_trip(sim_dir):
    cfg = parse_config(SIM)
    data = generate_run(0, cfg.true_model(), cfg.corruption())
    back = read_series_csv(sim_dir / "sim" / "series.csv")
    assert back == data.obs


def test_simulate_counts(sim_dir):
    truth = read_rows(sim_dir / "sim" / "truth.csv")
    observed = sum(r["observed"] == "1" for r in truth)
    bad = [int(r["t"]) for r in truth if r["contaminated"] == "1"]
    assert observed == 150
    assert len(bad) == 4  # 2.5% of 150, rounded half up
    listed = [int(r["t"]) for r in read_rows(sim_dir / "sim" / "contamination.csv")]
    assert listed == bad
    series = read_rows(sim_dir / "sim" / "series.csv")
    assert all(float(series[t - 1]["y"]) == 20.0 for t in bad)


def test_simulate_deterministic(sim_dir):
    cfg = sim_dir / "sim.cfg"
    assert main(["simulate", "--config", str(cfg), "--out", str(sim_dir / "again")]) == 0
    for name in ("series.csv", "truth.csv", "contamination.csv"):
        assert (sim_dir / "sim" / name).read_bytes() == (sim_dir / "again" / name).read_bytes()
    assert main(["simulate", "--config", str(cfg), "--out", str(sim_dir / "other"), "--seed", "12"]) == 0
    assert (sim_dir / "sim" / "series.csv").read_bytes() != (sim_dir / "other" / "series.csv").read_bytes()


def test_fit_constant_series(tmp_path):
    rows = "".join(f"{t},4,1\n" for t in range(1, 41))
    write(tmp_path / "y.csv", "t,y,observed\n" + rows)
    cfg = write(
        tmp_path / "fit.cfg",
        "input = y.csv\np = 0\nq = 0\nlambda = 50\nmu = 0\ntau = 1e-3\neps = 1e-12\nsolver = palm\n",
    )
    assert main(["fit", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    vals = np.full(40, 4.0)
    obs = ObservationSet.from_series(vals)
    hyper = HyperParams(0, 0, lam=50.0, mu=0.0)
    ref = golden_section(lambda a0: objective(ModelParams(a0), vals, obs, hyper), 0.0, 3.0)
    assert report["params"]["a0"] == pytest.approx(ref, abs=1e-5)
    assert report["params"]["a0"] == pytest.approx(math.log(5.0), abs=1e-5)
    assert report["converged"] is True
    assert report["neg_log_likelihood"] is not None


def test_fit_outputs(sim_dir):
    write(sim_dir / "fit.cfg", SIM + "input = sim/series.csv\n")
    out = sim_dir / "fit"
    assert main(["fit", "--config", str(sim_dir / "fit.cfg"), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert set(report) >= {"converged", "iterations", "objective", "neg_log_likelihood", "params"}
    assert len(report["params"]["a"]) == 2 and report["params"]["b"] == []
    rows = read_rows(out / "fitted.csv")
    assert len(rows) == 200
    for r in rows:
        if r["observed"] == "0":
            assert r["y_tilde"] == "" and r["residual"] == ""
        else:
            assert float(r["residual"]) == float(r["y_hat"]) - float(r["y_tilde"])
    first = (out / "report.json").read_bytes(), (out / "fitted.csv").read_bytes()
    assert main(["fit", "--config", str(sim_dir / "fit.cfg"), "--out", str(out)]) == 0
    assert first == ((out / "report.json").read_bytes(), (out / "fitted.csv").read_bytes())


def test_fit_nll_null_without_prior(sim_dir):
    write(sim_dir / "fit.cfg", SIM.replace("mu = 5", "mu = 0") + "input = sim/series.csv\n")
    assert main(["fit", "--config", str(sim_dir / "fit.cfg"), "--out", str(sim_dir / "fit")]) == 0
    assert json.loads((sim_dir / "fit" / "report.json").read_text())["neg_log_likelihood"] is None


def test_fit_max_iters_exit_code(sim_dir):
    write(sim_dir / "fit.cfg", SIM + "input = sim/series.csv\nmax_iters = 3\n")
    assert main(["fit", "--config", str(sim_dir / "fit.cfg"), "--out", str(sim_dir / "fit")]) == 2
    assert json.loads((sim_dir / "fit" / "report.json").read_text())["converged"] is False


def test_fit_input_errors(tmp_path, capsys):
    cfg = write(tmp_path / "a.cfg", MINIMAL)
    assert main(["fit", "--config", str(cfg)]) == 1
    cfg = write(tmp_path / "b.cfg", MINIMAL + "input = nope.csv\n")
    assert main(["fit", "--config", str(cfg)]) == 1
    assert main(["fit", "--config", str(tmp_path / "missing.cfg")]) == 1
    write(tmp_path / "neg.csv", "t,y,observed\n1,-2,1\n")
    cfg = write(tmp_path / "c.cfg", MINIMAL + "input = neg.csv\n")
    assert main(["fit", "--config", str(cfg)]) == 1
    assert "row 2" in capsys.readouterr().err


def test_experiment_single_run(tmp_path):
    cfg = write(tmp_path / "e.cfg", SIM.replace("M = 3", "M = 1"))
    assert main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "e")]) == 0
    summary = json.loads((tmp_path / "e" / "summary.json").read_text())
    rows = read_rows(tmp_path / "e" / "estimates.csv")
    assert [r["coefficient"] for r in rows] == ["a0", "a1", "a2"]
    for r in rows:
        st = summary["coefficients"][r["coefficient"]]
        assert st["min"] == st["q1"] == st["median"] == st["q3"] == st["max"] == float(r["estimate"])
    assert summary["M"] == 1 and summary["converged"] == 1


def test_experiment_parallel_identical(tmp_path):
    write(tmp_path / "s.cfg", SIM)
    write(tmp_path / "p.cfg", SIM + "workers = 2\n")
    assert main(["experiment", "--config", str(tmp_path / "s.cfg"), "--out", str(tmp_path / "s")]) == 0
    assert main(["experiment", "--config", str(tmp_path / "p.cfg"), "--out", str(tmp_path / "p")]) == 0
    assert (tmp_path / "s" / "estimates.csv").read_bytes() == (tmp_path / "p" / "estimates.csv").read_bytes()
    assert (tmp_path / "s" / "summary.json").read_bytes() == (tmp_path / "p" / "summary.json").read_bytes()


def test_experiment_failures_exit_two(tmp_path):
    bad = SIM.replace("tau = 1e-5", "tau = 1").replace("M = 3", "M = 2") + "solver = palm\nmax_iters = 50\n"
    write(tmp_path / "f.cfg", bad)
    assert main(["experiment", "--config", str(tmp_path / "f.cfg"), "--out", str(tmp_path / "f")]) == 2
    rows = read_rows(tmp_path / "f" / "estimates.csv")
    assert all(r["estimate"] == "" and r["error"] for r in rows)
    summary = json.loads((tmp_path / "f" / "summary.json").read_text())
    assert summary["succeeded"] == 0 and set(summary["failures"]) == {"0", "1"}


PROX = "prox_t_min = -3\nprox_t_max = 3\nprox_t_step = 0.25\nprox_r = 0.5, 1\nprox_mu = 0.5, 1\nprox_mu_rel = 0.5, 2\n"


@pytest.fixture
def prox_dir(tmp_path):
    cfg = write(tmp_path / "p.cfg", PROX)
    assert main(["prox-curve", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    return tmp_path


def test_prox_curve_soft_threshold_column(prox_dir):
    rows = [r for r in read_rows(prox_dir / "shrink.csv") if r["r"] == "1"]
    assert len(rows) == 2 * 25
    for r in rows:
        assert float(r["shrink"]) == soft_threshold(float(r["t_prime"]), float(r["mu"]))


def test_prox_curve_twice_critical_is_zero(prox_dir):
    rows = [r for r in read_rows(prox_dir / "shrink.csv") if r["mu_rel"] == "2"]
    assert len(rows) == 25
    assert all(float(r["shrink"]) == 0.0 for r in rows)


def test_prox_curve_endpoints(prox_dir):
    for name, col in (("shrink.csv", "t_prime"), ("energy.csv", "t")):
        ts = sorted({float(r[col]) for r in read_rows(prox_dir / name)})
        assert ts[0] == -3.0 and ts[-1] == 3.0 and len(ts) == 25


def test_prox_curve_g_only_for_positive_t(prox_dir):
    for r in read_rows(prox_dir / "energy.csv"):
        has_g = r["g"] != ""
        assert has_g == (r["r"] == "0.5" and float(r["t"]) > 0)


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path / "p.cfg", "prox_t_step = 1\n")
    done = subprocess.run(
        [sys.executable, "-m", "robustpois", "prox-curve", "--config", str(cfg), "--out", str(tmp_path)],
        capture_output=True,
    )
    assert done.returncode == 0
    assert (tmp_path / "shrink.csv").exists()
