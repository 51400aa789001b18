"""Smoke tests for the python module and the command-line tools."""
import json
import os
import subprocess

import pytest

import pacer

CLI = os.environ.get("PACER_CLI")
GEN = os.environ.get("PACER_GEN")
if CLI:
    CLI = os.path.abspath(CLI)
if GEN:
    GEN = os.path.abspath(GEN)

needs_cli = pytest.mark.skipif(CLI is None, reason="PACER_CLI not set")

ALPHA, BETA, GAMMA, DELTA = 1.3, 3.2, 0.2, 0.01
AB = ALPHA / BETA
C1 = GAMMA / DELTA
C2 = AB * C1

SMOKE_CONFIG = {
    "master_seed": 5,
    "replications": 2,
    "test_count": 8,
    "train_pool": 0,
    "main_count": 20,
    "treatment_count": 12,
    "probes": [0.1, 0.15],
    "adaptive_t0": [0.5],
    "T": 30,
    "mf": {"d": 4, "epochs": 10},
    "threads": 2,
}


def rate_curve(p):
    u = 1.0 / (1.0 - p)
    return C1 * u - C2 * u * u


def test_version():
    assert isinstance(pacer.__version__, str) and pacer.__version__


def test_equilibrium():
    P = pacer.Params(ALPHA, BETA, GAMMA, DELTA)
    lam, q, nonzero = pacer.equilibrium(P, 0.0)
    assert nonzero
    assert lam == pytest.approx(C1 * (1.0 - AB))
    assert q == pytest.approx(AB)
    lam, q, nonzero = pacer.equilibrium(P, 0.99)
    assert (lam, q, nonzero) == (0.0, 1.0, False)


def test_optimal_policy():
    P = pacer.Params(ALPHA, BETA, GAMMA, DELTA)
    p_opt, lam_opt = pacer.optimal_policy(P)
    assert p_opt == pytest.approx(1.0 - 2.0 * AB)
    assert lam_opt == pytest.approx(pacer.equilibrium_upper_bound(P))
    # past the interior regime the do-nothing policy wins
    p_opt, lam_opt = pacer.optimal_policy(pacer.Params(2.0, 3.2, GAMMA, DELTA))
    assert p_opt == 0.0
    assert lam_opt == pytest.approx(C1 * (1.0 - 2.0 / 3.2))
    p_opt, lam_opt = pacer.optimal_policy(pacer.Params(2.0, 1.5, GAMMA, DELTA))
    assert (p_opt, lam_opt) == (0.0, 0.0)


def test_integrate_reaches_equilibrium():
    P = pacer.Params(ALPHA, BETA, GAMMA, DELTA)
    p = 1.0 - 2.0 * AB
    t, lam, q = pacer.integrate(P, p, lam0=6.0, q0=0.6, dt=0.01, horizon=300.0)
    assert t[0] == 0.0 and len(t) == len(lam) == len(q) >= 30001
    lam_star, q_star, _ = pacer.equilibrium(P, p)
    assert lam[-1] == pytest.approx(lam_star, rel=1e-5)
    assert q[-1] == pytest.approx(q_star, rel=1e-5)


def test_bounds():
    P = pacer.Params(ALPHA, BETA, GAMMA, DELTA)
    b = pacer.alpha_beta_error_bound(P, 0.0, 0.2, 0.1)
    assert b == pytest.approx((0.1 / 0.2) * (BETA * DELTA) / (ALPHA * GAMMA))
    b = pacer.estimation_price_bound(P, AB + 0.1)
    assert b == pytest.approx(C1 * min(0.1 / (2 * AB * AB), 1.0 / (4 * AB)))
    b = pacer.regret_bound(nu=1.0, mu=1.0, p0=0.0, p1=0.2, eps_pred=0.01,
                           eps_dev=0.01, eps_lv=0.01)
    assert b == pytest.approx((0.5 + 1.25 + 2.0) / 0.2 * 0.03)


def test_fit_and_derive():
    pts = [(0.0, rate_curve(0.0)), (0.2, rate_curve(0.2))]
    curve = pacer.fit_two_point(pts[0], pts[1])
    assert curve.c1 == pytest.approx(C1)
    assert curve.c2 == pytest.approx(C2)
    assert not curve.clipped
    assert curve.eval(0.1) == pytest.approx(rate_curve(0.1))

    dec = pacer.derive_policy(curve)
    assert dec.ab_hat == pytest.approx(AB)
    assert dec.p_hat == pytest.approx(1.0 - 2.0 * AB)
    assert not dec.degenerate and not dec.capped

    pts3 = [(p, rate_curve(p)) for p in (0.0, 0.1, 0.2)]
    curve3 = pacer.fit_nnls(pts3)
    assert curve3.c1 == pytest.approx(C1)
    assert curve3.c2 == pytest.approx(C2)

    # a nearly flat curve caps at p_max, an empty one degenerates to p=0
    gentle = pacer.fit_two_point((0.0, 19.8), (0.5, 39.2))
    capped = pacer.derive_policy(gentle, p_max=0.95)
    assert capped.capped and capped.p_hat == 0.95
    dead = pacer.derive_policy(pacer.fit_nnls([(0.0, 0.0), (0.3, 0.0)]))
    assert dead.degenerate and dead.p_hat == 0.0


def test_nnls_solve():
    np = pytest.importorskip("numpy")
    A = np.array([[1.0, 0.0], [0.0, 1.0]])
    b = np.array([3.0, -2.0])
    x, rank_deficient, kkt = pacer.nnls_solve(A, b)
    assert np.allclose(x, [3.0, 0.0])
    assert not rank_deficient
    assert kkt <= 1e-12


def test_simulate():
    seq = pacer.simulate(model="lv", p=0.0, T=50.0, B=10, seed=3)
    assert seq["horizon"] == 50.0 and seq["B"] == 10
    times = [e["t"] for e in seq["events"]]
    assert times and times == sorted(times) and times[-1] <= 50.0
    assert all(len(e["items"]) == len(e["indicators"]) for e in seq["events"])
    rate = pacer.engagement_rate(seq, 25.0)
    assert rate > 0.0

    again = pacer.simulate(model="lv", p=0.0, T=50.0, B=10, seed=3)
    assert [e["t"] for e in again["events"]] == times
    other = pacer.simulate(model="lv", p=0.0, T=50.0, B=10, seed=4)
    assert [e["t"] for e in other["events"]] != times

    flat = pacer.simulate(model="stateless", p=0.1, T=50.0, B=10, seed=3)
    assert flat["events"] and not flat["churned"]


def test_run_experiment_and_report(tmp_path):
    ratings = tmp_path / "ratings.dat"
    pacer.synthetic_ratings_file(str(ratings), users=60, items=100, seed=9)
    assert ratings.stat().st_size > 0

    res = pacer.run_experiment(str(ratings), json.dumps(SMOKE_CONFIG))
    j = json.loads(res)
    assert j["format"] == "pacer-results" and j["version"] == 1
    assert j["replications"] == 2 and j["n_test"] == 8
    names = [p["name"] for p in j["policies"]]
    assert names == ["default", "safety", "best_of", "learned", "oracle",
                     "adaptive@0.5"]
    by_name = {p["name"]: p for p in j["policies"]}
    assert by_name["default"]["gain_pct"] == 0.0
    for p in j["policies"]:
        assert len(p["per_rep"]) == 2
        assert p["mean_lte"] == pytest.approx(sum(p["per_rep"]) / 2)
    assert len(j["cf_rmse"]) == 2 and all(v > 0 for v in j["cf_rmse"])
    assert len(j["users"]) == 16
    assert all(0.0 <= u["p_hat"] <= 0.95 for u in j["users"])

    out = tmp_path / "report"
    pacer.write_report(res, str(out))
    for name in ("summary.csv", "per_user.csv", "adaptive.csv", "results.json"):
        assert (out / name).is_file()
    assert (out / "results.json").read_text() == res + "\n"
    assert (out / "summary.csv").read_text().count("\n") == 7


def test_error_mapping(tmp_path):
    tiny = tmp_path / "tiny.dat"
    pacer.synthetic_ratings_file(str(tiny), users=2, items=80, seed=1)
    with pytest.raises(pacer.PacerError, match="bad config JSON"):
        pacer.run_experiment(str(tiny), "{")
    with pytest.raises(pacer.PacerError, match="cannot open"):
        pacer.run_experiment(str(tmp_path / "absent.dat"), "{}")
    with pytest.raises(pacer.PacerError, match="cannot write"):
        pacer.synthetic_ratings_file(str(tmp_path / "no-such-dir" / "x.dat"))


@pytest.fixture(scope="session")
def workdir(tmp_path_factory):
    if GEN is None:
        pytest.skip("PACER_GEN not set")
    d = tmp_path_factory.mktemp("cli")
    r = subprocess.run(
        [GEN, "--users", "60", "--items", "100", "--seed", "9", "--out",
         str(d / "ratings.dat")],
        capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert r.stdout.startswith("wrote ")
    (d / "cfg.json").write_text(json.dumps(SMOKE_CONFIG))
    return d


def run_cli(workdir, *args):
    return subprocess.run([CLI, *args], cwd=workdir, capture_output=True,
                          text=True)


@needs_cli
def test_cli_experiment_and_report(workdir):
    r = run_cli(workdir, "--config", "cfg.json", "--seed", "5", "--threads",
                "2", "experiment", "--data", "ratings.dat", "--out", "exp")
    assert r.returncode == 0, r.stderr
    assert "policy" in r.stdout and "learned" in r.stdout
    assert "cf_rmse:" in r.stdout
    for name in ("summary.csv", "per_user.csv", "adaptive.csv", "results.json"):
        assert (workdir / "exp" / name).is_file()

    r = run_cli(workdir, "report", "--in", "exp/results.json", "--out", "rep")
    assert r.returncode == 0, r.stderr
    assert (workdir / "rep" / "summary.csv").read_bytes() == \
        (workdir / "exp" / "summary.csv").read_bytes()


@needs_cli
def test_cli_fit(workdir, tmp_path):
    r = run_cli(workdir, "fit", "--point", f"0:{rate_curve(0.0)!r}", "--point",
                f"0.2:{rate_curve(0.2)!r}", "--two-point")
    assert r.returncode == 0, r.stderr
    out = json.loads(r.stdout)
    assert out["c1"] == pytest.approx(C1)
    assert out["ab_hat"] == pytest.approx(AB)
    assert out["p_hat"] == pytest.approx(1.0 - 2.0 * AB)
    assert not out["degenerate"] and not out["capped"]

    points = tmp_path / "points.json"
    points.write_text(json.dumps(
        {"points": [[p, rate_curve(p)] for p in (0.0, 0.1, 0.2)]}))
    r = run_cli(workdir, "fit", "--in", str(points))
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["c1"] == pytest.approx(C1)


@needs_cli
def test_cli_simulate(workdir):
    r = run_cli(workdir, "--seed", "7", "simulate", "--model", "lv", "--p",
                "0.1", "--T", "40", "--out", "sim")
    assert r.returncode == 0, r.stderr
    assert r.stdout.startswith("events=")
    assert (workdir / "sim" / "sequence.csv").stat().st_size > 0
    j = json.loads((workdir / "sim" / "sequence.json").read_text())
    assert j["format"] == "pacer-sequence" and j["version"] == 1

    r = run_cli(workdir, "simulate", "--policy", "safety", "--T", "40",
                "--out", "sim2")
    assert r.returncode == 0, r.stderr


@needs_cli
def test_cli_train_cf(workdir):
    r = run_cli(workdir, "--config", "cfg.json", "train-cf", "--data",
                "ratings.dat", "--out", "cf")
    assert r.returncode == 0, r.stderr
    assert "rmse=" in r.stdout
    j = json.loads((workdir / "cf" / "mf.json").read_text())
    assert j["format"] == "pacer-mf" and j["d"] == 4


@needs_cli
def test_cli_sweep(workdir):
    r = run_cli(workdir, "--config", "cfg.json", "sweep", "--data",
                "ratings.dat", "--grid", "0", "0.12", "--out", "sw")
    assert r.returncode == 0, r.stderr
    rows = json.loads((workdir / "sw" / "sweep.json").read_text())["rows"]
    assert [(row["p1"], row["policy"]) for row in rows] == \
        [(0.0, "best_of"), (0.0, "learned"), (0.12, "best_of"),
         (0.12, "learned")]
    assert (workdir / "sw" / "sweep.csv").read_text().count("\n") == 5


@needs_cli
def test_cli_usage_error(workdir):
    r = run_cli(workdir, "fit")
    assert r.returncode == 2
    assert "error: usage: no treatment points given" in r.stderr
