"""The sixteen acceptance criteria, each run through the bundled scenarios at its stated tolerance.

Every criterion records one PASS/FAIL line, shown in the terminal summary.
"""
import json

import numpy as np
import pytest

from cyllevy.runner import cli
from cyllevy.runner import config as cfgmod

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance

N_SE = 3.0
REPRO_SCENARIOS = ("poisson_q2", "ito_isometry_dim4", "char_functionals", "mehler", "ou_stationary_variance", "reconstruction")


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    cache = {}

    def get(sid):
        if sid not in cache:
            out = root / sid
            code, _ = cli.run_config(cfgmod.resolve(sid), out, workers=1, echo=lambda s: None)
            cache[sid] = (code, out)
        return cache[sid]

    return get


def report(runs, sid, cid):
    code, out = runs(sid)
    return json.loads((out / "checks" / f"{cid}.json").read_text())


def verdict(n, title, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
    print(ACCEPTANCE_LINES[-1])
    assert ok, detail


def test_01_poisson_covariance(runs):
    r = report(runs, "poisson_q2", "q2")
    lam, zeta = 2.0, np.array([1.0, -0.5, 0.8, 0.3])
    target = lam * np.outer(zeta, zeta)
    est, se = np.array(r["estimate"]), np.array(r["se"])
    z = np.abs(est - target) / se
    ok = r["n_paths"] == 100_000 and est.shape == (4, 4) and np.array_equal(np.array(r["target"]), target) and bool(np.all(z <= N_SE))
    verdict(1, "Poisson Q2 vs rate*zeta zeta^T", ok, f"max |diff|/SE = {z.max():.3f} (bound {N_SE})")


def test_02_q2_time_scaling(runs):
    r = report(runs, "q2_time_scaling", "scaling")
    rows = {row["t"]: row for row in r["per_t"]}
    ok = set(rows) == {0.5, 2.0} and all(row["max_abs_diff"] <= row["max_3se"] for row in rows.values())
    detail = ", ".join(f"t={t}: {row['max_abs_diff']:.4f} <= {row['max_3se']:.4f}" for t, row in sorted(rows.items()))
    verdict(2, "Q2(t) = t Q2(1)", ok and r["n_paths"] == 100_000, detail)


def test_03_ito_isometry(runs):
    cases = report(runs, "ito_isometry_scalar", "isometry")["cases"] + report(runs, "ito_isometry_dim4", "isometry")["cases"]
    ratios = [abs(c["lhs"] - c["rhs"]) / c["se"] for c in cases]
    modes = {c["mode"] for c in cases}
    unit = cases[0]
    ok = all(x <= N_SE for x in ratios) and modes == {"deterministic", "adapted"} and unit["integrand"] == "unit" and unit["rhs"] == 1.0
    verdict(3, "Ito isometry, scalar and dim 4", ok, f"{len(cases)} cases, max |lhs-rhs|/SE = {max(ratios):.3f}, scalar unit target {unit['rhs']!r}")


def test_04_cross_expectation(runs):
    cfgs = report(runs, "cross_expectation", "cross")["configs"]
    ratios = [abs(c["lhs"] - c["rhs"]) / c["se"] for c in cfgs]
    # lhs - rhs is tested through the SE of the per-path difference
    ok = len(cfgs) == 5 and all(c["pass"] for c in cfgs)
    verdict(4, "cross expectation", ok, f"{len(cfgs)} configs, max |lhs-rhs|/SE(diff) = {max(ratios):.3f}")


def test_05_basis_independence(runs):
    g = report(runs, "basis_independence", "gaussian_drivers")["cases"]
    j = report(runs, "basis_independence", "jump_drivers")["cases"]
    pathwise = max(c["max_pathwise"] for c in g + j)
    l2 = [c["lhs"] <= N_SE * c["se"] + 1e-20 * c["scale"] ** 2 for c in j]
    ok = pathwise <= 1e-8 and all(l2)
    verdict(5, "basis independence", ok, f"max pathwise diff {pathwise:.2e} (<= 1e-8), jump L2 within 3 SE: {all(l2)}")


def test_06_nonlinearity_witness(runs):
    r = report(runs, "nonlinearity_witness", "witness")
    ok = r["n_t"] >= 1 and r["discrepancy_P"] == r["zeta_ab"] * r["n_t"] and r["zeta_ab"] > 1 and abs(r["zeta_a"]) <= 1
    verdict(6, "nonlinearity witness", ok, f"P discrepancy {r['discrepancy_P']!r} == zeta(a+b) n(t) = {r['zeta_ab']!r} * {r['n_t']}")


def test_07_pathwise_linearity(runs):
    reps = [report(runs, "pathwise_linearity", c) for c in ("poisson", "compound", "series")]
    worst = max(r["max_relative_error"] for r in reps)
    ok = all(r["n_cases"] >= 1000 for r in reps) and worst <= 1e-12
    verdict(7, "pathwise linearity", ok, f"max relative error {worst:.2e} over 3 x 1000 cases")


def test_08_reconstruction(runs):
    reps = [report(runs, "reconstruction", c) for c in ("poisson", "impulsive", "induced")]
    worst = max(r["max_error"] for r in reps)
    verdict(8, "Levy-Ito reconstruction", worst <= 1e-10, f"max error {worst:.2e}")


def test_09_ou_stationary_variance(runs):
    cases = report(runs, "ou_stationary_variance", "variance")["cases"]
    thetas = sorted(c["theta"] for c in cases)
    ok = thetas == [0.5, 1.0, 2.0]
    for c in cases:
        ok &= c["target"] == 1.0 / (2.0 * c["theta"]) and abs(c["estimate"] - c["target"]) <= N_SE * c["se"] and c["norm_S_t_long"] <= 1e-4
    detail = ", ".join(f"theta={c['theta']}: {c['estimate']:.4f} vs {c['target']}" for c in cases)
    verdict(9, "OU stationary variance", bool(ok), detail)


def test_10_flow_composition(runs):
    sc = report(runs, "flow_composition", "flow")["scenarios"]
    worst = max(s["max_error"] for s in sc)
    verdict(10, "flow composition", len(sc) == 5 and worst <= 1e-10, f"{len(sc)} scenarios, max error {worst:.2e}")


def test_11_weak_residual_order(runs):
    r = report(runs, "weak_residual_order", "order")
    verdict(11, "weak residual order", r["n_paths"] == 20 and 1.7 <= r["ratio"] <= 2.3, f"ratio {r['ratio']:.4f}")


def _trig_within(rows):
    worst = 0.0
    for row in rows:
        for part in ("cos", "sin"):
            se = row[part]["se"]
            d = abs(row[part]["lhs"] - row[part]["rhs"])
            worst = max(worst, d / se if se > 0 else (0.0 if d == 0 else np.inf))
    return worst


def test_12_mehler(runs):
    rows = report(runs, "mehler", "mehler")["arguments"]
    worst = _trig_within(rows)
    verdict(12, "Mehler identity", len(rows) == 10 and worst <= N_SE, f"{len(rows)} arguments, max |diff|/SE = {worst:.3f}")


def test_13_self_decomposability(runs):
    r = report(runs, "invariant_measure_expstable", "self_decomposability")
    worst = 0.0
    for row in r["arguments"]:
        for part in ("re", "im"):
            worst = max(worst, abs(row["lhs"][part] - row["rhs"][part]) / row["se"][part])
    ok = r["exp_stable"] and len(r["arguments"]) == 10 and worst <= N_SE
    verdict(13, "self-decomposability", ok, f"{len(r['arguments'])} arguments, max |diff|/SE = {worst:.3f}")


def test_14_translation_counterexample(runs):
    r = report(runs, "translation_counterexample", "translation")
    fit, ctrl = r["fit"]["relative_residual"], r["control"]["relative_residual"]
    verdict(14, "translation counterexample", fit > 0.1 and ctrl < 1e-6, f"fit residual {fit:.3f} > 0.1, control {ctrl:.1e} < 1e-6")


def test_15_char_suites(runs):
    r = report(runs, "char_functionals", "suite")
    args = r["arguments"]
    per_proc = {}
    for a in args:
        per_proc[a["process"]] = per_proc.get(a["process"], 0) + 1
    worst = max(max(abs(z) for z in a["z"]) for a in args)
    ok = per_proc == {"poisson": 20, "compound": 20, "impulsive": 20} and worst <= N_SE
    verdict(15, "characteristic-function suites", ok, f"{per_proc}, max |z| = {worst:.3f}")


def test_16_reproducible_across_threads(runs, tmp_path):
    mismatched = []
    n_files = 0
    for sid in REPRO_SCENARIOS:
        _, first = runs(sid)
        again = tmp_path / sid
        assert cli.main(["run", sid, "--out", str(again), "--workers", "3"]) in (0, 1)
        for f in sorted(first.rglob("*")):
            if f.is_file() and f.suffix in (".json", ".csv"):
                n_files += 1
                if f.read_bytes() != (again / f.relative_to(first)).read_bytes():
                    mismatched.append(str(f.relative_to(first.parent)))
    verdict(16, "reproducibility across thread counts", not mismatched, f"{n_files} report/CSV files, mismatches: {mismatched or 'none'}")
