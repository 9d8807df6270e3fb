"""Acceptance criteria, one check per criterion.

Each check prints a single ``PASS``/``FAIL`` line with the measured numbers.
Run under pytest, or directly with ``python3 tests/test_acceptance.py``.
"""

import hashlib
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracle  # noqa: E402
from helpers import random_instance, to_objects  # noqa: E402
from jointfair import (  # noqa: E402
    correlation_matrix,
    combmnz_rerank,
    evaluate,
    insertion_sim,
    kendall_tau,
    sliding_windows,
    synthetic_popularity_run,
)
from jointfair.joint import ibo_iwo  # noqa: E402
from jointfair.relevance import REL_MEASURES  # noqa: E402

# seeded popularity-skewed run shared by criteria 3 and 4
SYNTH = dict(m=500, n=2000, k=10, skew=1.0, bias=2.0, noise=1.0, relevant_per_user=10, seed=0)


def _report(number, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
    print(line, flush=True)
    return passed, line


# ---------------------------------------------------------------------------


def check_oracle_equivalence(n_instances=250, atol=1e-9):
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    worst, worst_name = 0.0, ""
    for _ in range(n_instances):
        inst = random_instance(rng, max_m=3, max_n=5, max_k=3, max_w=2)
        run, rel = to_objects(inst)
        got = evaluate(run, rel, k=inst["k"]).scores
        exp = oracle.all_measures(inst["users"], inst["items"], inst["lists"], inst["grades"], inst["k"])
        assert set(exp) == set(got)
        for name, value in exp.items():
            err = abs(got[name] - value)
            if err > worst:
                worst, worst_name = err, name
    elapsed = time.perf_counter() - start
    passed = worst <= atol and elapsed < 10
    return _report(1, passed, f"{n_instances} instances x 20 measures, max |diff| {worst:.2e} ({worst_name or '-'}), "
                              f"{elapsed:.2f}s (< 10s)")


def check_insertion():
    start = time.perf_counter()
    traj = insertion_sim(m=1000, n=10000, k=10, seed=0)
    elapsed = time.perf_counter() - start
    m = traj.params["m"]
    results = {}
    first = [traj.series(r)[0] for r in REL_MEASURES]
    last = [traj.series(r)[-1] for r in REL_MEASURES]
    results["a"] = max(first) <= 1.0 / m + 1e-12 and all(abs(v - 1.0) <= 1e-12 for v in last)
    results["b"] = bool(np.all(np.diff(traj.series("Gini")) < 0))
    steps = np.diff(traj.series("IBO"))
    results["c"] = bool(np.ptp(steps) <= 1e-9 and steps[0] > 0)
    small = {name: traj.series(name).max() for name in ("IAA", "IFD_mul", "MME", "II-F", "AI-F")}
    results["d"] = all(v < 0.0015 for v in small.values())
    results["e"] = bool(np.all(np.diff(traj.series("IFD_div")) >= 0))
    results["runtime"] = elapsed < 300
    detail = (
        f"(a) Rel step0 max {max(first):.4g}, step10 min {min(last):.12g}; "
        f"(b) Gini {traj.series('Gini')[0]:.4f}->{traj.series('Gini')[-1]:.4f} strictly decreasing={results['b']}; "
        f"(c) IBO increment {steps[0]:.6f}, spread {np.ptp(steps):.1e}; "
        f"(d) max {', '.join(f'{k} {v:.6g}' for k, v in small.items())}; "
        f"(e) IFD_div non-decreasing={results['e']}; {elapsed:.1f}s (< 300s); "
        f"failed parts: {[k for k, v in results.items() if not v] or 'none'}"
    )
    return _report(2, all(results.values()), detail)


def _synthetic():
    params = dict(SYNTH)
    return synthetic_popularity_run(
        params.pop("m"), params.pop("n"), k=params.pop("k"), seed=params.pop("seed"), **params
    )


# +1: should increase across windows 1-5 ... 5-9 (worsen for lower-is-better); -1: should decrease
WINDOW_DIRECTIONS = {
    "NDCG": -1, "Gini": -1,
    "IAA": +1, "HD": +1, "II-F": +1,
    "IFD_div": -1, "IFD_mul": -1, "MME": -1, "AI-F": -1,
}


def check_sliding_windows(min_pairs=3):
    run, rel = _synthetic()
    reports = sliding_windows(run, rel, window=5, starts=range(1, 6), measures=list(WINDOW_DIRECTIONS))
    rows = [rep.scores for rep in reports.values()]
    failed, parts = [], []
    for name, sign in WINDOW_DIRECTIONS.items():
        values = np.array([r[name] for r in rows])
        ok_pairs = int((sign * np.diff(values) > 0).sum())
        net = sign * (values[-1] - values[0]) > 0
        if ok_pairs < min_pairs or not net:
            failed.append(name)
        parts.append(f"{name} {ok_pairs}/4{'' if net else ' net-wrong'}")
    detail = f"strict pairs in expected direction: {', '.join(parts)}; failing: {failed or 'none'}"
    return _report(3, not failed, detail)


def check_reranker():
    run, rel = _synthetic()
    names = ["NDCG", "QF", "Gini"]
    base = evaluate(run, rel, k=10, measures=names).scores
    fused = evaluate(combmnz_rerank(run, k_prime=25, k=10), rel, k=10, measures=names).scores
    dq, dg, dn = fused["QF"] - base["QF"], base["Gini"] - fused["Gini"], base["NDCG"] - fused["NDCG"]
    passed = dq > 0 and dg > 0 and dn > 0
    detail = (f"QF {base['QF']:.4f}->{fused['QF']:.4f} (+{dq:.4f}), Gini {base['Gini']:.4f}->{fused['Gini']:.4f} "
              f"(-{dg:.4f}), NDCG {base['NDCG']:.4f}->{fused['NDCG']:.4f} (-{dn:.4f})")
    return _report(4, passed, detail)


def check_ranges(n_runs=1000):
    rng = np.random.default_rng(7)
    violations = []
    for t in range(n_runs):
        inst = random_instance(rng, max_m=6, max_n=9, max_k=6, max_w=3)
        run, rel = to_objects(inst)
        s = evaluate(run, rel, k=inst["k"]).scores
        _, diag = ibo_iwo(run, rel, k=inst["k"], detail=True)
        checks = {
            "IAA in [0,1]": 0 <= s["IAA"] <= 1,
            "II-F in [0,1]": 0 <= s["II-F"] <= 1,
            "AI-F in [0,1]": 0 <= s["AI-F"] <= 1,
            "MME >= 0": s["MME"] >= 0,
            "HD >= 0": s["HD"] >= 0,
            "IFD >= 0": s["IFD_div"] >= 0 and s["IFD_mul"] >= 0,
            "IBO + IWO <= 1": s["IBO"] + s["IWO"] <= 1,
            "disjoint IBO/IWO sets": not (diag["better"] & diag["worse"]).any(),
            "AI-F <= II-F": s["AI-F"] <= s["II-F"],
        }
        violations += [(t, name) for name, ok in checks.items() if not ok]
    return _report(5, not violations, f"{n_runs} random runs, {len(violations)} violations {violations[:5]}")


def check_kendall(n_tables=100, tol=1e-12):
    rng = np.random.default_rng(3)
    worst, structural_ok, compared = 0.0, True, 0
    for _ in range(n_tables):
        n_sys = int(rng.integers(3, 9))
        n_meas = int(rng.integers(3, 8))
        # small integer ranges force ties
        values = rng.integers(0, int(rng.integers(2, 6)), size=(n_sys, n_meas)).astype(float)
        frame = pd.DataFrame(values, columns=[f"m{j}" for j in range(n_meas)])
        mat = correlation_matrix(frame, oriented=False).to_numpy()
        structural_ok &= bool(np.allclose(mat, mat.T, equal_nan=True) and np.all(np.diag(mat) == 1))
        for a in range(n_meas):
            for b in range(a + 1, n_meas):
                x, y = values[:, a], values[:, b]
                if np.all(x == x[0]) or np.all(y == y[0]):
                    structural_ok &= bool(np.isnan(mat[a, b]))
                    continue
                ref = oracle.kendall_tau_b(list(x), list(y))
                worst = max(worst, abs(kendall_tau(x, y) - ref), abs(mat[a, b] - ref))
                compared += 1
    passed = worst <= tol and structural_ok
    return _report(6, passed, f"{n_tables} tables, {compared} measure pairs, max |diff| {worst:.1e} (<= {tol:g}); "
                              f"symmetric with unit diagonal={structural_ok}")


def _cli(args, cwd):
    env = dict(os.environ, PYTHONHASHSEED="random")
    proc = subprocess.run([sys.executable, "-m", "jointfair", *map(str, args)], cwd=cwd, env=env,
                          capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"{args[0]} exited {proc.returncode}: {proc.stderr}")
    return proc.stdout


def _digest(folder):
    h = {}
    for path in sorted(Path(folder).rglob("*")):
        if path.is_file():
            h[str(path.relative_to(folder))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return h


def check_determinism():
    def session(folder):
        out = Path(folder)
        _cli(["generate", "run.tsv", "qrels.tsv", "--m", "60", "--n", "150", "--seed", "5"], out)
        _cli(["generate", "run2.tsv", "qrels.tsv", "--m", "60", "--n", "150", "--seed", "5", "--noise", "3"], out)
        _cli(["eval", "run.tsv", "qrels.tsv", "--out", "a.json"], out)
        _cli(["eval", "run2.tsv", "qrels.tsv", "--format", "both", "--out", "b"], out)
        _cli(["rerank", "run.tsv", "--out", "cm.tsv"], out)
        _cli(["eval", "cm.tsv", "qrels.tsv", "--skip-unavailable", "--out", "c.json"], out)
        _cli(["correlate", "a.json", "b.json", "c.json", "--out", "tau.csv"], out)
        _cli(["sliding", "run.tsv", "qrels.tsv", "--format", "csv", "--out", "win.csv"], out)
        _cli(["eval", "run.tsv", "qrels.tsv", "--hd-tiebreak", "random", "--seed", "9", "--out", "rand.json"], out)
        _cli(["insertion", "--m", "100", "--n", "1000", "--seed", "4", "--out-dir", "ins"], out)
        (out / "stdout.json").write_text(_cli(["eval", "run.tsv", "qrels.tsv", "--measures", "HD,MME"], out))
        return _digest(out)

    with tempfile.TemporaryDirectory() as one, tempfile.TemporaryDirectory() as two:
        first, second = session(one), session(two)
    differing = sorted(k for k in first if first[k] != second.get(k))
    passed = not differing and first.keys() == second.keys()
    return _report(7, passed, f"{len(first)} output files from 6 subcommands compared byte-for-byte; "
                              f"differing: {differing or 'none'}")


CHECKS = [
    check_oracle_equivalence,
    check_insertion,
    check_sliding_windows,
    check_reranker,
    check_ranges,
    check_kendall,
    check_determinism,
]


@pytest.mark.parametrize("check", CHECKS, ids=[f"criterion_{i}" for i in range(1, len(CHECKS) + 1)])
def test_acceptance(check, capsys):
    with capsys.disabled():
        print()
        passed, line = check()
    assert passed, line


if __name__ == "__main__":
    outcomes = [check()[0] for check in CHECKS]
    print(f"{sum(outcomes)}/{len(outcomes)} criteria pass")
    sys.exit(0 if all(outcomes) else 1)
