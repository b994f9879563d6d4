"""Exit criteria. Each test logs one PASS/FAIL line (shown in the terminal summary)."""

import json
import math
import re
import time

import numpy as np
import pytest

from wfacility.analysis import (SearchConfig, adversarial_search, evaluate,
                                fuzz_strategyproofness, tradeoff_sweep)
from wfacility.cli import main
from wfacility.core import Instance, Point, agent
from wfacility.instances import (MODES, bound, coa_worst_instance, constant_point_ratio,
                                 consistency_bound, impossibility_family,
                                 impossibility_instances, impossibility_ratio, instance_ratio,
                                 robustness_bound, smallest_compatible_n, worst_x)
from wfacility.optimal import geometric_median_grid, geometric_median_iterative, gradient_norm

SQRT2 = math.sqrt(2)


def _record(log, number, title, ok, elapsed, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] AC{number} {title} ({elapsed:.2f}s){' - ' + detail if detail else ''}"
    log.append(line)
    print(line)


def test_ac1_tradeoff_table(acceptance_log):
    inst = Instance((agent(0, 1, 4), agent(-1, 0, 1), agent(1, 0, 1)))
    evaluate(Instance((agent(0, 0), agent(1, 1))), 0.0)  # one-time JIT compilation, untimed
    t0 = time.perf_counter()
    rows = tradeoff_sweep(inst, ["accurate", Point(0, -10), Point(0, 0.5)], [0.2, 0.5, 0.7])
    got = {(r.prediction_mode, r.prediction.as_tuple(), r.c): r for r in rows}
    checks = [
        abs(got[("accurate", (0, 1), 0.2)].ratio - 3 / SQRT2) <= 1e-9,
        abs(got[("accurate", (0, 1), 0.5)].ratio - 3 / SQRT2) <= 1e-9,
        abs(got[("accurate", (0, 1), 0.7)].ratio - 1.0) <= 1e-9,
        all(got[("fixed", (0, -10), c)].facility == Point(0, 0) for c in (0.2, 0.5, 0.7)),
        abs(got[("fixed", (0, 0.5), 0.7)].ratio - (2 + math.sqrt(5)) / (2 * SQRT2)) <= 1e-9,
    ]
    elapsed = time.perf_counter() - t0
    ok = all(checks) and elapsed < 1.0
    _record(acceptance_log, 1, "trade-off table", ok, elapsed)
    assert all(checks)
    assert elapsed < 1.0


def test_ac2_impossibility_pair(acceptance_log):
    t0 = time.perf_counter()
    a, b = impossibility_instances()
    above = [Point(0, 21)] * 4
    below = [Point(0, 10)] * 4
    checks = [
        abs(constant_point_ratio(a, above) - 1.0) <= 1e-9,
        abs(constant_point_ratio(b, above) - 20.0) <= 1e-9,
        abs(constant_point_ratio(a, below) - 1.25) <= 1e-9,
    ]
    for n in range(2, 11):
        for wr in (1, 2, 5, 10):
            inst, ph = impossibility_family(n, 1.0, wr)
            checks.append(abs(constant_point_ratio(inst, ph) - impossibility_ratio(n, 1.0, wr))
                          <= 1e-9)
    elapsed = time.perf_counter() - t0
    _record(acceptance_log, 2, "impossibility pair + scaling", all(checks) and elapsed < 1.0,
            elapsed)
    assert all(checks)
    assert elapsed < 1.0


def _geometric_coa_ratio(x, c, w_min, w_max, mode):
    # per-agent costs from the point geometry: mechanism at (0,0), optimum at (0,1)
    s = c if mode == "consistency" else -c
    top, side = (1 - s) / 2, (1 + s) / 4
    mech = top * w_max * np.hypot(0.0, 1.0) + 2 * side * w_min * np.hypot(x, 0.0)
    opt = 2 * side * w_min * np.hypot(x, -1.0)
    return mech / opt


def test_ac3_bound_tightness(acceptance_log):
    t0 = time.perf_counter()
    xs = np.arange(1e-4, 100.0, 1e-4)  # x* reaches 19 at c = 0.9
    failures = []
    worst_gap = 0.0
    for mode in MODES:
        for c in [k / 10 for k in range(10)]:
            for wr in (1, 1.5, 2, 5, 10):
                closed = bound(c, 1.0, wr, mode)
                coa = coa_worst_instance(smallest_compatible_n(c), c, 1.0, wr, mode)
                measured = instance_ratio(coa.instance)
                curve = _geometric_coa_ratio(xs, c, 1.0, wr, mode)
                arg = xs[int(np.argmax(curve))]
                worst_gap = max(worst_gap, abs(measured - closed))
                if abs(measured - closed) > 1e-6 or abs(arg - worst_x(c, 1.0, wr, mode)) > 1e-3:
                    failures.append((mode, c, wr, measured, closed, arg))
    elapsed = time.perf_counter() - t0
    _record(acceptance_log, 3, "bound tightness on weighted COA",
            not failures and elapsed < 30, elapsed, f"max |measured-bound| = {worst_gap:.2e}")
    assert not failures
    assert elapsed < 30


def test_ac4_unweighted_reduction(acceptance_log):
    t0 = time.perf_counter()
    ok = True
    for c in [k / 10 for k in range(10)]:
        ok &= abs(consistency_bound(c, 1, 1) - math.sqrt(2 + 2 * c * c) / (1 + c)) <= 1e-12
        ok &= abs(robustness_bound(c, 1, 1) - math.sqrt(2 + 2 * c * c) / (1 - c)) <= 1e-12
    ok &= abs(consistency_bound(0, 1, 1) - SQRT2) <= 1e-12
    ok &= abs(robustness_bound(0, 1, 1) - SQRT2) <= 1e-12
    _record(acceptance_log, 4, "unweighted reduction", ok, time.perf_counter() - t0)
    assert ok


SEARCH_CELLS = [(mode, c, box) for mode in MODES for c in (0.0, 0.25, 0.5, 0.75)
                for box in ((1.0, 1.0), (1.0, 2.0), (1.0, 5.0))]


@pytest.mark.slow
def test_ac5_bound_dominance(acceptance_log):
    t0 = time.perf_counter()
    failures = []
    worst = -math.inf
    for k, (mode, c, box) in enumerate(SEARCH_CELLS):
        cfg = SearchConfig(seed=1000 + k, c=c, mode=mode, weight_box=box, restarts=10,
                           steps_per_restart=2000, n_range=(1, 16))
        res = adversarial_search(cfg)
        box_bound = bound(c, box[0], box[1], mode)
        worst = max(worst, res.max_excess)
        if res.max_excess > 1e-6 or res.report.ratio > box_bound + 1e-6:
            failures.append(("exceeds", mode, c, box, res.max_excess))
        if res.evaluations < 10_000:
            failures.append(("too few evaluations", mode, c, box, res.evaluations))
        if res.report.ratio < box_bound - 0.05:
            failures.append(("short", mode, c, box, res.report.ratio, box_bound))
    elapsed = time.perf_counter() - t0
    _record(acceptance_log, 5, f"bound dominance over {len(SEARCH_CELLS)} cells",
            not failures and elapsed < 300, elapsed, f"max ratio-bound = {worst:.2e}")
    assert not failures
    assert elapsed < 300


@pytest.mark.slow
def test_ac6_strategyproofness(acceptance_log):
    t0 = time.perf_counter()
    clean = fuzz_strategyproofness("cmp", 10_000, seed=2024, tolerance=1e-9)
    foil = fuzz_strategyproofness("weighted_mean", 1_000, seed=2024, tolerance=1e-9)
    elapsed = time.perf_counter() - t0
    ok = not clean.violations and len(foil.violations) >= 1 and elapsed < 120
    _record(acceptance_log, 6, "strategyproofness fuzzing", ok, elapsed,
            f"cmp violations = {len(clean.violations)}, foil violations = {len(foil.violations)}")
    assert not clean.violations
    assert foil.violations
    assert elapsed < 120


@pytest.mark.slow
def test_ac7_optimal_cross_check(acceptance_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    failures = []
    max_grad = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 13))
        agents = [agent(x, y, w) for x, y, w in zip(rng.uniform(-5, 5, n), rng.uniform(-5, 5, n),
                                                     rng.uniform(1, 10, n))]
        it = geometric_median_iterative(agents)
        grid = geometric_median_grid(agents, 0.5, 400)
        mean_w = sum(a.weight for a in agents) / n
        if abs(it.cost - grid.cost) > grid.cell_diagonal * mean_w or it.cost > grid.cost + 1e-9:
            failures.append(("cost", it, grid))
        if not it.anchored:
            g = gradient_norm(it.location, agents)
            max_grad = max(max_grad, g)
            if g > 1e-10:
                failures.append(("gradient", g))
    elapsed = time.perf_counter() - t0
    _record(acceptance_log, 7, "optimal solver vs grid oracle", not failures and elapsed < 120,
            elapsed, f"max non-anchor gradient = {max_grad:.1e}")
    assert not failures
    assert elapsed < 120


_TIMESTAMP = re.compile(r'"timestamp": "[^"]*"')


def _run_twice(argv, tmp_path, capsys):
    outputs = []
    out_file = tmp_path / "run.out"
    for _ in range(2):
        code = main(argv + ["--out", str(out_file)])
        capsys.readouterr()
        assert code == 0
        outputs.append(_TIMESTAMP.sub('"timestamp": ""', out_file.read_text()).encode())
    return outputs


def test_ac8_determinism(acceptance_log, tmp_path, capsys):
    t0 = time.perf_counter()
    commands = [
        ["search", "--seed", "11", "--c", "0.5", "--mode", "robustness", "--weight-box", "1,2",
         "--restarts", "3", "--steps", "300"],
        ["search", "--seed", "12", "--c", "0.25", "--restarts", "3", "--steps", "300",
         "--no-seed-coa"],
        ["fuzz", "--seed", "5", "--mechanism", "weighted_mean", "--trials", "300"],
        ["fuzz", "--seed", "5", "--trials", "300"],
        ["bounds", "--w-max", "2", "--empirical"],
        ["tradeoff"],
        ["impossibility"],
        ["gen-coa", "--c", "0.5", "--w-max", "3", "--mode", "robustness"],
    ]
    mismatched = []
    for argv in commands:
        first, second = _run_twice(argv, tmp_path, capsys)
        if first != second:
            mismatched.append(argv[0])
    # a search report reloaded and re-evaluated reproduces its recorded ratio
    main(commands[0] + ["--out", str(tmp_path / "s.json")])
    capsys.readouterr()
    data = json.loads((tmp_path / "s.json").read_text())
    from wfacility.io import instance_from_dict
    inst = instance_from_dict(data["instance"])
    rerun = evaluate(inst, inst.confidence, inst.prediction, cross_check=False)
    reproduced = abs(rerun.ratio - data["best_ratio"]) <= 1e-12
    elapsed = time.perf_counter() - t0
    ok = not mismatched and reproduced
    _record(acceptance_log, 8, "byte-identical seeded reports", ok, elapsed,
            f"{len(commands)} commands")
    assert not mismatched
    assert reproduced
