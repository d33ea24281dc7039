"""Acceptance gate: nine end-to-end criteria, one PASS/FAIL line each.

Run alone with ``pytest tests/test_acceptance.py -v``.  The overtaking runs
(criteria 7 to 9) take several minutes.
"""

import itertools
import math
import time

import numpy as np
import pytest

from minviol.cli import run_session
from minviol.dynamics import steer
from minviol.fltl import TRUE, GFormula, GXFormula, Implies, Or, Pair, Prop, denext, eval_pair, parse, parse_gx
from minviol.scenario import load_bundled
from minviol.search import extract_optimal
from minviol.unsafety import TimedWord, level_of_unsafety

from oracles import angle_diff, brute_force_best, dubins_oracle, integrate, level_direct, level_vanish, powerset
from oracles import random_body, sat_two_letters
from test_search import random_graph

SEEDS = range(20)
STRATEGIES = ("rrg", "rrt-star")


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        assert ok, detail

    return emit


def test_c1_denext_golden(report):
    got = denext(parse_gx("G (p -> (X p | X p'))"))
    p, p2 = Prop("p"), Prop("p'")
    want = GFormula(Implies(Pair(p, TRUE), Or(Pair(TRUE, p), Pair(TRUE, p2))))
    report(1, got == want, f"denext AST {'matches' if got == want else 'differs from'} the paired golden form")


def test_c2_two_letter_equals_paired(report):
    rng = np.random.default_rng(2)
    alphabet = ["a", "b", "c"]
    universe = powerset(alphabet)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(200):
        body = random_body(rng, alphabet, max_connectives=6)
        paired = denext(GXFormula(body)).body
        for l1, l2 in itertools.product(universe, repeat=2):
            mismatches += sat_two_letters(body, l1, l2) != eval_pair(paired, l1, l2)
    dt = time.perf_counter() - t0
    report(2, mismatches == 0 and dt < 5.0, f"{mismatches} mismatches over 200 formulas x 64 label pairs in {dt:.2f}s")


def test_c3_level_matches_direct_definition(report):
    rng = np.random.default_rng(3)
    mismatches = 0
    for _ in range(500):
        size = int(rng.integers(1, 4))
        alphabet = ["a", "b", "c"][:size]
        body = random_body(rng, alphabet)
        n = int(rng.integers(1, 7))
        letters = [
            (frozenset(x for x in alphabet if rng.random() < 0.5), float(rng.uniform(0.0, 10.0)))
            for _ in range(n)
        ]
        got = level_of_unsafety(TimedWord.of(letters), denext(GXFormula(body)))
        mismatches += got != level_direct(body, letters, alphabet)
    report(3, mismatches == 0, f"{mismatches} exact mismatches over 500 (formula, word) pairs")


def test_c4_unsafe_transition_counts_once(report):
    rng = np.random.default_rng(4)
    f = parse("G (p0 -> X p0)")
    bad = 0
    for _ in range(50):
        d0, d1 = (float(v) for v in rng.uniform(0.01, 10.0, size=2))
        letters = [({"p0"}, d0), ({"p1"}, d1)]
        ours = level_of_unsafety(TimedWord.of(letters), f)
        vanish = level_vanish(f.body, letters)
        bad += ours != 1.0 or vanish != min(d0, d1)
    report(4, bad == 0, f"level 1 and vanish reference min(d0, d1) on {50 - bad}/50 duration pairs")


def test_c5_dijkstra_matches_enumeration(report):
    rng = np.random.default_rng(5)
    mismatches = 0
    for _ in range(200):
        n = int(rng.integers(2, 9))
        K, edges = random_graph(rng, n_states=n, n_edges=int(rng.integers(1, 21)), integer=bool(rng.integers(0, 2)))
        best = brute_force_best(len(K), edges, K.init, K.goal_ids)
        t = extract_optimal(K)
        mismatches += (None if t is None else t.weight) != best
    report(5, mismatches == 0, f"{mismatches} mismatches over 200 random graphs")


def test_c6_dubins_steering(report):
    rng = np.random.default_rng(6)
    lo, hi = [-15.0, -15.0, -math.pi], [15.0, 15.0, math.pi]
    pairs = [(tuple(rng.uniform(lo, hi)), tuple(rng.uniform(lo, hi))) for _ in range(1000)]
    end_err, chord_bad = 0.0, 0
    for a, b in pairs:
        t = steer(a, b)
        e = t.end
        end_err = max(end_err, abs(e.x - b[0]), abs(e.y - b[1]), abs(float(angle_diff(e.theta, b[2]))))
        chord_bad += t.total_time < math.dist(a[:2], b[:2]) - 1e-12
    # oracle: tangent-circle candidates, kept only if RK4 integration lands on the goal
    starts, words, lengths, owner = [], [], [], []
    for i, (a, b) in enumerate(pairs):
        for w, ls in dubins_oracle(a, b):
            starts.append(a)
            words.append(w)
            lengths.append(ls)
            owner.append(i)
    ends = integrate(starts, words, lengths, steps=400)
    goals = np.array([pairs[i][1] for i in owner])
    hit = (np.abs(ends[:, :2] - goals[:, :2]).max(axis=1) < 1e-6) & (np.abs(angle_diff(ends[:, 2], goals[:, 2])) < 1e-6)
    best = np.full(len(pairs), np.inf)
    for i, ok, ls in zip(owner, hit, lengths):
        if ok:
            best[i] = min(best[i], sum(ls))
    len_err = max(abs(steer(a, b).total_time - best[i]) for i, (a, b) in enumerate(pairs))
    ok = end_err < 1e-6 and chord_bad == 0 and len_err < 1e-4
    report(6, ok, f"endpoint error {end_err:.1e}, {chord_bad} shorter than chord, length error {len_err:.1e} vs ODE oracle")


# --------------------------------------------------------------------------
# overtaking runs


@pytest.fixture(scope="module")
def overtake_runs(tmp_path_factory):
    base = load_bundled().with_overrides(iterations=40, samples_per_iteration=20, workers=1)
    root = tmp_path_factory.mktemp("overtake")
    runs = {}
    t0 = time.perf_counter()
    for seed in SEEDS:
        for strategy in STRATEGIES:
            out = root / f"{strategy}_{seed}"
            cfg = base.with_overrides(seed=seed, strategy=strategy)
            result = run_session(cfg, out, plots=False)
            runs[strategy, seed] = (result.costs, (out / "costs.tsv").read_bytes())
    return runs, time.perf_counter() - t0, base


@pytest.mark.slow
def test_c7_overtaking(report, overtake_runs):
    runs, seconds, _ = overtake_runs
    good = {s: 0 for s in STRATEGIES}
    for (strategy, seed), (costs, _) in runs.items():
        final = costs[-1]
        good[strategy] += final is not None and final[0] == 0 and final[1] == 0 and final[2] > 0
    paired = 0
    for seed in SEEDS:
        g, t = runs["rrg", seed][0][-1], runs["rrt-star", seed][0][-1]
        paired += g is not None and (t is None or g <= t)
    ok = all(v >= 18 for v in good.values()) and paired >= 16 and seconds < 600
    detail = (f"zero class 0/1 with class 2 > 0: rrg {good['rrg']}/20, rrt-star {good['rrt-star']}/20; "
              f"rrg <= rrt-star on {paired}/20 seeds; {seconds:.0f}s total")
    report(7, ok, detail)


@pytest.mark.slow
def test_c8_rrg_monotone(report, overtake_runs):
    runs, _, _ = overtake_runs
    broken = []
    for seed in SEEDS:
        costs = runs["rrg", seed][0]
        seen = [c for c in costs if c is not None]
        started = costs.index(seen[0]) if seen else len(costs)
        if any(c is None for c in costs[started:]) or any(b > a for a, b in zip(seen, seen[1:])):
            broken.append(seed)
    report(8, not broken, f"rrg cost sequence non-increasing on {20 - len(broken)}/20 seeds" + (f" (broken: {broken})" if broken else ""))


@pytest.mark.slow
def test_c9_deterministic_with_threads(report, overtake_runs, tmp_path):
    runs, _, base = overtake_runs
    differ = []
    for seed in SEEDS:
        for strategy in STRATEGIES:
            out = tmp_path / f"{strategy}_{seed}"
            run_session(base.with_overrides(seed=seed, strategy=strategy, workers=2), out, plots=False)
            if (out / "costs.tsv").read_bytes() != runs[strategy, seed][1]:
                differ.append((strategy, seed))
    report(9, not differ, f"{40 - len(differ)}/40 costs.tsv byte-identical with 2 edge-costing threads")
