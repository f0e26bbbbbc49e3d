"""Acceptance criteria 1-13; each test records a PASS/FAIL line printed at the end of the run."""
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from selfsim import registry
from selfsim.contraction import ball, eta_estimate
from selfsim.machine import Machine, Verdict, equals
from selfsim.nucleus import activity_class, compute_nucleus
from selfsim.potential import CapacityProblem, capacity2, capacity_decay_scan, capacity_mc, capacity_p
from selfsim.randwalk import orbit_walk, simulate_sections, uniform_symmetric
from selfsim.schreier import graph_stats, level_graph
from selfsim.thurston import ClassBasis, pc_lower_bound, spectral_radius, tensor_square, thurston_matrix
from selfsim.words import EpPoint

from conftest import ACCEPTANCE
from golden_cases import CASES, GOLDEN


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def fresh(key):
    return Machine(registry.get(key).group)


def basis(key, reps=None):
    g = registry.get(key).group
    reps = reps or list(registry.get(key).basis)
    return ClassBasis([g.word(r) for r in reps], 6, reps)


def measure_for(m, key):
    return uniform_symmetric(m, list(registry.get(key).measure) or None)


def test_c01_carpet_relations():
    t0 = time.perf_counter()
    m = fresh("sierpinski_carpet")
    g = m.group
    order6 = equals(m, g.word("a*b") * 6, ()).verdict is Verdict.EQUAL
    infinite = all(equals(m, g.word("a*c") * k, ()).verdict is Verdict.NOT_EQUAL for k in range(1, 49))
    dt = time.perf_counter() - t0
    record(1, order6 and infinite and dt < 5,
           f"(ab)^6 = e: {order6}; (ac)^k != e for k <= 48: {infinite}; {dt:.2f} s (limit 5 s)")


def test_c02_mating_nucleus():
    t0 = time.perf_counter()
    m = fresh("shishikura_tan_mating")
    N = compute_nucleus(m)
    dt = time.perf_counter() - t0
    g = m.group
    want = {0}
    for w in ["a3", "a2*a3", "b3", "b2*b3", "a1*a2*a3"]:
        s = m.canonical(g.word(w))
        want |= {s, m.inverse(s)}
    record(2, N.states == want and N.size == 11 and dt < 30,
           f"size {N.size}, equals listed set: {N.states == want}; {dt:.2f} s (limit 30 s)")


def test_c03_thurston_values():
    t0 = time.perf_counter()
    od = fresh("odometer")
    rho_od = {p: spectral_radius(thurston_matrix(od, basis("odometer"), p).M) for p in (1.0, 2.0, 3.0)}
    err_od = max(abs(rho_od[p] - 2 ** (1 - p)) for p in rho_od)
    mat = fresh("shishikura_tan_mating")
    tm = thurston_matrix(mat, basis("shishikura_tan_mating"), 2.0)
    rho_mat = spectral_radius(tm.M)
    carpet = pc_lower_bound(fresh("sierpinski_carpet"), basis("sierpinski_carpet"), (1.0, 2.5))
    target = math.log(6) / math.log(3)
    dt = time.perf_counter() - t0
    ok = err_od <= 1e-9 and not tm.partial and abs(rho_mat - 1) <= 1e-6 and abs(carpet.p_star - target) <= 1e-3
    record(3, ok and dt < 60,
           f"odometer max err {err_od:.1e}; mating rho(T2) = {rho_mat:.9f}; carpet p* = {carpet.p_star:.5f} "
           f"vs {target:.5f}; {dt:.2f} s (limit 60 s)")


def test_c04_iterate_law():
    worst = 0.0
    for key in ("odometer", "sierpinski_carpet"):
        m = fresh(key)
        m2 = Machine(tensor_square(m.group))
        for p in (1.0, 1.5, 2.0, 2.5, 3.0):
            M = thurston_matrix(m, basis(key), p).M
            M2 = thurston_matrix(m2, basis(key), p).M
            worst = max(worst, float(np.abs(M2 - M @ M).max()))
    record(4, worst <= 1e-9, f"max |T_p(X^2) - T_p^2| = {worst:.1e} (tol 1e-9)")


def test_c05_capacity_exactness():
    m = fresh("odometer")
    w = {"a": 0.5, "a^-1": 0.5}
    # vertex 1 is the word 0...01, i.e. 2^(n-1) odometer steps from vertex 0
    errs = [abs(capacity2(CapacityProblem(level_graph(m, n, w), [0], [1])).capacity - 2.0 ** (1 - n))
            for n in range(3, 9)]
    c3 = capacity_p(CapacityProblem(level_graph(m, 3, w), [0], [1], 3.0)).capacity
    ok = max(errs) <= 1e-9 and abs(c3 - 1 / 16) <= 1e-6
    record(5, ok, f"max |Cap2 - 2^(1-n)| over n=3..8 = {max(errs):.1e}; Cap3(n=3) = {c3:.9f} vs 0.0625")


def test_c06_capacity_random_walk():
    rng = np.random.default_rng(2024)
    keys = registry.list_keys()
    worst, rows = 0.0, []
    for i in range(20):
        key = keys[int(rng.integers(len(keys)))]
        m = fresh(key)
        n = {2: int(rng.integers(3, 7)), 4: int(rng.integers(2, 4))}.get(m.d, 2)
        V = m.d ** n
        perm = rng.permutation(V)
        a, b = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        A, B = perm[:a], perm[a:a + b]
        weights = measure_for(m, key).weights(m)
        exact = capacity2(CapacityProblem(level_graph(m, n, weights), A, B)).capacity
        mc = capacity_mc(m, weights, n, A, B, 100_000, seed=i)
        z = abs(mc.estimate - exact) / mc.stderr if mc.stderr > 0 else (0.0 if mc.estimate == exact else math.inf)
        worst = max(worst, z)
        rows.append(z)
    record(6, worst <= 3, f"20 instances, 1e5 trials each; max |MC - exact| / stderr = {worst:.2f} (limit 3)")


def test_c07_capacity_decay():
    t0 = time.perf_counter()
    details, ok = [], True
    for key in ("basilica", "sierpinski_carpet"):
        m = fresh(key)
        e = registry.get(key)
        u_A, u_B = (tuple(int(c) for c in t) for t in e.tiles)
        rows = capacity_decay_scan(m, compute_nucleus(m), measure_for(m, key).weights(m), u_A, u_B, range(3, 8))
        caps = [r["capacity"] for r in rows]
        dec = all(b < a for a, b in zip(caps, caps[1:]))
        ratio = caps[-1] / caps[0]
        ok &= dec and ratio < 0.5
        details.append(f"{key} ({e.tiles[0]},{e.tiles[1]}) decreasing={dec} ratio={ratio:.3f}")
    dt = time.perf_counter() - t0
    record(7, ok and dt < 600, "; ".join(details) + f"; {dt:.1f} s (limit 600 s)")


def test_c08_munchhausen_statistic():
    m = fresh("basilica")
    t = 2 ** 14
    st = simulate_sections(m, uniform_symmetric(m), t, [2, 4, 6], 64, seed=0, table=ball(m, 8))
    vals = [st.mean[(n, t)] for n in (2, 4, 6)]
    dec = vals[0] > vals[1] > vals[2]
    ratio = vals[2] / vals[0]
    record(8, dec and ratio < 0.5,
           f"levels 2,4,6: {vals[0]:.4f}, {vals[1]:.4f}, {vals[2]:.4f}; ratio {ratio:.3f} (limit 0.5)")


def test_c09_eta_sanity():
    od = fresh("odometer")
    table = ball(od, 64)
    rel = {p: eta_estimate(od, p, 4, table).root / 2 ** ((1 - p) / p) - 1 for p in (1.0, 2.0)}
    gr = fresh("grigorchuk")
    R = 22
    gt = ball(gr, R)
    roots = {n: eta_estimate(gr, 1.0, n, gt, min_length=R - 1).root for n in range(3, 7)}
    ok = all(abs(v) <= 0.10 for v in rel.values()) and gt.complete and all(r < 1 for r in roots.values())
    record(9, ok, "odometer rel. err " + ", ".join(f"p={p:g}: {v:+.3f}" for p, v in rel.items())
           + "; Grigorchuk roots (R=22, l >= 21) " + ", ".join(f"n={n}: {r:.3f}" for n, r in roots.items()))


def test_c10_activity():
    out = {}
    for key, gens in (("grigorchuk", "abcd"), ("basilica", "ab")):
        m = fresh(key)
        for gname in gens:
            out[f"{key}.{gname}"] = str(activity_class(m, gname))
    for key, gname in (("sierpinski_carpet", "a"), ("img_z2_minus_1_16z2", "a"), ("img_z2_minus_1_16z2", "c")):
        out[f"{key}.{gname}"] = str(activity_class(fresh(key), gname))
    # a finitary generator has bounded (eventually zero) activity
    bounded = all(out[k] in ("Bounded", "Finitary") for k in out if k.startswith(("grigorchuk", "basilica")))
    strict = all(out[f"grigorchuk.{x}"] == "Bounded" for x in "bcd") and out["basilica.a"] == "Bounded" \
        and out["basilica.b"] == "Bounded"
    expo = all(out[k] == "Exponential" for k in out if k.startswith(("sierpinski", "img")))
    record(10, bounded and strict and expo, ", ".join(f"{k}={v}" for k, v in out.items()))


def test_c11_orbit_contrast():
    p0 = EpPoint((), (0,))
    nl = fresh("nonliouville_fragmented")
    far = orbit_walk(nl, measure_for(nl, "nonliouville_fragmented"), p0, 10_000, 2000, seed=0)
    od = fresh("odometer")
    near = orbit_walk(od, uniform_symmetric(od), p0, 10_000, 2000, seed=0)
    ok = far.no_return >= 0.2 and near.no_return <= 0.05
    record(11, ok, f"P(no return by 1e4): nonliouville {far.no_return:.4f} +- {far.stderr:.4f} (>= 0.2), "
                   f"odometer {near.no_return:.4f} +- {near.stderr:.4f} (<= 0.05)")


def test_c12_diameter_doubling():
    m = fresh("img_z2_minus_1_16z2")
    diam = {n: graph_stats(level_graph(m, n))["diameter"] for n in range(4, 8)}
    ratios = [diam[n + 1] / diam[n] for n in range(4, 7)]
    record(12, all(1.6 <= r <= 2.4 for r in ratios),
           f"diameters {diam}; ratios " + ", ".join(f"{r:.3f}" for r in ratios))


def test_c13_cli_determinism():
    def cli(argv):
        return subprocess.run([sys.executable, "-m", "selfsim.cli", *argv], capture_output=True, check=True).stdout

    bad = []
    for name, argv in sorted(CASES.items()):
        first = cli(argv)
        second = cli(argv)
        t1 = cli(argv + ["--threads", "1"])
        t8 = cli(argv + ["--threads", "8"])
        golden = (GOLDEN / f"{name}.out").read_bytes()
        if not (first == second == t1 == t8 == golden):
            bad.append(name)
    record(13, not bad, f"{len(CASES)} golden commands byte-identical across runs and --threads 1/8"
           + (f"; mismatches: {bad}" if bad else ""))
