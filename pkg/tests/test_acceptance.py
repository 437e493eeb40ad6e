"""End-to-end acceptance checks.

Each check returns ``(ok, detail)``; the test prints one ``PASS``/``FAIL``
line per criterion.  Run ``pytest -s tests/test_acceptance.py`` to see the
lines, or ``python tests/test_acceptance.py`` for the bare summary.
"""

import math
import time

import numpy as np
import pytest
import sympy

from exact_checks import disjoint_commutation_residual, window_units
from harness import HARNESSES
from oracles import brute_counts, eventual_rank_oracle, int_power, markov_path_measure
from sftrohlin import VerificationError
from sftrohlin.af_algebra import AlgebraElement, embed, shift_auto, trace
from sftrohlin.k_theory import K0Class, Order, classes_equal, exact_infinitesimal_test, infinitesimal_rank, is_positive
from sftrohlin.measure import Cylinder, cylinder_measure, perron_data
from sftrohlin.rohlin import (
    asymptotic_commutation_check,
    build_cyclic_stack,
    build_tower,
    cyclic_stack_length,
    model_stack,
    rohlin_pipeline,
    verify_tower,
)
from sftrohlin.sft_core import Interval, all_paths, count_paths
from sftrohlin.shift_equiv import full_shift_test, search_se, verify_se

GOLDEN = [[1, 1], [1, 0]]
TWO = [[2]]


def path_counts():
    t0, bad, checked = time.perf_counter(), 0, 0
    for T in (GOLDEN, [[0, 1], [1, 1]]):
        r = len(T)
        for ell in range(1, 13):
            Tl, counts = int_power(T, ell), brute_counts(T, ell)
            for i in range(r):
                for j in range(r):
                    n = counts.get((i, j), 0)
                    bad += n != Tl[i][j] or n != count_paths(T, i, j, ell)
                    checked += 1
    dt = time.perf_counter() - t0
    return bad == 0 and dt < 5, f"{checked} counts, {bad} mismatches, {dt:.2f} s"


def measure_normalization():
    worst = 0.0
    for T, top in ((GOLDEN, 8), (TWO, 10)):
        pd = perron_data(T)
        for k in range(1, top + 1):
            worst = max(worst, abs(sum(cylinder_measure(pd, T, Cylinder(p)) for p in all_paths(T, k)) - 1))
    pd = perron_data(TWO)
    cyl = max(abs(cylinder_measure(pd, TWO, Cylinder(p)) - 2.0**-k) for k in range(1, 11) for p in all_paths(TWO, k))
    # independent Markov-chain value for every golden cylinder up to length 8
    mk = max(abs(cylinder_measure(perron_data(GOLDEN), GOLDEN, Cylinder(p)) - markov_path_measure(GOLDEN, p))
             for k in range(1, 9) for p in all_paths(GOLDEN, k))
    ok = worst < 1e-10 and cyl < 1e-12 and mk < 1e-12
    return ok, f"sum error {worst:.1e}, 2^-k error {cyl:.1e}, markov error {mk:.1e}"


def embedding_functoriality():
    rng = np.random.default_rng(3)
    worst = 0.0
    for T in (GOLDEN, TWO, [[2, 1], [1, 1]]):
        for _ in range(50):
            a, w = int(rng.integers(-3, 4)), int(rng.integers(1, 3))
            I = Interval(a, a + w - 1)
            J = Interval(I.a - int(rng.integers(0, 3)), I.b + int(rng.integers(0, 3)))
            K = Interval(J.a - int(rng.integers(0, 3)), J.b + int(rng.integers(0, 3)))
            x, y = AlgebraElement.random(T, I, rng), AlgebraElement.random(T, I, rng)
            worst = max(worst, (embed(x, K) - embed(embed(x, J), K)).max_abs(),
                        (embed(x @ y, K) - embed(x, K) @ embed(y, K)).max_abs())
    res = {name: disjoint_commutation_residual(T, 3, 7) for name, T in (("golden", GOLDEN), ("2-shift", TWO))}
    ok = worst <= 1e-12 and all(r == 0 and n > 0 for r, n in res.values())
    detail = ", ".join(f"{k} residual {r} over {n} pairs" for k, (r, n) in res.items())
    return ok, f"entry error {worst:.1e}; {detail}"


def trace_properties():
    rng = np.random.default_rng(4)
    worst = 0.0
    for T in (GOLDEN, TWO, [[2, 1], [1, 1]]):
        pd = perron_data(T)
        for _ in range(50):
            a = int(rng.integers(-3, 4))
            x = AlgebraElement.random(T, (a, a + 1), rng)
            tx = trace(x, pd)
            worst = max(worst, abs(trace(AlgebraElement.identity(T, (a, a + int(rng.integers(0, 3)))), pd) - 1),
                        abs(trace(shift_auto(x, int(rng.integers(-5, 6))), pd) - tx),
                        abs(trace(embed(x, (a - int(rng.integers(0, 3)), a + 1 + int(rng.integers(0, 3)))), pd) - tx))
    return worst < 1e-10, f"worst deviation {worst:.1e}"


def perturbation_bounds():
    out = {name: fn(seed=0, trials=100) for name, fn in HARNESSES.items()}
    ok = all(v == 0 for v, _, _ in out.values())
    return ok, "; ".join(f"{k}: {v} violations, worst ratio {w:.3f}" for k, (v, w, _) in out.items())


def tower_exactness():
    t0, parts, ok = time.perf_counter(), [], True
    for m in (1, 2, 3):
        tw = build_tower(GOLDEN, m)
        c = verify_tower(tw)
        good = c["disjoint"] and c["alpha_fixed"] and c["order"]["order"] == "positive" \
            and c["order"]["method"] == "certificate"
        ok &= good
        parts.append(f"m={m} {'exact' if good else 'INEXACT'}")
    dt = time.perf_counter() - t0
    return ok and dt < 60, f"{', '.join(parts)}, {dt:.1f} s"


def cyclic_stack_bound():
    ok, parts = True, []
    for ell in (9, 16, 25):
        sd = model_stack(cyclic_stack_length(2, ell), 2, 1)
        try:
            f, r, rep = build_cyclic_stack(sd, 2, ell)
        except VerificationError as exc:
            ok = False
            parts.append(f"l={ell} rejected: {exc}")
            continue
        ms = rep["measured"]
        bound = 1 / ell + 1 / math.sqrt(ell)
        good = (ms["cyclic_defect"] <= bound + 1e-9 and ms["rr*=1-sum f"] <= 1e-9 and ms["r*r<=f0"] <= 1e-9
                and ms["unit_law"] <= 1e-10)
        ok &= good
        parts.append(f"l={ell} defect {ms['cyclic_defect']:.4f} vs {bound:.4f}")
    return ok, "; ".join(parts)


def partition_certification():
    t0, ok, parts = time.perf_counter(), True, []
    for name, T, m in (("golden", GOLDEN, 2), ("2-shift", TWO, 3)):
        rep = rohlin_pipeline(T, m)
        ms, bd = rep.measured, rep.bounds
        good = (rep.verdict and ms["partition_defect"] <= 1e-9
                and all(ms[k] <= bd[k] + 1e-9 for k in ("advance_e0", "advance_e1", "u-v")))
        ok &= good
        parts.append(f"{name} m={m}: verdict {rep.verdict} at eps {rep.achieved_epsilon:.3g}, "
                     f"defect {ms['partition_defect']:.1e}")
    dt = time.perf_counter() - t0
    return ok and dt < 600, f"{'; '.join(parts)}; {dt:.0f} s"


def infinitesimal_dichotomy():
    ok = True
    for n in (2, 3, 5):
        v = full_shift_test([[n]])
        ok &= infinitesimal_rank([[n]]) == 0 and v.equivalent and v.n == n
    v = full_shift_test([[1, 1], [1, 1]])
    ok &= infinitesimal_rank([[1, 1], [1, 1]]) == 0 and v.equivalent and v.n == 2
    v = full_shift_test(GOLDEN)
    ok &= infinitesimal_rank(GOLDEN) == 2 and not v.equivalent and eventual_rank_oracle(GOLDEN) == 2
    # trace zero class: [v] pairs to zero against the Perron vector (lambda, 1)
    M = [[0, 1], [-1, 0]]
    lam = (1 + sympy.sqrt(5)) / 2
    pairing = sympy.simplify((sympy.Matrix([[lam, 1]]) * sympy.Matrix(M) * sympy.Matrix([lam, 1]))[0])
    g = K0Class(GOLDEN, (0, 0), M)
    ok &= pairing == 0 and exact_infinitesimal_test(g) and not classes_equal(g, K0Class.zero(GOLDEN))
    ok &= is_positive(g).order is Order.INFINITESIMAL
    return ok, "full shifts rank 0; golden rank 2 and not a full shift; explicit class infinitesimal"


def shift_equivalence():
    a = search_se([[1, 1], [1, 1]], [[2]])
    b = search_se(GOLDEN, GOLDEN)
    c = search_se([[2]], [[3]])
    ok = (a.found and a.certificate.lag == 1 and verify_se([[1, 1], [1, 1]], [[2]], a.certificate)
          and b.found and b.certificate.lag == 1 and verify_se(GOLDEN, GOLDEN, b.certificate)
          and not c.found and c.status == "none within bounds")
    return ok, f"lag-1 certificate {a.found}, self-certificate {b.found}, (2) vs (3): {c.status}"


def asymptotic_commutation():
    zero_far, nonzero_at_0, pairs = True, False, 0
    for T in (GOLDEN, TWO):
        units = window_units(T, Interval(0, 2))
        units = [u.map(lambda B: B.astype(float)) for u in units]
        for x in units:
            for y in units:
                vals = dict(asymptotic_commutation_check(x, y, 5))
                zero_far &= all(vals[n] == 0 for n in vals if abs(n) > 3)
                nonzero_at_0 |= vals[0] > 0
                pairs += 1
    return zero_far and nonzero_at_0, f"{pairs} unit pairs, |n| > 3 zero: {zero_far}, nonzero at 0: {nonzero_at_0}"


CRITERIA = [
    (1, "path counts", path_counts),
    (2, "measure normalization", measure_normalization),
    (3, "embedding functoriality", embedding_functoriality),
    (4, "trace", trace_properties),
    (5, "perturbation bounds", perturbation_bounds),
    (6, "tower exactness", tower_exactness),
    (7, "cyclic-stack bound", cyclic_stack_bound),
    (8, "partition certification", partition_certification),
    (9, "infinitesimal dichotomy", infinitesimal_dichotomy),
    (10, "shift equivalence", shift_equivalence),
    (11, "asymptotic commutation", asymptotic_commutation),
]


def report(num, name, fn):
    ok, detail = fn()
    print(f"{'PASS' if ok else 'FAIL'} criterion {num}: {name}: {detail}")
    return ok


@pytest.mark.parametrize("num,name,fn", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(num, name, fn):
    assert report(num, name, fn)


if __name__ == "__main__":
    import sys

    results = [report(*c) for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
