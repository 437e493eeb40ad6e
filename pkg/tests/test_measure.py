import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import edges_of, markov_path_measure, perron_eig
from sftrohlin import NotPrimitiveError, InputError
from sftrohlin.measure import ClopenSet, Cylinder, cylinder_measure, perron_data
from sftrohlin.sft_core import Interval, all_paths

GOLDEN = [[1, 1], [1, 0]]
MATRICES = [GOLDEN, [[2]], [[0, 1], [1, 1]], [[1, 1], [1, 1]], [[1, 1, 0], [0, 1, 1], [1, 0, 1]], [[2, 1], [1, 1]]]


@pytest.mark.parametrize("T", MATRICES)
def test_perron_data_against_dense_eigensolver(T):
    pd = perron_data(T)
    lam, v, w = perron_eig(T)
    A = np.array(T, dtype=float)
    assert abs(pd.lam - lam) < 1e-10 * lam
    assert np.allclose(A @ pd.v, pd.lam * pd.v, rtol=1e-10, atol=0)
    assert np.allclose(pd.w @ A, pd.lam * pd.w, rtol=1e-10, atol=0)
    assert abs(pd.w @ pd.v - 1) < 1e-12
    assert pd.lam > 1 and np.all(pd.v > 0) and np.all(pd.w > 0)


def test_golden_lambda():
    assert abs(perron_data(GOLDEN).lam - (1 + 5**0.5) / 2) < 1e-14


def test_non_primitive_rejected():
    with pytest.raises(NotPrimitiveError):
        perron_data([[0, 1], [1, 0]])


@pytest.mark.parametrize("T,max_len", [(GOLDEN, 8), ([[2]], 10), ([[2, 1], [1, 1]], 5)])
def test_full_window_sums_to_one(T, max_len):
    pd = perron_data(T)
    for k in range(1, max_len + 1):
        total = sum(cylinder_measure(pd, T, Cylinder(p)) for p in all_paths(T, k))
        assert abs(total - 1) < 1e-10


def test_full_two_shift_cylinders():
    pd = perron_data([[2]])
    for k in range(1, 11):
        for p in [(0,) * k, (1,) * k, tuple(i % 2 for i in range(k))]:
            assert abs(cylinder_measure(pd, [[2]], Cylinder(p)) - 2.0**-k) < 1e-12


@settings(max_examples=60, deadline=None)
@given(T=st.sampled_from(MATRICES), data=st.data())
def test_cylinder_measure_matches_markov_chain(T, data):
    E = edges_of(T)
    path = [data.draw(st.integers(0, len(E) - 1))]
    for _ in range(data.draw(st.integers(0, 5))):
        nxt = [k for k, (a, _) in enumerate(E) if a == E[path[-1]][1]]
        path.append(data.draw(st.sampled_from(nxt)))
    pd = perron_data(T)
    mu = cylinder_measure(pd, T, Cylinder(tuple(path), data.draw(st.integers(-5, 5))))
    assert mu > 0
    assert abs(mu - markov_path_measure(T, path)) < 1e-12


def test_invalid_cylinder():
    pd = perron_data(GOLDEN)
    with pytest.raises(InputError):
        cylinder_measure(pd, GOLDEN, Cylinder((2, 2)))  # vertex 1 -> 0 then 1 -> 0: not a path
    with pytest.raises(InputError):
        Cylinder(())


def random_clopen(T, data, window):
    paths = all_paths(T, window.width)
    chosen = data.draw(st.lists(st.sampled_from(paths), max_size=len(paths)))
    return ClopenSet(T, window, chosen)


@settings(max_examples=60, deadline=None)
@given(data=st.data(), T=st.sampled_from([GOLDEN, [[2]], [[2, 1], [1, 1]]]))
def test_boolean_algebra_and_measure(data, T):
    pd = perron_data(T)
    a = data.draw(st.integers(-3, 3))
    A = random_clopen(T, data, Interval(a, a + data.draw(st.integers(0, 2))))
    b = data.draw(st.integers(-3, 3))
    B = random_clopen(T, data, Interval(b, b + data.draw(st.integers(0, 2))))
    assert (A | B) == (B | A)
    assert ((A - B) | (A & B)) == A
    assert (A - B).isdisjoint(B)
    assert A.complement().isdisjoint(A)
    assert abs((A | B).measure(pd) + (A & B).measure(pd) - A.measure(pd) - B.measure(pd)) < 1e-12
    assert abs(A.measure(pd) + A.complement().measure(pd) - 1) < 1e-12
    n = data.draw(st.integers(-4, 4))
    S = A.shift_by(n)
    assert S.window == A.window.shift(-n)
    assert abs(S.measure(pd) - A.measure(pd)) < 1e-15
    assert S.shift_by(-n) == A
    J = A.window.hull(Interval(A.window.a - 1, A.window.b + 2))
    assert A.refine(J) == A
    assert abs(A.refine(J).measure(pd) - A.measure(pd)) < 1e-12


def test_shift_and_disjointness_are_exact():
    C = ClopenSet(GOLDEN, Interval(0, 1), [(1, 2)])  # path 0 -> 1 -> 0
    assert C.isdisjoint(C.shift_by(1))
    assert not C.isdisjoint(C.shift_by(2))
    assert C.shift_by(1).window == Interval(-1, 0)


def test_json_round_trip():
    C = ClopenSet(GOLDEN, Interval(-1, 1), [(0, 0, 1), (1, 2, 0)])
    assert ClopenSet.from_json(GOLDEN, C.to_json()) == C
