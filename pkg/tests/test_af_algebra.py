import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exact_checks import disjoint_commutation_residual
from oracles import embed_units, unit_trace
from sftrohlin import InputError, PreconditionError
from sftrohlin.af_algebra import (
    AlgebraElement,
    block_index,
    clopen_to_projection,
    commutator,
    embed,
    matrix_unit,
    op_norm,
    pairing_isometry,
    shift_auto,
    sum_elements,
    to_common,
    trace,
)
from sftrohlin.measure import ClopenSet, perron_data
from sftrohlin.sft_core import Interval, TransitionMatrix, all_paths, build_graph

GOLDEN = TransitionMatrix.of([[1, 1], [1, 0]])
TWO = TransitionMatrix.of([[2]])
MATS = [GOLDEN, TWO, TransitionMatrix.of([[2, 1], [1, 1]])]


def as_units(e: AlgebraElement) -> dict:
    """Coefficients keyed by (row path, column path)."""
    out = {}
    L = e.window.width
    for (i, j), B in e.blocks.items():
        inv = {k: p for p, k in block_index(e.T, L, i, j).items()}
        for a, b in zip(*np.nonzero(B)):
            out[(inv[a], inv[b])] = B[a, b]
    return out


def random_element(T, window, rng, integer=False):
    e = AlgebraElement.zero(T, window)
    if integer:
        return e.map(lambda B: rng.integers(-3, 4, size=B.shape).astype(float))
    return AlgebraElement.random(T, window, rng)


def test_block_structure():
    e = AlgebraElement.identity(GOLDEN, (0, 2))
    assert e.dim == 8  # sum of the entries of T^3
    assert {k: B.shape[0] for k, B in e.blocks.items()} == {(0, 0): 3, (0, 1): 2, (1, 0): 2, (1, 1): 1}


def test_matrix_unit_relations():
    x, y = (0, 1), (1, 2)  # ends at vertex 1 versus vertex 0
    with pytest.raises(InputError):
        matrix_unit(GOLDEN, x, y, 0)
    a, b = (0, 0), (1, 2)
    E = matrix_unit(GOLDEN, a, b, 0)
    F = matrix_unit(GOLDEN, b, a, 0)
    assert (E @ F).allclose(matrix_unit(GOLDEN, a, a, 0), 0)
    assert (E @ E).max_abs() == 0
    assert E.adj.allclose(F, 0)


@settings(max_examples=40, deadline=None)
@given(T=st.sampled_from(MATS), a=st.integers(-3, 3), w=st.integers(1, 2),
       left=st.integers(0, 2), right=st.integers(0, 2), seed=st.integers(0, 2**32 - 1))
def test_embedding_matches_brute_force(T, a, w, left, right, seed):
    rng = np.random.default_rng(seed)
    I = Interval(a, a + w - 1)
    x = random_element(T, I, rng, integer=True)
    J = Interval(I.a - left, I.b + right)
    got = as_units(embed(x, J))
    want = embed_units(T.entries, as_units(x), left, right)
    assert got == want


@settings(max_examples=40, deadline=None)
@given(T=st.sampled_from(MATS), seed=st.integers(0, 2**32 - 1), s=st.lists(st.integers(0, 2), min_size=4, max_size=4))
def test_functoriality_and_multiplicativity(T, seed, s):
    rng = np.random.default_rng(seed)
    I = Interval(0, 1)
    J = Interval(-s[0], 1 + s[1])
    K = Interval(J.a - s[2], J.b + s[3])
    x, y = random_element(T, I, rng), random_element(T, I, rng)
    assert embed(x, K).allclose(embed(embed(x, J), K), 1e-12)
    assert embed(x @ y, K).allclose(embed(x, K) @ embed(y, K), 1e-12)
    assert embed(x.adj, J).allclose(embed(x, J).adj, 0)
    assert embed(AlgebraElement.identity(T, I), K).allclose(AlgebraElement.identity(T, K), 0)


def test_embedding_rejects_smaller_window():
    x = AlgebraElement.identity(GOLDEN, (0, 2))
    with pytest.raises(PreconditionError):
        embed(x, Interval(0, 1))


@pytest.mark.parametrize("T,width,span", [(GOLDEN, 2, 5), (TWO, 2, 5), (MATS[2], 1, 4)])
def test_disjoint_windows_commute_exactly(T, width, span):
    residual, pairs = disjoint_commutation_residual(T, width, span)
    assert pairs > 0 and residual == 0


def test_overlapping_windows_can_fail_to_commute():
    x = matrix_unit(TWO, (0,), (1,), 0)
    y = matrix_unit(TWO, (1,), (1,), 0)
    assert op_norm(commutator(x, y)) == 1.0


@pytest.mark.parametrize("T", MATS)
def test_trace_properties(T):
    pd = perron_data(T)
    rng = np.random.default_rng(7)
    for _ in range(20):
        a = int(rng.integers(-3, 4))
        x = random_element(T, (a, a + 1), rng)
        tx = trace(x, pd)
        assert abs(trace(AlgebraElement.identity(T, (a, a + 2)), pd) - 1) < 1e-10
        assert abs(trace(shift_auto(x, int(rng.integers(-5, 6))), pd) - tx) < 1e-10
        assert abs(trace(embed(x, (a - 1, a + 3)), pd) - tx) < 1e-10
        assert abs(tx - unit_trace(T.entries, as_units(x))) < 1e-10
        y = random_element(T, (a, a + 1), rng)
        assert abs(trace(x @ y, pd) - trace(y @ x, pd)) < 1e-10


def test_shift_auto_moves_window():
    x = matrix_unit(GOLDEN, (0, 1), (0, 1), 3)
    y = shift_auto(x, 2)
    assert y.window == Interval(1, 2)
    assert shift_auto(y, -2).allclose(x, 0)


def test_clopen_projection_and_pairing():
    C = ClopenSet(GOLDEN, (0, 1), [(0, 0), (1, 2)])
    D = ClopenSet(GOLDEN, (0, 1), [(0, 0)])
    e, f = clopen_to_projection(C), clopen_to_projection(D)
    assert (e @ e).allclose(e, 0)
    pd = perron_data(GOLDEN)
    assert abs(trace(e, pd) - C.measure(pd)) < 1e-12
    q = pairing_isometry(f, e, mode="sub")
    assert (q.adj @ q).allclose(f, 0)
    with pytest.raises(PreconditionError):
        pairing_isometry(e, f)


def test_sum_and_common_window():
    x = AlgebraElement.identity(GOLDEN, (0, 0))
    y = AlgebraElement.identity(GOLDEN, (2, 3))
    s = sum_elements([x, y])
    assert s.window == Interval(0, 3)
    assert s.allclose(2 * AlgebraElement.identity(GOLDEN, (0, 3)), 0)
    assert [z.window for z in to_common(x, y)] == [Interval(0, 3)] * 2


def test_json_round_trip():
    x = AlgebraElement.random(GOLDEN, (0, 1), np.random.default_rng(1))
    assert AlgebraElement.from_json(x.to_json()).allclose(x, 0)
