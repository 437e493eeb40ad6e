import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import eventual_rank_oracle, int_power
from sftrohlin import InputError, ResourceCapError
from sftrohlin.shift_equiv import (
    NONE_WITHIN_BOUNDS,
    SECertificate,
    full_shift_test,
    search_se,
    spectral_radius,
    verify_se,
    verify_sse_chain,
)

GOLDEN = [[1, 1], [1, 0]]


def brute_se(U, V, lag, bound):
    """Least (R, S) in row-major order by exhaustive enumeration."""
    u, v = len(U), len(V)
    Ul, Vl = np.array(int_power(U, lag)), np.array(int_power(V, lag))
    U, V = np.array(U), np.array(V)
    for rflat in itertools.product(range(bound + 1), repeat=u * v):
        R = np.array(rflat).reshape(u, v)
        if not np.array_equal(U @ R, R @ V):
            continue
        for sflat in itertools.product(range(bound + 1), repeat=u * v):
            S = np.array(sflat).reshape(v, u)
            if (np.array_equal(R @ S, Ul) and np.array_equal(S @ R, Vl) and np.array_equal(S @ U, V @ S)):
                return R.tolist(), S.tolist()
    return None


def test_lag_one_certificate_for_two_by_two_ones():
    res = search_se([[1, 1], [1, 1]], [[2]])
    assert res.found and res.certificate.lag == 1
    assert [list(r) for r in res.certificate.R] == [[1], [1]]
    assert [list(r) for r in res.certificate.S] == [[1, 1]]
    assert verify_se([[1, 1], [1, 1]], [[2]], res.certificate)


def test_golden_self_certificate():
    res = search_se(GOLDEN, GOLDEN)
    assert res.found and res.certificate.lag == 1
    R, S = np.array(res.certificate.R), np.array(res.certificate.S)
    assert np.array_equal(R @ S, np.array(GOLDEN))
    assert verify_se(GOLDEN, GOLDEN, res.certificate)


def test_none_within_bounds():
    res = search_se([[2]], [[3]])
    assert not res.found and res.status == NONE_WITHIN_BOUNDS
    assert "not a proof of inequivalence" in res.notes
    assert any("spectral radii differ" in n for n in res.notes)


@pytest.mark.parametrize("U,V", [([[1, 1], [1, 1]], [[2]]), (GOLDEN, GOLDEN), ([[2]], [[2]]),
                                 ([[2]], [[1, 1], [1, 1]]), (GOLDEN, [[0, 1], [1, 1]])])
def test_search_agrees_with_brute_force(U, V):
    res = search_se(U, V, max_lag=1, max_entry=2)
    want = brute_se(U, V, 1, 2)
    if want is None:
        assert not res.found
    else:
        assert res.found
        assert [list(r) for r in res.certificate.R] == want[0]
        assert [list(r) for r in res.certificate.S] == want[1]


@settings(max_examples=30, deadline=None)
@given(R=st.lists(st.lists(st.integers(0, 2), min_size=2, max_size=2), min_size=2, max_size=2),
       S=st.lists(st.lists(st.integers(0, 2), min_size=2, max_size=2), min_size=2, max_size=2))
def test_elementary_equivalence_round_trips(R, S):
    # U = RS and V = SR are always lag-1 equivalent through (R, S)
    R_, S_ = np.array(R), np.array(S)
    U, V = (R_ @ S_).tolist(), (S_ @ R_).tolist()
    cert = SECertificate.of(R, S, 1)
    check = verify_se(U, V, cert)
    assert check.ok and set(check.residuals.values()) == {0}
    assert SECertificate.from_json(json.loads(json.dumps(cert.to_json()))) == cert
    assert verify_sse_chain(U, V, [(R, S)])


def test_bad_certificate_reports_residuals():
    cert = SECertificate.of([[1]], [[2]], 1)
    check = verify_se([[2]], [[3]], cert)
    assert not check.ok and check.residuals["SR=V^l"] == 1


def test_chain_failures():
    assert not verify_sse_chain([[2]], [[2]], [([[1]], [[1]])])
    chk = verify_sse_chain([[1, 1], [1, 1]], [[2]], [([[1], [1]], [[1, 1]]), ([[1]], [[3]])])
    assert not chk and chk.failed_link == 2


def test_certificate_validation():
    with pytest.raises(InputError):
        SECertificate.of([[1]], [[1]], 0)
    with pytest.raises(InputError):
        SECertificate.of([[-1]], [[1]], 1)
    with pytest.raises(InputError):
        verify_se([[2]], [[2]], SECertificate.of([[1, 1]], [[1]], 1))


def test_enumeration_cap():
    with pytest.raises(ResourceCapError):
        search_se([[0] * 5] * 5, [[0] * 5] * 5, max_lag=1, max_entry=50)


@pytest.mark.parametrize("T,n", [([[2]], 2), ([[3]], 3), ([[1, 1], [1, 1]], 2), ([[2, 2], [1, 1]], 3)])
def test_full_shift_positive(T, n):
    v = full_shift_test(T)
    assert v.equivalent and v.n == n and v.eventual_rank == eventual_rank_oracle(T) == 1
    assert abs(spectral_radius(T) - n) < 1e-9


def test_full_shift_negative():
    v = full_shift_test(GOLDEN)
    assert not v.equivalent and v.eventual_rank == 2
    assert v.to_json() == {"full_shift": False, "eventual_rank": 2}
