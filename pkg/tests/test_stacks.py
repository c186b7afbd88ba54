import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from distirl.stacks import (DualStack, HistoryStack, PeRecord, lambda_min_gram, pe_cross,
                            pe_regressor, sv_max_insert)

vec = lambda v: np.asarray(v, dtype=float)[None, :]


def brute_lambda(vectors):
    if not vectors:
        return 0.0
    G = sum(np.outer(v, v) for v in vectors)
    return float(np.linalg.eigvalsh(G)[0])


def brute_insert(stack, cand, psi, capacity):
    """Exhaustive oracle: try every single replacement."""
    if len(stack) < capacity:
        return stack + [cand], True
    current = brute_lambda(stack)
    trials = [brute_lambda(stack[:j] + [cand] + stack[j + 1:]) for j in range(len(stack))]
    j = int(np.argmax(trials))
    if trials[j] > (1 + psi) * current:
        return stack[:j] + [cand] + stack[j + 1:], True
    return stack, False


def test_empty_stack_accepts():
    out, ok = sv_max_insert([], np.array([1.0, 0.0]), vec, 0.01, 2)
    assert ok and len(out) == 1


def test_duplicate_replaced_by_orthogonal():
    s = [np.array([1.0, 0.0]), np.array([1.0, 0.0])]
    assert lambda_min_gram(s, vec) == 0.0
    out, ok = sv_max_insert(s, np.array([0.0, 1.0]), vec, 0.01, 2)
    assert ok
    assert lambda_min_gram(out, vec) == pytest.approx(1.0)


def test_collinear_candidate_discarded():
    s = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    before = lambda_min_gram(s, vec)
    out, ok = sv_max_insert(s, np.array([2.0, 0.0]), vec, 0.01, 2)
    assert not ok
    assert lambda_min_gram(out, vec) == before
    _, oracle_ok = brute_insert(s, np.array([2.0, 0.0]), 0.01, 2)
    assert oracle_ok is False


def test_lambda_min_examples():
    assert lambda_min_gram([], vec) == 0.0
    assert lambda_min_gram(list(np.eye(3)), vec) == pytest.approx(1.0)


def test_small_improvement_below_psi_discarded():
    s = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    out, ok = sv_max_insert(s, np.array([0.0, 1.004]), vec, 0.01, 2)
    assert not ok


def test_monotone_and_matches_exhaustive_search():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        p = int(rng.integers(1, 5))
        cap = int(rng.integers(p, 7))
        hs = HistoryStack(cap, vec, 0.01)
        ref = []
        for cand in rng.normal(size=(cap + 6, p)):
            before = hs.lambda_min
            hs.offer(cand)
            ref, _ = brute_insert(ref, cand, 0.01, cap)
            assert hs.lambda_min >= before - 1e-12
            assert all(np.array_equal(a, b) for a, b in zip(hs.records, ref))
            assert hs.lambda_min == pytest.approx(brute_lambda(ref), abs=1e-10)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (10, 3), elements=st.floats(-10, 10)))
def test_offer_never_decreases_lambda(cands):
    hs = HistoryStack(4, vec, 0.01)
    for c in cands:
        before = hs.lambda_min
        hs.offer(c)
        assert hs.lambda_min >= before - 1e-9 * max(1.0, before)


def test_matrix_blocks():
    """Multi-row regressors use the Gram of the stacked block."""
    reg = lambda r: r
    hs = HistoryStack(2, reg, 0.01)
    hs.offer(np.array([[1.0, 0.0], [1.0, 0.0]]))
    hs.offer(np.array([[1.0, 0.0], [0.0, 0.0]]))
    assert hs.lambda_min == 0.0
    assert hs.offer(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert hs.lambda_min == pytest.approx(1.0)


def pe(S, t=0.0):
    S = np.asarray(S, dtype=float)
    return PeRecord(np.zeros(2), np.zeros(2), S, np.zeros(2), t)


def full_dual(dwell=5.0):
    d = DualStack(2, pe_regressor, 0.01, dwell_time=dwell)
    for S in ([1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]):
        d.offer(pe(S))
    return d


def test_transient_offered_only_after_main_full():
    d = DualStack(2, pe_regressor, 0.01)
    assert d.offer(pe([1, 0, 0])) == (True, False)
    assert d.offer(pe([0, 1, 0])) == (True, False)
    assert len(d.transient) == 0
    d.offer(pe([0, 0, 1]))
    assert len(d.transient) == 1


def test_no_purge_when_transient_not_full():
    d = DualStack(3, pe_regressor, 0.01)
    for S in ([1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0]):
        d.offer(pe(S))
    assert not d.transient.full
    assert not d.try_purge(100.0)


def test_dwell_time_gate():
    d = full_dual()
    assert d.transient.full
    assert not d.try_purge(2.5)
    assert d.purges == 0


def test_purge_replaces_main_wholesale():
    d = full_dual()
    transient_records = list(d.transient.records)
    assert d.try_purge(5.0)
    assert d.main.records == transient_records
    assert len(d.main) == len(transient_records)
    assert len(d.transient) == 0
    assert d.last_purge_at == 5.0


def test_purge_cadence_respects_dwell():
    d = DualStack(2, pe_regressor, 0.01, dwell_time=5.0)
    rng = np.random.default_rng(3)
    for k in range(4000):
        t = k * 0.01
        d.offer(pe(rng.normal(size=3), t))
        d.try_purge(t)
    gaps = np.diff([0.0] + d.purge_times)
    assert d.purges >= 3
    assert np.all(gaps >= 5.0 - 1e-12)


def test_purge_veto_callable_only_called_when_due():
    d = full_dual()
    calls = []
    veto = lambda stacks: calls.append(1) or False
    assert not d.try_purge(1.0, veto)
    assert calls == []
    assert not d.try_purge(5.0, veto)
    assert calls == [1]


def test_purge_requires_min_lambda():
    d = DualStack(2, pe_regressor, 0.01, min_lambda=10.0)
    for S in ([1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]):
        d.offer(pe(S))
    assert not d.try_purge(50.0)


def test_cross_sums_track_records():
    hs = HistoryStack(3, pe_regressor, 0.01, cross=pe_cross)
    rng = np.random.default_rng(1)
    for k in range(20):
        hs.offer(PeRecord(rng.normal(size=2), rng.normal(size=2), rng.normal(size=3), rng.normal(size=2), k))
    expected = sum(pe_cross(r) for r in hs.records)
    assert np.allclose(hs.cross_sum, expected, atol=1e-12)


def test_invalid_dwell():
    with pytest.raises(ValueError):
        DualStack(2, pe_regressor, dwell_time=0.0)


def test_csv_dump(tmp_path):
    hs = HistoryStack(2, pe_regressor, 0.01)
    hs.offer(pe([1, 2, 3], t=1.5))
    path = tmp_path / "stack.csv"
    hs.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["recorded_at", "r1", "r2", "r3"]
    assert [float(v) for v in rows[1]] == [1.5, 1.0, 2.0, 3.0]
