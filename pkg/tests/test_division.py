import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomc.circuits import Circuit, generate_rand3reg
from atomc.division import (DivisionOptions, classify, initial_partition, loss,
                            refine, refine_trace, split_circuit,
                            swap_candidates)

K4 = Circuit(4, tuple(itertools.combinations(range(4), 2)), name="k4")
SIX_CYCLE = Circuit(6, ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)),
                    name="c6")


def brute_classify(c, q1):
    """Independent reckoning of the edge split and active sets."""
    e1, e2, e3, qa1, qa2 = set(), set(), set(), set(), set()
    for i, (u, v) in enumerate(c.gates):
        inside = (u in q1) + (v in q1)
        if inside == 2:
            e1.add(i)
        elif inside == 0:
            e2.add(i)
        else:
            e3.add(i)
            qa1.add(u if u in q1 else v)
            qa2.add(u if u not in q1 else v)
    return e1, e2, e3, qa1, qa2


def brute_loss(c, q1, k):
    _, _, e3, qa1, qa2 = brute_classify(c, q1)
    return k * (len(qa1) + len(qa2)) + (1 - k) * len(e3)


def test_k4_any_balanced_split_cuts_four():
    # oracle: enumerate all 3 balanced splits of K4
    for q1 in itertools.combinations(range(4), 2):
        e1, e2, e3, qa1, qa2 = brute_classify(K4, set(q1))
        assert len(e3) == 4 and len(e1) == 1 and len(e2) == 1
        assert qa1 == set(q1) and qa2 == set(range(4)) - set(q1)


def test_initial_partition_k4():
    p = initial_partition(K4, seed=11)
    assert len(p.q1) == 2 and len(p.q2) == 2
    assert len(p.e3) == 4
    assert p.qa1 == p.q1 and p.qa2 == p.q2
    assert not p.qr1 and not p.qr2


def test_initial_partition_two_qubits():
    c = Circuit(2, ((0, 1),))
    p = initial_partition(c, seed=0)
    assert len(p.q1) == 1
    assert p.e3 == frozenset({0})
    assert p.qa1 | p.qa2 == {0, 1}


def test_initial_partition_deterministic():
    c = generate_rand3reg(20, 5)
    assert initial_partition(c, seed=9) == initial_partition(c, seed=9)


def test_disjoint_edges_all_resolved():
    c = Circuit(4, ((0, 1), (2, 3)))
    # find a seed placing {0,1} on one side
    for seed in range(100):
        p = initial_partition(c, seed)
        if p.q1 in ({0, 1}, {2, 3}):
            break
    else:
        pytest.fail("no seed produced the {0,1}/{2,3} split")
    assert not p.e3
    assert p.qr1 == p.q1 and p.qr2 == p.q2
    assert len(p.e1) == 1 and len(p.e2) == 1


def test_loss_eq1_arithmetic():
    p = initial_partition(K4, seed=0)
    assert loss(p, 0.5) == pytest.approx(4.0)  # 0.5*(2+2) + 0.5*4
    assert loss(p, 1.0) == pytest.approx(len(p.qa1) + len(p.qa2))
    assert loss(p, 0.0) == pytest.approx(len(p.e3))


def test_loss_zero_when_no_cross_edges():
    c = Circuit(4, ((0, 1), (2, 3)))
    for seed in range(100):
        p = initial_partition(c, seed)
        if not p.e3:
            break
    for k in (0.0, 0.5, 1.0):
        assert loss(p, k) == 0.0


def test_swap_candidates_k4():
    p = initial_partition(K4, seed=3)
    qs1, qs2 = swap_candidates(K4, p)
    # every qubit: external degree 2 > internal degree 1
    assert qs1 == p.qa1 and qs2 == p.qa2


def test_swap_candidates_empty_when_no_cross():
    c = Circuit(4, ((0, 1), (2, 3)))
    for seed in range(100):
        p = initial_partition(c, seed)
        if not p.e3:
            break
    qs1, qs2 = swap_candidates(c, p)
    assert not qs1 and not qs2


def test_swap_candidates_six_cycle_contiguous():
    p = classify(SIX_CYCLE, frozenset({0, 1, 2}))
    qs1, qs2 = swap_candidates(SIX_CYCLE, p)
    # qubits 0 and 2 have external 1 = internal 1; qubit 1 is not active
    assert qs1 == frozenset({0, 2})
    assert qs2 == frozenset({3, 5})


def test_refine_noop_without_cross_edges():
    c = Circuit(4, ((0, 1), (2, 3)))
    for seed in range(100):
        p = initial_partition(c, seed)
        if not p.e3:
            break
    assert refine(c, p, DivisionOptions()) == p


def test_refine_budget_zero_is_identity():
    p = initial_partition(K4, seed=0)
    assert refine(K4, p, DivisionOptions(max_iter=0)) == p


def test_refine_six_cycle_reaches_optimum():
    # oracle: enumerate all C(6,3) = 20 balanced splits; min loss at k=0.5 is 3
    best = min(brute_loss(SIX_CYCLE, set(q1), 0.5)
               for q1 in itertools.combinations(range(6), 3))
    assert best == pytest.approx(3.0)
    p = classify(SIX_CYCLE, frozenset({0, 2, 4}))
    assert loss(p, 0.5) == pytest.approx(6.0)  # every edge cut
    refined = refine(SIX_CYCLE, p, DivisionOptions())
    assert loss(refined, 0.5) == pytest.approx(3.0)


def test_refine_trace_oracle():
    # every committed swap must be the exhaustive best over Qs1 x Qs2
    rng = random.Random(4)
    checked_steps = 0
    for trial in range(40):
        n = rng.randrange(4, 11)
        gates = []
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < 0.45:
                    gates.append((u, v))
        if not gates:
            continue
        c = Circuit(n, tuple(gates))
        p0 = initial_partition(c, seed=trial)
        opts = DivisionOptions(seed=trial)
        _, steps = refine_trace(c, p0, opts)
        q1 = set(p0.q1)
        current = brute_loss(c, q1, opts.k)
        for step in steps:
            candidates = {}
            for u in step.qs1:
                for v in step.qs2:
                    trial_q1 = (q1 - {u}) | {v}
                    candidates[(u, v)] = brute_loss(c, trial_q1, opts.k)
            best_loss = min(candidates.values())
            assert best_loss < current  # strictly decreasing
            assert step.loss_after == pytest.approx(best_loss)
            assert candidates[step.swapped] == pytest.approx(best_loss)
            q1 = (q1 - {step.swapped[0]}) | {step.swapped[1]}
            current = best_loss
            checked_steps += 1
    assert checked_steps > 0


def test_refine_preserves_balance_and_classification():
    for trial in range(10):
        c = generate_rand3reg(12, trial)
        p0 = initial_partition(c, seed=trial)
        p = refine(c, p0, DivisionOptions(seed=trial))
        assert len(p.q1) == len(p0.q1) and len(p.q2) == len(p0.q2)
        e1, e2, e3, qa1, qa2 = brute_classify(c, p.q1)
        assert (p.e1, p.e2, p.e3) == (frozenset(e1), frozenset(e2), frozenset(e3))
        assert (p.qa1, p.qa2) == (frozenset(qa1), frozenset(qa2))
        assert p.qr1 == p.q1 - p.qa1 and p.qr2 == p.q2 - p.qa2


@given(st.integers(0, 500))
@settings(max_examples=40, deadline=None)
def test_refine_loss_strictly_decreasing(seed):
    c = generate_rand3reg(10, seed)
    p = initial_partition(c, seed=seed)
    opts = DivisionOptions(seed=seed)
    _, steps = refine_trace(c, p, opts)
    losses = [loss(p, opts.k)] + [s.loss_after for s in steps]
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_split_circuit_two_disjoint_edges():
    c = Circuit(4, ((0, 1), (2, 3)))
    p = classify(c, frozenset({0, 1}))
    qc1, qc2, qc3 = split_circuit(c, p)
    assert qc1.num_gates == 1 and qc2.num_gates == 1
    assert qc3.num_qubits == 0 and qc3.num_gates == 0


def test_split_circuit_k4():
    p = classify(K4, frozenset({0, 1}))
    qc1, qc2, qc3 = split_circuit(K4, p)
    assert qc1.num_gates == 1 and qc2.num_gates == 1
    assert qc3.num_gates == 4 and qc3.num_qubits == 4


def test_split_circuit_conserves_gates():
    for trial in range(8):
        c = generate_rand3reg(14, trial)
        p = refine(c, initial_partition(c, trial), DivisionOptions())
        qc1, qc2, qc3 = split_circuit(c, p)
        assert qc1.num_gates + qc2.num_gates + qc3.num_gates == c.num_gates


def test_split_circuit_relabels_densely():
    c = Circuit(5, ((0, 4), (1, 2), (1, 3)))
    p = classify(c, frozenset({0, 4}))
    qc1, qc2, qc3 = split_circuit(c, p)
    assert qc1.num_qubits == 2 and qc1.gates == ((0, 1),)
    assert qc2.num_qubits == 3
    # local ids follow sorted original ids: {1,2,3} -> 1->0, 2->1, 3->2
    assert set(qc2.gates) == {(0, 1), (0, 2)}
