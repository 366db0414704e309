import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from rlmac.engine import (
    ConfigurationError,
    Topology,
    TransmissionRecord,
    classify_transmissions,
    collision_probabilities,
    epoch_trace,
    generate_arrivals,
    run_epoch,
)


def rngs(seed, n):
    return [np.random.default_rng([seed, i]) for i in range(n)]


def brute_force_fates(records, topology):
    """O(n^2) pairwise reference for classify_transmissions."""
    out = []
    for r in records:
        self_hit = inter_hit = False
        for o in records:
            if o is r:
                continue
            if o.start < r.end and r.start < o.end:
                if o.node == r.node:
                    self_hit = True
                elif o.node in topology.receiver_audible[r.node]:
                    inter_hit = True
        out.append((self_hit, inter_hit))
    return out


# -- topology -----------------------------------------------------------------

def test_fully_connected_topology():
    t = Topology.fully_connected(4)
    assert t.node_count == 4
    assert t.is_complete
    assert all(t.receiver_audible[i] == frozenset(range(4)) for i in range(4))
    assert not t.adjacency.diagonal().any()


def test_chain_audibility_is_self_plus_neighbours():
    t = Topology.chain(3)
    assert t.receiver_audible == (frozenset({0, 1}), frozenset({0, 1, 2}), frozenset({1, 2}))
    assert t.neighbors(1) == [0, 2]
    assert not t.is_complete


@pytest.mark.parametrize("adj", [
    [[1, 0], [0, 0]],
    [[0, 1], [0, 0]],
])
def test_topology_rejects_bad_adjacency(adj):
    with pytest.raises(ConfigurationError):
        Topology(np.array(adj, bool), (frozenset({0}), frozenset({1})))


def test_topology_requires_self_in_audible_set():
    with pytest.raises(ConfigurationError):
        Topology(np.zeros((2, 2), bool), (frozenset(), frozenset({1})))


# -- arrivals -----------------------------------------------------------------

def test_zero_rate_gives_no_arrivals():
    assert generate_arrivals(0.0, (0.0, 500.0), 3).size == 0


def test_negative_rate_is_configuration_error():
    with pytest.raises(ConfigurationError):
        generate_arrivals(-1.0, (0.0, 10.0), 0)


def test_degenerate_window_rejected():
    with pytest.raises(ConfigurationError):
        generate_arrivals(1.0, (5.0, 5.0), 0)


def test_arrivals_are_deterministic_per_seed():
    a = generate_arrivals(2.0, (0.0, 1000.0), 42)
    b = generate_arrivals(2.0, (0.0, 1000.0), 42)
    assert np.array_equal(a, b)


def test_arrival_counts_within_three_sigma():
    # Poisson(2000): sd = sqrt(2000)
    bound = 3 * math.sqrt(2000)
    counts = [generate_arrivals(2.0, (0.0, 1000.0), s).size for s in range(40)]
    assert all(abs(c - 2000) <= bound for c in counts)
    assert abs(np.mean(counts) - 2000) < 3 * math.sqrt(2000 / 40)


def test_interarrival_gaps_are_exponential():
    t = generate_arrivals(2.0, (0.0, 5000.0), 7)
    gaps = np.diff(t)
    assert np.all(gaps >= 0)
    assert np.all((t >= 0) & (t < 5000))
    assert gaps.mean() == pytest.approx(0.5, rel=0.03)
    assert sps.kstest(gaps, "expon", args=(0, 0.5)).pvalue > 0.001


# -- classification -------------------------------------------------------------

def test_lone_transmission_succeeds():
    (r,) = classify_transmissions([TransmissionRecord(0, 3.0)], Topology.fully_connected(2))
    assert r.success and r.end - r.start == 1.0


def test_overlapping_own_packets_both_self_collide():
    recs = classify_transmissions(
        [TransmissionRecord(0, 0.0), TransmissionRecord(0, 0.5)], Topology.fully_connected(1)
    )
    assert all(r.self_collided and not r.inter_collided for r in recs)


def test_overlap_between_nodes_inter_collides_both():
    recs = classify_transmissions(
        [TransmissionRecord(0, 0.0), TransmissionRecord(1, 0.9)], Topology.fully_connected(2)
    )
    assert all(r.inter_collided and not r.self_collided for r in recs)


def test_chain_ends_do_not_interfere():
    recs = classify_transmissions(
        [TransmissionRecord(0, 0.0), TransmissionRecord(2, 0.5)], Topology.chain(3)
    )
    assert all(r.success for r in recs)


def test_middle_node_hears_both_ends():
    recs = classify_transmissions(
        [TransmissionRecord(0, 0.0), TransmissionRecord(1, 0.5), TransmissionRecord(2, 1.2)],
        Topology.chain(3),
    )
    by_node = {r.node: r for r in recs}
    assert by_node[1].inter_collided
    assert by_node[0].inter_collided and by_node[2].inter_collided


def test_touching_endpoints_do_not_collide():
    recs = classify_transmissions(
        [TransmissionRecord(0, 0.0), TransmissionRecord(0, 1.0), TransmissionRecord(1, 2.0)],
        Topology.fully_connected(2),
    )
    assert all(r.success for r in recs)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.tuples(st.integers(0, 2), st.floats(0, 8, allow_nan=False)), max_size=14),
    st.sampled_from(["full", "chain"]),
)
def test_classification_matches_pairwise_reference(items, kind):
    topo = Topology.fully_connected(3) if kind == "full" else Topology.chain(3)
    recs = sorted((TransmissionRecord(n, s) for n, s in items), key=lambda r: r.start)
    got = classify_transmissions(recs, topo)
    assert [(r.self_collided, r.inter_collided) for r in got] == brute_force_fates(recs, topo)
    assert [(r.node, r.start) for r in got] == [(r.node, r.start) for r in recs]


# -- epochs -------------------------------------------------------------------

def test_full_gating_discards_everything():
    st_ = run_epoch(Topology.fully_connected(3), [1.0, 2.0, 0.5], [0, 0, 0], 500, rngs(1, 3))
    assert st_.transmitted.sum() == 0
    assert np.array_equal(st_.discarded, st_.arrivals)
    assert st_.network_throughput == 0


def test_probability_out_of_range_rejected():
    with pytest.raises(ConfigurationError):
        run_epoch(Topology.fully_connected(1), [1.0], [1.5], 100, rngs(0, 1))
    with pytest.raises(ConfigurationError):
        run_epoch(Topology.fully_connected(1), [1.0], [0.5], 0, rngs(0, 1))


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 4),
    st.lists(st.floats(0, 3), min_size=4, max_size=4),
    st.lists(st.floats(0, 1), min_size=4, max_size=4),
    st.integers(0, 2**32),
)
def test_epoch_counter_invariants(n, loads, probs, seed):
    s = run_epoch(Topology.fully_connected(n), loads[:n], probs[:n], 200, rngs(seed, n))
    assert np.array_equal(s.transmitted + s.discarded, s.arrivals)
    assert np.all(s.success <= s.transmitted)
    assert np.all(s.self_coll <= s.transmitted) and np.all(s.inter_coll <= s.transmitted)
    # every transmission is a success or collided at least once, never both
    assert np.all(s.success + np.maximum(s.self_coll, s.inter_coll) <= s.transmitted)
    assert np.all(s.transmitted - s.success <= s.self_coll + s.inter_coll)
    assert s.network_throughput == pytest.approx(s.success.sum() / 200)


def test_epoch_matches_trace():
    topo = Topology.chain(3)
    args = (topo, [0.7, 0.9, 0.4], [1.0, 0.6, 0.8], 300)
    stats = run_epoch(*args, rngs(5, 3))
    events, recs = epoch_trace(*args, rngs(5, 3))
    for i in range(3):
        mine = [r for r in recs if r.node == i]
        assert stats.arrivals[i] == sum(e.node == i for e in events)
        assert stats.transmitted[i] == len(mine) == sum(e.node == i and e.gated_in for e in events)
        assert stats.success[i] == sum(r.success for r in mine)
        assert stats.self_coll[i] == sum(r.self_collided for r in mine)
        assert stats.inter_coll[i] == sum(r.inter_collided for r in mine)


def test_observed_nonoverlap_counts_neighbour_packets_clear_of_own():
    topo = Topology.chain(3)
    stats = run_epoch(topo, [0.5, 0.5, 0.5], [1, 1, 1], 400, rngs(9, 3))
    _, recs = epoch_trace(topo, [0.5, 0.5, 0.5], [1, 1, 1], 400, rngs(9, 3))
    for i in range(3):
        own = [r for r in recs if r.node == i]
        for j in range(3):
            expected = 0
            if topo.adjacency[i, j]:
                expected = sum(
                    1 for r in recs if r.node == j
                    and not any(o.start < r.end and r.start < o.end for o in own)
                )
            assert stats.observed_nonoverlap[i, j] == expected


def test_monotone_gating_on_same_arrival_stream():
    topo = Topology.fully_connected(2)
    _, hi = epoch_trace(topo, [1.5, 1.0], [0.8, 0.6], 300, rngs(3, 2))
    _, lo = epoch_trace(topo, [1.5, 1.0], [0.4, 0.3], 300, rngs(3, 2))
    assert {(r.node, r.start) for r in lo} <= {(r.node, r.start) for r in hi}


def test_epochs_are_deterministic():
    a = run_epoch(Topology.fully_connected(2), [1.0, 0.5], [0.7, 1.0], 1000, rngs(11, 2))
    b = run_epoch(Topology.fully_connected(2), [1.0, 0.5], [0.7, 1.0], 1000, rngs(11, 2))
    for f in ("arrivals", "transmitted", "self_coll", "inter_coll", "success", "observed_nonoverlap"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_label_exchange_symmetry():
    topo = Topology.fully_connected(2)
    a = run_epoch(topo, [1.2, 0.4], [0.9, 0.5], 500, [np.random.default_rng(1), np.random.default_rng(2)])
    b = run_epoch(topo, [0.4, 1.2], [0.5, 0.9], 500, [np.random.default_rng(2), np.random.default_rng(1)])
    for f in ("arrivals", "transmitted", "self_coll", "inter_coll", "success"):
        assert np.array_equal(getattr(a, f), getattr(b, f)[::-1])
    assert np.array_equal(a.observed_nonoverlap, b.observed_nonoverlap[::-1, ::-1])


@pytest.mark.parametrize("g", [0.25, 0.5, 1.0, 2.0, 4.0])
def test_single_node_matches_exact_vulnerable_window(g):
    # a packet survives iff no other own arrival within one duration either side
    stats = run_epoch(Topology.fully_connected(1), [g], [1.0], 1e5, rngs(int(g * 100), 1))
    assert stats.throughput[0] == pytest.approx(g * math.exp(-2 * g), abs=0.005)


# -- collision probabilities ------------------------------------------------------

def _stats(transmitted, self_coll, inter_coll):
    from rlmac.engine import EpochStats
    t = np.array([transmitted])
    return EpochStats(1000.0, t, t, np.array([self_coll]), np.array([inter_coll]),
                      t - np.maximum(self_coll, inter_coll), np.zeros(1, int), np.zeros((1, 1), int))


def test_collision_probabilities_ratio():
    assert collision_probabilities(_stats(10, 2, 5), 0) == (0.2, 0.5)


def test_collision_probabilities_zero_transmissions():
    assert collision_probabilities(_stats(0, 0, 0), 0) == (0.0, 0.0)


def test_self_collision_probability_long_epoch():
    g = 2.4
    stats = run_epoch(Topology.fully_connected(1), [g], [1.0], 1e5, rngs(24, 1))
    p_sc, p_ic = collision_probabilities(stats, 0)
    assert p_sc == pytest.approx(1 - math.exp(-2 * g), abs=0.02)
    assert p_ic == 0.0
