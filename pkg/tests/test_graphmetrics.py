from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtgraph.graphmetrics import centrality, recovery
from mtgraph.precision import EdgeSet


def es(d, pairs, tau=None):
    return EdgeSet(d=d, edges=frozenset(pairs), tau=tau)


# ---------------------------------------------------------------------------
# recovery

def test_perfect_recovery():
    truth = es(5, {(0, 1), (2, 3)})
    rep = recovery(truth, truth)
    assert rep.fpr == 0.0
    assert rep.f1 == 1.0
    assert rep.precision == 1.0
    assert rep.recall == 1.0


def test_empty_estimate_nonempty_truth():
    rep = recovery(es(4, set()), es(4, {(0, 1)}))
    assert rep.recall == 0.0
    assert rep.f1 == 0.0
    assert rep.fpr == 0.0


def test_hand_counted_four_node_case():
    truth = es(4, {(0, 1), (2, 3)})      # AB, CD
    est = es(4, {(0, 1), (0, 2)})        # AB, AC
    rep = recovery(est, truth)
    assert rep.precision == pytest.approx(0.5)
    assert rep.recall == pytest.approx(0.5)
    assert rep.f1 == pytest.approx(0.5)
    assert rep.fpr == pytest.approx(1.0 / 4.0)


def test_recovery_dimension_mismatch():
    with pytest.raises(ValueError):
        recovery(es(3, set()), es(4, set()))


def test_recovery_carries_tau():
    rep = recovery(es(3, {(0, 1)}, tau=0.2), es(3, {(0, 1)}))
    assert rep.tau == 0.2


# ---------------------------------------------------------------------------
# centrality

def test_path_graph_betweenness():
    table = centrality(es(3, {(0, 1), (1, 2)}))
    assert table.betweenness[1] == pytest.approx(1.0)
    assert table.betweenness[0] == 0.0
    assert table.betweenness[2] == 0.0
    assert table.mean_rank[1] == 1.0


def test_complete_graph_all_tie():
    table = centrality(es(4, set(combinations(range(4), 2))))
    assert np.allclose(table.mean_rank, 2.5)


def test_star_hub_ranks_first_everywhere():
    star = es(6, {(0, j) for j in range(1, 6)})
    table = centrality(star)
    assert table.degree[0] == 5.0
    for metric in (table.degree, table.closeness, table.betweenness, table.hub):
        assert np.argmax(metric) == 0
    assert table.mean_rank[0] == 1.0
    assert np.allclose(table.mean_rank[1:], 4.0)


def test_empty_graph_all_zero():
    table = centrality(es(4, set()))
    for metric in (table.degree, table.closeness, table.betweenness,
                   table.hub, table.mean_rank):
        assert np.all(metric == 0.0)


def test_disconnected_graph_is_finite():
    two = es(6, {(0, 1), (2, 3)})
    table = centrality(two)
    assert np.all(np.isfinite(table.closeness))
    assert np.all(np.isfinite(table.hub))


def test_relabeling_invariance(rng):
    pairs = {(0, 1), (1, 2), (2, 3), (3, 4), (1, 4)}
    base = centrality(es(5, pairs))
    perm = rng.permutation(5)
    mapped = {(min(perm[a], perm[b]), max(perm[a], perm[b])) for a, b in pairs}
    table = centrality(es(5, mapped))
    for name in ("degree", "closeness", "betweenness", "hub", "mean_rank"):
        orig = getattr(base, name)
        new = getattr(table, name)
        assert np.allclose(orig, new[perm], atol=1e-8), name


def brute_force_betweenness(d, pairs):
    """Enumerate all simple paths per pair; count shortest ones through each
    interior node, splitting evenly."""
    adj = {i: set() for i in range(d)}
    for a, b in pairs:
        adj[a].add(b)
        adj[b].add(a)

    def all_paths(s, t):
        out = []
        stack = [(s, [s])]
        while stack:
            v, path = stack.pop()
            if v == t:
                out.append(path)
                continue
            for w in adj[v]:
                if w not in path:
                    stack.append((w, path + [w]))
        return out

    bc = np.zeros(d)
    for s in range(d):
        for t in range(s + 1, d):
            paths = all_paths(s, t)
            if not paths:
                continue
            shortest = min(len(p) for p in paths)
            sp = [p for p in paths if len(p) == shortest]
            for p in sp:
                for v in p[1:-1]:
                    bc[v] += 1.0 / len(sp)
    return bc


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_betweenness_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(3, 8))
    all_pairs = list(combinations(range(d), 2))
    mask = rng.random(len(all_pairs)) < 0.45
    pairs = {p for p, m in zip(all_pairs, mask) if m}
    table = centrality(es(d, pairs))
    assert np.allclose(table.betweenness, brute_force_betweenness(d, pairs),
                       atol=1e-10)


def test_hub_power_iteration_converges_on_bipartite():
    # a single edge is bipartite; without the +I shift power iteration
    # would oscillate between sign patterns
    table = centrality(es(2, {(0, 1)}))
    assert np.allclose(table.hub, np.ones(2) / np.sqrt(2), atol=1e-8)


def test_centrality_names_travel_through():
    table = centrality(es(3, {(0, 1)}), names=["a", "b", "c"])
    assert table.names == ["a", "b", "c"]
    with pytest.raises(ValueError):
        centrality(es(3, set()), names=["a"])
