import random

import pytest

from mcnoc.partition import (
    CandidateSet,
    CostModel,
    PartitionError,
    basic_partition_cost,
    basic_partitions,
    candidate_sets,
    classify,
    cost,
    cost_dual_path,
    cost_multi_unicast,
    dpm_partition,
    exact_optimal_partition,
    representative,
    saving,
)
from mcnoc.routing import RouteMode
from mcnoc.topology import Mesh


def test_classify_examples():
    assert classify((5, 5), (3, 3)) == 0
    assert classify((3, 6), (3, 3)) == 1
    assert classify((0, 3), (3, 3)) == 3


def test_classify_covers_all_sectors():
    s = (3, 3)
    expected = {(5, 5): 0, (3, 5): 1, (1, 5): 2, (1, 3): 3,
                (1, 1): 4, (3, 1): 5, (5, 1): 6, (5, 3): 7}
    for d, sector in expected.items():
        assert classify(d, s) == sector


def test_basic_partitions_example():
    parts = basic_partitions({(5, 5), (3, 6), (0, 3)}, (3, 3))
    assert parts[0] == {(5, 5)}
    assert parts[1] == {(3, 6)}
    assert parts[3] == {(0, 3)}
    for i in (2, 4, 5, 6, 7):
        assert not parts[i]


def test_basic_partitions_empty_and_corner():
    assert all(not p for p in basic_partitions(set(), (3, 3)))
    m = Mesh(3, 3)
    src = (0, 0)
    dests = {m.coord_of(l) for l in range(9)} - {src}
    parts = basic_partitions(dests, src)
    nonempty = {i for i, p in enumerate(parts) if p}
    assert nonempty == {0, 1, 7}


def test_representative_examples():
    m = Mesh(8, 8)
    assert representative({(2, 1), (1, 3), (3, 3)}, (0, 0), m) == (2, 1)
    assert representative({(1, 0)}, (0, 0), m) == (1, 0)
    # distance tie: label 1 vs label 15
    assert representative({(1, 0), (0, 1)}, (0, 0), m) == (1, 0)


def test_cost_multi_unicast_examples():
    assert cost_multi_unicast({(2, 1), (1, 3), (3, 3)}, (2, 1)) == 6
    assert cost_multi_unicast({(2, 1)}, (2, 1)) == 0
    assert cost_multi_unicast({(0, 0), (3, 0), (0, 3)}, (0, 0)) == 6


def test_cost_dual_path_examples():
    m = Mesh(4, 4)
    r = (1, 1)     # label 6
    members = {r, (2, 2), (3, 3), (0, 0)}   # labels 10, 12, 0
    assert cost_dual_path(members, r, m) == 6
    assert cost_dual_path({r}, r, m) == 0
    assert cost_dual_path({(0, 0), (1, 0), (2, 0)}, (0, 0), m) == 2


def test_cost_model_examples():
    m = Mesh(4, 4)
    members = {(1, 1), (2, 2), (3, 3), (0, 0)}
    c, mode = cost(members, (1, 1), m, CostModel.FROM_REPRESENTATIVE)
    assert (c, mode) == (6, RouteMode.DUAL_PATH)
    # single destination: C_t == C_p, multi-unicast wins the tie
    c, mode = cost({(2, 1)}, (0, 0), m, CostModel.FROM_REPRESENTATIVE)
    assert mode is RouteMode.MULTI_UNICAST
    assert cost(set(), (0, 0), m, CostModel.FROM_REPRESENTATIVE) == (0, RouteMode.MULTI_UNICAST)


def test_include_approach_leg_adds_source_distance():
    m = Mesh(4, 4)
    members = {(2, 2), (3, 3)}
    base, _ = cost(members, (0, 0), m, CostModel.FROM_REPRESENTATIVE)
    full, _ = cost(members, (0, 0), m, CostModel.INCLUDE_APPROACH_LEG)
    assert full == base + 4   # Manhattan((0,0),(2,2))


def _spread_instance(mesh, rng, k):
    nodes = [mesh.coord_of(l) for l in range(mesh.node_count)]
    src = rng.choice(nodes)
    pool = [n for n in nodes if n != src]
    return src, set(rng.sample(pool, k))


def test_candidate_sets_counts_and_eligibility():
    m = Mesh(8, 8)
    src = (3, 3)
    # a destination in every sector
    dests = {(5, 5), (3, 5), (1, 5), (1, 3), (1, 1), (3, 1), (5, 1), (5, 3)}
    cands = candidate_sets(basic_partitions(dests, src), src, m,
                           CostModel.FROM_REPRESENTATIVE)
    assert len(cands) == 24
    assert all(c.eligible for c in cands if c.merged)

    only_p0 = candidate_sets(basic_partitions({(5, 5)}, src), src, m,
                             CostModel.FROM_REPRESENTATIVE)
    assert len(only_p0) == 24
    assert sum(1 for c in only_p0 if c.eligible) == 0

    # P0 and P2 non-empty, P1 empty
    gap = candidate_sets(basic_partitions({(5, 5), (1, 5)}, src), src, m,
                         CostModel.FROM_REPRESENTATIVE)
    by_cons = {c.constituents: c for c in gap}
    assert by_cons[(0, 1, 2)].eligible
    assert not by_cons[(0, 1)].eligible


def test_saving_examples():
    def mk(cost, cons, members):
        return CandidateSet(constituents=cons, members=frozenset(members),
                            representative=None, cost=cost, mode=RouteMode.MULTI_UNICAST)

    a = mk(4, (0,), {(5, 5)})
    b = mk(3, (1,), {(3, 5)})
    merged = mk(5, (0, 1), {(5, 5), (3, 5)})
    assert saving(merged, [a, b]) == 2
    assert saving(mk(9, (0, 1), {(5, 5), (3, 5)}), [a, b]) == 0
    empty_mid = mk(0, (1,), set())
    c = mk(3, (2,), {(1, 5)})
    merged3 = mk(7, (0, 1, 2), {(5, 5), (1, 5)})
    assert saving(merged3, [a, empty_mid, c]) == 0
    with pytest.raises(PartitionError):
        saving(merged, [a, c])


def test_dpm_single_destination():
    m = Mesh(8, 8)
    fp = dpm_partition({(4, 2)}, (1, 1), m)
    assert len(fp.sets) == 1
    assert fp.sets[0].mode is RouteMode.MULTI_UNICAST
    assert fp.total_cost == 4       # Manhattan((1,1),(4,2))
    assert fp.merge_iterations == 0


def test_dpm_single_sector_no_merges():
    m = Mesh(8, 8)
    fp = dpm_partition({(3, 3), (4, 4), (5, 5)}, (1, 1), m)
    assert fp.merge_iterations == 0
    assert len(fp.sets) == 1


def test_dpm_covers_and_is_disjoint():
    m = Mesh(8, 8)
    rng = random.Random(7)
    for _ in range(200):
        src, dests = _spread_instance(m, rng, rng.randint(2, 20))
        fp = dpm_partition(dests, src, m)
        union = set()
        for cand in fp.sets:
            assert not (union & cand.members)
            union |= cand.members
        assert union == dests
        assert fp.merge_iterations <= 4


def test_dpm_cost_sandwich_small():
    m = Mesh(8, 8)
    rng = random.Random(11)
    gaps = []
    for _ in range(100):
        src, dests = _spread_instance(m, rng, rng.randint(10, 16))
        fp = dpm_partition(dests, src, m)
        opt, opt_fp = exact_optimal_partition(dests, src, m)
        basic = basic_partition_cost(dests, src, m)
        assert opt <= fp.total_cost <= basic
        assert opt == opt_fp.total_cost
        gaps.append(fp.total_cost - opt)
    assert min(gaps) == 0   # greedy is exact on some instances


def test_exact_optimal_covers():
    m = Mesh(8, 8)
    rng = random.Random(3)
    src, dests = _spread_instance(m, rng, 12)
    _, fp = exact_optimal_partition(dests, src, m)
    union = set()
    for cand in fp.sets:
        assert not (union & cand.members)
        union |= cand.members
    assert union == dests


def test_empty_destinations_rejected():
    m = Mesh(8, 8)
    with pytest.raises(PartitionError):
        dpm_partition(set(), (0, 0), m)
    with pytest.raises(PartitionError):
        exact_optimal_partition(set(), (0, 0), m)
