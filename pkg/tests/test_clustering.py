import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctwa.clustering import Clustering, make_clustering, naive_clusters, rg_pair_clusters
from ctwa.disorder import ModelParams, build_couplings


def clusters(cl):
    return [list(c) for c in cl.clusters]


def test_naive():
    assert clusters(naive_clusters(4, 2)) == [[0, 1], [2, 3]]
    assert clusters(naive_clusters(4, 1)) == [[0], [1], [2], [3]]
    assert clusters(naive_clusters(5, 2)) == [[0, 1], [2, 3], [4]]
    with pytest.raises(ValueError):
        naive_clusters(4, 0)


def couplings(pos):
    return build_couplings(pos, ModelParams(len(pos), max(pos) + 1, 1.0, 0.0))


def test_rg_examples():
    assert clusters(rg_pair_clusters(couplings([0, 2, 3, 10]))) == [[0, 3], [1, 2]]
    assert clusters(rg_pair_clusters(couplings([0, 1, 5, 6]))) == [[0, 1], [2, 3]]
    assert clusters(rg_pair_clusters(couplings([0, 1, 9]))) == [[0, 1], [2]]


def test_rg_tie_break_is_lexicographic():
    # all couplings equal: (0,1) first, then (2,3)
    J = np.ones((4, 4)) - np.eye(4)
    assert clusters(rg_pair_clusters(J)) == [[0, 1], [2, 3]]


def test_validation_and_json():
    with pytest.raises(ValueError):
        Clustering(((0, 1), (1, 2)), 2)
    with pytest.raises(ValueError):
        Clustering(((0, 1, 2),), 2)
    cl = make_clustering([[3, 0], [1], [2]])
    assert Clustering.from_json(cl.to_json()) == cl
    which, slot = cl.locate()
    assert list(which) == [0, 1, 2, 0] and list(slot) == [0, 0, 0, 1]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 200), min_size=1, max_size=14, unique=True))
def test_rg_partition_properties(sites):
    pos = sorted(sites)
    J = couplings(pos) if len(pos) > 1 else np.zeros((1, 1))
    cl = rg_pair_clusters(J)
    n = len(pos)
    assert sorted(i for c in cl.clusters for i in c) == list(range(n))
    assert sum(len(c) == 1 for c in cl.clusters) == n % 2
    # the globally strongest bond is always one of the pairs
    if n > 1:
        iu = np.triu_indices(n, 1)
        k = np.argmax(J[iu])
        assert (int(iu[0][k]), int(iu[1][k])) in cl.clusters
