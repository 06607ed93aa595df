import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capexplan.scenario_tree import (
    InconsistentProbabilities,
    MalformedTree,
    NodeId,
    UnknownNode,
    build_tree,
    enumerate_paths,
    parent_of,
    truncate,
)


def test_binary_tree_joint_probabilities():
    tree = build_tree(3, [2, 2])
    assert tree.nodes_per_stage == [1, 2, 4]
    for j in range(1, 5):
        assert tree.joint_prob[NodeId(3, j)] == pytest.approx(0.25)


def test_root_only_tree():
    tree = build_tree(1)
    assert tree.nodes_per_stage == [1]
    assert tree.joint_prob[NodeId(1, 1)] == 1.0
    assert enumerate_paths(tree) == [[NodeId(1, 1)]]


def test_biogas_shape_tree_has_32_equiprobable_leaves():
    tree = build_tree(10, [2, 2, 2, 2, 2, 1, 1, 1, 1])
    assert tree.nodes_per_stage == [1, 2, 4, 8, 16, 32, 32, 32, 32, 32]
    assert tree.num_nodes() == 191
    paths = enumerate_paths(tree)
    assert len(paths) == 32
    assert all(len(p) == 10 for p in paths)
    # oracle: joint probability = product of conditionals along each path
    for path in paths:
        product = 1.0
        for node in path:
            product *= tree.conditional[node]
        assert tree.joint_prob[path[-1]] == pytest.approx(product, abs=1e-12)
        assert product == pytest.approx(1 / 32)


def test_parent_of_root_is_absent():
    tree = build_tree(3, [2, 2])
    assert parent_of(tree, NodeId(1, 1)) is None


def test_parent_links():
    tree = build_tree(3, [2, 2])
    assert parent_of(tree, NodeId(2, 2)) == NodeId(1, 1)
    # siblings share their parent
    assert parent_of(tree, NodeId(3, 1)) == parent_of(tree, NodeId(3, 2)) == NodeId(2, 1)
    assert parent_of(tree, NodeId(3, 3)) == NodeId(2, 2)


def test_parent_of_unknown_node_raises():
    tree = build_tree(2, [2])
    with pytest.raises(UnknownNode):
        parent_of(tree, NodeId(3, 1))


def test_unequal_conditionals():
    tree = build_tree(2, [2], [[0.7, 0.3]])
    assert tree.joint_prob[NodeId(2, 1)] == pytest.approx(0.7)
    assert tree.joint_prob[NodeId(2, 2)] == pytest.approx(0.3)


def test_inconsistent_probabilities_rejected():
    with pytest.raises(InconsistentProbabilities):
        build_tree(2, [2], [[0.6, 0.3]])
    with pytest.raises(InconsistentProbabilities):
        build_tree(2, [2], [[1.4, -0.4]])


def test_malformed_trees_rejected():
    with pytest.raises(MalformedTree):
        build_tree(0)
    with pytest.raises(MalformedTree):
        build_tree(3, [2])
    with pytest.raises(MalformedTree):
        build_tree(3, [2, 0])


def test_deterministic_tree_is_linear_chain():
    tree = build_tree(4, [1, 1, 1])
    assert tree.is_deterministic()
    for t in range(2, 5):
        assert parent_of(tree, NodeId(t, 1)) == NodeId(t - 1, 1)


def test_truncate_keeps_prefix():
    tree = build_tree(4, [2, 2, 1])
    sub = truncate(tree, 2)
    assert sub.nodes_per_stage == [1, 2]
    assert sub.joint_prob[NodeId(2, 2)] == pytest.approx(0.5)
    with pytest.raises(MalformedTree):
        truncate(tree, 5)


@given(
    st.integers(min_value=1, max_value=6),
    st.lists(st.integers(min_value=1, max_value=3), min_size=0, max_size=5),
    st.randoms(use_true_random=False),
)
@settings(max_examples=60, deadline=None)
def test_probability_consistency_properties(extra, branching, rnd):
    branching = branching[: extra - 1] if extra > 1 else []
    stages = len(branching) + 1
    conditionals = []
    nodes = 1
    for b in branching:
        group = []
        for _ in range(nodes):
            weights = [rnd.random() + 0.05 for _ in range(b)]
            total = sum(weights)
            group.extend(w / total for w in weights)
        conditionals.append(group)
        nodes *= b
    tree = build_tree(stages, branching, conditionals)
    # stage-wise probabilities sum to one
    for t in range(1, stages + 1):
        assert sum(tree.joint_prob[n] for n in tree.nodes(t)) == pytest.approx(
            1.0, abs=1e-9
        )
    # chain rule: children's joint probabilities sum to the parent's
    for node in tree.nodes():
        kids = tree.children_of(node)
        if kids:
            assert sum(tree.joint_prob[k] for k in kids) == pytest.approx(
                tree.joint_prob[node], abs=1e-9
            )
    # every non-root node's parent lies one stage up
    for node in tree.nodes():
        parent = parent_of(tree, node)
        if node == tree.root:
            assert parent is None
        else:
            assert parent.stage == node.stage - 1
    assert len(enumerate_paths(tree)) == tree.nodes_per_stage[-1]
