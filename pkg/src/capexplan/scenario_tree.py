"""Scenario trees for multi-stage planning horizons.

A tree node is addressed by a 1-based (stage, scenario) pair. Conditional
probabilities live on edges; node (joint) probabilities are derived by
multiplying conditionals along the path from the root, so stage-wise and
parent/child probability consistency hold by construction.
"""

from __future__ import annotations

from typing import NamedTuple, Optional, Sequence


class TreeError(Exception):
    """Base class for scenario-tree construction and lookup errors."""


class MalformedTree(TreeError):
    """Raised when stage counts or branching factors do not form a tree."""


class InconsistentProbabilities(TreeError):
    """Raised when a node's outgoing edge probabilities do not sum to one."""


class UnknownNode(TreeError):
    """Raised when a (stage, scenario) pair does not exist in the tree."""


PROB_TOL = 1e-9


class NodeId(NamedTuple):
    stage: int
    scenario: int

    def __str__(self):
        return f"{{{self.stage},{self.scenario}}}"


class ScenarioTree:
    """Rooted tree of (stage, scenario) nodes with joint probabilities.

    Immutable after construction; build instances through :func:`build_tree`.
    """

    def __init__(self, num_stages, nodes_per_stage, parent, conditional, joint_prob):
        self.num_stages = num_stages
        self.nodes_per_stage = list(nodes_per_stage)
        self.parent = dict(parent)
        self.conditional = dict(conditional)
        self.joint_prob = dict(joint_prob)
        self.children = {}
        for child, par in self.parent.items():
            self.children.setdefault(par, []).append(child)
        for kids in self.children.values():
            kids.sort()

    @property
    def root(self) -> NodeId:
        return NodeId(1, 1)

    def nodes(self, stage: Optional[int] = None):
        """All nodes, or the nodes of one stage, in (stage, scenario) order."""
        stages = range(1, self.num_stages + 1) if stage is None else [stage]
        for t in stages:
            if not 1 <= t <= self.num_stages:
                raise UnknownNode(f"stage {t} outside 1..{self.num_stages}")
            for j in range(1, self.nodes_per_stage[t - 1] + 1):
                yield NodeId(t, j)

    def leaves(self):
        return list(self.nodes(self.num_stages))

    def decision_nodes(self):
        """Nodes of the decision stages 1..T-1 (no installation at stage T)."""
        for t in range(1, self.num_stages):
            yield from self.nodes(t)

    def has_node(self, node: NodeId) -> bool:
        return (
            1 <= node.stage <= self.num_stages
            and 1 <= node.scenario <= self.nodes_per_stage[node.stage - 1]
        )

    def children_of(self, node: NodeId):
        self._check(node)
        return list(self.children.get(node, []))

    def num_nodes(self) -> int:
        return sum(self.nodes_per_stage)

    def is_deterministic(self) -> bool:
        """True when every stage has a single scenario (linear graph)."""
        return all(n == 1 for n in self.nodes_per_stage)

    def _check(self, node) -> None:
        node = NodeId(*node)
        if not self.has_node(node):
            raise UnknownNode(f"node {node} not in tree")


def build_tree(
    num_stages: int,
    branching: Sequence[int] = (),
    conditional_probs: Optional[Sequence[Sequence[float]]] = None,
) -> ScenarioTree:
    """Construct a tree from per-stage branching factors and edge probabilities.

    ``branching[t-1]`` is the number of children of every stage-``t`` node,
    for ``t = 1..num_stages-1``. ``conditional_probs[t-1]``, when given, lists
    the probabilities of the edges leaving stage ``t`` in (parent, child slot)
    order; each parent's group must sum to one. Omitted probabilities default
    to a uniform split.
    """
    if num_stages < 1:
        raise MalformedTree("a tree needs at least one stage")
    branching = list(branching)
    if len(branching) != num_stages - 1:
        raise MalformedTree(
            f"expected {num_stages - 1} branching factors, got {len(branching)}"
        )
    if any(b < 1 for b in branching):
        raise MalformedTree("branching factors must be >= 1")

    nodes_per_stage = [1]
    for b in branching:
        nodes_per_stage.append(nodes_per_stage[-1] * b)

    parent = {}
    conditional = {NodeId(1, 1): 1.0}
    joint = {NodeId(1, 1): 1.0}
    for t in range(1, num_stages):
        b = branching[t - 1]
        probs = None
        if conditional_probs is not None and t - 1 < len(conditional_probs):
            probs = conditional_probs[t - 1]
            if probs is not None and len(probs) != nodes_per_stage[t - 1] * b:
                raise InconsistentProbabilities(
                    f"stage {t}: expected {nodes_per_stage[t - 1] * b} edge "
                    f"probabilities, got {len(probs)}"
                )
        for j in range(1, nodes_per_stage[t - 1] + 1):
            par = NodeId(t, j)
            group = (
                [1.0 / b] * b
                if probs is None
                else [float(p) for p in probs[(j - 1) * b : j * b]]
            )
            if any(p < 0 for p in group):
                raise InconsistentProbabilities(f"negative edge probability at {par}")
            if abs(sum(group) - 1.0) > PROB_TOL:
                raise InconsistentProbabilities(
                    f"edge probabilities of {par} sum to {sum(group)!r}, not 1"
                )
            for slot, p in enumerate(group):
                child = NodeId(t + 1, (j - 1) * b + slot + 1)
                parent[child] = par
                conditional[child] = p
                joint[child] = joint[par] * p

    return ScenarioTree(num_stages, nodes_per_stage, parent, conditional, joint)


def parent_of(tree: ScenarioTree, node: NodeId) -> Optional[NodeId]:
    """Parent of ``node``; ``None`` exactly for the root."""
    node = NodeId(*node)
    tree._check(node)
    return tree.parent.get(node)


def enumerate_paths(tree: ScenarioTree):
    """Root-to-leaf node sequences, one per leaf, ordered by leaf scenario."""
    paths = []
    for leaf in tree.leaves():
        path = [leaf]
        node = leaf
        while (par := tree.parent.get(node)) is not None:
            path.append(par)
            node = par
        paths.append(list(reversed(path)))
    return paths


def truncate(tree: ScenarioTree, num_stages: int) -> ScenarioTree:
    """Restriction of the tree to its first ``num_stages`` stages."""
    if not 1 <= num_stages <= tree.num_stages:
        raise MalformedTree(
            f"cannot truncate {tree.num_stages}-stage tree to {num_stages}"
        )
    keep = lambda n: n.stage <= num_stages
    return ScenarioTree(
        num_stages,
        tree.nodes_per_stage[:num_stages],
        {n: p for n, p in tree.parent.items() if keep(n)},
        {n: c for n, c in tree.conditional.items() if keep(n)},
        {n: p for n, p in tree.joint_prob.items() if keep(n)},
    )
