"""Fixed sensor digraph: who senses whom, and global reachability.

Vehicles are labelled 1..n. An edge (i, j) means vehicle i senses vehicle j,
so j's relative position and velocity are available to i in i's body frame.
The edge set is immutable after construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class SensorDigraph:
    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"vehicle count must be >= 1, got {self.n}")
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        for (i, j) in self.edges:
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"edge ({i}, {j}) out of range 1..{self.n}")
            if i == j:
                raise ValueError(f"self-loop ({i}, {j}) not allowed")

    def neighbors(self, i: int) -> list:
        """Sorted list of vehicles that vehicle i senses."""
        if not (1 <= i <= self.n):
            raise IndexError(f"vehicle index {i} out of range 1..{self.n}")
        return sorted(j for (k, j) in self.edges if k == i)

    def has_globally_reachable_node(self) -> tuple:
        """(found, witness): is some node reachable from every other node?

        The witness is the lowest-index globally reachable node, or None.
        Equivalent to the reverse graph having a directed spanning tree.
        One reverse-graph BFS per candidate; n is small, so this beats the
        bookkeeping of a condensation-based test.
        """
        preds = {v: [] for v in range(1, self.n + 1)}
        for (i, j) in self.edges:
            preds[j].append(i)
        for cand in range(1, self.n + 1):
            seen = {cand}
            queue = [cand]
            while queue:
                v = queue.pop()
                for p in preds[v]:
                    if p not in seen:
                        seen.add(p)
                        queue.append(p)
            if len(seen) == self.n:
                return True, cand
        return False, None


def neighbors(g: SensorDigraph, i: int) -> list:
    return g.neighbors(i)


def has_globally_reachable_node(g: SensorDigraph) -> tuple:
    return g.has_globally_reachable_node()


def fig4_digraph() -> SensorDigraph:
    """The five-vehicle digraph used in the reference simulations."""
    return SensorDigraph(5, frozenset({(3, 4), (3, 5), (1, 3), (2, 3), (4, 1), (5, 2)}))
