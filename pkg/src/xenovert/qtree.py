"""Adaptive quantile tree ("Xenovert").

A perfect binary tree of depth L whose nodes hold scalar boundary values
("quasi-quantiles").  Each incoming sample nudges the L boundaries on one
root-to-leaf path toward itself with a velocity-damped step, so the 2^L
intervals between boundaries converge to equal input density and keep
re-converging when the input distribution drifts.  ``convert`` maps a value
to the index of the interval it falls into, i.e. an adaptive equal-depth
binning of the stream.

A tree instance is a single-writer state machine: never call ``update``
concurrently on one instance.  ``convert``, ``touched_path``,
``quantile_values`` and ``snapshot`` are read-only and may run concurrently
with each other, but not with ``update``.  Distinct instances are fully
independent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

__all__ = ["QuasiQuantileNode", "XenovertConfig", "Xenovert", "grow"]

SNAPSHOT_VERSION = 1

MAX_LEVELS = 30  # 2**30 intervals; guards the shift arithmetic in convert()


class QuasiQuantileNode:
    """One adaptive boundary: value ``q``, velocity ``v``, tree ``level``.

    ``left``/``right`` are either both nodes or both None (perfect tree).
    """

    __slots__ = ("q", "v", "level", "left", "right")

    def __init__(self, q: float, level: int):
        self.q = q
        self.v = 0.0
        self.level = level
        self.left: QuasiQuantileNode | None = None
        self.right: QuasiQuantileNode | None = None

    def __repr__(self) -> str:
        return f"QuasiQuantileNode(q={self.q!r}, v={self.v!r}, level={self.level})"


@dataclass(frozen=True)
class XenovertConfig:
    """Hyperparameters of the tree.

    levels: tree depth L; the tree holds 2^L - 1 nodes and 2^L intervals.
    learning_rate: step scale applied to the accumulated velocity.
    velocity_decay: exponential damping of the velocity term, in [0, 1).
    initial_q: starting value of every boundary (warm starts).
    """

    levels: int
    learning_rate: float = 1e-5
    velocity_decay: float = 0.99
    initial_q: float = 0.0

    def __post_init__(self):
        if not isinstance(self.levels, int) or self.levels < 1 or self.levels > MAX_LEVELS:
            raise ValueError(f"levels must be an integer in [1, {MAX_LEVELS}], got {self.levels!r}")
        if not (self.learning_rate > 0.0) or not math.isfinite(self.learning_rate):
            raise ValueError(f"learning_rate must be a positive finite real, got {self.learning_rate!r}")
        if not (0.0 <= self.velocity_decay < 1.0):
            raise ValueError(f"velocity_decay must lie in [0, 1), got {self.velocity_decay!r}")
        if not math.isfinite(self.initial_q):
            raise ValueError(f"initial_q must be finite, got {self.initial_q!r}")

    @property
    def num_nodes(self) -> int:
        return (1 << self.levels) - 1

    @property
    def num_intervals(self) -> int:
        return 1 << self.levels


class Xenovert:
    """Perfect binary tree of adaptive boundaries over the real line.

    Use :func:`grow` (or the constructor) to build, ``update`` to feed the
    stream, ``convert`` to read off the interval index of a value.  The
    structure is fixed at construction; only node values and velocities
    change afterwards.
    """

    __slots__ = ("config", "root", "updates_seen", "_levels")

    def __init__(self, config: XenovertConfig):
        self.config = config
        self._levels = config.levels
        self.root = self._build(config.initial_q, config.levels)
        self.updates_seen = 0

    @staticmethod
    def _build(q0: float, levels: int) -> QuasiQuantileNode:
        root = QuasiQuantileNode(q0, 0)
        frontier = [root]
        for level in range(1, levels):
            nxt = []
            for node in frontier:
                node.left = QuasiQuantileNode(q0, level)
                node.right = QuasiQuantileNode(q0, level)
                nxt.append(node.left)
                nxt.append(node.right)
            frontier = nxt
        return root

    # -- online adaptation ------------------------------------------------

    def update(self, x: float) -> None:
        """Adapt the L boundaries on the selection path of ``x``.

        Each visited node accumulates velocity v' = decay*v + |q - x| and
        steps q by learning_rate * v' toward x; descent then follows
        x < q -> left, else right.  Routing compares against the value the
        node held on arrival, so the selection path equals
        ``touched_path(x)`` taken just before the call.
        """
        if not math.isfinite(x):
            raise ValueError(f"update requires a finite input, got {x!r}")
        alpha = self.config.learning_rate
        theta = self.config.velocity_decay
        node = self.root
        while node is not None:
            q = node.q
            v = theta * node.v + abs(q - x)
            node.v = v
            # s = -1 iff q - x > 0; ties step upward (s = +1) with zero error
            node.q = q - alpha * v if q > x else q + alpha * v
            node = node.left if x < q else node.right
        self.updates_seen += 1

    # -- read-only queries ------------------------------------------------

    def convert(self, x: float) -> int:
        """Quantize ``x`` to its interval index in [0, 2^L - 1].

        The index is the left-to-right rank of the interval ``x`` selects:
        descending from the root, going right past a node at depth d adds
        2^(L-1-d).  Ties (x == q) go right.  Pure: never mutates the tree.
        """
        if not math.isfinite(x):
            raise ValueError(f"convert requires a finite input, got {x!r}")
        index = 0
        half = 1 << (self._levels - 1)
        node = self.root
        while node is not None:
            if x < node.q:
                node = node.left
            else:
                index += half
                node = node.right
            half >>= 1
        return index

    def touched_path(self, x: float) -> list[int]:
        """Selection path of ``x`` as level-order node indices (root = 0).

        Pure; the returned nodes are exactly the ones ``update(x)`` would
        mutate from the current state.  Indices match the node order used by
        ``snapshot``.  Always has length L.
        """
        if not math.isfinite(x):
            raise ValueError(f"touched_path requires a finite input, got {x!r}")
        path = []
        node = self.root
        idx = 0
        while node is not None:
            path.append(idx)
            if x < node.q:
                node, idx = node.left, 2 * idx + 1
            else:
                node, idx = node.right, 2 * idx + 2
        return path

    def quantile_values(self) -> list[tuple[int, float]]:
        """All boundary values in in-order (left-to-right) order.

        Returns (index, value) pairs with index 0..2^L - 2 assigned
        left-to-right.  The values themselves are sorted only once the tree
        has converged on a stationary stream; adversarial or short streams
        may leave them transiently out of order.
        """
        out: list[tuple[int, float]] = []
        stack: list[QuasiQuantileNode] = []
        node: QuasiQuantileNode | None = self.root
        while stack or node is not None:
            while node is not None:
                stack.append(node)
                node = node.left
            node = stack.pop()
            out.append((len(out), node.q))
            node = node.right
        return out

    def _nodes_level_order(self) -> list[QuasiQuantileNode]:
        nodes = [self.root]
        for node in nodes:  # list grows while iterating: BFS
            if node.left is not None:
                nodes.append(node.left)
                nodes.append(node.right)
        return nodes

    # -- persistence --------------------------------------------------------

    def snapshot(self) -> str:
        """Serialize config and full node state to a versioned JSON string."""
        cfg = self.config
        return json.dumps(
            {
                "version": SNAPSHOT_VERSION,
                "config": {
                    "L": cfg.levels,
                    "alpha": cfg.learning_rate,
                    "theta": cfg.velocity_decay,
                    "initial_q": cfg.initial_q,
                },
                "nodes": [[n.q, n.v] for n in self._nodes_level_order()],
            }
        )

    @classmethod
    def restore(cls, payload: str) -> "Xenovert":
        """Rebuild a tree from ``snapshot`` output.

        Raises ValueError on malformed payloads, unknown versions, or a node
        list inconsistent with the configured depth.  Round-trips exactly:
        ``restore(t.snapshot())`` converts identically to ``t``.
        """
        try:
            data = json.loads(payload)
        except (json.JSONDecodeError, TypeError) as exc:
            raise ValueError(f"snapshot payload is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ValueError("snapshot payload must be a JSON object")
        if data.get("version") != SNAPSHOT_VERSION:
            raise ValueError(
                f"unsupported snapshot version {data.get('version')!r}; expected {SNAPSHOT_VERSION}"
            )
        try:
            cfg_raw = data["config"]
            config = XenovertConfig(
                levels=cfg_raw["L"],
                learning_rate=cfg_raw["alpha"],
                velocity_decay=cfg_raw["theta"],
                initial_q=cfg_raw["initial_q"],
            )
            nodes = data["nodes"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"snapshot payload is missing required fields: {exc}") from exc
        if not isinstance(nodes, list) or len(nodes) != config.num_nodes:
            raise ValueError(
                f"snapshot holds {len(nodes) if isinstance(nodes, list) else '?'} nodes, "
                f"expected {config.num_nodes} for depth {config.levels}"
            )
        tree = cls(config)
        for node, entry in zip(tree._nodes_level_order(), nodes):
            try:
                q, v = float(entry[0]), float(entry[1])
            except (TypeError, ValueError, IndexError) as exc:
                raise ValueError(f"malformed node entry {entry!r}") from exc
            if not (math.isfinite(q) and math.isfinite(v)) or v < 0.0:
                raise ValueError(f"node entry out of range: {entry!r}")
            node.q = q
            node.v = v
        return tree

    def __repr__(self) -> str:
        return (
            f"Xenovert(levels={self.config.levels}, "
            f"intervals={self.config.num_intervals}, updates_seen={self.updates_seen})"
        )


def grow(config: XenovertConfig) -> Xenovert:
    """Construct a fresh tree: 2^L - 1 nodes, all at the configured initial value."""
    return Xenovert(config)
