"""Augmented balanced search tree with order-statistic range aggregates.

A treap keyed by integer. Equal keys collapse into one node carrying a
multiplicity and a running value sum, so repeated inserts of the same key
stay O(log #distinct). Every node additionally caches the count and value
sum of its subtree, which makes "count and sum of all entries with key
strictly below / strictly above K" an O(log n) walk.

Priorities come from a seeded RNG so tree shape (and therefore the
per-event operation counts the complexity tests look at) is reproducible.
"""

import random


class OpsCount:
    """Shared mutable counter for node visits; one per view."""

    __slots__ = ("n",)

    def __init__(self):
        self.n = 0


class _Node:
    __slots__ = ("key", "prio", "mult", "val_sum", "left", "right", "sub_cnt", "sub_val")

    def __init__(self, key, prio, value):
        self.key = key
        self.prio = prio
        self.mult = 1
        self.val_sum = value
        self.left = None
        self.right = None
        self.sub_cnt = 1
        self.sub_val = value


def _refresh(node):
    cnt = node.mult
    val = node.val_sum
    left = node.left
    if left is not None:
        cnt += left.sub_cnt
        val += left.sub_val
    right = node.right
    if right is not None:
        cnt += right.sub_cnt
        val += right.sub_val
    node.sub_cnt = cnt
    node.sub_val = val


class OrderStatTree:
    def __init__(self, seed: int = 0, counter: OpsCount | None = None):
        self._rng = random.Random(seed)
        self._root = None
        self.ops = counter if counter is not None else OpsCount()

    def __len__(self):
        return self._root.sub_cnt if self._root is not None else 0

    def total(self) -> tuple[int, int]:
        """(count, value sum) over the whole tree."""
        root = self._root
        if root is None:
            return 0, 0
        return root.sub_cnt, root.sub_val

    def insert(self, key: int, value: int) -> None:
        """Add one entry with `key`, accumulating `value` into the key's sum."""
        self._root = self._insert(self._root, key, value)

    def _insert(self, node, key, value):
        self.ops.n += 1
        if node is None:
            return _Node(key, self._rng.random(), value)
        if key == node.key:
            node.mult += 1
            node.val_sum += value
            _refresh(node)
            return node
        if key < node.key:
            node.left = self._insert(node.left, key, value)
            if node.left.prio > node.prio:
                node = self._rotate_right(node)
        else:
            node.right = self._insert(node.right, key, value)
            if node.right.prio > node.prio:
                node = self._rotate_left(node)
        _refresh(node)
        return node

    @staticmethod
    def _rotate_right(node):
        pivot = node.left
        node.left = pivot.right
        pivot.right = node
        _refresh(node)
        _refresh(pivot)
        return pivot

    @staticmethod
    def _rotate_left(node):
        pivot = node.right
        node.right = pivot.left
        pivot.left = node
        _refresh(node)
        _refresh(pivot)
        return pivot

    def agg_less(self, key: int) -> tuple[int, int]:
        """(count, value sum) over entries with key strictly below `key`."""
        cnt = 0
        val = 0
        node = self._root
        ops = self.ops
        while node is not None:
            ops.n += 1
            if node.key < key:
                left = node.left
                if left is not None:
                    cnt += left.sub_cnt
                    val += left.sub_val
                cnt += node.mult
                val += node.val_sum
                node = node.right
            else:
                node = node.left
        return cnt, val

    def agg_greater(self, key: int) -> tuple[int, int]:
        """(count, value sum) over entries with key strictly above `key`."""
        cnt = 0
        val = 0
        node = self._root
        ops = self.ops
        while node is not None:
            ops.n += 1
            if node.key > key:
                right = node.right
                if right is not None:
                    cnt += right.sub_cnt
                    val += right.sub_val
                cnt += node.mult
                val += node.val_sum
                node = node.left
            else:
                node = node.right
        return cnt, val

    def agg_at_least(self, key: int) -> tuple[int, int]:
        """(count, value sum) over entries with key >= `key`."""
        total_cnt, total_val = self.total()
        below_cnt, below_val = self.agg_less(key)
        return total_cnt - below_cnt, total_val - below_val
