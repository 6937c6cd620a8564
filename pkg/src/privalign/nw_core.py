"""Plaintext alignment scoring and the random-order cell scheduler.

`plaintext_nw` is the ground-truth scorer the encrypted protocol is checked
against.  `CandidateSet` tracks which matrix cells are ready to compute
(all three dependencies done) and hands them out in uniformly random order;
the same scheduler drives both the encrypted protocol and, optionally, the
plaintext scorer, so scheduling bugs can be isolated from crypto bugs.

`candidate_stats` simulates full schedules to measure how many cells are
eligible at each step, which quantifies how well random processing hides
the current cell from the key holder.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import InputError


@dataclass(frozen=True)
class CostParams:
    """Insertion/deletion costs plus the substitution model."""

    c_ins: int
    c_del: int
    model: object

    def __post_init__(self) -> None:
        if self.c_ins < 0 or self.c_del < 0:
            raise InputError("insertion/deletion costs must be nonnegative")

    @property
    def max_cost(self) -> int:
        return max(self.c_ins, self.c_del, self.model.max_cost())


def plaintext_nw(seq1: str, seq2: str, costs: CostParams) -> int:
    """Minimum alignment cost, row-major dynamic program.

    Border: M(i,0) = i*c_del, M(0,j) = j*c_ins.  Interior: min of diagonal +
    substitution, up + deletion, left + insertion.
    """
    m, n = len(seq1), len(seq2)
    prev = [j * costs.c_ins for j in range(n + 1)]
    for i in range(1, m + 1):
        cur = [i * costs.c_del] + [0] * n
        a = seq1[i - 1]
        for j in range(1, n + 1):
            cur[j] = min(
                prev[j - 1] + costs.model.cost(a, seq2[j - 1]),
                prev[j] + costs.c_del,
                cur[j - 1] + costs.c_ins,
            )
        prev = cur
    return prev[n]


class CandidateSet:
    """Interior cells whose three dependencies are already computed.

    Starts at {(1,1)} (borders count as computed).  `select` draws
    uniformly without removing; `complete` removes a cell and unblocks its
    down/right neighbours.  Selection order is deterministic for a seeded
    rng because candidates live in an insertion-ordered list.
    """

    def __init__(self, m: int, n: int) -> None:
        if m < 0 or n < 0:
            raise InputError("matrix dimensions must be nonnegative")
        self.m = m
        self.n = n
        self.degenerate = m == 0 or n == 0
        self._computed = [[False] * (n + 1) for _ in range(m + 1)]
        for i in range(m + 1):
            self._computed[i][0] = True
        for j in range(n + 1):
            self._computed[0][j] = True
        self._items: list[tuple[int, int]] = []
        self._pos: dict[tuple[int, int], int] = {}
        self.completed = 0
        if not self.degenerate:
            self._add((1, 1))

    def _add(self, cell: tuple[int, int]) -> None:
        self._pos[cell] = len(self._items)
        self._items.append(cell)

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, cell: tuple[int, int]) -> bool:
        return cell in self._pos

    @property
    def pending(self) -> frozenset[tuple[int, int]]:
        return frozenset(self._items)

    def is_computed(self, i: int, j: int) -> bool:
        return self._computed[i][j]

    def select(self, rng: random.Random) -> tuple[int, int]:
        """Uniform draw from the pending cells (not removed until complete)."""
        if not self._items:
            raise ValueError("no pending candidates to select")
        return self._items[rng.randrange(len(self._items))]

    def complete(self, i: int, j: int) -> None:
        """Mark (i, j) computed and enqueue any newly unblocked cells."""
        cell = (i, j)
        idx = self._pos.pop(cell, None)
        if idx is None:
            raise ValueError(f"cell {cell} is not pending")
        last = self._items.pop()
        if last != cell:
            self._items[idx] = last
            self._pos[last] = idx
        self._computed[i][j] = True
        self.completed += 1
        for ni, nj in ((i + 1, j + 1), (i + 1, j), (i, j + 1)):
            if ni > self.m or nj > self.n:
                continue
            if self._computed[ni][nj] or (ni, nj) in self._pos:
                continue
            if (self._computed[ni - 1][nj - 1] and self._computed[ni - 1][nj]
                    and self._computed[ni][nj - 1]):
                self._add((ni, nj))


def plaintext_nw_random_schedule(seq1: str, seq2: str, costs: CostParams,
                                 rng: random.Random) -> int:
    """Plaintext score computed under a random schedule (oracle cross-check)."""
    m, n = len(seq1), len(seq2)
    matrix = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        matrix[i][0] = i * costs.c_del
    for j in range(n + 1):
        matrix[0][j] = j * costs.c_ins
    cset = CandidateSet(m, n)
    while len(cset):
        i, j = cset.select(rng)
        assert (cset.is_computed(i - 1, j - 1) and cset.is_computed(i - 1, j)
                and cset.is_computed(i, j - 1))
        matrix[i][j] = min(
            matrix[i - 1][j - 1] + costs.model.cost(seq1[i - 1], seq2[j - 1]),
            matrix[i - 1][j] + costs.c_del,
            matrix[i][j - 1] + costs.c_ins,
        )
        cset.complete(i, j)
    assert cset.completed == m * n
    return matrix[m][n]


@dataclass(frozen=True)
class CandidateStats:
    """Per-iteration candidate counts aggregated over simulated schedules.

    `overall_mean` is the geometric mean of the per-iteration counts: the
    number of possible schedules is the product of the per-step counts, so
    the geometric mean is the per-iteration equivalent of that product
    (2 ** (cum_log2[-1] / steps)).
    """

    m: int
    n: int
    trials: int
    mean_candidates: list[float]   # mean |pending| at iteration t (1-based)
    std_candidates: list[float]
    cum_log2: list[float]          # running sum of mean log2 |pending|
    overall_mean: float

    def rows(self) -> list[tuple[int, float, float, float]]:
        return [
            (t + 1, self.mean_candidates[t], self.std_candidates[t], self.cum_log2[t])
            for t in range(len(self.mean_candidates))
        ]


def candidate_stats(m: int, n: int, trials: int,
                    rng: random.Random) -> CandidateStats:
    """Simulate `trials` full random schedules and aggregate counts."""
    if trials < 1:
        raise InputError("trials must be at least 1")
    steps = m * n
    total = [0] * steps
    total_sq = [0] * steps
    total_log2 = [0.0] * steps
    for _ in range(trials):
        cset = CandidateSet(m, n)
        for t in range(steps):
            count = len(cset)
            total[t] += count
            total_sq[t] += count * count
            total_log2[t] += math.log2(count)
            cset.complete(*cset.select(rng))
    mean = [total[t] / trials for t in range(steps)]
    std = [
        math.sqrt(max(total_sq[t] / trials - mean[t] ** 2, 0.0))
        for t in range(steps)
    ]
    cum = []
    acc = 0.0
    for t in range(steps):
        acc += total_log2[t] / trials
        cum.append(acc)
    overall = 2 ** (cum[-1] / steps) if steps else 0.0
    return CandidateStats(m, n, trials, mean, std, cum, overall)
