"""Track/detection association: IoU costs, gating and optimal assignment.

The assignment semantics are: among all matchings that use only admissible
pairs (gate mask true, cost <= max_cost and finite), first maximize the
number of matches, then minimize the total cost, then return the
lexicographically smallest match list.  Maximizing cardinality first is
what makes the rule well defined, since with nonnegative costs the raw
minimum-total matching would always be the empty one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .state import BoundingBox

# 95% chi-square quantile for 4 degrees of freedom, the usual gate for a
# 4-dimensional box measurement.
CHI2_GATE_95_4DOF = 9.487729036781154

# Relative tolerance when comparing candidate totals against the optimum
# during tie-breaking; absorbs float summation-order noise only.
_TIE_RTOL = 1e-12


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    ax1, ax2 = a.cx - 0.5 * a.w, a.cx + 0.5 * a.w
    ay1, ay2 = a.cy - 0.5 * a.h, a.cy + 0.5 * a.h
    bx1, bx2 = b.cx - 0.5 * b.w, b.cx + 0.5 * b.w
    by1, by2 = b.cy - 0.5 * b.h, b.cy + 0.5 * b.h
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.w * a.h + b.w * b.h - inter
    return inter / union


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Pairwise association costs plus an admissibility mask.

    ``costs`` is n_tracks x n_detections; ``gate_mask`` marks pairs that may
    be matched at all (defaults to everything admissible).  Admissible costs
    must be finite and nonnegative.
    """

    costs: np.ndarray
    gate_mask: np.ndarray = None

    def __post_init__(self):
        costs = np.asarray(self.costs, dtype=float)
        if costs.ndim == 1 and costs.size == 0:
            costs = costs.reshape(0, 0)
        if costs.ndim != 2:
            raise ValueError(f"costs must be 2-D, got shape {costs.shape}")
        mask = self.gate_mask
        if mask is None:
            mask = np.ones(costs.shape, dtype=bool)
        else:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != costs.shape:
                raise ValueError(
                    f"gate_mask shape {mask.shape} does not match costs shape {costs.shape}"
                )
        admissible = costs[mask]
        if admissible.size and (not np.all(np.isfinite(admissible)) or admissible.min() < 0):
            raise ValueError("admissible costs must be finite and >= 0")
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "gate_mask", mask)

    @property
    def shape(self) -> tuple[int, int]:
        return self.costs.shape


@dataclass(frozen=True)
class Assignment:
    """Result of one association round.

    Every track index and detection index appears exactly once, either in a
    match or in the corresponding unmatched list.
    """

    matches: tuple[tuple[int, int], ...]
    unmatched_tracks: tuple[int, ...]
    unmatched_detections: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "matches", tuple((int(i), int(j)) for i, j in self.matches))
        object.__setattr__(self, "unmatched_tracks", tuple(int(i) for i in self.unmatched_tracks))
        object.__setattr__(
            self, "unmatched_detections", tuple(int(j) for j in self.unmatched_detections)
        )
        rows = [i for i, _ in self.matches] + list(self.unmatched_tracks)
        cols = [j for _, j in self.matches] + list(self.unmatched_detections)
        if len(rows) != len(set(rows)) or len(cols) != len(set(cols)):
            raise ValueError("an index appears more than once in the assignment")


def iou_cost_matrix(
    track_boxes: Sequence[BoundingBox],
    det_boxes: Sequence[BoundingBox],
    gate_mask: np.ndarray = None,
) -> CostMatrix:
    """Build a 1 - IoU cost matrix, optionally intersected with a gate."""
    costs = np.ones((len(track_boxes), len(det_boxes)))
    for i, tb in enumerate(track_boxes):
        for j, db in enumerate(det_boxes):
            costs[i, j] = 1.0 - iou(tb, db)
    return CostMatrix(costs, gate_mask)


def _canonical_total(costs: np.ndarray, matches: list[tuple[int, int]]) -> float:
    """Sum match costs in (row, col) order so equal match sets sum equally."""
    return float(sum(costs[i, j] for i, j in sorted(matches)))


def _solve_padded(costs: np.ndarray, admissible: np.ndarray, big: float):
    """Assignment on a matrix with inadmissible entries replaced by ``big``.

    Returns the admissible matches only.  ``big`` exceeds the total of all
    admissible costs, so the solver first maximizes the number of admissible
    matches and then minimizes their total.
    """
    if costs.shape[0] == 0 or costs.shape[1] == 0 or not admissible.any():
        return []
    padded = np.where(admissible, costs, big)
    rows, cols = linear_sum_assignment(padded)
    return [(int(i), int(j)) for i, j in zip(rows, cols) if admissible[i, j]]


def solve_assignment(cost_matrix: CostMatrix, max_cost: float) -> Assignment:
    """Optimal gated assignment with deterministic tie-breaking.

    Among matchings made of admissible pairs, the result has maximum
    cardinality and minimum total cost; when several matchings achieve that
    optimum, the lexicographically smallest match list is returned so runs
    are reproducible bit for bit.
    """
    costs = cost_matrix.costs
    n, m = costs.shape
    admissible = cost_matrix.gate_mask & np.isfinite(costs) & (costs <= max_cost)

    all_tracks = range(n)
    all_dets = range(m)
    if not admissible.any():
        return Assignment((), tuple(all_tracks), tuple(all_dets))

    big = float(costs[admissible].sum()) + 1.0
    base = _solve_padded(costs, admissible, big)
    best_count = len(base)
    best_total = _canonical_total(costs, base)
    tol = _TIE_RTOL * max(1.0, abs(best_total))

    # Fix pairs row by row, smallest column first, keeping the optimum
    # reachable; this realizes the lexicographically smallest optimal list.
    chosen: list[tuple[int, int]] = []
    free_cols = np.ones(m, dtype=bool)
    fixed_total = 0.0
    fixed_count = 0
    for i in range(n):
        for j in range(m):
            if not free_cols[j] or not admissible[i, j]:
                continue
            sub_adm = admissible[i + 1 :, :] & free_cols & _col_off(m, j)
            rest = _solve_padded(costs[i + 1 :, :], sub_adm, big)
            count = fixed_count + 1 + len(rest)
            total = (
                fixed_total
                + costs[i, j]
                + _canonical_total(costs[i + 1 :, :], rest)
            )
            if count == best_count and abs(total - best_total) <= tol:
                chosen.append((i, j))
                free_cols[j] = False
                fixed_total += float(costs[i, j])
                fixed_count += 1
                break
        else:
            # Row i is unmatched in every optimal matching consistent with
            # the fixed prefix; verify the optimum is still reachable.
            sub_adm = admissible[i + 1 :, :] & free_cols
            rest = _solve_padded(costs[i + 1 :, :], sub_adm, big)
            assert fixed_count + len(rest) == best_count, "assignment refinement lost the optimum"

    matched_rows = {i for i, _ in chosen}
    matched_cols = {j for _, j in chosen}
    return Assignment(
        tuple(chosen),
        tuple(i for i in all_tracks if i not in matched_rows),
        tuple(j for j in all_dets if j not in matched_cols),
    )


def _col_off(m: int, j: int) -> np.ndarray:
    mask = np.ones(m, dtype=bool)
    mask[j] = False
    return mask
