"""Selection of past curves that envelope the focal curve and keep it deep.

Curves are reviewed from the nearest to the farthest. A first greedy pass
collects curves until the focal curve is covered wherever the sample can
cover it. Later passes over the remaining curves propose further batches,
each kept only if the focal curve's depth percentile does not drop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from depthfc import kernels
from depthfc.core import CurveLibrary, FocalCurve, pointwise_hull
from depthfc.depth import DepthReport, count_at_most, mbd_restricted


class FocalOutsideRangeError(ValueError):
    """The focal curve is never inside the sample's pointwise range."""


@dataclass(frozen=True)
class BatchRecord:
    iteration: int
    batch: tuple
    covered: float
    p0: Optional[float]
    p1: Optional[float]
    accepted: bool


@dataclass(frozen=True)
class Envelope:
    """Result of the selection: members in acceptance order plus their depths.

    Depths are taken in the set made of the members and the focal curve, over
    the observed segment.
    """

    member_indices: np.ndarray
    report: DepthReport = field(repr=False)
    envelopable: np.ndarray = field(repr=False)
    iterations: List[BatchRecord] = field(default_factory=list, repr=False)

    def __len__(self):
        return self.member_indices.size

    @property
    def member_counts(self) -> np.ndarray:
        return self.report.counts[1:]

    @property
    def member_depths(self) -> np.ndarray:
        return self.report.depths[1:]

    @property
    def focal_depth(self) -> float:
        return float(self.report.depths[0])

    @property
    def focal_percentile(self) -> float:
        return count_at_most(self.report, 0) / self.report.set_size

    def ranked(self) -> np.ndarray:
        """Library indices from deepest to shallowest; ties go to the more recent curve."""
        order = np.lexsort((-self.member_indices, -self.member_counts))
        return self.member_indices[order]

    def audit_lines(self) -> List[str]:
        lines = ["iteration\tbatch\tlambda\tp0\tp1\taccepted"]
        for rec in self.iterations:
            p0 = "-" if rec.p0 is None else repr(rec.p0)
            p1 = "-" if rec.p1 is None else repr(rec.p1)
            batch = ",".join(str(i) for i in rec.batch)
            lines.append(f"{rec.iteration}\t{batch}\t{rec.covered!r}\t{p0}\t{p1}\t{int(rec.accepted)}")
        return lines


def envelopable_set(library: CurveLibrary, focal: FocalCurve) -> np.ndarray:
    """Observed-grid indices where the focal lies within the whole sample's range."""
    c = library.grid.cut_index
    lo, hi = pointwise_hull(library.curves[:, :c])
    f = focal.observed[:c]
    idx = np.flatnonzero((lo <= f) & (f <= hi))
    if idx.size == 0:
        raise FocalOutsideRangeError("focal outside sample range")
    return idx


def distance_order(library: CurveLibrary, focal: FocalCurve) -> np.ndarray:
    """Library indices by ascending observed-segment distance; ties favor recency."""
    c = library.grid.cut_index
    diff = library.curves[:, :c] - focal.observed[:c]
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return np.lexsort((-np.arange(len(library)), dist))


def greedy_cover_batch(candidates, focal_values):
    """One nearest-first pass keeping candidates that strictly widen coverage.

    ``candidates`` rows must already be sorted by distance and restricted to
    the envelopable indices, as must ``focal_values``. Returns the selected
    row positions and the covered fraction.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    focal_values = np.asarray(focal_values, dtype=np.float64)
    selected, covered = kernels.greedy_cover(candidates, focal_values)
    return np.flatnonzero(selected), covered / focal_values.size


def _focal_rank(values) -> tuple:
    rep = mbd_restricted(values)
    return count_at_most(rep, 0), rep.set_size


def build_envelope(library: CurveLibrary, focal: FocalCurve) -> Envelope:
    c = library.grid.cut_index
    obs = library.curves[:, :c]
    f = focal.observed[:c]
    iq = envelopable_set(library, focal)
    order = distance_order(library, focal)
    f_iq = f[iq]
    alive = np.ones(len(library), dtype=bool)
    members: List[int] = []
    p0 = None  # (count of set members at most as deep as the focal, set size)
    records = []
    iteration = 0
    while np.count_nonzero(alive) >= 2:
        iteration += 1
        remaining = order[alive[order]]
        pos, covered = greedy_cover_batch(obs[remaining][:, iq], f_iq)
        batch = remaining[pos]
        if not members:
            accepted = True
            p1 = None
        else:
            p1 = _focal_rank(np.vstack([f, obs[members], obs[batch]]))
            # exact rational comparison p1 >= p0
            accepted = p1[0] * p0[1] >= p0[0] * p1[1]
        records.append(
            BatchRecord(
                iteration,
                tuple(int(i) for i in batch),
                covered,
                None if p0 is None else p0[0] / p0[1],
                None if p1 is None else p1[0] / p1[1],
                accepted,
            )
        )
        if accepted:
            members.extend(int(i) for i in batch)
            p0 = p1 if p1 is not None else _focal_rank(np.vstack([f, obs[members]]))
        alive[batch] = False

    member_indices = np.asarray(members, dtype=np.int64)
    report = mbd_restricted(np.vstack([f, obs[member_indices]]))
    return Envelope(member_indices, report, iq, records)
