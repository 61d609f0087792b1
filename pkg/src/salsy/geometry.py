"""Integer rectangle kernels: union area, clipping and subtraction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from bisect import bisect_left

import numpy as np


@dataclass(frozen=True, slots=True, order=True)
class Rect:
    lo_x: int
    lo_y: int
    hi_x: int
    hi_y: int

    def __deepcopy__(self, memo):
        return self

    def __post_init__(self):
        if self.lo_x > self.hi_x or self.lo_y > self.hi_y:
            raise ValueError(f"inverted rect {self.lo_x, self.lo_y, self.hi_x, self.hi_y}")

    @property
    def width(self) -> int:
        return self.hi_x - self.lo_x

    @property
    def height(self) -> int:
        return self.hi_y - self.lo_y

    @property
    def area(self) -> int:
        return (self.hi_x - self.lo_x) * (self.hi_y - self.lo_y)

    @property
    def center(self) -> tuple[int, int]:
        return (self.lo_x + self.hi_x) // 2, (self.lo_y + self.hi_y) // 2

    def intersects(self, other: "Rect") -> bool:
        """True when the interiors overlap (touching edges do not count)."""
        return (self.lo_x < other.hi_x and other.lo_x < self.hi_x
                and self.lo_y < other.hi_y and other.lo_y < self.hi_y)

    def touches(self, other: "Rect") -> bool:
        """True when the closed rects share at least one point."""
        return (self.lo_x <= other.hi_x and other.lo_x <= self.hi_x
                and self.lo_y <= other.hi_y and other.lo_y <= self.hi_y)

    def contains(self, other: "Rect") -> bool:
        return (self.lo_x <= other.lo_x and self.lo_y <= other.lo_y
                and other.hi_x <= self.hi_x and other.hi_y <= self.hi_y)

    def contains_point(self, x: int, y: int) -> bool:
        return self.lo_x <= x <= self.hi_x and self.lo_y <= y <= self.hi_y

    def clip(self, other: "Rect") -> "Rect | None":
        lx, ly = max(self.lo_x, other.lo_x), max(self.lo_y, other.lo_y)
        hx, hy = min(self.hi_x, other.hi_x), min(self.hi_y, other.hi_y)
        if lx >= hx or ly >= hy:
            return None
        return Rect(lx, ly, hx, hy)

    def inflate(self, d: int) -> "Rect":
        return Rect(self.lo_x - d, self.lo_y - d, self.hi_x + d, self.hi_y + d)

    def translate(self, dx: int, dy: int) -> "Rect":
        return Rect(self.lo_x + dx, self.lo_y + dy, self.hi_x + dx, self.hi_y + dy)

    def gap(self, other: "Rect") -> tuple[int, int]:
        """Separation along x and y; negative values mean projections overlap."""
        gx = max(other.lo_x - self.hi_x, self.lo_x - other.hi_x)
        gy = max(other.lo_y - self.hi_y, self.lo_y - other.hi_y)
        return gx, gy


def bounding_box(rects: Iterable[Rect]) -> Rect | None:
    rects = list(rects)
    if not rects:
        return None
    return Rect(min(r.lo_x for r in rects), min(r.lo_y for r in rects),
                max(r.hi_x for r in rects), max(r.hi_y for r in rects))


def _coverage(xs: np.ndarray, ys: np.ndarray, rects: Sequence[Rect]) -> np.ndarray:
    """Per-cell cover counts of ``rects`` on the grid spanned by ``xs`` x ``ys``."""
    arr = _rect_array(rects)
    i0, i1 = np.searchsorted(xs, arr[:, 0]), np.searchsorted(xs, arr[:, 2])
    j0, j1 = np.searchsorted(ys, arr[:, 1]), np.searchsorted(ys, arr[:, 3])
    diff = np.zeros((len(xs), len(ys)), dtype=np.int32)
    np.add.at(diff, (i0, j0), 1)
    np.add.at(diff, (i1, j0), -1)
    np.add.at(diff, (i0, j1), -1)
    np.add.at(diff, (i1, j1), 1)
    return diff.cumsum(axis=0).cumsum(axis=1)[:-1, :-1]


def _axes(rects: Sequence[Rect]):
    xs = np.unique(np.array([v for r in rects for v in (r.lo_x, r.hi_x)], dtype=np.int64))
    ys = np.unique(np.array([v for r in rects for v in (r.lo_y, r.hi_y)], dtype=np.int64))
    return xs, ys


def _sweep_area(rects: Sequence[Rect]) -> int:
    ys = np.unique(np.array([v for r in rects for v in (r.lo_y, r.hi_y)], dtype=np.int64))
    seg_len = np.diff(ys)
    cover = np.zeros(len(seg_len), dtype=np.int64)
    yl = ys.tolist()
    events = []
    for r in rects:
        i0 = bisect_left(yl, r.lo_y)
        i1 = bisect_left(yl, r.hi_y)
        events.append((r.lo_x, 1, i0, i1))
        events.append((r.hi_x, -1, i0, i1))
    events.sort()
    total = 0
    prev_x = events[0][0]
    covered = 0
    for x, delta, i0, i1 in events:
        if x != prev_x:
            total += covered * (x - prev_x)
            prev_x = x
        cover[i0:i1] += delta
        covered = int(seg_len[cover > 0].sum())
    return total


def rect_union_area(rects: Sequence[Rect]) -> int:
    """Exact area of the union of ``rects`` over a coordinate-compressed grid.

    Zero-area rects contribute nothing. The result does not depend on input order.
    Large inputs use an x-sweep to bound memory.
    """
    rects = [r for r in rects if r.lo_x < r.hi_x and r.lo_y < r.hi_y]
    if not rects:
        return 0
    if len(rects) > 1500:
        return _sweep_area(rects)
    xs, ys = _axes(rects)
    counts = _coverage(xs, ys, rects)
    dx = np.diff(xs)
    dy = np.diff(ys)
    return int(dx @ (counts > 0).astype(np.int64) @ dy)


def _rect_array(rects: Sequence[Rect]) -> np.ndarray:
    return np.array([(r.lo_x, r.lo_y, r.hi_x, r.hi_y) for r in rects], dtype=np.int64).reshape(-1, 4)


def subtract_area(shapes: Sequence[Rect], covers: Sequence[Rect]) -> int:
    """Area of union(shapes) minus union(covers)."""
    return union_and_bare_area(shapes, covers)[1]


def union_and_bare_area(shapes: Sequence[Rect], covers: Sequence[Rect]) -> tuple[int, int]:
    """(area of union(shapes), area of union(shapes) minus union(covers))."""
    s = _rect_array(shapes)
    s = s[(s[:, 0] < s[:, 2]) & (s[:, 1] < s[:, 3])]
    if not len(s):
        return 0, 0
    c = _rect_array(covers)
    # clip covers to the shapes' bounding box and drop the empty ones
    lo = np.maximum(c[:, :2], s[:, :2].min(axis=0))
    hi = np.minimum(c[:, 2:], s[:, 2:].max(axis=0))
    c = np.hstack([lo, hi])[(lo < hi).all(axis=1)]
    if len(s) + len(c) > 1500:
        clipped = [Rect(*map(int, r)) for r in c]
        union = rect_union_area(shapes)
        return union, rect_union_area(list(shapes) + clipped) - rect_union_area(clipped)
    xs = np.unique(np.concatenate([s[:, 0], s[:, 2], c[:, 0], c[:, 2]]))
    ys = np.unique(np.concatenate([s[:, 1], s[:, 3], c[:, 1], c[:, 3]]))
    # one prefix-sum pass: shape counts in the low bits, cover counts above them
    diff = np.zeros((len(xs), len(ys)), dtype=np.int64)
    for arr, w in ((s, 1), (c, 1 << 24)):
        i0, i1 = np.searchsorted(xs, arr[:, 0]), np.searchsorted(xs, arr[:, 2])
        j0, j1 = np.searchsorted(ys, arr[:, 1]), np.searchsorted(ys, arr[:, 3])
        np.add.at(diff, (i0, j0), w)
        np.add.at(diff, (i1, j0), -w)
        np.add.at(diff, (i0, j1), -w)
        np.add.at(diff, (i1, j1), w)
    both = diff.cumsum(axis=0).cumsum(axis=1)[:-1, :-1]
    dx, dy = np.diff(xs), np.diff(ys)
    mine = (both & ((1 << 24) - 1)) > 0
    bare = mine & (both < (1 << 24))
    return int(dx @ mine.astype(np.int64) @ dy), int(dx @ bare.astype(np.int64) @ dy)


def subtract_rects(shapes: Sequence[Rect], covers: Sequence[Rect]) -> list[Rect]:
    """Disjoint rects tiling union(shapes) minus union(covers).

    Built on a coordinate-compressed occupancy grid; horizontally adjacent
    cells in a strip are merged.
    """
    shapes = [s for s in shapes if s.area > 0]
    if not shapes:
        return []
    box = bounding_box(shapes)
    covers = [c for c in (cv.clip(box) for cv in covers) if c is not None]
    xs, ys = _axes(shapes + covers)
    grid = _coverage(xs, ys, shapes) > 0
    if covers:
        grid &= _coverage(xs, ys, covers) == 0
    out = []
    for j in range(grid.shape[1]):
        col = grid[:, j]
        i = 0
        n = len(col)
        while i < n:
            if col[i]:
                k = i
                while k < n and col[k]:
                    k += 1
                out.append(Rect(int(xs[i]), int(ys[j]), int(xs[k]), int(ys[j + 1])))
                i = k
            else:
                i += 1
    return out
