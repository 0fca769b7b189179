"""Sets of half-open time intervals modulo a fixed period."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


def _normalize(intervals, period):
    """Sort, drop empties and merge touching or overlapping pieces."""
    pieces = sorted((float(a), float(b)) for a, b in intervals if b > a)
    merged = []
    for a, b in pieces:
        if a < 0.0 or b > period:
            raise ValueError(f"interval ({a}, {b}) outside [0, {period}]")
        if merged and a <= merged[-1][1]:
            if b > merged[-1][1]:
                merged[-1] = (merged[-1][0], b)
        else:
            merged.append((a, b))
    return tuple(merged)


def _reduce(t, period):
    # tiny negative t gives t % period == period after rounding
    r = t % period
    return 0.0 if r >= period else r


@dataclass(frozen=True)
class PeriodicIntervalSet:
    """A union of disjoint ``[start, end)`` intervals inside ``[0, period)``.

    The set repeats with ``period``: membership of an arbitrary time is decided
    after reducing it modulo the period.
    """

    period: float
    intervals: tuple = field(default=())

    def __post_init__(self):
        if not self.period > 0 or math.isinf(self.period):
            raise ValueError(f"period must be finite and positive, got {self.period}")
        object.__setattr__(self, "intervals", _normalize(self.intervals, self.period))

    @classmethod
    def empty(cls, period):
        return cls(period, ())

    @classmethod
    def full(cls, period):
        return cls(period, ((0.0, period),))

    @classmethod
    def from_arc(cls, period, start, length):
        """Interval of ``length`` beginning at ``start`` (any real), wrapped into the period."""
        if length <= 0:
            return cls.empty(period)
        if length >= period:
            return cls.full(period)
        a = _reduce(start, period)
        b = a + length
        if b <= period:
            return cls(period, ((a, b),))
        return cls(period, ((a, period), (0.0, b - period)))

    def _check(self, other):
        if other.period != self.period:
            raise ValueError(f"period mismatch: {self.period} vs {other.period}")

    @property
    def measure(self):
        return math.fsum(b - a for a, b in self.intervals)

    def is_empty(self):
        return not self.intervals

    def __bool__(self):
        return bool(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def contains(self, t):
        t = _reduce(t, self.period)
        return any(a <= t < b for a, b in self.intervals)

    __contains__ = contains

    def union(self, other):
        self._check(other)
        return PeriodicIntervalSet(self.period, self.intervals + other.intervals)

    def intersection(self, other):
        self._check(other)
        out = []
        i = j = 0
        xs, ys = self.intervals, other.intervals
        while i < len(xs) and j < len(ys):
            a = max(xs[i][0], ys[j][0])
            b = min(xs[i][1], ys[j][1])
            if a < b:
                out.append((a, b))
            if xs[i][1] < ys[j][1]:
                i += 1
            else:
                j += 1
        return PeriodicIntervalSet(self.period, out)

    def complement(self):
        out = []
        cursor = 0.0
        for a, b in self.intervals:
            if a > cursor:
                out.append((cursor, a))
            cursor = b
        if cursor < self.period:
            out.append((cursor, self.period))
        return PeriodicIntervalSet(self.period, out)

    def difference(self, other):
        return self.intersection(other.complement())

    def shift(self, dt):
        """Translate every interval later in time by ``dt`` (wrapping around)."""
        arcs = [(a, b - a) for a, b in self.intervals]
        # a piece ending at the period and one starting at 0 are a single arc; shifting
        # them separately would leave a rounding gap where they should rejoin
        if len(arcs) > 1 and self.intervals[0][0] == 0.0 and self.intervals[-1][1] == self.period:
            (_, head), (start, tail) = arcs[0], arcs.pop()
            arcs[0] = (start, tail + head)
        out = PeriodicIntervalSet.empty(self.period)
        for a, length in arcs:
            out = out.union(PeriodicIntervalSet.from_arc(self.period, a + dt, length))
        return out

    __or__ = union
    __and__ = intersection
    __invert__ = complement
    __sub__ = difference

    def isclose(self, other, abs_tol=1e-12):
        """Equality of the two sets up to ``abs_tol`` on every endpoint."""
        if self.period != other.period or len(self) != len(other):
            return False
        return all(
            abs(a - c) <= abs_tol and abs(b - d) <= abs_tol
            for (a, b), (c, d) in zip(self.intervals, other.intervals)
        )
