"""Convex piecewise-linear functions on an interval.

Represented by the domain start ``x0``, the value ``v0`` there, and
(slope, width) pieces with non-decreasing slopes. Infimal convolution of two
convex functions in this form is a sorted merge of their slope lists, which
is what makes the storage-dispatch dynamic program exact and fast.
"""
from __future__ import annotations

from bisect import bisect_right

_SLOPE_TOL = 0.0   # only exactly-equal slopes coalesce; keeps values exact


class ConvexPwl:
    __slots__ = ("x0", "v0", "slopes", "widths")

    def __init__(self, x0: float, v0: float, slopes: list[float], widths: list[float]):
        self.x0 = x0
        self.v0 = v0
        self.slopes = slopes
        self.widths = widths

    @classmethod
    def point(cls, x: float, v: float = 0.0) -> "ConvexPwl":
        return cls(x, v, [], [])

    @classmethod
    def flat(cls, lo: float, hi: float, v: float = 0.0) -> "ConvexPwl":
        if hi < lo:
            raise ValueError("empty domain")
        if hi == lo:
            return cls.point(lo, v)
        return cls(lo, v, [0.0], [hi - lo])

    @classmethod
    def from_knots(cls, xs: list[float], vs: list[float]) -> "ConvexPwl":
        """Build from knot coordinates; slopes must come out non-decreasing."""
        slopes, widths = [], []
        for (xa, va), (xb, vb) in zip(zip(xs, vs), zip(xs[1:], vs[1:])):
            w = xb - xa
            if w < 0:
                raise ValueError("knots must be increasing")
            if w == 0:
                continue
            slopes.append((vb - va) / w)
            widths.append(w)
        if any(s2 < s1 - 1e-12 for s1, s2 in zip(slopes, slopes[1:])):
            raise ValueError(f"knots are not convex: slopes {slopes}")
        f = cls(xs[0], vs[0], slopes, widths)
        f._coalesce()
        return f

    # -- basic queries ------------------------------------------------------

    @property
    def x1(self) -> float:
        return self.x0 + sum(self.widths)

    def eval(self, x: float, tol: float = 1e-9) -> float:
        if x < self.x0 - tol or x > self.x1 + tol:
            raise ValueError(f"{x} outside domain [{self.x0}, {self.x1}]")
        v = self.v0
        rem = x - self.x0
        for s, w in zip(self.slopes, self.widths):
            step = w if w < rem else rem
            if step > 0:
                v += s * step
                rem -= step
            if rem <= 0:
                break
        return v

    def min_point(self) -> tuple[float, float, float]:
        """(argmin_lo, argmin_hi, min value); the argmin is an interval."""
        v = self.v0
        x = self.x0
        i = 0
        while i < len(self.slopes) and self.slopes[i] < 0:
            v += self.slopes[i] * self.widths[i]
            x += self.widths[i]
            i += 1
        lo = hi = x
        while i < len(self.slopes) and self.slopes[i] == 0:
            hi += self.widths[i]
            i += 1
        return lo, hi, v

    def knots(self) -> list[float]:
        xs = [self.x0]
        for w in self.widths:
            xs.append(xs[-1] + w)
        return xs

    # -- transforms -----------------------------------------------------------

    def _coalesce(self) -> None:
        slopes, widths = [], []
        for s, w in zip(self.slopes, self.widths):
            if w <= 0:
                continue
            if slopes and abs(s - slopes[-1]) <= _SLOPE_TOL:
                widths[-1] += w
            else:
                slopes.append(s)
                widths.append(w)
        self.slopes, self.widths = slopes, widths

    def add_const(self, c: float) -> "ConvexPwl":
        return ConvexPwl(self.x0, self.v0 + c, list(self.slopes), list(self.widths))

    def reflect(self) -> "ConvexPwl":
        """g(x) = f(-x); still convex with reversed, negated slopes."""
        v1 = self.v0 + sum(s * w for s, w in zip(self.slopes, self.widths))
        return ConvexPwl(-self.x1, v1,
                         [-s for s in reversed(self.slopes)],
                         list(reversed(self.widths)))

    def clip(self, lo: float, hi: float) -> "ConvexPwl":
        """Restrict the domain to [lo, hi] intersected with the current one."""
        new_lo = max(lo, self.x0)
        new_hi = min(hi, self.x1)
        if new_hi < new_lo - 1e-12:
            raise ValueError(f"clip to [{lo}, {hi}] empties domain [{self.x0}, {self.x1}]")
        new_hi = max(new_hi, new_lo)
        v0 = self.eval(new_lo)
        slopes, widths = [], []
        pos = self.x0
        for s, w in zip(self.slopes, self.widths):
            a = max(pos, new_lo)
            b = min(pos + w, new_hi)
            if b > a:
                slopes.append(s)
                widths.append(b - a)
            pos += w
        out = ConvexPwl(new_lo, v0, slopes, widths)
        out._coalesce()
        return out


def inf_conv(f: ConvexPwl, g: ConvexPwl) -> ConvexPwl:
    """(f [] g)(x) = min_{a+b=x} f(a) + g(b): merge the sorted slope lists."""
    slopes = []
    widths = []
    i = j = 0
    fs, fw, gs, gw = f.slopes, f.widths, g.slopes, g.widths
    while i < len(fs) or j < len(gs):
        if j >= len(gs) or (i < len(fs) and fs[i] <= gs[j]):
            slopes.append(fs[i]); widths.append(fw[i]); i += 1
        else:
            slopes.append(gs[j]); widths.append(gw[j]); j += 1
    out = ConvexPwl(f.x0 + g.x0, f.v0 + g.v0, slopes, widths)
    out._coalesce()
    return out


def argmin_on(f: ConvexPwl, g: ConvexPwl, s: float, lo: float, hi: float,
              prefer: "callable | None" = None) -> float:
    """Minimize h(d) = f(d) + g(s + d) for d in [lo, hi].

    Both inputs are convex so the minimum lies at a knot of either function
    or at an interval endpoint; ties are broken by the ``prefer`` key
    (smaller is better), then by smaller |d|.
    """
    cands = {lo, hi}
    for x in f.knots():
        if lo < x < hi:
            cands.add(x)
    for x in g.knots():
        d = x - s
        if lo < d < hi:
            cands.add(d)
    best_d = best_val = best_pref = None
    for d in sorted(cands):
        val = f.eval(d) + g.eval(s + d)
        pref = prefer(d) if prefer is not None else abs(d)
        if (best_d is None or val < best_val - 1e-12
                or (val <= best_val + 1e-12 and pref < best_pref)):
            best_d, best_val, best_pref = d, min(val, best_val) if best_val is not None else val, pref
    return best_d
