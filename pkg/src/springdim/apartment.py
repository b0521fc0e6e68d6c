"""Apartment geometry: slopes, nu-weight roots, the wall group, alcoves, clans.

Points of the apartment are written in the coordinates ``x_i = <alpha_i, x>``
given by the relative simple roots, so a linear form with simple-root
coefficients ``c`` evaluates as ``c . x`` and the base point ``nu rho^vee`` is
``(nu, ..., nu)``.  All walk arithmetic happens on integers after scaling by a
common denominator ``D``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import exactla, kernels
from .coinvariant import Infeasible, WallGroup
from .rootdata import InvalidSpec, RootDatum

Vec = Tuple[int, ...]
DEFAULT_ALCOVE_CAP = 10_000_000

# Elliptic regular numbers for types where they are tabulated.  For split
# types the divisibility criterion below decides regularity in general.
REGULAR_NUMBERS: Dict[Tuple[str, int, int], Tuple[int, ...]] = {
    ("A", 2, 2): (6, 2),
    ("A", 3, 2): (6, 2),
    ("A", 4, 2): (10, 2),
    ("C", 2, 1): (4, 2),
    ("B", 2, 1): (4, 2),
    ("G", 2, 1): (6, 3, 2),
    ("D", 4, 3): (12, 6, 3),
    ("F", 4, 1): (12, 8, 6, 4, 3, 2),
    ("E", 6, 1): (12, 9, 6, 3),
    ("E", 7, 1): (18, 14, 6, 2),
    ("E", 8, 1): (30, 24, 20, 15, 12, 10, 8, 6, 5, 4, 3, 2),
}


def split_regular(degrees: Sequence[int], m: int) -> bool:
    """Divisibility criterion: m divides as many degrees as codegrees."""
    codegrees = [d - 2 for d in degrees]
    return sum(1 for d in degrees if d % m == 0) == sum(1 for c in codegrees if c % m == 0)


def regular_numbers(datum: RootDatum) -> List[int]:
    """Known regular numbers (descending) for the datum's type."""
    key = (datum.spec.family, datum.rank_abs, datum.e)
    out = set(REGULAR_NUMBERS.get(key, ()))
    out.add(datum.h_theta)
    if datum.e == 1:
        out |= {m for m in range(1, datum.h_theta + 1) if split_regular(datum.degrees, m)}
    return sorted(out, reverse=True)


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineRoot:
    linear: Vec
    offset: Fraction

    def value(self, x: Sequence) -> Fraction:
        return sum((Fraction(c) * Fraction(v) for c, v in zip(self.linear, x)), Fraction(0)) + self.offset

    def __str__(self) -> str:
        parts = []
        for i, c in enumerate(self.linear, start=1):
            if c:
                parts.append(f"{c:+d}a{i}")
        if self.offset:
            parts.append(f"{'+' if self.offset > 0 else '-'}{abs(self.offset)}d")
        s = "".join(parts) or "0"
        return s[1:] if s.startswith("+") else s


@dataclass(frozen=True)
class SlopeSpec:
    d1: int
    m1: int
    d: int
    m: int
    nu: Fraction
    base_point: Tuple[Fraction, ...]     # nu * rho^vee in simple-coroot coordinates
    elliptic: bool
    t_fixed_dim: int

    @property
    def label(self) -> str:
        return f"{self.d1}/{self.m1}"

    def to_json(self) -> dict:
        return {
            "d1": self.d1, "m1": self.m1, "d": self.d, "m": self.m,
            "nu": str(self.nu), "elliptic": self.elliptic, "t_fixed_dim": self.t_fixed_dim,
            "base_point": [str(x) for x in self.base_point],
        }


def t_fixed_dim(datum: RootDatum, nu: Fraction) -> int:
    e = datum.e
    return sum(1 for d, eps in zip(datum.degrees, datum.twist_exponents)
               if (nu * (d - 1) + Fraction(eps, e)).denominator == 1)


def make_slope(datum: RootDatum, d1: int, m1: int, check_regular: bool = True) -> SlopeSpec:
    if d1 <= 0 or m1 <= 0:
        raise InvalidSpec("slope must be positive")
    if gcd(d1, m1) != 1:
        raise InvalidSpec(f"slope {d1}/{m1} is not in lowest terms")
    if check_regular:
        regs = regular_numbers(datum)
        if m1 not in regs:
            raise InvalidSpec(f"{m1} is not a regular number for {datum.spec.label}; known: {regs}")
    m = lcm(m1, datum.e)
    nu = Fraction(d1, m1)
    d = int(nu * m)
    t = t_fixed_dim(datum, nu)
    return SlopeSpec(
        d1=d1, m1=m1, d=d, m=m, nu=nu,
        base_point=tuple(nu * c for c in datum.rho_vee),
        elliptic=(t == 0), t_fixed_dim=t,
    )


def nu_weight_roots(datum: RootDatum, slope: SlopeSpec) -> List[AffineRoot]:
    """Affine roots taking the value nu at nu rho^vee, in a fixed order."""
    nu = slope.nu
    out = []
    for v in datum.roots:
        n = nu * (1 - sum(v))
        if datum.is_admissible(v, n):
            out.append(AffineRoot(tuple(v), n))
    out.sort(key=lambda a: (sum(a.linear), a.linear))
    return out


def wall_roots(datum: RootDatum, slope: SlopeSpec) -> List[AffineRoot]:
    """All affine roots vanishing at nu rho^vee."""
    out = []
    for v in datum.roots:
        n = -slope.nu * sum(v)
        if datum.is_admissible(v, n):
            out.append(AffineRoot(tuple(v), n))
    return out


def fundamental_barycenter(datum: RootDatum) -> Tuple[Fraction, ...]:
    r = datum.r
    return tuple(Fraction(1, (r + 1) * datum.e * a) for a in datum.marks[1:])


@dataclass
class WallSystem:
    """Wall group data tied to the apartment: affine positive and simple roots."""

    group: WallGroup
    positive: List[AffineRoot]
    simple: List[AffineRoot]


def wall_system(datum: RootDatum, slope: SlopeSpec) -> WallSystem:
    b0 = fundamental_barycenter(datum)
    pos = [a for a in wall_roots(datum, slope) if a.value(b0) > 0]
    lin = {a.linear for a in pos}
    # keep a reduced system: drop 2v when v is present
    red = [a for a in pos if not all(c % 2 == 0 for c in a.linear)
           or tuple(c // 2 for c in a.linear) not in lin]
    red_lin = {a.linear for a in red}
    simple = []
    for a in red:
        decomposable = any(
            tuple(x - y for x, y in zip(a.linear, b.linear)) in red_lin
            for b in red if b.linear != a.linear
        )
        if not decomposable:
            simple.append(a)
    simple.sort(key=lambda a: (sum(a.linear), a.linear))
    group = WallGroup([a.linear for a in simple], [list(row) for row in datum.gram])
    if group.reflection_count != len(red):
        raise AssertionError("wall group simple system does not generate its positive roots")
    return WallSystem(group, sorted(red, key=lambda a: (sum(a.linear), a.linear)), simple)


def wall_group(datum: RootDatum, slope: SlopeSpec) -> WallGroup:
    return wall_system(datum, slope).group


# ---------------------------------------------------------------------------
# alcoves

@dataclass
class Alcove:
    """An alcove ``w F`` given by the affine map of ``w`` on scaled coordinates."""

    linear: np.ndarray        # (r, r) integer matrix W
    translation: np.ndarray   # (r,) integer vector T
    barycenter_scaled: np.ndarray
    sep_count: int
    scale: int
    apartment: "Apartment" = field(repr=False, compare=False, default=None)

    @property
    def barycenter(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(int(x), self.scale) for x in self.barycenter_scaled)

    @property
    def key(self) -> bytes:
        return self.barycenter_scaled.tobytes()

    def vertices_scaled(self) -> np.ndarray:
        V = self.apartment.vertices_scaled
        return V @ self.linear.T + self.translation[None, :]

    @property
    def word(self) -> List[int]:
        return self.apartment.reduced_word(self)


class Apartment:
    """Scaled integer model of the apartment for one (datum, slope)."""

    def __init__(self, datum: RootDatum, slope: SlopeSpec):
        self.datum = datum
        self.slope = slope
        r = datum.r
        self.r = r
        e = datum.e
        self.D = lcm((r + 1) * e * lcm(*datum.marks[1:]), slope.m, slope.nu.denominator)
        D = self.D
        self.nu_roots = nu_weight_roots(datum, slope)
        self.walls = wall_system(datum, slope)
        self.N = self.walls.group.reflection_count

        # affine simple roots: linear parts A_i, scaled offsets n0_i, coroots c_i
        simple = datum.affine_simple_roots()
        self.A = np.array([s[0] for s in simple], dtype=np.int64)
        self.n0 = np.array([int(s[1] * D) for s in simple], dtype=np.int64)
        self.C = np.array([[self._coroot_entry(j, s[0]) for j in range(r)] for s in simple], dtype=np.int64)
        # fundamental alcove vertices (vertex j opposite facet j)
        verts = [[0] * r]
        for j in range(r):
            v = [0] * r
            v[j] = D // (e * datum.marks[j + 1])
            verts.append(v)
        self.vertices_scaled = np.array(verts, dtype=np.int64)
        B0 = self.vertices_scaled.sum(axis=0)
        if np.any(B0 % (r + 1)):
            raise AssertionError("scale does not clear the barycenter denominators")
        self.B0 = B0 // (r + 1)
        self.SB = np.array([self._reflect_point(i, self.B0) for i in range(r + 1)], dtype=np.int64)

        self.nu_lin = np.array([a.linear for a in self.nu_roots], dtype=np.int64).reshape(-1, r)
        self.nu_off = np.array([self._scaled(a.offset) for a in self.nu_roots], dtype=np.int64)
        pos = self.walls.positive
        self.wall_lin = np.array([a.linear for a in pos], dtype=np.int64).reshape(-1, r)
        self.wall_off = np.array([self._scaled(a.offset) for a in pos], dtype=np.int64)
        self.simple_wall = [(np.array(a.linear, dtype=np.int64), self._scaled(a.offset),
                             np.array([self._coroot_entry(j, a.linear) for j in range(r)], dtype=np.int64))
                            for a in self.walls.simple]
        self.P = np.array([int(slope.nu * D)] * r, dtype=np.int64)
        self._bounded_cache: Dict[Tuple[bool, ...], bool] = {}
        self.skipped_unbounded = 0

    # -- helpers -----------------------------------------------------------
    def _scaled(self, q: Fraction) -> int:
        v = q * self.D
        if v.denominator != 1:
            raise AssertionError("offset not integral after scaling")
        return int(v)

    def _coroot_entry(self, j: int, lin: Sequence[int]) -> int:
        ej = tuple(int(k == j) for k in range(self.r))
        c = self.datum.coroot_pairing(ej, lin)
        if c.denominator != 1:
            raise AssertionError("non-integral coroot coordinate")
        return int(c)

    def _reflect_point(self, i: int, X: np.ndarray) -> np.ndarray:
        val = int(self.A[i] @ X) + int(self.n0[i])
        return X - val * self.C[i]

    @staticmethod
    def _compose_right(W, T, A, n0, c):
        """(W, T) o s where s(X) = X - (A.X + n0) c."""
        Wc = W @ c
        return W - np.outer(Wc, A), T - n0 * Wc

    @staticmethod
    def _compose_left(W, T, g, off, c):
        """s_gamma o (W, T)."""
        R = np.eye(len(T), dtype=np.int64) - np.outer(c, g)
        return R @ W, R @ T - off * c

    def nu_values(self, points: np.ndarray) -> np.ndarray:
        return kernels.evaluate(points, self.nu_lin, self.nu_off)

    def wall_values(self, points: np.ndarray) -> np.ndarray:
        return kernels.evaluate(points, self.wall_lin, self.wall_off)

    def mask_at(self, point: np.ndarray) -> Tuple[bool, ...]:
        if not len(self.nu_lin):
            return ()
        return tuple(bool(v < 0) for v in self.nu_values(point[None, :])[0])

    def bounded_at(self, point: np.ndarray) -> bool:
        """Whether the clan containing a (non-wall) point is bounded."""
        mask = self.mask_at(point)
        hit = self._bounded_cache.get(mask)
        if hit is None:
            hit = clan_bounded(self, mask)
            self._bounded_cache[mask] = hit
        return hit

    def is_dominant(self, point: np.ndarray) -> bool:
        if not len(self.wall_lin):
            return True
        return bool(np.all(self.wall_values(point[None, :])[0] > 0))

    def make_alcove(self, W, T) -> Alcove:
        B = W @ self.B0 + T
        sep = int(np.sum(self.nu_values(B[None, :])[0] < 0)) if len(self.nu_lin) else 0
        return Alcove(W.copy(), T.copy(), B, sep, self.D, self)

    # -- start alcove ------------------------------------------------------
    def start_alcove(self) -> Alcove:
        """Dominant alcove whose closure contains the base point."""
        r = self.r
        W = np.eye(r, dtype=np.int64)
        T = np.zeros(r, dtype=np.int64)
        Y = self.P.copy()
        steps = 0
        while True:
            vals = self.A @ Y + self.n0
            neg = np.nonzero(vals < 0)[0]
            if not len(neg):
                break
            i = int(neg[0])
            Y = Y - int(vals[i]) * self.C[i]
            W, T = self._compose_right(W, T, self.A[i], self.n0[i], self.C[i])
            steps += 1
            if steps > 10 ** 6:
                raise AssertionError("folding the base point did not terminate")
        W, T = self.dominant_map(W, T)
        alc = self.make_alcove(W, T)
        if alc.sep_count != 0:
            raise AssertionError("start alcove is separated from the base point")
        return alc

    def dominant_map(self, W, T):
        """Left-multiply by wall reflections until the alcove is dominant."""
        for _ in range(10 ** 6):
            B = W @ self.B0 + T
            for g, off, c in self.simple_wall:
                if int(g @ B) + off < 0:
                    W, T = self._compose_left(W, T, g, off, c)
                    break
            else:
                return W, T
        raise AssertionError("dominance folding did not terminate")

    def dominant_point(self, X: np.ndarray, weight: int = 1) -> np.ndarray:
        """Fold a point (scaled by ``weight``) into the closed dominant cone."""
        X = X.copy()
        for _ in range(10 ** 6):
            for g, off, c in self.simple_wall:
                v = int(g @ X) + weight * off
                if v < 0:
                    X = X - v * c
                    break
            else:
                return X
        raise AssertionError("dominance folding did not terminate")

    # -- enumeration ---------------------------------------------------------
    def enumerate(self, cap: int = DEFAULT_ALCOVE_CAP, which: Optional[str] = None) -> List[Alcove]:
        """Dominant alcoves separated from the base point by at most N nu-walls.

        The region is star-shaped about the base point (separation counts grow
        along rays from it and the dominant cone is convex), so a facet walk
        from the start alcove reaches all of it.
        """
        start = self.start_alcove()
        r = self.r
        self.skipped_unbounded = 0
        seen = {start.key}
        out = [start]
        fW = start.linear[None, :, :]
        fT = start.translation[None, :]
        while len(fW):
            B, Wn, Tn, sep, dom = kernels.expand(
                fW, fT, self.SB, self.C, self.A, self.n0,
                self.nu_lin, self.nu_off, self.wall_lin, self.wall_off, which=which)
            ok = (sep <= self.N) & dom
            idx = np.argwhere(ok)
            newW, newT = [], []
            for q, i in idx:
                b = B[q, i]
                k = b.tobytes()
                if k in seen:
                    continue
                seen.add(k)
                if not self.bounded_at(b):
                    self.skipped_unbounded += 1
                    continue
                a = Alcove(Wn[q, i].copy(), Tn[q, i].copy(), b.copy(), int(sep[q, i]), self.D, self)
                out.append(a)
                newW.append(a.linear)
                newT.append(a.translation)
                if len(out) > cap:
                    raise Infeasible(f"alcove walk exceeded the cap of {cap} alcoves")
            if newW:
                fW = np.stack(newW)
                fT = np.stack(newT)
            else:
                fW = np.zeros((0, r, r), dtype=np.int64)
        out.sort(key=lambda a: (a.sep_count, tuple(int(x) for x in a.barycenter_scaled)))
        return out

    # -- per-alcove data -----------------------------------------------------
    def negative_mask(self, alcove: Alcove) -> Tuple[bool, ...]:
        return self.mask_at(alcove.barycenter_scaled)

    def lambda_factors(self, alcove: Alcove) -> List[Vec]:
        return [a.linear for a, neg in zip(self.nu_roots, self.negative_mask(alcove)) if neg]

    def face_vertices(self, alcove: Alcove, S: Iterable[int]) -> np.ndarray:
        """Vertices of the face of ``alcove`` of type S (vertices j not in S)."""
        S = set(S)
        keep = [j for j in range(self.r + 1) if j not in S]
        return alcove.vertices_scaled()[keep]

    def reduced_word(self, alcove: Alcove) -> List[int]:
        """A reduced expression s_{i1}...s_{ik} with w F = alcove."""
        word: List[int] = []
        W = exactla.QMatrix.from_dense(alcove.linear.tolist())
        Winv = exactla.inverse(W)
        inv = np.array([[int(x) for x in row] for row in Winv.to_dense()], dtype=np.int64)
        # work with w^{-1}: descents of w^{-1} are read off at w^{-1}(B0)
        Wi, Ti = inv, -(inv @ alcove.translation)
        for _ in range(10 ** 6):
            Y = Wi @ self.B0 + Ti  # barycenter of w^{-1} F
            # left descent of w: alpha_i negative on w^{-1} F
            vals = self.A @ Y + self.n0
            neg = np.nonzero(vals < 0)[0]
            if not len(neg):
                # peeled as w = w' s_i, so the letters came out last-first
                return word[::-1]
            i = int(neg[0])
            word.append(i)
            # w^{-1} <- s_i w^{-1}
            R = np.eye(self.r, dtype=np.int64) - np.outer(self.C[i], self.A[i])
            Wi, Ti = R @ Wi, R @ Ti - self.n0[i] * self.C[i]
        raise AssertionError("reduced word search did not terminate")

    def map_from_word(self, word: Sequence[int]):
        W = np.eye(self.r, dtype=np.int64)
        T = np.zeros(self.r, dtype=np.int64)
        for i in word:
            W, T = self._compose_right(W, T, self.A[i], self.n0[i], self.C[i])
        return W, T


# ---------------------------------------------------------------------------
# clans

@dataclass
class Clan:
    sign_vector: Tuple[str, ...]
    coset_reps: List[Alcove]
    lambda_factors: List[Vec]
    bounded: bool

    @property
    def sep_count(self) -> int:
        return len(self.lambda_factors)

    @property
    def alcove_count(self) -> int:
        return len(self.coset_reps)


def _recession_cone_trivial(rows: List[List[Fraction]], r: int) -> bool:
    """True iff {y : row . y >= 0 for all rows} = {0}."""
    if not rows:
        return r == 0
    if exactla.rank(rows) < r:
        return False
    u = [sum((row[j] for row in rows), Fraction(0)) for j in range(r)]
    return not _fm_feasible(rows, u)


def _primitive_row(vals: Sequence[int]) -> Tuple[int, ...]:
    g = 0
    for v in vals:
        g = gcd(g, v)
    if g > 1:
        return tuple(v // g for v in vals)
    return tuple(vals)


def _support(row: Sequence[int], nvars: int) -> int:
    mask = 0
    for j in range(nvars):
        if row[j]:
            mask |= 1 << j
    return mask


def _fm_feasible(ineqs: List[List[Fraction]], eq: List[Fraction]) -> bool:
    """Feasibility of {A y >= 0, eq . y >= 1} by Fourier-Motzkin elimination.

    Each row is a primitive integer vector ``(coeffs..., const)`` meaning
    ``coeffs . y + const >= 0`` and carries the set of source rows it was
    built from.  A combination is dropped as redundant when that set has
    more than ``1 + explicit + implicit`` members, where ``implicit`` counts
    variables that cancelled without being chosen (Imbert's form of
    Chernikov's rule).
    """
    r = len(eq)
    rows: Dict[Tuple[int, ...], Tuple[FrozenSet[int], int]] = {}
    source = [list(map(Fraction, row)) + [Fraction(0)] for row in ineqs]
    source.append(list(map(Fraction, eq)) + [Fraction(-1)])
    for idx, vals in enumerate(source):
        den = 1
        for v in vals:
            den = lcm(den, v.denominator)
        ints = _primitive_row([int(v * den) for v in vals])
        if not any(ints[:-1]):
            if ints[-1] < 0:
                return False
            continue
        if ints not in rows:
            rows[ints] = (frozenset((idx,)), _support(ints, r))
    remaining = list(range(r))
    remaining_mask = (1 << r) - 1
    eliminated = 0
    while remaining:
        # eliminate the variable generating the fewest pairs
        best, best_cost = None, None
        for var in remaining:
            npos = sum(1 for t in rows if t[var] > 0)
            nneg = sum(1 for t in rows if t[var] < 0)
            cost = npos * nneg - npos - nneg
            if best_cost is None or cost < best_cost:
                best, best_cost = var, cost
        var = best
        remaining.remove(var)
        remaining_mask &= ~(1 << var)
        eliminated += 1
        pos, neg = [], []
        new: Dict[Tuple[int, ...], Tuple[FrozenSet[int], int]] = {}
        for t, data in rows.items():
            a = t[var]
            if a > 0:
                pos.append((t, data))
            elif a < 0:
                neg.append((t, data))
            else:
                new[t] = data
        for tp, (hp, sp) in pos:
            ap = tp[var]
            for tn, (hn, sn) in neg:
                h = hp | hn
                if len(h) <= eliminated + 1:
                    pass
                elif len(h) > eliminated + 1 + r:
                    continue
                an = -tn[var]
                comb = _primitive_row([an * x + ap * y for x, y in zip(tp, tn)])
                if not any(comb[:-1]):
                    if comb[-1] < 0:
                        return False
                    continue
                supp = sp | sn
                if len(h) > eliminated + 1:
                    implicit = bin(supp & remaining_mask & ~_support(comb, r)).count("1")
                    if len(h) > eliminated + 1 + implicit:
                        continue
                prev = new.get(comb)
                if prev is None or len(h) < len(prev[0]):
                    new[comb] = (h, supp)
        rows = new
    return True


def clan_bounded(ap: Apartment, mask: Sequence[bool]) -> bool:
    r = ap.r
    rows = []
    for a, neg in zip(ap.nu_roots, mask):
        s = -1 if neg else 1
        rows.append([Fraction(s * c) for c in a.linear])
    return _recession_cone_trivial(rows, r)


def clan_decomposition(ap: Apartment, alcoves: Sequence[Alcove]) -> List[Clan]:
    groups: Dict[Tuple[bool, ...], List[Alcove]] = {}
    for a in alcoves:
        groups.setdefault(ap.negative_mask(a), []).append(a)
    clans = []
    for mask, members in groups.items():
        factors = [r.linear for r, neg in zip(ap.nu_roots, mask) if neg]
        signs = tuple("-" if neg else "+" for neg in mask)
        hit = ap._bounded_cache.get(mask)
        if hit is None:
            hit = ap._bounded_cache[mask] = clan_bounded(ap, mask)
        clans.append(Clan(signs, members, factors, hit))
    clans.sort(key=lambda c: (c.sep_count, c.sign_vector))
    return clans


def enumerate_contributing_alcoves(datum: RootDatum, slope: SlopeSpec, cap: int = DEFAULT_ALCOVE_CAP,
                                   which: Optional[str] = None) -> List[Alcove]:
    if not slope.elliptic:
        raise InvalidSpec(f"slope {slope.label} is not elliptic")
    return Apartment(datum, slope).enumerate(cap=cap, which=which)


def lambda_factors(alcove: Alcove, nu_roots: Sequence[AffineRoot]) -> List[Vec]:
    b = alcove.barycenter
    return [a.linear for a in nu_roots if a.value(b) < 0]


# ---------------------------------------------------------------------------
# parahoric double cosets

@dataclass
class ParahoricCoset:
    representative: Alcove
    members: List[Alcove]
    lambda_factors: List[Vec]
    levi_roots: List[Vec]         # wall-group roots vanishing on the face


def parahoric_cosets(ap: Apartment, alcoves: Sequence[Alcove], S: Sequence[int]) -> List[ParahoricCoset]:
    """Group alcoves into double cosets W_nu \\ W / W_P for the face type S.

    A double coset is the wall-group orbit of a face of type S, and is
    recorded by the dominant representative of the face's vertex sum.
    """
    S = sorted(set(S))
    if any(i < 0 or i > ap.r for i in S) or len(S) > ap.r:
        raise InvalidSpec("parahoric must be a proper subset of the affine simple reflections")
    weight = ap.r + 1 - len(S)
    groups: Dict[bytes, List[Alcove]] = {}
    for a in alcoves:
        verts = ap.face_vertices(a, S)
        key = ap.dominant_point(verts.sum(axis=0), weight=weight).tobytes()
        groups.setdefault(key, []).append(a)
    out = []
    for members in groups.values():
        rep = min(members, key=lambda a: (a.sep_count, tuple(int(x) for x in a.barycenter_scaled)))
        verts = ap.face_vertices(rep, S)
        nu_face = np.all(ap.nu_values(verts) == 0, axis=0) if len(ap.nu_lin) else np.zeros(0, bool)
        mask = ap.negative_mask(rep)
        factors = [r.linear for r, neg, onface in zip(ap.nu_roots, mask, nu_face) if neg and not onface]
        levi = []
        if len(ap.wall_lin):
            wvals = ap.wall_values(verts)
            for a, on in zip(ap.walls.positive, np.all(wvals == 0, axis=0)):
                if on:
                    levi.append(a.linear)
        out.append(ParahoricCoset(rep, members, factors, levi))
    out.sort(key=lambda c: (len(c.lambda_factors), tuple(int(x) for x in c.representative.barycenter_scaled)))
    return out
