"""Absolute and relative root data for simple types with a pinned twist.

The absolute system is built from its Gram matrix in the simple-root basis.
For a twist of order e > 1 the relative system is obtained by folding: a
root restricts to the sum of its simple-root coefficients over each diagram
orbit, and the multiplicity of a relative root counts its preimages.  Degrees
are read from the height statistics of the positive roots.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

from . import exactla

Vec = Tuple[int, ...]


class InvalidSpec(ValueError):
    """Raised for group or slope input that violates a construction rule."""


# ---------------------------------------------------------------------------
# Gram matrices (simple-root basis).  Long roots have squared length 2,
# except C_n whose long root has squared length 4 and G2, numbered with
# alpha_1 long and alpha_2 short, with squared lengths 6 and 2.

def _chain(n: int) -> List[List[Fraction]]:
    g = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        g[i][i] = Fraction(2)
        if i + 1 < n:
            g[i][i + 1] = g[i + 1][i] = Fraction(-1)
    return g


def gram_matrix(family: str, rank: int) -> List[List[Fraction]]:
    n = rank
    if family == "A":
        return _chain(n)
    if family == "B":
        g = _chain(n)
        if n >= 2:
            g[n - 1][n - 1] = Fraction(1)
        else:
            g[0][0] = Fraction(1)
        return g
    if family == "C":
        g = _chain(n)
        if n >= 2:
            g[n - 1][n - 1] = Fraction(4)
            g[n - 2][n - 1] = g[n - 1][n - 2] = Fraction(-2)
        return g
    if family == "D":
        g = _chain(n)
        g[n - 2][n - 1] = g[n - 1][n - 2] = Fraction(0)
        g[n - 3][n - 1] = g[n - 1][n - 3] = Fraction(-1)
        return g
    if family == "E":
        g = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            g[i][i] = Fraction(2)
        # Bourbaki: 1-3-4-5-6-7-8 with 2 attached to 4
        edges = [(0, 2), (2, 3), (3, 4), (1, 3)] + [(k, k + 1) for k in range(4, n - 1)]
        for a, b in edges:
            g[a][b] = g[b][a] = Fraction(-1)
        return g
    if family == "F":
        return [
            [Fraction(2), Fraction(-1), Fraction(0), Fraction(0)],
            [Fraction(-1), Fraction(2), Fraction(-1), Fraction(0)],
            [Fraction(0), Fraction(-1), Fraction(1), Fraction(-1, 2)],
            [Fraction(0), Fraction(0), Fraction(-1, 2), Fraction(1)],
        ]
    if family == "G":
        return [[Fraction(6), Fraction(-3)], [Fraction(-3), Fraction(2)]]
    raise InvalidSpec(f"unknown family {family!r}")


def validate_family_rank(family: str, rank: int) -> None:
    ok = {
        "A": rank >= 1,
        "B": rank >= 2,
        "C": rank >= 2,
        "D": rank >= 4,
        "E": rank in (6, 7, 8),
        "F": rank == 4,
        "G": rank == 2,
    }
    if family not in ok:
        raise InvalidSpec(f"unknown family {family!r}; expected one of A-G")
    if not ok[family]:
        raise InvalidSpec(f"rank {rank} is not valid for family {family}")


def diagram_orbits(family: str, rank: int, e: int) -> List[Tuple[int, ...]]:
    """Orbits of the pinned diagram automorphism, ordered so that the folded
    simple roots follow the standard numbering of the relative type."""
    n = rank
    if e == 1:
        return [(i,) for i in range(n)]
    if family == "A":
        k = n // 2
        orbs = [(i, n - 1 - i) for i in range(k)]
        if n % 2 == 1:
            orbs.append((k,))
        return orbs
    if family == "D" and e == 2:
        return [(i,) for i in range(n - 2)] + [(n - 2, n - 1)]
    if family == "D" and e == 3:
        return [(1,), (0, 2, 3)]
    if family == "E" and e == 2:
        return [(1,), (3,), (2, 4), (0, 5)]
    raise InvalidSpec(f"no twist of order {e} for {family}{n}")


# ---------------------------------------------------------------------------
# root generation

def positive_roots(gram: Sequence[Sequence[Fraction]]) -> List[Vec]:
    """Positive roots of a reduced crystallographic system, by height."""
    n = len(gram)
    simple = [tuple(int(i == j) for j in range(n)) for i in range(n)]
    roots = set(simple)
    layer = list(simple)
    ordered = list(simple)

    def pair(v: Vec, i: int) -> Fraction:
        # <v, alpha_i^vee>
        s = sum(Fraction(v[k]) * gram[k][i] for k in range(n))
        return 2 * s / gram[i][i]

    while layer:
        nxt = []
        for v in layer:
            for i in range(n):
                # alpha_i-string through v: p - q = <v, alpha_i^vee>
                p = 0
                w = list(v)
                while True:
                    w[i] -= 1
                    if tuple(w) in roots:
                        p += 1
                    else:
                        break
                q = p - pair(v, i)
                if q > 0:
                    u = list(v)
                    u[i] += 1
                    u = tuple(u)
                    if u not in roots:
                        roots.add(u)
                        nxt.append(u)
        nxt.sort(key=lambda x: (sum(x), [-c for c in x]))
        ordered.extend(nxt)
        layer = nxt
    return ordered


def exponents_from_heights(heights: Sequence[int]) -> List[int]:
    """Dual partition of the height-count sequence of the positive roots."""
    if not heights:
        return []
    top = max(heights)
    counts = [sum(1 for h in heights if h == k) for k in range(1, top + 1)]
    exps: List[int] = []
    for k, c in enumerate(counts, start=1):
        nxt = counts[k] if k < len(counts) else 0
        exps.extend([k] * (c - nxt))
    return sorted(exps)


def weyl_group_order(family: str, rank: int) -> int:
    """Reference order of the Weyl group (used only for self-checks)."""
    from math import factorial

    n = rank
    return {
        "A": lambda: factorial(n + 1),
        "B": lambda: 2 ** n * factorial(n),
        "C": lambda: 2 ** n * factorial(n),
        "D": lambda: 2 ** (n - 1) * factorial(n),
        "E": lambda: {6: 51840, 7: 2903040, 8: 696729600}[n],
        "F": lambda: 1152,
        "G": lambda: 12,
    }[family]()


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupSpec:
    family: str
    rank_abs: int
    e: int = 1

    def validate(self) -> None:
        validate_family_rank(self.family, self.rank_abs)
        if self.e not in (1, 2, 3):
            raise InvalidSpec(f"twist order must be 1, 2 or 3, got {self.e}")
        if self.e == 2 and not (
            (self.family == "A" and self.rank_abs >= 2)
            or self.family == "D"
            or (self.family == "E" and self.rank_abs == 6)
        ):
            raise InvalidSpec("e = 2 requires A (rank >= 2), D or E6")
        if self.e == 3 and not (self.family == "D" and self.rank_abs == 4):
            raise InvalidSpec("e = 3 requires D4")

    @property
    def label(self) -> str:
        base = f"{self.family}{self.rank_abs}"
        return base if self.e == 1 else f"{self.e}{base}"

    @classmethod
    def parse(cls, text: str) -> "GroupSpec":
        """Parse labels such as ``G2``, ``2A4``, ``3D4``."""
        t = text.strip().replace("^", "")
        e = 1
        if t and t[0] in "23" and len(t) > 2 and t[1].isalpha():
            e = int(t[0])
            t = t[1:]
        fam, rk = t[0].upper(), t[1:]
        if not rk.isdigit():
            raise InvalidSpec(f"cannot parse type {text!r}")
        spec = cls(fam, int(rk), e)
        spec.validate()
        return spec


@dataclass(frozen=True)
class RootDatum:
    spec: GroupSpec
    relative_rank: int
    abs_gram: Tuple[Tuple[Fraction, ...], ...]
    abs_positive_roots: Tuple[Vec, ...]
    gram: Tuple[Tuple[Fraction, ...], ...]           # relative simple roots
    positive_roots: Tuple[Vec, ...]                   # relative, may be non-reduced
    multiplicity: Dict[Vec, int]
    degrees: Tuple[int, ...]
    twist_exponents: Tuple[int, ...]
    marks: Tuple[int, ...]                            # a_0..a_r
    dual_marks: Tuple[Fraction, ...]                  # a_0^vee..a_r^vee
    beta: Vec                                         # alpha_0 = delta/e - beta
    rho_vee: Tuple[Fraction, ...]                     # coroot coordinates
    relative_type: str
    eps_assignment: str = ""

    # -- basic quantities ---------------------------------------------------
    @property
    def e(self) -> int:
        return self.spec.e

    @property
    def rank_abs(self) -> int:
        return self.spec.rank_abs

    @property
    def r(self) -> int:
        return self.relative_rank

    @property
    def abs_root_count(self) -> int:
        return 2 * len(self.abs_positive_roots)

    @property
    def h_theta(self) -> int:
        return self.e * sum(self.marks)

    @property
    def h_vee_theta(self) -> Fraction:
        return sum(self.dual_marks, Fraction(0))

    @property
    def is_2A_even(self) -> bool:
        return self.e == 2 and self.spec.family == "A" and self.rank_abs % 2 == 0

    @property
    def roots(self) -> List[Vec]:
        return list(self.positive_roots) + [tuple(-c for c in v) for v in self.positive_roots]

    def inner(self, u: Sequence, v: Sequence) -> Fraction:
        g = self.gram
        n = self.r
        return sum(Fraction(u[i]) * g[i][j] * Fraction(v[j]) for i in range(n) for j in range(n) if u[i] and v[j])

    def norm2(self, v: Sequence) -> Fraction:
        return self.inner(v, v)

    def coroot_pairing(self, u: Sequence, v: Sequence) -> Fraction:
        """<u, v^vee> = 2 (u, v) / (v, v)."""
        return 2 * self.inner(u, v) / self.norm2(v)

    @property
    def max_norm(self) -> Fraction:
        return max(self.norm2(v) for v in self.positive_roots)

    def is_longest(self, v: Sequence) -> bool:
        return self.norm2(v) == self.max_norm

    def height(self, v: Sequence) -> int:
        return sum(v)

    def offset_lattice(self, v: Sequence) -> Tuple[Fraction, Fraction]:
        """(step, shift): admissible offsets n of the affine roots v + n delta
        are exactly shift + step * Z."""
        e = self.e
        if e == 1:
            return Fraction(1), Fraction(0)
        if self.is_longest(v):
            if self.is_2A_even:
                return Fraction(1), Fraction(1, 2)
            return Fraction(1), Fraction(0)
        return Fraction(1, e), Fraction(0)

    def is_admissible(self, v: Sequence, n: Fraction) -> bool:
        step, shift = self.offset_lattice(v)
        q = (Fraction(n) - shift) / step
        return q.denominator == 1

    def alpha0(self) -> Tuple[Vec, Fraction]:
        """Linear part and offset of the affine simple root alpha_0."""
        return tuple(-c for c in self.beta), Fraction(1, self.e)

    def affine_simple_roots(self) -> List[Tuple[Vec, Fraction]]:
        out = [self.alpha0()]
        for i in range(self.r):
            out.append((tuple(int(i == j) for j in range(self.r)), Fraction(0)))
        return out

    def to_json(self) -> dict:
        return {
            "type": self.spec.label,
            "family": self.spec.family,
            "rank_abs": self.rank_abs,
            "e": self.e,
            "relative_rank": self.r,
            "relative_type": self.relative_type,
            "abs_root_count": self.abs_root_count,
            "relative_root_count": 2 * len(self.positive_roots),
            "degrees": list(self.degrees),
            "twist_exponents": list(self.twist_exponents),
            "twist_exponent_assignment": self.eps_assignment,
            "marks": list(self.marks),
            "dual_marks": [str(x) for x in self.dual_marks],
            "h_theta": self.h_theta,
            "h_vee_theta": str(self.h_vee_theta),
            "beta": list(self.beta),
            "rho_vee": [str(x) for x in self.rho_vee],
            "positive_relative_roots": [
                {"root": list(v), "multiplicity": self.multiplicity[v], "height": sum(v)}
                for v in self.positive_roots
            ],
        }


def _twist_exponents(spec: GroupSpec, degrees: Sequence[int]) -> Tuple[Tuple[int, ...], str]:
    e = spec.e
    n = spec.rank_abs
    if e == 1:
        return tuple(0 for _ in degrees), "trivial (split)"
    if spec.family in ("A", "E"):
        # the twist acts as -w_0, i.e. by (-1)^d on degree-d invariants
        return tuple(d % 2 for d in degrees), "eps_i = d_i mod 2 (twist acts by (-1)^d)"
    if spec.family == "D" and e == 2:
        out = [0] * len(degrees)
        idx = max(i for i, d in enumerate(degrees) if d == n)
        out[idx] = 1
        return tuple(out), "eps = 1 on the Pfaffian (degree n), 0 elsewhere"
    if spec.family == "D" and e == 3:
        out = []
        seen4 = 0
        for d in degrees:
            if d == 4:
                seen4 += 1
                out.append(seen4)
            else:
                out.append(0)
        return tuple(out), "degree-4 pair carries the two nontrivial characters (1, 2)"
    raise InvalidSpec("no twist exponents for this spec")


def _relative_type(spec: GroupSpec) -> str:
    f, n, e = spec.family, spec.rank_abs, spec.e
    if e == 1:
        return f"{f}{n}"
    if f == "A":
        k = (n + 1) // 2
        return f"BC{k}" if n % 2 == 0 else f"C{k}"
    if f == "D" and e == 2:
        return f"B{n - 1}"
    if f == "D" and e == 3:
        return "G2"
    return "F4"


@lru_cache(maxsize=None)
def build_root_datum(spec: GroupSpec) -> RootDatum:
    spec.validate()
    fam, n, e = spec.family, spec.rank_abs, spec.e
    agram = gram_matrix(fam, n)
    apos = positive_roots(agram)
    exps = exponents_from_heights([sum(v) for v in apos])
    degrees = tuple(x + 1 for x in exps)
    if len(degrees) != n:
        raise AssertionError("height partition gave wrong number of exponents")

    orbits = diagram_orbits(fam, n, e)
    r = len(orbits)
    # relative Gram: inner products of orbit averages
    rgram = [[Fraction(0)] * r for _ in range(r)]
    for i, oi in enumerate(orbits):
        for j, oj in enumerate(orbits):
            s = sum(agram[a][b] for a in oi for b in oj)
            rgram[i][j] = s / (len(oi) * len(oj))

    mult: Dict[Vec, int] = {}
    for v in apos:
        w = tuple(sum(v[a] for a in orb) for orb in orbits)
        mult[w] = mult.get(w, 0) + 1
    rpos = sorted(mult, key=lambda x: (sum(x), [-c for c in x]))

    def rinner(u, v):
        return sum(Fraction(u[i]) * rgram[i][j] * Fraction(v[j]) for i in range(r) for j in range(r))

    is2a = e == 2 and fam == "A" and n % 2 == 0
    if e == 1 or is2a:
        beta = max(rpos, key=lambda x: (sum(x), x))
    else:
        minnorm = min(rinner(v, v) for v in rpos)
        shorts = [v for v in rpos if rinner(v, v) == minnorm]
        beta = max(shorts, key=lambda x: (sum(x), x))
    marks = (1,) + tuple(beta)

    # dual marks: beta^vee = sum a_i^vee alpha_i^vee, a_0^vee = 1
    bn = rinner(beta, beta)
    dual = [Fraction(1)] + [Fraction(beta[i]) * rgram[i][i] / bn for i in range(r)]
    if is2a:
        dual = [2 * x for x in dual]

    # rho^vee: <alpha_i, rho^vee> = 1 for all relative simple roots, written in
    # simple coroots: sum_j c_j <alpha_i, alpha_j^vee> = 1
    cart = [[2 * rgram[i][j] / rgram[j][j] for j in range(r)] for i in range(r)]
    sol = exactla.solve(cart, [1] * r)
    rho = tuple(Fraction(int(x.numerator), int(x.denominator)) for x in sol)

    eps, eps_desc = _twist_exponents(spec, degrees)
    datum = RootDatum(
        spec=spec,
        relative_rank=r,
        abs_gram=tuple(tuple(row) for row in agram),
        abs_positive_roots=tuple(apos),
        gram=tuple(tuple(row) for row in rgram),
        positive_roots=tuple(rpos),
        multiplicity=mult,
        degrees=degrees,
        twist_exponents=eps,
        marks=marks,
        dual_marks=tuple(dual),
        beta=tuple(beta),
        rho_vee=rho,
        relative_type=_relative_type(spec),
        eps_assignment=eps_desc,
    )
    _check_datum(datum)
    return datum


def twist_exponents_check(datum: RootDatum) -> bool:
    lhs = Fraction(sum(datum.twist_exponents), datum.e)
    rhs = Fraction(datum.rank_abs - datum.r, 2)
    return lhs == rhs


def _check_datum(d: RootDatum) -> None:
    from math import prod

    problems = []
    if d.abs_root_count != d.h_theta * d.r:
        problems.append("abs_root_count != h_theta * r")
    if not twist_exponents_check(d):
        problems.append("twist exponent identity fails")
    if prod(d.degrees) != weyl_group_order(d.spec.family, d.rank_abs):
        problems.append("product of degrees != |W|")
    if d.e == 1 and any(c != 1 for c in d.multiplicity.values()):
        problems.append("split datum has nontrivial multiplicities")
    if problems:
        raise AssertionError(f"{d.spec.label}: " + "; ".join(problems))


def relative_reflection_closed(datum: RootDatum) -> bool:
    """The relative root set is stable under the simple reflections."""
    roots = set(datum.roots)
    for i in range(datum.r):
        ai = tuple(int(i == j) for j in range(datum.r))
        for v in roots:
            c = datum.coroot_pairing(v, ai)
            if c.denominator != 1:
                return False
            w = tuple(v[j] - int(c) * ai[j] for j in range(datum.r))
            if w not in roots:
                return False
    return True
