"""Coinvariant algebras of finite reflection groups over Q.

The quotient ``H_W = Sym(V*) / (positive-degree invariants)`` is built one
degree at a time.  The ideal slice ``I_d`` is spanned by ``y_i * I_{d-1}``
together with the degree-d invariants; invariants are found as common fixed
vectors of the generators, never by summing over the group.  Monomials are
ordered graded-reverse-lexicographically and the normal-form basis of
``H_d`` consists of the non-pivot monomials.

A reducible group is handled as a tensor product of its irreducible
factors (:class:`ProductQuotient`); disjoint variable sets make the normal
form of a product the product of the normal forms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product as iproduct
from math import comb, prod
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from gmpy2 import mpq

from . import exactla
from .exactla import Echelon
from .rootdata import exponents_from_heights, positive_roots

Exp = Tuple[int, ...]
DEFAULT_BUDGET = 100_000


class Infeasible(RuntimeError):
    """A computation would exceed the configured monomial or alcove budget."""


class ClassificationError(RuntimeError):
    """A Cartan matrix failed to match any crystallographic type."""


# ---------------------------------------------------------------------------
# polynomials

class PolyQ:
    """Sparse polynomial: exponent tuple -> rational coefficient."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Optional[Dict[Exp, mpq]] = None):
        self.nvars = nvars
        self.terms: Dict[Exp, mpq] = {}
        if terms:
            for k, v in terms.items():
                if v:
                    self.terms[tuple(k)] = mpq(v)

    @classmethod
    def constant(cls, nvars: int, c=1) -> "PolyQ":
        return cls(nvars, {(0,) * nvars: mpq(c)})

    @classmethod
    def linear(cls, coeffs: Sequence) -> "PolyQ":
        n = len(coeffs)
        return cls(n, {tuple(int(i == j) for j in range(n)): mpq(c) for i, c in enumerate(coeffs) if c})

    @classmethod
    def product_of_linear(cls, factors: Sequence[Sequence], nvars: int) -> "PolyQ":
        out = cls.constant(nvars)
        for f in factors:
            out = out * cls.linear(f)
        return out

    def __mul__(self, other) -> "PolyQ":
        if not isinstance(other, PolyQ):
            c = mpq(other)
            return PolyQ(self.nvars, {k: v * c for k, v in self.terms.items()})
        acc: Dict[Exp, mpq] = {}
        for a, u in self.terms.items():
            for b, v in other.terms.items():
                k = tuple(x + y for x, y in zip(a, b))
                acc[k] = acc.get(k, 0) + u * v
        return PolyQ(self.nvars, acc)

    __rmul__ = __mul__

    def __add__(self, other: "PolyQ") -> "PolyQ":
        acc = dict(self.terms)
        for k, v in other.terms.items():
            acc[k] = acc.get(k, 0) + v
        return PolyQ(self.nvars, acc)

    def __sub__(self, other: "PolyQ") -> "PolyQ":
        return self + other * -1

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyQ) and self.terms == other.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=-1)

    def is_homogeneous(self) -> bool:
        return len({sum(k) for k in self.terms}) <= 1

    def substitute(self, images: Sequence["PolyQ"]) -> "PolyQ":
        out = PolyQ(self.nvars)
        for k, c in self.terms.items():
            t = PolyQ.constant(images[0].nvars if images else self.nvars, c)
            for j, a in enumerate(k):
                for _ in range(a):
                    t = t * images[j]
            out = out + t
        return out

    def __repr__(self) -> str:
        return f"PolyQ({len(self.terms)} terms, deg {self.degree()})"


def grevlex_key(a: Exp):
    return (sum(a), tuple(-x for x in reversed(a)))


@lru_cache(maxsize=None)
def monomials(nvars: int, degree: int) -> Tuple[Exp, ...]:
    """All exponent vectors of the given degree, largest (grevlex) first."""
    out: List[Exp] = []

    def rec(prefix, left, slots):
        if slots == 1:
            out.append(prefix + (left,))
            return
        for x in range(left, -1, -1):
            rec(prefix + (x,), left - x, slots - 1)

    if nvars == 0:
        return ((),) if degree == 0 else ()
    rec((), degree, nvars)
    out.sort(key=grevlex_key, reverse=True)
    return tuple(out)


def sym_dim(nvars: int, degree: int) -> int:
    if nvars == 0:
        return int(degree == 0)
    return comb(degree + nvars - 1, nvars - 1)


# ---------------------------------------------------------------------------
# reflection groups

def classify_cartan(cartan: Sequence[Sequence[int]]) -> str:
    """Name of a connected crystallographic Cartan matrix."""
    n = len(cartan)
    prods = {}
    for i in range(n):
        if cartan[i][i] != 2:
            raise ClassificationError("diagonal entry is not 2")
        for j in range(i + 1, n):
            a, b = cartan[i][j], cartan[j][i]
            if (a == 0) != (b == 0) or a > 0 or b > 0:
                raise ClassificationError("not a Cartan matrix")
            if a * b:
                if a * b not in (1, 2, 3):
                    raise ClassificationError(f"bond product {a * b} is not crystallographic")
                prods[(i, j)] = a * b
    if len(prods) != n - 1:
        raise ClassificationError("diagram is not a tree")
    deg = [0] * n
    for i, j in prods:
        deg[i] += 1
        deg[j] += 1
    if n == 1:
        return "A1"
    if 3 in prods.values():
        if n != 2:
            raise ClassificationError("triple bond outside rank 2")
        return "G2"
    doubles = [k for k, v in prods.items() if v == 2]
    if len(doubles) > 1 or max(deg) > 3 or (doubles and max(deg) > 2):
        raise ClassificationError("not a finite type diagram")
    if doubles:
        i, j = doubles[0]
        if n == 2:
            return "B2"
        ends = [k for k in range(n) if deg[k] == 1]
        if i in ends or j in ends:
            end = i if i in ends else j
            other = j if end == i else i
            # short root at the end -> B_n, long root at the end -> C_n
            # <alpha_end, alpha_other^vee> = -2 means alpha_end is the long one
            if cartan[end][other] == -2:
                return f"C{n}"
            return f"B{n}"
        if n == 4:
            return "F4"
        raise ClassificationError("double bond in the middle of a long chain")
    branch = [k for k in range(n) if deg[k] == 3]
    if not branch:
        return f"A{n}"
    if len(branch) > 1:
        raise ClassificationError("more than one branch node")
    b = branch[0]
    adj = {k: [] for k in range(n)}
    for i, j in prods:
        adj[i].append(j)
        adj[j].append(i)
    arms = []
    for start in adj[b]:
        length, prev, cur = 1, b, start
        while len(adj[cur]) == 2:
            nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
            prev, cur = cur, nxt
            length += 1
        arms.append(length)
    arms.sort()
    if arms[0] == 1 and arms[1] == 1:
        return f"D{n}"
    if arms[:2] == [1, 2] and arms[2] in (2, 3, 4):
        return f"E{n}"
    raise ClassificationError(f"branch arms {arms} are not of finite type")


@dataclass
class WallGroup:
    """A finite reflection group given by a simple system.

    ``simple_roots`` are coefficient vectors in an ambient basis of V*
    (for the wall group: the relative simple roots) and ``ambient_gram``
    holds the invariant form on that basis.  ``generators`` are the simple
    reflections acting on V* in the ambient basis; ``essential_gens`` are
    the same reflections as substitutions on the variables y_j = beta_j.
    """

    simple_roots: List[Tuple[int, ...]]
    ambient_gram: List[List[Fraction]]
    cartan: List[List[int]] = field(init=False)
    gram: List[List[Fraction]] = field(init=False)
    components: List[Dict] = field(init=False)
    positive_roots_y: List[Tuple[int, ...]] = field(init=False)

    def __post_init__(self):
        s = len(self.simple_roots)
        g = self.ambient_gram

        def inner(u, v):
            return sum(Fraction(u[i]) * g[i][j] * Fraction(v[j]) for i in range(len(u)) for j in range(len(v)) if u[i] and v[j])

        self.gram = [[inner(a, b) for b in self.simple_roots] for a in self.simple_roots]
        cart = []
        for j in range(s):
            row = []
            for k in range(s):
                c = 2 * self.gram[j][k] / self.gram[k][k]
                if c.denominator != 1:
                    raise ClassificationError("non-integral Cartan entry")
                row.append(int(c))
            cart.append(row)
        self.cartan = cart  # cartan[j][k] = <beta_j, beta_k^vee>
        # connected components
        seen = set()
        comps = []
        for start in range(s):
            if start in seen:
                continue
            stack, comp = [start], []
            seen.add(start)
            while stack:
                x = stack.pop()
                comp.append(x)
                for y in range(s):
                    if y not in seen and cart[x][y] != 0:
                        seen.add(y)
                        stack.append(y)
            comps.append(sorted(comp))
        comps.sort(key=lambda c: c[0])
        self.components = []
        self.positive_roots_y = []
        for comp in comps:
            sub_cart = [[cart[a][b] for b in comp] for a in comp]
            name = classify_cartan(sub_cart)
            sub_gram = [[self.gram[a][b] for b in comp] for a in comp]
            pos = positive_roots(sub_gram)
            exps = exponents_from_heights([sum(v) for v in pos])
            degs = [x + 1 for x in exps]
            self.components.append({"type": name, "indices": comp, "degrees": degs, "n_pos": len(pos)})
            for v in pos:
                full = [0] * s
                for loc, c in zip(comp, v):
                    full[loc] = c
                self.positive_roots_y.append(tuple(full))

    # -- summary data ----------------------------------------------------
    @property
    def rank(self) -> int:
        return len(self.simple_roots)

    @property
    def type_decomposition(self) -> List[str]:
        return [c["type"] for c in self.components]

    @property
    def type_name(self) -> str:
        if not self.components:
            return "trivial"
        names = sorted(self.type_decomposition, key=lambda t: (t[0], int(t[1:])))
        out = []
        for t in dict.fromkeys(names):
            k = names.count(t)
            out.append(t if k == 1 else f"{t}^{k}")
        return "x".join(out)

    @property
    def degrees(self) -> List[int]:
        return sorted(d for c in self.components for d in c["degrees"])

    @property
    def order(self) -> int:
        return prod(self.degrees) if self.components else 1

    @property
    def reflection_count(self) -> int:
        return sum(d - 1 for d in self.degrees)

    N = reflection_count

    # -- actions -----------------------------------------------------------
    @property
    def generators(self) -> List[exactla.QMatrix]:
        """Simple reflections on V* in the ambient basis (columns = images)."""
        n = len(self.ambient_gram)
        out = []
        g = self.ambient_gram
        for b in self.simple_roots:
            bb = sum(Fraction(b[i]) * g[i][j] * Fraction(b[j]) for i in range(n) for j in range(n))
            M = exactla.QMatrix.identity(n)
            for col in range(n):
                # image of basis form e_col: e_col - <e_col, b^vee> b
                pair = 2 * sum(g[col][j] * Fraction(b[j]) for j in range(n)) / bb
                for row in range(n):
                    if b[row] and pair:
                        M[row, col] = M[row, col] - mpq(pair.numerator, pair.denominator) * b[row]
            out.append(M)
        return out

    def essential_gens(self, indices: Optional[Sequence[int]] = None) -> List[List[List[int]]]:
        """Substitution matrices on y-variables: row j is the image of y_j."""
        idx = list(range(self.rank)) if indices is None else list(indices)
        out = []
        for k in idx:
            R = []
            for j in idx:
                row = [0] * len(idx)
                row[idx.index(j)] += 1
                row[idx.index(k)] -= self.cartan[j][k]
                R.append(row)
            out.append(R)
        return out

    def project(self, form: Sequence) -> Tuple[mpq, ...]:
        """Coordinates in y of the class of a linear form modulo invariant forms."""
        s = self.rank
        if s == 0:
            return ()
        n = len(self.ambient_gram)
        g = self.ambient_gram
        u = []
        for k, b in enumerate(self.simple_roots):
            val = sum(Fraction(form[i]) * g[i][j] * Fraction(b[j]) for i in range(n) for j in range(n))
            u.append(2 * val / self.gram[k][k])
        At = [[self.cartan[j][k] for j in range(s)] for k in range(s)]
        return tuple(exactla.solve(At, [mpq(x.numerator, x.denominator) for x in u]))

    def describe(self) -> Dict:
        return {
            "type": self.type_name,
            "components": [c["type"] for c in self.components],
            "degrees": self.degrees,
            "order": self.order,
            "reflection_count": self.reflection_count,
            "rank": self.rank,
        }


# ---------------------------------------------------------------------------
# graded quotient for one group in its own variables

class GradedQuotient:
    """Per-degree echelonized ideal slices and normal-form bases.

    ``gens`` are substitution matrices (row j = image of y_j).  ``mode``
    selects how new invariants are found: ``"quotient"`` takes fixed vectors
    of the induced action on ``Sym^d / (y * I_{d-1})`` (exact in
    characteristic zero because averaging commutes with the projection);
    ``"full"`` takes fixed vectors on all of ``Sym^d``.
    """

    def __init__(self, nvars: int, gens: Sequence[Sequence[Sequence[int]]], max_degree: int,
                 budget: int = DEFAULT_BUDGET, mode: str = "quotient"):
        self.nvars = nvars
        self.gens = [[list(r) for r in g] for g in gens]
        self.max_degree = max_degree
        self.mode = mode
        need = max(sym_dim(nvars, d) for d in range(max_degree + 1))
        if need > budget:
            raise Infeasible(f"Sym^{max_degree} in {nvars} variables has {need} monomials (> budget {budget})")
        self._mons: List[Tuple[Exp, ...]] = []
        self._index: List[Dict[Exp, int]] = []
        self._ideal: List[Optional[Echelon]] = []
        self._full: List[bool] = []
        self.std: List[List[Exp]] = []
        self.std_index: List[Dict[Exp, int]] = []
        self._mult_cache: Dict[Tuple[int, int], List[Dict[int, mpq]]] = {}
        self._lin = [[PolyQ.linear(row) for row in g] for g in self.gens]
        self._build()

    # -- construction ------------------------------------------------------
    def _subst(self, gi: int, mono: Exp) -> Dict[Exp, mpq]:
        poly = PolyQ.constant(self.nvars)
        for j, a in enumerate(mono):
            for _ in range(a):
                poly = poly * self._lin[gi][j]
        return poly.terms

    def _build(self):
        n = self.nvars
        for d in range(self.max_degree + 1):
            mons = monomials(n, d)
            index = {m: i for i, m in enumerate(mons)}
            self._mons.append(mons)
            self._index.append(index)
            if d == 0:
                self._ideal.append(Echelon())
                self._full.append(False)
                self.std.append([mons[0]])
                self.std_index.append({mons[0]: 0})
                continue
            if self._full[d - 1]:
                self._ideal.append(None)
                self._full.append(True)
                self.std.append([])
                self.std_index.append({})
                continue
            E = Echelon()
            prev = self._ideal[d - 1]
            prev_mons = self._mons[d - 1]
            for row in prev.rows.values():
                for i in range(n):
                    shifted = {}
                    for col, v in row.items():
                        m = list(prev_mons[col])
                        m[i] += 1
                        shifted[index[tuple(m)]] = v
                    E.add(shifted)
            if self.mode == "full":
                vecs = self._fixed_full(d, mons, index)
            else:
                vecs = self._fixed_on_quotient(E, mons, index)
            for v in vecs:
                E.add(v)
            std = [mons[j] for j in range(len(mons)) if j not in E.rows]
            if not std:
                self._ideal.append(None)
                self._full.append(True)
            else:
                self._ideal.append(E)
                self._full.append(False)
            self.std.append(std)
            self.std_index.append({m: i for i, m in enumerate(std)})

    def _fixed_on_quotient(self, E: Echelon, mons, index) -> List[Dict[int, mpq]]:
        cand = [j for j in range(len(mons)) if j not in E.rows]
        if not cand:
            return []
        pos = {j: i for i, j in enumerate(cand)}
        k = len(cand)
        mats = []
        for gi in range(len(self.gens)):
            M = exactla.QMatrix(k, k)
            for col, j in enumerate(cand):
                img = {index[m]: c for m, c in self._subst(gi, mons[j]).items()}
                red = E.reduce(img)
                for jj, c in red.items():
                    M.rows[pos[jj]][col] = c
            mats.append(M)
        fixed = exactla.fixed_space(mats, k)
        return [{cand[i]: c for i, c in enumerate(v) if c} for v in fixed]

    def _fixed_full(self, d, mons, index) -> List[Dict[int, mpq]]:
        k = len(mons)
        mats = []
        for gi in range(len(self.gens)):
            M = exactla.QMatrix(k, k)
            for col, m in enumerate(mons):
                for mm, c in self._subst(gi, m).items():
                    M.rows[index[mm]][col] = c
            mats.append(M)
        fixed = exactla.fixed_space(mats, k)
        return [{i: c for i, c in enumerate(v) if c} for v in fixed]

    # -- queries -----------------------------------------------------------
    @property
    def hilbert(self) -> List[int]:
        h = [len(s) for s in self.std]
        while len(h) > 1 and h[-1] == 0:
            h.pop()
        return h

    @property
    def top_degree(self) -> int:
        return len(self.hilbert) - 1

    def dim(self, d: int) -> int:
        return len(self.std[d]) if 0 <= d < len(self.std) else 0

    def std_basis(self, d: int) -> List[Exp]:
        return self.std[d] if 0 <= d < len(self.std) else []

    def ideal_pivots(self, d: int) -> List[int]:
        if self._full[d]:
            return list(range(len(self._mons[d])))
        return self._ideal[d].pivots

    def normal_form_terms(self, terms: Dict[Exp, mpq]) -> Dict[int, mpq]:
        """Reduce a homogeneous polynomial; returns coordinates on ``std``."""
        if not terms:
            return {}
        d = sum(next(iter(terms)))
        if d > self.max_degree:
            if self.dim(self.max_degree) == 0:
                return {}
            raise ValueError(f"degree {d} exceeds the built range {self.max_degree}")
        if self._full[d]:
            return {}
        index = self._index[d]
        red = self._ideal[d].reduce({index[m]: c for m, c in terms.items()})
        sidx = self.std_index[d]
        mons = self._mons[d]
        return {sidx[mons[j]]: c for j, c in red.items()}

    def normal_form(self, poly: PolyQ) -> Dict[Exp, mpq]:
        d = poly.degree()
        nf = self.normal_form_terms(poly.terms)
        return {self.std[d][i]: c for i, c in nf.items()}

    def in_ideal(self, poly: PolyQ) -> bool:
        return not self.normal_form_terms(poly.terms)

    def mult_table(self, d: int, var: int) -> List[Dict[int, mpq]]:
        key = (d, var)
        tab = self._mult_cache.get(key)
        if tab is None:
            tab = []
            for m in self.std_basis(d):
                mm = list(m)
                mm[var] += 1
                if d + 1 > self.max_degree:
                    tab.append({})
                else:
                    tab.append(self.normal_form_terms({tuple(mm): mpq(1)}))
            self._mult_cache[key] = tab
        return tab

    def act(self, gen: Sequence[Sequence[int]], d: int) -> List[Dict[int, mpq]]:
        """Matrix (as columns) of a substitution acting on H_d."""
        lin = [PolyQ.linear(row) for row in gen]
        cols = []
        for m in self.std_basis(d):
            poly = PolyQ.constant(self.nvars)
            for j, a in enumerate(m):
                for _ in range(a):
                    poly = poly * lin[j]
            cols.append(self.normal_form_terms(poly.terms))
        return cols


# ---------------------------------------------------------------------------
# tensor product of component quotients

class ProductQuotient:
    """H of a product group, as the tensor product of component quotients.

    ``parts`` pairs each component quotient with the global indices of its
    variables.  Basis elements are tuples of component standard-basis
    positions; the degree-d basis lists all tuples of total degree d.
    """

    def __init__(self, nvars: int, parts: Sequence[Tuple[GradedQuotient, Sequence[int]]]):
        self.nvars = nvars
        self.parts = [(q, list(v)) for q, v in parts]
        self._owner = {}
        for c, (q, vs) in enumerate(self.parts):
            for loc, g in enumerate(vs):
                self._owner[g] = (c, loc)
        if len(self._owner) != nvars:
            raise ValueError("components must partition the variables")
        hs = [q.hilbert for q, _ in self.parts]
        top = sum(len(h) - 1 for h in hs)
        self._basis: List[List[Tuple[Tuple[int, int], ...]]] = [[] for _ in range(top + 1)]
        ranges = [[(d, i) for d, hd in enumerate(h) for i in range(hd)] for h in hs]
        for combo in iproduct(*ranges):
            deg = sum(d for d, _ in combo)
            self._basis[deg].append(tuple(combo))
        for lst in self._basis:
            lst.sort()
        self._bindex = [{b: i for i, b in enumerate(lst)} for lst in self._basis]
        self._mult_cache: Dict[Tuple[int, int], List[Dict[int, mpq]]] = {}

    @property
    def hilbert(self) -> List[int]:
        return [len(b) for b in self._basis]

    @property
    def top_degree(self) -> int:
        return len(self._basis) - 1

    def dim(self, d: int) -> int:
        return len(self._basis[d]) if 0 <= d < len(self._basis) else 0

    def std_basis(self, d: int) -> List[Exp]:
        out = []
        for b in self._basis[d] if 0 <= d < len(self._basis) else []:
            e = [0] * self.nvars
            for (q, vs), (dd, i) in zip(self.parts, b):
                for loc, g in enumerate(vs):
                    e[g] = q.std[dd][i][loc]
            out.append(tuple(e))
        return out

    def mult_table(self, d: int, var: int) -> List[Dict[int, mpq]]:
        key = (d, var)
        tab = self._mult_cache.get(key)
        if tab is not None:
            return tab
        c, loc = self._owner[var]
        q = self.parts[c][0]
        tab = []
        idx_next = self._bindex[d + 1] if d + 1 < len(self._bindex) else {}
        for b in self._basis[d] if d < len(self._basis) else []:
            dd, i = b[c]
            img = q.mult_table(dd, loc)[i] if dd + 1 <= q.top_degree else {}
            out = {}
            for j, coef in img.items():
                nb = list(b)
                nb[c] = (dd + 1, j)
                out[idx_next[tuple(nb)]] = coef
            tab.append(out)
        self._mult_cache[key] = tab
        return tab

    def normal_form_terms(self, terms: Dict[Exp, mpq]) -> Dict[int, mpq]:
        if not terms:
            return {}
        d = sum(next(iter(terms)))
        if d >= len(self._basis):
            return {}
        out: Dict[int, mpq] = {}
        idx = self._bindex[d]
        for mono, coef in terms.items():
            pieces = []
            for q, vs in self.parts:
                sub = tuple(mono[g] for g in vs)
                dd = sum(sub)
                nf = q.normal_form_terms({sub: mpq(1)}) if dd <= q.top_degree else {}
                if not nf:
                    pieces = None
                    break
                pieces.append([((dd, i), c) for i, c in nf.items()])
            if pieces is None:
                continue
            for combo in iproduct(*pieces):
                key = tuple(k for k, _ in combo)
                val = coef
                for _, c in combo:
                    val = val * c
                j = idx[key]
                x = out.get(j, 0) + val
                if x:
                    out[j] = x
                else:
                    out.pop(j, None)
        return out


def build_quotient(group: WallGroup, max_degree: Optional[int] = None, budget: int = DEFAULT_BUDGET,
                   mode: str = "quotient", split: bool = True):
    """Coinvariant algebra of ``group`` in the variables y_j = beta_j.

    With ``split`` the irreducible components are built separately and
    combined as a tensor product; otherwise one quotient is built in all
    variables.
    """
    s = group.rank
    top = group.reflection_count
    md = top + 1 if max_degree is None else max_degree
    if md < top:
        raise ValueError("max_degree must be at least the reflection count")
    if s == 0:
        return GradedQuotient(0, [], md, budget, mode)
    if not split or len(group.components) == 1:
        return GradedQuotient(s, group.essential_gens(), md, budget, mode)
    parts = []
    for comp in group.components:
        idx = comp["indices"]
        ctop = comp["n_pos"]
        q = GradedQuotient(len(idx), group.essential_gens(idx), ctop + 1, budget, mode)
        parts.append((q, idx))
    return ProductQuotient(s, parts)


# ---------------------------------------------------------------------------
# images of multiplication maps

def _apply_linear(Q, vecs: List[Dict[int, mpq]], d: int, form: Sequence) -> List[Dict[int, mpq]]:
    out = []
    tabs = [(c, Q.mult_table(d, j)) for j, c in enumerate(form) if c]
    for v in vecs:
        acc: Dict[int, mpq] = {}
        for c, tab in tabs:
            for i, x in v.items():
                for k, y in tab[i].items():
                    acc[k] = acc.get(k, 0) + c * x * y
        out.append({k: x for k, x in acc.items() if x})
    return out


def _span(vecs: Iterable[Dict[int, mpq]]) -> List[Dict[int, mpq]]:
    E = Echelon()
    for v in vecs:
        if v:
            E.add(v)
    return [E.rows[p] for p in E.pivots]


def _as_factors(lam, nvars: int):
    """Normalise λ input to (list of linear forms) or a PolyQ."""
    if isinstance(lam, PolyQ):
        return None, lam
    facs = [tuple(mpq(x) for x in f) for f in lam]
    for f in facs:
        if len(f) != nvars:
            raise ValueError("linear factor has wrong length")
    return facs, None


def image_hilbert(Q, lam, source: Optional[List[List[Dict[int, mpq]]]] = None) -> List[int]:
    """Ranks of multiplication by λ from H_d, listed by source degree d.

    ``lam`` is either a list of linear forms (their product) or a PolyQ.
    ``source`` optionally restricts each H_d to a subspace (given by
    spanning vectors).
    """
    nvars = Q.nvars
    facs, poly = _as_factors(lam, nvars)
    top = Q.top_degree
    k = len(facs) if facs is not None else (poly.degree() if poly else 0)
    if poly is not None and not poly:
        return [0] * (top + 1)
    if poly is not None and not poly.is_homogeneous():
        raise ValueError("λ must be homogeneous")
    ranks = []
    for d in range(top + 1):
        if d + k > top:
            ranks.append(0)
            continue
        if source is None:
            vecs = [{i: mpq(1)} for i in range(Q.dim(d))]
        else:
            vecs = _span(source[d])
        if not vecs:
            ranks.append(0)
            continue
        if facs is not None:
            cur = d
            for f in facs:
                vecs = _span(_apply_linear(Q, vecs, cur, f))
                cur += 1
                if not vecs:
                    break
        else:
            basis = Q.std_basis(d)
            imgs = []
            for v in vecs:
                terms: Dict[Exp, mpq] = {}
                for i, x in v.items():
                    m = basis[i]
                    for mono, c in poly.terms.items():
                        key = tuple(a + b for a, b in zip(m, mono))
                        terms[key] = terms.get(key, 0) + c * x
                imgs.append(Q.normal_form_terms({a: b for a, b in terms.items() if b}))
            vecs = _span(imgs)
        ranks.append(len(vecs))
    return ranks


def image_dimension(Q, lam) -> int:
    """dim(λ·H) = dim(H / Ann λ)."""
    return sum(image_hilbert(Q, lam))


def _fixed_subspaces(Q, gens) -> List[List[Dict[int, mpq]]]:
    out = []
    for d in range(Q.top_degree + 1):
        n = Q.dim(d)
        if not gens:
            out.append([{i: mpq(1)} for i in range(n)])
            continue
        mats = []
        for g in gens:
            cols = _act(Q, g, d)
            M = exactla.QMatrix(n, n)
            for col, img in enumerate(cols):
                for row, c in img.items():
                    M.rows[row][col] = c
            mats.append(M)
        fixed = exactla.fixed_space(mats, n)
        out.append([{i: c for i, c in enumerate(v) if c} for v in fixed])
    return out


def _act(Q, gen, d: int) -> List[Dict[int, mpq]]:
    lin = [PolyQ.linear(row) for row in gen]
    cols = []
    for m in Q.std_basis(d):
        poly = PolyQ.constant(Q.nvars)
        for j, a in enumerate(m):
            for _ in range(a):
                poly = poly * lin[j]
        cols.append(Q.normal_form_terms(poly.terms))
    return cols


def parabolic_invariant_image(Q, parabolic_gens, lam) -> int:
    """dim of λ·(H^{W'}) for the subgroup W' generated by ``parabolic_gens``.

    Generators are substitution matrices on the quotient's variables.
    λ must be W'-invariant.
    """
    facs, poly = _as_factors(lam, Q.nvars)
    lam_poly = poly if poly is not None else PolyQ.product_of_linear(facs, Q.nvars)
    for g in parabolic_gens:
        images = [PolyQ.linear(row) for row in g]
        if lam_poly.substitute(images) != lam_poly:
            raise ValueError("λ is not invariant under the parabolic subgroup")
    source = _fixed_subspaces(Q, parabolic_gens)
    return sum(image_hilbert(Q, lam, source=source))
