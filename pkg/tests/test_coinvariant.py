import itertools
from fractions import Fraction
from functools import lru_cache
from math import prod

import pytest
import sympy
from gmpy2 import mpq
from hypothesis import given, strategies as st

from springdim.apartment import make_slope, regular_numbers, wall_group
from springdim.coinvariant import (
    ClassificationError, GradedQuotient, Infeasible, PolyQ, WallGroup, build_quotient,
    classify_cartan, image_dimension, image_hilbert, monomials, sym_dim,
)
from springdim.rootdata import GroupSpec, build_root_datum, gram_matrix

CRITERIA_CASES = [("2A2", 2), ("C2", 2), ("2A3", 2), ("2A4", 2), ("G2", 3), ("G2", 2), ("3D4", 6), ("3D4", 3),
                  ("F4", 12), ("F4", 8), ("F4", 6), ("F4", 4), ("F4", 3), ("F4", 2),
                  ("E6", 12), ("E6", 9), ("E6", 6), ("E6", 3), ("E7", 18), ("E7", 14), ("E7", 6),
                  ("E8", 30), ("E8", 24), ("E8", 20), ("E8", 15), ("E8", 12)]


@lru_cache(maxsize=None)
def criteria_group(label, m):
    datum = build_root_datum(GroupSpec.parse(label))
    return wall_group(datum, make_slope(datum, 1, m))


def unique_groups():
    seen = {}
    for label, m in CRITERIA_CASES:
        g = criteria_group(label, m)
        seen.setdefault(g.type_name, (label, m))
    return sorted(seen.items())


def simple_group(fam, n):
    if fam == "trivial":
        return WallGroup([], [[Fraction(2)]])
    if fam == "A1xA1":
        return WallGroup([(1, 0), (0, 1)], [[Fraction(2), Fraction(0)], [Fraction(0), Fraction(2)]])
    g = gram_matrix(fam, n)
    return WallGroup([tuple(int(i == j) for j in range(n)) for i in range(n)], g)


ORACLE_GROUPS = [("trivial", 0), ("A", 1), ("A1xA1", 2), ("A", 2), ("B", 2), ("C", 2), ("G", 2)]


def oracle_lambdas(g, max_len=None, sample=60):
    """All products of at most two positive roots, plus a seeded sample of longer ones."""
    import random
    roots = g.positive_roots_y
    top = g.reflection_count + 1 if max_len is None else max_len
    out = []
    for k in range(min(2, top) + 1):
        out.extend(itertools.combinations_with_replacement(roots, k))
    longer = [c for k in range(3, top + 1) for c in itertools.combinations_with_replacement(roots, k)]
    if len(longer) > sample:
        longer = random.Random(20261019).sample(longer, sample)
    return [list(c) for c in out + longer]


def expected_hilbert(degrees):
    poly = [1]
    for d in degrees:
        new = [0] * (len(poly) + d - 1)
        for i, c in enumerate(poly):
            for k in range(d):
                new[i + k] += c
        poly = new
    return poly


def trim(h):
    h = list(h)
    while len(h) > 1 and h[-1] == 0:
        h.pop()
    return h


# -- structure of the coinvariant algebra ------------------------------------

@pytest.mark.parametrize("name,case", unique_groups())
def test_hilbert_series_of_criteria_groups(name, case):
    g = criteria_group(*case)
    Q = build_quotient(g)
    h = trim(Q.hilbert)
    assert sum(h) == prod(g.degrees) == g.order
    assert h == expected_hilbert(g.degrees)
    assert h == h[::-1]
    assert len(h) - 1 == g.reflection_count


@pytest.mark.parametrize("fam,n", [("A", 2), ("A", 3), ("B", 3), ("C", 3), ("G", 2), ("B", 2)])
def test_split_and_unsplit_quotients_agree(fam, n):
    g = simple_group(fam, n)
    a = build_quotient(g, split=True)
    b = build_quotient(g, split=False)
    assert trim(a.hilbert) == trim(b.hilbert)


@pytest.mark.parametrize("fam,n", [("A", 2), ("B", 2), ("G", 2), ("A", 3)])
def test_poincare_duality_pairing_is_perfect(fam, n):
    g = simple_group(fam, n)
    Q = build_quotient(g)
    N = g.reflection_count
    assert Q.dim(N) == 1
    for d in range(N + 1):
        left, right = Q.std_basis(d), Q.std_basis(N - d)
        M = []
        for a in left:
            row = []
            for b in right:
                nf = Q.normal_form_terms({tuple(x + y for x, y in zip(a, b)): mpq(1)})
                row.append(nf.get(0, 0))
            M.append(row)
        assert sympy.Matrix(M).rank() == len(left) == len(right)


def test_full_mode_matches_quotient_mode():
    g = simple_group("G", 2)
    a = GradedQuotient(2, g.essential_gens(), g.reflection_count + 1, mode="quotient")
    b = GradedQuotient(2, g.essential_gens(), g.reflection_count + 1, mode="full")
    assert a.hilbert == b.hilbert


def test_budget_is_enforced():
    g = simple_group("A", 3)
    with pytest.raises(Infeasible):
        build_quotient(g, budget=5)


# -- image dimensions --------------------------------------------------------

def random_lambda(g, data, max_len):
    roots = g.positive_roots_y
    k = data.draw(st.integers(0, max_len))
    return [roots[data.draw(st.integers(0, len(roots) - 1))] for _ in range(k)]


@pytest.mark.parametrize("name,case", unique_groups())
@given(data=st.data())
def test_scalar_invariance_and_monotonicity(name, case, data):
    g = criteria_group(*case)
    if g.rank == 0:
        return
    Q = build_quotient(g)
    lam = random_lambda(g, data, min(g.reflection_count + 1, 4))
    base = image_dimension(Q, lam)
    assert 0 <= base <= g.order
    if lam:
        c = data.draw(st.sampled_from([2, -1, Fraction(3, 7), -5]))
        scaled = [tuple(mpq(c) * x for x in lam[0])] + lam[1:]
        assert image_dimension(Q, scaled) == base
    extra = data.draw(st.sampled_from(g.positive_roots_y))
    assert image_dimension(Q, lam + [extra]) <= base
    assert image_dimension(Q, []) == g.order


@pytest.mark.parametrize("name,case", unique_groups())
def test_image_of_top_degree_lambda(name, case):
    g = criteria_group(*case)
    Q = build_quotient(g)
    roots = g.positive_roots_y
    # the product of all positive roots spans the socle
    assert image_dimension(Q, roots) == 1
    if roots:
        assert image_dimension(Q, roots + [roots[0]]) == 0


def test_polynomial_and_factor_inputs_agree():
    g = simple_group("G", 2)
    Q = build_quotient(g)
    for lam in itertools.combinations(g.positive_roots_y, 3):
        poly = PolyQ.product_of_linear(lam, 2)
        assert image_hilbert(Q, list(lam)) == image_hilbert(Q, poly)


# -- explicit groups for the oracles -------------------------------------------

def group_elements(g):
    gens = [sympy.Matrix(m) for m in g.essential_gens()]
    n = g.rank
    elems = {sympy.ImmutableMatrix(sympy.eye(n))}
    frontier = list(elems)
    while frontier:
        nxt = []
        for a in frontier:
            for s in gens:
                b = sympy.ImmutableMatrix(s * a)
                if b not in elems:
                    elems.add(b)
                    nxt.append(b)
        frontier = nxt
    return list(elems)


def _substitute(expr, M, ys):
    # row j of a substitution matrix is the image of y_j
    return expr.subs({ys[j]: sum(M[j, k] * ys[k] for k in range(len(ys))) for j in range(len(ys))},
                     simultaneous=True)


def _lin(v, ys):
    return sum(sympy.Rational(int(x.numerator), int(x.denominator)) * y if hasattr(x, "numerator")
               else x * y for x, y in zip(v, ys))


@pytest.mark.parametrize("fam,n", ORACLE_GROUPS[1:])
def test_group_order_from_explicit_enumeration(fam, n):
    g = simple_group(fam, n)
    assert len(group_elements(g)) == g.order


@pytest.mark.parametrize("fam,n", ORACLE_GROUPS[1:])
def test_generic_orbit_bound(fam, n):
    """dim(lambda H) never exceeds the count of orbit points where lambda is nonzero."""
    g = simple_group(fam, n)
    Q = build_quotient(g)
    ys = sympy.symbols(f"y0:{g.rank}")
    elems = group_elements(g)
    point = [sympy.Rational(3, 7), sympy.Rational(-11, 5), sympy.Rational(13, 17)][:g.rank]
    orbit = {tuple((M.T * sympy.Matrix(point))) for M in elems}
    assert len(orbit) == g.order  # generic point, free orbit
    for lam in oracle_lambdas(g):
        # a product vanishes at a point exactly when one of its factors does
        nonzero = sum(1 for p in orbit if all(_lin(v, ys).subs(dict(zip(ys, p))) != 0 for v in lam))
        assert image_dimension(Q, lam) <= nonzero


@lru_cache(maxsize=None)
def reynolds_invariants(fam, n):
    g = simple_group(fam, n)
    ys = sympy.symbols(f"y0:{g.rank}")
    elems = group_elements(g)
    invariants = []
    for d in range(1, max(g.degrees) + 1):
        for mono in monomials(g.rank, d):
            m = sympy.prod([y ** a for y, a in zip(ys, mono)])
            r = sympy.expand(sum(_substitute(m, M, ys) for M in elems))
            if r != 0:
                invariants.append(r)
    # reduce once so each oracle call starts from a small basis
    return tuple(sympy.groebner(invariants, *ys, order="grevlex").exprs)


def groebner_image_dimension(fam, n, lam):
    """|W| - dim C[y]/(I_+ + (lambda)) with I_+ from the Reynolds operator."""
    g = simple_group(fam, n)
    n = g.rank
    if n == 0:
        return 1 if not lam else 0
    ys = sympy.symbols(f"y0:{n}")
    invariants = list(reynolds_invariants(fam, n))
    f = sympy.prod([_lin(v, ys) for v in lam]) if lam else sympy.Integer(1)
    G = sympy.groebner(invariants + [sympy.expand(f)], *ys, order="grevlex")
    leads = [sympy.Poly(p, *ys).monoms(order="grevlex")[0] for p in G.exprs]
    count = 0
    for d in range(g.reflection_count + 1):
        for mono in monomials(n, d):
            if not any(all(a >= b for a, b in zip(mono, L)) for L in leads):
                count += 1
    return g.order - count


@pytest.mark.parametrize("fam,n", ORACLE_GROUPS)
def test_groebner_oracle(fam, n):
    g = simple_group(fam, n)
    Q = build_quotient(g)
    for lam in oracle_lambdas(g):
        assert image_dimension(Q, lam) == groebner_image_dimension(fam, n, lam), lam
    # a non-root linear form as well
    if g.rank:
        lam = [tuple([1] + [2] * (g.rank - 1))]
        assert image_dimension(Q, lam) == groebner_image_dimension(fam, n, lam)


def apolar_image_dimension(g, lam):
    """Rank of lambda(d/dt) on the harmonics, the derivative span of prod of coroots."""
    n = g.rank
    if n == 0:
        return 1 if not lam else 0
    ts = sympy.symbols(f"t0:{n}")
    gram = g.gram
    delta = sympy.Integer(1)
    for a in g.positive_roots_y:
        aa = sum(Fraction(a[j]) * gram[j][k] * a[k] for j in range(n) for k in range(n))
        coeffs = [2 * sum(gram[j][k] * a[k] for k in range(n)) / aa for j in range(n)]
        delta *= sum(sympy.Rational(c.numerator, c.denominator) * t for c, t in zip(coeffs, ts))
    f = sympy.expand(delta)
    for v in lam:
        f = sympy.expand(sum(sympy.Rational(int(c)) * sympy.diff(f, t) for c, t in zip(v, ts)))
    # span of all derivatives of f
    span, layer = [], [f] if f != 0 else []
    while layer:
        span.extend(layer)
        layer = [sympy.diff(p, t) for p in layer for t in ts]
        layer = [p for p in layer if p != 0]
    if not span:
        return 0
    polys = [sympy.Poly(p, *ts) for p in span]
    monos = sorted({m for p in polys for m in p.monoms()})
    M = sympy.Matrix([[p.coeff_monomial(m) for m in monos] for p in polys])
    return M.rank()


@pytest.mark.parametrize("fam,n", ORACLE_GROUPS)
def test_apolar_oracle(fam, n):
    g = simple_group(fam, n)
    Q = build_quotient(g)
    for lam in oracle_lambdas(g, max_len=g.reflection_count):
        assert image_dimension(Q, lam) == apolar_image_dimension(g, lam), lam


# -- small pieces ------------------------------------------------------------

@pytest.mark.parametrize("fam,n", [("A", 1), ("A", 4), ("B", 3), ("C", 4), ("D", 5), ("E", 6), ("E", 7),
                                   ("E", 8), ("F", 4), ("G", 2)])
def test_classify_cartan(fam, n):
    g = gram_matrix(fam, n)
    cart = [[int(2 * g[i][j] / g[j][j]) for j in range(n)] for i in range(n)]
    assert classify_cartan(cart) == f"{fam}{n}"


def test_classify_rejects_non_crystallographic():
    with pytest.raises(ClassificationError):
        classify_cartan([[2, -3], [-2, 2]])


@given(st.integers(1, 4), st.integers(0, 6))
def test_monomials_are_grevlex_sorted_and_complete(n, d):
    mons = monomials(n, d)
    assert len(mons) == len(set(mons)) == sym_dim(n, d)
    assert all(sum(m) == d for m in mons)
    if n >= 2 and d >= 1:
        # grevlex: x0^d is the largest monomial, x_{n-1}^d the smallest
        assert mons[0] == (d,) + (0,) * (n - 1)
        assert mons[-1] == (0,) * (n - 1) + (d,)


def test_wall_group_types_for_criteria():
    types = {case: criteria_group(*case).type_name for case in CRITERIA_CASES}
    assert types[("F4", 2)] == "A1xC3"
    assert types[("E6", 3)] == "A2^3"
    assert types[("E7", 6)] == "A1xA2^2"
    assert types[("E8", 12)] == "A1^3xA2"
    assert types[("G2", 2)] == "A1^2"
    assert types[("2A4", 2)] == "B2"
    assert types[("E8", 30)] == "trivial"


def test_regular_numbers_cover_criteria_cases():
    for label, m in CRITERIA_CASES:
        datum = build_root_datum(GroupSpec.parse(label))
        assert m in regular_numbers(datum)
