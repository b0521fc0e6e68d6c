from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from springdim import kernels
from springdim.apartment import (
    Apartment, _fm_feasible, _recession_cone_trivial, clan_decomposition,
    enumerate_contributing_alcoves, make_slope, nu_weight_roots, regular_numbers,
    split_regular, wall_system,
)
from springdim.rootdata import GroupSpec, InvalidSpec, build_root_datum

RANK2 = [("A2", 3), ("2A2", 2), ("C2", 2), ("2A3", 2), ("2A4", 2), ("G2", 3), ("G2", 2),
         ("3D4", 6), ("3D4", 3), ("C2", 4), ("G2", 6), ("2A4", 10)]


def setup(label, m, d=1):
    datum = build_root_datum(GroupSpec.parse(label))
    return datum, make_slope(datum, d, m)


def roots_set(roots):
    return {(tuple(a.linear), Fraction(a.offset)) for a in roots}


# Affine roots listed in the worked examples, as (simple-root coefficients, constant term).
LISTED_NU_ROOTS = {
    ("G2", 3): {((1, 3), -1), ((0, 1), 0), ((-1, -1), 1), ((-2, -3), 2), ((1, 0), 0)},
    ("G2", 2): {((1, 0), 0), ((-1, 0), 1), ((0, 1), 0), ((0, -1), 1), ((1, 2), -1), ((-1, -2), 2),
                ((2, 3), -2), ((-2, -3), 3)},
    # C2 in epsilon coordinates: alpha_1 = e1 - e2, alpha_2 = 2 e2
    ("C2", 2): {((2, 1), -1), ((1, 0), 0), ((0, -1), 1), ((0, 1), 0), ((-1, 0), 1), ((-2, -1), 2)},
    ("2A2", 2): {((1,), 0), ((-1,), 1), ((2,), Fraction(-1, 2)), ((-2,), Fraction(3, 2))},
}
LISTED_WALL_ROOTS = {
    ("G2", 3): {((1, 2), -1)},
    ("G2", 2): {((1, 1), -1), ((1, 3), -2)},
    ("C2", 2): {((1, 1), -1)},
    ("2A2", 2): {((1,), Fraction(-1, 2))},
}


@pytest.mark.parametrize("case", sorted(LISTED_NU_ROOTS))
def test_nu_roots_match_worked_examples(case):
    datum, slope = setup(*case)
    assert roots_set(nu_weight_roots(datum, slope)) == {(v, Fraction(c)) for v, c in LISTED_NU_ROOTS[case]}
    walls = wall_system(datum, slope).positive
    got = set()
    for a in walls:
        v, c = tuple(a.linear), Fraction(a.offset)
        got.add(min((v, c), (tuple(-x for x in v), -c)))
    want = set()
    for v, c in LISTED_WALL_ROOTS[case]:
        c = Fraction(c)
        want.add(min((v, c), (tuple(-x for x in v), -c)))
    assert got == want


@pytest.mark.parametrize("label,m", RANK2 + [("F4", 3), ("E6", 6)])
def test_nu_and_wall_root_values_at_base_point(label, m):
    datum, slope = setup(label, m)
    nu = slope.nu
    for a in nu_weight_roots(datum, slope):
        assert sum(c * nu for c in a.linear) + a.offset == nu
        assert datum.is_admissible(a.linear, a.offset)
    ws = wall_system(datum, slope)
    for a in ws.positive:
        assert sum(c * nu for c in a.linear) + a.offset == 0
    assert ws.group.reflection_count == len(ws.positive)


# -- Fourier-Motzkin against linear programming --------------------------------

def lp_feasible(A, u):
    r = len(u)
    A_ub = [[-x for x in row] for row in A] + [[-x for x in u]]
    b_ub = [0] * len(A) + [-1]
    res = linprog(np.zeros(r), A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * r, method="highs")
    assert res.status in (0, 2)
    return res.status == 0


systems = st.integers(1, 4).flatmap(lambda r: st.tuples(
    st.lists(st.lists(st.integers(-3, 3), min_size=r, max_size=r), min_size=1, max_size=8),
    st.lists(st.integers(-3, 3), min_size=r, max_size=r)))


@given(systems)
def test_fm_matches_linear_programming(sys_):
    A, u = sys_
    assert _fm_feasible(A, u) == lp_feasible(A, u)


def lp_cone_trivial(A, r):
    for j in range(r):
        for sgn in (1, -1):
            c = np.zeros(r)
            c[j] = -sgn
            res = linprog(c, A_ub=[[-x for x in row] for row in A], b_ub=[0] * len(A),
                          bounds=[(-1, 1)] * r, method="highs")
            if res.status == 0 and -res.fun > 1e-9:
                return False
    return True


@given(st.integers(1, 4).flatmap(lambda r: st.tuples(
    st.just(r), st.lists(st.lists(st.integers(-2, 2), min_size=r, max_size=r), min_size=1, max_size=9))))
def test_recession_cone_test_matches_lp(data):
    r, A = data
    rows = [[Fraction(x) for x in row] for row in A]
    assert _recession_cone_trivial(rows, r) == lp_cone_trivial(A, r)


# -- brute-force box enumeration oracle for rank 2 --------------------------------

def box_oracle(ap, layers):
    """Dominant alcoves with sep <= N in bounded clans, found by an unrestricted walk.

    A sign pattern that still occurs on the outermost layer of the walk is
    taken to belong to an unbounded clan.
    """
    r = ap.r
    empty = np.zeros((0, r), dtype=np.int64)
    none = np.zeros(0, dtype=np.int64)
    W = np.eye(r, dtype=np.int64)[None]
    T = np.zeros((1, r), dtype=np.int64)
    seen = {ap.B0.tobytes(): 0}
    found = [(ap.B0.copy(), 0)]
    for layer in range(1, layers + 1):
        B, Wn, Tn, _, _ = kernels.expand(W, T, ap.SB, ap.C, ap.A, ap.n0, empty, none, empty, none)
        nW, nT = [], []
        for q in range(B.shape[0]):
            for i in range(B.shape[1]):
                k = B[q, i].tobytes()
                if k in seen:
                    continue
                seen[k] = layer
                found.append((B[q, i].copy(), layer))
                nW.append(Wn[q, i])
                nT.append(Tn[q, i])
        W, T = np.array(nW).reshape(-1, r, r), np.array(nT).reshape(-1, r)
    outer = {ap.mask_at(b) for b, lay in found if lay == layers}
    keep = {}
    for b, lay in found:
        if not ap.is_dominant(b):
            continue
        mask = ap.mask_at(b)
        if sum(mask) > ap.N or mask in outer:
            continue
        keep[b.tobytes()] = lay
    return keep


@pytest.mark.parametrize("label,m", RANK2)
def test_walk_matches_box_enumeration(label, m):
    datum, slope = setup(label, m)
    ap = Apartment(datum, slope)
    got = {a.key for a in ap.enumerate()}
    layers = 70
    want = box_oracle(ap, layers)
    assert got == set(want)
    assert max(want.values()) < layers - 20  # well inside the box


@pytest.mark.parametrize("label,m", RANK2)
def test_clan_structure(label, m):
    datum, slope = setup(label, m)
    ap = Apartment(datum, slope)
    alcoves = ap.enumerate()
    clans = clan_decomposition(ap, alcoves)
    assert sum(c.alcove_count for c in clans) == len(alcoves)
    for c in clans:
        assert c.bounded
        masks = {ap.negative_mask(a) for a in c.coset_reps}
        assert len(masks) == 1
        assert {a.sep_count for a in c.coset_reps} == {c.sep_count}
        for a in c.coset_reps:
            assert ap.lambda_factors(a) == list(c.lambda_factors)
    # representatives are dominant, hence pairwise unrelated under the wall group
    keys = set()
    for a in alcoves:
        assert ap.is_dominant(a.barycenter_scaled)
        folded = ap.dominant_point(a.barycenter_scaled)
        assert (folded == a.barycenter_scaled).all()
        keys.add(folded.tobytes())
        for g, off, c in ap.simple_wall:
            refl = a.barycenter_scaled - (int(g @ a.barycenter_scaled) + off) * c
            assert not ap.is_dominant(refl)
    assert len(keys) == len(alcoves)


@pytest.mark.parametrize("label,m", RANK2 + [("F4", 4), ("E6", 9)])
def test_reduced_words_round_trip(label, m):
    datum, slope = setup(label, m)
    ap = Apartment(datum, slope)
    for a in ap.enumerate()[:50]:
        W, T = ap.map_from_word(a.word)
        assert (W == a.linear).all() and (T == a.translation).all()


@pytest.mark.parametrize("label,m", [("G2", 2), ("2A4", 2), ("F4", 3), ("E6", 6)])
def test_backends_agree(label, m):
    datum, slope = setup(label, m)
    a = {x.key for x in Apartment(datum, slope).enumerate(which="numpy")}
    b = {x.key for x in Apartment(datum, slope).enumerate(which="numba")}
    assert a == b


def test_start_alcove_touches_base_point():
    datum, slope = setup("G2", 2)
    ap = Apartment(datum, slope)
    start = ap.start_alcove()
    assert start.sep_count == 0
    # the base point lies in the closure: all affine simple roots of w^{-1} are >= 0 there
    verts = start.vertices_scaled()
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    assert ((ap.P >= lo) & (ap.P <= hi)).all()


def test_g2_one_third_clans():
    datum, slope = setup("G2", 3)
    ap = Apartment(datum, slope)
    alc = ap.enumerate()
    clans = clan_decomposition(ap, alc)
    assert len(alc) == 3
    assert [(c.sep_count, c.alcove_count) for c in clans] == [(0, 1), (1, 2)]


def test_non_elliptic_slope_refused():
    datum = build_root_datum(GroupSpec.parse("A2"))
    slope = make_slope(datum, 1, 2)
    assert not slope.elliptic and slope.t_fixed_dim == 1
    with pytest.raises(InvalidSpec):
        enumerate_contributing_alcoves(datum, slope)


def test_slope_validation():
    datum = build_root_datum(GroupSpec.parse("G2"))
    with pytest.raises(InvalidSpec):
        make_slope(datum, 1, 4)
    with pytest.raises(InvalidSpec):
        make_slope(datum, 2, 6)
    with pytest.raises(InvalidSpec):
        make_slope(datum, 0, 3)


@pytest.mark.parametrize("label", ["G2", "F4", "E6", "E7", "E8", "C2", "D4"])
def test_regular_numbers_contain_divisors_of_degrees_criterion(label):
    datum = build_root_datum(GroupSpec.parse(label))
    regs = regular_numbers(datum)
    assert datum.h_theta in regs and 1 in regs
    for m in regs:
        assert split_regular(datum.degrees, m)


def test_e8_regular_numbers():
    datum = build_root_datum(GroupSpec.parse("E8"))
    assert regular_numbers(datum) == [30, 24, 20, 15, 12, 10, 8, 6, 5, 4, 3, 2, 1]
