"""Dimension assembly and closed-form fiber dimensions.

``total_dimension`` sums, over the dominant alcoves of the bounded clans,
the dimension of the image of multiplication by the clan's lambda in the
coinvariant algebra of the wall group.  By default the computation runs at
slope 1/m1 and the result is scaled by d1^r; ``direct=True`` walks the
apartment at d1/m1 itself.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

from .apartment import (
    DEFAULT_ALCOVE_CAP,
    Apartment,
    SlopeSpec,
    clan_decomposition,
    make_slope,
    parahoric_cosets,
)
from .coinvariant import (
    DEFAULT_BUDGET,
    Infeasible,
    build_quotient,
    image_hilbert,
    parabolic_invariant_image,
)
from .rootdata import InvalidSpec, RootDatum


class InvariantViolation(AssertionError):
    """An internal identity failed; indicates a bug rather than bad input."""


def _half_integer(q: Fraction, what: str) -> int:
    if q.denominator != 1:
        raise InvariantViolation(f"{what} is not an integer: {q}")
    return int(q)


def dim_springer(datum: RootDatum, slope: SlopeSpec) -> int:
    val = (slope.nu * datum.abs_root_count - datum.r + slope.t_fixed_dim) / 2
    out = _half_integer(Fraction(val), "dim_Sp")
    if slope.elliptic:
        ell = Fraction(datum.h_theta * slope.nu - 1) * datum.r / 2
        if ell != out:
            raise InvariantViolation("elliptic dim_Sp disagrees with (h nu - 1) r / 2")
    return out


def dim_hitchin(datum: RootDatum, slope: SlopeSpec) -> int:
    val = (slope.nu * datum.abs_root_count - datum.r - slope.t_fixed_dim) / 2
    return _half_integer(Fraction(val), "dim_M")


def n_top(datum: RootDatum, slope: SlopeSpec) -> Fraction:
    return Fraction(datum.r) * (slope.nu * datum.h_theta - 1) / 2


def monomial_budget_need(datum: RootDatum, top_degree: int) -> int:
    """Size of Sym^N in r variables, the largest space the algebra may need."""
    r = datum.r
    return comb(top_degree + r - 1, r - 1)


@dataclass
class ClanRow:
    sign_vector: Tuple[str, ...]
    alcove_count: int
    lambda_degree: int
    image_dim: Optional[int]
    subtotal: Optional[int]
    bounded: bool = True
    graded: Optional[List[int]] = None
    lambda_factors: List[Tuple[int, ...]] = field(default_factory=list)


@dataclass
class DimReport:
    type_label: str
    slope: SlopeSpec
    parahoric: Optional[Tuple[int, ...]]
    computed_at: str
    scale_factor: int
    per_clan: List[ClanRow]
    total: Optional[int]
    wallgroup: Dict
    formulas: Dict
    n_cosets: int = 0
    status: str = "ok"
    note: str = ""
    timings: Dict[str, float] = field(default_factory=dict)
    cache_hit: bool = False
    kernel_backend: str = ""
    skipped_unbounded: int = 0

    @property
    def n_clans(self) -> int:
        return len(self.per_clan)

    def check(self) -> None:
        """Internal identities that hold on every run."""
        f = self.formulas
        if f["dim_Sp"] - f["dim_M"] != f["t_fixed_dim"]:
            raise InvariantViolation("dim_Sp - dim_M != t_fixed_dim")
        if self.total is None:
            return
        s = sum(row.subtotal for row in self.per_clan)
        if s * self.scale_factor != self.total:
            raise InvariantViolation("total does not re-sum from the clan rows")
        for row in self.per_clan:
            if row.graded is not None and sum(row.graded) != row.image_dim:
                raise InvariantViolation("graded and ungraded clan data disagree")
            if row.lambda_degree > self.wallgroup["reflection_count"] and row.image_dim:
                raise InvariantViolation("clan with lambda degree above N contributes")

    def to_json(self) -> dict:
        return {
            "type": self.type_label,
            "slope": self.slope.to_json(),
            "parahoric": list(self.parahoric) if self.parahoric is not None else None,
            "parahoric_status": ("unverified: no reference values" if self.parahoric else None),
            "computed_at": self.computed_at,
            "scale_factor": self.scale_factor,
            "status": self.status,
            "note": self.note,
            "total": self.total,
            "n_clans": self.n_clans,
            "n_cosets": self.n_cosets,
            "wallgroup": self.wallgroup,
            "formulas": {k: (str(v) if isinstance(v, Fraction) else v) for k, v in self.formulas.items()},
            "per_clan": [
                {
                    "sign_vector": "".join(r.sign_vector),
                    "alcove_count": r.alcove_count,
                    "lambda_degree": r.lambda_degree,
                    "lambda_factors": [list(v) for v in r.lambda_factors],
                    "image_dim": r.image_dim,
                    "subtotal": r.subtotal,
                    **({"graded": r.graded} if r.graded is not None else {}),
                }
                for r in self.per_clan
            ],
        }


def formulas(datum: RootDatum, slope: SlopeSpec) -> Dict:
    return {
        "dim_Sp": dim_springer(datum, slope),
        "dim_M": dim_hitchin(datum, slope),
        "t_fixed_dim": slope.t_fixed_dim,
        "N_top": n_top(datum, slope),
    }


def total_dimension(
    datum: RootDatum,
    slope: SlopeSpec,
    parahoric: Optional[Sequence[int]] = None,
    *,
    direct: bool = False,
    graded: bool = False,
    budget: int = DEFAULT_BUDGET,
    alcove_cap: int = DEFAULT_ALCOVE_CAP,
    which: Optional[str] = None,
) -> DimReport:
    """Dimension of L_nu(triv), assembled clan by clan.

    Raises :class:`InvalidSpec` for non-elliptic slopes.  When the
    coinvariant computation would exceed ``budget`` the report comes back
    with ``status="infeasible"`` and no total.
    """
    from . import kernels

    if not slope.elliptic:
        raise InvalidSpec(f"slope {slope.label} is not elliptic for {datum.spec.label}")
    t0 = time.perf_counter()
    if direct or slope.d1 == 1:
        work, scale = slope, 1
    else:
        work = make_slope(datum, 1, slope.m1)
        scale = slope.d1 ** datum.r
    forms = formulas(datum, slope)
    ap = Apartment(datum, work)
    group = ap.walls.group
    wg = group.describe()
    base_dim = dim_springer(datum, make_slope(datum, 1, slope.m1))
    if base_dim != group.reflection_count:
        raise InvariantViolation("reflection count of the wall group differs from dim_Sp at 1/m")
    S = tuple(sorted(set(parahoric))) if parahoric else None
    report = DimReport(
        type_label=datum.spec.label, slope=slope, parahoric=S,
        computed_at=work.label, scale_factor=scale, per_clan=[], total=None,
        wallgroup=wg, formulas=forms, kernel_backend=which or kernels.backend(),
    )
    need = monomial_budget_need(datum, group.reflection_count)
    if need > budget:
        report.status = "infeasible"
        report.note = (f"Sym^{group.reflection_count} in {datum.r} variables has {need} monomials, "
                       f"over the budget of {budget}")
        report.check()
        return report
    try:
        alcoves = ap.enumerate(cap=alcove_cap, which=which)
    except Infeasible as exc:
        report.status = "infeasible"
        report.note = str(exc)
        return report
    report.skipped_unbounded = ap.skipped_unbounded
    t1 = time.perf_counter()
    Q = build_quotient(group, budget=budget)
    t2 = time.perf_counter()

    if S is None:
        rows = _iwahori_rows(ap, alcoves, Q, graded)
        report.n_cosets = len(alcoves)
    else:
        rows, ncos = _parahoric_rows(ap, alcoves, Q, S, graded)
        report.n_cosets = ncos
    report.per_clan = rows
    report.total = scale * sum(r.subtotal for r in rows)
    t3 = time.perf_counter()
    report.timings = {"enumerate": t1 - t0, "quotient": t2 - t1, "images": t3 - t2, "total": t3 - t0}
    report.check()
    return report


def _iwahori_rows(ap: Apartment, alcoves, Q, graded: bool) -> List[ClanRow]:
    group = ap.walls.group
    cache: Dict[Tuple, List[int]] = {}
    rows = []
    for clan in clan_decomposition(ap, alcoves):
        lam = [group.project(f) for f in clan.lambda_factors]
        key = tuple(sorted(lam))
        hil = cache.get(key)
        if hil is None:
            if len(lam) > group.reflection_count:
                hil = [0]
            else:
                hil = image_hilbert(Q, lam)
            cache[key] = hil
        dim = sum(hil)
        rows.append(ClanRow(
            sign_vector=clan.sign_vector, alcove_count=clan.alcove_count,
            lambda_degree=clan.sep_count, image_dim=dim, subtotal=dim * clan.alcove_count,
            bounded=clan.bounded, graded=_trim(hil) if graded else None,
            lambda_factors=list(clan.lambda_factors),
        ))
    return rows


def _parahoric_rows(ap: Apartment, alcoves, Q, S, graded: bool):
    group = ap.walls.group
    cosets = parahoric_cosets(ap, alcoves, S)
    by_sign: Dict[Tuple[str, ...], ClanRow] = {}
    for cos in cosets:
        lam = [group.project(f) for f in cos.lambda_factors]
        gens = [_reflection_substitution(group, v) for v in cos.levi_roots]
        if len(lam) > group.reflection_count:
            dim = 0
        elif gens:
            dim = parabolic_invariant_image(Q, gens, lam)
        else:
            dim = sum(image_hilbert(Q, lam))
        mask = ap.negative_mask(cos.representative)
        signs = tuple("-" if n else "+" for n in mask)
        row = by_sign.get(signs)
        if row is None:
            row = by_sign[signs] = ClanRow(signs, 0, len(cos.lambda_factors), dim, 0,
                                           lambda_factors=list(cos.lambda_factors))
        row.alcove_count += 1
        row.subtotal += dim
        row.image_dim = dim if row.alcove_count == 1 else row.image_dim
    rows = sorted(by_sign.values(), key=lambda r: (r.lambda_degree, r.sign_vector))
    return rows, len(cosets)


def _reflection_substitution(group, root_linear) -> List[List[int]]:
    """Reflection in a wall-group root as a substitution on the y-variables."""
    s = group.rank
    gamma = [int(x) for x in group.project(root_linear)]
    # (beta_j, gamma) through the Gram matrix of the simple roots
    g = group.gram
    gg = sum(Fraction(gamma[a]) * g[a][b] * gamma[b] for a in range(s) for b in range(s))
    out = []
    for j in range(s):
        bg = sum(g[j][b] * gamma[b] for b in range(s))
        c = 2 * bg / gg
        if c.denominator != 1:
            raise InvariantViolation("non-integral reflection coefficient")
        row = [0] * s
        row[j] += 1
        for k in range(s):
            row[k] -= int(c) * gamma[k]
        out.append(row)
    return out


def _trim(h: List[int]) -> List[int]:
    h = list(h)
    while len(h) > 1 and h[-1] == 0:
        h.pop()
    return h


def scaling_check(datum: RootDatum, m1: int, d1: int, max_rank: int = 2, **kw) -> bool:
    """Direct enumeration at d1/m1 against d1^r times the value at 1/m1."""
    if datum.r > max_rank:
        raise InvalidSpec(f"direct path limited to relative rank <= {max_rank}")
    base = total_dimension(datum, make_slope(datum, 1, m1), **kw)
    direct = total_dimension(datum, make_slope(datum, d1, m1), direct=True, **kw)
    if base.total is None or direct.total is None:
        raise Infeasible("scaling check needs both totals")
    return direct.total == d1 ** datum.r * base.total


# ---------------------------------------------------------------------------
# conjectured series

def _series_inv_sqrt_cubed(n: int) -> List[Fraction]:
    # (1 - 4x)^{-3/2} = sum (2k+1) C(2k, k) x^k
    return [Fraction((2 * k + 1) * comb(2 * k, k)) for k in range(n + 1)]


def _series_sqrt(n: int) -> List[Fraction]:
    # sqrt(1 - 4x) = 1 - sum_{k>=1} 2 Cat(k-1) x^k
    out = [Fraction(1)]
    for k in range(1, n + 1):
        cat = comb(2 * (k - 1), k - 1) // k
        out.append(Fraction(-2 * cat))
    return out


def _mul(a: List[Fraction], b: List[Fraction], n: int) -> List[Fraction]:
    return [sum((a[i] * b[k - i] for i in range(k + 1)), Fraction(0)) for k in range(n + 1)]


def conjecture_series(family: str, n_max: int) -> List[Tuple[int, int]]:
    """Predicted dim L_{1/2n} for D_{2n} or C_{2n}, n = 1..n_max (conjecture status)."""
    f = family.upper()
    a = _series_inv_sqrt_cubed(n_max)
    if f == "D":
        coeffs = a
    elif f == "C":
        s = _series_sqrt(n_max)
        one_plus = [s[0] + 1] + s[1:]
        sq = _mul(one_plus, one_plus, n_max)
        coeffs = [c / 4 for c in _mul(a, sq, n_max)]
    else:
        raise InvalidSpec("conjectured series exist for families D and C only")
    out = []
    for n in range(1, n_max + 1):
        c = coeffs[n]
        if c.denominator != 1:
            raise InvariantViolation("non-integral series coefficient")
        out.append((n, int(c)))
    return out
