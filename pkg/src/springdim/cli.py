"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 infeasible under the budget,
4 internal invariant violation.
"""
from __future__ import annotations

import csv
import io
import json
import sys
import time
from fractions import Fraction
from importlib import resources
from typing import Dict, List, Optional, Tuple

import click

from .apartment import Apartment, clan_decomposition, make_slope, regular_numbers
from .cache import ResultCache, request_key
from .coinvariant import DEFAULT_BUDGET, Infeasible
from .dimensions import InvariantViolation, total_dimension
from .rootdata import GroupSpec, InvalidSpec, build_root_datum

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 2, 3, 4
TABLE_FIELDS = ["type", "rank", "e", "d", "m", "elliptic", "total", "n_clans", "n_cosets",
                "wallgroup_type", "runtime_ms", "cache_hit"]


def _guard(fn):
    """Map library exceptions onto exit codes."""
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InvalidSpec as exc:
            click.echo(f"invalid input: {exc}", err=True)
            sys.exit(EXIT_INVALID)
        except Infeasible as exc:
            click.echo(f"infeasible: {exc}", err=True)
            sys.exit(EXIT_INFEASIBLE)
        except (InvariantViolation, AssertionError) as exc:
            click.echo(f"internal invariant violated: {exc}", err=True)
            sys.exit(EXIT_INTERNAL)
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def parse_type(type_: str, rank: Optional[int], twist: int) -> GroupSpec:
    """``--type F --rank 4`` or a full label such as ``--type 3D4``."""
    if rank is None:
        spec = GroupSpec.parse(type_)
        if twist != 1 and spec.e == 1:
            spec = GroupSpec(spec.family, spec.rank_abs, twist)
    else:
        spec = GroupSpec(type_.strip().upper(), rank, twist)
    spec.validate()
    return spec


def parse_slope(text: str) -> Tuple[int, int]:
    try:
        q = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise InvalidSpec(f"cannot parse slope {text!r}; expected d/m")
    if q <= 0:
        raise InvalidSpec("slope must be positive")
    return q.numerator, q.denominator


def parse_parahoric(text: Optional[str]) -> Optional[Tuple[int, ...]]:
    if text is None or text.strip().lower() in ("", "iwahori", "i"):
        return None
    try:
        return tuple(sorted({int(x) for x in text.split(",") if x.strip()}))
    except ValueError:
        raise InvalidSpec(f"cannot parse parahoric {text!r}; expected comma-separated indices")


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def run_dims(spec: GroupSpec, d1: int, m1: int, parahoric=None, direct=False, graded=False,
             budget=DEFAULT_BUDGET, cache: Optional[ResultCache] = None) -> Tuple[dict, float, bool]:
    """Report JSON for one request, through the cache.  Returns (report, runtime_ms, cache_hit)."""
    datum = build_root_datum(spec)
    slope = make_slope(datum, d1, m1)
    key = request_key(type=spec.label, d1=d1, m1=m1, parahoric=list(parahoric) if parahoric else None,
                      direct=direct, graded=graded)
    t0 = time.perf_counter()
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit, (time.perf_counter() - t0) * 1000, True
    rep = total_dimension(datum, slope, parahoric, direct=direct, graded=graded, budget=budget)
    out = rep.to_json()
    if cache is not None and rep.status == "ok":
        cache.put(key, out)
    return out, (time.perf_counter() - t0) * 1000, False


def table_row(spec: GroupSpec, rep: dict, runtime_ms: float, cache_hit: bool, timings: bool) -> Dict:
    s = rep["slope"]
    return {
        "type": spec.label,
        "rank": build_root_datum(spec).r,
        "e": spec.e,
        "d": s["d1"],
        "m": s["m1"],
        "elliptic": s["elliptic"],
        "total": rep["total"] if rep["total"] is not None else "",
        "n_clans": rep["n_clans"],
        "n_cosets": rep["n_cosets"],
        "wallgroup_type": rep["wallgroup"]["type"],
        "runtime_ms": round(runtime_ms, 1) if timings else "",
        "cache_hit": cache_hit if timings else "",
    }


def write_rows(rows: List[Dict], fmt: str) -> str:
    if fmt == "json":
        return dump_json(rows)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=TABLE_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("true" if v is True else "false" if v is False else v) for k, v in row.items()})
    return buf.getvalue()


def load_reference() -> List[Dict]:
    text = resources.files("springdim").joinpath("data/reference.json").read_text(encoding="utf-8")
    return json.loads(text)["entries"]


# ---------------------------------------------------------------------------

type_options = [
    click.option("--type", "type_", required=True, help="Family letter (A..G) or a full label such as 3D4."),
    click.option("--rank", type=int, default=None, help="Absolute rank when --type is a family letter."),
    click.option("--twist", type=click.IntRange(1, 3), default=1, help="Order e of the diagram automorphism."),
]


def with_type(fn):
    for opt in reversed(type_options):
        fn = opt(fn)
    return fn


def cache_options(fn):
    fn = click.option("--cache-dir", type=click.Path(file_okay=False), default=None,
                      help="Cache root (default: $SPRINGDIM_CACHE_DIR or the user cache directory).")(fn)
    fn = click.option("--no-cache", is_flag=True, help="Disable the result cache.")(fn)
    return fn


def make_cache(no_cache: bool, cache_dir: Optional[str]) -> Optional[ResultCache]:
    return None if no_cache else ResultCache(cache_dir)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main():
    """Dimensions of spherical modules L_nu(triv) via affine Springer fibers."""


@main.command()
@with_type
@_guard
def rootsys(type_, rank, twist):
    """Print the root datum as JSON."""
    spec = parse_type(type_, rank, twist)
    datum = build_root_datum(spec)
    out = datum.to_json()
    out["regular_numbers"] = regular_numbers(datum)
    click.echo(dump_json(out), nl=False)


@main.command()
@with_type
@click.option("--slope", required=True, help="Slope d/m.")
@click.option("--parahoric", default=None, help="Comma-separated affine simple reflections (default Iwahori).")
@click.option("--graded", is_flag=True, help="Include per-clan Hilbert vectors.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--direct", is_flag=True, help="Walk at d/m instead of scaling the 1/m result.")
@click.option("--budget", type=int, default=DEFAULT_BUDGET, show_default=True,
              help="Cap on monomial-space size.")
@click.option("--timings", is_flag=True, help="Report run metadata (runtime, cache hit).")
@cache_options
@_guard
def dims(type_, rank, twist, slope, parahoric, graded, fmt, direct, budget, timings, no_cache, cache_dir):
    """Dimension of L_nu(triv) with the per-clan breakdown."""
    spec = parse_type(type_, rank, twist)
    d1, m1 = parse_slope(slope)
    S = parse_parahoric(parahoric)
    rep, ms, hit = run_dims(spec, d1, m1, S, direct, graded, budget, make_cache(no_cache, cache_dir))
    if timings:
        rep = dict(rep, runtime_ms=round(ms, 1), cache_hit=hit)
    if fmt == "json":
        click.echo(dump_json(rep), nl=False)
    else:
        click.echo(write_rows([table_row(spec, rep, ms, hit, timings)], "csv"), nl=False)
    if rep["status"] == "infeasible":
        click.echo(f"infeasible: {rep['note']}", err=True)
        sys.exit(EXIT_INFEASIBLE)


@main.command()
@with_type
@click.option("--slope", required=True, help="Slope d/m.")
@_guard
def clans(type_, rank, twist, slope):
    """Clans of dominant contributing alcoves as JSON."""
    spec = parse_type(type_, rank, twist)
    d1, m1 = parse_slope(slope)
    datum = build_root_datum(spec)
    sl = make_slope(datum, d1, m1)
    if not sl.elliptic:
        raise InvalidSpec(f"slope {sl.label} is not elliptic for {spec.label}")
    ap = Apartment(datum, sl)
    out = []
    for c in clan_decomposition(ap, ap.enumerate()):
        out.append({
            "sign_vector": "".join(c.sign_vector),
            "alcove_count": c.alcove_count,
            "sep_count": c.sep_count,
            "lambda_factors": [list(v) for v in c.lambda_factors],
            "expected_dim": ap.N - c.sep_count,
            "bounded": c.bounded,
        })
    click.echo(dump_json({"type": spec.label, "slope": sl.label, "N": ap.N,
                          "wallgroup": ap.walls.group.type_name, "clans": out}), nl=False)


@main.command("apartment-svg")
@with_type
@click.option("--slope", required=True, help="Slope d/m.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, help="Output file (default stdout).")
@_guard
def apartment_svg_cmd(type_, rank, twist, slope, out_path):
    """Draw the apartment of a rank-1 or rank-2 type as SVG."""
    from .svg import apartment_svg

    spec = parse_type(type_, rank, twist)
    d1, m1 = parse_slope(slope)
    datum = build_root_datum(spec)
    if datum.r > 2:
        raise InvalidSpec(f"{spec.label} has relative rank {datum.r}; pictures need rank at most 2")
    sl = make_slope(datum, d1, m1)
    if not sl.elliptic:
        raise InvalidSpec(f"slope {sl.label} is not elliptic for {spec.label}")
    text, _ = apartment_svg(Apartment(datum, sl))
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _sweep(case: str) -> Tuple[GroupSpec, List[int]]:
    """``F4`` (all elliptic regular m) or ``G2:6,3,2``."""
    label, _, ms = case.partition(":")
    spec = GroupSpec.parse(label)
    datum = build_root_datum(spec)
    if ms.strip():
        return spec, [int(x) for x in ms.split(",") if x.strip()]
    return spec, [m for m in regular_numbers(datum) if make_slope(datum, 1, m).elliptic]


@main.command()
@click.option("--case", "cases", multiple=True, help="TYPE or TYPE:m1,m2,... ; repeatable.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@click.option("--budget", type=int, default=DEFAULT_BUDGET, show_default=True)
@click.option("--timings", is_flag=True, help="Fill runtime_ms and cache_hit.")
@cache_options
@_guard
def table(cases, fmt, out_path, budget, timings, no_cache, cache_dir):
    """Batch run slopes 1/m and write a CSV or JSON table."""
    cache = make_cache(no_cache, cache_dir)
    rows = []
    for case in cases:
        spec, ms = _sweep(case)
        for m in ms:
            rep, ms_, hit = run_dims(spec, 1, m, budget=budget, cache=cache)
            rows.append(table_row(spec, rep, ms_, hit, timings))
    text = write_rows(rows, fmt)
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--budget", type=int, default=DEFAULT_BUDGET, show_default=True)
@click.option("--include-slow", is_flag=True, help="Also run entries classed as slow.")
@click.option("--only", default=None, help="Comma-separated type labels to restrict to.")
@cache_options
@_guard
def check(budget, include_slow, only, no_cache, cache_dir):
    """Verify the reference table."""
    cache = make_cache(no_cache, cache_dir)
    keep = {GroupSpec.parse(t).label for t in only.split(",")} if only else None
    failed = 0
    for ent in load_reference():
        spec = GroupSpec.parse(ent["type"])
        if keep is not None and spec.label not in keep:
            continue
        tag = f"{spec.label:>4} m={ent['m1']:<3}"
        if ent["feasibility"] == "slow" and not include_slow:
            click.echo(f"SKIP {tag} slow entry (use --include-slow)  [{ent['source']}]")
            continue
        rep, ms, hit = run_dims(spec, 1, ent["m1"], budget=budget, cache=cache)
        got = rep["total"]
        if ent["expected"] is None:
            if rep["status"] == "infeasible":
                click.echo(f"OK   {tag} refused under budget  [{ent['source']}]")
            else:
                failed += 1
                click.echo(f"FAIL {tag} open entry answered with {got}  [{ent['source']}]")
        elif rep["status"] == "infeasible":
            click.echo(f"SKIP {tag} infeasible under budget {budget}  [{ent['source']}]")
        elif got == ent["expected"]:
            click.echo(f"OK   {tag} {got}  ({ms:.0f} ms{', cached' if hit else ''})  [{ent['source']}]")
        else:
            failed += 1
            click.echo(f"FAIL {tag} got {got}, expected {ent['expected']}  [{ent['source']}]")
    click.echo("all computed entries match" if not failed else f"{failed} mismatches")
    sys.exit(EXIT_OK if not failed else 1)


if __name__ == "__main__":  # pragma: no cover
    main()
