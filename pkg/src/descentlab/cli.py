"""Command-line interface with deterministic, machine-readable output.

Every invocation with the same flags and master seed produces byte-identical
output regardless of --threads: replicate-level work is keyed by absolute
replicate index, aggregation is order-independent, floats render at 17
significant digits, and rationals render exactly as p/q.  Counts serialize
as decimal strings in JSON since they outgrow 64-bit integers quickly.

Exit codes: 0 success, 2 bad flags, 3 nonzero reconstruction residual,
4 failed exact identity.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from .batch import batch_finals
from .diagnostics import IDENTITY_CHECKS, clt_table, identity_check
from .families import descent_triangle, parse_family
from .moments import moment_table
from .processes import parse_kind, reconstruct, simulate

RESIDUAL_EXIT = 3
IDENTITY_EXIT = 4


def _fmt_float(x: float) -> str:
    return format(x, ".17g")


def _fmt_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return _fmt_float(v)
    return str(v)


class Table:
    """Column-ordered rows plus an optional trailing summary object."""

    def __init__(self, columns: list[str]):
        self.columns = columns
        self.rows: list[list] = []
        self.trailer: dict | None = None

    def add(self, *cells):
        assert len(cells) == len(self.columns)
        self.rows.append(list(cells))


def _write_table(table: Table, fmt: str, out) -> None:
    if fmt == "json":
        doc = {
            "columns": table.columns,
            "rows": [[_fmt_cell(c) for c in row] for row in table.rows],
        }
        if table.trailer is not None:
            doc.update(table.trailer)
        out.write(json.dumps(doc, indent=2))
        out.write("\n")
        return
    sep = "\t" if fmt == "tsv" else ","
    out.write(sep.join(table.columns) + "\n")
    for row in table.rows:
        out.write(sep.join(_fmt_cell(c) for c in row) + "\n")
    if table.trailer is not None:
        out.write(json.dumps(table.trailer) + "\n")


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


def _emit(table: Table, args) -> None:
    out, close = _open_out(args.out)
    try:
        _write_table(table, args.format, out)
    finally:
        if close:
            out.close()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_triangle(args) -> int:
    fam = parse_family(args.family)
    tri = descent_triangle(fam, args.n)
    if args.format == "json":
        doc = {
            "family": fam.value,
            "n_min": tri.n_min,
            "k_min": tri.k_min,
            "rows": [[str(c) for c in row] for _, row in tri.rows()],
        }
        out, close = _open_out(args.out)
        try:
            out.write(json.dumps(doc, indent=2) + "\n")
        finally:
            if close:
                out.close()
        return 0
    table = Table(["n", "k", "count"])
    for n, row in tri.rows():
        for j, count in enumerate(row):
            table.add(n, tri.k_min + j, count)
    _emit(table, args)
    return 0


def _sim_chunk(payload) -> tuple[dict[int, int], list[list[str]]]:
    kind_tag, n, seed, start, count, record = payload
    if not record:
        return batch_finals(kind_tag, n, count, seed, start_index=start), []
    counts: dict[int, int] = {}
    audit: list[list[str]] = []
    for r in range(start, start + count):
        traj = simulate(kind_tag, n, seed=seed, record=True, stream_index=r)
        counts[traj.final] = counts.get(traj.final, 0) + 1
        residual = reconstruct(traj)
        dec = traj.decomposition
        audit.append(
            [
                str(r),
                str(traj.final),
                "".join(str(p) for p in dec.composition),
                ";".join(str(p.x) for p in dec.parts),
                ";".join(str(p.alpha) for p in dec.parts),
                ";".join(str(p.gamma) for p in dec.parts),
                str(residual),
            ]
        )
    return counts, audit


def _split_chunks(total: int, parts: int) -> list[tuple[int, int]]:
    base, extra = divmod(total, parts)
    chunks, start = [], 0
    for i in range(parts):
        size = base + (1 if i < extra else 0)
        if size:
            chunks.append((start, size))
        start += size
    return chunks


def cmd_simulate(args) -> int:
    kind = parse_kind(args.process)
    record = args.record is not None
    floor = 2_000 if record else 50_000
    workers = max(1, args.threads)
    payloads = [
        (kind.value, args.n, args.seed, start, count, record)
        for start, count in _split_chunks(args.replicates, workers)
    ]
    if workers > 1 and args.replicates >= floor:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sim_chunk, payloads))
    else:
        results = [_sim_chunk(p) for p in payloads]

    counts: dict[int, int] = {}
    audit: list[list[str]] = []
    for c, rows in results:
        for v, k in c.items():
            counts[v] = counts.get(v, 0) + k
        audit.extend(rows)

    bad = 0
    if record:
        header = ["replicate", "final", "composition", "differences",
                  "alphas", "gammas", "residual"]
        sep = "\t" if args.format == "tsv" else ","
        with open(args.record, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(sep.join(header) + "\n")
            for row in audit:
                fh.write(sep.join(row) + "\n")
                if row[-1] != "0":
                    bad += 1

    table = Table(["value", "count"])
    for v in sorted(counts):
        table.add(v, counts[v])
    _emit(table, args)
    if bad:
        print(f"error: {bad} replicates with nonzero residual", file=sys.stderr)
        return RESIDUAL_EXIT
    return 0


def cmd_moments(args) -> int:
    fam = parse_family(args.family)
    rows = moment_table(fam, range(fam.n_min, args.n + 1))
    asym_cols = sorted(rows[0].asymptotics) if rows else []
    table = Table(
        ["n", "mean", "mean_float", "variance", "variance_float",
         "third_central", "fourth_central"] + asym_cols
    )
    for row in rows:
        rep = row.report
        table.add(
            rep.n, rep.mean, float(rep.mean), rep.variance, float(rep.variance),
            rep.third_central, rep.fourth_central,
            *[row.asymptotics[c] for c in asym_cols],
        )
    _emit(table, args)
    return 0


def cmd_clt(args) -> int:
    ns = [int(tok) for tok in args.n_set.split(",") if tok]
    res = clt_table(args.family, ns, min_n=args.min_n, fit_min_n=args.fit_min)
    table = Table(["n", "mean", "sd", "K", "scaled"])
    for r in res.records:
        table.add(r.n, r.mean, r.sd, r.K, r.scaled)
    table.trailer = {
        "fit": {
            "slope": _fmt_float(res.slope),
            "intercept": _fmt_float(res.intercept),
            "max_scaled": _fmt_float(res.max_scaled),
            "skipped": list(res.skipped),
        }
    }
    _emit(table, args)
    return 0


def cmd_identities(args) -> int:
    which = args.check.replace("-", "_")
    table = Table(["check", "n", "lhs", "rhs", "holds", "offset_used"])
    failures = 0
    for n in range(1, args.n_max + 1):
        rep = identity_check(which, n)
        table.add(rep.which, rep.n, rep.lhs, rep.rhs, rep.holds, rep.offset_used)
        if not rep.holds:
            failures += 1
    _emit(table, args)
    if failures:
        print(f"error: {failures} identity failures", file=sys.stderr)
        return IDENTITY_EXIT
    return 0


def cmd_decompose(args) -> int:
    traj = simulate(args.process, args.n, seed=args.seed, record=True)
    residual = reconstruct(traj)
    dec = traj.decomposition
    table = Table(["part", "position", "size", "stage", "x", "alpha", "gamma"])
    for idx, p in enumerate(dec.parts, start=1):
        table.add(idx, p.position, p.size, p.stage, p.x, p.alpha, p.gamma)
    table.trailer = {
        "run": {
            "process": traj.kind.value,
            "n": traj.n,
            "seed": traj.seed,
            "final": traj.final,
            "composition": "".join(str(p) for p in dec.composition),
            "residual": str(residual),
        }
    }
    _emit(table, args)
    return 0 if residual == 0 else RESIDUAL_EXIT


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="descentlab",
        description="exact descent-statistic triangles, jump processes, "
        "and normal-approximation diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("csv", "json", "tsv"), default="csv")
        p.add_argument("--seed", type=int, default=0, help="64-bit master seed")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--out", default=None, help="output path (default stdout)")

    families = ("eulerian", "involution", "derangement", "excedance", "fibonacci")
    processes = ("involution", "derangement", "fibonacci", "excedance")

    p = sub.add_parser("triangle", help="emit triangle rows")
    p.add_argument("--family", choices=families, required=True)
    p.add_argument("--n", type=int, required=True)
    common(p)
    p.set_defaults(func=cmd_triangle)

    p = sub.add_parser("simulate", help="Monte Carlo runs of a jump process")
    p.add_argument("--process", choices=processes, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--replicates", type=int, default=10_000)
    p.add_argument("--record", default=None,
                   help="write a per-replicate decomposition audit file")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("moments", help="exact moment table with asymptotics")
    p.add_argument("--family", choices=families, required=True)
    p.add_argument("--n", type=int, required=True)
    common(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("clt", help="Kolmogorov distances and rate fit")
    p.add_argument("--family", choices=families, required=True)
    p.add_argument("--n-set", required=True, help="comma-separated row sizes")
    p.add_argument("--min-n", type=int, default=10)
    p.add_argument("--fit-min", type=int, default=20)
    common(p)
    p.set_defaults(func=cmd_clt)

    p = sub.add_parser("identities", help="exact identity checks")
    p.add_argument(
        "--check",
        choices=tuple(c.replace("_", "-") for c in IDENTITY_CHECKS),
        required=True,
    )
    p.add_argument("--n-max", type=int, required=True)
    common(p)
    p.set_defaults(func=cmd_identities)

    p = sub.add_parser("decompose", help="dump one recorded trajectory")
    p.add_argument("--process", choices=processes, required=True)
    p.add_argument("--n", type=int, required=True)
    common(p)
    p.set_defaults(func=cmd_decompose)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:  # domain errors from bad flag values
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
