"""Command line front end: ``hypertraffic generate|analyze|scaling``.

Exit codes: 0 success, 2 bad arguments, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import DEFAULT_RESIDUAL_THRESHOLD, alignment_check, fit_scaling
from .ingest import (
    Anonymizer,
    StreamFormatError,
    ValidityFilter,
    anonymize,
    filter_valid,
    read_batches,
    write_binary,
    write_csv,
)
from .matrix import TrafficMatrix
from .quantities import DEGREE_TYPES, QUADRANTS, QUANTITY_NAMES, InternalSet, QuadrantSpec
from .synth import KINDS, TopologySpec, generate, write_sidecar
from .windows import WindowSpec, evaluate_hierarchy

log = logging.getLogger("hypertraffic")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
SIDECAR_SUFFIX = ".internal"


class InputError(Exception):
    pass


class UsageError(Exception):
    pass


def level_tag(window_size):
    return f"level{int(window_size).bit_length() - 1:02d}"


# -- table output ----------------------------------------------------------


def _fmt(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def write_table(path, columns, rows, fmt, meta=None):
    path = Path(path)
    if fmt == "json":
        doc = dict(meta or {})
        doc["columns"] = list(columns)
        doc["rows"] = [[_json_value(v) for v in row] for row in rows]
        path = path.with_suffix(".json")
        path.write_text(json.dumps(doc, indent=1) + "\n")
    else:
        path = path.with_suffix(".tsv")
        with open(path, "w") as f:
            for k, v in (meta or {}).items():
                f.write(f"# {k}: {v}\n")
            f.write("\t".join(columns) + "\n")
            for row in rows:
                f.write("\t".join(_fmt(v) for v in row) + "\n")
    return path


def _json_value(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    return v


def read_table(path):
    """Read a table written by :func:`write_table`; returns (meta, columns, rows)."""
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        cols = doc.pop("columns")
        rows = doc.pop("rows")
        return doc, cols, rows
    meta, cols, rows = {}, None, []
    for line in path.read_text().splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            meta[k] = v
        elif cols is None:
            cols = line.split("\t")
        elif line:
            rows.append([_parse_cell(c) for c in line.split("\t")])
    return meta, cols, rows


def _parse_cell(c):
    for conv in (int, float):
        try:
            return conv(c)
        except ValueError:
            pass
    return c


# -- generate --------------------------------------------------------------


def cmd_generate(args):
    kind = args.topology.replace("-", "_")
    try:
        spec = TopologySpec(
            kind=kind,
            packets=args.packets,
            balanced=args.balanced,
            peers=args.peers,
            zipf_s=args.zipf_s,
            population=args.population,
            seed=args.seed,
        )
    except ValueError as e:
        raise UsageError(str(e)) from None
    stream = generate(spec)
    out = Path(args.out)
    if args.format == "csv":
        write_csv(out, stream.records)
    else:
        write_binary(out, stream.records)
    write_sidecar(str(out) + SIDECAR_SUFFIX, stream.internal)
    links = TrafficMatrix.from_records(stream.records).nnz
    print(f"packets={len(stream)} unique_links={links} out={out}")
    return EXIT_OK


# -- analyze ---------------------------------------------------------------


class _RelabeledSet:
    """Membership test on anonymized IDs via the inverse permutation."""

    def __init__(self, base, anonymizer):
        self.base = base
        self.anonymizer = anonymizer

    def contains(self, ids):
        return self.base.contains(self.anonymizer.invert(ids))


def _parse_distributions(text):
    if text in ("all", None):
        return DEGREE_TYPES
    if text == "none":
        return ()
    kinds = tuple(t.strip().replace("-", "_") for t in text.split(",") if t.strip())
    bad = [k for k in kinds if k not in DEGREE_TYPES]
    if bad:
        raise UsageError(f"unknown distribution(s) {bad}; choose from {list(DEGREE_TYPES)}")
    return kinds


def _parse_idset(text):
    if text is None:
        return None
    try:
        return InternalSet.parse(text)
    except (ValueError, OSError) as e:
        raise UsageError(f"bad ID set {text!r}: {e}") from None


def _records(paths, fmt):
    for p in paths:
        if not Path(p).is_file():
            raise InputError(f"{p}: no such file")
        yield from read_batches(p, None if fmt == "auto" else fmt)


def _internal_for(args):
    if args.internal is not None:
        return _parse_idset(args.internal)
    sidecar = Path(args.inputs[0] + SIDECAR_SUFFIX)
    if sidecar.is_file():
        log.info("using internal set from %s", sidecar)
        return InternalSet.parse(str(sidecar))
    return None


def cmd_analyze(args):
    base = args.base_window
    if base < 2 or base & (base - 1):
        raise UsageError(f"--base-window must be a power of two >= 2, got {base}")
    if args.levels < 1:
        raise UsageError("--levels must be >= 1")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    spec = WindowSpec(base, args.levels)
    kinds = _parse_distributions(args.distributions)
    try:
        vfilter = ValidityFilter(
            allow_src=_parse_idset(args.allow_src),
            deny_src=_parse_idset(args.deny_src),
            allow_dst=_parse_idset(args.allow_dst),
            deny_dst=_parse_idset(args.deny_dst),
        )
    except ValueError as e:
        raise UsageError(str(e)) from None

    internal = None
    if args.quadrant is not None:
        internal = _internal_for(args)
        if internal is None:
            raise UsageError("--quadrant needs --internal (or a .internal sidecar next to the input)")

    records = filter_valid(_records(args.inputs, args.input_format), vfilter)
    if args.anonymize_key:
        try:
            anon = Anonymizer(args.anonymize_key)
        except ValueError as e:
            raise UsageError(str(e)) from None
        records = anonymize(records, anon)
        if internal is not None:
            internal = _RelabeledSet(internal, anon)
    qspec = QuadrantSpec(internal, args.quadrant) if args.quadrant else None

    counted = _Counter(records)
    results = evaluate_hierarchy(counted, spec, qspec, kinds, threads=args.threads)
    if counted.n == 0:
        raise InputError("no valid packets in the input (after filtering)")
    if not results[0].windows:
        raise InputError(f"only {counted.n} valid packets; need at least {base} for one window")

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta_common = {
        "quadrant": args.quadrant or "all",
        "base_window": base,
        "levels": args.levels,
    }
    written = 0
    for r in results:
        if not r.windows:
            log.warning("level %d (N_V=%d) has no complete window", r.level, r.window_size)
            continue
        tag = level_tag(r.window_size)
        meta = dict(meta_common, window_size=r.window_size, windows=len(r))
        rows = [[w.index, *w.quantities.as_tuple()] for w in r.windows]
        write_table(out / f"{tag}_quantities", ["window", *QUANTITY_NAMES], rows, args.format, meta)
        for kind in kinds:
            st = r.stats(kind)
            if st is None:
                rows = []
            else:
                rows = [
                    [i, 2**i, float(m), float(s)] for i, (m, s) in enumerate(zip(st.mean, st.std))
                ]
            write_table(
                out / f"{tag}_{kind}",
                ["bin", "degree", "mean", "std"],
                rows,
                args.format,
                dict(meta, windows_with_nodes=0 if st is None else st.n_windows),
            )
        written += 1
    print(f"packets={counted.n} levels={written} out={out}")
    return EXIT_OK


class _Counter:
    def __init__(self, batches):
        self.batches = batches
        self.n = 0

    def __iter__(self):
        for b in self.batches:
            self.n += len(b)
            yield b


# -- scaling ---------------------------------------------------------------


def load_levels(directory):
    """Per-level quantity tables from an analyze output directory."""
    levels = {}
    for path in sorted(Path(directory).glob("level*_quantities.*")):
        if path.suffix not in (".tsv", ".json"):
            continue
        meta, cols, rows = read_table(path)
        n_v = int(meta["window_size"])
        if n_v in levels:
            continue
        arr = np.array([row[1:] for row in rows], dtype=np.float64).reshape(len(rows), len(cols) - 1)
        levels[n_v] = dict(zip(cols[1:], arr.T))
    return dict(sorted(levels.items()))


def cmd_scaling(args):
    directory = Path(args.input_dir)
    if not directory.is_dir():
        raise InputError(f"{directory}: not a directory")
    try:
        levels = load_levels(directory)
    except (KeyError, ValueError, json.JSONDecodeError) as e:
        raise InputError(f"malformed analyze output: {e}") from None
    if len(levels) < 2:
        raise InputError(f"need analyze output for at least 2 levels, found {len(levels)}")
    sizes = np.array(list(levels), dtype=np.int64)
    n0 = int(sizes[0])
    fit_rows, sample_rows = [], []
    for name in QUANTITY_NAMES:
        series = [levels[int(n)][name] for n in sizes]
        means = np.array([s.mean() for s in series])
        stds = np.array([s.std() for s in series])
        for n, m, s in zip(sizes, means, stds):
            sample_rows.append([name, int(n), float(m), float(s)])
        if np.any(means <= 0):
            fit_rows.append([name, math.nan, math.nan, math.nan, "none", math.nan])
            continue
        fit = fit_scaling(sizes, means, stds, name, args.threshold)
        curves = {int(n): s / n for n, s in zip(sizes, series)}
        disp = alignment_check(curves, 1.0 - fit.exponent, n0)
        fit_rows.append([name, fit.exponent, fit.intercept, fit.residual, fit.verdict, disp])
    out = Path(args.out) if args.out else directory / "scaling"
    meta = {"levels": len(sizes), "min_window": n0, "threshold": args.threshold}
    p = write_table(
        out, ["quantity", "alpha", "intercept", "residual", "verdict", "dispersion"],
        fit_rows, args.format, meta,
    )
    write_table(
        p.with_name(p.stem + "_samples"), ["quantity", "window_size", "mean", "std"],
        sample_rows, args.format, meta,
    )
    for row in fit_rows:
        print("\t".join(_fmt(v) if not isinstance(v, float) else f"{v:.4f}" for v in row))
    return EXIT_OK


# -- argument parsing ------------------------------------------------------


def _pow2_or_int(text):
    text = text.strip()
    if text.startswith("2^"):
        return 1 << int(text[2:])
    return int(text, 0)


def build_parser():
    p = argparse.ArgumentParser(
        prog="hypertraffic",
        description="Multi-temporal analysis of packet source/destination streams.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic topology stream")
    g.add_argument("--topology", required=True, choices=[k.replace("_", "-") for k in KINDS])
    g.add_argument("--packets", required=True, type=_pow2_or_int)
    g.add_argument("--balanced", action="store_true", help="alternate ext->int and int->ext packets")
    g.add_argument("--peers", type=int, default=None, help="fixed supernode peer pool size")
    g.add_argument("--zipf-s", type=float, default=1.0)
    g.add_argument("--population", type=_pow2_or_int, default=1 << 24)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--format", choices=["binary", "csv"], default="binary")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("analyze", help="per-level quantity and distribution tables")
    a.add_argument("inputs", nargs="+", help="stream files, concatenated in order")
    a.add_argument("--input-format", choices=["auto", "binary", "csv"], default="auto")
    a.add_argument("--base-window", type=_pow2_or_int, default=1 << 12)
    a.add_argument("--levels", type=int, default=5)
    a.add_argument("--internal", help="internal IDs: lo-hi, id, CIDR, comma list, or a file")
    a.add_argument("--quadrant", choices=list(QUADRANTS))
    a.add_argument("--distributions", default="all", help="comma list of degree types, all, or none")
    a.add_argument("--allow-src")
    a.add_argument("--deny-src")
    a.add_argument("--allow-dst")
    a.add_argument("--deny-dst")
    a.add_argument("--anonymize-key", help="128-bit key as 32 hex digits")
    a.add_argument("--threads", type=int, default=1)
    a.add_argument("--format", choices=["tsv", "json"], default="tsv")
    a.add_argument("--out-dir", required=True)
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("scaling", help="fit scaling exponents from analyze output")
    s.add_argument("input_dir")
    s.add_argument("--threshold", type=float, default=DEFAULT_RESIDUAL_THRESHOLD)
    s.add_argument("--format", choices=["tsv", "json"], default="tsv")
    s.add_argument("--out", help="output path without extension (default: <input_dir>/scaling)")
    s.set_defaults(func=cmd_scaling)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as e:
        print(f"{parser.prog} {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, StreamFormatError, OSError) as e:
        print(f"{parser.prog} {args.command}: input error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
