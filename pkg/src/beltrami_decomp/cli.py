"""Command-line interface.

Every command that writes a directory also drops a ``meta.cfg`` sidecar
(``key = value``) carrying the grid size and, for synthetic data, the
ground-truth labels, so later commands can run without ``--grid``.
"""

import argparse
import logging
import os
import sys
from dataclasses import fields, replace

import numpy as np

from . import formats
from .errors import BeltramiError, FormatError
from .imaging import warp_image
from .mesh import build_domain
from .pipeline import KINDS, PipelineConfig, build, make_report, run_pipeline, to_maps, write_summary
from .rpca import AdmmParams, DecompositionResult, decompose
from .synth import PRESETS, SequenceSpec, generate_sequence

log = logging.getLogger("beltrami_decomp")

META = "meta.cfg"


# ---------------------------------------------------------------- spec files

def _int_list(text):
    return tuple(int(t) for t in text.replace(",", " ").split())


def _grid(text):
    parts = text.lower().replace("x", " ").replace(",", " ").split()
    if len(parts) != 2:
        raise FormatError(f"grid must look like 64x64, got {text!r}")
    return int(parts[0]), int(parts[1])


_SPEC_TYPES = {f.name: f.type for f in fields(SequenceSpec)}
_ALIASES = {"perturbed": "perturbed_cycles", "cycle": "cycle_length", "c": "cycle_length", "R": "cycles"}


def spec_from_mapping(entries):
    """Build a :class:`SequenceSpec` from parsed ``key = value`` pairs."""
    entries = dict(entries)
    base = PRESETS.get(entries.pop("preset", "desk"))
    if base is None:
        raise FormatError(f"unknown preset; choose from {sorted(PRESETS)}")
    kw = {}
    if "grid" in entries:
        kw["m"], kw["n"] = _grid(entries.pop("grid"))
    for key, value in entries.items():
        name = _ALIASES.get(key, key)
        if name not in _SPEC_TYPES:
            raise FormatError(f"unknown spec key {key!r}")
        kind = _SPEC_TYPES[name]
        try:
            if kind in ("tuple", tuple):
                kw[name] = _int_list(value)
            elif kind in ("int", int):
                kw[name] = int(value)
            elif kind in ("float", float):
                kw[name] = float(value)
            else:
                kw[name] = value
        except ValueError as exc:
            raise FormatError(f"bad value for {key!r}: {value!r}") from exc
    return replace(base, **kw)


def _load_spec(path, seed=None):
    spec = spec_from_mapping(formats.read_spec_file(path)) if path else PRESETS["desk"]
    return spec if seed is None else replace(spec, seed=seed)


# ------------------------------------------------------------------ sidecars

def _write_meta(out_dir, **entries):
    with open(os.path.join(out_dir, META), "w") as fh:
        for key, value in entries.items():
            if value is None:
                continue
            if isinstance(value, (list, tuple, np.ndarray)):
                value = ", ".join(str(int(v)) for v in value)
            fh.write(f"{key} = {value}\n")


def _find_meta(*paths):
    for p in paths:
        if not p:
            continue
        d = p if os.path.isdir(p) else os.path.dirname(os.path.abspath(p))
        for cand in (d, os.path.dirname(d)):
            f = os.path.join(cand, META)
            if os.path.isfile(f):
                return formats.read_spec_file(f)
    return {}


def _resolve_grid(args, meta):
    if getattr(args, "grid", None):
        return _grid(args.grid)
    if "m" in meta and "n" in meta:
        return int(meta["m"]), int(meta["n"])
    raise FormatError("grid size unknown: pass --grid MxN")


def _labels(meta):
    if "perturbed" not in meta or "frames" not in meta:
        return None
    labels = np.zeros(int(meta["frames"]), dtype=bool)
    labels[list(_int_list(meta["perturbed"]))] = True
    return labels


def _maps_from_matrix(matrix):
    return [matrix[:, j].copy() for j in range(matrix.shape[1])]


def _out(args, default="."):
    out = args.out_dir or default
    os.makedirs(out, exist_ok=True)
    return out


def _params(args):
    kw = {}
    if args.alpha is not None:
        kw["alpha"] = args.alpha
    if args.beta_cap is not None:
        kw["beta_cap"] = args.beta_cap
    if args.tol is not None:
        kw["tol"] = args.tol
    if args.max_iters is not None:
        kw["max_iter"] = args.max_iters
    if args.rank_tol is not None:
        kw["rank_tol"] = args.rank_tol
    return AdmmParams(**kw)


# ------------------------------------------------------------------ commands

def cmd_synth(args):
    spec = _load_spec(args.spec, args.seed)
    ds = generate_sequence(spec)
    out = _out(args, "dataset")
    formats.write_frames(os.path.join(out, "frames"), ds.frames)
    formats.write_matrix(os.path.join(out, "maps.cmx"), np.column_stack(ds.maps))
    formats.write_matrix(os.path.join(out, "clean_maps.cmx"), np.column_stack(ds.clean_maps))
    _write_meta(out, m=spec.m, n=spec.n, frames=spec.n_frames, reference_index=ds.reference_index,
                distinct_frames=spec.distinct_frames, seed=spec.seed, perturbed=ds.perturbed_frames)
    print(f"wrote {spec.n_frames} frames ({len(ds.perturbed_frames)} perturbed) to {out}")
    return 0


def cmd_describe(args):
    meta = _find_meta(args.maps)
    m, n = _resolve_grid(args, meta)
    domain = build_domain(m, n)
    maps = _maps_from_matrix(formats.read_matrix(args.maps))
    desc = build(maps, domain, args.descriptor_kind)
    out = _out(args)
    formats.write_matrix(os.path.join(out, "descriptor.cmx"), desc.matrix)
    _write_meta(out, m=m, n=n, kind=args.descriptor_kind, frames=meta.get("frames"),
                perturbed=meta.get("perturbed") and _int_list(meta["perturbed"]))
    print(f"{args.descriptor_kind} descriptor {desc.shape[0]}x{desc.shape[1]} -> {out}")
    return 0


def cmd_decompose(args):
    L = formats.read_matrix(args.descriptor)
    dec = decompose(L, _params(args))
    out = _out(args)
    formats.write_matrix(os.path.join(out, "N.cmx"), dec.low_rank)
    formats.write_matrix(os.path.join(out, "A.cmx"), dec.sparse)
    formats.write_history(os.path.join(out, "history.csv"), dec.history)
    write_summary(os.path.join(out, "decomposition.cfg"), dec)
    meta = _find_meta(args.descriptor)
    if meta and os.path.abspath(out) != os.path.dirname(os.path.abspath(args.descriptor)):
        _write_meta(out, **meta)
    state = "converged" if dec.converged else "did not converge"
    print(f"{state} after {dec.iterations} iterations; rank(N) = {dec.rank}, residual {dec.residual:.3e}")
    return 0 if dec.converged else 3


def cmd_reconstruct(args):
    meta = _find_meta(args.matrix)
    m, n = _resolve_grid(args, meta)
    domain = build_domain(m, n)
    kind = args.descriptor_kind or meta.get("kind", "beltrami")
    matrix = formats.read_matrix(args.matrix)
    maps, clamped = to_maps(matrix, domain, kind)
    out = _out(args)
    formats.write_matrix(os.path.join(out, "maps.cmx"), np.column_stack(maps))
    if args.reference:
        ref = formats.read_pgm(args.reference)
        formats.write_frames(os.path.join(out, "frames"), [warp_image(ref, f, domain) for f in maps])
    print(f"reconstructed {len(maps)} maps ({clamped} clamped entries) -> {out}")
    return 0


def cmd_report(args):
    run = args.run_dir
    meta = _find_meta(run)
    m, n = _resolve_grid(args, meta)
    domain = build_domain(m, n)
    kind = args.descriptor_kind or meta.get("kind", "beltrami")
    L = formats.read_matrix(os.path.join(run, "descriptor.cmx"))
    N = formats.read_matrix(os.path.join(run, "N.cmx"))
    A = formats.read_matrix(os.path.join(run, "A.cmx"))
    summary = formats.read_spec_file(os.path.join(run, "decomposition.cfg"))
    dec = DecompositionResult(
        N, A, None, [], int(summary["rank"]), int(summary["iterations"]),
        bool(int(summary["converged"])), float(summary["alpha"]),
    )
    paths = [os.path.join(run, f) for f in ("lowrank_maps.cmx", "sparse_maps.cmx")]
    clamped = 0
    if all(os.path.isfile(p) for p in paths):
        low_maps, sparse_maps = (_maps_from_matrix(formats.read_matrix(p)) for p in paths)
    else:
        low_maps, c1 = to_maps(N, domain, kind)
        sparse_maps, c2 = to_maps(A, domain, kind)
        clamped = c1 + c2
    report = make_report(L, dec, low_maps, sparse_maps, domain, kind=kind,
                         rank_tol=args.rank_tol or 1e-8, clamped=clamped, labels=_labels(meta))
    report.residual = float(summary["residual"])
    out = _out(args, run)
    with open(os.path.join(out, "report.txt"), "w") as fh:
        fh.write(report.to_text())
    with open(os.path.join(out, "report.csv"), "w", newline="") as fh:
        fh.write(report.to_csv())
    sys.stdout.write(report.to_text())
    return 0


def cmd_pipeline(args):
    source = args.source
    out = _out(args, "run")
    if os.path.isdir(source):
        meta = _find_meta(source)
        m, n = _resolve_grid(args, meta)
        domain = build_domain(m, n)
        maps = _maps_from_matrix(formats.read_matrix(os.path.join(source, "maps.cmx")))
        frames = formats.read_frames(os.path.join(source, "frames"))
        ref_index = args.ref_frame if args.ref_frame is not None else int(meta.get("reference_index", 0))
        reference = formats.read_pgm(args.reference) if args.reference else frames[ref_index]
        labels = _labels(meta)
    elif source.endswith(".cmx"):
        meta = _find_meta(source)
        m, n = _resolve_grid(args, meta)
        domain = build_domain(m, n)
        maps = _maps_from_matrix(formats.read_matrix(source))
        if not args.reference:
            raise FormatError("a maps file needs --reference IMAGE.pgm")
        reference = formats.read_pgm(args.reference)
        ref_index = args.ref_frame or 0
        labels = _labels(meta)
    else:
        spec = _load_spec(source, args.seed)
        ds = generate_sequence(spec)
        domain, maps, labels = ds.domain, ds.maps, ds.perturbed
        ref_index = args.ref_frame if args.ref_frame is not None else ds.reference_index
        reference = ds.frames[ref_index]
        m, n = spec.m, spec.n
    config = PipelineConfig(
        reference_index=ref_index, params=_params(args), rank_tol=args.rank_tol or 1e-8,
        kind=args.descriptor_kind or "beltrami", out_dir=out,
    )
    result = run_pipeline(maps, domain, reference, config, labels=labels)
    _write_meta(out, m=m, n=n, kind=config.kind, frames=len(maps), reference_index=ref_index,
                perturbed=None if labels is None else np.flatnonzero(labels))
    sys.stdout.write(result.report.to_text())
    return 0 if result.report.converged else 3


# -------------------------------------------------------------------- parser

def _admm_flags(p):
    g = p.add_argument_group("decomposition")
    g.add_argument("--alpha", type=float, help="sparsity weight (default 1/sqrt(max(rows, cols)))")
    g.add_argument("--beta-cap", type=int, metavar="N", help="exponent cap of the penalty schedule (default 40)")
    g.add_argument("--tol", type=float, help="relative Frobenius residual to stop at (default 1e-7)")
    g.add_argument("--max-iters", type=int, help="iteration limit (default 500)")
    g.add_argument("--rank-tol", type=float, help="relative singular-value cutoff for ranks (default 1e-8)")


def _kind_flag(p, default="beltrami"):
    p.add_argument("--descriptor-kind", choices=KINDS, default=default)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="beltrami-decomp",
        description="Split deformation sequences into periodic and abnormal parts.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic circle dataset from a key = value spec file")
    p.add_argument("spec", nargs="?", help="spec file (defaults to the desk preset)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("describe", help="maps (CMX1, |V| x t) -> descriptor")
    p.add_argument("maps")
    p.add_argument("--grid", help="grid size as MxN")
    _kind_flag(p)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("decompose", help="descriptor -> N, A, history")
    p.add_argument("descriptor")
    _admm_flags(p)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("reconstruct", help="descriptor-shaped matrix -> maps -> warped frames")
    p.add_argument("matrix")
    p.add_argument("--grid", help="grid size as MxN")
    _kind_flag(p, default=None)
    p.add_argument("--reference", help="PGM image to warp by every map")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("report", help="summarize a decomposition directory as text and CSV")
    p.add_argument("run_dir")
    p.add_argument("--grid", help="grid size as MxN")
    _kind_flag(p, default=None)
    p.add_argument("--rank-tol", type=float)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pipeline", help="end to end: dataset dir, maps file or spec file -> outputs")
    p.add_argument("source", help="synth output directory, maps .cmx file, or spec file")
    p.add_argument("--grid", help="grid size as MxN")
    p.add_argument("--reference", help="reference PGM (required for a bare maps file)")
    p.add_argument("--ref-frame", type=int, help="index of the reference frame")
    p.add_argument("--seed", type=int)
    _kind_flag(p)
    _admm_flags(p)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (BeltramiError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
