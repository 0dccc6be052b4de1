"""Command-line entry point: ``hypercube <command> ...``.

Commands
--------
gen         write an operation table
axioms      check group axioms of a table
train       train one model, write trajectory.csv, factors.bin, manifest.json
sweep       fraction x seed generalization sweep to CSV
analyze     structural report (balance, unitarity, representation checks) for saved factors
complexity  best-of-restarts H* estimate
report      AUC per (kind, variant) from sweep CSVs

Errors print one JSON line ``{"error": ..., "message": ...}`` on stderr and
exit nonzero.  Training settings resolve as flags over ``--config`` file
over built-in defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, complexity, diagnostics, io, rep
from .optable import MODULAR_KINDS, SYMMETRIC_VARIANTS, check_axioms, make_modular, make_symmetric, split_cells
from .tensor import eval_full
from .training import REG_KINDS, TrainConfig, h_reg, masked_sq_loss, train

log = logging.getLogger("hypercube")

TRAIN_FIELDS = {f.name for f in dataclasses.fields(TrainConfig)}


class CLIError(Exception):
    """Usage error reported as a one-line message."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError(message)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _need_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {p}")
    return p


def _parse_fractions(text: str) -> list[float]:
    """``start:stop:step`` (stop inclusive) or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError("step must be positive")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 10) for i in range(count)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise CLIError(f"bad --fractions {text!r}: {exc}") from None


def _add_train_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("training (override --config)")
    g.add_argument("--config", help="JSON file with training settings")
    g.add_argument("--lr", type=float)
    g.add_argument("--momentum", type=float)
    g.add_argument("--eps", type=float)
    g.add_argument("--threshold", dest="scheduler_threshold", type=float, help="scheduler imbalance threshold")
    g.add_argument("--max-steps", dest="max_steps", type=int)
    g.add_argument("--log-every", dest="log_every", type=int)
    g.add_argument("--stop-loss", dest="stop_loss", type=float)


def _resolve_config(args, base: TrainConfig, extra_keys=()) -> tuple[TrainConfig, dict]:
    """Layer defaults, then the config file, then explicit flags."""
    values = dataclasses.asdict(base)
    extras = {}
    if getattr(args, "config", None):
        doc = io.read_json(_need_file(args.config))
        if "schema_version" in doc and doc["schema_version"] != io.SCHEMA_VERSION:
            raise io.SchemaError(f"{args.config}: unsupported schema_version {doc['schema_version']!r}")
        for k, v in doc.items():
            if k == "schema_version":
                continue
            if k in TRAIN_FIELDS:
                values[k] = v
            elif k in extra_keys:
                extras[k] = v
            else:
                raise CLIError(f"{args.config}: unknown config key {k!r}")
    for k in TRAIN_FIELDS:
        v = getattr(args, k, None)
        if v is not None:
            values[k] = v
    for k in extra_keys:
        v = getattr(args, k, None)
        if v is not None:
            extras[k] = v
    return TrainConfig(**values), extras


# -- commands -----------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.kind in MODULAR_KINDS:
        if args.p is None:
            raise CLIError(f"--p is required for kind {args.kind!r}")
        op = make_modular(args.kind, args.p)
    elif args.kind == "sym":
        if args.m is None:
            raise CLIError("--m is required for kind 'sym'")
        op = make_symmetric(args.m, args.variant)
    else:
        raise CLIError(f"unknown kind {args.kind!r}; expected one of {MODULAR_KINDS + ('sym',)}")
    out = Path(args.out)
    io.save_table(op, out)
    cfg = {"kind": args.kind, "p": args.p, "m": args.m, "variant": args.variant}
    io.write_json(out.with_name(out.name + ".manifest.json"),
                  io.make_manifest("gen", cfg, {}, outputs=[out]))
    print(f"wrote {op.kind} table (n={op.n}) to {out}")
    return 0


def cmd_axioms(args) -> int:
    op = io.load_table(_need_file(args.table))
    r = check_axioms(op)
    fields = {
        "closure": r.closure,
        "associative": r.associative,
        "has_identity": r.has_identity,
        "identity": r.identity,
        "has_inverses": r.has_inverses,
        "is_group": r.is_group,
    }
    for k, v in fields.items():
        print(f"{k} = {json.dumps(v)}")
    return 0


def cmd_train(args) -> int:
    table_path = _need_file(args.table)
    op = io.load_table(table_path)
    base = TrainConfig()
    cfg, extras = _resolve_config(args, base, extra_keys=("fraction", "split_seed"))
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.reg is not None:
        cfg = cfg.replace(reg_kind=args.reg)
    if args.tied:
        cfg = cfg.replace(tied=True)
    fraction = float(extras.get("fraction", 0.6))
    split_seed = int(extras.get("split_seed", cfg.seed))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()

    split = split_cells(op, fraction, split_seed)
    res = train(op, split, cfg)
    traj = out / "trajectory.csv"
    fac = out / "factors.bin"
    io.write_trajectory(res.trajectory, traj)
    io.save_factors(res.params, fac)
    summary = {
        "schema_version": io.SCHEMA_VERSION,
        "status": res.status,
        "steps": res.steps,
        "fired_step": res.fired_step,
        "final": dataclasses.asdict(res.final) if res.trajectory else None,
        "message": res.message,
    }
    summ = out / "summary.json"
    io.write_json(summ, io._jsonable(summary))
    config = dataclasses.asdict(cfg) | {"fraction": fraction, "split_seed": split_seed}
    io.write_json(out / "manifest.json", io.make_manifest(
        "train", config, {"init": cfg.seed, "split": split_seed},
        inputs=[table_path], outputs=[traj, fac, summ], started=started))
    f = res.final
    print(f"status={res.status} steps={res.steps} train_loss={f.train_loss:.3g} "
          f"test_acc={f.test_acc:.4f} fired_step={res.fired_step}")
    return 0 if res.status != "diverged" else 3


def cmd_sweep(args) -> int:
    table_path = _need_file(args.table)
    op = io.load_table(table_path)
    cfg, _ = _resolve_config(args, TrainConfig())
    fractions = _parse_fractions(args.fractions)
    seeds = list(range(args.seed0, args.seed0 + args.seeds))
    workers = args.workers if args.workers is not None else complexity.default_workers()
    started = _now()
    result = complexity.generalization_sweep(op, args.variant, fractions, seeds, cfg, workers=workers)
    out = Path(args.out)
    io.write_sweep(result.rows, out)
    empty = sorted({r.fraction for r in result.rows if r.test_empty})
    config = dataclasses.asdict(cfg) | {"variant": args.variant, "fractions": fractions, "workers": workers}
    io.write_json(out.with_name(out.name + ".manifest.json"), io.make_manifest(
        "sweep", config, {"grid": seeds}, inputs=[table_path], outputs=[out], started=started,
        extra={"auc": result.auc, "empty_test_fractions": empty,
               "diverged": [(r.fraction, r.seed) for r in result.rows if r.status == "diverged"]}))
    print(f"{op.kind} {args.variant} auc={result.auc:.4f} runs={len(result.rows)}")
    return 0


def _identity_residuals(aligned, e):
    eye = np.eye(aligned.n)
    return {
        "A_e": float(np.linalg.norm(aligned.A[e] - eye)),
        "B_e": float(np.linalg.norm(aligned.B[e] - eye)),
        "C_e": float(np.linalg.norm(aligned.C[e] - eye)),
    }


def analyze_factors(params, op, anchor=None, dup_tol: float = 1e-3) -> dict:
    """Structural report for trained factors on a table."""
    T = eval_full(params)
    mask = op.defined
    imb = diagnostics.imbalance(params)
    uni = diagnostics.unitarity(params)
    spectra = diagnostics.factor_spectra(params)
    D = op.data_tensor()
    report = {
        "schema_version": io.SCHEMA_VERSION,
        "kind": op.kind,
        "n": op.n,
        "full_table_loss": float(np.sum((T - D)[mask] ** 2)),
        "full_table_acc": diagnostics.accuracy_from_tensor(T, op, mask),
        "h_value": h_reg(params),
        "imbalance": dataclasses.asdict(imb) | {"aggregate": imb.aggregate},
        "unitarity": {"c_dev": uni.c_dev, "s_dev": uni.s_dev, "alpha_sq": uni.alpha_sq},
        "spectra": None if spectra is None else spectra.tolist(),
    }
    # slices fed identical table rows should coincide
    dups = []
    for g in range(op.n):
        for h in range(g + 1, op.n):
            if np.array_equal(op.table[g], op.table[h]):
                dups.append({"pair": [g, h], "distance": rep.slice_distance(params.A, g, h)})
    report["duplicate_rows"] = dups

    e = op.identity if anchor is None else anchor
    if e is None:
        report["representation"] = None
        report["representation_note"] = "no identity element; pass --anchor to align on a chosen slice"
        return report
    try:
        aligned, change = rep.identity_basis_change(params, e)
    except ValueError as exc:
        report["representation"] = None
        report["representation_note"] = str(exc)
        return report
    rr = rep.rep_checks(aligned, op, e=e)
    report["representation"] = dataclasses.asdict(rr) | {
        "anchor": e,
        "identity_residuals": _identity_residuals(aligned, e),
        "t_change": float(np.max(np.abs(eval_full(aligned) - T))),
        "table_reconstructed": bool(np.array_equal(rep.reconstruct_table(aligned.A)[mask], op.table[mask])),
    }
    return report


def cmd_analyze(args) -> int:
    fac_path = _need_file(args.factors)
    table_path = _need_file(args.table)
    params = io.load_factors(fac_path)
    op = io.load_table(table_path)
    if params.n != op.n:
        raise CLIError(f"factor dimension {params.n} does not match table size {op.n}")
    report = analyze_factors(params, op, anchor=args.anchor)
    out = Path(args.out)
    io.write_json(out, io._jsonable(report))
    io.write_json(out.with_name(out.name + ".manifest.json"), io.make_manifest(
        "analyze", {"anchor": args.anchor}, {}, inputs=[fac_path, table_path], outputs=[out]))
    r = report["representation"]
    if r is None:
        print(f"no representation check: {report['representation_note']}")
    else:
        print(f"hom_err={r['hom_err']:.3g} char_err={r['char_err']:.3g} share_err={r['share_err']:.3g} "
              f"transpose_share_err={r['transpose_share_err']:.3g}")
    return 0


def cmd_complexity(args) -> int:
    table_path = _need_file(args.table)
    op = io.load_table(table_path)
    cfg, _ = _resolve_config(args, complexity.hstar_config(tied=args.tied))
    started = _now()
    est = complexity.estimate_hstar(op, cfg, restarts=args.restarts, seed0=args.seed0)
    doc = {
        "schema_version": io.SCHEMA_VERSION,
        "kind": op.kind,
        "n": op.n,
        "tied": args.tied,
        "h_star": est.h_star,
        "fit_residual": est.fit_residual,
        "converged": est.converged,
        "target_3n2": 3 * op.n**2,
        "restarts": [dataclasses.asdict(o) for o in est.restarts],
    }
    out = Path(args.out)
    io.write_json(out, io._jsonable(doc))
    io.write_json(out.with_name(out.name + ".manifest.json"), io.make_manifest(
        "complexity", dataclasses.asdict(cfg) | {"restarts": args.restarts},
        {"restarts": [o.seed for o in est.restarts]}, inputs=[table_path], outputs=[out], started=started))
    print(f"h_star={est.h_star} converged={est.converged}")
    return 0 if est.converged else 4


def cmd_report(args) -> int:
    paths = [_need_file(p) for p in args.inputs]
    rows = [r for p in paths for r in io.read_sweep(p)]
    groups: dict[tuple[str, str], list] = {}
    for r in rows:
        groups.setdefault((r.kind, r.variant), []).append(r)
    summary = [{"kind": k, "variant": v, "auc": complexity.auc_from_rows(rs), "runs": len(rs)}
               for (k, v), rs in sorted(groups.items())]
    for s in summary:
        print(f"{s['kind']} {s['variant']} auc={s['auc']:.6f} runs={s['runs']}")
    if args.out:
        out = Path(args.out)
        io.write_json(out, {"schema_version": io.SCHEMA_VERSION, "summary": summary})
        io.write_json(out.with_name(out.name + ".manifest.json"),
                      io.make_manifest("report", {}, {}, inputs=paths, outputs=[out]))
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hypercube", description="Operation-table completion with trace-product factor cubes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write an operation table")
    g.add_argument("--kind", required=True, help=f"one of {', '.join(MODULAR_KINDS)} or 'sym'")
    g.add_argument("--p", type=int, help="modulus for modular kinds")
    g.add_argument("--m", type=int, help="degree for 'sym'")
    g.add_argument("--variant", default="ab", choices=SYMMETRIC_VARIANTS)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("axioms", help="check group axioms")
    a.add_argument("--table", required=True)
    a.set_defaults(func=cmd_axioms)

    t = sub.add_parser("train", help="train one model")
    t.add_argument("--table", required=True)
    t.add_argument("--fraction", type=float)
    t.add_argument("--seed", type=int)
    t.add_argument("--split-seed", dest="split_seed", type=int, help="defaults to --seed")
    t.add_argument("--reg", choices=REG_KINDS)
    t.add_argument("--tied", action="store_true", help="shared embedding B = A, C = A^T")
    t.add_argument("--out-dir", dest="out_dir", required=True)
    _add_train_flags(t)
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sweep", help="fraction x seed generalization sweep")
    s.add_argument("--table", required=True)
    s.add_argument("--variant", default="hypercube", choices=complexity.VARIANTS)
    s.add_argument("--fractions", default="0.05:0.95:0.05")
    s.add_argument("--seeds", type=int, default=3, help="number of seeds")
    s.add_argument("--seed0", type=int, default=0)
    s.add_argument("--workers", type=int, help=f"default from ${complexity.WORKERS_ENV} or 1")
    s.add_argument("--out", required=True)
    _add_train_flags(s)
    s.set_defaults(func=cmd_sweep)

    n = sub.add_parser("analyze", help="structural report for saved factors")
    n.add_argument("--factors", required=True)
    n.add_argument("--table", required=True)
    n.add_argument("--anchor", type=int, help="slice to align on (defaults to the identity)")
    n.add_argument("--out", required=True)
    n.set_defaults(func=cmd_analyze)

    c = sub.add_parser("complexity", help="estimate H*")
    c.add_argument("--table", required=True)
    c.add_argument("--restarts", type=int, default=3)
    c.add_argument("--seed0", type=int, default=0)
    c.add_argument("--tied", action="store_true")
    c.add_argument("--out", required=True)
    _add_train_flags(c)
    c.set_defaults(func=cmd_complexity)

    r = sub.add_parser("report", help="AUC per (kind, variant) from sweep CSVs")
    r.add_argument("--in", dest="inputs", nargs="+", required=True)
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return p


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CLIError as exc:
        return _fail("usage", str(exc), 2)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CLIError as exc:
        return _fail("usage", str(exc), 2)
    except io.SchemaError as exc:
        return _fail("schema", str(exc), 1)
    except FileNotFoundError as exc:
        return _fail("missing_file", str(exc), 1)
    except (ValueError, IndexError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
