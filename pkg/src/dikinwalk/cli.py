"""Command-line entry point.

Exit codes: 0 success, 1 usage or validation error, 2 numeric failure,
3 optimizer budget exhausted (the result is still written).
"""

from __future__ import annotations

import argparse
import itertools
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import BALL, HIT_AND_RUN, BaselineConfig, run_baseline
from .body import load_body, product_body
from .chain import ChainConfig, run_chain
from .diagnostics import (
    bounding_box,
    grid_histogram,
    mixing_proxy,
    autocorrelation,
    product_mixing_experiment,
    startup_checks,
    tv_distance,
    uniformity_report,
)
from .errors import DikinError, InfeasiblePointError, InputError, NumericalError, UnboundedBodyError
from .io import (
    RunManifest,
    atomic_write,
    json_document,
    read_json,
    samples_csv,
    sha256_file,
    table_csv,
)
from .optimizer import EXHAUSTED, OptimizerConfig, las_vegas_optimize
from .rng import make_rng

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_BUDGET = 0, 1, 2, 3

WALK_NAMES = {"dikin": "dikin", "hitrun": HIT_AND_RUN, "hit-and-run": HIT_AND_RUN, "ball": BALL}


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; we reserve 2 for numeric failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("copies must be positive integers")
    return vals


def _walk_list(text: str) -> list[str]:
    names = [w.strip() for w in text.split(",") if w.strip()]
    bad = [w for w in names if w not in WALK_NAMES]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown walk(s) {bad}; choose from dikin, hitrun, ball")
    return names


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dikinwalk", description="Dikin walk sampling and Las Vegas optimization.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, body_flag="--body"):
        sp.add_argument(body_flag, required=True, type=Path, metavar="FILE", help="body JSON file")
        sp.add_argument("--seed", type=int, default=0)
        return sp

    s = common(sub.add_parser("sample", help="run the Dikin walk and write samples as CSV"))
    s.add_argument("--steps", type=int, default=10_000)
    s.add_argument("--burnin", type=int, default=0)
    s.add_argument("--thin", type=int, default=1)
    s.add_argument("--radius", type=float, default=0.05)
    s.add_argument("--out", type=Path, required=True, metavar="FILE",
                   help="CSV path; summary and manifest are written next to it")

    o = common(sub.add_parser("optimize", help="Las Vegas linear optimization"))
    o.add_argument("--objective", type=_float_list, required=True, metavar="c1,...,cn")
    o.add_argument("--eps", type=float, default=0.05)
    o.add_argument("--delta", type=float, default=0.1)
    o.add_argument("--s", type=float, default=1.0)
    o.add_argument("--radius", type=float, default=None, help="walk radius in the transformed body")
    o.add_argument("--c1", type=float, default=1.0)
    o.add_argument("--c2", type=float, default=1.0)
    o.add_argument("--cap-factor", type=float, default=10.0)
    o.add_argument("--hard-cap", type=int, default=None)
    o.add_argument("--out", type=Path, default=None, metavar="FILE")

    c = common(sub.add_parser("check", help="proposal tail and self-concordance startup checks"))
    c.add_argument("--radius", type=float, default=0.05)
    c.add_argument("--out", type=Path, default=None, metavar="FILE")

    d = common(sub.add_parser("diagnose", help="uniformity report against a rejection sampler"))
    d.add_argument("--steps", type=int, default=100_000)
    d.add_argument("--burnin", type=int, default=0)
    d.add_argument("--thin", type=int, default=1)
    d.add_argument("--radius", type=float, default=0.05)
    d.add_argument("--grid", type=int, default=4)
    d.add_argument("--oracle", type=int, default=100_000)
    d.add_argument("--out", type=Path, default=None, metavar="FILE",
                   help="JSON path; histogram and autocorrelation CSVs are written next to it")

    b = common(sub.add_parser("benchmark", help="compare Dikin, Hit-and-Run and Ball walks"))
    b.add_argument("--walks", type=_walk_list, default=["dikin", "hitrun"])
    b.add_argument("--steps", type=int, default=100_000)
    b.add_argument("--burnin", type=int, default=0)
    b.add_argument("--radius", type=float, default=0.05)
    b.add_argument("--ball-radius", type=float, default=None)
    b.add_argument("--grid", type=int, default=4)
    b.add_argument("--out", type=Path, default=None, metavar="FILE")

    x = common(sub.add_parser("product-experiment", help="mixing time on h-fold product bodies"),
               body_flag="--factor")
    x.add_argument("--copies", type=_int_list, default=[1, 2, 4, 8])
    x.add_argument("--steps", type=int, default=100_000)
    x.add_argument("--burnin", type=int, default=0)
    x.add_argument("--radius", type=float, default=0.05)
    x.add_argument("--out", type=Path, default=None, metavar="FILE",
                   help="JSON path; the table is also written as CSV next to it")
    rp = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    rp.add_argument("--manifest", required=True, type=Path, metavar="FILE")
    rp.add_argument("--out", type=Path, default=None, metavar="FILE",
                    help="override the recorded output path")
    return p


# ---------------------------------------------------------------------------


def _resolved(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k == "handler":
            continue
        out[k] = str(v) if isinstance(v, Path) else v
    return out


def _sidecar(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


class _Run:
    """Collects outputs of one command and writes them, manifest last."""

    def __init__(self, args, body_path: Path):
        self.args = args
        self.manifest = RunManifest(
            command=args.command,
            config=_resolved(args),
            spec_sha256={str(body_path): sha256_file(body_path)},
            seed=args.seed,
        )
        self.files: list[tuple[Path, str]] = []

    def resolve(self, config):
        """Record a fully materialized config dataclass in the manifest and return it."""
        self.manifest.config["resolved"] = asdict(config)
        return config

    def add(self, path: Path, text: str):
        self.files.append((path, text))
        self.manifest.outputs.append(str(path))

    def emit(self, payload: dict, kind: str):
        """Main document to ``--out`` (plus sidecar manifest) or to stdout with the manifest inline."""
        out = getattr(self.args, "out", None)
        if out is None:
            for path, text in self.files:
                atomic_write(path, text)
            self.manifest.finish()
            doc = dict(payload)
            doc["manifest"] = self.manifest.to_dict()
            sys.stdout.write(json_document(doc, kind))
            return
        self.add(out, json_document(payload, kind))
        self.flush()

    def flush(self):
        for path, text in self.files:
            atomic_write(path, text)
        self.manifest.finish()
        self.manifest.write(_sidecar(self.args.out, ".manifest.json"))


def cmd_sample(args) -> int:
    r = _Run(args, args.body)
    body = load_body(args.body)
    cfg = r.resolve(ChainConfig(radius=args.radius, seed=args.seed, steps=args.steps,
                                burn_in=args.burnin, thin=args.thin))
    run = run_chain(body, cfg)
    r.add(args.out, samples_csv(run.samples))
    r.add(_sidecar(args.out, ".summary.json"), json_document(run.summary.to_dict(), "summary"))
    r.flush()
    return EXIT_OK


def cmd_optimize(args) -> int:
    r = _Run(args, args.body)
    body = load_body(args.body)
    kw = dict(c=args.objective, eps=args.eps, delta=args.delta, s=args.s, c1=args.c1,
              c2=args.c2, cap_factor=args.cap_factor, hard_cap=args.hard_cap)
    if args.radius is not None:
        kw["radius"] = args.radius
    cfg = r.resolve(OptimizerConfig(**kw))
    res = las_vegas_optimize(body, cfg, seed=args.seed, keep_trace=False)
    r.emit(res.to_dict(), "optimize")
    return EXIT_BUDGET if res.status == EXHAUSTED else EXIT_OK


def cmd_check(args) -> int:
    r = _Run(args, args.body)
    body = load_body(args.body)
    cfg = r.resolve(ChainConfig(radius=args.radius, seed=args.seed))
    rep = startup_checks(body, cfg, seed=args.seed)
    r.emit(rep.to_dict(), "check")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    r = _Run(args, args.body)
    body = load_body(args.body)
    cfg = r.resolve(ChainConfig(radius=args.radius, seed=args.seed, steps=args.steps + args.burnin,
                                burn_in=args.burnin, thin=args.thin))
    run = run_chain(body, cfg)
    rep = uniformity_report(run.samples, body, grid=args.grid, oracle_count=args.oracle,
                            rng=make_rng(args.seed, 1))
    payload = rep.to_dict()
    payload["chain"] = run.summary.to_dict()
    if args.out is not None:
        if rep.histogram:
            rows = [{"cell": i, "chain": p, "oracle": q}
                    for i, (p, q) in enumerate(zip(rep.histogram, rep.oracle_histogram))]
            r.add(_sidecar(args.out, ".histogram.csv"), table_csv(rows))
        acf = autocorrelation(run.samples[:, 0])[:1000]
        r.add(_sidecar(args.out, ".acf.csv"),
              table_csv([{"lag": k, "rho": float(v)} for k, v in enumerate(acf)]))
    r.emit(payload, "diagnose")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    r = _Run(args, args.body)
    body = load_body(args.body)
    kinds = list(dict.fromkeys(WALK_NAMES[w] for w in args.walks))
    if BALL in kinds and args.ball_radius is None:
        raise InputError("--ball-radius is required when the ball walk is benchmarked")
    runs = {}
    rows = []
    for i, kind in enumerate(kinds):
        if kind == "dikin":
            cfg = ChainConfig(radius=args.radius, seed=args.seed, steps=args.steps + args.burnin,
                              burn_in=args.burnin)
            run = run_chain(body, cfg, rng=make_rng(args.seed, 10 + i))
            samples, rate = run.samples, run.summary.acceptance_rate
        else:
            cfg = BaselineConfig(kind=kind, ball_radius=args.ball_radius, seed=args.seed,
                                 steps=args.steps + args.burnin, burn_in=args.burnin)
            run = run_baseline(body, cfg, rng=make_rng(args.seed, 10 + i))
            samples, rate = run.samples, run.move_rate
        runs[kind] = samples
        proxy = mixing_proxy(samples[:, 0])
        rows.append({"walk": kind, "samples": len(samples), "tau": proxy.tau,
                     "tau_stderr": proxy.stderr, "tau_batch_means": proxy.tau_batch_means,
                     "move_rate": rate, "mean_x1": float(samples[:, 0].mean())})
    pairs = []
    if body.n <= 3:
        box = bounding_box(body)
        hists = {k: grid_histogram(s, box, args.grid) for k, s in runs.items()}
        for a, b in itertools.combinations(kinds, 2):
            pairs.append({"a": a, "b": b, "tv": tv_distance(hists[a], hists[b])})
    r.emit({"walks": rows, "pairwise_tv": pairs, "grid": args.grid},
                               "benchmark")
    return EXIT_OK


def cmd_product(args) -> int:
    r = _Run(args, args.factor)
    factor = load_body(args.factor)
    product_body(factor, max(args.copies))  # validate before the long runs
    rows, _ = product_mixing_experiment(factor, args.copies, steps=args.steps, radius=args.radius,
                                        seed=args.seed, burn_in=args.burnin)
    table = [vars(r) for r in rows]
    base = table[0]["tau"] if table else None
    for row in table:
        row["ratio_to_first"] = row["tau"] / base if base else None
    if args.out is not None:
        r.add(_sidecar(args.out, ".csv"), table_csv(table))
    r.emit({"rows": table}, "product-experiment")
    return EXIT_OK


_PATH_KEYS = ("body", "factor", "out")


def replay_args(manifest: dict, out: Path | None = None) -> argparse.Namespace:
    """Rebuild the argument namespace recorded in a manifest, checking body digests."""
    cfg = {k: v for k, v in manifest["config"].items() if k != "resolved"}
    if cfg.get("command") not in HANDLERS:
        raise InputError(f"manifest records unknown command {cfg.get('command')!r}")
    for path, digest in manifest["spec_sha256"].items():
        if not Path(path).is_file() or sha256_file(path) != digest:
            raise InputError(f"body file {path} is missing or differs from the recorded digest")
    for key in _PATH_KEYS:
        if cfg.get(key) is not None:
            cfg[key] = Path(cfg[key])
    if out is not None:
        cfg["out"] = out
    return argparse.Namespace(**cfg)


HANDLERS = {
    "sample": cmd_sample,
    "optimize": cmd_optimize,
    "check": cmd_check,
    "diagnose": cmd_diagnose,
    "benchmark": cmd_benchmark,
    "product-experiment": cmd_product,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "replay":
        try:
            args = replay_args(read_json(args.manifest), args.out)
        except (OSError, ValueError, KeyError) as exc:
            print(f"dikinwalk replay: {exc}", file=sys.stderr)
            return EXIT_USAGE
    body_path = args.factor if args.command == "product-experiment" else args.body
    if not body_path.is_file():
        parser.error(f"body file not found: {body_path}")
    try:
        return HANDLERS[args.command](args)
    except (InputError, InfeasiblePointError, UnboundedBodyError) as exc:
        print(f"dikinwalk {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, DikinError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"dikinwalk {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
