"""Command-line entry point.

Subcommands wire datasets, calibration, and the gateway into reproducible
runs: ``sweep`` writes a trade-off curve, ``compare`` scores the routing
policies against each other at matched student fractions, ``mcnemar``
tests two policies for a significant accuracy difference, ``serve`` runs
the gateway, and ``pseudo-label`` lets a Teacher label a raw dataset.

Exit codes: 0 success, 2 usage, 3 data/config error, 4 backend error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

import numpy as np

from .backends import (
    BackendDescriptor,
    dataset_digest,
    generate_pseudo_labels,
    load_classification_dataset,
)
from .calibration import (
    TradeoffCurve,
    crossing_point_threshold,
    mcnemar,
    paired_outcomes,
    record_scores,
    sweep_thresholds,
)
from .errors import BackendError, CascadeflowError
from .routing import RouterPolicy, Specialization

DETERMINISTIC_SCORES = ("energy", "softmax", "entropy")


def _policy(score: str, threshold: float = 0.0, rate: float = 0.5, cbar: int | None = None) -> RouterPolicy:
    spec = Specialization(cbar=cbar) if cbar is not None else None
    return RouterPolicy(score_type=score, threshold=threshold, random_rate=rate, specialization=spec)


def _parse_grid(text: str) -> Sequence[float] | str:
    if text == "auto":
        return "auto"
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise CascadeflowError(f"bad grid {text!r}: {exc}") from exc


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.6g}"


def _print_curve_table(curve: TradeoffCurve) -> None:
    print(f"{'threshold':>12}  {'accuracy':>8}  {'cost':>12}  {'student_frac':>12}")
    for p in curve.points:
        print(
            f"{_fmt(p.threshold):>12}  {p.accuracy:>8.4f}  {_fmt(p.expected_cost):>12}  {p.student_fraction:>12.4f}"
        )


def cmd_sweep(args: argparse.Namespace) -> int:
    records = load_classification_dataset(args.dataset)
    policy = _policy(args.score, rate=args.rate, cbar=args.cbar)
    curve = sweep_thresholds(
        records,
        policy,
        grid=_parse_grid(args.grid),
        seed=args.seed,
        dataset_digest=dataset_digest(records),
    )
    _print_curve_table(curve)
    if args.out:
        from .backends import save_curve

        save_curve(curve, args.out)
        print(f"wrote {len(curve.points)} points to {args.out}")
    return 0


def _accuracy_at_fraction(curve: TradeoffCurve, fraction: float) -> tuple[float, float]:
    """(accuracy, cost) at the curve point nearest the requested student fraction.

    Equidistant points resolve toward the larger fraction (the cheaper side).
    """
    best = min(curve.points, key=lambda p: (abs(p.student_fraction - fraction), -p.student_fraction))
    return best.accuracy, best.expected_cost


def cmd_compare(args: argparse.Namespace) -> int:
    records = load_classification_dataset(args.dataset)
    digest = dataset_digest(records)
    scores = args.score or ["energy", "softmax", "entropy", "random"]
    fractions = [float(v) for v in args.fractions.split(",") if v.strip()]

    report: dict = {
        "kind": "comparison_report",
        "dataset_digest": digest,
        "seed": args.seed,
        "fractions": fractions,
        "policies": {},
    }

    for score in scores:
        if score == "random":
            runs = []
            for k in range(args.random_runs):
                curve = sweep_thresholds(
                    records, _policy("random", rate=args.rate), seed=args.seed + k, dataset_digest=digest
                )
                runs.append([_accuracy_at_fraction(curve, f)[0] for f in fractions])
            arr = np.asarray(runs, dtype=np.float64)
            report["policies"]["random"] = {
                "runs": args.random_runs,
                "accuracy_mean": [float(v) for v in arr.mean(axis=0)],
                "accuracy_spread": [float(v) for v in arr.std(axis=0)],
                "accuracy_runs": [[float(v) for v in row] for row in runs],
            }
        else:
            cbar = args.cbar if score == "energy" else None
            curve = sweep_thresholds(records, _policy(score, cbar=cbar), dataset_digest=digest)
            aligned = [_accuracy_at_fraction(curve, f) for f in fractions]
            report["policies"][score] = {
                "accuracy": [a for a, _ in aligned],
                "expected_cost": [c for _, c in aligned],
                "curve": [
                    {
                        "threshold": ("inf" if p.threshold > 0 else "-inf")
                        if math.isinf(p.threshold)
                        else p.threshold,
                        "accuracy": p.accuracy,
                        "expected_cost": p.expected_cost,
                        "student_fraction": p.student_fraction,
                    }
                    for p in curve.points
                ],
            }

    # Separation diagnostic: energy scores of records the Student gets right vs wrong.
    energy_policy = _policy("energy", cbar=args.cbar)
    evals = record_scores(records, energy_policy)
    correct = np.array(
        [int(np.argmax(np.asarray(r.student_logits, dtype=np.float64))) == r.label for r in records]
    )
    if correct.any() and (~correct).any():
        diag = crossing_point_threshold(evals[correct], evals[~correct])
        report["separation"] = {
            "mean_gap": diag.mean_gap,
            "auroc": diag.auroc,
            "crossing_threshold": diag.crossing_threshold,
            "crossing_found": diag.crossing_found,
        }
        report["chosen_threshold"] = diag.crossing_threshold
        report["rationale"] = (
            "threshold set where the well-fitted score distribution overtakes the poorly-fitted one"
            if diag.crossing_found
            else "distributions never cross; threshold falls back to the midpoint of their means"
        )

    header = f"{'fraction':>8}" + "".join(f"  {s:>14}" for s in scores)
    print(header)
    for i, f in enumerate(fractions):
        row = f"{f:>8.2f}"
        for s in scores:
            entry = report["policies"][s]
            acc = entry["accuracy_mean"][i] if s == "random" else entry["accuracy"][i]
            row += f"  {acc:>14.4f}"
        print(row)
    if "separation" in report:
        sep = report["separation"]
        print(
            f"separation: mean_gap={_fmt(sep['mean_gap'])} auroc={sep['auroc']:.4f} "
            f"crossing={_fmt(sep['crossing_threshold'])} found={sep['crossing_found']}"
        )

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, allow_nan=False)
            fh.write("\n")
        print(f"wrote report to {args.out}")
    return 0


def cmd_mcnemar(args: argparse.Namespace) -> int:
    records = load_classification_dataset(args.dataset)
    policy_a = _policy(args.score_a, threshold=args.threshold_a, rate=args.rate_a, cbar=args.cbar_a)
    policy_b = _policy(args.score_b, threshold=args.threshold_b, rate=args.rate_b, cbar=args.cbar_b)
    b, c = paired_outcomes(records, policy_a, policy_b, seed=args.seed)
    result = mcnemar(b, c)
    odds = "inf" if math.isinf(result.odds_ratio) else f"{result.odds_ratio:.6g}"
    print(f"b (A right, B wrong) = {result.b}")
    print(f"c (A wrong, B right) = {result.c}")
    print(f"p-value = {result.p_value:.6g}")
    print(f"odds ratio = {odds}")
    if result.p_value < 0.05:
        print("significant at alpha = 0.05: reject the null hypothesis of equal policy accuracy")
    else:
        print("no significant difference at alpha = 0.05: the null hypothesis stands")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app, load_gateway_config

    config = load_gateway_config(args.config)
    app = create_app(config)
    server = uvicorn.Server(
        uvicorn.Config(app, host=config.host, port=config.port, log_level=args.log_level)
    )
    try:
        server.run()
    except (OSError, SystemExit) as exc:
        print(f"error: gateway failed to serve: {exc}", file=sys.stderr)
        return 4
    return 0 if server.started else 4


def cmd_pseudo_label(args: argparse.Namespace) -> int:
    if (args.teacher_path is None) == (args.teacher_url is None):
        print("error: give exactly one of --teacher-path / --teacher-url", file=sys.stderr)
        return 2
    if args.teacher_path:
        teacher = BackendDescriptor(
            kind="replay", path=args.teacher_path, role="teacher", cost=args.teacher_cost
        )
    else:
        teacher = BackendDescriptor(
            kind="remote", url=args.teacher_url, timeout_ms=args.timeout_ms, cost=args.teacher_cost
        )
    count = generate_pseudo_labels(args.dataset, teacher, args.out)
    print(f"labeled {count} records -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cascadeflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed(p):
        p.add_argument("--seed", type=int, default=0, help="seed for the random policy's draws")

    p = sub.add_parser("sweep", help="sweep routing thresholds into a trade-off curve")
    p.add_argument("dataset", help="classification JSONL dataset")
    p.add_argument("--score", choices=["energy", "softmax", "entropy", "random"], default="energy")
    p.add_argument("--rate", type=float, default=0.5, help="random policy student rate")
    p.add_argument("--cbar", type=int, default=None, help="specialized Student real-class count")
    p.add_argument("--grid", default="auto", help='"auto" or comma-separated thresholds')
    p.add_argument("--out", default=None, help="write the curve artifact here")
    add_seed(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="compare routing policies at matched student fractions")
    p.add_argument("dataset")
    p.add_argument(
        "--score",
        action="append",
        choices=["energy", "softmax", "entropy", "random"],
        default=None,
        help="policy to include (repeatable; default all four)",
    )
    p.add_argument("--fractions", default="0.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    p.add_argument("--rate", type=float, default=0.5)
    p.add_argument("--cbar", type=int, default=None)
    p.add_argument("--random-runs", type=int, default=5, help="seeded runs behind the random mean/spread")
    p.add_argument("--out", default=None, help="write the JSON report here")
    add_seed(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("mcnemar", help="exact McNemar test between two routing policies")
    p.add_argument("dataset")
    for side in ("a", "b"):
        p.add_argument(f"--score-{side}", choices=["energy", "softmax", "entropy", "random"], default="energy")
        p.add_argument(f"--threshold-{side}", type=float, default=0.0)
        p.add_argument(f"--rate-{side}", type=float, default=0.5)
        p.add_argument(f"--cbar-{side}", type=int, default=None)
    add_seed(p)
    p.set_defaults(func=cmd_mcnemar)

    p = sub.add_parser("serve", help="run the cascade gateway")
    p.add_argument("config", help="gateway config JSON file")
    p.add_argument("--log-level", default="warning")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("pseudo-label", help="label a dataset with a Teacher backend")
    p.add_argument("dataset", help="input classification JSONL (labels ignored)")
    p.add_argument("--out", required=True)
    p.add_argument("--teacher-path", default=None, help="replay dataset holding teacher logits")
    p.add_argument("--teacher-url", default=None, help="remote teacher endpoint")
    p.add_argument("--teacher-cost", type=float, default=0.0)
    p.add_argument("--timeout-ms", type=float, default=5000.0)
    p.set_defaults(func=cmd_pseudo_label)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BackendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (CascadeflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
