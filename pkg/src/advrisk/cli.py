"""``advrisk`` command-line runner.

CSV goes to ``--out`` (or stdout); human-readable reports go to stderr.
Exit codes: 0 success, 1 a checked inequality failed, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import experiments as ex
from .attack import UnsupportedBudget
from .model import (GaussianMixture, PerturbationBudget, SquaresDistribution2D, read_csv, sample,
                    squares_bayes_classifier, write_csv)
from .numerics import NormKind
from .risk import (Loss, RiskReport, UnsupportedRisk, cf_excess_adv_risk, cf_new_adv_risk_bound,
                   cf_standard_risk, cf_worst_case_adv_risk, mc_many, reports_to_csv)
from .svg import line_plot
from .train import GaussianInit, TrainConfig, TrainingDiverged, train, write_trace_csv


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# flag parsing


def parse_grid(text: str) -> list:
    """``"0.5"`` -> [0.5]; ``"0:1.5:0.25"`` -> inclusive range; ``"0.1,1,10"`` -> list."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise UsageError(f"grid {text!r} must look like a:b:step")
            a, b, step = parts
            if not step > 0 or b < a:
                raise UsageError(f"grid {text!r} needs step > 0 and b >= a")
            count = int(math.floor((b - a) / step + 1e-9)) + 1
            return [round(a + i * step, 12) for i in range(count)]
        values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"cannot parse {text!r} as a number, list, or a:b:step grid") from None
    if not values:
        raise UsageError("empty grid")
    if not all(math.isfinite(v) for v in values):
        raise UsageError(f"non-finite value in {text!r}")
    return values


def single(text: Optional[str], flag: str, default: float) -> float:
    if text is None:
        return default
    values = parse_grid(text)
    if len(values) != 1:
        raise UsageError(f"{flag} takes a single value here, got {text!r}")
    return values[0]


def parse_vector(text: str, flag: str) -> np.ndarray:
    """Inline comma list, or a path to a CSV/text file of numbers."""
    path = Path(text)
    if path.is_file():
        with path.open(newline="") as fh:
            cells = [c for row in csv.reader(fh) for c in row if c.strip()]
    else:
        cells = [c for c in text.split(",") if c.strip()]
    try:
        vec = np.array([float(c) for c in cells])
    except ValueError:
        raise UsageError(f"{flag}: cannot parse {text!r} as a vector") from None
    if vec.size == 0:
        raise UsageError(f"{flag}: empty vector")
    return vec


def emit_csv(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc}") from exc


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_svg(svg: str, out: Optional[str], explicit: Optional[str]) -> Optional[str]:
    path = explicit or (str(Path(out).with_suffix(".svg")) if out else None)
    if path is None:
        return None
    try:
        Path(path).write_text(svg)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def report(text: str) -> None:
    print(text, file=sys.stderr)


def mixture_from_args(args) -> GaussianMixture:
    if args.w_star is not None:
        w_star = parse_vector(args.w_star, "--w-star")
    else:
        d = args.d or 2
        k = args.k or d
        w_star = np.zeros(d)
        w_star[:k] = 1.0 / math.sqrt(k)
    d = w_star.size
    mask = None
    if args.k is not None:
        if not 1 <= args.k <= d:
            raise UsageError(f"--k must be in [1, {d}]")
        mask = np.arange(d) < args.k
    sigma = 1.0 if args.sigma is None else args.sigma
    return GaussianMixture(w_star, sigma, mask)


def data_from_args(args, dist, n_default: int):
    if getattr(args, "data", None):
        return read_csv(args.data)
    return sample(dist, args.n or n_default, args.seed)


# --------------------------------------------------------------------------
# commands


def cmd_fig_toy(args) -> int:
    eps_grid = parse_grid(args.eps or "0:1.5:0.25")
    lam_grid = parse_grid(args.lam or "0.1,1,10")
    rep = ex.fig_toy(eps_grid, lam_grid, n_train=args.n or 100_000, n_eval=args.n_eval, seed=args.seed,
                     iters=args.iters, lr=args.lr,
                     progress=lambda e, l, r: report(f"eps={e:g} lambda={l:g} std_risk={r.value:.5f}"))
    emit_csv(rows_to_csv(rep.header, rep.rows), args.out)
    series = {f"lambda={lam:g}": ([r[0] for r in rep.rows if r[1] == lam], [r[2] for r in rep.rows if r[1] == lam])
              for lam in lam_grid}
    svg = line_plot(series, "squares: standard 0/1 risk of the joint minimiser", "eps", "standard 0/1 risk",
                    hlines=[(SquaresDistribution2D().bayes_risk, "Bayes 0.3")])
    write_svg(svg, args.out, args.svg)
    report(rep.summary())
    return 0 if rep.passed else 1


def cmd_check_thm(args) -> int:
    which = args.id
    if which == "5":
        rep = ex.check_restricted_class(d=args.d or 100, n=args.n or 1_000_000, seed=args.seed)
    elif which == "6":
        rep = ex.check_noncalibration(d=args.d or 1000, k=args.k or 4, n=args.n or 1_000_000, seed=args.seed)
    elif which == "7":
        rep = ex.check_gd_invariance(d=args.d or 200, k=args.k or 4, n_train=args.n or 20_000,
                                     n_eval=args.n_eval, seed=args.seed)
    elif which == "nomargin":
        rep = ex.check_nomargin(eps=single(args.eps, "--eps", 1.5), lam=single(args.lam, "--lambda", 10.0),
                                n_train=args.n or 100_000, n_eval=args.n_eval, seed=args.seed)
    else:
        eps = None if args.eps is None else single(args.eps, "--eps", 0.0)
        rep = ex.check_regularization(n=args.n or 100_000, seed=args.seed, eps=eps,
                                      lam=single(args.lam, "--lambda", 1.0), norm=args.norm)
    emit_csv(rows_to_csv(rep.header, rep.rows), args.out)
    report(rep.summary())
    return 0 if rep.passed else 1


def cmd_lambda_sweep(args) -> int:
    lam_grid = parse_grid(args.lam or "0,0.5,1,2,4")
    rep = ex.check_lambda_sweep(d=args.d or 20, norm=args.w_norm, sigma=args.sigma or 1.0,
                                eps=single(args.eps, "--eps", 0.2), lambda_grid=lam_grid,
                                n=args.n or 100_000, n_eval=args.n_eval, seed=args.seed, iters=args.iters,
                                lr=args.lr, kind=args.norm)
    emit_csv(rows_to_csv(rep.header, rep.rows), args.out)
    lams = [r[0] for r in rep.rows]
    svg = line_plot({"Standard01": (lams, [r[1] for r in rep.rows]),
                     "GAdv01": (lams, [r[3] for r in rep.rows]),
                     "joint": (lams, [r[5] for r in rep.rows])},
                    "mixture: risks of the joint minimiser vs lambda", "lambda", "0/1 risk")
    write_svg(svg, args.out, args.svg)
    report(rep.summary())
    return 0 if rep.passed else 1


def cmd_risk(args) -> int:
    eps = single(args.eps, "--eps", 0.1)
    budget = PerturbationBudget(NormKind.parse(args.norm), eps)
    reports = []
    if args.dist == "squares":
        dist = SquaresDistribution2D()
        bayes = squares_bayes_classifier().w
    else:
        dist = mixture_from_args(args)
        bayes = dist.w_star
    f = parse_vector(args.f, "--f") if args.f else bayes
    g = parse_vector(args.g, "--g") if args.g else bayes
    for name, vec in (("--f", f), ("--g", g)):
        if vec.size != dist.d:
            raise UsageError(f"{name} has dimension {vec.size} but the distribution has d={dist.d}")
    if isinstance(dist, GaussianMixture):
        reports += [cf_standard_risk(f, dist), cf_worst_case_adv_risk(f, dist, budget),
                    cf_excess_adv_risk(f, dist, budget)]
        if args.g is None:
            reports.append(cf_new_adv_risk_bound(f, dist, budget))
    data = data_from_args(args, dist, 100_000)
    if data.d != dist.d:
        raise UsageError(f"--data has d={data.d} but the distribution has d={dist.d}")
    reqs = [(which, f, g, budget, loss) for which in ("standard", "worst_case", "gadv", "hadv")
            for loss in (Loss.ZERO_ONE, Loss.LOGISTIC)]
    if budget.kind is NormKind.LINF:
        reqs.append(("radv", f, g, budget, Loss.ZERO_ONE))
    reports += [r.with_context(seed=args.seed) for r in mc_many(reqs, data)]
    emit_csv(reports_to_csv(reports), args.out)
    return 0


def cmd_train(args) -> int:
    if args.dist == "squares":
        dist = SquaresDistribution2D()
    else:
        dist = mixture_from_args(args)
    data = data_from_args(args, dist, 100_000)
    budget = PerturbationBudget(NormKind.parse(args.norm), single(args.eps, "--eps", 0.0))
    init = GaussianInit(args.init_scale, args.seed) if args.init_scale else None
    cfg = TrainConfig(lam=single(args.lam, "--lambda", 0.0), budget=budget, lr=args.lr, iters=args.iters,
                      init=init, record_trace=True)
    result = train(data, cfg)
    if args.out:
        write_trace_csv(result, args.out)
    else:
        buf = io.StringIO()
        buf.write(",".join(f"w{i}" for i in range(data.d)) + "\n")
        buf.write(",".join(repr(float(v)) for v in result.w_final.w) + "\n")
        sys.stdout.write(buf.getvalue())
    std, gadv = mc_many([("standard", result.w_final, None, budget, Loss.ZERO_ONE),
                         ("gadv", result.w_final, None, budget, Loss.ZERO_ONE)], data)
    report(f"best iterate {result.best_iter}, objective {result.objective_history[result.best_iter]:.6g}")
    report(f"w = {np.array2string(result.w_final.w, precision=5)}")
    report(f"train Standard01 = {std.value:.5f}, GAdv01 = {gadv.value:.5f}")
    return 0


def cmd_sample(args) -> int:
    dist = SquaresDistribution2D() if args.dist == "squares" else mixture_from_args(args)
    data = sample(dist, args.n or 1000, args.seed)
    if args.out is None:
        raise UsageError("sample needs --out")
    write_csv(data, args.out)
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=0)
    shared.add_argument("--n", type=int, default=None, help="sample count (training size for sweeps)")
    shared.add_argument("--eps", default=None, help="real, list a,b,c or grid a:b:step")
    shared.add_argument("--lambda", dest="lam", default=None, help="real or comma list")
    shared.add_argument("--norm", choices=("linf", "l2"), default="linf")
    shared.add_argument("--out", default=None, help="CSV output path (stdout if omitted)")
    shared.add_argument("--d", type=int, default=None)
    shared.add_argument("--k", type=int, default=None)
    shared.add_argument("--sigma", type=float, default=None)

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument("--lr", type=float, default=0.05)
    training.add_argument("--iters", type=int, default=2000)

    evaluation = argparse.ArgumentParser(add_help=False)
    evaluation.add_argument("--n-eval", type=int, default=1_000_000)

    plot = argparse.ArgumentParser(add_help=False)
    plot.add_argument("--svg", default=None, help="SVG path (default: --out with .svg suffix)")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--dist", choices=("mixture", "squares"), default="mixture")
    model.add_argument("--w-star", default=None, help="inline comma list or CSV path")
    model.add_argument("--data", default=None, help="dataset CSV instead of sampling")

    parser = argparse.ArgumentParser(prog="advrisk", description="Adversarial risk experiments for linear models.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("fig-toy", parents=[shared, training, evaluation, plot],
                       help="standard risk of the joint minimiser on the squares data")
    p.set_defaults(func=cmd_fig_toy)
    p = sub.add_parser("check-thm", parents=[shared, evaluation], help="run one theorem check")
    p.add_argument("id", choices=("5", "6", "7", "nomargin", "reg"))
    p.set_defaults(func=cmd_check_thm)
    p = sub.add_parser("lambda-sweep", parents=[shared, training, evaluation, plot],
                       help="Standard01 / GAdv01 trade-off on the mixture")
    p.add_argument("--w-norm", type=float, default=1.5)
    p.set_defaults(func=cmd_lambda_sweep)
    p = sub.add_parser("risk", parents=[shared, model], help="every supported risk for one (f, g)")
    p.add_argument("--f", default=None, help="classifier weights (default: Bayes rule)")
    p.add_argument("--g", default=None, help="base classifier weights (default: Bayes rule)")
    p.set_defaults(func=cmd_risk)
    p = sub.add_parser("train", parents=[shared, model, training], help="train on the joint objective")
    p.add_argument("--init-scale", type=float, default=None)
    p.set_defaults(func=cmd_train)
    p = sub.add_parser("sample", parents=[shared, model], help="write a sampled dataset to CSV")
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, UnsupportedRisk, UnsupportedBudget, ValueError) as exc:
        print(f"advrisk {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"advrisk {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"advrisk {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
