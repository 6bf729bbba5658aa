"""Command line entry point: ``depthfc {simulate,forecast,tune,evaluate,mbd}``.

Exit codes: 0 success, 1 usage or validation error, 2 focal outside the
sample range, 3 no k satisfies the selection rule.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from depthfc import __version__
from depthfc.core import MalformedInputError, PeriodGrid, slice_series, FocalCurve
from depthfc.depth import mbd_restricted
from depthfc.envelope import FocalOutsideRangeError, build_envelope
from depthfc.forecast import (
    PRACTITIONERS,
    WEIGHTINGS,
    EnvelopeTooSmallError,
    band_forecast,
    select_k,
    tune,
)
from depthfc.harness import (
    MCResult,
    Sizes,
    bias_test,
    confidence_test,
    monte_carlo,
    practitioner_exercise,
    trial_seed,
)
from depthfc.io import BAND_HEADER, CHART_HEADER, fmt, read_series, write_csv, write_json, write_series
from depthfc.simulate import MODELS, KernelSpec, PCProcessSpec, simulate_components

EXIT_USAGE = 1
EXIT_EMPTY_IQ = 2
EXIT_INFEASIBLE = 3


class CLIError(Exception):
    def __init__(self, message, code=EXIT_USAGE):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    period_points: int = 50
    cut_index: Optional[int] = None
    period_length: float = 1.0
    alpha: float = 0.1
    window: int = 50
    k: Optional[int] = None
    rule: Optional[list] = None
    weighting: str = "as-written"
    seed: int = 0
    k_max: int = 30
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.cut_index is None:
            self.cut_index = self.period_points // 2
        try:
            self.grid = PeriodGrid(int(self.period_points), int(self.cut_index), float(self.period_length))
        except ValueError as exc:
            raise CLIError(str(exc)) from None
        if not 0 < self.alpha < 1:
            raise CLIError("alpha must lie in (0, 1)")
        if self.window < 1:
            raise CLIError("window must be positive")
        if self.k is not None and self.k < 2:
            raise CLIError("k must be at least 2")
        if self.k_max < 2:
            raise CLIError("k_max must be at least 2")
        if self.weighting not in WEIGHTINGS:
            raise CLIError(f"weighting must be one of {WEIGHTINGS}")
        if self.rule is not None:
            if isinstance(self.rule, str):
                if self.rule not in PRACTITIONERS:
                    raise CLIError(f"unknown rule {self.rule!r}; use two thresholds or one of {list(PRACTITIONERS)}")
                self.rule = list(PRACTITIONERS[self.rule])
            if len(self.rule) != 2:
                raise CLIError("rule needs two thresholds: mean coverage and minimum coverage")
            self.rule = [float(x) for x in self.rule]
        return self


_CONFIG_FIELDS = {f for f in RunConfig.__dataclass_fields__ if f != "extra"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _config_flags(p, window=True):
    S = argparse.SUPPRESS
    p.add_argument("--config", help="JSON file with default values for these flags")
    p.add_argument("-T", "--period-points", dest="period_points", type=int, default=S,
                   help="samples per period (default 50)")
    p.add_argument("--cut", dest="cut_index", type=int, default=S,
                   help="observed samples in the focal period (default T // 2)")
    p.add_argument("--period-length", dest="period_length", type=float, default=S)
    p.add_argument("--alpha", type=float, default=S, help="confidence parameter (default 0.1)")
    if window:
        p.add_argument("-m", "--window", type=int, default=S, help="replayed periods (default 50)")
    p.add_argument("--k-max", dest="k_max", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)


def _load_config(args) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                values.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise CLIError(f"cannot read config {args.config}: {exc}") from None
    values.update({k: v for k, v in vars(args).items() if k not in ("config", "func", "command")})
    known = {k: v for k, v in values.items() if k in _CONFIG_FIELDS}
    extra = {k: v for k, v in values.items() if k not in _CONFIG_FIELDS}
    try:
        cfg = RunConfig(**known, extra=extra)
    except TypeError as exc:
        raise CLIError(str(exc)) from None
    return cfg.validate()


def _read_library(path, cfg: RunConfig):
    try:
        t, v = read_series(path)
        library, focal = slice_series(v, cfg.grid)
    except (OSError, MalformedInputError, ValueError) as exc:
        raise CLIError(str(exc)) from None
    return t, library, focal


def _focal_times(t, library, grid):
    start = len(library) * grid.points_per_period
    h = (t[-1] - t[0]) / (t.size - 1) if t.size > 1 else grid.spacing
    return t[start] + (np.arange(grid.points_per_period)) * h


def cmd_simulate(args):
    cfg = _load_config(args)
    ex = cfg.extra
    model = ex.get("model")
    if model not in MODELS:
        raise CLIError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
    n_periods = int(ex.get("periods", 201))
    p = cfg.period_length
    lf = float(ex.get("lengthscale_f") or 0.5 * p)
    lx = float(ex.get("lengthscale_x") or 0.2 * lf)
    try:
        spec = PCProcessSpec(
            model, cfg.grid, n_periods, seed=cfg.seed,
            x_kernel=KernelSpec("squared_exponential", float(ex.get("sigma_x", 1.0)), lx),
            f_kernel=KernelSpec("periodic", float(ex.get("sigma_f", 1.0)), lf, p),
        )
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    traj = simulate_components(spec)
    n_keep = traj.values.size
    if not ex.get("complete"):
        n_keep -= cfg.grid.n_forecast
    out = Path(ex["out"])
    write_series(out, traj.times[:n_keep], traj.values[:n_keep])
    if ex.get("truth") and n_keep < traj.values.size:
        write_series(ex["truth"], traj.times[n_keep:], traj.values[n_keep:])
    sidecar = {
        "model": model,
        "n_periods": n_periods,
        "seed": cfg.seed,
        "grid": {"points_per_period": cfg.grid.points_per_period,
                 "cut_index": cfg.grid.cut_index,
                 "period_length": cfg.grid.period_length},
        "x_kernel": asdict(spec.x_kernel),
        "f_kernel": asdict(spec.f_kernel),
        "complete": bool(ex.get("complete")),
        "samples": int(n_keep),
    }
    write_json(out.with_name(out.name + ".json"), sidecar)
    return 0


def _prepare_forecast(args):
    cfg = _load_config(args)
    t, library, focal = _read_library(args.series, cfg)
    if focal is None:
        raise CLIError("series has no trailing partial period to forecast")
    if len(library) < cfg.window + 3:
        raise CLIError(f"need at least window + 3 = {cfg.window + 3} full periods, got {len(library)}")
    truth_path = cfg.extra.get("truth")
    if truth_path:
        try:
            _, truth = read_series(truth_path)
        except (OSError, MalformedInputError) as exc:
            raise CLIError(str(exc)) from None
        if truth.size != cfg.grid.n_forecast:
            raise CLIError(f"truth file must hold {cfg.grid.n_forecast} values")
        focal = FocalCurve(focal.observed, truth)
    try:
        env = build_envelope(library, focal)
    except FocalOutsideRangeError as exc:
        raise CLIError(str(exc), EXIT_EMPTY_IQ) from None
    if len(env) < 2:
        raise CLIError("the focal-curve envelope has fewer than 2 curves")
    chart = tune(library, cfg.window, cfg.alpha, cfg.k_max, env)
    return cfg, t, library, focal, env, chart


def cmd_tune(args):
    cfg, t, library, focal, env, chart = _prepare_forecast(args)
    out = Path(cfg.extra.get("out_dir") or ".")
    write_csv(out / "chart.csv", CHART_HEADER, chart.rows())
    return 0


def cmd_forecast(args):
    cfg, t, library, focal, env, chart = _prepare_forecast(args)
    out = Path(cfg.extra.get("out_dir") or ".")
    write_csv(out / "chart.csv", CHART_HEADER, chart.rows())
    if cfg.extra.get("audit"):
        (out / "audit.txt").write_text("\n".join(env.audit_lines()) + "\n")
    k = cfg.k
    if k is None:
        rule = cfg.rule or list(PRACTITIONERS["P3"])
        k = select_k(chart, *rule)
        if k is None:
            raise CLIError(
                "no k satisfies the rule "
                f"(mean >= {rule[0]}, minimum >= {rule[1]}); best achievable: "
                f"mean_coverage={float(chart.mean_coverage.max())!r}, "
                f"alpha_percentile={float(chart.alpha_percentile.max())!r}",
                EXIT_INFEASIBLE,
            )
    try:
        fc = band_forecast(library, focal, k, env, cfg.weighting)
    except EnvelopeTooSmallError as exc:
        raise CLIError(str(exc)) from None
    times = _focal_times(t, library, cfg.grid)
    F = cfg.grid.forecast
    write_csv(out / "band.csv", BAND_HEADER,
              zip(times[F], fc.lower[F], fc.upper[F], fc.point[F]))
    summary = {"k": k, "envelope_size": len(env), "mean_width": fc.mean_width}
    if fc.coverage is not None:
        summary["coverage"] = fc.coverage
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_mbd(args):
    cfg = _load_config(args)
    t, library, focal = _read_library(args.series, cfg)
    index_set = cfg.grid.observed if cfg.extra.get("observed_only") else None
    rep = mbd_restricted(library.curves, index_set)
    rows = [(i, d) for i, d in enumerate(rep.depths)]
    out = cfg.extra.get("out")
    if out:
        write_csv(out, ("curve", "depth"), rows)
    else:
        print("curve,depth")
        for i, d in rows:
            print(f"{i},{fmt(d)}")
    return 0


def _sizes(cfg) -> Sizes:
    return Sizes(n=int(cfg.extra.get("n", 200)), m=cfg.window,
                 points_per_period=cfg.grid.points_per_period, cut_index=cfg.grid.cut_index,
                 k_max=cfg.k_max)


def _k_values(cfg):
    raw = cfg.extra.get("k_values") or "2,5,10,20"
    if isinstance(raw, str):
        raw = raw.split(",")
    ks = [int(k) for k in raw]
    if any(k < 2 or k > cfg.k_max for k in ks):
        raise CLIError(f"k values must lie in [2, {cfg.k_max}]")
    return ks


def _model(cfg):
    model = cfg.extra.get("model")
    if model not in MODELS:
        raise CLIError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
    return model


def _mc(cfg, alphas) -> MCResult:
    trials = int(cfg.extra.get("trials", 30))
    if trials < 10:
        raise CLIError("need at least 10 trials")
    return monte_carlo(_model(cfg), trials, _sizes(cfg), cfg.seed, alphas=alphas,
                       workers=int(cfg.extra.get("workers", 1)))


def _trial_rows(res: MCResult, ks):
    for t in res.per_trial:
        for k in ks:
            j = k - 2
            yield (t.seed_key, k, float(t.mean_coverage[j]), float(t.coverage[j]),
                   float(t.mean_coverage[j] - t.coverage[j]))


def cmd_evaluate_bias(args):
    cfg = _load_config(args)
    ks = _k_values(cfg)
    res = _mc(cfg, (cfg.alpha,))
    errs = bias_test(res.model, len(res.per_trial), k_values=ks, result=res)
    out = Path(cfg.extra.get("out_dir") or ".")
    stem = f"bias_{res.model}_seed{cfg.seed}"
    write_csv(out / f"{stem}.csv", ("k", "standardized_error", "degenerate"),
              ((k, e, int(deg)) for k, (e, deg) in errs.items()))
    write_csv(out / f"{stem}_trials.csv", ("trial", "k", "mean_coverage", "coverage", "difference"),
              _trial_rows(res, ks))
    write_json(out / f"{stem}.json", {
        "model": res.model, "seed": cfg.seed, "trials": len(res.per_trial),
        "sizes": asdict(res.sizes),
        "standardized_error": {str(k): e for k, (e, _) in errs.items()},
        "degenerate": {str(k): d for k, (_, d) in errs.items()},
    })
    return 0


def cmd_evaluate_confidence(args):
    cfg = _load_config(args)
    ks = _k_values(cfg)
    res = _mc(cfg, (cfg.alpha,))
    probs = confidence_test(res.model, len(res.per_trial), k_values=ks, alpha=cfg.alpha, result=res)
    out = Path(cfg.extra.get("out_dir") or ".")
    stem = f"confidence_{res.model}_a{cfg.alpha}_seed{cfg.seed}"
    write_csv(out / f"{stem}.csv", ("k", "probability", "wilson_low", "wilson_high"),
              ((k, *v) for k, v in probs.items()))
    write_json(out / f"{stem}.json", {
        "model": res.model, "seed": cfg.seed, "alpha": cfg.alpha, "trials": len(res.per_trial),
        "sizes": asdict(res.sizes),
        "probability": {str(k): v[0] for k, v in probs.items()},
        "wilson": {str(k): [v[1], v[2]] for k, v in probs.items()},
    })
    return 0


def cmd_evaluate_exercise(args):
    cfg = _load_config(args)
    ex = cfg.extra
    horizon = int(ex.get("horizon", 50))
    if ex.get("series"):
        t, library, focal = _read_library(ex["series"], cfg)
        curves = library.curves
        source = "series"
    else:
        model = _model(cfg)
        n_periods = int(ex.get("periods", 500))
        spec = PCProcessSpec(model, cfg.grid, n_periods, seed=trial_seed(cfg.seed, 0, MODELS.index(model)))
        curves = simulate_components(spec).values.reshape(n_periods, cfg.grid.points_per_period)
        source = model
    if cfg.rule is not None:
        rules = {"rule{}-{}".format(*cfg.rule): tuple(cfg.rule)}
    else:
        names = (ex.get("rules") or "P1,P2,P3").split(",")
        unknown = [n for n in names if n not in PRACTITIONERS]
        if unknown:
            raise CLIError(f"unknown practitioner rules {unknown}")
        rules = {n: PRACTITIONERS[n] for n in names}
    if curves.shape[0] < horizon + cfg.window + 2:
        raise CLIError(f"need at least horizon + window + 2 = {horizon + cfg.window + 2} periods")
    summaries = practitioner_exercise(curves, cfg.grid, rules, cfg.alpha, horizon, cfg.window,
                                      cfg.k_max, weighting=cfg.weighting)
    out = Path(ex.get("out_dir") or ".")
    for name, s in summaries.items():
        stem = f"exercise_{source}_a{cfg.alpha}_{name}_seed{cfg.seed}"
        write_csv(out / f"{stem}.csv", ("period", "k", "coverage", "width", "mse"),
                  ((r.period, "" if r.k is None else r.k, r.coverage, r.width, r.mse) for r in s.rows))
        write_json(out / f"{stem}.json", {"source": source, "seed": cfg.seed, "horizon": horizon,
                                          "window": cfg.window, **s.as_dict()})
    return 0


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="depthfc", description="Depth-based functional time series forecasting.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a periodically correlated series")
    _config_flags(p, window=False)
    p.add_argument("--model", default=S, help="Y1, Y2 or Y3")
    p.add_argument("--periods", type=int, default=S, help="periods including the focal one (default 201)")
    p.add_argument("--sigma-x", dest="sigma_x", type=float, default=S)
    p.add_argument("--sigma-f", dest="sigma_f", type=float, default=S)
    p.add_argument("--lengthscale-f", dest="lengthscale_f", type=float, default=S)
    p.add_argument("--lengthscale-x", dest="lengthscale_x", type=float, default=S)
    p.add_argument("--complete", action="store_true", default=S,
                   help="write the last period in full instead of withholding its forecast segment")
    p.add_argument("--truth", default=S, help="write the withheld segment to this file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    for name, func, helptext in (("forecast", cmd_forecast, "band and point forecast of the focal period"),
                                 ("tune", cmd_tune, "coverage/width chart for choosing k")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("series")
        _config_flags(p)
        p.add_argument("--k", type=int, default=S, help="band size; overrides --rule")
        p.add_argument("--rule", nargs=2, type=float, default=S, metavar=("MEAN", "MIN"),
                       help="smallest k with mean coverage >= MEAN and lower percentile >= MIN")
        p.add_argument("--practitioner", dest="rule", choices=list(PRACTITIONERS), default=S)
        p.add_argument("--weighting", choices=WEIGHTINGS, default=S)
        p.add_argument("--truth", default=S, help="t,value file with the withheld segment")
        p.add_argument("--out-dir", dest="out_dir", default=S)
        p.add_argument("--audit", action="store_true", default=S)
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", help="Monte Carlo checks and forecasting exercises")
    esub = p.add_subparsers(dest="experiment", required=True)
    for name, func in (("bias", cmd_evaluate_bias), ("confidence", cmd_evaluate_confidence),
                       ("exercise", cmd_evaluate_exercise)):
        q = esub.add_parser(name)
        _config_flags(q)
        q.add_argument("--model", default=S)
        q.add_argument("--out-dir", dest="out_dir", default=S)
        q.add_argument("--workers", type=int, default=S)
        if name == "exercise":
            q.add_argument("--series", default=S, help="evaluate on a t,value file instead of a model")
            q.add_argument("--periods", type=int, default=S)
            q.add_argument("--horizon", type=int, default=S)
            q.add_argument("--rules", default=S, help="comma list of P1,P2,P3")
            q.add_argument("--rule", nargs=2, type=float, default=S, metavar=("MEAN", "MIN"))
            q.add_argument("--weighting", choices=WEIGHTINGS, default=S)
        else:
            q.add_argument("--trials", type=int, default=S)
            q.add_argument("--n", type=int, default=S, help="sample curves per trajectory")
            q.add_argument("--k-values", dest="k_values", default=S)
        q.set_defaults(func=func)

    p = sub.add_parser("mbd", help="modified band depth of each period curve")
    p.add_argument("series")
    _config_flags(p, window=False)
    p.add_argument("--observed-only", dest="observed_only", action="store_true", default=S)
    p.add_argument("--out", default=S)
    p.set_defaults(func=cmd_mbd)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"depthfc: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
