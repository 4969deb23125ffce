"""Command-line front end.

Three commands:

* ``abx analyze``   — asymptotic report + information bound for a scenario.
* ``abx figures``   — CSV (optionally SVG) data behind the standard figures.
* ``abx simulate``  — Monte Carlo replications with a JSON summary.

Config precedence: built-in scenario defaults < ``--config`` JSON file <
explicit command-line flags.  Exit codes: 0 ok, 2 validation error,
3 numerical failure.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .asymptotics import dm_asymptotic_variance
from .cramer_rao import cr_lower_bound, growth_scan
from .model import NumericalError, PlatformModel, ValidationError
from .power import fnp_curves, naive_test_power, power_curves
from .scenarios import (
    example_sign_inconsistent_alt,
    example_sign_inconsistent_null,
    logit_limits,
    logit_scenario,
    meanfield_family,
)
from .simulate import SimConfig, run_replications

SCENARIO_DEFAULTS = {
    "logit": {"K": 200, "lambda_bar": 1.5, "tau": "linear", "v0": 0.5,
              "delta": 0.05, "eps_bar": 1.0},
    "example1": {"K": 100, "tau": "constant"},
    "example2": {"K": 30, "tau": "constant"},
    "meanfield": {"K": 200, "lambda_bar": 1.5, "v0": 0.5, "delta": 0.05,
                  "eps_bar": 1.0},
}

# R defaults differ per command (figures fig3 uses 50000, simulate 1000),
# so it stays None here and is resolved at the point of use.
COMMON_DEFAULTS = {"a": 0.5, "alpha": 0.05, "seed": 0, "N": 2000, "R": None,
                   "format": "csv", "out": ".", "aa": False, "strict": False}


def _add_common_flags(p):
    p.add_argument("--scenario", choices=sorted(SCENARIO_DEFAULTS))
    p.add_argument("--model", help="path to a model JSON document")
    p.add_argument("--config", help="path to a JSON config file")
    p.add_argument("--K", type=int)
    p.add_argument("--lambda-bar", dest="lambda_bar", type=float)
    p.add_argument("--tau", choices=["linear", "constant"])
    p.add_argument("--v0", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--eps-bar", dest="eps_bar", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--N", type=str, help="customers per replication (figures: comma list)")
    p.add_argument("--R", type=int, help="number of replications")
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=["csv", "json", "svg"])
    p.add_argument("--aa", action="store_const", const=True,
                   help="force an A/A experiment (p1 := p0)")
    p.add_argument("--strict", action="store_const", const=True,
                   help="enforce strictly decreasing booking profiles")


def _merge_settings(args, default_scenario="logit"):
    scenario = args.scenario
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        known = set(COMMON_DEFAULTS) | {"K", "lambda_bar", "tau", "v0", "delta",
                                        "eps_bar", "scenario", "model", "figure"}
        unknown = set(cfg) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        scenario = scenario or cfg.get("scenario")
    scenario = scenario or default_scenario
    settings = dict(COMMON_DEFAULTS)
    settings.update(SCENARIO_DEFAULTS[scenario])
    settings["scenario"] = scenario
    settings.update({k: v for k, v in cfg.items() if k != "scenario"})
    for key in ("K", "lambda_bar", "tau", "v0", "delta", "eps_bar", "a", "N",
                "R", "alpha", "seed", "out", "format", "aa", "strict", "model"):
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    return settings


def _build_model(settings):
    if settings.get("model"):
        with open(settings["model"]) as fh:
            model = PlatformModel.from_json(fh.read(), strict=settings["strict"])
    else:
        scenario = settings["scenario"]
        if scenario == "logit":
            model = logit_scenario(K=settings["K"], lambda_bar=settings["lambda_bar"],
                                   tau=settings["tau"], v0=settings["v0"],
                                   delta=settings["delta"], eps_bar=settings["eps_bar"])
        elif scenario == "example1":
            model = example_sign_inconsistent_null(K=settings["K"], tau=settings["tau"])
        elif scenario == "example2":
            model = example_sign_inconsistent_alt(K=settings["K"], tau=settings["tau"])
        elif scenario == "meanfield":
            p0b, p1b, tb = logit_limits(settings["K"], settings["v0"],
                                        settings["delta"], settings["eps_bar"])
            model = meanfield_family(p0b, p1b, tb, settings["lambda_bar"], settings["K"])
        else:  # pragma: no cover - argparse restricts choices
            raise ValidationError(f"unknown scenario {scenario!r}")
        if settings["strict"]:
            bad = model.strict_violations()
            if bad:
                raise ValidationError("strict mode: " + "; ".join(bad))
    if settings["aa"]:
        model = model.aa_version()
    return model


def _outdir(settings):
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_svg(path, xs, ys_by_label, logy=False, title=""):
    """Minimal native SVG line chart: axes plus one polyline per series."""
    W, H, M = 640, 420, 56
    xs = np.asarray(xs, dtype=float)
    all_y = np.concatenate([np.asarray(v, dtype=float) for v in ys_by_label.values()])
    finite = all_y[np.isfinite(all_y)]
    if logy:
        finite = np.log10(finite[finite > 0])
    lo, hi = (finite.min(), finite.max()) if finite.size else (0.0, 1.0)
    if hi == lo:
        hi = lo + 1.0
    x0, x1 = xs.min(), xs.max()
    if x1 == x0:
        x1 = x0 + 1.0

    def sx(x):
        return M + (x - x0) / (x1 - x0) * (W - 2 * M)

    def sy(y):
        return H - M - (y - lo) / (hi - lo) * (H - 2 * M)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
             f'<text x="{W/2}" y="20" text-anchor="middle">{title}</text>',
             f'<line x1="{M}" y1="{H-M}" x2="{W-M}" y2="{H-M}" stroke="black"/>',
             f'<line x1="{M}" y1="{M}" x2="{M}" y2="{H-M}" stroke="black"/>']
    for i, (label, ys) in enumerate(ys_by_label.items()):
        ys = np.asarray(ys, dtype=float)
        if logy:
            ys = np.where(ys > 0, np.log10(np.maximum(ys, 1e-300)), np.nan)
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys)
                       if np.isfinite(y))
        color = colors[i % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{color}" points="{pts}"/>')
        parts.append(f'<text x="{W-M+4}" y="{M+16*i}" fill="{color}" '
                     f'font-size="12">{label}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_analyze(args):
    settings = _merge_settings(args)
    model = _build_model(settings)
    a = settings["a"]
    report = dm_asymptotic_variance(model, a)
    bound = cr_lower_bound(model, a)
    out = _outdir(settings)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    (out / "crbound.json").write_text(json.dumps(bound.to_dict(), indent=2) + "\n")
    lines = [f"scenario        {settings['scenario']}",
             f"K               {model.K}",
             f"strict warnings {'; '.join(model.strict_violations()) or 'none'}"]
    for key, val in report.to_dict().items():
        lines.append(f"{key:15s} {val:.10g}")
    lines.append(f"{'sigma_ub_sq':15s} {bound.sigma_ub_sq:.10g}")
    table = "\n".join(lines) + "\n"
    (out / "report.txt").write_text(table)
    sys.stdout.write(table)
    return 0


def _parse_n_list(raw, default):
    if raw is None:
        return list(default)
    return [int(tok) for tok in str(raw).split(",") if tok]


def _log_grid(lo=1000, hi=100000, points=20):
    return sorted(set(int(round(n)) for n in np.logspace(math.log10(lo),
                                                         math.log10(hi), points)))


def cmd_figures(args):
    fig = args.figure
    default_scenario = {"fig3": "example1", "fig4": "example2"}.get(fig, "logit")
    settings = _merge_settings(args, default_scenario)
    out = _outdir(settings)
    a, alpha = settings["a"], settings["alpha"]
    want_svg = settings["format"] == "svg"

    if fig == "fig1":
        K_list = [100, 150, 200, 250, 300]
        family = lambda K: logit_scenario(K=K, lambda_bar=settings["lambda_bar"],
                                          v0=settings["v0"], delta=settings["delta"],
                                          eps_bar=settings["eps_bar"])
        scan = growth_scan(family, K_list, a)
        (out / "fig1.csv").write_text(scan.to_csv())
        if want_svg:
            Ks = [r[0] for r in scan.rows]
            _write_svg(out / "fig1.svg", Ks,
                       {"sigma_ub_sq": [r[1] for r in scan.rows],
                        "naive_limit": [r[2] for r in scan.rows]},
                       logy=True, title="variance bounds vs K")
    elif fig == "fig2":
        model = _build_model(settings)
        grid = _parse_n_list(settings.get("N_grid"), _log_grid())
        curve = fnp_curves(model, a, grid, alpha, scenario_id=settings["scenario"])
        (out / "fig2.csv").write_text(curve.to_csv())
        if want_svg:
            _write_svg(out / "fig2.svg", [r[0] for r in curve.rows],
                       {"naive": [r[1] for r in curve.rows],
                        "unbiased": [r[2] for r in curve.rows]},
                       title="log10 FNP vs N")
    elif fig == "fig3":
        model = _build_model(settings)
        N_list = _parse_n_list(args.N, [500, 1000, 2500, 5000])
        R = settings["R"] or 50000
        report = dm_asymptotic_variance(model, a)
        rows = []
        for N in N_list:
            config = SimConfig(model, a=a, N=N, replications=R,
                               seed=settings["seed"], alpha=alpha)
            summary = run_replications(config)
            analytic = naive_test_power(model, a, N, alpha, report=report)
            rows.append((N, summary.reject_rate, summary.reject_se, analytic))
        lines = ["N,fpp_mc,fpp_se,fpp_analytic"]
        lines += [f"{N},{mc!r},{se!r},{an!r}" for N, mc, se, an in rows]
        (out / "fig3.csv").write_text("\n".join(lines) + "\n")
        if want_svg:
            _write_svg(out / "fig3.svg", [r[0] for r in rows],
                       {"mc": [r[1] for r in rows],
                        "analytic": [r[3] for r in rows]},
                       title="A/A-style FPP vs N")
    elif fig == "fig4":
        model = _build_model(settings)
        grid = _log_grid()
        curve = power_curves(model, a, grid, alpha, scenario_id=settings["scenario"])
        (out / "fig4.csv").write_text(curve.to_csv())
        if want_svg:
            _write_svg(out / "fig4.svg", [r[0] for r in curve.rows],
                       {"naive": [r[1] for r in curve.rows],
                        "unbiased": [r[2] for r in curve.rows]},
                       title="power vs N")
    elif fig == "appendixC":
        sweeps = [("lambda_bar", [1.5, 1.8, 2.2, 2.5]),
                  ("eps_bar", [0.5, 0.8, 1.2, 1.5]),
                  ("delta", [0.01, 0.02, 0.03, 0.04])]
        lines = ["param,value,sigma_ub_sq,naive_limit"]
        for param, values in sweeps:
            for value in values:
                kw = {"K": settings["K"], "lambda_bar": settings["lambda_bar"],
                      "v0": settings["v0"], "delta": settings["delta"],
                      "eps_bar": settings["eps_bar"]}
                kw[param] = value
                model = logit_scenario(**kw)
                bound = cr_lower_bound(model, a)
                report = dm_asymptotic_variance(model, a)
                lines.append(f"{param},{value},{bound.sigma_ub_sq!r},"
                             f"{report.naive_limit!r}")
        (out / "appendixC.csv").write_text("\n".join(lines) + "\n")
    else:  # pragma: no cover - argparse restricts choices
        raise ValidationError(f"unknown figure id {fig!r}")
    return 0


def cmd_simulate(args):
    settings = _merge_settings(args)
    model = _build_model(settings)
    N = int(settings["N"])
    config = SimConfig(model, a=settings["a"], N=N,
                       replications=settings["R"] or 1000,
                       seed=settings["seed"], alpha=settings["alpha"])
    summary = run_replications(config)
    out = _outdir(settings)
    (out / "summary.json").write_text(json.dumps(summary.to_dict(), indent=2) + "\n")
    if settings["format"] == "csv":
        (out / "replications.csv").write_text(summary.to_csv())
    sys.stdout.write(json.dumps({k: v for k, v in summary.to_dict().items()
                                 if k != "config"}, indent=2) + "\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="abx",
                                     description="A/B experiments on an "
                                     "inventory-constrained booking platform")
    sub = parser.add_subparsers(dest="command", required=True)
    p_an = sub.add_parser("analyze", help="asymptotic report + information bound")
    _add_common_flags(p_an)
    p_an.set_defaults(func=cmd_analyze)
    p_fig = sub.add_parser("figures", help="reproduce figure data as CSV/SVG")
    p_fig.add_argument("--figure", required=True,
                       choices=["fig1", "fig2", "fig3", "fig4", "appendixC"])
    _add_common_flags(p_fig)
    p_fig.set_defaults(func=cmd_figures)
    p_sim = sub.add_parser("simulate", help="Monte Carlo replications")
    _add_common_flags(p_sim)
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        sys.stderr.write(f"validation error: {exc}\n")
        return 2
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
