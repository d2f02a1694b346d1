"""Command-line interface.

Every subcommand shares one set of flags. A JSON job file (``--job``) supplies
the same flags by name, and the ``inputs`` object of a JSON result is itself a
valid job file, so results can be replayed. Flags given on the command line
override the job file.

Exit codes: 0 on success, 2 for usage and validation errors, 3 when a numerical
method does not converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__, lv_rate, tables
from .bs_rate import optimal_path, solve_fwd_rate
from .domain_model import (
    Constant,
    ContractSpec,
    Family,
    ModelSpec,
    Side,
    clamped_cev,
    classify,
    shifted_reciprocal,
)
from .errors import AsianRayError, ConvergenceError, StatisticalFailure
from .expansions import RegionLabel, aatm_rate, classify_region, dotm_call_rate, dotm_put_rate
from .floating_generalized import Relation, floating_rate_bs, generalized_rate_bs, symmetry_map
from .mc_oracle import McConfig, Scheme, price_mc
from .pricing import asymptotic_price, equivalent_vols, smile_expansion

COMMANDS = ("rate", "price", "vol", "path", "region", "symmetry", "table")
EXIT_OK, EXIT_USAGE, EXIT_CONVERGENCE = 0, 2, 3

# Flags that never enter the recorded inputs.
_PLUMBING = {"output", "job"}


class UsageError(Exception):
    """Invalid or incomplete flags for the chosen command."""


def _fraction(text: str) -> float:
    try:
        return tables.parse_fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number or fraction: {text!r}") from exc


def _options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    out = p.add_argument_group("output")
    out.add_argument("--format", choices=("text", "csv", "json"), default="text")
    out.add_argument("--output", help="write the result to this file instead of stdout")
    out.add_argument("--job", help="JSON file with flag values (a previous result's inputs work)")

    m = p.add_argument_group("model")
    m.add_argument("--s0", type=float, default=100.0, help="spot price (default 100)")
    m.add_argument("--r", type=float, default=0.0, help="interest rate")
    m.add_argument("--q", type=float, default=0.0, help="dividend yield")
    m.add_argument("--sigma", type=float, help="constant vol, or sigma0 for clamped-cev")
    m.add_argument("--vol-family", choices=("constant", "shifted-reciprocal", "clamped-cev"),
                   default="constant")
    m.add_argument("--vol-a", type=float, help="shifted-reciprocal: level a in a + b S0/s")
    m.add_argument("--vol-b", type=float, help="shifted-reciprocal: weight b in a + b S0/s")
    m.add_argument("--cev-beta", type=float, help="clamped-cev: elasticity beta")
    m.add_argument("--vol-lo", type=float, help="clamped-cev: lower clamp")
    m.add_argument("--vol-hi", type=float, help="clamped-cev: upper clamp")

    c = p.add_argument_group("contract")
    c.add_argument("--family", choices=[f.value for f in Family], default="fixed")
    c.add_argument("--side", choices=[s.value for s in Side], default="call")
    c.add_argument("--k", type=float, help="strike K")
    c.add_argument("--k-over-s0", type=float, help="strike as a fraction of spot")
    c.add_argument("--kappa", type=float, help="floating strike multiplier")
    c.add_argument("--tau", type=_fraction, default=0.0, help="forward start fraction, e.g. 305/365")
    c.add_argument("--t", type=float, default=1.0, help="maturity in years")

    s = p.add_argument_group("solver")
    s.add_argument("--n-grid", type=int, default=lv_rate.DEFAULT_N_GRID)
    s.add_argument("--x", type=float, help="region: log strike x (default log(K/S0))")
    s.add_argument("--aatm-threshold", type=float, default=0.1)
    s.add_argument("--dotm-threshold", type=float, default=2.0)
    s.add_argument("--relation", choices=[r.value for r in Relation])
    s.add_argument("--map-tau", type=_fraction, help="symmetry: forward start fraction of the image")

    mc = p.add_argument_group("monte carlo")
    mc.add_argument("--mc", action="store_true", help="add Monte Carlo prices")
    mc.add_argument("--paths", type=int, help="paths (default 100000; table 3 uses 1000000)")
    mc.add_argument("--steps", type=int, default=365)
    mc.add_argument("--seed", type=int, default=McConfig.seed)
    mc.add_argument("--scheme", choices=[sc.value for sc in Scheme])
    mc.add_argument("--no-antithetic", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asianray",
        description="Short-maturity asymptotics for forward start Asian options.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    opts = _options()
    helps = {
        "rate": "rate function and solver internals",
        "price": "small-maturity price by regime (--mc adds a Monte Carlo price)",
        "vol": "equivalent log-normal and normal volatilities",
        "path": "optimal path samples (t, f)",
        "region": "near-the-money / deep wing classification and expansion",
        "symmetry": "floating/fixed symmetric partner of a contract",
        "table": "recompute a published table (1, 2 or 3)",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[opts], help=helps[name])
        if name == "table":
            sp.add_argument("table_id", type=int, choices=(1, 2, 3))
    return parser


# Job files ------------------------------------------------------------------------


def _job_argv(job: dict[str, Any]) -> list[str]:
    """Translate a job object into flags (before the explicit ones, so those win)."""
    argv: list[str] = []
    for key, value in job.items():
        if key in ("command", "table_id") or key in _PLUMBING or value is None:
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        else:
            argv.extend([flag, repr(value) if isinstance(value, float) else str(value)])
    return argv


def parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    argv = list(argv)
    job_path = None
    for i, tok in enumerate(argv):
        if tok == "--job" and i + 1 < len(argv):
            job_path = argv[i + 1]
        elif tok.startswith("--job="):
            job_path = tok.split("=", 1)[1]
    if job_path is None:
        ns = parser.parse_args(argv)
    else:
        try:
            with open(job_path, encoding="utf-8") as fh:
                job = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read job file {job_path}: {exc}")
        job = job.get("inputs", job)
        if argv and argv[0] in COMMANDS:
            head, rest = argv[:1], argv[1:]
        else:
            head, rest = [str(job.get("command", ""))], argv
        if head[0] == "table":
            if rest and not rest[0].startswith("-"):
                head, rest = head + rest[:1], rest[1:]
            else:
                head.append(str(job.get("table_id", "")))
        ns = parser.parse_args(head + _job_argv(job) + rest)
    if ns.command is None:
        parser.error("a command is required")
    return ns


def recorded_inputs(ns: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in vars(ns).items() if k not in _PLUMBING and v is not None}


# Building specs ---------------------------------------------------------------------


def _require(ns: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(ns, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"{ns.command} needs {flags}")


def build_model(ns: argparse.Namespace) -> ModelSpec:
    if ns.vol_family == "constant":
        _require(ns, "sigma")
        vol = Constant(ns.sigma)
    elif ns.vol_family == "shifted-reciprocal":
        _require(ns, "vol_a", "vol_b")
        vol = shifted_reciprocal(ns.vol_a, ns.vol_b, ns.s0)
    else:
        _require(ns, "sigma", "cev_beta", "vol_lo", "vol_hi")
        vol = clamped_cev(ns.sigma, ns.cev_beta, ns.s0, ns.vol_lo, ns.vol_hi)
    return ModelSpec(ns.s0, ns.r, ns.q, vol)


def _strike(ns: argparse.Namespace) -> float | None:
    if ns.k is not None and ns.k_over_s0 is not None:
        raise UsageError("give either --k or --k-over-s0, not both")
    if ns.k_over_s0 is not None:
        return ns.k_over_s0 * ns.s0
    return ns.k


def build_contract(ns: argparse.Namespace) -> ContractSpec:
    family = Family(ns.family)
    k = _strike(ns)
    if family is Family.FIXED and k is None:
        raise UsageError("fixed strike contracts need --k or --k-over-s0")
    if family is Family.FLOATING:
        _require(ns, "kappa")
    if family is Family.GENERALIZED:
        _require(ns, "kappa")
        if k is None:
            raise UsageError("generalized contracts need --k or --k-over-s0")
    return ContractSpec(family, Side(ns.side), ns.t, strike_k=k, kappa=ns.kappa, tau=ns.tau)


def build_mc(ns: argparse.Namespace, default_paths: int = 100_000) -> McConfig:
    scheme = ns.scheme
    if scheme is None:
        scheme = Scheme.EXACT_GBM if ns.vol_family == "constant" else Scheme.EULER_LOG_SPACE
    return McConfig(ns.paths or default_paths, ns.steps, ns.seed,
                    antithetic=not ns.no_antithetic, scheme=Scheme(scheme))


# Commands ---------------------------------------------------------------------------
# Each returns (outputs, diagnostics). Outputs are a dict of scalars, or a list of
# row dicts for tabular commands.


def _cmd_rate(ns):
    model = build_model(ns)
    contract = build_contract(ns)
    s0 = model.s0
    if contract.family is Family.GENERALIZED:
        if not model.is_constant_vol:
            raise UsageError("generalized rates need --vol-family constant")
        res = generalized_rate_bs(contract.kappa, contract.strike_k / s0, ns.sigma)
        out = {"j_g": res.j_g, "i_g": res.i_g, "region": res.region.value, "beta": res.beta,
               "gamma": res.gamma, "xi": res.xi, "eta": res.eta,
               "branch_index": res.branch_index}
        diag = {"residuals": list(res.residuals), "n_candidates": res.n_candidates}
        return out, diag
    if model.is_constant_vol and contract.family is Family.FIXED:
        res = solve_fwd_rate(contract.strike_k / s0, contract.tau, ns.sigma)
        param = "beta" if res.side.value == "BetaBranch" else "xi"
        out = {"j_fwd": res.j_fwd, "i_fwd": res.i_fwd, "c": res.c, param: res.beta_or_xi,
               "branch": res.side.value}
        return out, {"residual": res.residual}
    if model.is_constant_vol:
        i_f = floating_rate_bs(contract.kappa, contract.tau, ns.sigma)
        j = i_f * (1.0 - contract.tau) * ns.sigma**2
        return {"i_f": i_f, "j_bs_kappa": j, "c": 0.0}, {}
    kind = lv_rate.Kind.FIXED_AVERAGE if contract.family is Family.FIXED else lv_rate.Kind.FLOATING_AVERAGE
    k = contract.strike_k if contract.family is Family.FIXED else contract.kappa
    res = lv_rate.fwd_rate(model, k, contract.tau, kind, ns.n_grid)
    out = {"i_fwd": res.i_fwd, "c_star": res.c_star, "inner_value": res.inner_value}
    diag = {"outer_iterations": res.outer_iterations, "corner_slope_gap": res.corner_slope_gap,
            "constraint_residual": res.path.constraint_residual, "n_grid": ns.n_grid}
    return out, diag


def _cmd_price(ns):
    model = build_model(ns)
    contract = build_contract(ns)
    res = asymptotic_price(model, contract, ns.n_grid)
    out = {"price": res.price, "log_price_slope": res.log_price_slope,
           "sqrt_t_coeff": res.sqrt_t_coeff, "regime": res.regime.label.value,
           "log_strike_x": res.regime.log_strike_x, "sigma_ln": res.sigma_ln,
           "sigma_n": res.sigma_n}
    diag: dict[str, Any] = {"method": res.method}
    if ns.mc:
        cfg = build_mc(ns)
        mc = price_mc(model, contract, cfg)
        out.update({"mc_price": mc.price, "mc_std_error": mc.std_error})
        diag.update({"mc_paths": mc.n_paths_used, "mc_steps": cfg.n_steps,
                     "mc_seed": cfg.seed, "mc_scheme": cfg.scheme.value})
    return out, diag


def _cmd_vol(ns):
    model = build_model(ns)
    contract = build_contract(ns)
    ln, n = equivalent_vols(model, contract)
    out = {"sigma_ln": ln, "sigma_n": n}
    if contract.family is Family.FIXED:
        x = math.log(contract.strike_k / model.s0)
        out["sigma_ln_smile_expansion"] = smile_expansion(x, contract.tau, model.sigma_at(model.s0))
    return out, {"regime": classify(model, contract).label.value}


def _cmd_path(ns):
    model = build_model(ns)
    contract = build_contract(ns)
    if contract.family is Family.GENERALIZED:
        raise UsageError("optimal paths cover fixed and floating strikes")
    if model.is_constant_vol and contract.family is Family.FIXED:
        path = optimal_path(contract.strike_k / model.s0, contract.tau, max(ns.n_grid, 3))
    else:
        kind = lv_rate.Kind.FIXED_AVERAGE if contract.family is Family.FIXED else lv_rate.Kind.FLOATING_AVERAGE
        k = contract.strike_k if contract.family is Family.FIXED else contract.kappa
        path = lv_rate.fwd_rate(model, k, contract.tau, kind, ns.n_grid).path
    rows = [{"t": float(t), "f": float(f)} for t, f in zip(path.grid, path.values)]
    diag = {"corner": path.corner, "constraint_residual": path.constraint_residual,
            "corner_slope_gap": path.corner_slope_gap}
    return rows, diag


def _cmd_region(ns):
    if ns.x is not None:
        x = ns.x
    else:
        k = _strike(ns)
        if k is None:
            raise UsageError("region needs --x, --k or --k-over-s0")
        x = math.log(k / ns.s0)
    sigma = 1.0 if ns.sigma is None else ns.sigma
    reg = classify_region(x, ns.tau, ns.aatm_threshold, ns.dotm_threshold)
    approx = None
    if reg.label is RegionLabel.TAU_AATM:
        approx = aatm_rate(x, ns.tau, sigma)
    elif reg.label is RegionLabel.TAU_DOTM_CALL_WING:
        approx = dotm_call_rate(x, ns.tau, sigma)
    elif reg.label in (RegionLabel.TAU_DOTM_PUT_REGION1, RegionLabel.TAU_DOTM_PUT_REGION2):
        approx, _ = dotm_put_rate(x, ns.tau, sigma)
    exact = solve_fwd_rate(math.exp(x), ns.tau, sigma).i_fwd
    out = {"x": x, "label": reg.label.value, "scale": reg.scale,
           "kappa_ratio": reg.kappa_ratio, "expansion_rate": approx, "exact_rate": exact}
    return out, {}


def _cmd_symmetry(ns):
    model = build_model(ns)
    contract = build_contract(ns)
    rel = Relation(ns.relation) if ns.relation else None
    res = symmetry_map(model, contract, ns.map_tau, rel)
    c = res.contract
    out = {"family": c.family.value, "side": c.side.value, "k": c.strike_k, "kappa": c.kappa,
           "tau": c.tau, "t": c.maturity_t, "r": res.model.r, "q": res.model.q,
           "factor": res.factor, "relation": res.relation.value,
           "direction": res.direction.value, "exact": res.exact}
    if ns.mc:
        cfg = build_mc(ns)
        a = price_mc(model, contract, cfg)
        b = price_mc(res.model, c, cfg)
        out.update({"mc_original": a.price, "mc_original_se": a.std_error,
                    "mc_mapped_scaled": res.factor * b.price,
                    "mc_mapped_scaled_se": res.factor * b.std_error})
    return out, {}


def _cmd_table(ns):
    if ns.table_id == 1:
        rows = tables.table_1()
    elif ns.table_id == 2:
        rows = tables.table_2()
    else:
        rows = tables.table_3(build_mc(ns, default_paths=1_000_000) if ns.mc else None)
    return tables.rows_to_records(rows), {"table": ns.table_id, "rows": len(rows)}


_HANDLERS = {
    "rate": _cmd_rate, "price": _cmd_price, "vol": _cmd_vol, "path": _cmd_path,
    "region": _cmd_region, "symmetry": _cmd_symmetry, "table": _cmd_table,
}


# Formatting -----------------------------------------------------------------------


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _as_rows(outputs) -> list[dict[str, Any]]:
    return outputs if isinstance(outputs, list) else [outputs]


def format_csv(outputs) -> str:
    rows = _as_rows(outputs)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0]) if rows else []
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(row.get(h)) for h in header])
    return buf.getvalue()


def format_text(outputs, diagnostics) -> str:
    if isinstance(outputs, list):
        rows = [[_cell(v) for v in r.values()] for r in outputs]
        header = list(outputs[0]) if outputs else []
        widths = [max([len(h)] + [len(r[i]) for r in rows]) for i, h in enumerate(header)]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
        lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    else:
        width = max((len(k) for k in outputs), default=0)
        lines = [f"{k.ljust(width)}  {_cell(v)}" for k, v in outputs.items()]
    for k, v in diagnostics.items():
        lines.append(f"# {k}: {_cell(v) if not isinstance(v, list) else v}")
    return "\n".join(lines) + "\n"


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def format_json(inputs, outputs, diagnostics) -> str:
    doc = {"inputs": inputs, "outputs": outputs, "diagnostics": diagnostics,
           "version": __version__}
    return json.dumps(_jsonable(doc), indent=2) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return the exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        ns = parse(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    inputs = recorded_inputs(ns)
    try:
        outputs, diagnostics = _HANDLERS[ns.command](ns)
    except UsageError as exc:
        print(f"asianray {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, StatisticalFailure) as exc:
        print(f"asianray {ns.command}: numerical failure: {exc}", file=sys.stderr)
        if ns.format == "json":
            diag = {"error": type(exc).__name__, "message": str(exc),
                    **getattr(exc, "diagnostics", {})}
            _emit(format_json(inputs, None, diag), ns.output)
        return EXIT_CONVERGENCE
    except (AsianRayError, ValueError) as exc:
        print(f"asianray {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if ns.format == "json":
        text = format_json(inputs, outputs, diagnostics)
    elif ns.format == "csv":
        text = format_csv(outputs)
    else:
        text = format_text(outputs, diagnostics)
    _emit(text, ns.output)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


__all__ = ["run", "main", "build_parser", "format_csv", "format_json"]
