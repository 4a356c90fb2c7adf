"""Command-line interface: ``tworv <subcommand> [options] [key=value ...]``.

Parameters come from an optional JSON file (``--params``) overlaid by
inline ``key=value`` pairs.  Results are written as JSON (or CSV) to
standard output or ``--out``; diagnostics go to standard error.

Exit codes: 0 success, 2 usage or parameter error, 3 numerical error,
4 infeasible fit.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import enum
import io
import json
import sys
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from tworv import approx, bivariate, compound, fit, rmm
from tworv.errors import FitError, NumericalError, ParameterError, TworvError

DEFAULT_SEED = 42
SUBCOMMANDS = ("pdf", "moments", "fit", "sample", "map", "compound", "verify")
EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_INFEASIBLE = 0, 2, 3, 4


class UsageError(TworvError):
    """Bad command line or parameter file (exit code 2)."""


@dataclass(frozen=True)
class CommandRequest:
    subcommand: str
    params: dict
    output_path: str | None = None
    format: str = "json"
    seed: int = DEFAULT_SEED
    seed_given: bool = False


@dataclass
class RunReport:
    exit_code: int
    payload: Any = None
    diagnostics: list[str] = field(default_factory=list)


# ---------------------------------------------------------------- parameter I/O

def load_params(path: str) -> dict:
    """Read a JSON object of parameters.

    Raises
    ------
    UsageError
        If the file is unreadable, malformed (with line and column) or not a
        JSON object.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read parameter file {path!r}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise UsageError(f"{path}: top level must be an object of named parameters")
    return data


def _plain(obj):
    if isinstance(obj, enum.Enum):
        return obj.value
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _csv_text(payload) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if isinstance(payload, dict) and "w" in payload and isinstance(payload["w"], list):
        writer.writerow(["index", "w"])
        for i, w in enumerate(payload["w"]):
            writer.writerow([i, repr(float(w))])
    elif isinstance(payload, dict) and isinstance(payload.get("rows"), list):
        rows = payload["rows"]
        keys = [k for k in rows[0] if not isinstance(rows[0][k], (dict, list))] if rows else []
        writer.writerow(keys)
        for r in rows:
            writer.writerow([r[k] for k in keys])
    else:
        writer.writerow(["key", "value"])
        for k, v in _flatten(payload):
            writer.writerow([k, repr(v) if isinstance(v, float) else v])
    return buf.getvalue()


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix.rstrip("."), obj


def write_output(report: RunReport, path: str | None, fmt: str = "json") -> None:
    """Serialize ``report.payload``; floats keep their shortest round-trip
    representation so reloading is lossless."""
    payload = _plain(report.payload)
    if fmt == "csv":
        text = _csv_text(payload)
    else:
        text = json.dumps(payload, indent=2, allow_nan=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def bivariate_record(p: bivariate.BivariateParams) -> dict:
    return dict(**{"lambda": p.lam}, M1=p.M1, sigma1=p.sigma1, sigma2=p.sigma2,
                kappa1=p.kappa1, kappa2=p.kappa2, error_weight=p.error_weight)


def _require(params: dict, *names: str) -> list:
    missing = [n for n in names if n not in params]
    if missing:
        raise UsageError(f"missing required field {missing[0]!r}")
    return [params[n] for n in names]


def _num(params: dict, name: str, default=None) -> float:
    if name not in params:
        if default is None:
            raise UsageError(f"missing required field {name!r}")
        return default
    try:
        return float(params[name])
    except (TypeError, ValueError):
        raise UsageError(f"field {name!r} must be a number, got {params[name]!r}")


def bivariate_from_record(params: dict) -> bivariate.BivariateParams:
    _require(params, "lambda", "M1", "sigma1", "sigma2")
    return bivariate.BivariateParams(
        _num(params, "lambda"), _num(params, "M1"), _num(params, "sigma1"),
        _num(params, "sigma2"), error_weight=str(params.get("error_weight", "unit")),
    )


def _rmm_from_record(params: dict) -> rmm.RmmParams:
    branch = str(params.get("branch", "even"))
    if "preset" in params:
        alpha = params.get("alpha")
        return rmm.preset(str(params["preset"]), None if alpha is None else float(alpha))
    _require(params, "alpha", "lambda")
    return rmm.RmmParams.make(_num(params, "alpha"), _num(params, "lambda"),
                              _num(params, "L", 0.0), branch=branch)


def _is_bivariate(params: dict) -> bool:
    return any(k in params for k in ("M1", "sigma1", "sigma2"))


# ---------------------------------------------------------------- parsing

def _override(token: str) -> tuple[str, Any]:
    if "=" not in token:
        raise UsageError(f"expected key=value, got {token!r}")
    key, raw = token.split("=", 1)
    if not key:
        raise UsageError(f"empty key in {token!r}")
    try:
        value: Any = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", metavar="FILE", help="JSON parameter file")
    common.add_argument("--out", metavar="FILE", help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=None,
                        help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("overrides", nargs="*", metavar="key=value")

    parser = _Parser(prog="tworv", description="Two-component random variation toolkit")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    p = sub.add_parser("pdf", parents=[common], help="RMM density, or the marginal of W")
    p.add_argument("--preset", choices=[x.value for x in rmm.Preset])
    p.add_argument("--z", type=float, action="append", help="evaluation point (repeatable)")
    p = sub.add_parser("moments", parents=[common], help="RMM moments or model mean/variance")
    p.add_argument("--preset", choices=[x.value for x in rmm.Preset])
    p = sub.add_parser("fit", parents=[common], help="fit (lambda, M1, sigma2) to mean/variance")
    p.add_argument("--mean", type=float)
    p.add_argument("--var", type=float)
    sub.add_parser("sample", parents=[common], help="draw W from the product model")
    sub.add_parser("map", parents=[common], help="map a classical density onto the family")
    sub.add_parser("compound", parents=[common], help="simulate a geometric random sum")
    sub.add_parser("verify", parents=[common], help="check every classical mapping")
    return parser


def parse_request(argv: list[str]) -> CommandRequest:
    """Turn an argument vector into a :class:`CommandRequest`.

    Raises
    ------
    UsageError
        On an unknown subcommand or flag, a malformed override or an
        unreadable parameter file.
    """
    ns = build_parser().parse_args(argv)
    params = load_params(ns.params) if ns.params else {}
    for flag, key in (("preset", "preset"), ("mean", "mean"), ("var", "variance")):
        value = getattr(ns, flag, None)
        if value is not None:
            params[key] = value
    if getattr(ns, "z", None):
        params["z"] = ns.z if len(ns.z) > 1 else ns.z[0]
    for token in ns.overrides:
        k, v = _override(token)
        params[k] = v
    seed = ns.seed if ns.seed is not None else DEFAULT_SEED
    return CommandRequest(ns.subcommand, params, ns.out, ns.format, seed, ns.seed is not None)


# ---------------------------------------------------------------- commands

def _points(params: dict, name: str) -> list[float]:
    raw = params.get(name, 0.0)
    values = raw if isinstance(raw, list) else [raw]
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError):
        raise UsageError(f"field {name!r} must be a number or a list of numbers")


def _cmd_pdf(req: CommandRequest) -> dict:
    if _is_bivariate(req.params):
        p = bivariate_from_record(req.params)
        w = _points(req.params, "w" if "w" in req.params else "z")
        return dict(params=bivariate_record(p), points=w, pdf=[bivariate.marginal_pdf_w(x, p) for x in w])
    p = _rmm_from_record(req.params)
    z = _points(req.params, "z")
    return dict(params=dict(alpha=p.alpha, **{"lambda": p.lam}, L=p.L, kappa=p.kappa),
                z=z, pdf=[float(rmm.rmm_pdf(v, p)) for v in z])


def _cmd_moments(req: CommandRequest) -> dict:
    if _is_bivariate(req.params):
        p = bivariate_from_record(req.params)
        mu1, eu2 = bivariate.u_moments(p)
        return dict(params=bivariate_record(p), mean_U=mu1, second_moment_U=eu2,
                    mean_W=bivariate.model_mean(p), variance_W=bivariate.model_var(p))
    p = _rmm_from_record(req.params)
    kmax = int(_num(req.params, "kmax", 4.0))
    if p.is_uniform or p.is_log_limit:
        raise UsageError("moments need a member with lambda > 0 and alpha > 0")
    raw = [rmm.raw_moment(k, p.alpha, p.lam, p.L, p.branch) for k in range(kmax + 1)]
    return dict(params=dict(alpha=p.alpha, **{"lambda": p.lam}, L=p.L, kappa=p.kappa),
                mode_density=rmm.mode_density(p), raw_moments=raw,
                variance=raw[2] - raw[1] ** 2 if kmax >= 2 else None)


def _cmd_fit(req: CommandRequest) -> dict:
    prm = req.params
    if "mode_density" in prm:
        L = prm.get("L")
        target = fit.ModeMeanTarget(_num(prm, "mode_density"), _num(prm, "standardized_mean"),
                                    None if L is None else float(L))
        res = fit.fit_mode_mean(target)
        return dict(target=target, result=dict(alpha=res.alpha, **{"lambda": res.lam},
                                              kappa=res.kappa, L=res.L, residual=res.residual))
    target = fit.MomentTarget(_num(prm, "mean"), _num(prm, "variance"))
    config = fit.FitConfig(error_weight=str(prm.get("error_weight", "unit")))
    res = fit.fit_two_component(target, config)
    out = {"lambda": res.lam, **dataclasses.asdict(res)}
    del out["lam"]
    out["status"] = res.status.value
    return dict(target=target, result=out)


def _cmd_sample(req: CommandRequest) -> dict:
    p = bivariate_from_record(req.params)
    n = int(_num(req.params, "n", 1000.0))
    w = bivariate.sample_w(p, n, req.seed)
    return dict(params=bivariate_record(p), seed=req.seed, n=n, w=w)


_FAMILIES = {
    "weibull": (approx.map_weibull, ("b", "c")),
    "generalized_gamma": (approx.map_generalized_gamma, ("a", "b", "c", "k")),
    "gamma": (approx.map_gamma, ("shape", "scale")),
    "exponential": (approx.map_exponential, ("scale",)),
    "weibull_gg": (approx.map_weibull_gg, ("scale", "shape")),
    "chi_squared": (approx.map_chi_squared, ("n",)),
    "f": (approx.map_f, ("m", "n")),
    "lognormal": (approx.map_lognormal, ("mu", "sigma")),
    "student_t": (approx.map_student_t, ("m",)),
    "cauchy": (approx.map_cauchy, ("a", "b")),
}


def _cmd_map(req: CommandRequest) -> dict:
    prm = req.params
    name = str(_require(prm, "family")[0]).lower()
    if name not in _FAMILIES:
        raise UsageError(f"unknown family {name!r}; choose from {sorted(_FAMILIES)}")
    ctor, names = _FAMILIES[name]
    args = [_num(prm, k) for k in names]
    mapped = ctor(*args)
    ref = approx.reference_logpdf(name, *args)
    grid = approx.default_grid(mapped)
    dev = approx.verify_mapping(mapped, ref, grid)
    return dict(family=name, arguments=dict(zip(names, args)), params=mapped.params.as_dict(),
                transform=dict(kind=mapped.transform.kind.value, center=mapped.transform.center,
                               scale=mapped.transform.scale),
                weight_sum=approx.weight_sum(mapped.params), deviation=dev,
                passed=dev <= approx.EQUIVALENCE_TOL)


def _cmd_compound(req: CommandRequest) -> dict:
    prm = req.params
    conv = str(prm.get("support_convention", "FromOne"))
    try:
        conv = compound.SupportConvention(conv)
    except ValueError:
        raise UsageError(f"support_convention must be FromZero or FromOne, got {conv!r}")
    spec = compound.RandomSumSpec(_num(prm, "p"), _num(prm, "rate", 1.0), conv)
    n = int(_num(prm, "n", 100000.0))
    sim, _ = compound.simulate_random_sum(spec, n, req.seed)
    mean, var = compound.geometric_exponential_moments(spec)
    crit = compound.ks_critical_value(n, 0.01)
    return dict(spec=spec, seed=req.seed, simulation=sim,
                closed_form=dict(mean=mean, variance=var),
                ks_critical_1pct=crit, exponential_at_1pct=sim.ks_stat < crit,
                discrepancy=compound.discrepancy_report(spec.rate).splitlines())


def _cmd_verify(req: CommandRequest) -> dict:
    rows = approx.mapping_gallery()
    return dict(rows=rows, all_passed=all(r["passed"] for r in rows))


_COMMANDS = dict(pdf=_cmd_pdf, moments=_cmd_moments, fit=_cmd_fit, sample=_cmd_sample,
                 map=_cmd_map, compound=_cmd_compound, verify=_cmd_verify)


def execute(req: CommandRequest) -> RunReport:
    """Run a request, mapping library errors to exit codes."""
    diagnostics = []
    if req.subcommand in ("sample", "compound") and not req.seed_given:
        diagnostics.append(f"seed not given; using {req.seed}")
    try:
        payload = _COMMANDS[req.subcommand](req)
    except UsageError as exc:
        return RunReport(EXIT_USAGE, None, diagnostics + [f"usage error: {exc}"])
    except FitError as exc:
        return RunReport(EXIT_INFEASIBLE, None, diagnostics + [f"infeasible fit: {exc}"])
    except NumericalError as exc:
        return RunReport(EXIT_NUMERICAL, None, diagnostics + [f"numerical error: {exc}"])
    except ParameterError as exc:
        return RunReport(EXIT_USAGE, None, diagnostics + [f"parameter error: {exc}"])
    except (ArithmeticError, TworvError) as exc:
        return RunReport(EXIT_NUMERICAL, None, diagnostics + [f"numerical error: {exc}"])
    if req.subcommand == "verify" and not payload["all_passed"]:
        failed = [r["case"] for r in payload["rows"] if not r["passed"]]
        return RunReport(EXIT_NUMERICAL, payload, diagnostics + [f"mappings failed: {failed}"])
    if req.subcommand == "verify":
        for r in payload["rows"]:
            diagnostics.append(f"{'PASS' if r['passed'] else 'FAIL'}  {r['case']:<34s} "
                               f"deviation={r['deviation']:.2e}")
    return RunReport(EXIT_OK, payload, diagnostics)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        req = parse_request(argv)
    except UsageError as exc:
        print(f"tworv: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = execute(req)
    for line in report.diagnostics:
        print(line, file=sys.stderr)
    if report.payload is not None:
        try:
            write_output(report, req.output_path, req.format)
        except OSError as exc:
            print(f"tworv: cannot write output: {exc}", file=sys.stderr)
            return EXIT_USAGE
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
