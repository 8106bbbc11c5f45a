"""Command line front end: ``spider-moments moments|validate|simulate|mgf``.

Settings come from an optional TOML file with sections ``[spider]``,
``[query]``, ``[sim]`` and ``[output]``; flags override the file. Exit codes
are 0 on success, 1 when a check fails and 2 for usage or configuration
errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from decimal import Context, Decimal
from fractions import Fraction
from typing import Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import checks
from .mgf import MgfQuery, mgf_bessel_closed, mgf_general_quadrature, mgf_series_moments
from .moments import (
    ClosedFormD,
    PaperLiteralError,
    brownian_joint_moment,
    joint_moment_closed,
    joint_moment_recursive,
    laplace_joint_moment,
    laplace_to_moment,
)
from .simulator import LEG_RULES, SimConfig, estimate_joint_moments, estimate_mgf
from .spider import (
    BesselLaw,
    BesselOrder,
    MultiIndex,
    QuadratureError,
    SpiderConfig,
    SpiderConfigError,
    sector_weights,
    to_fraction,
    uniform_angle_cdf,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CSV_HEADER = ["section", "name", "engine", "index", "exact", "decimal", "std_error",
              "reference", "z_score", "passed", "achieved", "tolerance"]
MOMENT_ENGINES = ("closed", "recursive", "brownian", "series", "laplace")
MGF_ENGINES = ("closed", "quadrature", "mc")
DEBUG_EXPONENTS = {"full": Fraction(1), "half": Fraction(1, 2)}
_DECIMAL = Context(prec=30)


class UsageError(ValueError):
    pass


# flag name -> (toml section, key)
_FILE_KEYS = {
    "nu": ("spider", "nu"), "beta": ("spider", "beta"), "sectors": ("spider", "sectors"),
    "idx": ("query", "idx"), "lam": ("query", "lambda"), "z": ("query", "z"),
    "engines": ("query", "engines"), "suites": ("query", "suites"),
    "paper_literal": ("query", "paper_literal"),
    "debug_c_exponent": ("query", "debug_c_exponent"),
    "steps": ("sim", "steps"), "eps": ("sim", "eps"), "reps": ("sim", "reps"),
    "seed": ("sim", "seed"), "leg_rule": ("sim", "leg_rule"),
    "out": ("output", "out"), "format": ("output", "format"),
}
_DEFAULTS = {
    "nu": "-1/2", "beta": "1/2,1/2", "sectors": None, "idx": None, "lam": "1", "z": None,
    "engines": None, "suites": None, "paper_literal": False, "debug_c_exponent": "full",
    "steps": 1e-4, "eps": None, "reps": 100_000, "seed": 20240611, "leg_rule": "bridge",
    "out": None, "format": "json",
}


@dataclass
class RunSpec:
    command: str
    nu: Fraction
    config: SpiderConfig
    sectors: list[str] | None
    indices: list[MultiIndex]
    lam: Fraction
    z: list[Fraction]
    engines: list[str]
    suites: list[str]
    paper_literal: bool
    exponent_scale: Fraction
    sim: SimConfig | None
    out: str | None
    fmt: str
    echo: dict = field(default_factory=dict)


def _csv_list(value) -> list[str]:
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return [str(v).strip() for v in value]
    return [v.strip() for v in str(value).split(",") if v.strip()]


def parse_angle(token: str) -> float:
    """Angles like ``0``, ``pi/2``, ``3pi/2``, ``2*pi`` or ``1.25``."""
    t = token.strip().lower().replace(" ", "")
    if "pi" in t:
        coef, _, div = t.partition("pi")
        coef = coef.rstrip("*") or "1"
        div = div.lstrip("/") or "1"
        return float(Fraction(coef)) * math.pi / float(Fraction(div))
    return float(Fraction(t))


def _parse_index(value, legs: int) -> MultiIndex:
    exps = [int(v) for v in _csv_list(value)]
    if len(exps) > legs:
        raise UsageError(f"index {value!r} has more entries than the spider has legs")
    return MultiIndex({i: n for i, n in enumerate(exps) if n})


def _merge(args: argparse.Namespace) -> dict:
    merged = dict(_DEFAULTS)
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise UsageError(f"cannot read config file {args.config}: {exc}") from None
        known = {sec for sec, _ in _FILE_KEYS.values()}
        for section in data:
            if section not in known:
                raise UsageError(f"unknown config section [{section}]")
        for name, (section, key) in _FILE_KEYS.items():
            if key in data.get(section, {}):
                merged[name] = data[section][key]
    for name in _FILE_KEYS:
        value = getattr(args, name, None)
        if value is not None and value is not False:
            merged[name] = value
    return merged


def build_spec(args: argparse.Namespace) -> RunSpec:
    m = _merge(args)
    nu = BesselOrder(m["nu"]).nu
    sectors = _csv_list(m["sectors"]) or None
    if sectors:
        try:
            config = sector_weights(uniform_angle_cdf, [parse_angle(s) for s in sectors])
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"bad sector boundaries {sectors}: {exc}") from None
    else:
        config = SpiderConfig(tuple(_csv_list(m["beta"])))
    legs = config.leg_count

    if m["idx"] is None:
        indices = checks.indices_up_to(min(legs, 3), 3)
    else:
        raw = m["idx"]
        if isinstance(raw, str) or (isinstance(raw, list) and raw and not isinstance(raw[0], (list, str))):
            raw = [raw]
        indices = [_parse_index(v, legs) for v in raw]
    indices = [idx.check(config) for idx in indices if len(idx)]
    if not indices:
        raise UsageError("no nonempty multi-index requested")

    lam = to_fraction(str(m["lam"]))
    if lam <= 0:
        raise UsageError(f"lambda must be positive, got {lam}")
    z = [to_fraction(str(v)) for v in _csv_list(m["z"])] or \
        [Fraction(1)] + [Fraction(0)] * (legs - 1)
    if len(z) > legs:
        raise UsageError("more z values than legs")

    command = args.command
    valid_engines = MGF_ENGINES if command == "mgf" else MOMENT_ENGINES
    engines = _csv_list(m["engines"])
    if not engines:
        engines = ["closed", "quadrature"] if command == "mgf" else \
            ["closed", "recursive", "series"] + (["brownian"] if nu == Fraction(-1, 2) else [])
    for e in engines:
        if e not in valid_engines:
            raise UsageError(f"unknown engine {e!r} for {command}; choose from {valid_engines}")
    suites = _csv_list(m["suites"]) or list(checks.DEFAULT_SUITES)
    for s in suites:
        if s not in checks.SUITES:
            raise UsageError(f"unknown suite {s!r}; choose from {checks.SUITES}")

    if m["debug_c_exponent"] not in DEBUG_EXPONENTS:
        raise UsageError(f"--debug-c-exponent must be one of {sorted(DEBUG_EXPONENTS)}")
    if m["format"] not in ("json", "csv"):
        raise UsageError("--format must be json or csv")
    if m["leg_rule"] not in LEG_RULES:
        raise UsageError(f"--leg-rule must be one of {LEG_RULES}")

    needs_sim = command == "simulate" or "mc" in engines or (command == "validate" and "mc" in suites)
    sim = None
    if needs_sim:
        steps = float(m["steps"])
        eps = math.sqrt(steps) if m["eps"] is None else float(m["eps"])
        sim = SimConfig(step=steps, threshold=eps, replicates=int(m["reps"]),
                        master_seed=int(m["seed"]), leg_rule=m["leg_rule"])

    echo = {
        "command": command,
        "nu": _frac(nu),
        "beta": [_frac(b) for b in config.betas],
        "sectors": sectors,
        "indices": [_label(idx, legs) for idx in indices] if command != "mgf" else None,
        "lambda": _frac(lam),
        "z": [_frac(v) for v in z],
        "engines": engines if command != "validate" else None,
        "suites": suites if command == "validate" else None,
        "paper_literal": bool(m["paper_literal"]),
        "c_exponent": m["debug_c_exponent"],
        "sim": asdict(sim) if sim else None,
    }
    return RunSpec(command, nu, config, sectors, indices, lam, z, engines, suites,
                   bool(m["paper_literal"]), DEBUG_EXPONENTS[m["debug_c_exponent"]], sim,
                   m["out"], m["format"], echo)


# ---------------------------------------------------------------------------
# rendering


def _frac(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _decimal(q) -> str:
    if isinstance(q, Fraction):
        return str(_DECIMAL.divide(Decimal(q.numerator), Decimal(q.denominator)))
    return repr(float(q))


def _label(idx: MultiIndex, legs: int) -> str:
    # dense exponent vector, matching the --idx syntax
    exps = dict(idx.entries)
    return "(" + ",".join(str(exps.get(i, 0)) for i in range(legs)) + ")"


def _exact_row(name: str, engine: str, idx: str, value) -> dict:
    exact = _frac(value) if isinstance(value, Fraction) else None
    return {"name": name, "engine": engine, "index": idx, "exact": exact,
            "decimal": _decimal(value)}


def _check_row(c: checks.Check) -> dict:
    return {"suite": c.suite, "name": c.name, "passed": c.passed,
            "achieved": repr(float(c.achieved)), "tolerance": repr(float(c.tolerance)),
            "detail": c.detail}


def render(payload: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    w.writeheader()
    for key, value in payload["config"].items():
        w.writerow({"section": "config", "name": key,
                    "exact": json.dumps(value) if not isinstance(value, str) else value})
    for row in payload["engine_results"]:
        w.writerow({"section": "result", **{k: row.get(k) for k in CSV_HEADER if k in row}})
    for row in payload["checks"]:
        w.writerow({"section": "check", "name": row["name"], "engine": row["suite"],
                    "passed": row["passed"], "achieved": row["achieved"],
                    "tolerance": row["tolerance"]})
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def cmd_moments(spec: RunSpec) -> tuple[list[dict], list[checks.Check]]:
    nu, config = spec.nu, spec.config
    rows, out_checks = [], []
    order = max(idx.total for idx in spec.indices)
    series = None
    if "series" in spec.engines:
        series = mgf_series_moments(nu, config, min(order, 10), exponent_scale=spec.exponent_scale)
    for idx in spec.indices:
        values: dict[str, Fraction] = {}
        for engine in spec.engines:
            if engine == "closed":
                values[engine] = joint_moment_closed(nu, config, idx)
            elif engine == "recursive":
                values[engine] = joint_moment_recursive(ClosedFormD(nu), config, idx)
            elif engine == "brownian":
                if nu != Fraction(-1, 2):
                    raise UsageError("the brownian engine needs nu = -1/2")
                values[engine] = brownian_joint_moment(config, idx)
            elif engine == "series":
                if idx.total > 10:
                    raise UsageError("series extraction is limited to total order 10")
                values[engine] = series[idx]
            elif engine == "laplace":
                transform = laplace_joint_moment(ClosedFormD(nu), config, idx, spec.lam,
                                                 spec.paper_literal)
                values[engine] = laplace_to_moment(transform, idx.total, spec.lam)
        rows.extend(_exact_row("moment", e, _label(idx, config.leg_count), v) for e, v in values.items())
        distinct = set(values.values())
        out_checks.append(checks.Check("moments", f"engines agree at {_label(idx, config.leg_count)}", len(distinct) <= 1,
                                       0.0 if len(distinct) <= 1 else 1.0, 0.0,
                                       ",".join(values)))
    return rows, out_checks


def cmd_validate(spec: RunSpec) -> tuple[list[dict], list[checks.Check]]:
    out: list[checks.Check] = []
    for suite in spec.suites:
        if suite == "identities":
            out += checks.identity_suite()
        elif suite == "engines":
            out += checks.engine_suite(spec.nu, spec.config, spec.indices, spec.exponent_scale)
        elif suite == "dfactor":
            out += checks.dfactor_suite(spec.nu, spec.config)
        elif suite == "mgf":
            out += checks.mgf_suite(spec.nu, spec.config, float(spec.lam),
                                    exponent_scale=spec.exponent_scale)
        elif suite == "laplace":
            out += checks.laplace_suite(spec.nu, spec.config, spec.indices, spec.paper_literal)
        elif suite == "mc":
            out += checks.mc_suite(spec.nu, spec.config, spec.indices, spec.sim)
    return [], out


def cmd_simulate(spec: RunSpec) -> tuple[list[dict], list[checks.Check]]:
    law = BesselLaw(spec.nu)
    ests = estimate_joint_moments(law, spec.config, spec.indices, spec.sim)
    rows, out = [], []
    for idx, est in zip(spec.indices, ests):
        ref = joint_moment_closed(spec.nu, spec.config, idx)
        z = est.z_score(float(ref))
        rows.append({"name": "moment", "engine": "mc", "index": _label(idx, spec.config.leg_count),
                     "decimal": repr(est.mean), "std_error": repr(est.std_error),
                     "reference": _frac(ref), "z_score": repr(z)})
        band = 3 * est.std_error + 0.02 * float(ref)
        err = abs(est.mean - float(ref))
        out.append(checks.Check("mc", f"Monte Carlo at {_label(idx, spec.config.leg_count)}", err <= band, err, band))
    return rows, out


def cmd_mgf(spec: RunSpec) -> tuple[list[dict], list[checks.Check]]:
    query = MgfQuery(spec.lam, tuple(spec.z))
    label = "z=(" + ",".join(_frac(v) for v in spec.z) + ")"
    closed = mgf_bessel_closed(spec.nu, spec.config, query, spec.exponent_scale)
    rows, out = [], []
    for engine in spec.engines:
        if engine == "closed":
            rows.append({"name": "mgf", "engine": engine, "index": label,
                         "decimal": repr(closed)})
        elif engine == "quadrature":
            v = mgf_general_quadrature(BesselLaw(spec.nu), spec.config, query)
            rows.append({"name": "mgf", "engine": engine, "index": label, "decimal": repr(v)})
            out.append(checks.Check("mgf", "quadrature vs closed form", abs(v - closed) <= 1e-6,
                                    abs(v - closed), 1e-6))
        elif engine == "mc":
            est = estimate_mgf(BesselLaw(spec.nu), spec.config, query, spec.sim)
            z = est.z_score(closed)
            rows.append({"name": "mgf", "engine": engine, "index": label,
                         "decimal": repr(est.mean), "std_error": repr(est.std_error),
                         "reference": repr(closed), "z_score": repr(z)})
            band = 3 * est.std_error
            out.append(checks.Check("mc", "Monte Carlo vs closed form",
                                    abs(est.mean - closed) <= band, abs(est.mean - closed), band))
    return rows, out


COMMANDS = {"moments": cmd_moments, "validate": cmd_validate,
            "simulate": cmd_simulate, "mgf": cmd_mgf}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with [spider] [query] [sim] [output]")
    common.add_argument("--nu", help="Bessel parameter in (-1,0), e.g. -1/2")
    common.add_argument("--beta", help="leg weights p/q,... summing to 1")
    common.add_argument("--sectors", help="sector boundaries 0,...,2pi (uniform angles)")
    common.add_argument("--idx", action="append", help="exponents n1,n2,... (repeatable)")
    common.add_argument("--lambda", dest="lam", help="Laplace / exponential-time rate")
    common.add_argument("--z", help="MGF arguments z1,z2,...")
    common.add_argument("--engines", help="comma-separated engines")
    common.add_argument("--suites", help="validation suites: " + ",".join(checks.SUITES))
    common.add_argument("--steps", type=float, help="simulation time step")
    common.add_argument("--eps", type=float, help="radial threshold (crossing rule)")
    common.add_argument("--leg-rule", dest="leg_rule", help="bridge or crossing")
    common.add_argument("--reps", type=int, help="Monte Carlo replicates")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", help="json or csv")
    common.add_argument("--paper-literal", dest="paper_literal", action="store_true",
                        help="refuse the one-leg Laplace recursion instead of repairing it")
    common.add_argument("--debug-c-exponent", dest="debug_c_exponent",
                        help="'half' swaps in a wrong vertex-constant exponent")
    parser = argparse.ArgumentParser(prog="spider-moments",
                                     description="Occupation-time moments on diffusion spiders")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("moments", parents=[common], help="moment table from the exact engines")
    sub.add_parser("validate", parents=[common], help="run cross-validation suites")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo moment estimates")
    sub.add_parser("mgf", parents=[common], help="moment generating function at exp. time")
    return parser


def _glue_negative_values(argv: Sequence[str]) -> list[str]:
    # argparse takes "-1/2" for an option; attach such values to their flag
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok.startswith("--") and "=" not in tok:
            nxt = next(it, None)
            if nxt is not None and len(nxt) > 1 and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == "."):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(tok)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = _glue_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        spec = build_spec(args)
        rows, results = COMMANDS[spec.command](spec)
    except PaperLiteralError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, SpiderConfigError, ValueError, TypeError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QuadratureError as exc:
        print(f"error: {exc} (estimated error {exc.abserr:.3g})", file=sys.stderr)
        return EXIT_FAIL
    payload = {"config": spec.echo, "engine_results": rows,
               "checks": [_check_row(c) for c in results]}
    text = render(payload, spec.fmt)
    if spec.out:
        with open(spec.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failed = [c for c in results if not c.passed]
    for c in failed:
        print(f"FAIL {c.suite}: {c.name} (achieved {c.achieved:.3g}, tolerance {c.tolerance:.3g})",
              file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
