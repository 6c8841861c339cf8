"""Command-line frontend.

One subcommand per capability: ``gfun`` (decay amplitude), ``evolve``
(state trajectory), ``measure`` (backflow measure), ``divisibility``
(map-family audit), ``witness`` (correlation detection) and ``sweep``
(coupling scans).  Subcommands read a JSON config, validate it against a
schema before any computation starts, and write deterministic CSV/JSON
output; ``--plot`` renders a PNG figure next to the data file.

Exit codes: 0 success, 2 validation failure, 3 numeric failure,
4 internal invariant violation.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import backflow, channels, decay, timelocal, witness
from .errors import (
    InvariantViolation,
    NumericError,
    ValidationError,
)
from .serialize import cmatrix_from_pairs, write_csv, write_json

_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_PAIR_LIST = {
    "type": "array",
    "items": {
        "type": "array",
        "items": _NUMBER,
        "minItems": 2,
        "maxItems": 2,
    },
}

KERNEL_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "type": {"const": "exponential"},
                "gamma0": _POSITIVE,
                "lambda": _POSITIVE,
            },
            "required": ["type", "gamma0", "lambda"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "tabulated"},
                "dt": _POSITIVE,
                "values": _PAIR_LIST,
            },
            "required": ["type", "dt", "values"],
            "additionalProperties": False,
        },
    ]
}

SEARCH_SCHEMA = {
    "type": "object",
    "properties": {
        "n_radii": {"type": "integer", "minimum": 1},
        "seeds": {"type": "integer", "minimum": 1},
        "initial_step": _POSITIVE,
        "min_step": _POSITIVE,
        "max_sweeps": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

GFUN_SCHEMA = {
    "type": "object",
    "properties": {
        "kernel": KERNEL_SCHEMA,
        "t_max": _POSITIVE,
        "dt": _POSITIVE,
        "mode": {"enum": ["analytic", "numeric", "both"]},
    },
    "required": ["kernel", "t_max", "dt"],
    "additionalProperties": False,
}

EVOLVE_SCHEMA = {
    "type": "object",
    "properties": {
        "kernel": KERNEL_SCHEMA,
        "rho0": {
            "type": "object",
            "properties": {"bloch": {"type": "array", "items": _NUMBER,
                                     "minItems": 3, "maxItems": 3},
                           "matrix": _PAIR_LIST},
            "minProperties": 1,
            "maxProperties": 1,
            "additionalProperties": False,
        },
        "t_max": _POSITIVE,
        "dt": _POSITIVE,
    },
    "required": ["kernel", "rho0", "t_max", "dt"],
    "additionalProperties": False,
}

MEASURE_SCHEMA = {
    "type": "object",
    "properties": {
        "kernel": KERNEL_SCHEMA,
        "family_path": {"type": "string"},
        "t_max": _POSITIVE,
        "dt": _POSITIVE,
        "search": SEARCH_SCHEMA,
    },
    "additionalProperties": False,
}

DIVISIBILITY_SCHEMA = {
    "type": "object",
    "properties": {
        "family_path": {"type": "string"},
        "kernel": KERNEL_SCHEMA,
        "t_max": _POSITIVE,
        "dt": _POSITIVE,
        "tol": {"type": "number", "minimum": 0},
        "dim": {"type": "integer"},
        "times": {"type": "array"},
        "maps": {"type": "array"},
    },
    "additionalProperties": False,
}

WITNESS_SCHEMA = {
    "type": "object",
    "properties": {
        "dim_s": {"type": "integer", "minimum": 1},
        "dim_e": {"type": "integer", "minimum": 1},
        "H_S": _PAIR_LIST,
        "H_E": _PAIR_LIST,
        "H_I": _PAIR_LIST,
        "rho1": _PAIR_LIST,
        "local_op_kraus": {"type": "array", "items": _PAIR_LIST, "minItems": 1},
        "t_max": _POSITIVE,
        "dt": _POSITIVE,
        "tol": {"type": "number", "minimum": 0},
    },
    "required": ["dim_s", "dim_e", "H_S", "H_E", "H_I", "rho1",
                 "local_op_kraus", "t_max", "dt"],
    "additionalProperties": False,
}

SWEEP_SCHEMA = {
    "type": "object",
    "properties": {
        "kernel_base": {
            "type": "object",
            "properties": {"type": {"const": "exponential"}, "lambda": _POSITIVE},
            "required": ["type", "lambda"],
            "additionalProperties": False,
        },
        "gamma0_values": {"type": "array", "items": _POSITIVE, "minItems": 1},
        "t_max": _POSITIVE,
        "dt": _POSITIVE,
        "search": SEARCH_SCHEMA,
    },
    "required": ["kernel_base", "gamma0_values", "t_max", "dt"],
    "additionalProperties": False,
}


def _load_config(path, schema):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(obj, schema)
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"config {path} failed validation: {exc.message}") from exc
    return obj


def _override(config, args, schema, keys=("dt", "t_max")):
    """Apply flag overrides, then re-validate the merged config."""
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    try:
        jsonschema.validate(config, schema)
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"invalid parameters: {exc.message}") from exc
    return config


def _plot_path(out):
    return str(Path(out).with_suffix(".png"))


def _search_config(config, threads):
    search = config.get("search", {})
    return backflow.PairSearchConfig(threads=threads, **search)


def _threads(args):
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("NMKIT_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _decode_matrix(pairs, n, what):
    try:
        return cmatrix_from_pairs(pairs, n, n)
    except ValidationError as exc:
        raise ValidationError(f"{what}: {exc}") from exc


def _gap_pairs(values):
    return [None if np.isnan(x) else float(x) for x in values]


def cmd_gfun(args) -> int:
    config = _override(_load_config(args.config, GFUN_SCHEMA), args, GFUN_SCHEMA)
    mode = args.mode or config.get("mode", "both")
    kernel = decay.kernel_from_obj(config["kernel"])
    t_max, dt = config["t_max"], config["dt"]

    if mode in ("analytic", "both") and not isinstance(kernel, decay.ExponentialKernel):
        raise ValidationError("analytic amplitude requires an exponential kernel")

    if mode == "analytic":
        times = dt * np.arange(int(round(t_max / dt)) + 1)
        traj = decay.GTrajectory(times=times, g=decay.g_analytic(kernel, times))
        reference = None
    else:
        traj = decay.g_numeric(kernel, t_max, dt)
        reference = decay.g_analytic(kernel, traj.times) if mode == "both" else None

    gamma, shift = decay.rates(traj)
    rows = zip(traj.times, traj.g.real, traj.g.imag, np.abs(traj.g), gamma, shift)
    if args.format == "csv":
        write_csv(args.out, ["t", "re_G", "im_G", "abs_G", "gamma", "S"], rows)
    else:
        write_json(args.out, {
            "times": [float(t) for t in traj.times],
            "g": [[float(z.real), float(z.imag)] for z in traj.g],
            "gamma": _gap_pairs(gamma),
            "S": _gap_pairs(shift),
        })
    if reference is not None:
        deviation = float(np.max(np.abs(traj.g - reference)))
        write_json(str(args.out) + ".summary.json", {
            "mode": "both",
            "max_abs_deviation": deviation,
        })
    if args.plot:
        from . import plotting

        plotting.plot_gfun(traj.times, traj.g, gamma, shift, reference,
                           path=_plot_path(args.out))
    return 0


def cmd_evolve(args) -> int:
    config = _override(_load_config(args.config, EVOLVE_SCHEMA), args, EVOLVE_SCHEMA)
    kernel = decay.kernel_from_obj(config["kernel"])
    rho0_spec = config["rho0"]
    if "bloch" in rho0_spec:
        from .qmat import bloch_state

        rho0 = bloch_state(rho0_spec["bloch"])
    else:
        rho0 = _decode_matrix(rho0_spec["matrix"], 2, "rho0")
        from .qmat import validate_density_matrix

        validate_density_matrix(rho0)

    fam = decay.family(kernel, config["t_max"], config["dt"])
    states = np.array([channels.apply_super(m, rho0) for m in fam.maps])
    if args.format == "csv":
        rows = (
            (t, s[0, 0].real, s[1, 0].real, s[1, 0].imag, s[1, 1].real)
            for t, s in zip(fam.times, states)
        )
        write_csv(args.out, ["t", "rho00", "re_rho10", "im_rho10", "rho11"], rows)
    else:
        write_json(args.out, {
            "times": [float(t) for t in fam.times],
            "rho00": [float(s[0, 0].real) for s in states],
            "rho10": [[float(s[1, 0].real), float(s[1, 0].imag)] for s in states],
            "rho11": [float(s[1, 1].real) for s in states],
        })
    if args.plot:
        from . import plotting

        plotting.plot_evolution(fam.times, states, path=_plot_path(args.out))
    return 0


def _family_from_config(config):
    if "family_path" in config:
        doc = _load_config(config["family_path"], {"type": "object"})
        return channels.map_family_from_obj(doc)
    if "maps" in config:
        return channels.map_family_from_obj(config)
    if "kernel" in config:
        if "t_max" not in config or "dt" not in config:
            raise ValidationError("kernel-based configs need t_max and dt")
        kernel = decay.kernel_from_obj(config["kernel"])
        return decay.family(kernel, config["t_max"], config["dt"])
    raise ValidationError("config must carry a kernel, a family_path, or an inline family")


def cmd_measure(args) -> int:
    config = _override(_load_config(args.config, MEASURE_SCHEMA), args, MEASURE_SCHEMA)
    fam = _family_from_config(config)
    report = backflow.maximize(fam, _search_config(config, _threads(args)))
    write_json(args.out, backflow.report_to_obj(report))
    traj = None
    if args.format == "csv" or args.plot:
        traj = backflow.distance_trajectory(fam, *report.optimal_pair)
    if args.format == "csv":
        rates = backflow.sigma(traj)
        write_csv(
            str(Path(args.out).with_suffix(".csv")),
            ["t", "D", "sigma"],
            zip(traj.times, traj.d, rates),
        )
    if args.plot:
        from . import plotting

        plotting.plot_measure(traj.times, traj.d, report.intervals,
                              path=_plot_path(args.out))
    return 0


def cmd_divisibility(args) -> int:
    config = _override(_load_config(args.config, DIVISIBILITY_SCHEMA), args,
                       DIVISIBILITY_SCHEMA, keys=("dt", "t_max", "tol"))
    fam = _family_from_config(config)
    tol = config.get("tol", channels.CP_AUDIT_TOL)
    intervals = channels.audit_divisibility(fam, tol)
    write_json(args.out, {
        "divisible": not intervals,
        "tol": tol,
        "intervals": [
            {
                "t_start": iv.t_start,
                "t_end": iv.t_end,
                "min_choi_eigenvalue": None if np.isnan(iv.min_choi_eigenvalue)
                else iv.min_choi_eigenvalue,
                "kind": iv.kind,
            }
            for iv in intervals
        ],
    })
    if args.plot:
        from . import plotting

        min_eigs = np.empty(len(fam) - 1)
        for k in range(len(fam) - 1):
            try:
                step = fam.maps[k + 1] @ channels.invert(fam.maps[k])
                min_eigs[k] = channels.choi_min_eigenvalue(step)
            except NumericError:
                min_eigs[k] = np.nan
        plotting.plot_divisibility(fam.times[:-1], min_eigs, intervals,
                                   path=_plot_path(args.out))
    return 0


def cmd_witness(args) -> int:
    config = _override(_load_config(args.config, WITNESS_SCHEMA), args,
                       WITNESS_SCHEMA, keys=("dt", "t_max", "tol"))
    dim_s, dim_e = config["dim_s"], config["dim_e"]
    d_total = dim_s * dim_e
    model = witness.TotalModel.from_parts(
        _decode_matrix(config["H_S"], dim_s, "H_S"),
        _decode_matrix(config["H_E"], dim_e, "H_E"),
        _decode_matrix(config["H_I"], d_total, "H_I"),
    )
    rho1 = _decode_matrix(config["rho1"], d_total, "rho1")
    kraus = [_decode_matrix(k, dim_s, "local_op_kraus") for k in config["local_op_kraus"]]
    local_op = channels.kraus_to_super(kraus)
    record = witness.run_witness(
        model, rho1, local_op,
        t_max=config["t_max"], dt=config["dt"],
        tol=config.get("tol", witness.WITNESS_TOL),
    )
    write_json(args.out, {
        "verdict": record.verdict,
        "d_local_0": record.d_local_0,
        "max_increase": record.max_increase,
        "bound_corr1": record.bound_corr1,
        "bound_corr2": record.bound_corr2,
        "bound_env": record.bound_env,
        "tol": record.tol,
        "times": [float(t) for t in record.times],
        "d_local": [float(d) for d in record.d_local],
    })
    write_csv(
        str(Path(args.out).with_suffix(".csv")),
        ["t", "D"],
        zip(record.times, record.d_local),
    )
    if args.plot:
        from . import plotting

        plotting.plot_witness(record, path=_plot_path(args.out))
    return 0


def cmd_sweep(args) -> int:
    config = _override(_load_config(args.config, SWEEP_SCHEMA), args, SWEEP_SCHEMA)
    lam = config["kernel_base"]["lambda"]
    gammas = config["gamma0_values"]
    threads = _threads(args)

    def run_one(gamma0):
        kernel = decay.ExponentialKernel(gamma0=gamma0, lam=lam)
        fam = decay.family(kernel, config["t_max"], config["dt"])
        return backflow.maximize(fam, _search_config(config, 1))

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(run_one, gammas))
    else:
        reports = [run_one(g) for g in gammas]

    n_values = [r.n_value for r in reports]
    if args.format == "json":
        write_json(args.out, {
            "gamma0": [float(g) for g in gammas],
            "n": n_values,
            "evaluations": [r.evaluations for r in reports],
        })
    else:
        write_csv(args.out, ["gamma0", "n", "evaluations"],
                  zip(gammas, n_values, (r.evaluations for r in reports)))
    if args.plot:
        from . import plotting

        plotting.plot_sweep(gammas, n_values, path=_plot_path(args.out))
    return 0


_COMMANDS = {
    "gfun": (cmd_gfun, "decay amplitude G(t) of a kernel"),
    "evolve": (cmd_evolve, "evolve a qubit state under the decay model"),
    "measure": (cmd_measure, "backflow measure of a map family"),
    "divisibility": (cmd_divisibility, "audit a map family for divisibility"),
    "witness": (cmd_witness, "detect initial correlations by a local operation"),
    "sweep": (cmd_sweep, "backflow measure over a list of couplings"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nmkit",
        description="Open-system information flow: decay model, divisibility, "
                    "backflow measure and correlation witness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (func, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", required=True, help="path of the output file")
        p.add_argument("--format", choices=("csv", "json"),
                       default="csv" if name in ("gfun", "evolve", "sweep") else "json")
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--t-max", dest="t_max", type=float, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (NMKIT_THREADS as fallback)")
        p.add_argument("--plot", action="store_true",
                       help="render a PNG figure next to the output")
        p.set_defaults(func=func)
    for name in ("gfun",):
        sub.choices[name].add_argument("--mode", choices=("analytic", "numeric", "both"),
                                       default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"nmkit: validation error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"nmkit: numeric failure: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"nmkit: internal invariant violated: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
