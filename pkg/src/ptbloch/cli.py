"""Command-line experiment runner.

Every computation is exposed as a subcommand writing a deterministic CSV or
JSON table: given the same configuration and seed, two runs produce
byte-identical files.  Configuration can come from a flat ``key = value``
text file (``--config``); command-line flags override file values.

Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bloch, lattice
from .errors import NumericalError, PeakDetectionError, ValidationError
from .integrate import IntegratorConfig
from .propagator import (PT_IMAGINARY, StateVector2,
                         asymptotic_transmission_estimate, eigenstate_initial,
                         numerical_transmission, propagate_sweep)
from .two_level import TwoLevelParams, analytic_transmission, spectrum

OUT_DIR_ENV = "PTBLOCH_OUT_DIR"

CSV = "csv"
JSON = "json"

SPECTRUM_SCAN = "spectrum_scan"
TWO_LEVEL_SWEEP = "two_level_sweep"
PTR_CURVE = "ptr_curve"
LATTICE_EVOLUTION = "lattice_evolution"
LATTICE_TRANSMISSION_SCAN = "lattice_transmission_scan"
DISPERSION_SCAN = "dispersion_scan"

# scenario -> (required keys, optional keys with defaults)
_SCHEMAS: dict[str, tuple[dict[str, type], dict[str, object]]] = {
    SPECTRUM_SCAN: (
        {"gamma": float, "v_min": float, "v_max": float, "n_points": int}, {}),
    TWO_LEVEL_SWEEP: (
        {"gamma": float, "alpha": float, "v_initial": float, "v_final": float,
         "initial": str},
        {"rel_tolerance": 1e-9, "abs_tolerance": 1e-12}),
    PTR_CURVE: (
        {"gamma": float, "alpha_min": float, "alpha_max": float,
         "n_points": int, "mode": str},
        {"v_range_factor": 20.0}),
    LATTICE_EVOLUTION: (
        {"gamma_lattice": float, "force": float},
        {"q0": -15.0, "k0": math.pi, "sigma_sq": 20.0,
         "t_final": None, "sample_every": None}),
    LATTICE_TRANSMISSION_SCAN: (
        {"gamma_lattice": float, "f_min": float, "f_max": float, "n_points": int},
        {"q0": -15.0, "k0": math.pi, "sigma_sq": 20.0}),
    DISPERSION_SCAN: (
        {"gamma_lattice": float, "n_k": int}, {}),
}

_INITIAL_CHOICES = ("eigenstate_plus", "eigenstate_minus", "diabatic_2", "random")
_MODE_CHOICES = ("analytic", "numeric", "both")


@dataclass
class RunConfig:
    """A fully-resolved scenario run: what to compute and where to write it."""

    scenario: str
    parameters: dict = field(default_factory=dict)
    output_path: str = "out.csv"
    format: str = CSV
    seed: int = 0
    threads: int = 1

    def validate(self) -> None:
        if self.scenario not in _SCHEMAS:
            raise ValidationError(
                f"unknown scenario {self.scenario!r}; choose from {sorted(_SCHEMAS)}")
        if self.format not in (CSV, JSON):
            raise ValidationError(f"format must be csv or json, got {self.format!r}")
        if self.threads < 1:
            raise ValidationError(f"threads must be >= 1, got {self.threads}")
        required, optional = _SCHEMAS[self.scenario]
        for key in self.parameters:
            if key not in required and key not in optional:
                raise ValidationError(
                    f"unknown parameter {key!r} for scenario {self.scenario}")
        missing = [k for k in required if k not in self.parameters]
        if missing:
            raise ValidationError(
                f"scenario {self.scenario} missing required parameters: {missing}")
        for key, typ in required.items():
            if typ in (float, int):
                self.parameters[key] = typ(float(self.parameters[key]))
        for key, default in optional.items():
            if key in self.parameters:
                value = self.parameters[key]
                if isinstance(default, float) or default is None:
                    self.parameters[key] = None if value in (None, "none") else float(value)
            else:
                self.parameters[key] = default
        initial = self.parameters.get("initial")
        if initial is not None and initial not in _INITIAL_CHOICES:
            raise ValidationError(
                f"initial must be one of {_INITIAL_CHOICES}, got {initial!r}")
        mode = self.parameters.get("mode")
        if self.scenario == PTR_CURVE and mode not in _MODE_CHOICES:
            raise ValidationError(f"mode must be one of {_MODE_CHOICES}, got {mode!r}")

    def to_text(self) -> str:
        """Serialize as the flat key = value config format (round-trips)."""
        lines = [f"scenario = {self.scenario}",
                 f"out = {self.output_path}",
                 f"format = {self.format}",
                 f"seed = {self.seed}",
                 f"threads = {self.threads}"]
        for key in sorted(self.parameters):
            value = self.parameters[key]
            if value is None:
                continue
            lines.append(f"{key} = {_fmt_value(value)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        pairs = parse_config_text(text)
        if "scenario" not in pairs:
            raise ValidationError("config file must set 'scenario'")
        cfg = cls(scenario=pairs.pop("scenario"))
        cfg.output_path = pairs.pop("out", cfg.output_path)
        cfg.format = pairs.pop("format", cfg.format)
        cfg.seed = int(float(pairs.pop("seed", cfg.seed)))
        cfg.threads = int(float(pairs.pop("threads", cfg.threads)))
        cfg.parameters = dict(pairs)
        cfg.validate()
        return cfg


def parse_config_text(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno} is not 'key = value': {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ValidationError(f"config line {lineno} is not 'key = value': {raw!r}")
        if key in pairs:
            raise ValidationError(f"duplicate config key {key!r} (line {lineno})")
        pairs[key] = value
    return pairs


def _fmt_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fmt_cell(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_table(path: str, columns: list[str], rows: list[list],
                metadata: dict, fmt: str) -> None:
    """Write a data table with shortest-round-trip floats and LF endings."""
    if fmt == CSV:
        lines = [f"# {key}={_fmt_value(metadata[key])}" for key in sorted(metadata)]
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(_fmt_cell(x) for x in row))
        body = "\n".join(lines) + "\n"
        with open(path, "w", newline="\n") as fh:
            fh.write(body)
    else:
        payload = {
            "metadata": {k: metadata[k] for k in sorted(metadata)},
            "columns": columns,
            "rows": [[int(x) if isinstance(x, (int, np.integer)) else float(x)
                      for x in row] for row in rows],
        }
        with open(path, "w", newline="\n") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")


def _parallel_map(fn, items, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --- scenario runners -------------------------------------------------------

def run_spectrum_scan(cfg: RunConfig) -> None:
    p = cfg.parameters
    if p["n_points"] < 1:
        raise ValidationError("n_points must be >= 1")
    v_grid = np.linspace(p["v_min"], p["v_max"], p["n_points"])
    rows = []
    for v in v_grid:
        s = spectrum(float(v), p["gamma"])
        lp, lm = s.eigenvalues
        rows.append([float(v), lp.real, lp.imag, lm.real, lm.imag, s.overlap])
    meta = {"scenario": cfg.scenario, "gamma": p["gamma"]}
    write_table(cfg.output_path,
                ["v", "re_lambda_plus", "im_lambda_plus",
                 "re_lambda_minus", "im_lambda_minus", "overlap"],
                rows, meta, cfg.format)


def _initial_state(name: str, params: TwoLevelParams, seed: int) -> StateVector2:
    if name == "eigenstate_plus":
        return eigenstate_initial(params, "plus")
    if name == "eigenstate_minus":
        return eigenstate_initial(params, "minus")
    if name == "diabatic_2":
        return StateVector2.diabatic_2()
    return StateVector2.random(seed)


def run_two_level_sweep(cfg: RunConfig) -> None:
    p = cfg.parameters
    params = TwoLevelParams(p["gamma"], p["alpha"], p["v_initial"], p["v_final"])
    config = IntegratorConfig(rel_tolerance=p["rel_tolerance"],
                              abs_tolerance=p["abs_tolerance"])
    initial = _initial_state(p["initial"], params, cfg.seed)
    trace = propagate_sweep(params, initial, config, PT_IMAGINARY)
    rows = [[t, v, pp, pm, ln]
            for t, v, (pp, pm), ln in zip(trace.times, trace.v_values,
                                          trace.populations, trace.log_norm)]
    meta = {"scenario": cfg.scenario, "gamma": p["gamma"], "alpha": p["alpha"],
            "initial": p["initial"]}
    if p["initial"] == "random":
        meta["seed"] = cfg.seed
    if p["initial"] == "diabatic_2":
        meta["numerical_transmission"] = numerical_transmission(trace)
    write_table(cfg.output_path, ["t", "v", "p_plus", "p_minus", "log_norm"],
                rows, meta, cfg.format)


def _numeric_transmission_point(gamma: float, alpha: float,
                                v_range_factor: float) -> float:
    half_range = v_range_factor * gamma
    params = TwoLevelParams(gamma, alpha, -half_range, half_range)
    trace = propagate_sweep(params, eigenstate_initial(params, "minus"))
    return asymptotic_transmission_estimate(trace)


def run_ptr_curve(cfg: RunConfig) -> None:
    p = cfg.parameters
    if p["n_points"] < 2:
        raise ValidationError("n_points must be >= 2")
    if not 0 < p["alpha_min"] < p["alpha_max"]:
        raise ValidationError("need 0 < alpha_min < alpha_max")
    alphas = np.geomspace(p["alpha_min"], p["alpha_max"], p["n_points"])
    gamma = p["gamma"]
    mode = p["mode"]
    analytic = [analytic_transmission(gamma, float(a)).p_tr for a in alphas]
    numeric = None
    if mode in ("numeric", "both"):
        numeric = _parallel_map(
            lambda a: _numeric_transmission_point(gamma, float(a), p["v_range_factor"]),
            list(alphas), cfg.threads)

    columns = ["alpha"]
    if mode in ("analytic", "both"):
        columns.append("p_tr_analytic")
    if mode in ("numeric", "both"):
        columns.append("p_tr_numeric")
    if mode == "both":
        columns.append("abs_diff")
    rows = []
    for i, a in enumerate(alphas):
        row = [float(a)]
        if mode in ("analytic", "both"):
            row.append(analytic[i])
        if mode in ("numeric", "both"):
            row.append(numeric[i])
        if mode == "both":
            row.append(abs(analytic[i] - numeric[i]))
        rows.append(row)
    meta = {"scenario": cfg.scenario, "gamma": gamma, "mode": mode,
            "v_range_factor": p["v_range_factor"]}
    write_table(cfg.output_path, columns, rows, meta, cfg.format)


def _summary_path(path: str) -> str:
    root, ext = os.path.splitext(path)
    return f"{root}_summary{ext or '.csv'}"


def _split_summary_row(sample, beam: lattice.GaussianBeam, gamma_lattice: float,
                       force: float) -> list:
    separation = lattice.branch_separation_hint(beam, force)
    branches = lattice.branch_populations(sample.density,
                                          min_separation=separation,
                                          site_offset=int(sample.sites[0]))
    p_formula = bloch.effective_lz_params(gamma_lattice, force)[2]
    return [force, gamma_lattice, branches.upper_fraction, p_formula,
            abs(branches.upper_fraction - p_formula)]


def run_lattice_evolution(cfg: RunConfig) -> None:
    p = cfg.parameters
    beam = lattice.GaussianBeam(q0=p["q0"], k0=p["k0"], sigma_sq=p["sigma_sq"])
    force = p["force"]
    t_final = p["t_final"]
    if t_final is None:
        if force <= 0:
            raise ValidationError("t_final is required when force = 0")
        t_final = 0.5 * lattice.bloch_period(force)
    sample_every = p["sample_every"]
    if sample_every is None:
        sample_every = t_final / 100.0
    samples = lattice.drive_beam(beam, p["gamma_lattice"], force,
                                 t_final=t_final, sample_every=sample_every)
    rows = []
    for sample in samples:
        for site, dens in zip(sample.sites, sample.density):
            rows.append([sample.time, int(site), float(dens)])
    meta = {"scenario": cfg.scenario, "gamma_lattice": p["gamma_lattice"],
            "force": force, "q0": beam.q0, "k0": beam.k0,
            "sigma_sq": beam.sigma_sq, "t_final": t_final}
    write_table(cfg.output_path, ["time", "site", "density"], rows, meta, cfg.format)

    # branch summary at the final sample, where the beam has split
    summary_meta = dict(meta)
    summary_meta["scenario"] = LATTICE_TRANSMISSION_SCAN
    columns = ["force", "gamma_lattice", "upper_fraction", "p_tr_formula", "abs_diff"]
    try:
        if force <= 0 or p["gamma_lattice"] <= 0:
            raise PeakDetectionError("no beam splitting without force and gain/loss")
        summary_rows = [_split_summary_row(samples[-1], beam, p["gamma_lattice"], force)]
    except PeakDetectionError as err:
        summary_rows = []
        summary_meta["split_error"] = str(err)
    write_table(_summary_path(cfg.output_path), columns, summary_rows,
                summary_meta, cfg.format)


def run_lattice_transmission_scan(cfg: RunConfig) -> None:
    p = cfg.parameters
    if p["n_points"] < 1:
        raise ValidationError("n_points must be >= 1")
    if not 0 < p["f_min"] <= p["f_max"]:
        raise ValidationError("need 0 < f_min <= f_max")
    beam = lattice.GaussianBeam(q0=p["q0"], k0=p["k0"], sigma_sq=p["sigma_sq"])
    gamma_lattice = p["gamma_lattice"]
    forces = np.geomspace(p["f_min"], p["f_max"], p["n_points"])

    def one(force: float) -> list:
        samples = lattice.drive_beam(beam, gamma_lattice, force)
        return _split_summary_row(samples[-1], beam, gamma_lattice, force)

    rows = _parallel_map(lambda f: one(float(f)), list(forces), cfg.threads)
    meta = {"scenario": cfg.scenario, "gamma_lattice": gamma_lattice,
            "q0": beam.q0, "k0": beam.k0, "sigma_sq": beam.sigma_sq}
    write_table(cfg.output_path,
                ["force", "gamma_lattice", "upper_fraction", "p_tr_formula",
                 "abs_diff"], rows, meta, cfg.format)


def run_dispersion_scan(cfg: RunConfig) -> None:
    p = cfg.parameters
    if p["n_k"] < 2:
        raise ValidationError("n_k must be >= 2")
    gamma_lattice = p["gamma_lattice"]
    k_grid = np.linspace(-math.pi, math.pi, p["n_k"])
    e_plus, e_minus = bloch.dispersion(k_grid, gamma_lattice)
    # band-edge expansion: detuning linearized as v_eff = 2 (k - pi/2)
    v_eff = 2.0 * (k_grid - math.pi / 2.0)
    e_taylor = np.sqrt((v_eff ** 2 - gamma_lattice ** 2).astype(complex))
    rows = [[float(k), ep.real, ep.imag, em.real, em.imag, et.real, et.imag]
            for k, ep, em, et in zip(k_grid, e_plus, e_minus, e_taylor)]
    meta = {"scenario": cfg.scenario, "gamma_lattice": gamma_lattice}
    write_table(cfg.output_path,
                ["k", "re_E_plus", "im_E_plus", "re_E_minus", "im_E_minus",
                 "re_E_taylor_plus", "im_E_taylor_plus"], rows, meta, cfg.format)


_RUNNERS = {
    SPECTRUM_SCAN: run_spectrum_scan,
    TWO_LEVEL_SWEEP: run_two_level_sweep,
    PTR_CURVE: run_ptr_curve,
    LATTICE_EVOLUTION: run_lattice_evolution,
    LATTICE_TRANSMISSION_SCAN: run_lattice_transmission_scan,
    DISPERSION_SCAN: run_dispersion_scan,
}


def run(cfg: RunConfig) -> None:
    """Validate and execute a scenario, resolving the output directory."""
    cfg.validate()
    out_dir = os.environ.get(OUT_DIR_ENV)
    if out_dir and not os.path.isabs(cfg.output_path):
        cfg.output_path = os.path.join(out_dir, cfg.output_path)
    _RUNNERS[cfg.scenario](cfg)


# --- argument parsing -------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="output file path")
    parser.add_argument("--format", choices=[CSV, JSON], help="output format")
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--seed", type=int, help="seed for random initial states")
    parser.add_argument("--threads", type=int, help="worker threads for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptbloch",
        description="Non-Hermitian two-level sweeps and PT-lattice Bloch oscillations")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="eigenvalues and overlap vs detuning")
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--v-min", type=float)
    sp.add_argument("--v-max", type=float)
    sp.add_argument("--n-points", type=int)
    _add_common(sp)

    sw = sub.add_parser("sweep", help="time-resolved driven sweep")
    sw.add_argument("--gamma", type=float)
    sw.add_argument("--alpha", type=float)
    sw.add_argument("--v-initial", type=float)
    sw.add_argument("--v-final", type=float)
    sw.add_argument("--initial", choices=_INITIAL_CHOICES)
    sw.add_argument("--rel-tolerance", type=float)
    sw.add_argument("--abs-tolerance", type=float)
    _add_common(sw)

    pc = sub.add_parser("ptr-curve", help="transmission probability vs sweep rate")
    pc.add_argument("--gamma", type=float)
    pc.add_argument("--alpha-min", type=float)
    pc.add_argument("--alpha-max", type=float)
    pc.add_argument("--n-points", type=int)
    pc.add_argument("--mode", choices=_MODE_CHOICES)
    pc.add_argument("--v-range-factor", type=float)
    _add_common(pc)

    lt = sub.add_parser("lattice", help="beam evolution movie or force scan")
    lt.add_argument("--gamma-lattice", type=float)
    lt.add_argument("--force", type=float, help="single-force evolution movie")
    lt.add_argument("--f-min", type=float, help="force scan lower bound")
    lt.add_argument("--f-max", type=float, help="force scan upper bound")
    lt.add_argument("--f-points", type=int, help="force scan point count")
    lt.add_argument("--q0", type=float)
    lt.add_argument("--k0", type=float)
    lt.add_argument("--sigma-sq", type=float)
    lt.add_argument("--t-final", type=float)
    lt.add_argument("--sample-every", type=float)
    _add_common(lt)

    ds = sub.add_parser("dispersion", help="band structure scan")
    ds.add_argument("--gamma-lattice", type=float)
    ds.add_argument("--n-k", type=int)
    _add_common(ds)
    return parser


_COMMAND_SCENARIO = {
    "spectrum": SPECTRUM_SCAN,
    "sweep": TWO_LEVEL_SWEEP,
    "ptr-curve": PTR_CURVE,
    "dispersion": DISPERSION_SCAN,
}

_COMMON_KEYS = ("out", "format", "config", "seed", "threads")


def _scenario_for(args: argparse.Namespace) -> str:
    if args.command != "lattice":
        return _COMMAND_SCENARIO[args.command]
    scan_flags = [args.f_min, args.f_max, args.f_points]
    if args.force is not None and any(v is not None for v in scan_flags):
        raise ValidationError("give either --force or --f-min/--f-max/--f-points")
    if args.force is not None:
        return LATTICE_EVOLUTION
    if all(v is not None for v in scan_flags):
        return LATTICE_TRANSMISSION_SCAN
    raise ValidationError("lattice needs --force or all of --f-min/--f-max/--f-points")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Merge config file (if any) with command-line flags; flags win."""
    scenario = _scenario_for(args)
    if args.config is not None:
        with open(args.config) as fh:
            cfg = RunConfig.from_text(fh.read())
        if cfg.scenario != scenario:
            raise ValidationError(
                f"config file scenario {cfg.scenario!r} does not match the "
                f"{args.command!r} subcommand")
    else:
        cfg = RunConfig(scenario=scenario)

    flag_to_param = {"f_min": "f_min", "f_max": "f_max", "f_points": "n_points"}
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        if key == "out":
            cfg.output_path = value
        elif key == "format":
            cfg.format = value
        elif key == "seed":
            cfg.seed = value
        elif key == "threads":
            cfg.threads = value
        else:
            cfg.parameters[flag_to_param.get(key, key)] = value
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        run(cfg)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
