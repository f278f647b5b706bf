"""Command-line front end: ``m2spec {simulate,estimate,compare,montecarlo}``.

Each command reads a YAML (or JSON) config validated against a strict schema
and writes, next to its outputs, a ``*.config.json`` echo of the fully
resolved config that re-runs the command byte-identically.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .covariance import default_epsilon
from .estimator import (
    EstimatorSpec,
    MonteCarloSetup,
    WindowSpec,
    cross_sections,
    estimate_is,
    monte_carlo,
    peak_find,
    windowed_periodogram,
)
from .fieldio import FieldFile, read_field, write_field
from .isdual import SolveOptions, SolverError
from .models import RADAR_DIMS, RADAR_THETA, ArConfig, SinusoidConfig, simulate_ar, simulate_sinusoid

log = logging.getLogger("m2spec")

Method = Literal["is", "rect", "bart"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SimulateConfig(_Strict):
    model: Literal["sinusoid", "ar"] = "sinusoid"
    dims: list[int] = Field(default_factory=lambda: list(RADAR_DIMS), min_length=3, max_length=3)
    amplitude: float = Field(1.0, ge=0)
    theta: list[float] = Field(default_factory=lambda: list(RADAR_THETA), min_length=3, max_length=3)
    antenna_ratio: int = 20
    noise_var: float = Field(2.0, ge=0)
    pole_moduli: list[float] = Field(default_factory=lambda: [0.3, 0.3, 0.3], min_length=3, max_length=3)
    burn_in: int = Field(200, ge=0)
    seed: int = Field(0, ge=0)
    output: str = "signal.m2sf"


class SolverConfig(_Strict):
    tol: float = Field(1e-9, gt=0)
    max_iter: int = Field(200, ge=1)
    method: Literal["newton", "bfgs"] = "newton"


class EstimateConfig(_Strict):
    input: str
    method: Method = "is"
    lag_radii: list[int] = Field(default_factory=lambda: [1, 1, 1])
    prior: Literal["constant", "identity"] = "constant"
    epsilon: Optional[float] = Field(None, gt=0)
    rect_widths: list[int] = Field(default_factory=lambda: [8, 8, 2])
    bart_widths: list[int] = Field(default_factory=lambda: [12, 12, 3])
    solver: SolverConfig = Field(default_factory=SolverConfig)
    output: Optional[str] = None
    report: Optional[str] = None


class CompareConfig(_Strict):
    spectra: dict[str, str] = Field(min_length=1)
    center: Optional[list[int]] = None
    output_prefix: str = "section"

    @field_validator("center")
    @classmethod
    def _one_based(cls, v):
        if v is not None and any(i < 1 for i in v):
            raise ValueError("center indices are 1-based")
        return v


class MonteCarloConfig(_Strict):
    family: Literal["sinusoid", "ar"] = "ar"
    methods: list[Method] = Field(default_factory=lambda: ["is", "rect", "bart"], min_length=1)
    trials: int = Field(100, ge=1)
    base_seed: int = Field(0, ge=0)
    dims: list[int] = Field(default_factory=lambda: list(RADAR_DIMS), min_length=3, max_length=3)
    amplitude: float = Field(1.0, ge=0)
    antenna_ratio: int = 20
    noise_var: float = Field(2.0, ge=0)
    pole_moduli: list[float] = Field(default_factory=lambda: [0.3, 0.3, 0.3], min_length=3, max_length=3)
    burn_in: int = Field(200, ge=0)
    lag_radii: list[int] = Field(default_factory=lambda: [1, 1, 1])
    epsilon: Optional[float] = Field(None, gt=0)
    rect_widths: list[int] = Field(default_factory=lambda: [8, 8, 2])
    bart_widths: list[int] = Field(default_factory=lambda: [12, 12, 3])
    solver: SolverConfig = Field(default_factory=SolverConfig)
    output: str = "montecarlo.csv"


# --------------------------------------------------------------------------
# helpers


def load_config(path: str | Path | None, model: type[BaseModel], overrides: dict | None = None) -> BaseModel:
    data = {}
    if path is not None:
        data = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(data, dict):
            raise ValueError(f"config {path} must be a mapping")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return model.model_validate(data)


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _echo_config(cfg: BaseModel, out_dir: Path, stem: str) -> Path:
    path = out_dir / f"{Path(stem).stem}.config.json"
    _dump_json(cfg.model_dump(), path)
    return path


def _solver_options(cfg: SolverConfig) -> SolveOptions:
    return SolveOptions(tol=cfg.tol, max_iter=cfg.max_iter, method=cfg.method)


def _peak_dict(phi: np.ndarray) -> dict:
    peak = peak_find(phi)
    return {"index": list(peak.one_based), "frequencies": [float(f) for f in peak.frequencies]}


# --------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: SimulateConfig, out_dir: Path) -> Path:
    if cfg.model == "sinusoid":
        sim = SinusoidConfig(tuple(cfg.dims), cfg.amplitude, tuple(cfg.theta), cfg.antenna_ratio,
                             cfg.noise_var, cfg.seed)
        y = simulate_sinusoid(sim)
    else:
        sim = ArConfig(tuple(cfg.dims), tuple(cfg.pole_moduli), tuple(cfg.theta), cfg.antenna_ratio,
                       cfg.noise_var, cfg.burn_in, cfg.seed)
        y = simulate_ar(sim)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / cfg.output
    write_field(path, FieldFile("signal", y))
    _echo_config(cfg, out_dir, cfg.output)
    return path


def cmd_estimate(cfg: EstimateConfig, out_dir: Path) -> tuple[Path, Path]:
    signal = read_field(cfg.input)
    if signal.kind != "signal":
        raise ValueError(f"{cfg.input} holds a {signal.kind}, expected a signal")
    y = signal.data
    report: dict = {"method": cfg.method}
    if cfg.method == "is":
        if cfg.epsilon is None:
            cfg = cfg.model_copy(update={"epsilon": default_epsilon(y)})
        spec = EstimatorSpec(tuple(cfg.lag_radii), cfg.prior, None, cfg.epsilon, _solver_options(cfg.solver))
        phi, solve_report = estimate_is(y, spec)
        report["solve"] = solve_report.as_dict()
        epsilon = cfg.epsilon
    else:
        widths = cfg.rect_widths if cfg.method == "rect" else cfg.bart_widths
        kind = "rectangular" if cfg.method == "rect" else "bartlett"
        phi = windowed_periodogram(y, WindowSpec(kind, tuple(widths)))
        epsilon = None
    cfg = cfg.model_copy(update={
        "output": cfg.output or f"spectrum_{cfg.method}.m2sf",
        "report": cfg.report or f"report_{cfg.method}.json",
    })
    report["peak"] = _peak_dict(phi)
    report["config"] = cfg.model_dump()
    out_dir.mkdir(parents=True, exist_ok=True)
    spec_path = out_dir / cfg.output
    write_field(spec_path, FieldFile("spectrum", phi, epsilon=epsilon))
    report_path = out_dir / cfg.report
    _dump_json(report, report_path)
    _echo_config(cfg, out_dir, cfg.output)
    return spec_path, report_path


def cmd_compare(cfg: CompareConfig, out_dir: Path) -> list[Path]:
    fields = {}
    for method, path in cfg.spectra.items():
        ff = read_field(path)
        if ff.kind != "spectrum":
            raise ValueError(f"{path} holds a {ff.kind}, expected a spectrum")
        fields[method] = ff.data
    shapes = {name: phi.shape for name, phi in fields.items()}
    if len(set(shapes.values())) != 1:
        raise ValueError(f"spectra have mismatched shapes: {shapes}")
    first = next(iter(fields.values()))
    d = first.ndim - 2
    if cfg.center is None:
        center = peak_find(first).index
    else:
        if len(cfg.center) != d:
            raise ValueError(f"center has {len(cfg.center)} indices, the grid has d={d}")
        center = tuple(i - 1 for i in cfg.center)
        if any(c >= n for c, n in zip(center, first.shape[:d])):
            raise ValueError(f"center {cfg.center} lies outside the grid {first.shape[:d]}")
    sections = {name: cross_sections(phi, center) for name, phi in fields.items()}
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for axis in range(d):
        path = out_dir / f"{cfg.output_prefix}_axis{axis + 1}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["index"] + list(sections))
            for i in range(first.shape[axis]):
                writer.writerow([i + 1] + [repr(float(sections[name][axis][i])) for name in sections])
        paths.append(path)
    cfg = cfg.model_copy(update={"center": [c + 1 for c in center]})
    _echo_config(cfg, out_dir, cfg.output_prefix)
    return paths


def cmd_montecarlo(cfg: MonteCarloConfig, out_dir: Path, threads: int = 1) -> Path:
    setup = MonteCarloSetup(
        family=cfg.family,
        methods=tuple(cfg.methods),
        trials=cfg.trials,
        base_seed=cfg.base_seed,
        dims=tuple(cfg.dims),
        amplitude=cfg.amplitude,
        antenna_ratio=cfg.antenna_ratio,
        noise_var=cfg.noise_var,
        pole_moduli=tuple(cfg.pole_moduli),
        burn_in=cfg.burn_in,
        estimator=EstimatorSpec(tuple(cfg.lag_radii), "constant", None, cfg.epsilon, _solver_options(cfg.solver)),
        windows={"rect": WindowSpec("rectangular", tuple(cfg.rect_widths)),
                 "bart": WindowSpec("bartlett", tuple(cfg.bart_widths))},
    )
    results = monte_carlo(setup, threads=threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / cfg.output
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["trial", "method", "peak_error", "spectrum_rel_error", "seed"])
        for r in results:
            rel = "" if r.spectrum_rel_error is None else repr(r.spectrum_rel_error)
            writer.writerow([r.trial, r.method, repr(r.peak_error), rel, r.seed])
    _echo_config(cfg, out_dir, cfg.output)
    return path


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="m2spec", description="Multidimensional matrix spectral estimation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML or JSON config file")
        p.add_argument("--out", default=".", help="output directory")
        return p

    p = common(sub.add_parser("simulate", help="generate a sinusoid or AR dataset"))
    p.add_argument("--seed", type=int)
    p = common(sub.add_parser("estimate", help="estimate a spectrum from a signal file"))
    p.add_argument("--method", choices=["is", "rect", "bart"])
    common(sub.add_parser("compare", help="write cross-section CSVs of estimated spectra"))
    p = common(sub.add_parser("montecarlo", help="paired Monte-Carlo comparison"))
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--method", choices=["is", "rect", "bart"], help="run a single method")
    p.add_argument("--threads", type=int, default=1)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    out_dir = Path(args.out)
    try:
        if args.command == "simulate":
            cfg = load_config(args.config, SimulateConfig, {"seed": args.seed})
            path = cmd_simulate(cfg, out_dir)
            print(path)
        elif args.command == "estimate":
            cfg = load_config(args.config, EstimateConfig, {"method": args.method})
            spec_path, report_path = cmd_estimate(cfg, out_dir)
            report = json.loads(report_path.read_text())
            print(f"{spec_path}  peak {report['peak']['index']}")
        elif args.command == "compare":
            cfg = load_config(args.config, CompareConfig)
            for path in cmd_compare(cfg, out_dir):
                print(path)
        else:
            overrides = {"base_seed": args.seed}
            if args.method:
                overrides["methods"] = [args.method]
            cfg = load_config(args.config, MonteCarloConfig, overrides)
            print(cmd_montecarlo(cfg, out_dir, threads=args.threads))
    except ValidationError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
