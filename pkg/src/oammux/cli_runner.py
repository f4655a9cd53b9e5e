"""Config-driven command-line front end.

A scenario file (YAML) declares the sources feeding the two sorter ports,
the imperfection parameters, the matrix basis, the measurement budget and
the output options.  The commands map onto one orchestrator:

    simulate    duplexer pass: ideal/bright/dark interchange files + report
    tomography  simulate plus reconstruction of the bright port vs the ideal
    render      PGM intensity images of the occupied ports only
    fidelity    compare two density-matrix interchange files

Outputs are deterministic: identical config bytes (and seed) produce
byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import yaml

from . import __version__
from .duplexer import ImperfectionModel, dark_port_ratio, duplex
from .field_render import GridSpec, render_state, write_pgm
from .oam_state import (
    BasisSpec,
    DensityMatrix,
    incoherent_mix,
    make_superposition,
    pure_density,
    purity,
)
from .tomography import run_tomography

WEIGHT_SUM_TOL = 1e-9


class ConfigSyntaxError(ValueError):
    """The config is not well-formed YAML (line/column in the message)."""


class ConfigValidationError(ValueError):
    """A config field violates a named invariant."""

    def __init__(self, field: str, invariant: str) -> None:
        self.field = field
        self.invariant = invariant
        super().__init__(f"{field}: {invariant}")


@dataclass(frozen=True)
class SourceSpec:
    """One incoherent source: its port, power share and state terms."""

    port: str
    weight: float
    terms: tuple[tuple[int, float, float], ...]
    wavelength_nm: float | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    sources: tuple[SourceSpec, ...]
    imperfections: ImperfectionModel
    basis: BasisSpec
    exposure: float | None
    seed: int | None
    output_dir: str
    emit_images: bool
    grid: GridSpec

    def to_dict(self) -> dict:
        """Plain mapping that reparses to an equal config."""
        out: dict = {
            "sources": [
                {
                    "port": s.port,
                    "weight": s.weight,
                    "terms": [[ell, re, im] for ell, re, im in s.terms],
                    **({"wavelength_nm": s.wavelength_nm} if s.wavelength_nm is not None else {}),
                }
                for s in self.sources
            ],
            "imperfections": {
                "epsilon_rad": self.imperfections.path_phase_error,
                "delta_rad": self.imperfections.prism_angle_error,
                "eta": self.imperfections.splitting_imbalance,
            },
            "basis": list(self.basis.indices),
            "outputs": {
                "directory": self.output_dir,
                "emit_images": self.emit_images,
                "grid": {"n": self.grid.n, "extent": self.grid.extent},
            },
        }
        if self.exposure is not None:
            out["measurement"] = {
                "exposure": "infinite" if math.isinf(self.exposure) else self.exposure,
                "seed": self.seed,
            }
        return out

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)


def _require(mapping, key, field, kind=None):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ConfigValidationError(field, "required field is missing")
    value = mapping[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigValidationError(field, f"expected {kind.__name__ if not isinstance(kind, tuple) else 'number'}, got {type(value).__name__}")
    return value


def _number(value, field) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigValidationError(field, f"expected a number, got {value!r}")
    if not math.isfinite(float(value)):
        raise ConfigValidationError(field, "must be finite")
    return float(value)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a scenario config document.

    Raises:
        ConfigSyntaxError: malformed YAML, with position in the message.
        ConfigValidationError: a named field violates a named invariant.
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigSyntaxError(f"{where}{exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigValidationError("document", "config must be a mapping")

    basis_raw = _require(raw, "basis", "basis", list)
    for k, ell in enumerate(basis_raw):
        if isinstance(ell, bool) or not isinstance(ell, int):
            raise ConfigValidationError(f"basis[{k}]", "indices must be integers")
    if len(set(basis_raw)) != len(basis_raw):
        raise ConfigValidationError("basis", "indices must be distinct")
    basis = BasisSpec(tuple(basis_raw))

    sources_raw = _require(raw, "sources", "sources", list)
    if not sources_raw:
        raise ConfigValidationError("sources", "at least one source is required")
    sources = []
    for k, src in enumerate(sources_raw):
        where = f"sources[{k}]"
        port = _require(src, "port", f"{where}.port", str)
        if port not in ("A", "B"):
            raise ConfigValidationError(f"{where}.port", "port must be 'A' or 'B'")
        weight = _number(_require(src, "weight", f"{where}.weight"), f"{where}.weight")
        if weight < 0.0:
            raise ConfigValidationError(f"{where}.weight", "weight must be nonnegative")
        terms_raw = _require(src, "terms", f"{where}.terms", list)
        if not terms_raw:
            raise ConfigValidationError(f"{where}.terms", "at least one term is required")
        terms = []
        for t, term in enumerate(terms_raw):
            field = f"{where}.terms[{t}]"
            if not (isinstance(term, list) and len(term) == 3):
                raise ConfigValidationError(field, "term must be [ell, re, im]")
            ell = term[0]
            if isinstance(ell, bool) or not isinstance(ell, int):
                raise ConfigValidationError(field, "index must be an integer")
            if ell not in basis:
                raise ConfigValidationError(
                    field, f"basis coverage: index {ell} is not in basis {list(basis.indices)}"
                )
            terms.append((ell, _number(term[1], field), _number(term[2], field)))
        wavelength = src.get("wavelength_nm")
        if wavelength is not None:
            wavelength = _number(wavelength, f"{where}.wavelength_nm")
        sources.append(SourceSpec(port, weight, tuple(terms), wavelength))

    total = sum(s.weight for s in sources)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ConfigValidationError(
            "sources.weight", f"weights sum to 1 is violated: got {total!r}"
        )

    imp_raw = raw.get("imperfections", {})
    if not isinstance(imp_raw, dict):
        raise ConfigValidationError("imperfections", "must be a mapping")
    try:
        imperfections = ImperfectionModel(
            path_phase_error=_number(imp_raw.get("epsilon_rad", 0.0), "imperfections.epsilon_rad"),
            prism_angle_error=_number(imp_raw.get("delta_rad", 0.0), "imperfections.delta_rad"),
            splitting_imbalance=_number(imp_raw.get("eta", 0.0), "imperfections.eta"),
        )
    except ValueError as exc:
        raise ConfigValidationError("imperfections.eta", str(exc)) from exc

    exposure = seed = None
    if "measurement" in raw and raw["measurement"] is not None:
        meas = raw["measurement"]
        if not isinstance(meas, dict):
            raise ConfigValidationError("measurement", "must be a mapping")
        exp_raw = _require(meas, "exposure", "measurement.exposure")
        if exp_raw == "infinite":
            exposure = math.inf
        else:
            exposure = _number(exp_raw, "measurement.exposure")
            if exposure <= 0.0:
                raise ConfigValidationError("measurement.exposure", "exposure must be positive")
        seed_raw = _require(meas, "seed", "measurement.seed")
        if isinstance(seed_raw, bool) or not isinstance(seed_raw, int) or seed_raw < 0:
            raise ConfigValidationError("measurement.seed", "seed must be a nonnegative integer")
        seed = seed_raw

    out_raw = raw.get("outputs", {})
    if not isinstance(out_raw, dict):
        raise ConfigValidationError("outputs", "must be a mapping")
    directory = out_raw.get("directory", "out")
    if not isinstance(directory, str):
        raise ConfigValidationError("outputs.directory", "must be a string path")
    emit_images = out_raw.get("emit_images", False)
    if not isinstance(emit_images, bool):
        raise ConfigValidationError("outputs.emit_images", "must be true or false")
    grid_raw = out_raw.get("grid", {})
    if not isinstance(grid_raw, dict):
        raise ConfigValidationError("outputs.grid", "must be a mapping")
    try:
        grid = GridSpec(
            n=grid_raw.get("n", 512),
            extent=float(grid_raw.get("extent", 8.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigValidationError("outputs.grid", str(exc)) from exc

    return ScenarioConfig(
        sources=tuple(sources),
        imperfections=imperfections,
        basis=basis,
        exposure=exposure,
        seed=seed,
        output_dir=directory,
        emit_images=emit_images,
        grid=grid,
    )


def _port_state(cfg: ScenarioConfig, port: str) -> tuple[DensityMatrix | None, float]:
    """Incoherent state entering one port plus that port's total weight."""
    members = [s for s in cfg.sources if s.port == port]
    weight = sum(s.weight for s in members)
    if weight <= 0.0:
        return None, 0.0
    parts = []
    for s in members:
        state = make_superposition([(ell, complex(re, im)) for ell, re, im in s.terms])
        parts.append((s.weight, pure_density(state, cfg.basis)))
    return incoherent_mix(parts), weight


def ideal_output(cfg: ScenarioConfig) -> DensityMatrix:
    """The design-intent multiplexed state: all sources mixed by weight."""
    parts = []
    for s in cfg.sources:
        state = make_superposition([(ell, complex(re, im)) for ell, re, im in s.terms])
        parts.append((s.weight, pure_density(state, cfg.basis)))
    return incoherent_mix(parts)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_scenario(cfg: ScenarioConfig, mode: str = "tomography", out_dir: str | None = None) -> dict:
    """Run one scenario and write its artifacts; returns the report mapping.

    Modes: "simulate" (matrices + report), "tomography" (adds the
    reconstruction of the bright port scored against the ideal output),
    "render" (PGM images only).  Images are also written in the other
    modes when the config sets emit_images.
    """
    if mode not in ("simulate", "tomography", "render"):
        raise ValueError(f"unknown mode {mode!r}")
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    ideal = ideal_output(cfg)
    rho_a, w_a = _port_state(cfg, "A")
    rho_b, w_b = _port_state(cfg, "B")
    ports = duplex(rho_a, rho_b, (w_a, w_b), cfg.imperfections)

    report: dict = {
        "mode": mode,
        "basis": [int(ell) for ell in cfg.basis],
        "seed": cfg.seed,
        "exposure": (
            None
            if cfg.exposure is None
            else ("infinite" if math.isinf(cfg.exposure) else cfg.exposure)
        ),
        "imperfections": {
            "epsilon_rad": cfg.imperfections.path_phase_error,
            "delta_rad": cfg.imperfections.prism_angle_error,
            "eta": cfg.imperfections.splitting_imbalance,
        },
        "bright_weight": ports.bright_weight,
        "dark_weight": ports.dark_weight,
        "dark_bright_ratio": (
            dark_port_ratio(ports) if ports.bright is not None else None
        ),
        "purity": {
            "ideal": purity(ideal),
            "bright": None if ports.bright is None else purity(ports.bright),
            "dark": None if ports.dark is None else purity(ports.dark),
            "reconstructed": None,
        },
        "fidelity": None,
        "fidelity_squared": None,
        "files": {},
    }

    if mode in ("simulate", "tomography"):
        _write_json(out / "ideal_rho.json", ideal.to_interchange())
        report["files"]["ideal_rho"] = "ideal_rho.json"
        for name, rho in (("bright_rho", ports.bright), ("dark_rho", ports.dark)):
            if rho is not None:
                _write_json(out / f"{name}.json", rho.to_interchange())
                report["files"][name] = f"{name}.json"
            else:
                report["files"][name] = None

    if mode == "tomography":
        if cfg.exposure is None:
            raise ConfigValidationError(
                "measurement", "a measurement section is required for tomography"
            )
        if ports.bright is None:
            raise ConfigValidationError(
                "sources", "bright port is empty; nothing to measure"
            )
        result = run_tomography(ports.bright, cfg.exposure, cfg.seed, target=ideal)
        _write_json(out / "reconstructed_rho.json", result.rho_physical.to_interchange())
        report["files"]["reconstructed_rho"] = "reconstructed_rho.json"
        report["fidelity"] = result.fidelity_vs_target
        report["fidelity_squared"] = result.fidelity_vs_target_squared
        report["purity"]["reconstructed"] = purity(result.rho_physical)

    if mode == "render" or cfg.emit_images:
        for name, rho in (("bright", ports.bright), ("dark", ports.dark)):
            if rho is not None:
                write_pgm(render_state(rho, cfg.grid), out / f"{name}.pgm")
                report["files"][f"{name}_image"] = f"{name}.pgm"
            else:
                report["files"][f"{name}_image"] = None

    if mode in ("simulate", "tomography"):
        _write_json(out / "report.json", report)
        report["files"]["report"] = "report.json"
    return report


def _load_config(path: str, seed: int | None, exact: bool) -> ScenarioConfig:
    text = Path(path).read_text(encoding="utf-8")
    cfg = parse_config(text)
    replacements: dict = {}
    if seed is not None:
        if seed < 0:
            raise ConfigValidationError("--seed", "seed must be a nonnegative integer")
        replacements["seed"] = seed
    if exact:
        replacements["exposure"] = math.inf
    return replace(cfg, **replacements) if replacements else cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oammux",
        description="Even/odd OAM multiplexer simulator: duplexing, rendering, tomography.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_command(name: str, help_text: str):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="scenario config file (YAML)")
        cmd.add_argument("--out", default=None, help="output directory (overrides config)")
        cmd.add_argument("--seed", type=int, default=None, help="RNG seed (overrides config)")
        cmd.add_argument(
            "--exact",
            action="store_true",
            help="use exact probabilities instead of simulated counts",
        )
        return cmd

    add_scenario_command("simulate", "run the duplexer and write interchange matrices")
    add_scenario_command("tomography", "full pipeline: duplex, measure, reconstruct, score")
    add_scenario_command("render", "write PGM intensity images of the occupied ports")

    fid = sub.add_parser("fidelity", help="compare two density-matrix interchange files")
    fid.add_argument("file_a", help="first interchange JSON file")
    fid.add_argument("file_b", help="second interchange JSON file")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fidelity":
            from .tomography import fidelity as fidelity_score

            rho_a = DensityMatrix.from_interchange(
                json.loads(Path(args.file_a).read_text(encoding="utf-8"))
            )
            rho_b = DensityMatrix.from_interchange(
                json.loads(Path(args.file_b).read_text(encoding="utf-8"))
            )
            value = fidelity_score(rho_a, rho_b)
            print(json.dumps({"fidelity": value, "fidelity_squared": value**2}, sort_keys=True))
            return 0
        cfg = _load_config(args.config, args.seed, args.exact)
        report = run_scenario(cfg, mode=args.command, out_dir=args.out)
        print(json.dumps(report, indent=2, sort_keys=True))
        return 0
    except Exception as exc:  # noqa: BLE001 - boundary: report and set exit status
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
