"""Command-line entry point.

    energy-threshold presets
    energy-threshold run --preset hh-excitatory --out results/hh
    energy-threshold run --config my.json [--workers 4] [--dump-trajectories]

Exit status: 0 on success, 2 for an invalid configuration, 3 when the
computation fails numerically.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .ansatz import BiexponentialAnsatz, ExponentialAnsatz
from .clamp import NumericalError, clamp_run
from .config import ConfigError, ExperimentConfig, list_presets, load_config
from .report import (
    landscape_dict,
    landscape_svg,
    report_dict,
    trajectory_svg,
    write_landscape_csv,
    write_trajectory_csv,
)
from .threshold import Landscape, ThresholdReport, event_at, inhibitory_sweep, locate_threshold

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    out_dir: Path
    landscape: Landscape
    report: ThresholdReport
    inhibitory: tuple[Landscape, ThresholdReport] | None = None
    files: list[Path] = field(default_factory=list)


def _check_finite(l: Landscape) -> None:
    bad = ~l.censored & ~np.isfinite(l.supply)
    if np.any(bad):
        raise NumericalError(f"non-finite supply at {l.coord_name} = {l.coords[bad].tolist()}")


def run_experiment(
    config: ExperimentConfig, out_dir: str | Path | None = None, dump_trajectories: bool = False
) -> ExperimentResult:
    """Sweep, locate the threshold(s) and write CSV/JSON/SVG artifacts."""
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tol, model = config.tolerances, config.model

    landscape, report = locate_threshold(
        model, config.A_grid.values(), config.alpha_grid.values(), tol, config.workers
    )
    _check_finite(landscape)
    if config.verify_events and report.found:
        report = replace(report, event=event_at(model, report.A, report.alpha, tol).outcome)
    result = ExperimentResult(config, out, landscape, report)

    if config.ansatz == "biexponential":
        if not report.found:
            raise NumericalError("no excitatory threshold to anchor the inhibitory sweep")
        inh = inhibitory_sweep(
            model,
            report.A,
            report.alpha,
            config.B_grid.values(),
            config.beta_grid.values(),
            tol,
            config.workers,
            excitatory_supply=report.supply,
        )
        _check_finite(inh[0])
        result.inhibitory = inh

    _write_artifacts(result, dump_trajectories)
    return result


def _write_artifacts(result: ExperimentResult, dump_trajectories: bool) -> None:
    config, out = result.config, result.out_dir
    files = result.files

    def emit(name: str, text: str) -> None:
        path = out / name
        path.write_text(text, encoding="utf-8")
        files.append(path)

    path = out / "landscape.csv"
    write_landscape_csv(result.landscape, path)
    files.append(path)
    emit("landscape.svg", landscape_svg(result.landscape, result.report, f"{config.name}: required supply"))

    doc = {
        "tool": "energy-threshold",
        "version": __version__,
        "config_hash": config.digest(),
        "config": config.to_dict(),
        "grids": {
            "A": result.landscape.coords.tolist(),
            "alpha": list(result.landscape.context.rate_grid),
        },
        "tolerances": config.to_dict()["tolerances"],
        "excitatory": {"report": report_dict(result.report), "landscape": landscape_dict(result.landscape)},
    }
    if result.inhibitory is not None:
        l_inh, r_inh = result.inhibitory
        path = out / "inhibitory_landscape.csv"
        write_landscape_csv(l_inh, path)
        files.append(path)
        emit("inhibitory_landscape.svg", landscape_svg(l_inh, r_inh, f"{config.name}: inhibitory family"))
        doc["grids"]["B"] = config.B_grid.values().tolist()
        doc["grids"]["beta"] = list(l_inh.context.rate_grid)
        doc["inhibitory"] = {"report": report_dict(r_inh), "landscape": landscape_dict(l_inh)}

    if dump_trajectories:
        for tag, ansatz in _threshold_trajectories(result):
            clamp = clamp_run(config.model, ansatz, config.tolerances)
            path = out / f"trajectory_{tag}.csv"
            write_trajectory_csv(clamp, path)
            files.append(path)
            emit(f"trajectory_{tag}.svg", trajectory_svg(clamp, f"{config.name}: clamp trajectory ({tag})"))

    emit("threshold.json", json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _threshold_trajectories(result: ExperimentResult):
    r = result.report
    if r.classification != "NoneFound" and r.A is not None:
        yield "excitatory", ExponentialAnsatz(r.A, r.alpha)
    if result.inhibitory is not None:
        ri = result.inhibitory[1]
        if ri.classification != "NoneFound" and ri.B is not None:
            yield "inhibitory", BiexponentialAnsatz(ri.A, ri.alpha, ri.B, ri.beta)


def _describe(label: str, r: ThresholdReport) -> str:
    if r.classification == "NoneFound":
        return f"{label}: no local maximum of the required supply (no threshold)"
    parts = [f"{label}: {r.classification}"]
    if r.B is not None:
        parts.append(f"v(0)={r.v_terminal:.4g} (A*={r.A:.4g}, alpha*={r.alpha:.4g}, B={r.B:.4g}, beta={r.beta:.4g})")
    else:
        parts.append(f"A*={r.A:.4g} alpha*={r.alpha:.4g}")
    parts.append(f"S_r={r.supply:.6g}")
    if r.resolution is not None:
        parts.append(f"resolution={r.resolution:.3g}")
    if r.event:
        parts.append(f"event={r.event}")
    return "  ".join(parts + list(r.notes))


def summary(result: ExperimentResult) -> str:
    lines = [_describe("excitatory", result.report)]
    if result.inhibitory is not None:
        lines.append(_describe("inhibitory", result.inhibitory[1]))
    lines.append(f"wrote {len(result.files)} files to {result.out_dir}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="energy-threshold", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("--config", type=Path, help="JSON experiment document")
    run.add_argument("--preset", choices=list_presets(), help="built-in experiment (a --config file overrides it)")
    run.add_argument("--out", type=Path, help="output directory (default: the config's output_dir)")
    run.add_argument("--workers", type=int, help="parallel worker processes")
    run.add_argument("--dump-trajectories", action="store_true", help="write clamp trajectories at the thresholds")

    sub.add_parser("presets", help="list built-in presets")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        for name in list_presets():
            print(name)
        return EXIT_OK
    try:
        config = load_config(args.config, args.preset)
        if args.workers is not None:
            config = ExperimentConfig.from_dict({**config.to_dict(), "workers": args.workers})
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_experiment(config, args.out, args.dump_trajectories)
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # non-finite values refused by the writers
        if "non-finite" in str(exc):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        raise
    print(summary(result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
