"""Command-line entry points: dataset simulation, streaming runs, batch FCI,
and the benchmark harness.

Exit codes: 0 success, 1 input error (bad files, bad flags), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BenchConfig, run_benchmark, write_bench_csv
from .citest import SampleSource
from .cmcd import CmcdParams
from .exceptions import InvalidInputError
from .fci import FciOptions, fci
from .kernels import backend_name
from .pipeline import DiagnosticsRecord, Pipeline, PipelineConfig
from .simgen import RegimeDatasetSpec, make_regime_dataset, write_dataset


def read_data_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a header-plus-rows CSV of finite decimals; errors carry row numbers."""
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"no such file: {path}")
    with open(path) as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines:
        raise InvalidInputError(f"{path}: empty file")
    header = [c.strip() for c in lines[0].split(",")]
    if len(set(header)) != len(header) or any(not c for c in header):
        raise InvalidInputError(f"{path}: header must list distinct nonempty variable names")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise InvalidInputError(
                f"{path}: row {i}: expected {len(header)} columns, got {len(cells)}"
            )
        try:
            row = [float(c) for c in cells]
        except ValueError:
            raise InvalidInputError(f"{path}: row {i}: non-numeric value") from None
        if not all(np.isfinite(v) for v in row):
            raise InvalidInputError(f"{path}: row {i}: non-finite value")
        rows.append(row)
    if not rows:
        raise InvalidInputError(f"{path}: no data rows")
    return header, np.asarray(rows, dtype=np.float64)


def _fci_options_from(doc: dict) -> FciOptions:
    return FciOptions(
        alpha=doc.get("alpha", 0.05),
        max_cond_size=doc.get("max_cond_size"),
        pdsep_enabled=doc.get("pdsep_enabled", True),
        max_pdsep_size=doc.get("max_pdsep_size"),
        stable=doc.get("stable", False),
    )


def _cmcd_params_from(doc: dict) -> CmcdParams:
    return CmcdParams(
        window=doc.get("window", 20),
        pool_threshold=doc.get("pool_threshold", 0.01),
        weight_gain=doc.get("weight_gain", 2.0),
        scheduler_floor=doc.get("scheduler_floor", 0.0),
        scheduler_exponent=doc.get("scheduler_exponent", 3.0),
        fixed_schedule=doc.get("fixed_schedule"),
    )


def _pipeline_config_from(doc: dict, algorithm: str, seed: int | None) -> PipelineConfig:
    return PipelineConfig(
        algorithm=algorithm,
        fci_options=_fci_options_from(doc.get("fci_options", {})),
        cmcd_params=_cmcd_params_from(doc.get("cmcd_params", {})),
        emit_diagnostics=doc.get("emit_diagnostics", True),
        rng_seed=doc.get("rng_seed", 0) if seed is None else seed,
        detect_after_update=doc.get("detect_after_update", False),
    )


def _load_json(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"no such file: {path}")
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: invalid JSON ({exc})") from None


def cmd_simulate(args: argparse.Namespace) -> int:
    doc = _load_json(args.spec)
    if args.seed is not None:
        doc["seed"] = args.seed
    try:
        spec = RegimeDatasetSpec(**doc)
    except TypeError as exc:
        raise InvalidInputError(f"bad dataset spec: {exc}") from None
    data, change_points, sems = make_regime_dataset(spec)
    data_path, truth_path = write_dataset(args.out, spec, data, change_points, sems)
    print(f"wrote {data_path} ({data.shape[0]} rows x {data.shape[1]} vars) and {truth_path}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    var_names, data = read_data_csv(args.data)
    if args.difference:
        data = np.diff(data, axis=0)
    config_doc = _load_json(args.config) if args.config else {}
    config = _pipeline_config_from(config_doc, args.algo, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.resume:
        pipe = Pipeline.from_json(_load_json(args.resume), config)
        if pipe.var_names != var_names:
            raise InvalidInputError("checkpoint variable schema does not match the data file")
    else:
        pipe = Pipeline(var_names, config)

    pag_paths = []
    with open(out / "diagnostics.csv", "w") as diag:
        diag.write(DiagnosticsRecord.CSV_HEADER + "\n")
        for row in data:
            record, result = pipe.step(row)
            if config.emit_diagnostics:
                diag.write(record.to_csv_row() + "\n")
            if result is not None:
                pag_path = out / f"pag_{pipe.relearn_count}.json"
                with open(pag_path, "w") as fh:
                    json.dump(result.pag.to_json(), fh, indent=1)
                pag_paths.append(str(pag_path))

    with open(out / "checkpoint.json", "w") as fh:
        json.dump(pipe.to_json(), fh)
    manifest = {
        "input": str(args.data),
        "algorithm": config.algorithm,
        "seed": config.rng_seed,
        "difference": bool(args.difference),
        "resumed_from": args.resume,
        "kernel_backend": backend_name(),
        "relearn_count": pipe.relearn_count,
        "pags": pag_paths,
        "version": __version__,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)
    print(f"processed {data.shape[0]} points, {pipe.relearn_count} relearns -> {out}")
    return 0


def cmd_fci(args: argparse.Namespace) -> int:
    var_names, data = read_data_csv(args.data)
    if args.difference:
        data = np.diff(data, axis=0)
    mean = data.mean(axis=0)
    centered = data - mean
    cov = (centered.T @ centered) / data.shape[0]
    opts = FciOptions(
        alpha=args.alpha,
        max_cond_size=args.max_cond_size,
        pdsep_enabled=not args.no_pdsep,
        max_pdsep_size=args.max_pdsep_size,
    )
    src = SampleSource(cov=cov, n=data.shape[0])
    result = fci(src, var_names, opts)
    with open(args.out, "w") as fh:
        json.dump(result.pag.to_json(), fh, indent=1)
    print(
        f"wrote {args.out}: {result.pag.edge_count()} edges, "
        f"{result.tests_used} CI tests, {result.elapsed:.3f}s"
    )
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    doc = _load_json(args.grid)
    try:
        specs = [RegimeDatasetSpec(**entry) for entry in doc["specs"]]
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"bad benchmark grid: {exc}") from None
    config = BenchConfig(
        algorithms=tuple(doc.get("algorithms", ["fci", "ofci", "fofci"])),
        fci_options=_fci_options_from(doc.get("fci_options", {})),
        cmcd_params=_cmcd_params_from(doc.get("cmcd_params", {})),
        workers=args.workers,
    )
    records = run_benchmark(specs, config)
    write_bench_csv(records, args.out)
    print(f"wrote {args.out}: {len(records)} rows")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streampag",
        description="Streaming causal structure learning with latent confounders",
    )
    parser.add_argument("--version", action="version", version=f"streampag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a regime-change dataset plus truth sidecar")
    p.add_argument("--spec", required=True, help="dataset spec JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="stream a CSV through the online learner")
    p.add_argument("--data", required=True, help="input CSV (header + rows)")
    p.add_argument("--config", default=None, help="pipeline config JSON")
    p.add_argument("--algo", choices=["ofci", "fofci"], default="ofci")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="scheduler RNG seed")
    p.add_argument("--difference", action="store_true", help="apply first differences first")
    p.add_argument("--resume", default=None, help="resume from a checkpoint JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fci", help="batch FCI over a whole CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", required=True, help="output PAG JSON path")
    p.add_argument("--max-cond-size", type=int, default=None)
    p.add_argument("--max-pdsep-size", type=int, default=None)
    p.add_argument("--no-pdsep", action="store_true")
    p.add_argument("--difference", action="store_true")
    p.set_defaults(func=cmd_fci)

    p = sub.add_parser("bench", help="run the benchmark harness over a grid")
    p.add_argument("--grid", required=True, help="grid JSON: specs, algorithms, options")
    p.add_argument("--out", required=True, help="results CSV path")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 2 by contract
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
