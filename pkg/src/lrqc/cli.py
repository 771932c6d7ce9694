"""Batch command-line front end producing deterministic CSV or JSON tables.

Subcommands: evolve | path1d | gap | oracle | bounds | fixcheck.  Exit codes:
0 success, 2 configuration or validation error, 3 resource-cap violation.
Output files are written atomically and contain no timestamps, so a rerun
with the same config and seed is byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Any

from . import __version__
from .bounds import (area_law_bound, boundary_probability, BoundReport,
                     correlated_convergence_bound, entangling_power,
                     first_moment_convergence_bound, reachable_boundary_range,
                     swap_constant, t_design_delta)
from .config import (ExperimentConfig, ValidationError, family_structures,
                     load_config, model_shape, policy_from_config, region_from_sites,
                     run_int, spec_from_config, structure_from_model)
from .errors import CapExceeded
from .oracle import OracleConfig, mc_purity_trajectory
from .path1d import PathParams, purity_exact, spectrum
from .regions import Region
from .swapcore import (CorrelatedSweep, EnsembleSpec, LocalStructure, Uncorrelated,
                       build_swap_matrix, connected_components,
                       fixed_space_dimension, purity_infinity, purity_trajectory,
                       spectral_gap_swap)

FIXCHECK_MAX_SITES = 10


@dataclass
class ResultTable:
    """Equal-length named columns plus reproducibility metadata."""

    columns: dict[str, list]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"ragged columns: {dict((k, len(v)) for k, v in self.columns.items())}")


def _fmt_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".lrqc-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(table: ResultTable, path: str, fmt: str) -> None:
    if fmt == "csv":
        buf = io.StringIO()
        for key, value in sorted(table.metadata.items()):
            buf.write(f"# {key}={json.dumps(value, sort_keys=True, separators=(',', ':'))}\n")
        writer = csv.writer(buf, lineterminator="\n")
        names = list(table.columns)
        writer.writerow(names)
        length = len(table.columns[names[0]]) if names else 0
        for i in range(length):
            writer.writerow([_fmt_cell(table.columns[name][i]) for name in names])
        _atomic_write(path, buf.getvalue())
    elif fmt == "json":
        payload = {"metadata": table.metadata, "columns": table.columns}
        _atomic_write(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    else:
        raise ValidationError(f"unknown output format {fmt!r}")


def read_metadata_config(path: str) -> dict[str, Any]:
    """Re-parse the config echo from a result file (CSV comments or JSON metadata)."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return json.loads(text)["metadata"]["config"]
    for line in text.splitlines():
        if line.startswith("# config="):
            return json.loads(line[len("# config="):])
    raise ValueError(f"no config metadata found in {path}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _initial_region(cfg: ExperimentConfig, n: int) -> Region:
    sites = cfg.run.get("initial_region")
    if sites is None:
        raise ValidationError("run.initial_region is required for this command")
    return region_from_sites(sites, n)


def cmd_evolve(cfg: ExperimentConfig) -> ResultTable:
    n, d = model_shape(cfg.model)
    structure = structure_from_model(cfg.model)
    spec = spec_from_config(cfg)
    initial = _initial_region(cfg, n)
    k_max = run_int(cfg, "k_max")
    traj = purity_trajectory(initial, spec, k_max)
    p_inf = purity_infinity(initial, structure, d)
    columns: dict[str, list] = {
        "k": list(range(k_max + 1)),
        "P_k": traj,
        "P_infinity": [p_inf] * (k_max + 1),
    }
    if cfg.run.get("area_law"):
        if not isinstance(spec.policy, Uncorrelated):
            raise ValidationError("the area-law column applies to the uncorrelated policy only")
        bound_col = []
        for k in range(k_max + 1):
            p_x, p_xt = reachable_boundary_range(initial, structure, k)
            bound_col.append(area_law_bound(p_x, p_xt, d, k).value)
        columns["area_law_bound"] = bound_col
    return ResultTable(columns)


def _cut_position(cfg: ExperimentConfig, length: int) -> int:
    if "cut" in cfg.run:
        cut = run_int(cfg, "cut")
        if not 0 <= cut <= length:
            raise ValidationError(f"run.cut must be in [0, {length}]")
        return cut
    region = _initial_region(cfg, length)
    sites = region.sites()
    if list(sites) != list(range(len(sites))):
        raise ValidationError("the chain model needs a prefix initial region {0..l-1} or run.cut")
    return len(sites)


def cmd_path1d(cfg: ExperimentConfig) -> ResultTable:
    length, d = model_shape(cfg.model)
    try:
        params = PathParams(length, d, _cut_position(cfg, length))
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    k_max = run_int(cfg, "k_max")
    data = spectrum(params)
    ep = entangling_power(d)
    window = min(params.l, params.L - params.l)
    rows = max(length, k_max) + 1
    def pad(values: list, total: int) -> list:
        return values + [None] * (total - len(values))
    columns = {
        "idx": list(range(rows)),
        "eigenvalue": pad(list(data.eigenvalues), rows),
        "gap": [data.gap] * rows,
        "P_k": pad([purity_exact(params, k) for k in range(k_max + 1)], rows),
        "short_time_P_k": pad([(1.0 - ep / (length - 1)) ** k for k in range(k_max + 1)], rows),
        "short_time_valid": pad([k <= window for k in range(k_max + 1)], rows),
    }
    return ResultTable(columns)


def cmd_gap(cfg: ExperimentConfig) -> ResultTable:
    _, d = model_shape(cfg.model)
    kind = cfg.policy.get("kind")
    if kind not in ("uncorrelated", "sweep"):
        raise ValidationError("the gap command supports uncorrelated and sweep policies")
    if "family" in cfg.model:
        instances = family_structures(cfg.model)
    else:
        structure = structure_from_model(cfg.model)
        instances = [(structure.n, structure)]
    ns, labels, gaps = [], [], []
    for n, structure in instances:
        policy = policy_from_config(cfg.policy, len(structure.regions))
        spec = EnsembleSpec(structure, policy, d)
        gap = spectral_gap_swap(build_swap_matrix(spec), d)
        ns.append(n)
        if isinstance(policy, CorrelatedSweep):
            raw = cfg.policy.get("order")
            labels.append(raw if isinstance(raw, str) else ",".join(map(str, policy.order)))
        else:
            labels.append("")
        gaps.append(gap)
    return ResultTable({"n": ns, "policy": [kind] * len(ns), "permutation": labels, "gap": gaps})


def cmd_oracle(cfg: ExperimentConfig) -> ResultTable:
    n, d = model_shape(cfg.model)
    spec = spec_from_config(cfg)
    initial = _initial_region(cfg, n)
    k_max = run_int(cfg, "k_max")
    oracle_cfg = OracleConfig(seed=run_int(cfg, "seed", 0),
                              samples=run_int(cfg, "samples", 1000), d=d, n=n)
    swap_traj = purity_trajectory(initial, spec, k_max)
    mc_traj = mc_purity_trajectory(spec, initial, k_max, oracle_cfg)
    zs = []
    for est, p_k in zip(mc_traj, swap_traj):
        if est.stderr == 0.0:
            zs.append(0.0 if est.mean == p_k else math.inf)
        else:
            zs.append((est.mean - p_k) / est.stderr)
    return ResultTable({
        "k": list(range(k_max + 1)),
        "P_k": swap_traj,
        "mc_mean": [e.mean for e in mc_traj],
        "mc_stderr": [e.stderr for e in mc_traj],
        "z": zs,
    })


def _bound_row(request: dict[str, Any], cfg: ExperimentConfig) -> tuple[str, BoundReport]:
    request = dict(request)
    name = request.pop("name", None)
    if name == "entangling_power":
        d = request.pop("d")
        report = BoundReport(entangling_power(d), "estimate", {"d": d})
    elif name == "swap_constant":
        d = request.pop("d")
        report = BoundReport(swap_constant(d), "estimate", {"d": d})
    elif name == "boundary_probability":
        structure = structure_from_model(cfg.model)
        target = region_from_sites(request.pop("target"), structure.n)
        report = BoundReport(boundary_probability(target, structure), "estimate",
                             {"target": list(target.sites())})
    elif name == "area_law":
        if "target" in request:
            structure = structure_from_model(cfg.model)
            p_a = boundary_probability(region_from_sites(request.pop("target"), structure.n),
                                       structure)
            report = area_law_bound(p_a, p_a, request.pop("d"), request.pop("k"))
        else:
            report = area_law_bound(request.pop("pX"), request.pop("pXtilde"),
                                    request.pop("d"), request.pop("k"))
    elif name == "first_moment_convergence":
        report = first_moment_convergence_bound(
            request.pop("omega_norm"), request.pop("a_norm"), request.pop("epsilon"),
            request.pop("q_min"), request.pop("num_regions"))
    elif name == "correlated_convergence":
        report = correlated_convergence_bound(request.pop("gap"), request.pop("n"),
                                              request.pop("epsilon"))
    elif name == "t_design":
        report = t_design_delta(request.pop("region_size"), request.pop("alpha"),
                                request.pop("t"), request.pop("d"),
                                request.pop("epsilon", None))
    else:
        raise ValidationError(f"unknown bound request {name!r}")
    if request:
        raise ValidationError(f"unknown keys in bound request {name!r}: {sorted(request)}")
    return name, report


def cmd_bounds(cfg: ExperimentConfig) -> ResultTable:
    requests = cfg.run.get("bounds")
    if not isinstance(requests, list) or not requests:
        raise ValidationError("the bounds command needs a nonempty run.bounds list")
    names, values, kinds, inputs = [], [], [], []
    try:
        for request in requests:
            name, report = _bound_row(request, cfg)
            names.append(name)
            values.append(report.value)
            kinds.append(report.kind)
            inputs.append(json.dumps(report.inputs, sort_keys=True, separators=(',', ':')))
    except KeyError as exc:
        raise ValidationError(f"bound request is missing parameter {exc}") from exc
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    return ResultTable({"name": names, "value": values, "kind": kinds, "inputs": inputs})


def _fixcheck_rows(structure: LocalStructure, d: int):
    n = structure.n
    regions = structure.regions

    def measured(subset: tuple[Region, ...]) -> int:
        spec = EnsembleSpec(LocalStructure(n, subset), Uncorrelated(), d)
        return fixed_space_dimension(build_swap_matrix(spec))

    first = regions[0]
    yield ("single", [first], 2 ** (n - first.size + 1), measured((first,)))
    disjoint = overlap = None
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            a, b = regions[i], regions[j]
            if (a & b).is_empty and disjoint is None:
                disjoint = (a, b)
            if not (a & b).is_empty and overlap is None and a != b:
                overlap = (a, b)
    if disjoint is not None:
        a, b = disjoint
        yield ("pair-disjoint", [a, b], 4 * 2 ** (n - a.size - b.size), measured((a, b)))
    if overlap is not None:
        a, b = overlap
        yield ("pair-overlap", [a, b], 2 ** (n - (a | b).size + 1), measured((a, b)))
    decomposition = connected_components(structure)
    predicted = 2 ** len(decomposition.components) * 2 ** decomposition.residual.size
    yield ("full-ensemble", list(regions), predicted, measured(regions))


def cmd_fixcheck(cfg: ExperimentConfig) -> ResultTable:
    n, d = model_shape(cfg.model)
    if n > FIXCHECK_MAX_SITES:
        raise CapExceeded(f"fixcheck is capped at {FIXCHECK_MAX_SITES} sites, got {n}")
    structure = structure_from_model(cfg.model)
    cases, details, predicted, measured, passed = [], [], [], [], []
    for case, involved, pred, meas in _fixcheck_rows(structure, d):
        cases.append(case)
        details.append(";".join(",".join(map(str, r.sites())) for r in involved))
        predicted.append(pred)
        measured.append(meas)
        passed.append(pred == meas)
    return ResultTable({"case": cases, "regions": details, "predicted_dim": predicted,
                        "measured_dim": measured, "pass": passed})


COMMANDS = {
    "evolve": cmd_evolve,
    "path1d": cmd_path1d,
    "gap": cmd_gap,
    "oracle": cmd_oracle,
    "bounds": cmd_bounds,
    "fixcheck": cmd_fixcheck,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrqc",
                                     description="Average-purity dynamics of local random circuits")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--samples", type=int, help="override run.samples")
        p.add_argument("--out", help="override output.path")
        p.add_argument("--format", choices=("csv", "json"), help="override output.format")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.run["seed"] = args.seed
        if args.samples is not None:
            cfg.run["samples"] = args.samples
        if args.out is not None:
            cfg.output["path"] = args.out
        if args.format is not None:
            cfg.output["format"] = args.format
        out_path = cfg.output.get("path")
        if not out_path:
            raise ValidationError("an output path is required (output.path or --out)")
        fmt = cfg.output.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ValidationError(f"output format must be csv or json, got {fmt!r}")
        table = COMMANDS[args.command](cfg)
        table.metadata = {"version": __version__, "command": args.command,
                          "config": cfg.canonical()}
        write_table(table, out_path, fmt)
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
