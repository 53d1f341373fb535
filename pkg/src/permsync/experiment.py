"""Experiment orchestration: ensembles of instances, CSV rows and a JSON summary."""

from __future__ import annotations

import csv
import json
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .bench import GroundTruth, SynthConfig, accuracy, generate, majority_vote
from .encoder import DEFAULT_LAMBDA, decode, encode, energy
from .errors import InvalidConfig
from .formats import import_problem, write_sparsity_pbm
from .model import ObservationGraph
from .solvers import (
    MAX_PERMUTATION_ASSIGNMENTS,
    AnnealSchedule,
    permutation_space_size,
    sample_sa,
    solve_exhaustive_binary,
    solve_exhaustive_permutation,
)

KINDS = (
    "noiseless-recovery",
    "lambda-ablation",
    "noise-sweep",
    "completeness-sweep",
    "majority-vote-sweep",
    "single-solve",
)
SOLVERS = ("exhaustive", "perm-exhaustive", "sa")

CSV_COLUMNS = [
    "seed", "n", "m", "C", "sigma", "lambda", "solver", "reads",
    "minEnergyBinary", "minEnergyPermutation", "energyGap", "accuracy", "validAllViews",
    "k", "accuracyPermutation", "wallTimeMs",
]

_DEFAULT_SETTINGS = {
    "lambda-ablation": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0],
    "noise-sweep": [0.0, 0.05, 0.1, 0.15, 0.2, 0.25],
    "completeness-sweep": [0.6, 0.7, 0.8, 0.9, 1.0],
    "majority-vote-sweep": [1, 2, 4, 8, 16],
}


@dataclass
class ExperimentSpec:
    kind: str = "single-solve"
    n: int = 3
    m: int = 3
    completeness: float = 1.0
    swap_ratio: float = 0.0
    seed: int = 0
    input_path: str | None = None
    lambdas: list[float] = field(default_factory=lambda: [DEFAULT_LAMBDA])
    settings: list[float] | None = None
    solver: str = "exhaustive"
    reads: int = 200
    sweeps: int = 1000
    beta_start: float = 0.1
    beta_end: float = 10.0
    top_k: int = 1
    include_diagonal: bool = True
    gauge: bool = True
    ensemble_size: int = 7
    jobs: int = 1
    csv_path: str = "results.csv"
    json_path: str | None = "summary.json"
    pbm_path: str | None = None
    gnuplot_path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidConfig(f"unknown experiment kind {self.kind!r}")
        if self.solver not in SOLVERS:
            raise InvalidConfig(f"unknown solver {self.solver!r}")
        if self.input_path is not None and self.kind != "single-solve":
            raise InvalidConfig("an input file is only accepted by single-solve")
        if self.ensemble_size < 1:
            raise InvalidConfig("ensemble size must be at least 1")
        if self.kind == "noiseless-recovery":
            self.swap_ratio = 0.0
        if self.kind != "lambda-ablation" and len(self.lambdas) != 1:
            raise InvalidConfig("several lambda values are only meaningful for lambda-ablation")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidConfig(f"unknown experiment fields: {sorted(unknown)}")
        return cls(**data)

    def sweep_values(self) -> list:
        if self.kind == "lambda-ablation":
            return list(self.settings or (self.lambdas if len(self.lambdas) > 1 else _DEFAULT_SETTINGS[self.kind]))
        if self.kind in _DEFAULT_SETTINGS:
            return list(self.settings or _DEFAULT_SETTINGS[self.kind])
        return [None]

    @property
    def instances(self) -> int:
        return 1 if self.input_path is not None else self.ensemble_size


@dataclass
class _Task:
    spec: ExperimentSpec
    instance: int
    setting_index: int
    setting: object


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _instance(spec: ExperimentSpec, instance: int, setting) -> tuple[GroundTruth | None, ObservationGraph, SynthConfig | None]:
    if spec.input_path is not None:
        return None, import_problem(spec.input_path), None
    cfg = SynthConfig(spec.n, spec.m, spec.completeness, spec.swap_ratio, spec.seed + instance)
    if spec.kind == "noise-sweep":
        cfg = replace(cfg, swap_ratio=float(setting))
    elif spec.kind == "completeness-sweep":
        cfg = replace(cfg, completeness=float(setting))
    gt, g = generate(cfg)
    return gt, g, cfg


def _solve(spec: ExperimentSpec, g: ObservationGraph, lam: float, seed: int, top_k: int):
    if spec.solver == "perm-exhaustive":
        return solve_exhaustive_permutation(g, lam, spec.gauge, top_k, spec.include_diagonal)
    q = encode(g, lam, spec.include_diagonal, spec.gauge)
    if spec.solver == "exhaustive":
        return solve_exhaustive_binary(q, top_k)
    sched = AnnealSchedule(spec.beta_start, spec.beta_end, spec.sweeps)
    return sample_sa(q, spec.reads, sched, seed)


def run_task(task: _Task) -> dict:
    """One (instance, setting) cell of an experiment."""
    spec = task.spec
    t0 = time.perf_counter()
    gt, g, cfg = _instance(spec, task.instance, task.setting)
    lam = float(task.setting) if spec.kind == "lambda-ablation" else float(spec.lambdas[0])
    k = int(task.setting) if spec.kind == "majority-vote-sweep" else None
    seed = cfg.seed if cfg is not None else spec.seed
    samples = _solve(spec, g, lam, seed, max(spec.top_k, k or 1))
    q = samples.problem
    best = samples.first
    est = majority_vote(samples, k, q) if k is not None else decode(best.bits, q, source=spec.solver)

    perm_energy = perm_acc = None
    if permutation_space_size(g.n, g.m, spec.gauge) <= MAX_PERMUTATION_ASSIGNMENTS:
        perm = samples if spec.solver == "perm-exhaustive" else solve_exhaustive_permutation(
            g, lam, spec.gauge, 1, spec.include_diagonal
        )
        perm_energy = perm.lowest_energy
        if gt is not None:
            perm_acc = accuracy(decode(perm.first.bits, q), gt)

    row = {
        "seed": seed,
        "n": g.n,
        "m": g.m,
        "C": cfg.completeness if cfg else None,
        "sigma": cfg.swap_ratio if cfg else None,
        "lambda": lam,
        "solver": spec.solver,
        "reads": spec.reads if spec.solver == "sa" else samples.meta["reads"],
        "minEnergyBinary": best.energy,
        "minEnergyPermutation": perm_energy,
        "energyGap": abs(best.energy - perm_energy) if perm_energy is not None else None,
        "accuracy": accuracy(est, gt) if gt is not None else None,
        "validAllViews": est.all_valid,
        "k": k,
        "accuracyPermutation": perm_acc,
        "wallTimeMs": (time.perf_counter() - t0) * 1e3,
    }
    extra = {
        "instance": task.instance,
        "setting": task.setting,
        "bits": "".join(str(int(b)) for b in best.bits),
        "energy": best.energy,
        "views": [v.tolist() for v in est.views],
        "valid": list(est.valid),
    }
    return {"row": row, "extra": extra}


def _tasks(spec: ExperimentSpec) -> list[_Task]:
    values = spec.sweep_values()
    return [_Task(spec, e, s, v) for e in range(spec.instances) for s, v in enumerate(values)]


def _summary(spec: ExperimentSpec, results: list[dict]) -> dict:
    def stats(vals):
        vals = [v for v in vals if v is not None]
        if not vals:
            return None
        return {"mean": statistics.fmean(vals), "std": statistics.pstdev(vals) if len(vals) > 1 else 0.0}

    per_setting = []
    for s, value in enumerate(spec.sweep_values()):
        rows = [r["row"] for r in results if r["extra"]["setting"] == value]
        per_setting.append({
            "setting": value,
            "accuracy": stats([r["accuracy"] for r in rows]),
            "accuracyPermutation": stats([r["accuracyPermutation"] for r in rows]),
            "energyGap": stats([r["energyGap"] for r in rows]),
            "minEnergyBinary": stats([r["minEnergyBinary"] for r in rows]),
            "validAllViewsRate": statistics.fmean(1.0 if r["validAllViews"] else 0.0 for r in rows) if rows else None,
        })
    spec_dict = {k: v for k, v in asdict(spec).items() if k not in ("jobs",)}
    out = {"spec": spec_dict, "settings": per_setting, "instances": [r["extra"] for r in results]}
    if spec.kind == "single-solve" and results:
        out["estimate"] = {
            "views": results[0]["extra"]["views"],
            "valid": results[0]["extra"]["valid"],
        }
    return out


def _gnuplot(spec: ExperimentSpec) -> str:
    col = {"lambda-ablation": "lambda", "noise-sweep": "sigma", "completeness-sweep": "C",
           "majority-vote-sweep": "k"}.get(spec.kind, "seed")
    x = CSV_COLUMNS.index(col) + 1
    y = CSV_COLUMNS.index("accuracy") + 1
    return (
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        f"set xlabel '{col}'\nset ylabel 'accuracy'\n"
        f"plot '{spec.csv_path}' using {x}:{y} with points\n"
    )


def run_experiment(spec: ExperimentSpec) -> list[dict]:
    """Run every (instance, setting) pair and write the reports.

    CSV rows are written and flushed in (instance, setting) order as they
    complete, so an aborted run keeps everything finished before the failure.
    """
    tasks = _tasks(spec)
    results: list[dict] = []
    Path(spec.csv_path).parent.mkdir(parents=True, exist_ok=True)
    with open(spec.csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        fh.flush()
        if spec.jobs > 1:
            with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
                stream = pool.map(run_task, tasks)
                for res in stream:
                    writer.writerow([_fmt(res["row"][c]) for c in CSV_COLUMNS])
                    fh.flush()
                    results.append(res)
        else:
            for task in tasks:
                res = run_task(task)
                writer.writerow([_fmt(res["row"][c]) for c in CSV_COLUMNS])
                fh.flush()
                results.append(res)
    if spec.json_path:
        Path(spec.json_path).write_text(json.dumps(_summary(spec, results), indent=2) + "\n", encoding="utf-8")
    if spec.pbm_path:
        gt, g, _ = _instance(spec, 0, spec.sweep_values()[0])
        lam = float(spec.sweep_values()[0]) if spec.kind == "lambda-ablation" else float(spec.lambdas[0])
        write_sparsity_pbm(encode(g, lam, spec.include_diagonal, spec.gauge), spec.pbm_path)
    if spec.gnuplot_path:
        Path(spec.gnuplot_path).write_text(_gnuplot(spec), encoding="utf-8")
    return results


def revalidate(spec: ExperimentSpec, results: list[dict]) -> float:
    """Largest difference between a reported energy and a fresh evaluation of its bitstring."""
    worst = 0.0
    for res in results:
        extra = res["extra"]
        _, g, _ = _instance(spec, extra["instance"], extra["setting"])
        lam = res["row"]["lambda"]
        q = encode(g, lam, spec.include_diagonal, spec.gauge)
        bits = [int(c) for c in extra["bits"]]
        worst = max(worst, abs(energy(q, bits) - extra["energy"]))
    return worst
