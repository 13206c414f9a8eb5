"""Experiment orchestration: power curves and threshold-sensitivity sweeps.

A power run maps (sample size, trial) to an independent generate-fit-test
pipeline with its own derived seeds, then aggregates the per-trial
posterior probabilities into curve points.  A threshold sweep fits the
thresholded binary baseline at each level of a grid next to the
count-model references on the same data.

Trials are independent processes when more than one worker is available
(NETPOP_WORKERS caps the pool); seeds are derived per trial, so results
are identical no matter how the work is scheduled.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._util import atomic_write_text, derive_seed, format_float, worker_count
from .data import PopulationDataset, binarize_threshold
from .hypotheses import population_test
from .model import Hyperparams
from .sampler import McmcConfig, run_chain
from .synth import simulation_from_dict

METHODS = ("nc_fixed", "nc_mixed", "dd_threshold")
REJECTION_THRESHOLD = 0.95


def hyperparams_from_dict(d: dict | None) -> Hyperparams:
    d = dict(d or {})
    return Hyperparams(
        n_clusters=int(d.get("n_clusters", 15)),
        latent_dim=int(d.get("latent_dim", 10)),
        alpha=d.get("alpha"),
        prior_h1=float(d.get("prior_h1", 0.5)),
        family=d.get("family", "binomial"),
        entity_mixing_scale=float(d.get("entity_mixing_scale", 1.0)),
    )


def mcmc_from_dict(d: dict | None, seed: int, variant: str) -> McmcConfig:
    d = dict(d or {})
    return McmcConfig(
        n_samples=int(d.get("n_samples", 1300)),
        burn_in=int(d.get("burn_in", 200)),
        seed=seed,
        model_variant=variant,
        thin=int(d.get("thin", 10)),
    )


@dataclass(frozen=True)
class ExperimentPlan:
    """One power experiment: scenario x sizes x trials under one method."""

    scenario: str
    sample_sizes: tuple
    trials_per_size: int = 20
    method: str = "nc_fixed"
    threshold_level: float = 0.0
    simulation: dict = field(default_factory=dict)
    seed: int = 0
    hyperparams: dict = field(default_factory=dict)
    mcmc: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(int(s) for s in self.sample_sizes))
        if self.scenario not in ("h1_true", "h1_false"):
            raise ValueError("scenario must be h1_true or h1_false")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if not self.sample_sizes or any(s < 1 for s in self.sample_sizes):
            raise ValueError("sample sizes must be positive")
        if self.trials_per_size < 1:
            raise ValueError("trials_per_size must be at least 1")
        if not self.simulation:
            raise ValueError("plan needs a simulation config")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        return cls(
            scenario=d["scenario"],
            sample_sizes=tuple(d["sample_sizes"]),
            trials_per_size=int(d.get("trials_per_size", 20)),
            method=d.get("method", "nc_fixed"),
            threshold_level=float(d.get("threshold_level", 0.0)),
            simulation=d["simulation"],
            seed=int(d.get("seed", 0)),
            hyperparams=dict(d.get("hyperparams", {})),
            mcmc=dict(d.get("mcmc", {})),
        )


@dataclass(frozen=True)
class CurvePoint:
    sample_size: int
    mean_p_h1: float
    percentile_05: float
    percentile_95: float
    rejection_rate: float


def _null_simulation(sim: dict) -> dict:
    """Same-structure variant of a simulation config: population 2 reuses
    population 1's structures, making the shared-profile null true."""
    out = dict(sim)
    out["populations"] = [sim["populations"][0], sim["populations"][0]]
    return out


def _fit_p_h1(dataset: PopulationDataset, method: str, level: float,
              hp_dict: dict, mcmc_dict: dict, seed: int) -> float:
    hp = hyperparams_from_dict(hp_dict)
    if method == "dd_threshold":
        dataset = binarize_threshold(dataset, level)
        hp = hp.with_family("binomial")
        variant = "fixed"
    else:
        variant = "fixed" if method == "nc_fixed" else "mixed"
    cfg = mcmc_from_dict(mcmc_dict, seed=seed, variant=variant)
    trace = run_chain(dataset, hp, cfg)
    return population_test(trace).p_h1


def _power_trial(task: dict) -> tuple[int, int, float | None, str | None]:
    size, trial = task["size"], task["trial"]
    try:
        dataset = simulation_from_dict(
            task["simulation"],
            entities_per_population=size,
            seed=derive_seed(task["seed"], size, trial, 0),
        )
        p = _fit_p_h1(
            dataset, task["method"], task["level"], task["hp"], task["mcmc"],
            seed=derive_seed(task["seed"], size, trial, 1),
        )
        return size, trial, p, None
    except Exception as exc:  # per-trial isolation: one failure keeps the curve
        return size, trial, None, f"{type(exc).__name__}: {exc}"


def _run_tasks(fn, tasks: list[dict]) -> list:
    workers = worker_count(len(tasks))
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def aggregate_power_rows(rows) -> list[CurvePoint]:
    """Curve points from (sample_size, trial, p_h1) rows; NaN rows dropped."""
    by_size: dict[int, list[float]] = {}
    for size, _trial, p in rows:
        if p is not None and not np.isnan(p):
            by_size.setdefault(int(size), []).append(float(p))
    points = []
    for size in sorted(by_size):
        vals = np.asarray(by_size[size])
        points.append(
            CurvePoint(
                sample_size=size,
                mean_p_h1=float(vals.mean()),
                percentile_05=float(np.percentile(vals, 5)),
                percentile_95=float(np.percentile(vals, 95)),
                rejection_rate=float((vals > REJECTION_THRESHOLD).mean()),
            )
        )
    return points


def run_power_curve(plan: ExperimentPlan, out_dir: str | Path | None = None) -> list[CurvePoint]:
    """Run the full plan; persists power_curve.csv and power_summary.csv."""
    sim = plan.simulation
    if plan.scenario == "h1_false":
        sim = _null_simulation(sim)
    tasks = [
        {
            "size": size, "trial": trial, "seed": plan.seed, "simulation": sim,
            "method": plan.method, "level": plan.threshold_level,
            "hp": plan.hyperparams, "mcmc": plan.mcmc,
        }
        for size in plan.sample_sizes
        for trial in range(plan.trials_per_size)
    ]
    results = _run_tasks(_power_trial, tasks)

    rows = []
    for size, trial, p, err in results:
        if err is not None:
            warnings.warn(f"trial (size={size}, trial={trial}) failed: {err}")
        rows.append((size, trial, np.nan if p is None else p))
    points = aggregate_power_rows(rows)

    if out_dir is not None:
        out_dir = Path(out_dir)
        lines = ["sample_size,trial,p_h1"]
        for size, trial, p in rows:
            lines.append(f"{size},{trial},{format_float(p)}")
        atomic_write_text(out_dir / "power_curve.csv", "\n".join(lines) + "\n")
        lines = ["sample_size,mean_p_h1,percentile_05,percentile_95,rejection_rate"]
        for pt in points:
            lines.append(
                f"{pt.sample_size},{format_float(pt.mean_p_h1)},"
                f"{format_float(pt.percentile_05)},{format_float(pt.percentile_95)},"
                f"{format_float(pt.rejection_rate)}"
            )
        atomic_write_text(out_dir / "power_summary.csv", "\n".join(lines) + "\n")
    return points


def _sweep_task(task: dict):
    dataset = task["dataset"]
    method, level = task["method"], task["level"]
    p = _fit_p_h1(dataset, method, level if level is not None else 0.0,
                  task["hp"], task["mcmc"], seed=task["chain_seed"])
    return method, level, p


def run_threshold_sweep(
    dataset: PopulationDataset,
    levels,
    hyperparams: dict | None = None,
    mcmc: dict | None = None,
    seed: int = 0,
    reference_seeds=None,
    out_dir: str | Path | None = None,
) -> list[tuple[str, float | None, float]]:
    """Thresholded-baseline p_h1 per level plus count-model reference rows.

    Returns (method, level, p_h1) rows; reference rows carry level None.
    One reference pair (fixed and mixed variant on the raw counts) runs per
    entry of reference_seeds (default: just ``seed``).
    """
    if not dataset.has_node_counts():
        raise ValueError("threshold sweep needs node_counts for binarization")
    levels = [float(x) for x in levels]
    if reference_seeds is None:
        reference_seeds = [seed]

    # One shared chain seed across levels: levels producing identical binary
    # data then report identical p_h1, isolating the thresholding effect.
    dd_seed = derive_seed(seed, 0)
    tasks = [
        {
            "dataset": dataset, "method": "dd_threshold", "level": level,
            "hp": hyperparams or {}, "mcmc": mcmc or {},
            "chain_seed": dd_seed,
        }
        for level in levels
    ]
    for k, ref_seed in enumerate(reference_seeds):
        for j, method in enumerate(("nc_fixed", "nc_mixed")):
            tasks.append(
                {
                    "dataset": dataset, "method": method, "level": None,
                    "hp": hyperparams or {}, "mcmc": mcmc or {},
                    "chain_seed": derive_seed(ref_seed, 1, k, j),
                }
            )
    rows = _run_tasks(_sweep_task, tasks)

    if out_dir is not None:
        lines = ["level,p_h1,method"]
        for method, level, p in rows:
            level_txt = "" if level is None else format_float(level)
            lines.append(f"{level_txt},{format_float(p)},{method}")
        atomic_write_text(Path(out_dir) / "sweep.csv", "\n".join(lines) + "\n")
    return rows
