"""Scenario configuration and the simulate/reconstruct pipeline.

A scenario is one JSON document::

    {
      "name": "A",
      "model": {"kind": "displaced_thermal", "n_mean": 30, "alpha_sq": [256]},
      "epsilon": 1e-10,
      "grid": {"L": 20, "p_low": 0.05, "p_high": 0.95},
      "trials_per_eta": "exact",
      "noise": {"random_rel_amp": 0.0, "systematic_bias": 0.0, "seed": null},
      "recon": {"n_max": null, "max_iters": 2000, ...},
      "seed": 0,
      "output_dir": "out/A"
    }

Multimode models may give ``alpha_range`` and ``alpha_seed`` instead of
``alpha_sq``; amplitudes ``|alpha_j|`` are then drawn uniformly. The grid is
either ``{"etas": [...]}`` or design parameters applied to the true curve.
A ``null`` noise seed reuses the scenario seed.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import scipy

from . import io
from .detection import EfficiencyGrid, design_grid, model_noclick
from .reconstruct import EnergyConstraint, ReconstructionConfig, ReconstructionResult, reconstruct
from .simulate import NoClickDataset, NoiseSpec, exact_dataset, perturb_dataset, simulate_dataset
from .states import PhotonDistribution, SourceModel, total_photon_pmf

SCENARIO_NAMES = ("A", "B", "C", "D")

DEFAULT_RECON = {
    "n_max": None,
    "max_iters": 2000,
    "stop_tol": 1e-12,
    "init": "uniform",
    "energy_constraint": None,
    "mismatch_rel_tol": 0.05,
    "mismatch_z": 10.0,
}

DEFAULTS = {
    "name": "reference",
    "model": {"kind": "displaced_thermal", "n_mean": 30.0, "alpha_sq": [256.0]},
    "epsilon": 1e-10,
    "grid": {"L": 20, "p_low": 0.05, "p_high": 0.95},
    "trials_per_eta": "exact",
    "noise": {"random_rel_amp": 0.0, "systematic_bias": 0.0, "seed": None},
    "recon": DEFAULT_RECON,
    "seed": 0,
    "output_dir": "out/reference",
}


class ConfigError(ValueError):
    pass


def _merge(base, over):
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict) and key != "model":
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def build_model(doc: dict) -> SourceModel:
    kind = doc.get("kind")
    n_mean = float(doc.get("n_mean", 0.0))
    if "alpha_range" in doc:
        if kind != "multimode_product":
            raise ConfigError("alpha_range is only meaningful for multimode_product")
        if "alpha_sq" in doc:
            raise ConfigError("give alpha_sq or alpha_range, not both")
        lo, hi = doc["alpha_range"]
        if not 0 <= lo <= hi:
            raise ConfigError("alpha_range must satisfy 0 <= lo <= hi")
        return SourceModel.random_multimode(int(doc["mode_count"]), n_mean, (lo, hi),
                                            int(doc["alpha_seed"]))
    alpha_sq = doc.get("alpha_sq", [0.0])
    if kind == "multimode_product":
        return SourceModel.multimode(n_mean, alpha_sq)
    return SourceModel(kind, tuple(np.atleast_1d(alpha_sq)), n_mean, 1)


def _recon_config(doc: dict) -> ReconstructionConfig:
    doc = dict(doc)
    ec = doc.pop("energy_constraint", None)
    init = doc.pop("init", "uniform")
    if not isinstance(init, str):
        init = np.asarray(init, dtype=float)
    unknown = set(doc) - set(DEFAULT_RECON)
    if unknown:
        raise ConfigError(f"unknown recon keys: {sorted(unknown)}")
    return ReconstructionConfig(init=init, energy_constraint=None if ec is None else EnergyConstraint(**ec),
                                **doc)


@dataclass
class ScenarioConfig:
    """A fully resolved experiment; ``doc`` keeps the source document."""

    name: str
    model: SourceModel
    epsilon: float
    grid: dict
    trials_per_eta: int | str
    noise: NoiseSpec
    recon: ReconstructionConfig
    seed: int
    output_dir: Path
    doc: dict = field(repr=False, default_factory=dict)

    @classmethod
    def from_doc(cls, doc: dict) -> "ScenarioConfig":
        unknown = set(doc) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        full = _merge(DEFAULTS, doc)
        try:
            model = build_model(full["model"])
            trials = full["trials_per_eta"]
            if trials != "exact":
                if isinstance(trials, bool) or int(trials) != trials or trials < 1:
                    raise ConfigError("trials_per_eta must be a positive integer or 'exact'")
                trials = int(trials)
            grid = dict(full["grid"])
            if "etas" in grid:
                grid = {"etas": [float(e) for e in grid["etas"]]}
                EfficiencyGrid(np.asarray(grid["etas"]))
            epsilon = float(full["epsilon"])
            if not 0 < epsilon < 1:
                raise ConfigError("epsilon must lie in (0, 1)")
            seed = int(full["seed"])
            nz = full["noise"]
            noise = NoiseSpec(float(nz["random_rel_amp"]), float(nz["systematic_bias"]),
                              seed if nz.get("seed") is None else int(nz["seed"]))
            recon = _recon_config(full["recon"])
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc
        return cls(str(full["name"]), model, epsilon, grid, trials, noise, recon, seed,
                   Path(full["output_dir"]), full)

    def with_overrides(self, seed=None, exact=False, output_dir=None) -> "ScenarioConfig":
        doc = copy.deepcopy(self.doc)
        if seed is not None:
            doc["seed"] = int(seed)
        if exact:
            doc["trials_per_eta"] = "exact"
        if output_dir is not None:
            doc["output_dir"] = str(output_dir)
        return ScenarioConfig.from_doc(doc)

    @property
    def is_exact(self) -> bool:
        return self.trials_per_eta == "exact"

    def config_hash(self) -> str:
        """sha256 of the canonical config; the output location is not hashed."""
        doc = {k: v for k, v in self.doc.items() if k != "output_dir"}
        canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def load_config(spec) -> ScenarioConfig:
    """Load a config from a path, or a shipped scenario by name (A-D, reference)."""
    path = Path(spec)
    if path.is_file():
        return ScenarioConfig.from_doc(io.read_json(path))
    name = str(spec)
    res = resources.files("noclick") / "configs" / f"{name}.json"
    if res.is_file():
        return ScenarioConfig.from_doc(json.loads(res.read_text()))
    raise ConfigError(f"no config file or shipped scenario named {spec!r}")


def reference_doc() -> dict:
    return copy.deepcopy(DEFAULTS)


@dataclass
class Experiment:
    """Truth, grid and dataset of a scenario."""

    config: ScenarioConfig
    truth: PhotonDistribution
    grid: EfficiencyGrid
    dataset: NoClickDataset


def truth_of(cfg: ScenarioConfig) -> PhotonDistribution:
    return total_photon_pmf(cfg.model, cfg.epsilon)


def grid_of(cfg: ScenarioConfig, truth: PhotonDistribution | None = None) -> EfficiencyGrid:
    if "etas" in cfg.grid:
        return EfficiencyGrid(np.asarray(cfg.grid["etas"]))
    truth = truth if truth is not None else truth_of(cfg)
    return design_grid(truth, int(cfg.grid["L"]), float(cfg.grid["p_low"]), float(cfg.grid["p_high"]))


def simulate_experiment(cfg: ScenarioConfig) -> Experiment:
    truth = truth_of(cfg)
    grid = grid_of(cfg, truth)
    if cfg.is_exact:
        data = exact_dataset(cfg.model, grid)
    else:
        data = simulate_dataset(cfg.model, grid, cfg.trials_per_eta, cfg.seed)
    data = perturb_dataset(data, cfg.noise)
    return Experiment(cfg, truth, grid, data)


def versions() -> dict:
    from . import __version__
    return {"noclick": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": ".".join(map(str, sys.version_info[:3]))}


def manifest(cfg: ScenarioConfig, files, extra=None) -> dict:
    doc = {"scenario": cfg.name, "config_hash": cfg.config_hash(), "seed": cfg.seed,
           "exact": cfg.is_exact, "versions": versions(), "config": cfg.doc,
           "files": sorted(str(f) for f in files)}
    if extra:
        doc.update(extra)
    return doc


def write_simulation(exp: Experiment, out: Path) -> list:
    out = Path(out)
    cfg = exp.config
    files = {
        "dataset.csv": lambda p: io.write_dataset(p, exp.dataset),
        "curve.csv": lambda p: io.write_curve(p, exp.grid.etas, model_noclick(cfg.model, exp.grid.etas)),
        "truth.csv": lambda p: io.write_distribution(p, exp.truth),
    }
    for name, writer in files.items():
        writer(out / name)
    eta_fine = np.linspace(0.0, 1.0, 201)
    io.write_curve(out / "curve_dense.csv", eta_fine, model_noclick(cfg.model, eta_fine))
    written = sorted(files) + ["curve_dense.csv"]
    io.write_json(out / "simulate_manifest.json", manifest(cfg, written))
    return written


def reconstruct_experiment(cfg: ScenarioConfig, data: NoClickDataset,
                           truth: PhotonDistribution | None = None) -> ReconstructionResult:
    return reconstruct(data, cfg.recon, truth)


def write_reconstruction(cfg: ScenarioConfig, data: NoClickDataset,
                         result: ReconstructionResult, out: Path) -> list:
    out = Path(out)
    io.write_json(out / "result.json", result.to_doc())
    io.write_distribution(out / "distribution.csv", result.distribution)
    io.write_curve(out / "fitted_curve.csv", data.etas, result.fitted_noclick)
    written = ["distribution.csv", "fitted_curve.csv", "result.json"]
    extra = {"iterations": int(result.iterations), "converged": bool(result.converged),
             "model_mismatch": bool(result.model_mismatch)}
    if result.fidelity_vs_truth is not None:
        extra["one_minus_fidelity"] = 1.0 - result.fidelity_vs_truth
    io.write_json(out / "reconstruct_manifest.json", manifest(cfg, written, extra))
    return written


def infidelity(result: ReconstructionResult) -> float:
    return math.nan if result.fidelity_vs_truth is None else 1.0 - result.fidelity_vs_truth
