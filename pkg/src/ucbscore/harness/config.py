"""YAML experiment configuration with strict key checking.

Example::

    family: normal_chk
    arms:
      - {mu: 0.5, sigma: 1.0}
      - {mu: 0.0, sigma: 1.0}
    horizons: [1000, 10000, 100000]
    replications: 2000
    seed: 7
    output_path: results/chk.csv

Family-wide settings (``score``, ``floor_l``, ``d_schedule``, ``kappa``) sit at
the top level; an arm may repeat ``family`` or one of these, but it must agree
with the experiment-wide value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from ..models import coverage as cov
from ..models import interval as itv
from ..models import normal as nrm
from ..models import pareto as par
from ..models import FAMILIES


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


ARM_KEYS = {
    "pareto": {"alpha", "beta"},
    "coverage": {"intervals"},
    "interval": {"low", "high"},
    "normal_chk": {"mu", "sigma"},
    "normal_var": {"mu", "sigma"},
    "normal_thr": {"mu", "sigma_known"},
}
SHARED_KEYS = {
    "pareto": {"score": "tail_exponent", "floor_l": None},
    "coverage": {"d_schedule": "sqrt"},
    "interval": {"score": "mean"},
    "normal_chk": {},
    "normal_var": {},
    "normal_thr": {"kappa": None},
}
FAMILY_KEYS = {"score", "floor_l", "d_schedule", "kappa"}
TOP_KEYS = {"family", "arms", "horizons", "replications", "seed", "output_path", "target_mode", "workers"} | FAMILY_KEYS
DEFAULT_HORIZONS = (1000, 10_000, 100_000)


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    arms: tuple[dict, ...]
    horizons: tuple[int, ...] = DEFAULT_HORIZONS
    replications: int = 100
    seed: int = 0
    output_path: str = "results.csv"
    shared: dict = field(default_factory=dict)
    target_mode: str = "closed_form"
    workers: int = 1

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return validate(replace(self, **kw))


def _number(value, where, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{where}: must be finite")
    if positive and not value > 0:
        raise ConfigError(f"{where}: must be positive, got {value!r}")
    return int(value) if integer else float(value)


def _check_arm(family: str, shared: dict, arm: dict, k: int) -> dict:
    where = f"arms[{k}]"
    if not isinstance(arm, dict):
        raise ConfigError(f"{where}: expected a mapping")
    allowed = ARM_KEYS[family] | set(SHARED_KEYS[family]) | {"family"}
    unknown = set(arm) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)} for family {family!r}")
    if arm.get("family", family) != family:
        raise ConfigError(f"{where}.family: {arm['family']!r} differs from experiment family {family!r}")
    missing = ARM_KEYS[family] - set(arm)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    for key in SHARED_KEYS[family]:
        if key in arm and arm[key] != shared.get(key):
            raise ConfigError(f"{where}.{key}: {arm[key]!r} differs from experiment value {shared.get(key)!r}")
    return {key: arm[key] for key in ARM_KEYS[family]}


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Check every field and build each arm once so model errors surface here."""
    if cfg.family not in FAMILIES:
        raise ConfigError(f"family: unknown {cfg.family!r}; expected one of {list(FAMILIES)}")
    if len(cfg.arms) < 2:
        raise ConfigError("arms: need at least two arms")
    horizons = tuple(_number(h, "horizons", positive=True, integer=True) for h in cfg.horizons)
    if not horizons or any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ConfigError(f"horizons: must be a non-empty strictly increasing list, got {list(horizons)}")
    replications = _number(cfg.replications, "replications", positive=True, integer=True)
    seed = _number(cfg.seed, "seed", integer=True)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed: must lie in [0, 2^64)")
    workers = _number(cfg.workers, "workers", positive=True, integer=True)
    if cfg.target_mode not in ("closed_form", "oracle"):
        raise ConfigError(f"target_mode: expected 'closed_form' or 'oracle', got {cfg.target_mode!r}")
    cfg = replace(cfg, horizons=horizons, replications=replications, seed=seed, workers=workers)
    try:
        arms = build_arms(cfg)
        policy = build_policy(cfg)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"arms: {exc}") from exc
    if horizons[-1] < policy.n0 * len(arms):
        raise ConfigError(
            f"horizons: largest horizon {horizons[-1]} is below the initial phase n0*N = {policy.n0 * len(arms)}"
        )
    return cfg


def parse(raw: Any) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    family = raw.get("family")
    if family not in FAMILIES:
        raise ConfigError(f"family: unknown {family!r}; expected one of {list(FAMILIES)}")
    extra = (set(raw) & FAMILY_KEYS) - set(SHARED_KEYS[family])
    if extra:
        raise ConfigError(f"keys {sorted(extra)} do not apply to family {family!r}")
    shared = {k: raw.get(k, default) for k, default in SHARED_KEYS[family].items()}
    arms = raw.get("arms")
    if not isinstance(arms, list):
        raise ConfigError("arms: expected a list of arm mappings")
    checked = tuple(_check_arm(family, shared, arm, k) for k, arm in enumerate(arms))
    cfg = ExperimentConfig(
        family=family,
        arms=checked,
        horizons=tuple(raw.get("horizons", DEFAULT_HORIZONS)),
        replications=raw.get("replications", 100),
        seed=raw.get("seed", 0),
        output_path=str(raw.get("output_path", "results.csv")),
        shared=shared,
        target_mode=raw.get("target_mode", "closed_form"),
        workers=raw.get("workers", 1),
    )
    return validate(cfg)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    return parse(raw)


def _pareto_score(cfg):
    tag = cfg.shared["score"]
    if tag not in par.SCORES:
        raise ConfigError(f"score: unknown Pareto score {tag!r}; expected one of {sorted(par.SCORES)}")
    return par.SCORES[tag]


def _pareto_floor(cfg):
    floor = cfg.shared.get("floor_l")
    if floor is None:
        return _pareto_score(cfg).floor_l
    return _number(floor, "floor_l")


def build_arms(cfg: ExperimentConfig) -> list:
    out = []
    for k, a in enumerate(cfg.arms):
        where = f"arms[{k}]"
        try:
            out.append(_build_arm(cfg, a, where))
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    return out


def _build_arm(cfg: ExperimentConfig, a: dict, where: str):
    fam = cfg.family
    if fam == "pareto":
        params = par.ParetoParams(_number(a["alpha"], f"{where}.alpha"), _number(a["beta"], f"{where}.beta"),
                                  floor_l=_pareto_floor(cfg))
        return par.ParetoArm(params, _pareto_score(cfg))
    if fam == "coverage":
        ivs = a["intervals"]
        if not isinstance(ivs, list) or not all(isinstance(p, (list, tuple)) and len(p) == 2 for p in ivs):
            raise ConfigError(f"{where}.intervals: expected a list of [a, b] pairs")
        try:
            support = cov.SupportSet(tuple(tuple(p) for p in ivs))
        except ValueError as exc:
            raise ConfigError(f"{where}.intervals: {exc}") from exc
        return cov.CoverageArm(support)
    if fam == "interval":
        tag = cfg.shared["score"]
        if tag not in itv.SCORES:
            raise ConfigError(f"score: unknown interval score {tag!r}; expected one of {sorted(itv.SCORES)}")
        params = itv.IntervalParams(_number(a["low"], f"{where}.low"), _number(a["high"], f"{where}.high"))
        return itv.IntervalArm(params, itv.SCORES[tag])
    if fam in ("normal_chk", "normal_var"):
        params = nrm.NormalParams(_number(a["mu"], f"{where}.mu"), _number(a["sigma"], f"{where}.sigma"))
        return nrm.NormalChkArm(params) if fam == "normal_chk" else nrm.NormalVarArm(params)
    if cfg.shared.get("kappa") is None:
        raise ConfigError("kappa: required for family 'normal_thr'")
    spec = nrm.ThresholdSpec(_number(cfg.shared["kappa"], "kappa"), _number(a["sigma_known"], f"{where}.sigma_known"))
    return nrm.NormalThresholdArm(_number(a["mu"], f"{where}.mu"), spec)


def build_policy(cfg: ExperimentConfig):
    fam = cfg.family
    if fam == "pareto":
        return par.ParetoPolicy(_pareto_score(cfg), _pareto_floor(cfg))
    if fam == "coverage":
        kind = cfg.shared["d_schedule"]
        if kind not in cov.SCHEDULES:
            raise ConfigError(f"d_schedule: expected one of {sorted(cov.SCHEDULES)}, got {kind!r}")
        return cov.CoveragePolicy(cov.PartitionSchedule(kind))
    if fam == "interval":
        return itv.IntervalPolicy(itv.SCORES[cfg.shared["score"]])
    if fam == "normal_chk":
        return nrm.ChkPolicy()
    if fam == "normal_var":
        return nrm.VariancePolicy()
    return nrm.ThresholdPolicy(float(cfg.shared["kappa"]), [float(a["sigma_known"]) for a in cfg.arms])


def to_dict(cfg: ExperimentConfig) -> dict:
    """Plain mapping that ``parse`` accepts back."""
    out = {"family": cfg.family, "arms": [dict(a) for a in cfg.arms], "horizons": list(cfg.horizons),
           "replications": cfg.replications, "seed": cfg.seed, "output_path": cfg.output_path,
           "target_mode": cfg.target_mode, "workers": cfg.workers}
    out.update({k: v for k, v in cfg.shared.items() if v is not None})
    for arm in out["arms"]:
        if "intervals" in arm:
            arm["intervals"] = [list(p) for p in arm["intervals"]]
    return out
