"""Run configuration: one flat record covering every tunable of a simulation.

A RunConfig can be loaded from a JSON or YAML key-value file, validated, and
expanded into the structured configs the agent consumes. The (config, master
seed) pair fully determines every output of a run.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .agent import AgentConfig, AgentPriors
from .beliefs import DiscreteChannelModel, UnscentedConfig, VIHyper
from .dynamics import NoiseSpec, TaskSpec
from .planner import PlannerConfig, PreferenceDistribution


@dataclass(frozen=True)
class RunConfig:
    # system
    damping: float = 24.0
    stiffness: float = 10.0
    click_threshold: float = 0.05
    dt: float = 0.02
    delay_steps: int = 5
    timeout_s: float = 2.0
    action_low: tuple[float, float] = (-50.0, -1.0)
    action_high: tuple[float, float] = (50.0, 1.0)
    noise_position_std: float = 0.004
    noise_displacement_std: float = 0.004
    # belief priors
    state_prior_std: tuple[float, float, float, float] = (0.001, 0.0001, 0.00005, 0.00005)
    theta_prior_std: tuple[float, float, float, float, float] = (0.2, 0.2, 0.9, 0.02, 1e-6)
    theta_target_prior_mean: float = 0.0
    theta_width_prior_mean: float = 0.03
    revealed_std: float = 1e-6
    noise_belief_var: float = 1e-8
    # control
    horizon: int = 12
    n_plans: int = 3000
    pref_position_std: float = 0.01
    pref_hit_std: float = 0.01
    pref_misclick_std: float = 0.001
    pref_track_target: bool = True
    # hyper parameters
    vi_steps: int = 30
    vi_samples: int = 300
    vi_learning_rate: float = 3.0e-4
    pv_state_samples: int = 50
    pv_obs_samples: int = 3
    ig_state_samples: int = 8
    ig_obs_samples: int = 4
    info_gain: bool = False
    unscented_alpha: float = 0.1
    unscented_beta: float = 2.0
    unscented_kappa: float = 0.0
    discrete_ll_std: float = 0.05
    button_smoothing: float = 0.005
    target_smoothing_frac: float = 0.05
    # task / experiment
    canvas_px: float = 1800.0
    start_px: float = 900.0
    scale: float = 1000.0
    reps: int = 10
    master_seed: int = 0

    def __post_init__(self):
        positive = {
            "damping": self.damping,
            "stiffness": self.stiffness,
            "click_threshold": self.click_threshold,
            "dt": self.dt,
            "timeout_s": self.timeout_s,
            "vi_learning_rate": self.vi_learning_rate,
            "scale": self.scale,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ValueError(f"{name} must be > 0")
        if self.delay_steps < 0 or int(self.delay_steps) != self.delay_steps:
            raise ValueError("delay_steps must be a non-negative integer")
        if self.noise_position_std < 0 or self.noise_displacement_std < 0:
            raise ValueError("noise stds must be >= 0")
        for name in ("horizon", "n_plans", "vi_steps", "vi_samples", "reps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def load_config(source: str | Path | None) -> RunConfig:
    """Load a RunConfig from a JSON/YAML file; "default"/None gives defaults.

    Unknown keys are rejected so typos cannot silently fall back to
    defaults.
    """
    if source is None or str(source) == "default":
        return RunConfig()
    path = Path(source)
    text = path.read_text()
    if path.suffix.lower() in (".yaml", ".yml"):
        raw = yaml.safe_load(text) or {}
    else:
        raw = json.loads(text)
    if not isinstance(raw, dict):
        raise ValueError(f"config file {path} must contain a mapping")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key in ("action_low", "action_high", "state_prior_std", "theta_prior_std"):
        if key in raw:
            raw[key] = tuple(raw[key])
    return RunConfig(**raw)


def config_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)


def save_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_dict(cfg), indent=2, sort_keys=True) + "\n")


def config_hash(cfg: RunConfig) -> str:
    canonical = json.dumps(config_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def set_parameter(cfg: RunConfig, name: str, value) -> RunConfig:
    """Return a copy of cfg with one (aliased or literal) field replaced."""
    aliases = {
        "d": "damping",
        "damping": "damping",
        "k": "stiffness",
        "stiffness": "stiffness",
        "N": "horizon",
        "horizon": "horizon",
        "K": "n_plans",
        "plans": "n_plans",
        "pref_misclick_std": "pref_misclick_std",
        "misclick_std": "pref_misclick_std",
        "tau": "delay_steps",
        "delay": "delay_steps",
        "delay_steps": "delay_steps",
        "position_noise": "noise_position_std",
    }
    field_name = aliases.get(name, name)
    known = {f.name for f in dataclasses.fields(RunConfig)}
    if field_name not in known:
        raise ValueError(f"unknown parameter path: {name}")
    current = getattr(cfg, field_name)
    if isinstance(current, int) and not isinstance(current, bool):
        value = int(value)
    elif isinstance(current, float):
        value = float(value)
    return dataclasses.replace(cfg, **{field_name: value})


def build_agent_config(cfg: RunConfig) -> AgentConfig:
    return AgentConfig(
        dt=cfg.dt,
        delay_steps=int(cfg.delay_steps),
        timeout_s=cfg.timeout_s,
        damping=cfg.damping,
        stiffness=cfg.stiffness,
        click_threshold=cfg.click_threshold,
        noise=NoiseSpec(cfg.noise_position_std, cfg.noise_displacement_std),
        planner=PlannerConfig(
            horizon=cfg.horizon,
            n_plans=cfg.n_plans,
            action_low=cfg.action_low,
            action_high=cfg.action_high,
            pv_state_samples=cfg.pv_state_samples,
            pv_obs_samples=cfg.pv_obs_samples,
            ig_state_samples=cfg.ig_state_samples,
            ig_obs_samples=cfg.ig_obs_samples,
            info_gain=cfg.info_gain,
        ),
        preference=PreferenceDistribution(
            std=[cfg.pref_position_std, cfg.pref_hit_std, cfg.pref_misclick_std],
            track_target_belief=cfg.pref_track_target,
        ),
        vi=VIHyper(cfg.vi_steps, cfg.vi_samples, cfg.vi_learning_rate),
        unscented=UnscentedConfig(cfg.unscented_alpha, cfg.unscented_beta, cfg.unscented_kappa),
        likelihood=DiscreteChannelModel(
            std=cfg.discrete_ll_std,
            button_width=cfg.button_smoothing,
            target_width_frac=cfg.target_smoothing_frac,
        ),
        priors=AgentPriors(
            state_std=cfg.state_prior_std,
            theta_std=cfg.theta_prior_std,
            theta_target_mean=cfg.theta_target_prior_mean,
            theta_width_mean=cfg.theta_width_prior_mean,
            revealed_std=cfg.revealed_std,
            noise_belief_var=cfg.noise_belief_var,
        ),
    )


def build_task(cfg: RunConfig, target_px: float, width_px: float) -> TaskSpec:
    return TaskSpec(
        target_px=target_px,
        width_px=width_px,
        canvas_px=cfg.canvas_px,
        start_px=cfg.start_px,
        scale=cfg.scale,
    )
