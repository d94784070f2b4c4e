"""Generative process for 1D point-and-click.

Second-order lag cursor plus first-order lag button, click/hit logic and the
noisy observation channel. Everything here is a pure function of value types;
trial workers may call into this module concurrently as long as each owns its
RNG.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STATE_DIM = 4
ACTION_DIM = 2
OBS_DIM = 5
PARAM_DIM = 5

ACTION_LOW = np.array([-50.0, -1.0])
ACTION_HIGH = np.array([50.0, 1.0])


@dataclass(frozen=True)
class SystemParams:
    """Physical and task parameters, in model units.

    Vector order is [damping, stiffness, target, width, click_threshold],
    matching the layout of the agent's parameter belief.
    """

    damping: float = 24.0
    stiffness: float = 10.0
    target: float = 0.0
    width: float = 0.03
    click_threshold: float = 0.05

    def __post_init__(self):
        if not self.damping > 0:
            raise ValueError("damping must be > 0")
        if not self.stiffness > 0:
            raise ValueError("stiffness must be > 0")
        if not self.width > 0:
            raise ValueError("width must be > 0")
        if not self.click_threshold > 0:
            raise ValueError("click_threshold must be > 0")

    def as_vector(self) -> np.ndarray:
        return np.array(
            [self.damping, self.stiffness, self.target, self.width, self.click_threshold]
        )

    @classmethod
    def from_vector(cls, vec) -> "SystemParams":
        d, k, t, w, a = (float(x) for x in vec)
        return cls(damping=d, stiffness=k, target=t, width=w, click_threshold=a)


@dataclass(frozen=True)
class NoiseSpec:
    """Stds of the Gaussian noise on the two continuous observation channels."""

    position_std: float = 0.004
    displacement_std: float = 0.004

    def __post_init__(self):
        if self.position_std < 0 or self.displacement_std < 0:
            raise ValueError("noise stds must be >= 0")

    @property
    def active(self) -> bool:
        return self.position_std > 0 and self.displacement_std > 0


@dataclass(frozen=True)
class TaskSpec:
    """Pointing task geometry in pixels plus the model-unit scale factor."""

    target_px: float
    width_px: float
    canvas_px: float = 1800.0
    start_px: float = 900.0
    scale: float = 1000.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be > 0")
        half = self.width_px / 2.0
        if self.target_px - half < 0 or self.target_px + half > self.canvas_px:
            raise ValueError("target must lie within the canvas")


def clamp_action(a) -> np.ndarray:
    return np.clip(np.asarray(a, dtype=float), ACTION_LOW, ACTION_HIGH)


def step_vec(theta, s, a, dt):
    """Dynamics core, broadcasting over leading axes of theta/s/a.

    theta[..., 0] is damping, theta[..., 1] stiffness; target, width and
    click threshold do not enter the transition.
    """
    theta = np.asarray(theta, dtype=float)
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    out = np.empty(np.broadcast_shapes(s.shape, theta.shape[:-1] + (4,), a.shape[:-1] + (4,)))
    out[..., 0] = s[..., 0] + dt * s[..., 1]
    out[..., 1] = s[..., 1] - dt * theta[..., 0] * s[..., 1] + dt * a[..., 0]
    out[..., 2] = s[..., 3]
    out[..., 3] = s[..., 3] - dt * theta[..., 1] * s[..., 3] + dt * a[..., 1]
    return out


def step(params: SystemParams, s, a, dt: float) -> np.ndarray:
    """Advance the true system one timestep.

    Actions are clamped to the control bounds rather than rejected, so that
    externally logged actions can be replayed safely. Non-finite states or
    actions are rejected.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    if s.shape != (STATE_DIM,) or a.shape != (ACTION_DIM,):
        raise ValueError("state must be a 4-vector and action a 2-vector")
    if not (np.isfinite(s).all() and np.isfinite(a).all()):
        raise ValueError("non-finite state or action")
    return step_vec(params.as_vector(), s, clamp_action(a), dt)


def click_flags_vec(theta, s):
    """Click and hit indicators for batches of (theta, state) pairs.

    A click requires the button displacement to cross the threshold upward
    between the previous and current step; a hit additionally requires the
    cursor inside the closed target interval.
    """
    theta = np.asarray(theta, dtype=float)
    s = np.asarray(s, dtype=float)
    alpha = theta[..., 4]
    click = (s[..., 2] < alpha) & (s[..., 3] > alpha)
    on_target = np.abs(s[..., 0] - theta[..., 2]) <= theta[..., 3] / 2.0
    hit = click & on_target
    return click.astype(float), hit.astype(float)


def observe(params: SystemParams, s) -> np.ndarray:
    """Deterministic part of the observation: [pos, displacement, click, hit, miss]."""
    s = np.asarray(s, dtype=float)
    if not np.isfinite(s).all():
        raise ValueError("non-finite state")
    click, hit = click_flags_vec(params.as_vector(), s)
    return np.array([s[0], s[3], click, hit, hit - click])


def sample_observation(params: SystemParams, s, noise: NoiseSpec, rng) -> np.ndarray:
    """Observation with Gaussian noise on the two continuous channels.

    The discrete channels (click, hit, miss feedback) are reported exactly.
    Always consumes two normal draws so RNG alignment does not depend on the
    configured noise level.
    """
    o = observe(params, s)
    o[0] += noise.position_std * rng.standard_normal()
    o[1] += noise.displacement_std * rng.standard_normal()
    return o


def scale_task(task: TaskSpec) -> tuple[float, float]:
    """Pixel task geometry -> model units, start position centred at origin."""
    t = (task.target_px - task.start_px) / task.scale
    w = task.width_px / task.scale
    return t, w


def to_pixels(x, task: TaskSpec):
    """Inverse of scale_task for positions (model units -> px)."""
    return np.asarray(x, dtype=float) * task.scale + task.start_px


def to_model(x_px, task: TaskSpec):
    return (np.asarray(x_px, dtype=float) - task.start_px) / task.scale
