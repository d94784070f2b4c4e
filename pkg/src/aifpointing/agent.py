"""The closed interaction loop of agent and generative process.

Step j (0-based) of a trial:

1. at j == delay the target location/width enter the parameter belief;
2. the stored belief about the state ``delay`` steps ago is rolled forward
   through the model with the buffered actions, and the planner picks an
   action from the compensated belief;
3. the world steps and (once old enough observations exist, j >= delay)
   emits the observation of the state the agent is only now perceiving;
4. the stored belief advances one model step with the action from ``delay``
   steps ago, then incorporates the delayed observation variationally.

Success is always judged on the true world output, never on beliefs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .beliefs import (
    DiscreteChannelModel,
    GaussianBelief,
    LogNormalBelief,
    UnscentedConfig,
    VIHyper,
    ukf_predict,
    vi_update,
)
from .dynamics import (
    NoiseSpec,
    SystemParams,
    TaskSpec,
    observe,
    sample_observation,
    scale_task,
    step,
    to_pixels,
)
from .planner import PlannerConfig, PreferenceDistribution, select_action

STATE_PRIOR_STD = (0.001, 0.0001, 0.00005, 0.00005)
THETA_PRIOR_STD = (0.2, 0.2, 0.9, 0.02, 1e-6)
THETA_TARGET_PRIOR_MEAN = 0.0
THETA_WIDTH_PRIOR_MEAN = 0.03
REVEALED_STD = 1e-6


@dataclass(frozen=True)
class AgentPriors:
    state_mean: np.ndarray = field(default_factory=lambda: np.zeros(4))
    state_std: np.ndarray = field(default_factory=lambda: np.array(STATE_PRIOR_STD))
    theta_std: np.ndarray = field(default_factory=lambda: np.array(THETA_PRIOR_STD))
    theta_target_mean: float = THETA_TARGET_PRIOR_MEAN
    theta_width_mean: float = THETA_WIDTH_PRIOR_MEAN
    revealed_std: float = REVEALED_STD
    noise_belief_var: float = 1e-8


@dataclass(frozen=True)
class AgentConfig:
    dt: float = 0.02
    delay_steps: int = 5
    timeout_s: float = 2.0
    damping: float = 24.0
    stiffness: float = 10.0
    click_threshold: float = 0.05
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    preference: PreferenceDistribution = field(default_factory=PreferenceDistribution)
    vi: VIHyper = field(default_factory=VIHyper)
    unscented: UnscentedConfig = field(default_factory=UnscentedConfig)
    likelihood: DiscreteChannelModel = field(default_factory=DiscreteChannelModel)
    priors: AgentPriors = field(default_factory=AgentPriors)

    def __post_init__(self):
        if self.delay_steps < 0:
            raise ValueError("delay_steps must be >= 0")
        if not self.timeout_s > 0:
            raise ValueError("timeout_s must be > 0")

    @property
    def max_steps(self) -> int:
        return int(round(self.timeout_s / self.dt))


def initial_state_belief(priors: AgentPriors) -> GaussianBelief:
    return GaussianBelief.from_std(priors.state_mean, priors.state_std)


def initial_param_belief(params: SystemParams, priors: AgentPriors) -> GaussianBelief:
    """Well-trained prior: true damping/stiffness/threshold, vague target."""
    mean = np.array(
        [
            params.damping,
            params.stiffness,
            priors.theta_target_mean,
            priors.theta_width_mean,
            params.click_threshold,
        ]
    )
    return GaussianBelief.from_std(mean, priors.theta_std)


def noise_belief(noise: NoiseSpec, priors: AgentPriors) -> LogNormalBelief:
    med = np.array([max(noise.position_std, 1e-12), max(noise.displacement_std, 1e-12)])
    return LogNormalBelief(med, priors.noise_belief_var * np.eye(2))


def reveal_target(
    q_theta: GaussianBelief, target: float, width: float, revealed_std: float = REVEALED_STD
) -> GaussianBelief:
    """Install the true target into the parameter belief with low uncertainty.

    Damping/stiffness uncertainty is retained. Calling twice is an error:
    a revealed belief is detected by its already-collapsed target variance.
    """
    var = np.diag(q_theta.cov).copy()
    if var[2] <= (10 * revealed_std) ** 2 and var[3] <= (10 * revealed_std) ** 2:
        raise RuntimeError("target already revealed")
    mean = q_theta.mean.copy()
    mean[2] = target
    mean[3] = width
    var[2] = revealed_std**2
    var[3] = revealed_std**2
    return GaussianBelief(mean, np.diag(var))


def compensate_delay(
    q_s: GaussianBelief,
    actions,
    q_theta: GaussianBelief,
    dt: float,
    ucfg: UnscentedConfig = UnscentedConfig(),
) -> GaussianBelief:
    """Roll a temporary copy of the stored belief up to the present.

    ``actions`` holds the buffered actions oldest first; the stored belief is
    never modified.
    """
    cur = q_s
    for a in actions:
        cur = ukf_predict(cur, q_theta, a, dt, ucfg)
    return cur


@dataclass
class StepLog:
    step: int
    t: float
    state: np.ndarray
    action: np.ndarray
    observation: np.ndarray | None
    belief_mean: np.ndarray
    belief_var: np.ndarray
    predicted_mean: np.ndarray
    predicted_var: np.ndarray
    event: str = "none"


@dataclass
class ClickEvent:
    step: int
    position_px: float
    hit: bool


@dataclass
class TrialRecord:
    """Everything recorded about one trial; the unit of all analysis."""

    task: TaskSpec
    seed: int | tuple[int, ...]
    outcome: str = "timeout"
    hit_step: int | None = None
    duration_s: float = 0.0
    misclicks: int = 0
    clicks: list[ClickEvent] = field(default_factory=list)
    steps: list[StepLog] = field(default_factory=list)
    vi_divergences: int = 0
    target_id: int | None = None

    @property
    def hit(self) -> bool:
        return self.outcome == "hit"

    def positions_px(self) -> np.ndarray:
        return to_pixels(np.array([row.state[0] for row in self.steps]), self.task)

    def speeds_px(self) -> np.ndarray:
        return np.array([row.state[1] for row in self.steps]) * self.task.scale

    def endpoint_px(self) -> float | None:
        if self.hit_step is None or not self.steps:
            return None
        # a hit trial ends at the correct click, so the endpoint is the
        # cursor position of the final recorded step
        return float(to_pixels(self.steps[-1].state[0], self.task))


def run_trial(task: TaskSpec, cfg: AgentConfig, seed: int | tuple[int, ...]) -> TrialRecord:
    """Run one point-and-click trial to the first correct click or timeout.

    ``seed`` may be a plain integer or a tuple such as (master, trial index);
    either fully determines the trial.
    """
    seed = tuple(int(s) for s in seed) if isinstance(seed, (tuple, list)) else int(seed)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    target, width = scale_task(task)
    params = SystemParams(
        damping=cfg.damping,
        stiffness=cfg.stiffness,
        target=target,
        width=width,
        click_threshold=cfg.click_threshold,
    )
    pref = replace(cfg.preference, mean=np.array([target, 1.0, 0.0]))

    q_s = initial_state_belief(cfg.priors)
    q_theta = initial_param_belief(params, cfg.priors)
    q_p = noise_belief(cfg.noise, cfg.priors)
    tau = cfg.delay_steps
    buffer: deque = deque([np.zeros(2)] * tau, maxlen=tau) if tau > 0 else deque(maxlen=0)

    record = TrialRecord(task=task, seed=seed)
    state = np.zeros(4)
    history = [state]
    vi_active = cfg.noise.active

    for j in range(cfg.max_steps):
        if j == tau:
            q_theta = reveal_target(q_theta, target, width, cfg.priors.revealed_std)
        q_tilde = compensate_delay(q_s, list(buffer), q_theta, cfg.dt, cfg.unscented)
        action, _ = select_action(
            q_tilde,
            q_theta,
            q_p,
            pref,
            cfg.planner,
            cfg.dt,
            rng,
            cfg.unscented,
            cfg.vi,
            cfg.likelihood,
        )
        a_old = np.asarray(buffer[0]) if tau > 0 else action
        buffer.append(action)

        state = step(params, state, action, cfg.dt)
        history.append(state)

        obs = None
        if j >= tau:
            obs = sample_observation(params, history[j + 1 - tau], cfg.noise, rng)

        q_s = ukf_predict(q_s, q_theta, a_old, cfg.dt, cfg.unscented)
        if obs is not None and vi_active:
            q_s, vdiag = vi_update(q_s, obs, q_p, q_theta, cfg.vi, rng, cfg.likelihood)
            if vdiag.diverged:
                record.vi_divergences += 1

        true_obs = observe(params, state)
        event = "none"
        if true_obs[2] == 1.0:
            hit = bool(true_obs[3] == 1.0)
            event = "hit" if hit else "misclick"
            record.clicks.append(
                ClickEvent(step=j + 1, position_px=float(to_pixels(state[0], task)), hit=hit)
            )
            if not hit:
                record.misclicks += 1

        record.steps.append(
            StepLog(
                step=j,
                t=(j + 1) * cfg.dt,
                state=state.copy(),
                action=np.asarray(action, dtype=float).copy(),
                observation=None if obs is None else obs.copy(),
                belief_mean=q_s.mean.copy(),
                belief_var=np.diag(q_s.cov).copy(),
                predicted_mean=q_tilde.mean.copy(),
                predicted_var=np.diag(q_tilde.cov).copy(),
                event=event,
            )
        )

        if true_obs[3] == 1.0:
            record.outcome = "hit"
            record.hit_step = j + 1
            break

    record.duration_s = len(record.steps) * cfg.dt
    return record
