"""Expected-free-energy action selection.

Plans are uniform random action sequences; each is scored by rolling the
current (delay-compensated) state belief forward through the agent's model
and evaluating how much the predicted observations resemble the preferred
ones, optionally plus an information-gain bonus. The first action of the
best plan is executed.

All plans share the same standard-normal draws per horizon step (common
random numbers), which removes most Monte-Carlo noise from the *ranking*
even when the per-plan estimates themselves are noisy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .beliefs import (
    DiscreteChannelModel,
    GaussianBelief,
    LogNormalBelief,
    UnscentedConfig,
    VIHyper,
    chol_psd_batch,
    kl_gaussian,
    psd_sqrt,
    ukf_predict,
    ukf_predict_batch,
    vi_update,
)
from .dynamics import ACTION_HIGH, ACTION_LOW, PARAM_DIM, STATE_DIM


@dataclass(frozen=True)
class PreferenceDistribution:
    """Gaussian preference over (cursor position, hit flag, miss feedback).

    With ``track_target_belief`` the position channel is scored against the
    sampled believed target location rather than the fixed mean, so before
    the target is revealed the agent is drawn towards where it currently
    thinks the target is (the centre), not towards ground truth.
    """

    mean: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    std: np.ndarray = field(default_factory=lambda: np.array([0.01, 0.01, 0.001]))
    track_target_belief: bool = True

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        std = np.asarray(self.std, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)
        if mean.shape != (3,) or std.shape != (3,):
            raise ValueError("preference mean/std must be 3-vectors")
        if np.any(std <= 0):
            raise ValueError("preference stds must be > 0")

    def scaled(self, factor: float) -> "PreferenceDistribution":
        return PreferenceDistribution(
            self.mean.copy(), self.std * np.sqrt(factor), self.track_target_belief
        )


@dataclass(frozen=True)
class PlannerConfig:
    horizon: int = 12
    n_plans: int = 3000
    action_low: np.ndarray = field(default_factory=lambda: ACTION_LOW.copy())
    action_high: np.ndarray = field(default_factory=lambda: ACTION_HIGH.copy())
    pv_state_samples: int = 50
    pv_obs_samples: int = 3
    ig_state_samples: int = 8
    ig_obs_samples: int = 4
    info_gain: bool = False
    verbose: bool = False

    def __post_init__(self):
        object.__setattr__(self, "action_low", np.asarray(self.action_low, dtype=float))
        object.__setattr__(self, "action_high", np.asarray(self.action_high, dtype=float))
        if self.horizon < 1 or self.n_plans < 1:
            raise ValueError("horizon and n_plans must be >= 1")
        if min(self.pv_state_samples, self.pv_obs_samples) < 1:
            raise ValueError("sample counts must be >= 1")
        if not np.all(np.isfinite(self.action_low)) or not np.all(np.isfinite(self.action_high)):
            raise ValueError("action bounds must be finite")
        if not np.all(self.action_low < self.action_high):
            raise ValueError("action_low must be < action_high componentwise")


@dataclass
class PlanDiagnostics:
    best_index: int
    best_efe: float
    best_plan: np.ndarray
    rollout_means: np.ndarray
    rollout_vars: np.ndarray
    efe: np.ndarray | None = None
    pragmatic: np.ndarray | None = None
    info_gain: np.ndarray | None = None


def sample_plans(cfg: PlannerConfig, rng) -> np.ndarray:
    """K x N x 2 i.i.d. uniform actions within the control bounds."""
    return rng.uniform(
        cfg.action_low, cfg.action_high, size=(cfg.n_plans, cfg.horizon, len(cfg.action_low))
    )


def rollout(
    q_s: GaussianBelief,
    plan: np.ndarray,
    q_theta: GaussianBelief,
    dt: float,
    ucfg: UnscentedConfig = UnscentedConfig(),
) -> list[GaussianBelief]:
    """Belief trajectory under one plan; no observation updates inside."""
    out = []
    cur = q_s
    for action in np.asarray(plan, dtype=float):
        cur = ukf_predict(cur, q_theta, action, dt, ucfg)
        out.append(cur)
    return out


def _rollout_batch(q_s, plans, q_theta, dt, ucfg):
    """Rollout of all K plans at once: returns means (N,K,4), covs (N,K,4,4)."""
    k, n, _ = plans.shape
    means = np.broadcast_to(q_s.mean, (k, STATE_DIM)).copy()
    covs = np.broadcast_to(q_s.cov, (k, STATE_DIM, STATE_DIM)).copy()
    out_means = np.empty((n, k, STATE_DIM))
    out_covs = np.empty((n, k, STATE_DIM, STATE_DIM))
    for i in range(n):
        means, covs = ukf_predict_batch(means, covs, q_theta, plans[:, i, :], dt, ucfg)
        out_means[i] = means
        out_covs[i] = covs
    return out_means, out_covs


def _pragmatic_batch(means, covs, q_theta, q_p, pref, cfg, rng):
    """Pragmatic value for every (horizon step, plan): returns (N, K).

    Per horizon step one shared set of draws is used across plans: state
    noise, parameter samples, noise-magnitude samples and observation noise.
    The position channel is a full Gaussian log-density; the discrete
    hit/miss channels use the same unnormalized quadratic convention as the
    observation likelihood (zero at an exact match). Per-channel constants
    are shared by all plans and never affect the ranking.
    """
    n, k, _ = means.shape
    ns, no = cfg.pv_state_samples, cfg.pv_obs_samples
    eps_state = rng.standard_normal((n, ns, STATE_DIM))
    eps_theta = rng.standard_normal((n, ns, PARAM_DIM))
    sqrt_theta = psd_sqrt(q_theta.cov)
    thetas = q_theta.mean + eps_theta @ sqrt_theta.T  # (N, ns, 5)
    sigmas = q_p.sample(rng, n * ns).reshape(n, ns, -1)
    eps_obs = rng.standard_normal((n, ns, no))

    p1, p2, p3 = pref.std
    const1 = -0.5 * np.log(2 * np.pi * p1**2)
    values = np.empty((n, k))
    for i in range(n):
        chols = chol_psd_batch(covs[i])  # (K,4,4)
        states = means[i][:, None, :] + np.matmul(chols, eps_state[i].T).transpose(0, 2, 1)
        th = thetas[i]  # (ns, 5)
        click = (states[..., 2] < th[:, 4]) & (states[..., 3] > th[:, 4])
        on_target = np.abs(states[..., 0] - th[:, 2]) <= th[:, 3] / 2.0
        hit = (click & on_target).astype(float)
        miss = hit - click  # (K, ns)
        o1 = states[..., 0][..., None] + (sigmas[i][:, 0, None] * eps_obs[i])[None, :, :]
        anchor = th[:, 2, None] if pref.track_target_belief else pref.mean[0]
        sq1 = ((o1 - anchor) ** 2).mean(axis=2)  # (K, ns), averaged over obs draws
        score = (
            const1
            - sq1 / (2 * p1**2)
            - (hit - pref.mean[1]) ** 2 / (2 * p2**2)
            - (miss - pref.mean[2]) ** 2 / (2 * p3**2)
        )
        values[i] = score.mean(axis=1)
    return values


def pragmatic_value(
    q_s: GaussianBelief,
    q_theta: GaussianBelief,
    q_p: LogNormalBelief,
    pref: PreferenceDistribution,
    cfg: PlannerConfig,
    rng,
) -> float:
    """Monte-Carlo estimate of the expected log preference of predicted observations."""
    means = q_s.mean[None, None, :]
    covs = q_s.cov[None, None, :, :]
    return float(_pragmatic_batch(means, covs, q_theta, q_p, pref, cfg, rng)[0, 0])


def information_gain(
    q_s: GaussianBelief,
    q_theta: GaussianBelief,
    q_p: LogNormalBelief,
    cfg: PlannerConfig,
    rng,
    vi_hyper: VIHyper = VIHyper(),
    model: DiscreteChannelModel = DiscreteChannelModel(),
) -> float:
    """Expected KL from prior to posterior under hypothetical observations.

    Samples states and noise magnitudes, generates observations from the
    agent's model, applies the variational update to each, and averages
    KL(posterior || prior). Expensive; only used when the info-gain flag is
    enabled.
    """
    theta_vec = q_theta.mean
    ns, no = cfg.ig_state_samples, cfg.ig_obs_samples
    sqrt_s = psd_sqrt(q_s.cov)
    try:
        np.linalg.cholesky(q_s.cov)
    except np.linalg.LinAlgError:
        # singular prior: apply the standard diagonal repair once so the
        # KL against it stays defined
        q_s = GaussianBelief(q_s.mean, q_s.cov + 1e-9 * np.eye(STATE_DIM))
    states = q_s.mean + rng.standard_normal((ns, STATE_DIM)) @ sqrt_s.T
    sigmas = q_p.sample(rng, ns)
    alpha = theta_vec[4]
    total = 0.0
    for s_i, sig_i in zip(states, sigmas):
        click = float((s_i[2] < alpha) and (s_i[3] > alpha))
        on_target = abs(s_i[0] - theta_vec[2]) <= theta_vec[3] / 2.0
        hit = click * float(on_target)
        for _ in range(no):
            obs = np.array(
                [
                    s_i[0] + sig_i[0] * rng.standard_normal(),
                    s_i[3] + sig_i[1] * rng.standard_normal(),
                    click,
                    hit,
                    hit - click,
                ]
            )
            post, _ = vi_update(q_s, obs, q_p, q_theta, vi_hyper, rng, model)
            total += kl_gaussian(post, q_s)
    return total / (ns * no)


def select_action(
    q_s: GaussianBelief,
    q_theta: GaussianBelief,
    q_p: LogNormalBelief,
    pref: PreferenceDistribution,
    cfg: PlannerConfig,
    dt: float,
    rng,
    ucfg: UnscentedConfig = UnscentedConfig(),
    vi_hyper: VIHyper = VIHyper(),
    model: DiscreteChannelModel = DiscreteChannelModel(),
):
    """Sample plans, score them by expected free energy, return the best first action.

    EFE of a plan is the horizon mean of (-information gain - pragmatic
    value); with information gain disabled the ranking is by pragmatic value
    alone. Ties break towards the lowest plan index.
    """
    plans = sample_plans(cfg, rng)
    means, covs = _rollout_batch(q_s, plans, q_theta, dt, ucfg)
    pv = _pragmatic_batch(means, covs, q_theta, q_p, pref, cfg, rng)
    ig = np.zeros_like(pv)
    if cfg.info_gain:
        for i in range(cfg.horizon):
            for j in range(cfg.n_plans):
                ig[i, j] = information_gain(
                    GaussianBelief(means[i, j], covs[i, j]),
                    q_theta,
                    q_p,
                    cfg,
                    rng,
                    vi_hyper,
                    model,
                )
    efe = -(ig + pv).mean(axis=0)
    best = int(np.argmin(efe))
    action = plans[best, 0].copy()
    diag = PlanDiagnostics(
        best_index=best,
        best_efe=float(efe[best]),
        best_plan=plans[best].copy(),
        rollout_means=means[:, best].copy(),
        rollout_vars=np.array([np.diag(c) for c in covs[:, best]]),
    )
    if cfg.verbose:
        diag.efe = efe
        diag.pragmatic = pv
        diag.info_gain = ig if cfg.info_gain else None
    return action, diag
