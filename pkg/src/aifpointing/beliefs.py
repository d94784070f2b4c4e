"""Probabilistic machinery of the agent.

Gaussian beliefs over the system state and parameters, a log-normal belief
over observation-noise magnitudes, unscented-transform prediction through the
dynamics, and a variational observation update optimized with reparameterized
Monte-Carlo gradients.

Conventions worth knowing before reading the code:

* The variational objective is ``KL(prior || posterior) - E_post[log lik]``,
  i.e. the KL runs from prior to posterior. In the regime the agent operates
  in (prior narrow relative to the observation noise) its optimum is close to
  the conjugate Bayes posterior.
* The discrete observation channels (click/hit/miss) are scored with an
  unnormalized quadratic penalty of fixed scale around a sigmoid-smoothed
  prediction. The smoothing is what lets click information flow into the
  state belief through the gradient; the hard indicators have zero gradient
  almost everywhere.
* Covariances are optimized through their lower-triangular factor, so the
  PSD invariant holds by construction throughout the update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PARAM_DIM, STATE_DIM, NoiseSpec, SystemParams, step_vec

SYM_TOL = 1e-10
EIG_TOL = -1e-10


class NumericalDegeneracyError(RuntimeError):
    """A covariance lost positive semidefiniteness beyond repair tolerance."""


def _check_cov(cov: np.ndarray, what: str = "cov") -> None:
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"{what} must be square")
    if np.abs(cov - cov.T).max(initial=0.0) > SYM_TOL:
        raise ValueError(f"{what} is not symmetric within {SYM_TOL}")
    w = np.linalg.eigvalsh(cov)
    if w.min() < EIG_TOL:
        raise NumericalDegeneracyError(f"{what} has eigenvalue {w.min():.3e} < {EIG_TOL}")


@dataclass(frozen=True)
class GaussianBelief:
    """Mean vector plus symmetric PSD covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if cov.shape != (mean.size, mean.size):
            raise ValueError("cov shape does not match mean")
        _check_cov(cov)

    @property
    def dim(self) -> int:
        return self.mean.size

    def std(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))

    @classmethod
    def from_std(cls, mean, std) -> "GaussianBelief":
        std = np.asarray(std, dtype=float)
        return cls(np.asarray(mean, dtype=float), np.diag(std**2))


@dataclass(frozen=True)
class LogNormalBelief:
    """Strictly positive belief: samples are ``median * exp(N(0, cov))``.

    The location is kept in real space (it is the distribution's median); a
    near-zero covariance therefore yields samples essentially equal to the
    configured noise magnitudes.
    """

    median: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        median = np.atleast_1d(np.asarray(self.median, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        object.__setattr__(self, "median", median)
        object.__setattr__(self, "cov", cov)
        if np.any(median <= 0):
            raise ValueError("median must be strictly positive")
        if cov.shape != (median.size, median.size):
            raise ValueError("cov shape does not match median")
        _check_cov(cov)

    def sample(self, rng, n: int) -> np.ndarray:
        s = psd_sqrt(self.cov)
        eps = rng.standard_normal((n, self.median.size))
        return self.median * np.exp(eps @ s.T)


@dataclass(frozen=True)
class UnscentedConfig:
    """Scaled unscented-transform spread parameters."""

    alpha: float = 0.1
    beta: float = 2.0
    kappa: float = 0.0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")


@dataclass(frozen=True)
class VIHyper:
    """Optimizer settings for the variational observation update."""

    steps: int = 30
    samples: int = 300
    learning_rate: float = 3.0e-4

    def __post_init__(self):
        if self.steps < 1 or self.samples < 1 or not self.learning_rate > 0:
            raise ValueError("VI hyperparameters must be positive")


@dataclass(frozen=True)
class DiscreteChannelModel:
    """Likelihood model for the discrete observation channels.

    ``std`` scales the quadratic penalty; the widths control the sigmoid
    smoothing of the click-threshold and target-boundary indicators.
    """

    std: float = 0.05
    button_width: float = 0.005
    target_width_frac: float = 0.05
    min_target_width: float = 1e-4


def psd_sqrt(cov: np.ndarray) -> np.ndarray:
    """Matrix S with S @ S.T == cov, for symmetric PSD cov.

    Cholesky where possible; otherwise an eigendecomposition with eigenvalues
    clipped at zero, which handles exactly singular covariances (zero blocks
    give zero sigma-point spread). Eigenvalues below the tolerance raise.
    """
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(0.5 * (cov + cov.T))
        if w.min() < EIG_TOL:
            raise NumericalDegeneracyError(
                f"covariance eigenvalue {w.min():.3e} below tolerance"
            ) from None
        return v * np.sqrt(np.clip(w, 0.0, None))


def chol_psd_batch(covs: np.ndarray) -> np.ndarray:
    """Batched covariance square roots with a slow eigh fallback."""
    try:
        return np.linalg.cholesky(covs)
    except np.linalg.LinAlgError:
        out = np.empty_like(covs)
        for idx in np.ndindex(covs.shape[:-2]):
            out[idx] = psd_sqrt(covs[idx])
        return out


def unscented_weights(n: int, cfg: UnscentedConfig) -> tuple[float, np.ndarray, np.ndarray]:
    lam = cfg.alpha**2 * (n + cfg.kappa) - n
    c = n + lam
    if c <= 0:
        raise ValueError("kappa must satisfy alpha^2 (n + kappa) > 0")
    wm = np.full(2 * n + 1, 1.0 / (2.0 * c))
    wc = wm.copy()
    wm[0] = lam / c
    wc[0] = lam / c + (1.0 - cfg.alpha**2 + cfg.beta)
    return c, wm, wc


def sigma_points(belief: GaussianBelief, cfg: UnscentedConfig = UnscentedConfig()):
    """2n+1 sigma points plus mean and covariance weights.

    The weighted empirical mean and covariance of the returned points
    reproduce the belief exactly (the central point carries the residual
    mean weight; its covariance deviation is zero).
    """
    n = belief.dim
    c, wm, wc = unscented_weights(n, cfg)
    s = psd_sqrt(belief.cov)
    offsets = math.sqrt(c) * s.T  # row i is the i-th column of the sqrt
    pts = np.concatenate(
        [belief.mean[None, :], belief.mean[None, :] + offsets, belief.mean[None, :] - offsets]
    )
    return pts, wm, wc


def ukf_predict(
    q_s: GaussianBelief,
    q_theta: GaussianBelief,
    action,
    dt: float,
    cfg: UnscentedConfig = UnscentedConfig(),
) -> GaussianBelief:
    """Propagate the state belief through the dynamics under an action.

    Sigma points are drawn in the joint (state, parameter) space, pushed
    through the transition with the action folded in, and the next-state
    marginal is refit by weighted moments. The parameter belief itself is
    left untouched by the caller's contract.
    """
    if q_s.dim != STATE_DIM or q_theta.dim != PARAM_DIM:
        raise ValueError("expected a 4D state belief and 5D parameter belief")
    n = STATE_DIM + PARAM_DIM
    joint_mean = np.concatenate([q_s.mean, q_theta.mean])
    joint_cov = np.zeros((n, n))
    joint_cov[:STATE_DIM, :STATE_DIM] = q_s.cov
    joint_cov[STATE_DIM:, STATE_DIM:] = q_theta.cov
    pts, wm, wc = sigma_points(GaussianBelief(joint_mean, joint_cov), cfg)
    nxt = step_vec(pts[:, STATE_DIM:], pts[:, :STATE_DIM], np.asarray(action, dtype=float), dt)
    mean = wm @ nxt
    dev = nxt - mean
    cov = np.einsum("p,pi,pj->ij", wc, dev, dev)
    cov = 0.5 * (cov + cov.T)
    return GaussianBelief(mean, cov)


def ukf_predict_batch(means, covs, q_theta: GaussianBelief, actions, dt, cfg: UnscentedConfig):
    """Vectorized ukf_predict over K independent state beliefs.

    means (K,4), covs (K,4,4), actions (K,2); the parameter belief is shared.
    Returns (means', covs'). Results are identical to mapping ukf_predict.
    """
    k = means.shape[0]
    n = STATE_DIM + PARAM_DIM
    c, wm, wc = unscented_weights(n, cfg)
    s_state = chol_psd_batch(covs)
    s_theta = psd_sqrt(q_theta.cov)
    sqrt_joint = np.zeros((k, n, n))
    sqrt_joint[:, :STATE_DIM, :STATE_DIM] = s_state
    sqrt_joint[:, STATE_DIM:, STATE_DIM:] = s_theta
    joint_mean = np.concatenate([means, np.broadcast_to(q_theta.mean, (k, PARAM_DIM))], axis=1)
    offsets = math.sqrt(c) * sqrt_joint.transpose(0, 2, 1)  # (K, point, dim)
    pts = np.concatenate(
        [joint_mean[:, None, :], joint_mean[:, None, :] + offsets, joint_mean[:, None, :] - offsets],
        axis=1,
    )
    nxt = step_vec(pts[..., STATE_DIM:], pts[..., :STATE_DIM], actions[:, None, :], dt)
    mean = np.matmul(wm, nxt)
    dev = nxt - mean[:, None, :]
    cov = np.matmul(dev.transpose(0, 2, 1) * wc, dev)
    cov = 0.5 * (cov + cov.transpose(0, 2, 1))
    return mean, cov


def kl_gaussian(qa: GaussianBelief, qb: GaussianBelief) -> float:
    """Closed-form KL(qa || qb); qb must be nonsingular."""
    if qa.dim != qb.dim:
        raise ValueError("dimension mismatch")
    sign_b, logdet_b = np.linalg.slogdet(qb.cov)
    if sign_b <= 0:
        raise NumericalDegeneracyError("kl_gaussian requires nonsingular qb covariance")
    sign_a, logdet_a = np.linalg.slogdet(qa.cov)
    if sign_a <= 0:
        return float("inf")
    binv = np.linalg.inv(qb.cov)
    delta = qb.mean - qa.mean
    kl = 0.5 * (
        np.trace(binv @ qa.cov) + delta @ binv @ delta - qa.dim + logdet_b - logdet_a
    )
    return max(float(kl), 0.0)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def smooth_click_channels(states, theta_vec, model: DiscreteChannelModel):
    """Smoothed click/hit predictors and their state gradients.

    states (..., 4). Returns (click, hit, d_click/d_state, d_hit/d_state),
    with the sigmoids sharp enough that the predictors agree with the hard
    indicators away from the threshold/boundary.
    """
    states = np.asarray(states, dtype=float)
    alpha = theta_vec[4]
    target = theta_vec[2]
    half = theta_vec[3] / 2.0
    wb = model.button_width
    wt = max(abs(theta_vec[3]) * model.target_width_frac, model.min_target_width)

    sa = _sigmoid((alpha - states[..., 2]) / wb)
    sb = _sigmoid((states[..., 3] - alpha) / wb)
    click = sa * sb
    sl = _sigmoid((states[..., 0] - (target - half)) / wt)
    sr = _sigmoid(((target + half) - states[..., 0]) / wt)
    on_target = sl * sr
    hit = click * on_target

    dclick = np.zeros_like(states)
    dclick[..., 2] = -sa * (1 - sa) / wb * sb
    dclick[..., 3] = sa * sb * (1 - sb) / wb
    don_target = sl * (1 - sl) / wt * sr - sl * sr * (1 - sr) / wt
    dhit = dclick * on_target[..., None]
    dhit[..., 0] = click * don_target
    return click, hit, dclick, dhit


def loglik_and_grad(
    obs,
    states,
    sigma,
    theta_vec,
    model: DiscreteChannelModel = DiscreteChannelModel(),
):
    """Observation log-likelihood and its gradient w.r.t. the state.

    Continuous channels contribute full Gaussian log-densities with stds
    ``sigma`` (broadcast per sample); discrete channels contribute the
    quadratic penalty described in the module docstring, which is zero at an
    exact match. states (n, 4), sigma (n, 2) or (2,).
    """
    states = np.asarray(states, dtype=float)
    obs = np.asarray(obs, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), states.shape[:-1] + (2,))
    s1, s2 = sigma[..., 0], sigma[..., 1]
    click, hit, dclick, dhit = smooth_click_channels(states, theta_vec, model)
    miss = hit - click
    dmiss = dhit - dclick

    r1 = obs[0] - states[..., 0]
    r2 = obs[1] - states[..., 3]
    ll = (
        -0.5 * np.log(2 * np.pi * s1**2)
        - r1**2 / (2 * s1**2)
        - 0.5 * np.log(2 * np.pi * s2**2)
        - r2**2 / (2 * s2**2)
    )
    w = 1.0 / (2 * model.std**2)
    ll = ll - w * ((obs[2] - click) ** 2 + (obs[3] - hit) ** 2 + (obs[4] - miss) ** 2)

    grad = np.zeros_like(states)
    grad[..., 0] = r1 / s1**2
    grad[..., 3] = r2 / s2**2
    grad += 2 * w * (
        (obs[2] - click)[..., None] * dclick
        + (obs[3] - hit)[..., None] * dhit
        + (obs[4] - miss)[..., None] * dmiss
    )
    return ll, grad


def log_likelihood(
    obs,
    state,
    noise: NoiseSpec,
    params: SystemParams,
    model: DiscreteChannelModel = DiscreteChannelModel(),
) -> float:
    """Log-likelihood of one observation at one state."""
    if not (noise.position_std > 0 and noise.displacement_std > 0):
        raise ValueError("log_likelihood requires strictly positive noise stds")
    sigma = np.array([noise.position_std, noise.displacement_std])
    ll, _ = loglik_and_grad(obs, np.asarray(state, dtype=float)[None, :], sigma, params.as_vector(), model)
    return float(ll[0])


@dataclass
class VIDiagnostics:
    """Trace of the free-energy minimization for one observation update.

    An "increase" of the trace only counts when it exceeds 1% of the
    progress made so far, so post-convergence micro-oscillation of the
    optimizer is not mistaken for divergence.
    """

    free_energy: np.ndarray = field(default_factory=lambda: np.zeros(0))
    diverged: bool = False
    reverted: bool = False

    def _increase_tol(self) -> float:
        f = self.free_energy
        return 1e-2 * max(float(f[0] - f.min()), 0.0) + 1e-12

    def n_increases(self) -> int:
        f = self.free_energy
        if f.size < 2:
            return 0
        return int(np.sum(np.diff(f) > self._increase_tol()))

    @property
    def fraction_decreasing(self) -> float:
        f = self.free_energy
        if f.size < 2:
            return 1.0
        return 1.0 - self.n_increases() / (f.size - 1)


def minimize_free_energy(prior: GaussianBelief, loglik_fn, hyper: VIHyper, rng):
    """Generic variational update: argmin KL(prior || q) - E_q[loglik].

    ``loglik_fn(states)`` returns (loglik (n,), grad (n, d)). The posterior
    covariance is optimized through its lower-triangular factor and the
    expectation through reparameterized samples; parameters follow Adam with
    the configured learning rate. The free-energy trace is evaluated on one
    fixed sample batch so successive entries are comparable; a divergent
    trace discards the update and returns the prior.
    """
    d = prior.dim
    mu0 = prior.mean
    cov0 = prior.cov
    sign0, logdet0 = np.linalg.slogdet(cov0)
    if sign0 <= 0:
        # A singular prior admits no density; jitter once, per repair policy.
        cov0 = cov0 + 1e-9 * np.eye(d)
        sign0, logdet0 = np.linalg.slogdet(cov0)

    mu = mu0.copy()
    try:
        low = np.linalg.cholesky(cov0)
    except np.linalg.LinAlgError:
        low = np.linalg.cholesky(cov0 + 1e-9 * np.eye(d))
    tril = np.tril(np.ones((d, d), dtype=bool))

    eval_eps = rng.standard_normal((hyper.samples, d))

    def free_energy(mu_c, low_c):
        cov_c = low_c @ low_c.T
        sign_c, logdet_c = np.linalg.slogdet(cov_c)
        if sign_c <= 0:
            return np.inf
        inv_c = np.linalg.inv(cov_c)
        delta = mu_c - mu0
        kl = 0.5 * (np.trace(inv_c @ cov0) + delta @ inv_c @ delta - d + logdet_c - logdet0)
        states = mu_c + eval_eps @ low_c.T
        ll, _ = loglik_fn(states)
        return float(kl - ll.mean())

    # Adam state
    m_mu = np.zeros(d)
    v_mu = np.zeros(d)
    m_low = np.zeros((d, d))
    v_low = np.zeros((d, d))
    b1, b2, eps_adam = 0.9, 0.999, 1e-8
    lr = hyper.learning_rate

    trace = np.empty(hyper.steps + 1)
    ok = True
    for k in range(hyper.steps):
        trace[k] = free_energy(mu, low)
        eps = rng.standard_normal((hyper.samples, d))
        states = mu + eps @ low.T
        _, g = loglik_fn(states)
        if not np.isfinite(g).all():
            ok = False
            break
        grad_mu_lik = g.mean(axis=0)
        grad_low_lik = (g.T @ eps) / hyper.samples

        cov = low @ low.T
        inv = np.linalg.inv(cov)
        delta = mu - mu0
        grad_mu = inv @ delta - grad_mu_lik
        dkl_dcov = 0.5 * (inv - inv @ cov0 @ inv - inv @ np.outer(delta, delta) @ inv)
        grad_low = 2.0 * dkl_dcov @ low - grad_low_lik
        grad_low = np.where(tril, grad_low, 0.0)

        t = k + 1
        m_mu = b1 * m_mu + (1 - b1) * grad_mu
        v_mu = b2 * v_mu + (1 - b2) * grad_mu**2
        mu = mu - lr * (m_mu / (1 - b1**t)) / (np.sqrt(v_mu / (1 - b2**t)) + eps_adam)
        m_low = b1 * m_low + (1 - b1) * grad_low
        v_low = b2 * v_low + (1 - b2) * grad_low**2
        low = low - lr * (m_low / (1 - b1**t)) / (np.sqrt(v_low / (1 - b2**t)) + eps_adam)

    if ok:
        trace[hyper.steps] = free_energy(mu, low)
        diag = VIDiagnostics(free_energy=trace)
        # Divergent when the optimizer ends having given back more than half
        # of its best progress (plus an absolute margin for flat traces), or
        # leaves the finite range. Counting raw increasing steps would flag
        # converged runs whose tail just oscillates around the optimum.
        gave_back = (trace[-1] - trace.min()) > 0.5 * (trace[0] - trace.min()) + 1e-2
        if gave_back or not np.isfinite(trace[-1]):
            diag.diverged = True
    else:
        diag = VIDiagnostics(free_energy=trace[: k + 1], diverged=True)

    if diag.diverged:
        diag.reverted = True
        return prior, diag
    cov_post = low @ low.T
    return GaussianBelief(mu, 0.5 * (cov_post + cov_post.T)), diag


def vi_update(
    prior: GaussianBelief,
    obs,
    q_p: LogNormalBelief,
    q_theta: GaussianBelief,
    hyper: VIHyper,
    rng,
    model: DiscreteChannelModel = DiscreteChannelModel(),
):
    """Variational observation update of the state belief.

    Noise magnitudes are drawn once from the noise belief and held fixed
    across optimizer steps (its covariance is near-zero in the evaluated
    configuration); the generative map uses the parameter belief mean. Only
    the state belief is optimized.
    """
    sigma = q_p.sample(rng, hyper.samples)
    theta_vec = q_theta.mean

    def loglik_fn(states):
        return loglik_and_grad(obs, states, sigma, theta_vec, model)

    return minimize_free_energy(prior, loglik_fn, hyper, rng)
