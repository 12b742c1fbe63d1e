"""Hierarchical Bayesian correlated t-test across datasets.

Model, for datasets i = 1..q with cross-validation differences x_i:

    x_i    ~ MVN(1 * mu_i, Sigma_i)      compound symmetry: sigma_i^2, rho
    mu_i   ~ Student(nu, mu0, sigma0)
    sigma_i ~ unif(0, sigma_bar),        sigma_bar = 1000 * mean(sd_i)
    mu0    ~ unif(-1, 1)
    sigma0 ~ unif(0, sigma0_bar),        sigma0_bar = 1000 * std(mean_i)
    nu     ~ Gamma(alpha, beta)
    alpha  ~ unif(0.5, 5),  beta ~ unif(0.05, 0.15)

Fitted by adaptive Metropolis-within-Gibbs: the per-dataset (mu_i, sigma_i)
blocks are conditionally independent given the hyperparameters and are
updated with vectorized univariate proposals; scale parameters move in log
space and bounded parameters in logit space.  Proposal scales adapt toward
0.44 acceptance during warmup only, so the kept draws come from a valid
fixed-kernel chain.  Runs are deterministic given the seed.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .data import DiffSeries, Rope
from .dp import TrinomialSamples
from .errors import InitializationError
from .kernels import RngStream, cs_loglik, gamma_logpdf, student_logpdf

__all__ = [
    "HierConfig",
    "HierState",
    "Diagnostic",
    "HierDraws",
    "ShrinkageRow",
    "ShrinkageReport",
    "log_posterior",
    "fit",
    "next_dataset_probs",
    "shrinkage_report",
]

_EPS = 1e-6
_ADAPT_WINDOW = 25
_TARGET_ACCEPT = 0.44
# the hyperparameter scan is O(q) and cheap next to the per-dataset block,
# so it runs several times per sweep to decorrelate (mu0, sigma0, nu)
_HYPER_SCANS = 5
# scale supports are truncated at a tiny floor: a zero-variance dataset makes
# the density of sigma_i unbounded at 0, and without the floor the chain
# drifts into exp underflow
_SIGMA_FLOOR = 1e-10
RHAT_THRESHOLD = 1.05


@dataclass(frozen=True)
class HierConfig:
    """Sampler and prior configuration.

    ``rho`` defaults to the correlation carried by the difference series;
    ``sigma_bar`` / ``sigma0_bar`` default to 1000 times the mean
    per-dataset standard deviation and 1000 times the standard deviation
    of the per-dataset means.
    """

    seed: int
    rho: float | None = None
    sigma_bar: float | None = None
    sigma0_bar: float | None = None
    alpha_lo: float = 0.5
    alpha_hi: float = 5.0
    beta_lo: float = 0.05
    beta_hi: float = 0.15
    chains: int = 4
    warmup: int = 1000
    draws: int = 1000

    def __post_init__(self) -> None:
        if self.chains < 2:
            raise ValueError("need at least two chains for convergence diagnostics")
        if self.warmup < _ADAPT_WINDOW:
            raise ValueError(f"warmup must be at least {_ADAPT_WINDOW}")
        if self.draws < 4:
            raise ValueError("need at least four kept draws")
        if not (0 < self.alpha_lo < self.alpha_hi and 0 < self.beta_lo < self.beta_hi):
            raise ValueError("hyper-prior bounds must be positive and ordered")


@dataclass(frozen=True)
class HierState:
    """One point of the hierarchical parameter space."""

    mu0: float
    sigma0: float
    nu: float
    alpha: float
    beta: float
    mu: np.ndarray
    sigma: np.ndarray


@dataclass(frozen=True)
class Diagnostic:
    rhat: float
    ess: float


@dataclass(frozen=True)
class HierDraws:
    """Posterior draws organised by chain, plus convergence diagnostics."""

    mu0: np.ndarray      # (chains, draws)
    sigma0: np.ndarray
    nu: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    mu: np.ndarray       # (chains, draws, q)
    sigma: np.ndarray
    datasets: tuple[str, ...]
    seed: int
    diagnostics: dict[str, Diagnostic] = field(default_factory=dict)

    @property
    def n_chains(self) -> int:
        return int(self.mu0.shape[0])

    @property
    def n_draws(self) -> int:
        return int(self.mu0.shape[1])

    @property
    def q(self) -> int:
        return int(self.mu.shape[2])

    @property
    def converged(self) -> bool:
        return all(d.rhat <= RHAT_THRESHOLD for d in self.diagnostics.values())

    def pooled(self, name: str) -> np.ndarray:
        """Draws of a scalar parameter pooled across chains, chain-major."""
        return getattr(self, name).reshape(-1)

    def to_csv(self) -> str:
        """One row per draw: chain, iteration, mu0, sigma0, nu, alpha, beta, mu_i..., sigma_i...."""
        header = ["chain", "iteration", "mu0", "sigma0", "nu", "alpha", "beta"]
        header += [f"mu_{i + 1}" for i in range(self.q)]
        header += [f"sigma_{i + 1}" for i in range(self.q)]
        lines = [",".join(header)]
        for c in range(self.n_chains):
            for it in range(self.n_draws):
                row = [str(c), str(it)]
                row += [repr(float(v)) for v in (
                    self.mu0[c, it], self.sigma0[c, it], self.nu[c, it],
                    self.alpha[c, it], self.beta[c, it],
                )]
                row += [repr(float(v)) for v in self.mu[c, it]]
                row += [repr(float(v)) for v in self.sigma[c, it]]
                lines.append(",".join(row))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ShrinkageRow:
    dataset: str
    sample_mean: float
    posterior_mean: float
    posterior_sd: float


@dataclass(frozen=True)
class ShrinkageReport:
    """Per-dataset pooling summary (reported, not asserted)."""

    rows: tuple[ShrinkageRow, ...]
    pooled_abs_dev: float    # sum_i |E[mu_i] - median(sample means)|
    sample_abs_dev: float    # sum_i |sample mean_i - median(sample means)|


class _Problem:
    """Sufficient statistics and prior bounds shared by the sampler."""

    def __init__(self, data: list[DiffSeries], cfg: HierConfig):
        if not data:
            raise ValueError("need at least one difference series")
        ns = {d.n for d in data}
        if len(ns) != 1:
            raise ValueError(f"all series must share n, got {sorted(ns)}")
        if cfg.rho is None:
            rhos = {d.rho for d in data}
            if len(rhos) != 1:
                raise ValueError(f"all series must share rho, got {sorted(rhos)}")
            rho = rhos.pop()
        else:
            rho = cfg.rho
        if not 0.0 <= rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {rho}")
        self.datasets = tuple(d.dataset for d in data)
        self.means = np.array([d.mean for d in data])
        self.ss = np.array([d.ss for d in data])
        self.n = data[0].n
        self.rho = rho
        self.q = len(data)
        sds = np.array([d.sd for d in data])
        # floors keep the uniform supports non-degenerate for constant data
        self.sigma_bar = cfg.sigma_bar if cfg.sigma_bar is not None else max(
            1000.0 * float(sds.mean()), 1e-3
        )
        s_mean = float(np.std(self.means, ddof=1)) if self.q > 1 else 0.0
        self.sigma0_bar = cfg.sigma0_bar if cfg.sigma0_bar is not None else max(
            1000.0 * s_mean, 1e-3
        )
        self.alpha_lo, self.alpha_hi = cfg.alpha_lo, cfg.alpha_hi
        self.beta_lo, self.beta_hi = cfg.beta_lo, cfg.beta_hi
        self.sds = sds
        self.s_mean = s_mean

    def loglik(self, mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        return cs_loglik(self.means, self.ss, self.n, mu, sigma * sigma, self.rho)

    def level2(self, mu: np.ndarray, mu0: float, sigma0: float, nu: float) -> np.ndarray:
        return student_logpdf(mu, nu, mu0, sigma0)

    def uniform_const(self) -> float:
        return (
            -math.log(2.0)
            - math.log(self.sigma0_bar)
            - math.log(self.alpha_hi - self.alpha_lo)
            - math.log(self.beta_hi - self.beta_lo)
            - self.q * math.log(self.sigma_bar)
        )

    def in_support(self, s: HierState) -> bool:
        return (
            -1.0 < s.mu0 < 1.0
            and _SIGMA_FLOOR < s.sigma0 < self.sigma0_bar
            and s.nu > 0.0
            and self.alpha_lo < s.alpha < self.alpha_hi
            and self.beta_lo < s.beta < self.beta_hi
            and bool(np.all((s.sigma > _SIGMA_FLOOR) & (s.sigma < self.sigma_bar)))
        )

    def log_posterior(self, s: HierState) -> float:
        if not self.in_support(s):
            return -math.inf
        total = (
            float(np.sum(self.loglik(s.mu, s.sigma)))
            + float(np.sum(self.level2(s.mu, s.mu0, s.sigma0, s.nu)))
            + float(gamma_logpdf(s.nu, s.alpha, s.beta))
            + self.uniform_const()
        )
        return total

    def initial_state(self) -> HierState:
        mu0 = float(np.clip(np.median(self.means), -1.0 + _EPS, 1.0 - _EPS))
        sigma0 = min(max(self.s_mean, _EPS), 0.5 * self.sigma0_bar)
        sigma = np.minimum(np.maximum(self.sds, _EPS), 0.5 * self.sigma_bar)
        return HierState(
            mu0=mu0, sigma0=sigma0, nu=5.0, alpha=1.0, beta=0.1,
            mu=self.means.copy(), sigma=sigma,
        )


def log_posterior(state: HierState, data: list[DiffSeries], cfg: HierConfig) -> float:
    """Joint log density of the hierarchical model at ``state``.

    Includes the uniform prior normalization constants; -inf outside the
    prior support.
    """
    return _Problem(data, cfg).log_posterior(state)


def _logit_logjac(eta: float, width: float) -> float:
    # d/d eta of (lo + width * expit(eta)), in log space
    a = abs(eta)
    return math.log(width) - a - 2.0 * math.log1p(math.exp(-a))


def _run_chain(problem: _Problem, cfg: HierConfig, stream: RngStream) -> dict[str, np.ndarray]:
    gen = stream.generator()
    q = problem.q
    init = problem.initial_state()
    mu = init.mu.copy()
    sigma = init.sigma.copy()
    mu0, sigma0, nu, alpha, beta = init.mu0, init.sigma0, init.nu, init.alpha, init.beta

    lik = problem.loglik(mu, sigma)
    lev = problem.level2(mu, mu0, sigma0, nu)
    if not np.all(np.isfinite(lik)) or not np.all(np.isfinite(lev)):
        raise InitializationError("initial state has non-finite log-posterior")

    se = np.sqrt(1.0 / problem.n + problem.rho / (1.0 - problem.rho))
    ls_mu = np.log(np.maximum(problem.sds, _EPS) * se * 2.4)
    ls_sigma = np.full(q, math.log(0.3))
    ls_mu0 = math.log(max(4.8 * problem.s_mean / math.sqrt(q), 1e-4))
    ls_sigma0 = math.log(0.5)
    ls_nu = math.log(0.7)
    ls_alpha = 0.0
    ls_beta = 0.0

    acc_mu = np.zeros(q)
    acc_sigma = np.zeros(q)
    acc_scalar = np.zeros(5)

    total = cfg.warmup + cfg.draws
    out = {
        "mu0": np.empty(cfg.draws), "sigma0": np.empty(cfg.draws),
        "nu": np.empty(cfg.draws), "alpha": np.empty(cfg.draws),
        "beta": np.empty(cfg.draws),
        "mu": np.empty((cfg.draws, q)), "sigma": np.empty((cfg.draws, q)),
    }

    for it in range(total):
        # per-dataset means (conditionally independent given the hypers)
        prop = mu + gen.standard_normal(q) * np.exp(ls_mu)
        lik_prop = problem.loglik(prop, sigma)
        lev_prop = problem.level2(prop, mu0, sigma0, nu)
        delta = (lik_prop - lik) + (lev_prop - lev)
        take = np.log(gen.random(q)) < delta
        mu[take] = prop[take]
        lik[take] = lik_prop[take]
        lev[take] = lev_prop[take]
        acc_mu += take

        # per-dataset scales, log space
        eta = np.log(sigma)
        prop_eta = eta + gen.standard_normal(q) * np.exp(ls_sigma)
        prop = np.exp(prop_eta)
        valid = (prop > _SIGMA_FLOOR) & (prop < problem.sigma_bar)
        lik_prop = problem.loglik(mu, np.where(valid, prop, sigma))
        delta = (lik_prop - lik) + (prop_eta - eta)
        delta[~valid] = -np.inf
        take = np.log(gen.random(q)) < delta
        sigma[take] = prop[take]
        lik[take] = lik_prop[take]
        acc_sigma += take

        for _ in range(_HYPER_SCANS):
            # mu0, logit space over (-1, 1)
            eta0 = math.log((1.0 + mu0) / (1.0 - mu0))
            prop_eta0 = eta0 + gen.standard_normal() * math.exp(ls_mu0)
            prop_mu0 = 2.0 * special.expit(prop_eta0) - 1.0
            lev_prop = problem.level2(mu, prop_mu0, sigma0, nu)
            delta = float(np.sum(lev_prop) - np.sum(lev))
            delta += _logit_logjac(prop_eta0, 2.0) - _logit_logjac(eta0, 2.0)
            if math.log(gen.random()) < delta:
                mu0 = prop_mu0
                lev = lev_prop
                acc_scalar[0] += 1.0

            # sigma0, log space
            eta0 = math.log(sigma0)
            prop_eta0 = eta0 + gen.standard_normal() * math.exp(ls_sigma0)
            prop_sigma0 = math.exp(prop_eta0)
            if _SIGMA_FLOOR < prop_sigma0 < problem.sigma0_bar:
                lev_prop = problem.level2(mu, mu0, prop_sigma0, nu)
                delta = float(np.sum(lev_prop) - np.sum(lev)) + (prop_eta0 - eta0)
                if math.log(gen.random()) < delta:
                    sigma0 = prop_sigma0
                    lev = lev_prop
                    acc_scalar[1] += 1.0

            # nu, log space
            eta0 = math.log(nu)
            prop_eta0 = eta0 + gen.standard_normal() * math.exp(ls_nu)
            prop_nu = math.exp(prop_eta0)
            lev_prop = problem.level2(mu, mu0, sigma0, prop_nu)
            delta = float(np.sum(lev_prop) - np.sum(lev))
            delta += float(gamma_logpdf(prop_nu, alpha, beta)) - float(gamma_logpdf(nu, alpha, beta))
            delta += prop_eta0 - eta0
            if math.log(gen.random()) < delta:
                nu = prop_nu
                lev = lev_prop
                acc_scalar[2] += 1.0

            # alpha and beta, logit space over their uniform supports
            w_a = problem.alpha_hi - problem.alpha_lo
            frac = (alpha - problem.alpha_lo) / w_a
            eta0 = math.log(frac / (1.0 - frac))
            prop_eta0 = eta0 + gen.standard_normal() * math.exp(ls_alpha)
            prop_alpha = problem.alpha_lo + w_a * special.expit(prop_eta0)
            delta = float(gamma_logpdf(nu, prop_alpha, beta)) - float(gamma_logpdf(nu, alpha, beta))
            delta += _logit_logjac(prop_eta0, w_a) - _logit_logjac(eta0, w_a)
            if math.log(gen.random()) < delta:
                alpha = prop_alpha
                acc_scalar[3] += 1.0

            w_b = problem.beta_hi - problem.beta_lo
            frac = (beta - problem.beta_lo) / w_b
            eta0 = math.log(frac / (1.0 - frac))
            prop_eta0 = eta0 + gen.standard_normal() * math.exp(ls_beta)
            prop_beta = problem.beta_lo + w_b * special.expit(prop_eta0)
            delta = float(gamma_logpdf(nu, alpha, prop_beta)) - float(gamma_logpdf(nu, alpha, beta))
            delta += _logit_logjac(prop_eta0, w_b) - _logit_logjac(eta0, w_b)
            if math.log(gen.random()) < delta:
                beta = prop_beta
                acc_scalar[4] += 1.0

        in_warmup = it < cfg.warmup
        if in_warmup and (it + 1) % _ADAPT_WINDOW == 0:
            batch = (it + 1) // _ADAPT_WINDOW
            step = min(0.5, 1.5 / math.sqrt(batch))
            ls_mu += np.where(acc_mu / _ADAPT_WINDOW > _TARGET_ACCEPT, step, -step)
            ls_sigma += np.where(acc_sigma / _ADAPT_WINDOW > _TARGET_ACCEPT, step, -step)
            rates = acc_scalar / (_ADAPT_WINDOW * _HYPER_SCANS)
            deltas = np.where(rates > _TARGET_ACCEPT, step, -step)
            ls_mu0 += deltas[0]
            ls_sigma0 += deltas[1]
            ls_nu += deltas[2]
            ls_alpha += deltas[3]
            ls_beta += deltas[4]
            acc_mu[:] = 0.0
            acc_sigma[:] = 0.0
            acc_scalar[:] = 0.0

        if not in_warmup:
            k = it - cfg.warmup
            out["mu0"][k] = mu0
            out["sigma0"][k] = sigma0
            out["nu"][k] = nu
            out["alpha"][k] = alpha
            out["beta"][k] = beta
            out["mu"][k] = mu
            out["sigma"][k] = sigma

    return out


def _split_halves(x: np.ndarray) -> np.ndarray:
    half = x.shape[1] // 2
    return np.concatenate([x[:, :half], x[:, half : 2 * half]], axis=0)


def split_rhat(x: np.ndarray) -> float:
    """Potential scale reduction on split chains; ``x`` has shape (chains, draws)."""
    z = _split_halves(np.asarray(x, dtype=float))
    m = z.shape[1]
    chain_means = z.mean(axis=1)
    within = float(np.mean(z.var(axis=1, ddof=1)))
    between = m * float(np.var(chain_means, ddof=1))
    if within == 0.0:
        return 1.0 if between == 0.0 else math.inf
    var_plus = (m - 1) / m * within + between / m
    return math.sqrt(var_plus / within)


def effective_sample_size(x: np.ndarray) -> float:
    """Effective sample size on split chains via Geyer's initial monotone sequence."""
    z = _split_halves(np.asarray(x, dtype=float))
    k, m = z.shape
    centred = z - z.mean(axis=1, keepdims=True)
    width = 1 << int(np.ceil(np.log2(2 * m)))
    f = np.fft.rfft(centred, n=width, axis=1)
    acov = np.fft.irfft(f * np.conj(f), n=width, axis=1)[:, :m].real / m
    unbiased = acov * m / (m - 1)
    within = float(np.mean(unbiased[:, 0]))
    if within == 0.0:
        return float(k * m)
    between = m * float(np.var(z.mean(axis=1), ddof=1))
    var_plus = (m - 1) / m * within + between / m
    rho = 1.0 - (within - unbiased.mean(axis=0)) / var_plus
    rho[0] = 1.0
    tau = 0.0
    prev = math.inf
    for t in range(0, m - 1, 2):
        pair = rho[t] + rho[t + 1]
        if pair <= 0.0:
            break
        pair = min(pair, prev)
        tau += pair
        prev = pair
    tau = max(2.0 * tau - 1.0, 1e-12)
    return float(k * m / tau)


def fit(data: list[DiffSeries], cfg: HierConfig, threads: int = 1) -> HierDraws:
    """Sample the hierarchical posterior with ``cfg.chains`` independent chains.

    Returns the draws together with split R-hat and effective sample size
    for every parameter; a result whose R-hat exceeds 1.05 anywhere is
    flagged through ``HierDraws.converged`` but still returned.
    """
    if len(data) < 2:
        raise ValueError("the hierarchical model needs at least two datasets")
    problem = _Problem(data, cfg)
    base = RngStream(cfg.seed)
    streams = [base.spawn(c) for c in range(cfg.chains)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda s: _run_chain(problem, cfg, s), streams))
    else:
        results = [_run_chain(problem, cfg, s) for s in streams]

    stack = {k: np.stack([r[k] for r in results]) for k in results[0]}
    draws = HierDraws(
        mu0=stack["mu0"], sigma0=stack["sigma0"], nu=stack["nu"],
        alpha=stack["alpha"], beta=stack["beta"], mu=stack["mu"], sigma=stack["sigma"],
        datasets=problem.datasets, seed=cfg.seed, diagnostics=_diagnose(stack),
    )
    return draws


def _diagnose(stack: dict[str, np.ndarray]) -> dict[str, Diagnostic]:
    out: dict[str, Diagnostic] = {}
    for name in ("mu0", "sigma0", "nu", "alpha", "beta"):
        x = stack[name]
        out[name] = Diagnostic(rhat=split_rhat(x), ess=effective_sample_size(x))
    for name in ("mu", "sigma"):
        arr = stack[name]
        for i in range(arr.shape[2]):
            x = arr[:, :, i]
            out[f"{name}_{i}"] = Diagnostic(rhat=split_rhat(x), ess=effective_sample_size(x))
    return out


def _student_cdf_vec(x: float, dof: np.ndarray, loc: np.ndarray, scale: np.ndarray) -> np.ndarray:
    t = (x - loc) / scale
    ib = special.betainc(0.5 * dof, 0.5, dof / (dof + t * t))
    return np.where(t < 0, 0.5 * ib, 1.0 - 0.5 * ib)


def next_dataset_probs(
    draws: HierDraws,
    rope: Rope,
    count: int = 4000,
    rng: RngStream | None = None,
) -> TrinomialSamples:
    """Rope probabilities for the mean difference on the next, unseen dataset.

    Each posterior draw of (mu0, sigma0, nu) defines a Student predictive
    for the next dataset's mean difference; the theta triple is that
    distribution's mass below, inside, and above the rope.  When more
    pooled draws are available than ``count``, a random subset is used.
    """
    mu0 = draws.pooled("mu0")
    sigma0 = draws.pooled("sigma0")
    nu = draws.pooled("nu")
    total = mu0.size
    if total > count:
        if rng is None:
            raise ValueError("an RngStream is required to subsample posterior draws")
        idx = np.sort(rng.generator().choice(total, size=count, replace=False))
        mu0, sigma0, nu = mu0[idx], sigma0[idx], nu[idx]
    lo = _student_cdf_vec(rope.lower, nu, mu0, sigma0)
    hi = _student_cdf_vec(rope.upper, nu, mu0, sigma0)
    samples = np.column_stack([lo, hi - lo, 1.0 - hi])
    record = (rng.seed, rng.stream_id, 0) if rng is not None else (draws.seed, 0, 0)
    return TrinomialSamples(samples=samples, seed_record=record)


def shrinkage_report(draws: HierDraws, data: list[DiffSeries]) -> ShrinkageReport:
    """Compare raw per-dataset means against their pooled posterior estimates."""
    if len(data) != draws.q:
        raise ValueError("draws and data disagree on the number of datasets")
    med = float(np.median([d.mean for d in data]))
    rows = []
    pooled_dev = 0.0
    sample_dev = 0.0
    for i, series in enumerate(data):
        post = draws.mu[:, :, i].reshape(-1)
        post_mean = float(post.mean())
        rows.append(
            ShrinkageRow(
                dataset=series.dataset,
                sample_mean=series.mean,
                posterior_mean=post_mean,
                posterior_sd=float(post.std(ddof=1)),
            )
        )
        pooled_dev += abs(post_mean - med)
        sample_dev += abs(series.mean - med)
    return ShrinkageReport(rows=tuple(rows), pooled_abs_dev=pooled_dev, sample_abs_dev=sample_dev)
