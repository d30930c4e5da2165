"""Two-log-normal score-distribution models: density, simplex MLE fitting and mu1 scaling."""

import math
import warnings
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from ..exceptions import DegenerateData, DomainError, FitError, NonFiniteObjective, TooFewSamples
from ..models.config_models import SimplexConfig
from ..models.mixture_models import LogNormal, LogNormalMixture
from ..models.run_models import QueryScoreSet
from ..utils.logging import get_logger
from ..utils.metrics import metrics

logger = get_logger("sdmodel")

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Largest disagreement tolerated between the simplex and closed-form estimates
ORACLE_TOLERANCE = 1e-3


class Mu1ScalingWarning(UserWarning):
    """Multiplicative scaling of a non-positive mu1 lowers the relevant scores."""


def lognormal_logpdf(s: float, ln: LogNormal) -> float:
    """Log-density of a log-normal at score ``s`` > 0."""
    if not s > 0:
        raise DomainError(f"Log-normal density is undefined for s={s!r}")
    log_s = math.log(s)
    z = (log_s - ln.mu) / ln.sigma
    return -log_s - math.log(ln.sigma) - LOG_SQRT_2PI - 0.5 * z * z


def _lognormal_logpdf_array(log_s: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    z = (log_s - mu) / sigma
    return -log_s - np.log(sigma) - LOG_SQRT_2PI - 0.5 * z * z


def mixture_logpdf(s: float, m: LogNormalMixture) -> float:
    """Log-density of lam * P(s|1) + (1 - lam) * P(s|0), via log-sum-exp."""
    if not s > 0:
        raise DomainError(f"Mixture density is undefined for s={s!r}")
    components = [lognormal_logpdf(s, m.l1), lognormal_logpdf(s, m.l0)]
    return float(logsumexp(components, b=[m.lam, 1.0 - m.lam]))


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    x0: Sequence[float],
    cfg: SimplexConfig,
) -> Tuple[np.ndarray, float]:
    """Minimise ``objective`` with the Nelder-Mead simplex method.

    The initial simplex is x0 plus one vertex per coordinate offset by
    ``cfg.initial_step``; reflection, expansion, contraction and shrink use the
    standard coefficients 1, 2, 0.5 and 0.5. The returned point is never worse
    than the best vertex evaluated.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    dim = x0.shape[0]
    simplex = np.vstack([x0] + [x0 + cfg.initial_step * np.eye(dim)[i] for i in range(dim)])

    for vertex in simplex:
        value = objective(vertex)
        if not np.isfinite(value):
            raise NonFiniteObjective(f"Objective is {value!r} at initial vertex {vertex.tolist()}")

    best = {"x": simplex[0].copy(), "f": float(objective(simplex[0]))}

    def tracked(x: np.ndarray) -> float:
        value = float(objective(x))
        if value < best["f"]:
            best["x"], best["f"] = np.array(x, dtype=float), value
        return value

    result = minimize(
        tracked,
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "maxiter": cfg.max_iterations,
            "xatol": cfg.tolerance,
            "fatol": cfg.tolerance,
            "adaptive": False,
        },
    )
    metrics.increment_counter("simplex_iterations", int(result.nit))

    x_min, f_min = np.asarray(result.x, dtype=float), float(result.fun)
    if best["f"] < f_min:
        x_min, f_min = best["x"], best["f"]
    return x_min, f_min


def closed_form_lognormal(scores: Sequence[float]) -> LogNormal:
    """Analytic MLE: mean and population standard deviation of log scores."""
    log_s = np.log(np.asarray(scores, dtype=float))
    mu = float(np.mean(log_s))
    sigma = float(np.sqrt(np.mean((log_s - mu) ** 2)))
    return LogNormal(mu=mu, sigma=sigma)


def fit_lognormal_mle(scores: Sequence[float], cfg: SimplexConfig) -> LogNormal:
    """Maximum-likelihood log-normal fit by simplex search on (mu, log sigma).

    The search starts at the closed-form estimate; the closed form also
    checks the result.
    """
    values = np.asarray(scores, dtype=float)
    if values.shape[0] < 2:
        raise TooFewSamples(f"Need at least 2 scores, got {values.shape[0]}")
    if np.any(values <= 0):
        raise DomainError("Scores must be strictly positive")
    if np.unique(values).shape[0] < 2:
        raise DegenerateData("All scores are equal; log-variance is zero")

    log_s = np.log(values)
    analytic = closed_form_lognormal(values)

    def negative_mean_loglik(theta: np.ndarray) -> float:
        mu, log_sigma = theta
        return float(-np.mean(_lognormal_logpdf_array(log_s, mu, math.exp(log_sigma))))

    x0 = [analytic.mu + cfg.initial_step, math.log(analytic.sigma) + cfg.initial_step]
    theta, _ = nelder_mead(negative_mean_loglik, x0, cfg)
    fitted = LogNormal(mu=float(theta[0]), sigma=float(math.exp(theta[1])))

    if abs(fitted.mu - analytic.mu) > ORACLE_TOLERANCE or abs(fitted.sigma - analytic.sigma) > ORACLE_TOLERANCE:
        logger.warning(
            f"Simplex fit {fitted} disagrees with the closed form {analytic}; using the closed form"
        )
        metrics.increment_counter("simplex_oracle_fallbacks")
        return analytic

    return fitted


def fit_mixture(qss: QueryScoreSet, cfg: SimplexConfig) -> LogNormalMixture:
    """Fit one query's mixture; lam is the relevant fraction of the retrieved list."""
    if not qss.relevant_scores or qss.n_retrieved == 0:
        raise TooFewSamples(f"Query {qss.query_id} has no relevant scores", component="L1")

    try:
        l1 = fit_lognormal_mle(qss.relevant_scores, cfg)
    except FitError as e:
        raise e.tagged("L1") from e
    try:
        l0 = fit_lognormal_mle(qss.nonrelevant_scores, cfg)
    except FitError as e:
        raise e.tagged("L0") from e

    return LogNormalMixture(lam=len(qss.relevant_scores) / qss.n_retrieved, l1=l1, l0=l0)


def scale_mu1(m: LogNormalMixture, h: float) -> LogNormalMixture:
    """Return a copy with l1.mu multiplied by (1 + h); nothing else changes.

    A :class:`Mu1ScalingWarning` is issued when h > 0 and l1.mu <= 0, because
    the literal scaling then moves the relevant component down.
    """
    if h == 0:
        return m
    if m.l1.mu <= 0:
        warnings.warn(
            f"scaling non-positive mu1={m.l1.mu!r} by (1 + {h!r}) degrades the relevant component",
            Mu1ScalingWarning,
            stacklevel=2,
        )
    l1 = m.l1.model_copy(update={"mu": m.l1.mu * (1.0 + h)})
    return m.model_copy(update={"l1": l1})
