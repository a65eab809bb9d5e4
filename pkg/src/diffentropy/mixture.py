"""Closed-form diffusion of a Gaussian mixture under the variance-preserving
forward kernel.

A component ``N(mu_k, var_k)`` noised to signal level ``alpha_bar`` becomes
``N(sqrt(alpha_bar) * mu_k, alpha_bar * var_k + (1 - alpha_bar))``, so the
noisy marginal, the per-class likelihoods, the class posteriors and the exact
score are all available in closed form.  Likelihood work is done in log space
with log-sum-exp normalization; posteriors of well-separated components
underflow catastrophically otherwise.

Everything here is a pure function of immutable inputs and broadcasts over
``x``, so evaluation over dense grids or sample populations is safe and cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MixtureModel, ParameterError, Partition

__all__ = [
    "DegenerateDensityError",
    "UndefinedPosteriorError",
    "DiffusedComponent",
    "diffuse_component",
    "diffused_params",
    "marginal_pdf",
    "class_log_likelihoods",
    "class_posteriors",
    "partition_posterior",
    "resolve_label",
    "score",
    "score_derivative",
]

# Posterior floor: 0 * log 0 must evaluate to 0 by continuity, so probabilities
# are clamped here before any logarithm.
POSTERIOR_FLOOR = 1e-300

LOG_2PI = float(np.log(2.0 * np.pi))


class DegenerateDensityError(ValueError):
    """A zero-variance component has no density at ``alpha_bar = 1``."""


class UndefinedPosteriorError(ValueError):
    """Both sides of a partition carry zero posterior mass at this point."""


@dataclass(frozen=True)
class DiffusedComponent:
    """One mixture component pushed forward to a given noise level."""

    mu_kt: float
    var_kt: float
    weight: float


def diffuse_component(mu_k: float, var_k: float, alpha_bar: float, weight: float = 1.0) -> DiffusedComponent:
    """Noised parameters ``(sqrt(ab) * mu, ab * var + (1 - ab))`` of one component."""
    if var_k < 0.0:
        raise ParameterError(f"variance must be non-negative, got {var_k!r}")
    if not 0.0 <= alpha_bar <= 1.0:
        raise ParameterError(f"alpha_bar must lie in [0, 1], got {alpha_bar!r}")
    if alpha_bar == 1.0 and var_k == 0.0:
        raise DegenerateDensityError(
            "component is a point mass at alpha_bar = 1; no density exists"
        )
    return DiffusedComponent(
        mu_kt=float(np.sqrt(alpha_bar) * mu_k),
        var_kt=float(alpha_bar * var_k + (1.0 - alpha_bar)),
        weight=float(weight),
    )


def diffused_params(mixture: MixtureModel, alpha_bar: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectors of diffused means and variances for every component."""
    if not 0.0 <= alpha_bar <= 1.0:
        raise ParameterError(f"alpha_bar must lie in [0, 1], got {alpha_bar!r}")
    if alpha_bar == 1.0 and np.any(mixture.variances == 0.0):
        raise DegenerateDensityError(
            "mixture contains point masses; densities are undefined at alpha_bar = 1"
        )
    mu = np.sqrt(alpha_bar) * mixture.means
    var = alpha_bar * mixture.variances + (1.0 - alpha_bar)
    return mu, var


def _log_normal(x: np.ndarray, mu: np.ndarray, var: np.ndarray) -> np.ndarray:
    return -0.5 * (LOG_2PI + np.log(var) + (x - mu) ** 2 / var)


def _logsumexp(a: np.ndarray, axis: int = -1) -> np.ndarray:
    amax = np.max(a, axis=axis, keepdims=True)
    out = amax + np.log(np.sum(np.exp(a - amax), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def class_log_likelihoods(mixture: MixtureModel, alpha_bar: float, x) -> np.ndarray:
    """Log density of ``x`` under each diffused component; shape ``x.shape + (K,)``."""
    mu, var = diffused_params(mixture, alpha_bar)
    x = np.asarray(x, dtype=np.float64)
    return _log_normal(x[..., None], mu, var)


def marginal_pdf(mixture: MixtureModel, alpha_bar: float, x) -> np.ndarray | float:
    """Weighted sum of diffused component densities at ``x``."""
    ll = class_log_likelihoods(mixture, alpha_bar, x)
    out = np.exp(_logsumexp(ll + _log_weights(mixture.weights)))
    return float(out) if out.ndim == 0 else out


def _log_weights(weights: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(weights, POSTERIOR_FLOOR))


def class_posteriors(mixture: MixtureModel, alpha_bar: float, x) -> np.ndarray:
    """Posterior probability of each component given the noisy observation ``x``."""
    ll = class_log_likelihoods(mixture, alpha_bar, x) + _log_weights(mixture.weights)
    post = np.exp(ll - _logsumexp(ll)[..., None])
    return post


def partition_posterior(partition: Partition, posteriors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Collapse per-class posteriors onto the two partition sides.

    The pair is renormalized over the union of the sides; if neither side
    carries any mass the decision is undefined at that point.
    """
    posteriors = np.asarray(posteriors, dtype=np.float64)
    p0 = posteriors[..., list(partition.z0)].sum(axis=-1)
    p1 = posteriors[..., list(partition.z1)].sum(axis=-1)
    total = p0 + p1
    if np.any(total <= 0.0):
        raise UndefinedPosteriorError(
            "partition posterior undefined: both sides have zero mass "
            "(measure-zero point for this decision)"
        )
    return p0 / total, p1 / total


def resolve_label(label, partition: Partition | None, num_components: int) -> tuple[int, ...]:
    """Map a conditioning label to the component subset it denotes.

    ``"z0"``/``"z1"`` require a partition, ``"null"`` means the full mixture,
    and an integer selects a single component.
    """
    if isinstance(label, str):
        if label == "null":
            return tuple(range(num_components))
        if label in ("z0", "z1"):
            if partition is None:
                raise ParameterError(f"label {label!r} needs a partition")
            return partition.side(label)
        raise ParameterError(f"unknown label {label!r}")
    k = int(label)
    if not 0 <= k < num_components:
        raise ParameterError(f"component label {k} out of range for {num_components} components")
    return (k,)


def _subset_score_terms(mixture: MixtureModel, alpha_bar: float, x, subset: tuple[int, ...]):
    mu, var = diffused_params(mixture, alpha_bar)
    idx = list(subset)
    mu, var = mu[idx], var[idx]
    x = np.asarray(x, dtype=np.float64)
    ll = _log_normal(x[..., None], mu, var) + _log_weights(mixture.weights[idx])
    w = np.exp(ll - _logsumexp(ll)[..., None])
    pull = (mu - x[..., None]) / var
    return w, pull, var


def score(mixture: MixtureModel, alpha_bar: float, x, label="null", partition: Partition | None = None):
    """Gradient of the log density of the (sub-)mixture selected by ``label``.

    For posterior weights ``w_k(x)`` within the subset this is
    ``sum_k w_k(x) * (mu_kt - x) / var_kt``, the exact conditional score.
    """
    subset = resolve_label(label, partition, mixture.num_components)
    w, pull, _ = _subset_score_terms(mixture, alpha_bar, x, subset)
    out = np.sum(w * pull, axis=-1)
    return float(out) if out.ndim == 0 else out


def score_derivative(mixture: MixtureModel, alpha_bar: float, x, label="null",
                     partition: Partition | None = None):
    """Spatial derivative of :func:`score`; the log density's curvature.

    Equals ``E_w[pull^2 - 1/var] - (E_w[pull])^2`` with ``pull = (mu - x)/var``,
    which root finding uses for Newton steps and stability classification.
    """
    subset = resolve_label(label, partition, mixture.num_components)
    w, pull, var = _subset_score_terms(mixture, alpha_bar, x, subset)
    first = np.sum(w * pull, axis=-1)
    out = np.sum(w * (pull**2 - 1.0 / var), axis=-1) - first**2
    return float(out) if out.ndim == 0 else out
