"""Photon-number distributions of the pair source and reference fields.

Every distribution is truncated at ``n_max`` and carries the analytic mass
of the discarded tail, so callers can state tolerances against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .counts import CountHistogram
from .errors import DomainError

DEFAULT_N_MAX = 30


@dataclass(frozen=True)
class PairSource:
    """Per-pulse pair-number law.

    Attributes:
        mean_pairs: mean number of photon pairs per pulse, on chip.
        schmidt_modes: effective number of independent time-frequency modes.
    """

    mean_pairs: float
    schmidt_modes: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.mean_pairs) or self.mean_pairs < 0:
            raise DomainError(f"mean_pairs must be >= 0, got {self.mean_pairs}")
        if not math.isfinite(self.schmidt_modes) or self.schmidt_modes < 1:
            raise DomainError(f"schmidt_modes must be >= 1, got {self.schmidt_modes}")


@dataclass(frozen=True)
class PhotonPmf:
    probs: np.ndarray
    remainder: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    def __getitem__(self, n):
        return self.probs[n]


@dataclass(frozen=True)
class JointPmf:
    """Joint law; rows index signal photons, columns idler photons."""

    probs: np.ndarray
    remainder: float = 0.0
    flags: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))

    @property
    def n_max(self) -> int:
        return self.probs.shape[0] - 1

    def marginal(self, axis: str) -> PhotonPmf:
        if axis == "signal":
            return PhotonPmf(self.probs.sum(axis=1), self.remainder)
        if axis == "idler":
            return PhotonPmf(self.probs.sum(axis=0), self.remainder)
        raise DomainError(f"unknown axis {axis!r}")


def _check_mean(mean):
    if not math.isfinite(mean) or mean < 0:
        raise DomainError(f"mean photon number must be >= 0, got {mean}")


def thermal_pmf(mean: float, n_max: int = DEFAULT_N_MAX) -> PhotonPmf:
    """Single-mode thermal (Bose-Einstein) law ``mean**n / (1 + mean)**(n + 1)``."""
    _check_mean(mean)
    n = np.arange(n_max + 1)
    ratio = mean / (1.0 + mean)
    probs = ratio**n / (1.0 + mean)
    return PhotonPmf(probs, ratio ** (n_max + 1))


def poisson_pmf(mean: float, n_max: int = DEFAULT_N_MAX) -> PhotonPmf:
    _check_mean(mean)
    n = np.arange(n_max + 1)
    if mean == 0:
        probs = (n == 0).astype(float)
        return PhotonPmf(probs, 0.0)
    probs = np.exp(n * math.log(mean) - mean - special.gammaln(n + 1))
    return PhotonPmf(probs, float(stats.poisson.sf(n_max, mean)))


def negative_binomial_pmf(mean: float, modes: float, n_max: int = DEFAULT_N_MAX) -> PhotonPmf:
    """Total photon number of ``modes`` equally populated thermal modes.

    Reduces to :func:`thermal_pmf` for one mode and to the Poisson law as
    ``modes`` grows without bound. Real ``modes >= 1`` is accepted.
    """
    _check_mean(mean)
    if not math.isfinite(modes) or modes < 1:
        raise DomainError(f"modes must be >= 1, got {modes}")
    if modes == 1:
        return thermal_pmf(mean, n_max)
    n = np.arange(n_max + 1)
    x = mean / modes
    if x == 0:
        return PhotonPmf((n == 0).astype(float), 0.0)
    log_p = (
        special.gammaln(n + modes)
        - special.gammaln(modes)
        - special.gammaln(n + 1)
        + n * math.log(x)
        - (n + modes) * math.log1p(x)
    )
    tail = float(stats.nbinom.sf(n_max, modes, 1.0 / (1.0 + x)))
    return PhotonPmf(np.exp(log_p), tail)


def tmsv_joint_pmf(source: PairSource, n_max: int = DEFAULT_N_MAX) -> JointPmf:
    """Joint signal/idler photon-number law of the lossless pair source.

    Each Schmidt mode emits a thermal number of pairs with mean
    ``mean_pairs / K``; the total is the K-fold convolution, and the joint
    law is diagonal because photons are created in pairs.
    """
    k = source.schmidt_modes
    if k != int(k):
        raise DomainError(
            f"joint pair law needs an integer number of modes, got {k}; "
            "use negative_binomial_pmf for the marginal"
        )
    per_mode = thermal_pmf(source.mean_pairs / k, n_max).probs
    total = per_mode
    for _ in range(int(k) - 1):
        total = np.convolve(total, per_mode)[: n_max + 1]
    tail = negative_binomial_pmf(source.mean_pairs, k, n_max).remainder
    return JointPmf(np.diag(total), tail)


def pmf_moments(pmf: PhotonPmf) -> tuple[float, float]:
    """Mean and second factorial moment, with compensated summation."""
    p = np.asarray(pmf.probs if isinstance(pmf, PhotonPmf) else pmf, dtype=float)
    n = np.arange(p.size, dtype=float)
    mean = math.fsum(n * p)
    m2 = math.fsum(n * (n - 1) * p)
    return mean, m2


def g2_from_pmf(pmf: PhotonPmf) -> float:
    mean, m2 = pmf_moments(pmf)
    if mean <= 0:
        raise DomainError("g2 undefined for vacuum")
    return m2 / mean**2


def fold_to_cap(probs, cap: int) -> np.ndarray:
    """Lump all mass at and above ``cap`` into the last bin.

    The last bin is ``1 - sum(probs[:cap])`` so that truncated tails are
    attributed to it as well.
    """
    probs = np.asarray(probs, dtype=float)
    out = np.zeros(cap + 1)
    head = probs[:cap]
    out[: head.size] = head
    out[cap] = max(0.0, 1.0 - math.fsum(head))
    return out


@dataclass(frozen=True)
class Distance:
    total_variation: float
    chi_square: float
    dof: int
    p_value: float


def _pool_bins(expected, observed, min_expected=5.0):
    """Pool the tail starting at the first bin with expected count below ``min_expected``."""
    expected = list(expected)
    observed = list(observed)
    cut = next((k for k, e in enumerate(expected) if e < min_expected), len(expected))
    exp_b = expected[:cut] + ([math.fsum(expected[cut:])] if cut < len(expected) else [])
    obs_b = observed[:cut] + ([sum(observed[cut:])] if cut < len(observed) else [])
    if len(exp_b) > 1 and exp_b[-1] < min_expected:
        exp_b[-2] += exp_b.pop()
        obs_b[-2] += obs_b.pop()
    return np.array(exp_b), np.array(obs_b, dtype=float)


def distribution_distance(observed: CountHistogram, model: PhotonPmf) -> Distance:
    """Total-variation distance and Pearson chi-square of a histogram against a model.

    The model is folded onto the histogram's bins (the last bin is "cap or
    more"); bins with expected count below 5 are pooled into the tail.
    """
    if observed.total_slots <= 0:
        raise DomainError("observed histogram is empty")
    probs = model.probs if isinstance(model, PhotonPmf) else np.asarray(model, dtype=float)
    expected_p = fold_to_cap(probs, observed.cap)
    freqs = observed.counts / observed.total_slots
    tv = 0.5 * math.fsum(np.abs(freqs - expected_p))

    n = observed.total_slots
    exp_b, obs_b = _pool_bins(expected_p * n, observed.counts.tolist())
    dof = exp_b.size - 1
    if dof < 1:
        return Distance(tv, 0.0, 0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(exp_b > 0, (obs_b - exp_b) ** 2 / exp_b, np.where(obs_b > 0, np.inf, 0.0))
    chi2 = math.fsum(terms)
    return Distance(tv, chi2, dof, float(stats.chi2.sf(chi2, dof)))
