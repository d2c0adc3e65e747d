"""Photon-statistics estimators with shot-noise uncertainties.

Uncertainties use the multinomial model over slots: every statistic here is
a product of powers of cell-weighted moments, so its first-order (delta
method) variance follows directly from the cell frequencies. Click numbers
are used as photon numbers throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .counts import CountHistogram, JointCountMatrix
from .errors import DomainError
from .stats import JointPmf, PhotonPmf, distribution_distance, poisson_pmf, thermal_pmf

AXES = ("signal", "idler")


@dataclass(frozen=True)
class G2Estimate:
    value: float
    std_error: float
    sample_size: float


Estimate = G2Estimate


def _monomial(probs, features: Sequence[np.ndarray], exponents: Sequence[float], n: float):
    """``prod_k M_k**e_k`` with ``M_k = sum_c p_c f_k(c)``, and its delta-method standard error."""
    p = np.ravel(probs)
    moments = [math.fsum(p * np.ravel(f)) for f in features]
    if any(m == 0 and e < 0 for m, e in zip(moments, exponents)):
        raise DomainError("statistic undefined: a normalizing moment is zero")
    if any(m == 0 for m in moments):
        return 0.0, 0.0
    value = math.prod(m**e for m, e in zip(moments, exponents))
    if not math.isfinite(n):
        return value, 0.0
    grad = value * sum(e * np.ravel(f) / m for f, m, e in zip(features, moments, exponents))
    var = (math.fsum(p * grad**2) - math.fsum(p * grad) ** 2) / n
    return value, math.sqrt(max(var, 0.0))


def _hist_probs(hist):
    if isinstance(hist, CountHistogram):
        if hist.total_slots <= 0:
            raise DomainError("empty histogram")
        return hist.counts / hist.total_slots, float(hist.total_slots)
    if isinstance(hist, PhotonPmf):
        return hist.probs, math.inf
    return np.asarray(hist, float), math.inf


def _joint_probs(joint):
    if isinstance(joint, JointCountMatrix):
        return joint.probabilities, float(joint.total_slots)
    if isinstance(joint, JointPmf):
        return joint.probs, math.inf
    return np.asarray(joint, float), math.inf


def g2_zero(hist) -> G2Estimate:
    """``sum n(n-1) P(n) / (sum n P(n))**2`` from a click histogram or an exact pmf."""
    p, n = _hist_probs(hist)
    k = np.arange(p.size, dtype=float)
    if math.fsum(k * p) == 0:
        raise DomainError("g2 undefined: no clicks recorded")
    value, err = _monomial(p, [k * (k - 1), k], [1.0, -2.0], n)
    return G2Estimate(value, err, n)


def conditional_pmf(joint, herald_m: int, herald_axis: str) -> PhotonPmf:
    """``P(n | m)`` of the other arm given ``herald_m`` clicks on ``herald_axis``."""
    p, _ = _joint_probs(joint)
    if herald_axis == "signal":
        row = p[herald_m, :]
    elif herald_axis == "idler":
        row = p[:, herald_m]
    else:
        raise DomainError(f"unknown herald axis {herald_axis!r}")
    total = row.sum()
    if total <= 0:
        raise DomainError(f"no slots with {herald_m} heralding clicks on the {herald_axis} arm")
    return PhotonPmf(row / total, 0.0)


def heralded_g2(joint, herald_axis: str) -> G2Estimate:
    """g2 of one arm restricted to slots with exactly one click on ``herald_axis``."""
    if herald_axis not in AXES:
        raise DomainError(f"unknown herald axis {herald_axis!r}")
    if isinstance(joint, JointCountMatrix):
        counts = joint.counts[1, :] if herald_axis == "signal" else joint.counts[:, 1]
        if counts.sum() == 0:
            raise DomainError(f"no herald events on the {herald_axis} arm")
        return g2_zero(CountHistogram(counts, int(counts.sum())))
    return g2_zero(conditional_pmf(joint, 1, herald_axis))


@dataclass(frozen=True)
class RateSet:
    """Singles and coincidence counts over an acquisition of ``duration`` seconds.

    ``N_S``/``N_I``: slots with exactly one click on an arm; ``N_SS``/``N_II``:
    exactly two; ``N_SI``: one on each; ``N_SSII``: two on each.
    """

    N_S: float
    N_I: float
    N_SS: float
    N_II: float
    N_SI: float
    N_SSII: float
    duration: float = 1.0

    def __post_init__(self):
        if min(self.N_S, self.N_I, self.N_SS, self.N_II, self.N_SI, self.N_SSII) < 0:
            raise DomainError("counts must be nonnegative")
        if self.duration <= 0:
            raise DomainError("duration must be positive")
        if self.N_SI > min(self.N_S, self.N_I):
            warnings.warn("coincidences exceed singles; rates look inconsistent", RuntimeWarning)

    @classmethod
    def from_rates(cls, **rates) -> RateSet:
        return cls(**rates, duration=1.0)

    @classmethod
    def from_counts(cls, joint: JointCountMatrix, duration: float) -> RateSet:
        c = joint.counts
        if joint.cap < 2:
            raise DomainError("two-photon rates need a click cap of at least 2")
        rs, ri = c.sum(axis=1), c.sum(axis=0)
        return cls(float(rs[1]), float(ri[1]), float(rs[2]), float(ri[2]), float(c[1, 1]), float(c[2, 2]), duration)

    def rate(self, name: str) -> float:
        return getattr(self, name) / self.duration


def klyshko_pair_rate(r: RateSet) -> float:
    """First-order pair generation rate ``N_S N_I / N_SI`` in pairs per second."""
    if r.N_SI <= 0:
        raise DomainError("no coincidences: pair rate undefined")
    return r.rate("N_S") * r.rate("N_I") / r.rate("N_SI")


def two_pair_rate(r: RateSet) -> float:
    """First-order two-pair generation rate ``N_SS N_II / N_SSII`` in events per second."""
    if r.N_SSII <= 0:
        raise DomainError("no two-photon coincidences: two-pair rate undefined")
    return r.rate("N_SS") * r.rate("N_II") / r.rate("N_SSII")


def ratio_rel_error(*counts) -> float:
    """Relative shot-noise error of a product/ratio of independent counts."""
    return math.sqrt(sum(1.0 / c for c in counts)) if all(c > 0 for c in counts) else math.inf


@dataclass(frozen=True)
class CARTable:
    coincidence: JointCountMatrix
    accidental: JointCountMatrix
    ratio: np.ndarray  # nan where the accidental count is zero


def car_table(coinc: JointCountMatrix, acc: JointCountMatrix) -> CARTable:
    if coinc.total_slots != acc.total_slots or coinc.cap != acc.cap:
        raise DomainError("coincidence and accidental matrices must share slot basis and cap")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(acc.counts > 0, coinc.counts / np.maximum(acc.counts, 1), np.nan)
    return CARTable(coinc, acc, ratio)


def _factorial_feature(k: np.ndarray, order: int) -> np.ndarray:
    out = np.ones_like(k, dtype=float)
    for j in range(order):
        out = out * (k - j)
    return out


def _cross_features(shape, n: int, m: int, first: str = "signal"):
    a = np.arange(shape[0], dtype=float)[:, None] * np.ones(shape[1])
    b = np.ones(shape[0])[:, None] * np.arange(shape[1], dtype=float)[None, :]
    if first == "idler":
        a, b = b, a
    return _factorial_feature(a, n) * _factorial_feature(b, m), a, b


def mutual_correlation(joint, n: int, m: int, first: str = "signal") -> float:
    """``g^(n,m)``: normalized (n, m) factorial cross-moment; ``first`` names the order-``n`` arm."""
    p, _ = _joint_probs(joint)
    cross, a, b = _cross_features(p.shape, n, m, first)
    mean_a, mean_b = math.fsum(np.ravel(p * a)), math.fsum(np.ravel(p * b))
    if mean_a <= 0 or mean_b <= 0:
        raise DomainError("mutual correlation undefined: an arm has zero mean")
    return math.fsum(np.ravel(p * cross)) / (mean_a**n * mean_b**m)


def nonclassicality_gamma(joint, first: str = "signal") -> G2Estimate:
    """``g^(1,2) / sqrt(g^(2,2) g^(0,2))``; values above 1 witness nonclassical correlation.

    ``first`` is the arm carrying order 1 in ``g^(1,2)``.
    """
    p, n = _joint_probs(joint)
    denom = mutual_correlation(p, 2, 2, first) * mutual_correlation(p, 0, 2, first)
    if denom <= 0:
        raise DomainError("gamma undefined: no two-click events on both arms")
    value = mutual_correlation(p, 1, 2, first) / math.sqrt(denom)
    f12, _, _ = _cross_features(p.shape, 1, 2, first)
    f22, _, _ = _cross_features(p.shape, 2, 2, first)
    f02, _, _ = _cross_features(p.shape, 0, 2, first)
    _, err = _monomial(p, [f12, f22, f02], [1.0, -0.5, -0.5], n)
    return G2Estimate(value, err, n)


@dataclass(frozen=True)
class ModeNumber:
    k: float
    purity: float
    k_error: float
    purity_error: float


def mode_number_and_purity(g2: G2Estimate) -> ModeNumber:
    """Effective mode number ``1 / (g2 - 1)`` and purity ``1 / K``."""
    excess = g2.value - 1.0
    if excess <= 0:
        raise DomainError(f"g2 = {g2.value:.4g} <= 1 is not chaotic light; mode number undefined")
    return ModeNumber(1.0 / excess, excess, g2.std_error / excess**2, g2.std_error)


def shot_noise_error(count: float, total: float = None) -> float:
    """``sqrt(count)``; divided by ``total`` when the count is normalized to a probability."""
    if count < 0:
        raise DomainError("count must be nonnegative")
    err = math.sqrt(count)
    return err / total if total else err


def bootstrap_error(
    statistic: Callable[[JointCountMatrix], float],
    joint: JointCountMatrix,
    n_resamples: int = 1000,
    seed: int = 0,
) -> float:
    """Standard deviation of ``statistic`` over multinomial resamples of the slots."""
    rng = np.random.default_rng(seed)
    flat = joint.probabilities.ravel()
    draws = rng.multinomial(joint.total_slots, flat, size=n_resamples)
    values = []
    for d in draws:
        try:
            values.append(statistic(JointCountMatrix(d.reshape(joint.counts.shape), joint.total_slots, joint.offset_slots)))
        except DomainError:
            continue
    return float(np.std(values, ddof=1)) if len(values) > 1 else math.nan


@dataclass(frozen=True)
class ReferenceFit:
    mean: float
    thermal: object
    coherent: object


def reference_fits(hist: CountHistogram) -> ReferenceFit:
    """Thermal and Poisson laws at the observed mean click number, with their distances to the data."""
    k = np.arange(hist.counts.size)
    mean = math.fsum(k * hist.counts) / hist.total_slots
    return ReferenceFit(
        mean,
        distribution_distance(hist, thermal_pmf(mean)),
        distribution_distance(hist, poisson_pmf(mean)),
    )
