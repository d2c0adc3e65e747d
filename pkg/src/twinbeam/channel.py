"""Loss channels, PNR detector response and the exact per-slot click law.

:func:`forward_model` is the deterministic oracle the Monte Carlo engine is
checked against, so every effect the engine simulates (binomial loss,
wire multiplexing, finite time windows, dark clicks, click cap) has an
exact counterpart here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, optimize, stats

from .counts import JointCountMatrix
from .errors import DomainError, NumericalError
from .stats import DEFAULT_N_MAX, JointPmf, PairSource, PhotonPmf, tmsv_joint_pmf

PS = 1e-12
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class LossChannel:
    transmission: float

    def __post_init__(self):
        if not (0.0 < self.transmission <= 1.0):
            raise DomainError(f"transmission must be in (0, 1], got {self.transmission}")

    @classmethod
    def from_db(cls, loss_db: float) -> LossChannel:
        if loss_db < 0:
            raise DomainError(f"loss must be >= 0 dB, got {loss_db}")
        return cls(10.0 ** (-loss_db / 10.0))

    @property
    def loss_db(self) -> float:
        return -10.0 * math.log10(self.transmission)

    def __mul__(self, other: LossChannel) -> LossChannel:
        return LossChannel(self.transmission * other.transmission)


@dataclass(frozen=True)
class DetectorModel:
    """PNR detector built from parallel nanowires.

    ``wire_count=None`` is an ideal photon-number-resolving detector. Photons
    landing on the same wire produce one click; reported clicks saturate at
    ``max_resolvable_clicks``. Times are in seconds, rates in Hz.
    """

    efficiency: float = 1.0
    wire_count: Optional[int] = None
    max_resolvable_clicks: int = 3
    dark_rate: float = 0.0
    jitter_sigma: float = 0.0
    dead_time: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.efficiency <= 1.0):
            raise DomainError(f"efficiency must be in (0, 1], got {self.efficiency}")
        if self.wire_count is not None and self.wire_count < 1:
            raise DomainError("wire_count must be positive or None (unlimited)")
        if self.max_resolvable_clicks < 1:
            raise DomainError("max_resolvable_clicks must be >= 1")
        if self.dark_rate < 0 or self.jitter_sigma < 0 or self.dead_time < 0:
            raise DomainError("dark_rate, jitter_sigma and dead_time must be >= 0")

    @property
    def channel(self) -> LossChannel:
        return LossChannel(self.efficiency)


@dataclass(frozen=True)
class SlotTiming:
    """Pulse and analysis-window timing, in seconds and Hz.

    ``pump_jitter`` is timing noise of the pump pulse relative to the sync
    output, common to both arms of a pulse.
    """

    rep_rate: float
    pulse_width: float
    slot_width: float
    accidental_offset: float
    duration: float
    pump_jitter: float = 0.0

    def __post_init__(self):
        if self.rep_rate <= 0 or self.duration <= 0:
            raise DomainError("rep_rate and duration must be positive")
        if self.pulse_width < 0 or self.slot_width <= 0 or self.pump_jitter < 0:
            raise DomainError("pulse_width, pump_jitter must be >= 0 and slot_width > 0")
        if self.slot_width >= 1.0 / self.rep_rate:
            raise DomainError("slot_width must be shorter than the pulse period")
        periods = self.accidental_offset * self.rep_rate
        if periods < 0.5 or abs(periods - round(periods)) > 1e-6:
            raise DomainError("accidental_offset must be a positive whole number of periods")
        if self.duration * self.rep_rate < 1:
            raise DomainError("acquisition must span at least one pulse")

    @property
    def period_ps(self) -> int:
        return int(round(1.0 / (self.rep_rate * PS)))

    @property
    def slot_width_ps(self) -> int:
        return int(round(self.slot_width / PS))

    @property
    def offset_slots(self) -> int:
        return int(round(self.accidental_offset * self.rep_rate))

    @property
    def n_pulses(self) -> int:
        return int(round(self.duration * self.rep_rate))


def loss_matrix(channel: LossChannel, n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    """Binomial loss map ``L[m, n] = C(n, m) eta**m (1 - eta)**(n - m)``."""
    n = np.arange(n_max + 1)
    return stats.binom.pmf(n[:, None], n[None, :], channel.transmission)


def apply_loss_pmf(pmf: PhotonPmf, channel: LossChannel) -> PhotonPmf:
    return PhotonPmf(loss_matrix(channel, pmf.n_max) @ pmf.probs, pmf.remainder)


def apply_loss_joint(joint: JointPmf, s: LossChannel, i: LossChannel) -> JointPmf:
    """Independent binomial thinning of each arm."""
    ls = loss_matrix(s, joint.probs.shape[0] - 1)
    li = loss_matrix(i, joint.probs.shape[1] - 1)
    return JointPmf(ls @ joint.probs @ li.T, joint.remainder)


def wire_matrix(wire_count: Optional[int], n_max: int) -> np.ndarray:
    """``W[k, j]``: probability that ``j`` photons spread uniformly over the wires fire ``k`` of them."""
    size = n_max + 1
    if wire_count is None:
        return np.eye(size)
    w = np.zeros((size, size))
    w[0, 0] = 1.0
    for j in range(1, size):
        prev = w[:, j - 1]
        k = np.arange(size)
        w[:, j] = prev * k / wire_count
        w[1:, j] += prev[:-1] * (wire_count - k[1:] + 1) / wire_count
    return w


def dark_cap_matrix(dark_mean: float, cap: int, n_in: int) -> np.ndarray:
    """``M[c, a] = P(min(a + d, cap) = c)`` with ``d`` Poisson dark clicks."""
    m = np.zeros((cap + 1, n_in + 1))
    for a in range(n_in + 1):
        if a >= cap:
            m[cap, a] = 1.0
            continue
        c = np.arange(a, cap)
        m[a:cap, a] = stats.poisson.pmf(c - a, dark_mean) if dark_mean > 0 else (c == a)
        m[cap, a] = stats.poisson.sf(cap - a - 1, dark_mean) if dark_mean > 0 else 0.0
    return m


def _norm_window(v, half, sigma):
    if sigma == 0:
        return float(abs(v) <= half)
    return stats.norm.cdf((half - v) / sigma) - stats.norm.cdf((-half - v) / sigma)


def capture_probabilities(det_s: DetectorModel, det_i: DetectorModel, slot: SlotTiming):
    """Probabilities that a pulse's signal record, idler record, or both fall inside the slot window.

    A pulse's photons share one emission offset (uniform over the pulse
    width, plus pump jitter); each arm adds its own Gaussian detector jitter.
    Returns ``(q_s, q_i, q_si)``.
    """
    half = slot.slot_width / 2
    w = slot.pulse_width
    sp = slot.pump_jitter
    ss, si = det_s.jitter_sigma, det_i.jitter_sigma

    if w == 0 and sp == 0:
        qs, qi = _norm_window(0.0, half, ss), _norm_window(0.0, half, si)
        return qs, qi, qs * qi

    def density(v):
        if sp == 0:
            return 1.0 / w if abs(v) <= w / 2 else 0.0
        if w == 0:
            return stats.norm.pdf(v, scale=sp)
        return (stats.norm.cdf((v + w / 2) / sp) - stats.norm.cdf((v - w / 2) / sp)) / w

    lo, hi = -w / 2 - 10 * sp, w / 2 + 10 * sp
    breaks = sorted({x for x in (-w / 2, w / 2, -half, half) if lo < x < hi})

    def expect(f):
        val, _ = integrate.quad(
            lambda v: density(v) * f(v), lo, hi, points=breaks or None, epsabs=1e-14, epsrel=1e-12, limit=200
        )
        return min(1.0, max(0.0, val))

    qs = expect(lambda v: _norm_window(v, half, ss))
    qi = expect(lambda v: _norm_window(v, half, si))
    qsi = expect(lambda v: _norm_window(v, half, ss) * _norm_window(v, half, si))
    return qs, qi, qsi


def _capture_joint(c: np.ndarray, qs: float, qi: float, qsi: float) -> np.ndarray:
    """Drop whole records that fall outside the window."""
    out = np.zeros_like(c)
    out[0, 0] = c[0, 0]
    out[1:, 0] += qs * c[1:, 0]
    out[0, 0] += (1 - qs) * c[1:, 0].sum()
    out[0, 1:] += qi * c[0, 1:]
    out[0, 0] += (1 - qi) * c[0, 1:].sum()
    both = c[1:, 1:]
    out[1:, 1:] += qsi * both
    out[1:, 0] += (qs - qsi) * both.sum(axis=1)
    out[0, 1:] += (qi - qsi) * both.sum(axis=0)
    out[0, 0] += (1 - qs - qi + qsi) * both.sum()
    return out


def _fired_matrix(channel: Optional[LossChannel], det: DetectorModel, n_max: int) -> np.ndarray:
    eta = det.efficiency * (channel.transmission if channel is not None else 1.0)
    return wire_matrix(det.wire_count, n_max) @ loss_matrix(LossChannel(eta), n_max)


def click_distribution(incident: PhotonPmf, det: DetectorModel, slot: SlotTiming) -> PhotonPmf:
    """Per-slot click-number law of one detector for a given incident photon law."""
    n_max = incident.n_max
    fired = _fired_matrix(None, det, n_max) @ incident.probs
    q, _, _ = capture_probabilities(det, det, slot)
    kept = q * fired
    kept[0] = fired[0] + (1 - q) * fired[1:].sum()
    cap = det.max_resolvable_clicks
    if cap >= n_max and det.dark_rate == 0:
        return PhotonPmf(kept, incident.remainder)
    dark = dark_cap_matrix(det.dark_rate * slot.slot_width, cap, n_max)
    return PhotonPmf(dark @ kept, incident.remainder)


def forward_model(
    source: PairSource,
    s: LossChannel,
    i: LossChannel,
    det_s: DetectorModel,
    det_i: DetectorModel,
    slot: SlotTiming,
    n_max: int = DEFAULT_N_MAX,
) -> JointPmf:
    """Exact joint law of (signal clicks, idler clicks) in one slot.

    Pair law -> per-arm binomial loss (channel x detector efficiency) ->
    wire multiplexing -> window capture -> dark clicks -> click cap.
    """
    pairs = tmsv_joint_pmf(source, n_max)
    fs = _fired_matrix(s, det_s, n_max)
    fi = _fired_matrix(i, det_i, n_max)
    fired = fs @ pairs.probs @ fi.T
    fired = _capture_joint(fired, *capture_probabilities(det_s, det_i, slot))
    ms = dark_cap_matrix(det_s.dark_rate * slot.slot_width, det_s.max_resolvable_clicks, n_max)
    mi = dark_cap_matrix(det_i.dark_rate * slot.slot_width, det_i.max_resolvable_clicks, n_max)
    return JointPmf(ms @ fired @ mi.T, pairs.remainder)


def invert_loss(
    counts,
    s_total: LossChannel,
    i_total: LossChannel,
    method: str = "constrained_least_squares",
) -> JointPmf:
    """Infer the on-chip joint photon law from measured joint click frequencies.

    ``counts`` is a :class:`JointCountMatrix` or an exact measured law
    (:class:`JointPmf` or square array), which is normalized first.

    ``direct_inverse`` applies the exact inverse of the binomial maps and may
    return negative entries (flagged, not clipped). The default solves a
    nonnegative least-squares problem constrained to the probability simplex.
    """
    if isinstance(counts, JointCountMatrix):
        if counts.total_slots <= 0:
            raise DomainError("cannot invert an empty count matrix")
        measured = counts.probabilities
    else:
        measured = np.asarray(getattr(counts, "probs", counts), dtype=float)
        if measured.ndim != 2 or measured.shape[0] != measured.shape[1] or measured.sum() <= 0:
            raise DomainError("measured law must be a nonempty square matrix")
        measured = measured / measured.sum()
    cap = measured.shape[0] - 1
    ls = loss_matrix(s_total, cap)
    li = loss_matrix(i_total, cap)
    cond = np.linalg.cond(ls) * np.linalg.cond(li)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NumericalError(
            f"loss inversion is ill-conditioned (condition estimate {cond:.3e} > {MAX_CONDITION:.0e})"
        )

    if method == "direct_inverse":
        est = np.linalg.solve(ls, np.linalg.solve(li, measured.T).T)
        flags = ()
        if np.any(est < -1e-12 * cond):  # below round-off
            flags = ("negative_entries",)
            warnings.warn("direct loss inversion produced negative probabilities", RuntimeWarning)
        return JointPmf(est, 0.0, flags)

    if method != "constrained_least_squares":
        raise DomainError(f"unknown inversion method {method!r}")
    a = np.kron(ls, li)
    b = measured.ravel()
    weight = 1e3 * max(1.0, np.abs(a).max())
    a_aug = np.vstack([a, weight * np.ones(a.shape[1])])
    b_aug = np.append(b, weight * b.sum())
    x, _ = optimize.nnls(a_aug, b_aug, maxiter=50 * a.shape[1])
    total = x.sum()
    if total <= 0:
        raise NumericalError("constrained inversion returned an empty distribution")
    return JointPmf((x / total).reshape(ls.shape[0], li.shape[0]), 0.0)


def mean_pairs_for_detected(
    target: float,
    s: LossChannel,
    i: LossChannel,
    det_s: DetectorModel,
    det_i: DetectorModel,
    slot: SlotTiming,
    arm: str = "signal",
) -> float:
    """On-chip mean pair number whose modelled mean click number on ``arm`` equals ``target``."""
    if target <= 0:
        raise DomainError("target detected mean must be positive")
    axis = 1 if arm == "signal" else 0

    def detected(mu):
        p = forward_model(PairSource(mu), s, i, det_s, det_i, slot).probs.sum(axis=axis)
        return float(np.arange(p.size) @ p) - target

    hi = 1e-3
    while detected(hi) < 0:
        hi *= 2
        if hi > 50:
            raise NumericalError(f"detected mean {target} is unreachable with these losses")
    return optimize.brentq(detected, 0.0, hi, xtol=1e-12, rtol=1e-12)
