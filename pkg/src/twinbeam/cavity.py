"""Device calibration: three-wave coupling strength, ring resonance fits,
SHG efficiency and brightness regressions.

Powers are in watts and frequencies in hertz; percent-per-microwatt only
appears through :func:`percent_per_uw`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import constants, optimize, stats

from .errors import DomainError, FormatError, NumericalError

SCAN_COLUMNS = ("wavelength_nm", "detuning_ghz")


@dataclass(frozen=True)
class CavityParams:
    """Inputs of the single-photon three-wave coupling rate.

    Angular frequencies in rad/s, relative permittivities, ``d_eff`` in m/V,
    overlap ``zeta`` in [0, 1] and mode volume ``v_eff`` in m^3.
    """

    omega_p: float
    omega_s: float
    omega_i: float
    eps_p: float
    eps_s: float
    eps_i: float
    d_eff: float
    zeta: float
    v_eff: float

    def __post_init__(self):
        for name in ("omega_p", "omega_s", "omega_i", "eps_p", "eps_s", "eps_i", "d_eff", "v_eff"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be positive, got {value}")
        if not 0 <= self.zeta <= 1:
            raise DomainError(f"zeta must lie in [0, 1], got {self.zeta}")

    @classmethod
    def from_wavelengths(cls, pump_nm, signal_nm, idler_nm, n_p, n_s, n_i, d_eff, zeta, v_eff) -> CavityParams:
        w = [2 * math.pi * constants.c / (x * 1e-9) for x in (pump_nm, signal_nm, idler_nm)]
        return cls(*w, n_p**2, n_s**2, n_i**2, d_eff, zeta, v_eff)

    def _prefactor(self) -> float:
        num = constants.hbar * self.omega_p * self.omega_s * self.omega_i
        den = 2 * constants.epsilon_0 * self.eps_p * self.eps_s * self.eps_i
        return math.sqrt(num / den) * (2 / math.pi) * self.d_eff * self.zeta


@dataclass(frozen=True)
class Coupling:
    angular: float  # g in rad/s
    hz: float  # g / 2pi


def coupling_g(p: CavityParams) -> Coupling:
    """Single-photon coupling rate, both as an angular rate and divided by 2pi."""
    g = p._prefactor() / math.sqrt(p.v_eff)
    return Coupling(g, g / (2 * math.pi))


def mode_volume_for(p: CavityParams, g_hz: float, convention: str = "hz") -> float:
    """Mode volume that makes :func:`coupling_g` equal ``g_hz``.

    ``convention="hz"`` treats ``g_hz`` as g/2pi; ``"angular"`` as g itself.
    """
    if g_hz <= 0:
        raise DomainError("target coupling must be positive")
    g = g_hz * 2 * math.pi if convention == "hz" else g_hz
    if p.zeta == 0:
        raise DomainError("zero overlap: no mode volume reaches a nonzero coupling")
    return (p._prefactor() / g) ** 2


def q_from_bandwidth(center_frequency: float, fwhm: float) -> float:
    if center_frequency <= 0 or fwhm <= 0:
        raise DomainError("center frequency and linewidth must be positive")
    return center_frequency / fwhm


def shg_efficiency(p_sh: float, p_pump: float) -> float:
    """Normalized SHG conversion ``P_SH / P_p**2`` in 1/W."""
    if p_pump <= 0:
        raise DomainError("pump power must be positive")
    if p_sh < 0:
        raise DomainError("second-harmonic power must be nonnegative")
    return p_sh / p_pump**2


def percent_per_uw(per_watt: float) -> float:
    return per_watt * 100 * 1e-6


# ---------------------------------------------------------------- resonances


def ring_transmission(nu, nu0: float, q_loaded: float, q_coupling: float, baseline: float = 1.0):
    """All-pass ring power transmission ``|1 - (2Q_l/Q_c) / (1 + 2i Q_l (nu - nu0)/nu0)|**2``."""
    x = (np.asarray(nu, dtype=float) - nu0) / nu0
    field = 1 - (2 * q_loaded / q_coupling) / (1 + 2j * q_loaded * x)
    return baseline * np.abs(field) ** 2


@dataclass(frozen=True)
class ResonanceScan:
    """Transmission samples over absolute optical frequency (Hz)."""

    frequency: np.ndarray
    transmission: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frequency, dtype=float)
        t = np.asarray(self.transmission, dtype=float)
        if f.shape != t.shape or f.ndim != 1:
            raise DomainError("frequency and transmission must be 1-D arrays of equal length")
        if f.size < 10:
            raise DomainError(f"a scan needs at least 10 samples, got {f.size}")
        if np.any(~np.isfinite(t)) or t.min() < -0.05 or t.max() > 1.5:
            raise DomainError("transmission must be normalized to [0, 1] (small noise allowed)")
        order = np.argsort(f)
        object.__setattr__(self, "frequency", f[order])
        object.__setattr__(self, "transmission", t[order])

    @classmethod
    def from_columns(cls, x, transmission, column: str, carrier_hz: float | None = None) -> ResonanceScan:
        x = np.asarray(x, dtype=float)
        if column == "wavelength_nm":
            if np.any(x <= 0):
                raise DomainError("wavelengths must be positive")
            return cls(constants.c / (x * 1e-9), transmission)
        if column == "detuning_ghz":
            if carrier_hz is None or carrier_hz <= 0:
                raise DomainError("a detuning scan needs a positive carrier frequency")
            return cls(carrier_hz + x * 1e9, transmission)
        raise DomainError(f"unknown scan column {column!r}; expected one of {SCAN_COLUMNS}")


def read_scan(path, column: str | None = None, carrier_hz: float | None = None) -> ResonanceScan:
    """Parse two-column text (x, transmission); ``#`` starts a comment.

    An optional header line names the first column (``wavelength_nm`` or
    ``detuning_ghz``); otherwise ``column`` must be given.
    """
    path = Path(path)
    xs, ts = [], []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        if not xs and fields[0] in SCAN_COLUMNS:
            if column is not None and column != fields[0]:
                raise FormatError(f"{path}:{lineno}: header names {fields[0]!r} but {column!r} was requested")
            column = fields[0]
            continue
        if len(fields) != 2:
            raise FormatError(f"{path}:{lineno}: expected 2 columns, got {len(fields)}")
        try:
            x, t = float(fields[0]), float(fields[1])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric value in {raw.strip()!r}") from None
        xs.append(x)
        ts.append(t)
    if column is None:
        raise FormatError(f"{path}: no header line; specify the first column's meaning")
    try:
        return ResonanceScan.from_columns(xs, ts, column, carrier_hz)
    except DomainError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_scan(path, scan: ResonanceScan, carrier_hz: float):
    lines = ["detuning_ghz transmission"]
    lines += [f"{(f - carrier_hz) / 1e9:.9f} {t:.9f}" for f, t in zip(scan.frequency, scan.transmission)]
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class ResonanceFit:
    q_loaded: float
    q_coupling: float
    q_intrinsic: float
    extinction: float  # on-resonance transmission relative to the baseline
    center: float  # Hz
    baseline: float
    residual_rms: float
    regime: str


def _seed(scan: ResonanceScan):
    f, t = scan.frequency, scan.transmission
    baseline = float(np.percentile(t, 90))
    k = int(np.argmin(t))
    if t[k] >= baseline:
        raise NumericalError("no resonance dip below the baseline")
    level = 0.5 * (baseline + t[k])
    lo = k
    while lo > 0 and t[lo] < level:
        lo -= 1
    hi = k
    while hi < t.size - 1 and t[hi] < level:
        hi += 1
    if t[lo] < level or t[hi] < level:
        raise DomainError("scan does not cover the half-depth points of the resonance")

    def cross(i, j):
        return f[i] + (level - t[i]) * (f[j] - f[i]) / (t[j] - t[i])

    width = cross(hi - 1, hi) - cross(lo, lo + 1)
    if width <= 0:
        raise DomainError("could not estimate a linewidth from the scan")
    depth = min(max(1 - t[k] / baseline, 1e-6), 1.0)
    return float(f[k]), width, depth, baseline


def lorentzian_fit(scan: ResonanceScan, coupling_regime: str = "auto") -> ResonanceFit:
    """Fit the all-pass ring dip and split the loaded Q into coupling and intrinsic parts.

    The dip depth fixes ``2Q_l/Q_c`` only up to the over/under-coupled
    ambiguity; ``auto`` picks over-coupling unless the dip is too shallow to
    make that choice meaningful.
    """
    if coupling_regime not in ("over", "under", "auto"):
        raise DomainError(f"unknown coupling regime {coupling_regime!r}")
    nu0, width, depth, baseline = _seed(scan)
    span = scan.frequency[-1] - scan.frequency[0]
    if span < 3 * width:
        raise DomainError(f"scan spans {span / width:.2f} linewidths; at least 3 are needed")
    f, t = scan.frequency, scan.transmission

    def model(theta):
        shift, log_q, d, b = theta
        center = nu0 + shift * width
        q = math.exp(log_q)
        y = 2 * q * (f - center) / center
        return b * (1 - d / (1 + y * y))

    def cost(theta):
        return float(np.sum((model(theta) - t) ** 2))

    theta0 = np.array([0.0, math.log(nu0 / width), depth, baseline])
    res = optimize.minimize(
        cost,
        theta0,
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-14 * max(cost(theta0), 1e-300), "maxiter": 40000, "maxfev": 80000},
    )
    if not res.success:
        raise NumericalError(f"resonance fit did not converge: {res.message}")
    shift, log_q, d, b = res.x
    center = nu0 + shift * width
    q_l = math.exp(log_q)
    extinction = min(max(1 - d, 0.0), 1.0)
    root = math.sqrt(extinction)

    regime = coupling_regime
    if regime == "auto":
        if extinction > 0.9:
            raise DomainError(
                f"on-resonance transmission {extinction:.3f} is too close to 1 to resolve "
                "over- versus under-coupling; pass the regime explicitly"
            )
        regime = "over"
    a = 1 + root if regime == "over" else 1 - root
    if a <= 0:
        raise NumericalError("fitted dip implies no coupling; cannot split the loaded Q")
    q_c = 2 * q_l / a
    inv_q0 = 1 / q_l - 1 / q_c
    q_0 = 1 / inv_q0 if inv_q0 > 0 else math.inf
    rms = math.sqrt(cost(res.x) / t.size)
    return ResonanceFit(q_l, q_c, q_0, float(extinction), float(center), float(b), rms, regime)


def synthetic_scan(
    q_loaded: float,
    q_coupling: float,
    center_hz: float,
    n: int = 401,
    span_linewidths: float = 10.0,
    noise: float = 0.0,
    rng: np.random.Generator | None = None,
) -> ResonanceScan:
    width = center_hz / q_loaded
    f = center_hz + np.linspace(-0.5, 0.5, n) * span_linewidths * width
    t = ring_transmission(f, center_hz, q_loaded, q_coupling)
    if noise:
        rng = rng if rng is not None else np.random.default_rng()
        t = t + rng.normal(0.0, noise, size=n)
    return ResonanceScan(f, t)


# ---------------------------------------------------------------- brightness


@dataclass(frozen=True)
class PowerLawFit:
    coefficient: float  # rate / W**exponent
    exponent: float
    exponent_error: float  # zero when the exponent is fixed
    residuals: np.ndarray


_FIXED = {"linear": 1.0, "quadratic": 2.0}


def brightness_fit(points: Sequence[tuple[float, float]], order: str = "linear") -> PowerLawFit:
    """Rate versus pump power, ``rate = c * P**k``.

    Fixed orders fit ``c`` by least squares through the origin; ``free``
    regresses ``log rate`` on ``log P``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError("points must be (power, rate) pairs")
    power, rate = pts[:, 0], pts[:, 1]
    if order in _FIXED:
        k = _FIXED[order]
        if pts.shape[0] < 2:
            raise DomainError("need at least 2 points")
        basis = power**k
        denom = float(basis @ basis)
        if denom == 0:
            raise DomainError("degenerate design: all pump powers are zero")
        c = float(basis @ rate) / denom
        return PowerLawFit(c, k, 0.0, rate - c * basis)
    if order != "free":
        raise DomainError(f"unknown fit order {order!r}")
    if pts.shape[0] < 3:
        raise DomainError("a free-exponent fit needs at least 3 points")
    if np.any(power <= 0) or np.any(rate <= 0):
        raise DomainError("a free-exponent fit needs positive powers and rates")
    if np.ptp(power) == 0:
        raise DomainError("degenerate design: all pump powers are equal")
    reg = stats.linregress(np.log(power), np.log(rate))
    c = math.exp(reg.intercept)
    return PowerLawFit(c, float(reg.slope), float(reg.stderr), rate - c * power**reg.slope)


def log_ratio_exponent(p1: float, r1: float, p2: float, r2: float) -> float:
    """Power-law exponent through two (power, rate) points."""
    if min(p1, r1, p2, r2) <= 0 or p1 == p2:
        raise DomainError("need two distinct positive points")
    return math.log(r2 / r1) / math.log(p2 / p1)
