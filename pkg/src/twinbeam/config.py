"""Flat ``key = value`` run configurations with unit-suffixed keys.

Files are TOML without tables. Every physical quantity names its unit in
the key (``_db``, ``_ps``, ``_hz``, ``_uw``, ...); unknown keys are rejected
and all problems are reported together.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import List, Optional

import tomli
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .cavity import CavityParams
from .channel import PS, DetectorModel, LossChannel, SlotTiming
from .errors import ConfigError
from .montecarlo import Arm, SimConfig
from .stats import PairSource

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


class _Flat(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form of the validated settings."""
        canon = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


class RunConfig(_Flat):
    mean_pairs_per_pulse: float = Field(ge=0)
    schmidt_modes: int = Field(1, ge=1)

    signal_channel_loss_db: float = Field(ge=0)
    idler_channel_loss_db: float = Field(ge=0)
    signal_detector_efficiency: float = Field(1.0, gt=0, le=1)
    idler_detector_efficiency: float = Field(1.0, gt=0, le=1)
    # 0 means an ideal number-resolving detector with no wire saturation
    signal_wire_count: int = Field(0, ge=0)
    idler_wire_count: int = Field(0, ge=0)
    max_resolvable_clicks: int = Field(3, ge=1, le=255)
    signal_dark_rate_hz: float = Field(0.0, ge=0)
    idler_dark_rate_hz: float = Field(0.0, ge=0)
    signal_jitter_fwhm_ps: float = Field(0.0, ge=0)
    idler_jitter_fwhm_ps: float = Field(0.0, ge=0)
    signal_dead_time_ps: float = Field(0.0, ge=0)
    idler_dead_time_ps: float = Field(0.0, ge=0)

    rep_rate_hz: float = Field(gt=0)
    pulse_width_ps: float = Field(ge=0)
    pump_jitter_fwhm_ps: float = Field(0.0, ge=0)
    slot_width_ps: float = Field(gt=0)
    accidental_offset_ps: float = Field(gt=0)
    duration_s: float = Field(gt=0)

    seed: int = Field(0, ge=0, lt=2**64)
    block_size_pulses: int = Field(10_000_000, ge=1)
    sync_divider: int = Field(1, ge=0)
    count_cap: int = Field(3, ge=1, le=30)
    inversion_method: str = Field("constrained_least_squares", pattern="^(direct_inverse|constrained_least_squares)$")

    # pump sweeps: either explicit mean pair numbers or pump powers with a conversion
    sweep_mean_pairs: Optional[List[float]] = None
    sweep_pump_uw: Optional[List[float]] = None
    mean_pairs_per_uw: Optional[float] = Field(None, gt=0)

    stream_path: Optional[str] = None
    report_path: Optional[str] = None

    @model_validator(mode="after")
    def _check(self):
        if self.sweep_pump_uw is not None and self.mean_pairs_per_uw is None:
            raise ValueError("sweep_pump_uw needs mean_pairs_per_uw")
        if self.sweep_mean_pairs is not None and self.sweep_pump_uw is not None:
            raise ValueError("give either sweep_mean_pairs or sweep_pump_uw, not both")
        for name in ("sweep_mean_pairs", "sweep_pump_uw"):
            values = getattr(self, name)
            if values is not None and (not values or min(values) < 0):
                raise ValueError(f"{name} must be a nonempty list of nonnegative numbers")
        return self

    def detector(self, arm: str) -> DetectorModel:
        get = lambda key: getattr(self, f"{arm}_{key}")  # noqa: E731
        return DetectorModel(
            efficiency=get("detector_efficiency"),
            wire_count=get("wire_count") or None,
            max_resolvable_clicks=self.max_resolvable_clicks,
            dark_rate=get("dark_rate_hz"),
            jitter_sigma=get("jitter_fwhm_ps") * PS / FWHM_PER_SIGMA,
            dead_time=get("dead_time_ps") * PS,
        )

    def channel(self, arm: str) -> LossChannel:
        return LossChannel.from_db(getattr(self, f"{arm}_channel_loss_db"))

    def timing(self) -> SlotTiming:
        return SlotTiming(
            rep_rate=self.rep_rate_hz,
            pulse_width=self.pulse_width_ps * PS,
            slot_width=self.slot_width_ps * PS,
            accidental_offset=self.accidental_offset_ps * PS,
            duration=self.duration_s,
            pump_jitter=self.pump_jitter_fwhm_ps * PS / FWHM_PER_SIGMA,
        )

    def source(self, mean_pairs: Optional[float] = None) -> PairSource:
        mu = self.mean_pairs_per_pulse if mean_pairs is None else mean_pairs
        return PairSource(mu, self.schmidt_modes)

    def sim_config(self, mean_pairs: Optional[float] = None) -> SimConfig:
        return SimConfig(
            source=self.source(mean_pairs),
            arm_s=Arm(self.channel("signal"), self.detector("signal")),
            arm_i=Arm(self.channel("idler"), self.detector("idler")),
            timing=self.timing(),
            seed=self.seed,
            block_size=self.block_size_pulses,
            sync_divider=self.sync_divider,
        )

    def sweep(self) -> list[tuple[Optional[float], float]]:
        """``(pump_uw or None, mean pairs)`` for each sweep point; the base point if no sweep."""
        if self.sweep_pump_uw is not None:
            return [(p, p * self.mean_pairs_per_uw) for p in self.sweep_pump_uw]
        if self.sweep_mean_pairs is not None:
            return [(None, m) for m in self.sweep_mean_pairs]
        return [(None, self.mean_pairs_per_pulse)]


class CavityConfig(_Flat):
    pump_wavelength_nm: float = Field(gt=0)
    signal_wavelength_nm: float = Field(gt=0)
    idler_wavelength_nm: float = Field(gt=0)
    pump_index: float = Field(gt=0)
    signal_index: float = Field(gt=0)
    idler_index: float = Field(gt=0)
    d_eff_pm_per_v: float = Field(gt=0)
    mode_overlap: float = Field(ge=0, le=1)
    mode_volume_um3: float = Field(gt=0)

    def params(self) -> CavityParams:
        return CavityParams.from_wavelengths(
            self.pump_wavelength_nm,
            self.signal_wavelength_nm,
            self.idler_wavelength_nm,
            self.pump_index,
            self.signal_index,
            self.idler_index,
            self.d_eff_pm_per_v * 1e-12,
            self.mode_overlap,
            self.mode_volume_um3 * 1e-18,
        )


def _problems(exc: ValidationError) -> list[str]:
    out = []
    for err in exc.errors():
        key = ".".join(str(p) for p in err["loc"]) or "<config>"
        if err["type"] == "extra_forbidden":
            out.append(f"{key}: unknown key")
        else:
            out.append(f"{key}: {err['msg']}")
    return out


def parse_config(text: str, model=RunConfig, overrides: Optional[dict] = None, source: str = "<config>"):
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError([f"{source}: {exc}"]) from None
    nested = [k for k, v in raw.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError([f"{k}: tables are not allowed; use flat keys" for k in nested])
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return model.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_problems(exc)) from None


def load_config(path, model=RunConfig, overrides: Optional[dict] = None):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror}"]) from None
    return parse_config(text, model, overrides, str(path))
