"""Report assembly for the simulate / analyze pipelines."""

from __future__ import annotations

import math
import time
import warnings

import numpy as np

from . import __version__
from .channel import forward_model, invert_loss
from .config import RunConfig
from .errors import DomainError, NumericalError
from .estimators import (
    AXES,
    RateSet,
    car_table,
    g2_zero,
    heralded_g2,
    klyshko_pair_rate,
    mode_number_and_purity,
    nonclassicality_gamma,
    ratio_rel_error,
    reference_fits,
    two_pair_rate,
)
from .montecarlo import simulate, simulate_counts
from .report import (
    Report,
    car_block,
    estimate_block,
    histogram_block,
    matrix_block,
    series_block,
)
from .tagstream import SYNC, SlotCounts, Slotizer, StreamHeader, count_slots, write_stream


def new_report(command: str, cfg: RunConfig | None) -> Report:
    return Report(command, __version__, cfg.digest() if cfg else None, cfg.seed if cfg else None)


def _guarded(report, name, units, compute):
    """Add an estimate block; undefined statistics become ``null`` with the reason attached."""
    try:
        value, err = compute()
    except (DomainError, NumericalError) as exc:
        return estimate_block(report, name, None, None, units, note=str(exc))
    return estimate_block(report, name, value, err, units)


def add_count_blocks(report: Report, counts: SlotCounts, cfg: RunConfig) -> Report:
    """Every photon-statistics result derivable from one set of slot counts."""
    joint, acc = counts.joint, counts.accidental
    n = joint.total_slots
    duration = n / cfg.rep_rate_hz
    report.add("diagnostics", "acquisition", slots=n, duration_s=duration, **counts.diagnostics)

    for axis, hist in (("signal", counts.signal), ("idler", counts.idler)):
        fits = {}
        if hist.counts[1:].sum() > 0:
            ref = reference_fits(hist)
            for label, d in (("thermal", ref.thermal), ("coherent", ref.coherent)):
                fits[label] = {"mean": ref.mean, "total_variation": d.total_variation,
                               "chi_square": d.chi_square, "dof": d.dof, "p_value": d.p_value}
        histogram_block(report, f"{axis}_histogram", hist, model=fits)

    matrix_block(report, "joint_counts", joint.counts, units="slots", total_slots=n)
    matrix_block(report, "accidental_counts", acc.counts, units="slots", total_slots=n,
                 offset_slots=acc.offset_slots)
    car_block(report, "car", car_table(joint, acc))

    if joint.cap >= 2:
        rates = RateSet.from_counts(joint, duration)
        report.add("diagnostics", "rate_counts", N_S=rates.N_S, N_I=rates.N_I, N_SS=rates.N_SS,
                   N_II=rates.N_II, N_SI=rates.N_SI, N_SSII=rates.N_SSII, duration_s=duration)

        def klyshko():
            r = klyshko_pair_rate(rates)
            return r, r * ratio_rel_error(rates.N_S, rates.N_I, rates.N_SI)

        def two_pair():
            r = two_pair_rate(rates)
            return r, r * ratio_rel_error(rates.N_SS, rates.N_II, rates.N_SSII)

        _guarded(report, "klyshko_pair_rate", "1/s", klyshko)
        _guarded(report, "two_pair_rate", "1/s", two_pair)

    for axis in AXES:
        hist = counts.signal if axis == "signal" else counts.idler

        def g2(hist=hist):
            e = g2_zero(hist)
            return e.value, e.std_error

        _guarded(report, f"g2_{axis}", "1", g2)
        try:
            mode = mode_number_and_purity(g2_zero(hist))
            estimate_block(report, f"mode_number_{axis}", mode.k, mode.k_error)
            estimate_block(report, f"purity_{axis}", mode.purity, mode.purity_error)
        except DomainError as exc:
            estimate_block(report, f"mode_number_{axis}", None, None, note=str(exc))
            estimate_block(report, f"purity_{axis}", None, None, note=str(exc))

    for herald in AXES:
        other = "idler" if herald == "signal" else "signal"

        def gh(herald=herald):
            e = heralded_g2(joint, herald)
            return e.value, e.std_error

        _guarded(report, f"heralded_g2_{other}_given_{herald}", "1", gh)

    for first in AXES:
        def gamma(first=first):
            e = nonclassicality_gamma(joint, first)
            return e.value, e.std_error

        _guarded(report, f"gamma_{first}_first", "1", gamma)

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            inv = invert_loss(
                joint,
                cfg.channel("signal") * cfg.detector("signal").channel,
                cfg.channel("idler") * cfg.detector("idler").channel,
                cfg.inversion_method,
            )
        matrix_block(report, "loss_inverted_joint", inv.probs, units="probability",
                     method=cfg.inversion_method, flags=list(inv.flags))
    except (DomainError, NumericalError) as exc:
        report.add("diagnostics", "loss_inverted_joint", error=str(exc))
    return report


def add_model_blocks(report: Report, cfg: RunConfig, mean_pairs: float | None = None):
    """Exact forward-model joint law for the configured point, for comparison with the counts."""
    timing = cfg.timing()
    law = forward_model(cfg.source(mean_pairs), cfg.channel("signal"), cfg.channel("idler"),
                        cfg.detector("signal"), cfg.detector("idler"), timing)
    matrix_block(report, "model_joint", law.probs, units="probability", truncation=law.remainder)
    return report


def analyze_stream(stream, cfg: RunConfig, command: str = "analyze") -> Report:
    timing = cfg.timing()
    slotizer = Slotizer(stream, timing)
    counts = count_slots(slotizer, cap=cfg.count_cap, offset=timing.offset_slots)
    counts.diagnostics["non_monotone"] = stream.non_monotone
    return add_count_blocks(new_report(command, cfg), counts, cfg)


def run_simulate(cfg: RunConfig, out, threads: int = 1, throughput: bool = False) -> Report:
    """Write the simulated tag stream to ``out`` and report what was written."""
    sim = cfg.sim_config()
    stream = simulate(sim, threads)
    start = time.perf_counter()
    channels = np.zeros(256, np.int64)

    def tally():
        for chunk in stream.chunks():
            channels[:] += np.bincount(chunk["channel"], minlength=256)
            yield chunk

    nbytes = write_stream(tally(), StreamHeader(sim.timing.period_ps, 0), out)
    elapsed = time.perf_counter() - start
    report = new_report("simulate", cfg)
    fields = dict(
        pulses=sim.timing.n_pulses,
        records=int(channels.sum()),
        records_signal=int(channels[0]),
        records_idler=int(channels[1]),
        records_sync=int(channels[SYNC]),
        bytes=nbytes,
        mean_pairs_per_pulse=cfg.mean_pairs_per_pulse,
    )
    if throughput:
        fields["records_per_second"] = channels.sum() / elapsed if elapsed > 0 else math.inf
    report.add("diagnostics", "stream", **fields)
    return report


def run_sweep(cfg: RunConfig, threads: int = 1) -> Report:
    """Slot-mode simulation at every sweep point, with rate and correlation summaries."""
    report = new_report("simulate-sweep", cfg)
    rows = []
    for pump_uw, mu in cfg.sweep():
        counts = simulate_counts(cfg.sim_config(mu), cfg.count_cap, threads)
        duration = counts.joint.total_slots / cfg.rep_rate_hz
        rates = RateSet.from_counts(counts.joint, duration)
        row = [pump_uw, mu]
        for f in (klyshko_pair_rate, two_pair_rate):
            try:
                row.append(f(rates))
            except DomainError:
                row.append(None)
        g2 = g2_zero(counts.signal) if counts.signal.counts[1:].any() else None
        row += [rates.N_S, rates.N_I, rates.N_SI, rates.N_SS, rates.N_II, rates.N_SSII,
                g2.value if g2 else None, g2.std_error if g2 else None]
        rows.append(row)
    series_block(
        report,
        "sweep",
        ["pump", "mean_pairs", "klyshko_pair_rate", "two_pair_rate", "N_S", "N_I", "N_SI", "N_SS", "N_II",
         "N_SSII", "g2_signal", "g2_signal_error"],
        rows,
        ["uW", "1", "1/s", "1/s", "slots", "slots", "slots", "slots", "slots", "slots", "1", "1"],
    )
    return report
