"""Pulse-by-pulse Monte Carlo of the pair source, lossy arms and PNR detectors.

Pulses are generated in fixed-size blocks, each with its own RNG substream
derived from ``(seed, block index)``, so the output does not depend on how
many workers run the blocks. Only pulses that carry at least one pair are
materialized; the gaps between them are drawn geometrically.

Time base: integer picoseconds from acquisition start. Pulse ``p`` has its
epoch (and sync record) at ``p * period + period // 2``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional

import numpy as np

from .channel import PS, DetectorModel, LossChannel, SlotTiming
from .errors import DomainError
from .stats import PairSource, negative_binomial_pmf
from .tagstream import (
    IDLER,
    RECORD_DTYPE,
    SIGNAL,
    SYNC,
    SlotBatch,
    SlotCounter,
    SlotCounts,
    StreamHeader,
    TagStream,
    _sum_by_slot,
    assign_slots,
)

SUB_CHUNK_PULSES = 1 << 20


class Arm(NamedTuple):
    channel: LossChannel
    detector: DetectorModel

    @property
    def transmission(self) -> float:
        return self.channel.transmission * self.detector.efficiency


@dataclass(frozen=True)
class SimConfig:
    source: PairSource
    arm_s: Arm
    arm_i: Arm
    timing: SlotTiming
    seed: int = 0
    block_size: int = 10_000_000
    sync_divider: int = 1

    def __post_init__(self):
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.block_size < 1:
            raise DomainError("block_size must be positive")
        if self.sync_divider < 0:
            raise DomainError("sync_divider must be >= 0 (0 disables sync records)")

    @property
    def n_blocks(self) -> int:
        return -(-self.timing.n_pulses // self.block_size)


def rng_stream(seed: int, substream: int) -> np.random.Generator:
    """Independent, reproducible generator for one ``(seed, substream)`` pair."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(substream,))))


def draw_pair_count(rng: np.random.Generator, source: PairSource, size=None):
    """Pairs per pulse from the K-mode (negative binomial) law."""
    mu, k = source.mean_pairs, source.schmidt_modes
    if mu == 0:
        return np.zeros(size, dtype=np.int64) if size is not None else 0
    if k == 1:
        return rng.geometric(1.0 / (1.0 + mu), size) - 1
    return rng.negative_binomial(k, k / (k + mu), size)


def thin(rng: np.random.Generator, n, transmission: float):
    """Binomial survival of ``n`` photons through a channel."""
    if not (0.0 < transmission <= 1.0):
        raise DomainError(f"transmission must be in (0, 1], got {transmission}")
    return rng.binomial(n, transmission)


class _NonzeroSampler:
    """Positions and sizes of pulses carrying at least one pair."""

    def __init__(self, source: PairSource):
        mu, k = source.mean_pairs, source.schmidt_modes
        self.p_any = -math.expm1(-k * math.log1p(mu / k)) if mu > 0 else 0.0
        if self.p_any == 0:
            return
        n_max = 32
        while True:
            pmf = negative_binomial_pmf(mu, k, n_max)
            if pmf.remainder < 1e-18 or n_max > 4096:
                break
            n_max *= 2
        cond = pmf.probs[1:]
        self.cdf = np.cumsum(cond)

    def sample(self, rng: np.random.Generator, n_pulses: int):
        if self.p_any == 0:
            e = np.zeros(0, np.int64)
            return e, e
        expect = n_pulses * self.p_any
        pos = []
        last = -1
        while True:
            m = int(expect + 6 * math.sqrt(expect) + 16)
            gaps = rng.geometric(self.p_any, m)
            idx = last + np.cumsum(gaps)
            pos.append(idx)
            last = int(idx[-1])
            if last >= n_pulses:
                break
            expect = (n_pulses - last) * self.p_any
        idx = np.concatenate(pos)
        idx = idx[idx < n_pulses]
        u = rng.random(idx.size) * self.cdf[-1]
        pairs = np.searchsorted(self.cdf, u, side="right") + 1
        return idx.astype(np.int64), pairs.astype(np.int64)


def fire_wires(rng: np.random.Generator, photons: np.ndarray, wire_count: Optional[int]) -> np.ndarray:
    """Number of distinct wires hit when photons land uniformly on ``wire_count`` wires."""
    if wire_count is None:
        return photons
    out = photons.copy()
    for k in np.unique(photons[photons >= 2]):
        sel = np.flatnonzero(photons == k)
        hits = np.sort(rng.integers(0, wire_count, size=(sel.size, int(k))), axis=1)
        out[sel] = 1 + np.count_nonzero(np.diff(hits, axis=1), axis=1)
    return out


@dataclass
class BlockEvents:
    """Detector records of one block: per arm, sorted absolute times and click counts."""

    block: int
    start: int
    stop: int
    times: tuple
    clicks: tuple


def simulate_block(config: SimConfig, block: int) -> BlockEvents:
    timing = config.timing
    period = timing.period_ps
    start = block * config.block_size
    stop = min(start + config.block_size, timing.n_pulses)
    rng = rng_stream(config.seed, block)

    idx, pairs = _NonzeroSampler(config.source).sample(rng, stop - start)
    arms = (config.arm_s, config.arm_i)
    clicks = []
    for arm in arms:
        k = thin(rng, pairs, arm.transmission)
        k = fire_wires(rng, k, arm.detector.wire_count)
        clicks.append(np.minimum(k, arm.detector.max_resolvable_clicks))
    active = (clicks[0] > 0) | (clicks[1] > 0)
    idx = idx[active]
    clicks = [c[active] for c in clicks]
    m = idx.size

    width_ps = timing.pulse_width / PS
    common = rng.uniform(-width_ps / 2, width_ps / 2, m) if width_ps > 0 else np.zeros(m)
    if timing.pump_jitter > 0:
        common = common + rng.normal(0.0, timing.pump_jitter / PS, m)
    epochs = (start + idx) * period + period // 2
    limit = period // 2 - 1

    times_out, clicks_out = [], []
    for arm, c in zip(arms, clicks):
        det = arm.detector
        offset = common + (rng.normal(0.0, det.jitter_sigma / PS, m) if det.jitter_sigma > 0 else 0.0)
        offset = np.clip(np.rint(offset), -limit, limit).astype(np.int64)
        hit = c > 0
        t = epochs[hit] + offset[hit]
        k = c[hit]
        n_dark = rng.poisson(det.dark_rate * (stop - start) * period * PS) if det.dark_rate > 0 else 0
        if n_dark:
            dt = rng.integers(start * period, stop * period, n_dark)
            t = np.concatenate([t, dt])
            k = np.concatenate([k, np.ones(n_dark, np.int64)])
            order = np.argsort(t, kind="stable")
            t, k = t[order], k[order]
        times_out.append(t.astype(np.int64))
        clicks_out.append(k.astype(np.int64))
    return BlockEvents(block, start, stop, tuple(times_out), tuple(clicks_out))


def _apply_dead_time(times, clicks, dead_ps: int, last_kept: int):
    """Greedy suppression of records within ``dead_ps`` of the previous kept record."""
    if dead_ps <= 0 or times.size == 0:
        return times, clicks, (int(times[-1]) if times.size else last_kept)
    gaps = np.diff(times, prepend=last_kept)
    if np.all(gaps > dead_ps):
        return times, clicks, int(times[-1])
    keep = np.ones(times.size, bool)
    prev = last_kept
    for n, t in enumerate(times.tolist()):
        if t - prev <= dead_ps:
            keep[n] = False
        else:
            prev = t
    return times[keep], clicks[keep], prev


def iter_blocks(config: SimConfig, threads: int = 1) -> Iterator[BlockEvents]:
    """Blocks in time order; dead time is applied here, sequentially across blocks."""
    blocks = range(config.n_blocks)
    if threads > 1 and config.n_blocks > 1:
        pool = ProcessPoolExecutor(max_workers=threads)
        source = pool.map(simulate_block, [config] * len(blocks), blocks)
    else:
        pool = None
        source = (simulate_block(config, b) for b in blocks)
    dead = [int(round(a.detector.dead_time / PS)) for a in (config.arm_s, config.arm_i)]
    last = [-(2**62), -(2**62)]
    try:
        for ev in source:
            if any(dead):
                times, clicks = list(ev.times), list(ev.clicks)
                for a in range(2):
                    times[a], clicks[a], last[a] = _apply_dead_time(times[a], clicks[a], dead[a], last[a])
                ev = BlockEvents(ev.block, ev.start, ev.stop, tuple(times), tuple(clicks))
            yield ev
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)


def _block_records(config: SimConfig, ev: BlockEvents) -> Iterator[np.ndarray]:
    period = config.timing.period_ps
    div = config.sync_divider
    for lo in range(ev.start, ev.stop, SUB_CHUNK_PULSES):
        hi = min(lo + SUB_CHUNK_PULSES, ev.stop)
        t_lo, t_hi = lo * period, hi * period
        parts_t, parts_c, parts_k = [], [], []
        if div:
            first = -(-lo // div) * div
            p = np.arange(first, hi, div, dtype=np.int64)
            parts_t.append(p * period + period // 2)
            parts_c.append(np.full(p.size, SYNC, np.uint8))
            parts_k.append(np.zeros(p.size, np.uint8))
        for ch, t, k in zip((SIGNAL, IDLER), ev.times, ev.clicks):
            a, b = np.searchsorted(t, [t_lo, t_hi])
            parts_t.append(t[a:b])
            parts_c.append(np.full(b - a, ch, np.uint8))
            parts_k.append(k[a:b].astype(np.uint8))
        t = np.concatenate(parts_t)
        c = np.concatenate(parts_c)
        k = np.concatenate(parts_k)
        rank = np.where(c == SYNC, 0, c.astype(np.int64) + 1)
        order = np.lexsort((rank, t))
        rec = np.zeros(t.size, dtype=RECORD_DTYPE)
        rec["timestamp"] = t[order]
        rec["channel"] = c[order]
        rec["clicks"] = k[order]
        yield rec


def simulate(config: SimConfig, threads: int = 1) -> TagStream:
    """Time-sorted tag stream: sync records plus one record per arm per clicking slot."""

    def chunks():
        for ev in iter_blocks(config, threads):
            yield from _block_records(config, ev)

    return TagStream(StreamHeader(config.timing.period_ps, 0), chunks())


class SlotSimulation:
    """Slot batches straight from the engine, with the same windowing as :class:`~twinbeam.tagstream.Slotizer`.

    Skips building records, which makes 10^9-pulse runs practical.
    """

    def __init__(self, config: SimConfig, threads: int = 1):
        self.config = config
        self.threads = threads
        self.n_slots = config.timing.n_pulses
        self.out_of_window = {SIGNAL: 0, IDLER: 0}
        self.records = {SIGNAL: 0, IDLER: 0}

    def __iter__(self) -> Iterator[SlotBatch]:
        period = self.config.timing.period_ps
        half = self.config.timing.slot_width_ps // 2
        for ev in iter_blocks(self.config, self.threads):
            slots, chans, ks = [], [], []
            for ch, t, k in zip((SIGNAL, IDLER), ev.times, ev.clicks):
                self.records[ch] += t.size
                slot, inwin = assign_slots(t, period, half, period // 2)
                self.out_of_window[ch] += int((~inwin).sum())
                slots.append(slot[inwin])
                chans.append(np.full(int(inwin.sum()), ch, np.uint8))
                ks.append(k[inwin])
            keys, s, i = _sum_by_slot(np.concatenate(slots), np.concatenate(chans), np.concatenate(ks))
            yield SlotBatch(ev.start, ev.stop, keys, s, i)


def simulate_counts(config: SimConfig, cap: int = 3, threads: int = 1, hist_cap=None) -> SlotCounts:
    """Joint, accidental and marginal click counts of a simulated acquisition."""
    sim = SlotSimulation(config, threads)
    counter = SlotCounter(sim.n_slots, cap, config.timing.offset_slots, hist_cap)
    for batch in sim:
        counter.update(batch)
    return counter.result(
        {
            "out_of_window_signal": sim.out_of_window[SIGNAL],
            "out_of_window_idler": sim.out_of_window[IDLER],
            "records_signal": sim.records[SIGNAL],
            "records_idler": sim.records[IDLER],
        }
    )
