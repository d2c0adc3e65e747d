"""TTAG binary time-tag streams, slotting and coincidence counting.

File layout (little-endian)::

    header, 24 bytes:  magic "TTAG" | version u16 = 1 | flags u16 = 0
                       | rep_period_ps u64 | record_count u64
    record, 16 bytes:  timestamp_ps u64 | channel u8 | clicks u8 | 6 zero bytes

Channels: 0 signal, 1 idler, 255 sync. Photon records carry ``clicks >= 1``,
sync records ``clicks == 0``. A plain-text form with one
``timestamp_ps channel clicks`` triple per line is accepted for fixtures.
"""

from __future__ import annotations

import io
import os
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Optional

import numpy as np

from .counts import CountHistogram, JointCountMatrix
from .errors import DomainError, FormatError

MAGIC = b"TTAG"
VERSION = 1
HEADER = struct.Struct("<4sHHQQ")
HEADER_SIZE = HEADER.size
RECORD_DTYPE = np.dtype(
    [("timestamp", "<u8"), ("channel", "u1"), ("clicks", "u1"), ("reserved", "V6")]
)
RECORD_SIZE = RECORD_DTYPE.itemsize
SIGNAL, IDLER, SYNC = 0, 1, 255
CHUNK_RECORDS = 1 << 20

assert HEADER_SIZE == 24 and RECORD_SIZE == 16


@dataclass(frozen=True)
class StreamHeader:
    rep_period: int
    record_count: int = 0
    version: int = VERSION
    flags: int = 0

    def pack(self) -> bytes:
        return HEADER.pack(MAGIC, self.version, self.flags, self.rep_period, self.record_count)

    @classmethod
    def unpack(cls, raw: bytes) -> StreamHeader:
        if len(raw) < HEADER_SIZE:
            raise FormatError(f"stream shorter than the {HEADER_SIZE}-byte header", offset=len(raw))
        magic, version, flags, period, count = HEADER.unpack(raw[:HEADER_SIZE])
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}", offset=0)
        if version != VERSION:
            raise FormatError(f"unsupported version {version}", offset=4)
        return cls(period, count, version, flags)


class TagRecord(NamedTuple):
    timestamp: int
    channel: int
    clicks: int


def make_records(timestamps, channels, clicks) -> np.ndarray:
    rec = np.zeros(len(timestamps), dtype=RECORD_DTYPE)
    rec["timestamp"] = timestamps
    rec["channel"] = channels
    rec["clicks"] = clicks
    return rec


def _validate_chunk(rec: np.ndarray, first_offset: int):
    words = rec.view("<u8").reshape(-1, 2)[:, 1]
    bad = np.flatnonzero(words >> np.uint64(16))
    if bad.size:
        raise FormatError("nonzero reserved bytes", offset=first_offset + RECORD_SIZE * int(bad[0]) + 10)
    ch, cl = rec["channel"], rec["clicks"]
    photon = (ch == SIGNAL) | (ch == IDLER)
    bad = np.flatnonzero((photon & (cl == 0)) | ((ch == SYNC) & (cl != 0)))
    if bad.size:
        raise FormatError("click field inconsistent with channel", offset=first_offset + RECORD_SIZE * int(bad[0]) + 9)


class TagStream:
    """A header plus a single pass over time-sorted record chunks.

    ``non_monotone`` becomes true once a timestamp decrease has been seen;
    the condition is reported, not fatal.
    """

    def __init__(self, header: StreamHeader, chunks: Iterable[np.ndarray]):
        self.header = header
        self._chunks = chunks
        self.non_monotone = False
        self._last = -1

    @classmethod
    def from_records(cls, records: np.ndarray, rep_period: int) -> TagStream:
        records = np.asarray(records, dtype=RECORD_DTYPE)
        chunks = (records[k : k + CHUNK_RECORDS] for k in range(0, max(len(records), 1), CHUNK_RECORDS))
        return cls(StreamHeader(rep_period, len(records)), chunks)

    def chunks(self) -> Iterator[np.ndarray]:
        for chunk in self._chunks:
            if len(chunk) == 0:
                continue
            ts = chunk["timestamp"]
            if (self._last >= 0 and int(ts[0]) < self._last) or np.any(ts[1:] < ts[:-1]):
                if not self.non_monotone:
                    warnings.warn("time-tag stream is not time-sorted", RuntimeWarning)
                self.non_monotone = True
            self._last = int(ts[-1])
            yield chunk

    def __iter__(self) -> Iterator[TagRecord]:
        for chunk in self.chunks():
            for t, c, k in zip(chunk["timestamp"].tolist(), chunk["channel"].tolist(), chunk["clicks"].tolist()):
                yield TagRecord(t, c, k)

    def to_array(self) -> np.ndarray:
        parts = list(self.chunks())
        return np.concatenate(parts) if parts else np.zeros(0, dtype=RECORD_DTYPE)


def write_stream(records, header: StreamHeader, sink) -> int:
    """Write a TTAG stream and return the number of bytes written.

    ``records`` is a record array or an iterable of record arrays. The
    record count in the header is patched to the number actually written
    when the sink is seekable.
    """
    if isinstance(records, np.ndarray):
        records = [records]
    own = isinstance(sink, (str, os.PathLike))
    fh = open(sink, "wb") if own else sink
    try:
        start = fh.tell() if fh.seekable() else None
        fh.write(header.pack())
        count, last = 0, -1
        for chunk in records:
            chunk = np.ascontiguousarray(chunk, dtype=RECORD_DTYPE)
            if len(chunk) == 0:
                continue
            ts = chunk["timestamp"]
            if int(ts[0]) < last or np.any(ts[1:] < ts[:-1]):
                warnings.warn("writing a stream that is not time-sorted", RuntimeWarning)
            last = int(ts[-1])
            fh.write(chunk.tobytes())
            count += len(chunk)
        if count != header.record_count:
            if start is None:
                raise FormatError("record count differs from header on a non-seekable sink")
            end = fh.tell()
            fh.seek(start)
            fh.write(StreamHeader(header.rep_period, count, header.version, header.flags).pack())
            fh.seek(end)
        return HEADER_SIZE + RECORD_SIZE * count
    finally:
        if own:
            fh.close()


def read_stream(source, chunk_records: int = CHUNK_RECORDS) -> TagStream:
    """Open a TTAG stream from a path, bytes or binary file object.

    Header and file length are validated eagerly; records are read lazily.
    """
    if isinstance(source, (bytes, bytearray)):
        fh, size = io.BytesIO(source), len(source)
    elif isinstance(source, (str, os.PathLike)):
        fh, size = open(source, "rb"), os.path.getsize(source)
    else:
        fh = source
        pos = fh.tell()
        size = fh.seek(0, io.SEEK_END) - pos
        fh.seek(pos)
    header = StreamHeader.unpack(fh.read(HEADER_SIZE))
    body = size - HEADER_SIZE
    if body % RECORD_SIZE:
        whole = body // RECORD_SIZE
        raise FormatError("truncated record", offset=HEADER_SIZE + whole * RECORD_SIZE)
    n = body // RECORD_SIZE
    if n != header.record_count:
        raise FormatError(f"header declares {header.record_count} records but file holds {n}", offset=16)

    def gen():
        try:
            done = 0
            while done < n:
                k = min(chunk_records, n - done)
                raw = fh.read(k * RECORD_SIZE)
                if len(raw) != k * RECORD_SIZE:
                    raise FormatError("truncated record", offset=HEADER_SIZE + (done + len(raw) // RECORD_SIZE) * RECORD_SIZE)
                chunk = np.frombuffer(raw, dtype=RECORD_DTYPE)
                _validate_chunk(chunk, HEADER_SIZE + done * RECORD_SIZE)
                done += k
                yield chunk
        finally:
            if isinstance(source, (str, os.PathLike)):
                fh.close()

    return TagStream(header, gen())


def read_text_records(path) -> np.ndarray:
    """Parse the plain-text record form; ``#`` starts a comment."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"{path}:{lineno}: expected 'timestamp_ps channel clicks'")
        try:
            t, c, k = (int(p) for p in parts)
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-integer field") from None
        if t < 0 or not (0 <= c <= 255) or not (0 <= k <= 255):
            raise FormatError(f"{path}:{lineno}: field out of range")
        rows.append((t, c, k))
    arr = np.array(rows, dtype=np.int64).reshape(-1, 3)
    rec = make_records(arr[:, 0], arr[:, 1], arr[:, 2])
    _validate_chunk(rec, 0)
    return rec


def write_text_records(records: np.ndarray, path):
    with open(path, "w") as fh:
        for t, c, k in zip(records["timestamp"].tolist(), records["channel"].tolist(), records["clicks"].tolist()):
            fh.write(f"{t} {c} {k}\n")


def open_stream(path) -> TagStream:
    """Open a binary TTAG file, or a text record file (``.txt``); text needs a rep period from the caller."""
    if str(path).endswith(".txt"):
        return TagStream(StreamHeader(0, 0), [read_text_records(path)])
    return read_stream(path)


# --- slotting -------------------------------------------------------------


@dataclass
class SlotBatch:
    """Sparse click totals for the contiguous slot range ``[start, stop)``.

    Only slots holding at least one in-window click are listed.
    """

    start: int
    stop: int
    index: np.ndarray
    signal: np.ndarray
    idler: np.ndarray


def _sum_by_slot(slot, chan, clicks):
    """Collapse records into one (signal, idler) click total per slot."""
    if slot.size == 0:
        e = np.zeros(0, dtype=np.int64)
        return e, e, e
    keys, inv = np.unique(slot, return_inverse=True)
    w = clicks.astype(np.int64)
    s = np.bincount(inv, weights=np.where(chan == SIGNAL, w, 0), minlength=keys.size).astype(np.int64)
    i = np.bincount(inv, weights=np.where(chan == IDLER, w, 0), minlength=keys.size).astype(np.int64)
    return keys, s, i


def assign_slots(times, period: int, half_width: int, ref):
    """Nearest pulse epoch of each time, phase-locked to ``ref`` (the governing sync per record).

    Returns ``(slot, in_window)``; slot is ``epoch // period``.
    """
    times = times.astype(np.int64)
    ref = np.asarray(ref, dtype=np.int64)
    k = np.floor_divide(times - ref + period // 2, period)
    epoch = ref + k * period
    return np.floor_divide(epoch, period), np.abs(times - epoch) <= half_width


class Slotizer:
    """Turn a time-sorted tag stream into contiguous :class:`SlotBatch` objects.

    Each pulse epoch owns a window of ``slot_width`` centred on it. Epochs
    follow the most recent sync record; before the first sync (or without
    any) they sit at ``epoch_offset_ps + k * period``, with the offset
    defaulting to half a period. Clicks outside every window, or outside
    the acquisition, are counted per channel in ``out_of_window``.
    """

    def __init__(self, stream: TagStream, timing=None, *, rep_period_ps=None, slot_width_ps=None,
                 n_slots=None, epoch_offset_ps=None):
        self.stream = stream
        period = rep_period_ps or (timing.period_ps if timing is not None else 0) or stream.header.rep_period
        if not period:
            raise DomainError("no sync records and no rep_period: cannot place slot windows")
        self.period = int(period)
        width = slot_width_ps if slot_width_ps is not None else timing.slot_width_ps
        self.half = int(width) // 2
        if n_slots is None:
            n_slots = timing.n_pulses if timing is not None else None
        self.n_slots = n_slots
        self.phase = self.period // 2 if epoch_offset_ps is None else int(epoch_offset_ps)
        self.out_of_window = {SIGNAL: 0, IDLER: 0}
        self.out_of_order = 0
        self.records = {SIGNAL: 0, IDLER: 0, SYNC: 0}

    def __iter__(self) -> Iterator[SlotBatch]:
        period = self.period
        last_sync = None
        stop = 0
        carry = (np.zeros(0, np.int64),) * 3
        limit = self.n_slots

        for chunk in self.stream.chunks():
            t = chunk["timestamp"].astype(np.int64)
            ch = chunk["channel"]
            cl = chunk["clicks"]
            sync_mask = ch == SYNC
            self.records[SYNC] += int(sync_mask.sum())
            photon = (ch == SIGNAL) | (ch == IDLER)
            for c in (SIGNAL, IDLER):
                self.records[c] += int((ch == c).sum())
            sync_t = t[sync_mask]
            pt, pc, pk = t[photon], ch[photon], cl[photon]

            # governing sync: last sync at or before the record
            fallback = self.phase if last_sync is None else last_sync
            pos = np.searchsorted(sync_t, pt, side="right") - 1
            if sync_t.size:
                ref = np.where(pos >= 0, sync_t[np.maximum(pos, 0)], fallback)
            else:
                ref = np.full(pt.size, fallback, np.int64)
            if sync_t.size:
                last_sync = int(sync_t[-1])

            slot, inwin = assign_slots(pt, period, self.half, ref)
            inside = inwin & (slot >= 0)
            if limit is not None:
                inside &= slot < limit
            for c in (SIGNAL, IDLER):
                self.out_of_window[c] += int((~inside & (pc == c)).sum())
            slot, pc, pk = slot[inside], pc[inside], pk[inside]
            late = slot < stop
            if late.any():
                self.out_of_order += int(late.sum())
                slot, pc, pk = slot[~late], pc[~late], pk[~late]
            keys, s, i = _sum_by_slot(slot, pc, pk)
            keys = np.concatenate([carry[0], keys])
            s = np.concatenate([carry[1], s])
            i = np.concatenate([carry[2], i])
            if keys.size == 0:
                continue
            if carry[0].size:
                keys, inv = np.unique(keys, return_inverse=True)
                s = np.bincount(inv, weights=s, minlength=keys.size).astype(np.int64)
                i = np.bincount(inv, weights=i, minlength=keys.size).astype(np.int64)
            last = int(keys[-1])
            done = keys < last
            if last > stop:
                yield SlotBatch(stop, last, keys[done], s[done], i[done])
                stop = last
            carry = (keys[~done], s[~done], i[~done])

        end = limit
        if end is None:
            end = int(carry[0][-1]) + 1 if carry[0].size else stop
        yield SlotBatch(stop, max(end, stop), *carry)


def slotize(stream: TagStream, timing, **kwargs) -> Slotizer:
    return Slotizer(stream, timing, **kwargs)


# --- counting -------------------------------------------------------------


def _cells(s, i, cap):
    s = np.minimum(s, cap)
    i = np.minimum(i, cap)
    flat = np.bincount(s * (cap + 1) + i, minlength=(cap + 1) ** 2)
    return flat.reshape(cap + 1, cap + 1).astype(np.int64)


def _hist(v, cap):
    return np.bincount(np.minimum(v, cap), minlength=cap + 1).astype(np.int64)


@dataclass
class SlotCounts:
    joint: JointCountMatrix
    accidental: JointCountMatrix
    signal: CountHistogram
    idler: CountHistogram
    diagnostics: dict = field(default_factory=dict)


class SlotCounter:
    """Streaming joint, accidental and marginal counts over ordered slot batches.

    Accidentals pair signal slot ``k`` with idler slot ``(k + offset) mod n``,
    so both matrices sum to ``n`` slots. Memory is bounded by the pending
    ``offset`` slots plus one batch.
    """

    def __init__(self, n_slots: int, cap: int = 3, offset: int = 1, hist_cap: Optional[int] = None):
        if offset < 1:
            raise DomainError("accidental offset must be at least one slot")
        if offset >= n_slots:
            raise DomainError("accidental offset must be shorter than the acquisition")
        self.n = int(n_slots)
        self.cap = cap
        self.offset = offset
        self.hist_cap = cap if hist_cap is None else hist_cap
        self.joint = np.zeros((cap + 1, cap + 1), np.int64)
        self.acc = np.zeros((cap + 1, cap + 1), np.int64)
        self.hs = np.zeros(self.hist_cap + 1, np.int64)
        self.hi = np.zeros(self.hist_cap + 1, np.int64)
        self._seen = 0
        self._acc_done = 0
        self._sig = [np.zeros(0, np.int64), np.zeros(0, np.int64)]
        self._idl = [np.zeros(0, np.int64), np.zeros(0, np.int64)]
        self._wrap = [np.zeros(0, np.int64), np.zeros(0, np.int64)]

    def update(self, batch: SlotBatch):
        if batch.start != self._seen:
            raise DomainError(f"slot batches must be contiguous: expected start {self._seen}, got {batch.start}")
        if batch.stop > self.n:
            raise DomainError("slot batch extends past the acquisition")
        idx = np.asarray(batch.index, np.int64)
        s = np.asarray(batch.signal, np.int64)
        i = np.asarray(batch.idler, np.int64)
        empty = (batch.stop - batch.start) - idx.size
        self.joint += _cells(s, i, self.cap)
        self.joint[0, 0] += empty
        self.hs += _hist(s, self.hist_cap)
        self.hs[0] += empty
        self.hi += _hist(i, self.hist_cap)
        self.hi[0] += empty

        m = s > 0
        self._sig = [np.concatenate([self._sig[0], idx[m]]), np.concatenate([self._sig[1], s[m]])]
        m = i > 0
        shifted = idx[m] - self.offset
        wrap = shifted < 0
        self._wrap = [np.concatenate([self._wrap[0], shifted[wrap] + self.n]), np.concatenate([self._wrap[1], i[m][wrap]])]
        self._idl = [np.concatenate([self._idl[0], shifted[~wrap]]), np.concatenate([self._idl[1], i[m][~wrap]])]
        self._seen = batch.stop
        self._flush(batch.stop - self.offset)

    def _flush(self, upto: int):
        if upto <= self._acc_done:
            return
        ks, vs = self._sig
        ki, vi = self._idl
        ns = np.searchsorted(ks, upto)
        ni = np.searchsorted(ki, upto)
        keys = np.union1d(ks[:ns], ki[:ni])
        sv = np.zeros(keys.size, np.int64)
        iv = np.zeros(keys.size, np.int64)
        sv[np.searchsorted(keys, ks[:ns])] = vs[:ns]
        iv[np.searchsorted(keys, ki[:ni])] = vi[:ni]
        self.acc += _cells(sv, iv, self.cap)
        self.acc[0, 0] += (upto - self._acc_done) - keys.size
        self._sig = [ks[ns:], vs[ns:]]
        self._idl = [ki[ni:], vi[ni:]]
        self._acc_done = upto

    def result(self, diagnostics=None) -> SlotCounts:
        if self._seen != self.n:
            raise DomainError(f"counted {self._seen} of {self.n} slots")
        self._idl = [np.concatenate([self._idl[0], self._wrap[0]]), np.concatenate([self._idl[1], self._wrap[1]])]
        self._wrap = [np.zeros(0, np.int64), np.zeros(0, np.int64)]
        self._flush(self.n)
        return SlotCounts(
            JointCountMatrix(self.joint.copy(), self.n, 0),
            JointCountMatrix(self.acc.copy(), self.n, self.offset),
            CountHistogram(self.hs.copy(), self.n),
            CountHistogram(self.hi.copy(), self.n),
            dict(diagnostics or {}),
        )


def _as_batches(slots):
    batches = list(slots)
    if not batches:
        raise DomainError("no slots")
    return batches


def count_slots(slots, cap: int = 3, offset: int = 1, hist_cap=None, n_slots=None) -> SlotCounts:
    """Joint, accidental and marginal counts in one pass over ordered batches."""
    if n_slots is None and isinstance(slots, Slotizer):
        n_slots = slots.n_slots
    batches = slots if n_slots is not None else _as_batches(slots)
    counter = None
    for b in batches:
        if counter is None:
            counter = SlotCounter(n_slots if n_slots is not None else batches[-1].stop, cap, offset, hist_cap)
        counter.update(b)
    if counter is None:
        raise DomainError("no slots")
    diagnostics = {}
    if isinstance(slots, Slotizer):
        diagnostics = {
            "out_of_window_signal": slots.out_of_window[SIGNAL],
            "out_of_window_idler": slots.out_of_window[IDLER],
            "out_of_order": slots.out_of_order,
            "records_signal": slots.records[SIGNAL],
            "records_idler": slots.records[IDLER],
            "records_sync": slots.records[SYNC],
        }
    return counter.result(diagnostics)


def joint_counts(slots, cap: int = 3) -> JointCountMatrix:
    """Same-slot joint counts; batches may be any set of disjoint ranges."""
    out = None
    for b in slots:
        m = _cells(np.asarray(b.signal, np.int64), np.asarray(b.idler, np.int64), cap)
        m[0, 0] += (b.stop - b.start) - len(b.index)
        part = JointCountMatrix(m, b.stop - b.start, 0)
        out = part if out is None else out + part
    if out is None:
        raise DomainError("no slots")
    return out


def accidental_counts(slots, offset: int, cap: int = 3) -> JointCountMatrix:
    """Signal slot ``k`` paired with idler slot ``k + offset`` (cyclically)."""
    if offset < 1:
        raise DomainError("accidental offset must be at least one slot")
    return count_slots(slots, cap, offset).accidental


def marginal_histogram(slots, channel, cap: int = 3) -> CountHistogram:
    total = 0
    counts = np.zeros(cap + 1, np.int64)
    key = "signal" if channel in (SIGNAL, "signal") else "idler"
    for b in slots:
        v = np.asarray(getattr(b, key), np.int64)
        v = v[v > 0]
        counts += _hist(v, cap)
        n = b.stop - b.start
        counts[0] += n - v.size
        total += n
    return CountHistogram(counts, total)


# --- timing ---------------------------------------------------------------


@dataclass(frozen=True)
class CrossCorrelation:
    centers_ps: np.ndarray
    counts: np.ndarray
    bin_width_ps: int
    fwhm_ps: float


def fwhm(centers, counts) -> float:
    """Full width at half maximum by linear interpolation between bins."""
    counts = np.asarray(counts, dtype=float)
    if counts.max() <= 0:
        return float("nan")
    p = int(np.argmax(counts))
    half = counts[p] / 2
    left = p
    while left > 0 and counts[left - 1] >= half:
        left -= 1
    right = p
    while right < counts.size - 1 and counts[right + 1] >= half:
        right += 1
    if left == 0 or right == counts.size - 1:
        return float("nan")

    def cross(a, b):
        return centers[a] + (half - counts[a]) * (centers[b] - centers[a]) / (counts[b] - counts[a])

    return float(cross(right, right + 1) - cross(left, left - 1))


def cross_correlation(stream: TagStream, channel_a: int, channel_b: int, bin_width: int, span: int) -> CrossCorrelation:
    """Histogram of ``t_a - t_b`` between each ``a`` record and its nearest ``b`` record.

    ``bin_width`` and ``span`` are in picoseconds; differences beyond
    ``span`` are discarded.
    """
    nb = int(span // bin_width)
    hist = np.zeros(2 * nb + 1, np.int64)
    prev_b = np.zeros(0, np.int64)
    pending_a = np.zeros(0, np.int64)
    seen_a = seen_b = 0

    def accumulate(a, b, final=False):
        nonlocal hist
        if a.size == 0 or b.size == 0:
            return a if not final else np.zeros(0, np.int64)
        j = np.searchsorted(b, a)
        defer = (j == b.size) & (not final)
        use = ~defer
        aj = a[use]
        jj = j[use]
        after = b[np.minimum(jj, b.size - 1)]
        before = b[np.maximum(jj - 1, 0)]
        d_after = np.where(jj < b.size, aj - after, np.iinfo(np.int64).min // 2)
        d_before = np.where(jj > 0, aj - before, np.iinfo(np.int64).max // 2)
        d = np.where(np.abs(d_after) < np.abs(d_before), d_after, d_before)
        d = d[np.abs(d) <= span]
        k = np.floor_divide(2 * d + bin_width, 2 * bin_width) + nb  # round half up, no even-bin bias
        k = k[(k >= 0) & (k < hist.size)]
        hist += np.bincount(k, minlength=hist.size)
        return a[defer]

    for chunk in stream.chunks():
        t = chunk["timestamp"].astype(np.int64)
        a = t[chunk["channel"] == channel_a]
        b = t[chunk["channel"] == channel_b]
        seen_a += a.size
        seen_b += b.size
        b_all = np.concatenate([prev_b, b])
        pending_a = accumulate(np.concatenate([pending_a, a]), b_all)
        if b_all.size:
            prev_b = b_all[-1:]
    accumulate(pending_a, prev_b, final=True)
    if seen_a == 0 or seen_b == 0:
        raise DomainError(f"cross-correlation needs records on channels {channel_a} and {channel_b}")
    centers = (np.arange(hist.size) - nb) * bin_width
    return CrossCorrelation(centers, hist, int(bin_width), fwhm(centers, hist))
