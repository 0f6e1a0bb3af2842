"""Community-server verification: multi-antenna fusion and slot recovery.

Observations from every receiver antenna are fused into per-(aircraft,
slot) buffers.  Data frames are deduplicated by byte content and each one
remembers which antennas reported it; that corroboration count is what the
recovery mode's majority voting runs on.

Verification of a slot needs three things: the slot's data frames, the
digest disclosed at the slot's end, and the slot key disclosed at the
start of the next slot.  A lost key burst is not fatal: any later verified
key hashes back down the chain to every earlier position, so the verifier
keeps the highest verified chain position per aircraft as an anchor and
derives missing keys from it.

Normal mode accepts a slot when the key chains to the root commitment and
the digest over all N frames matches.  Anything that smells like injection
(extra frames, digest mismatch) drops into recovery mode: majority voting
per sub-slot throws out poorly-corroborated frames, then an exhaustive
search over N-subsets of the T survivors looks for the pool matching the
digest.  Subsets are tried most-corroborated first, so with any antenna
advantage the legitimate pool is found almost immediately; the worst case
is C(T, N) digests.  An attacker with coverage equal to the legitimate
one can at most force a rejection, never the acceptance of forged frames.
"""

from __future__ import annotations

import itertools
import math
import statistics
import struct
import threading
from dataclasses import dataclass

from . import frame_codec, tesla
from .authority import Announcement
from .sender import slot_index

DEFAULT_MAX_SUBSETS = 1 << 22
_MAX_KEY_CANDIDATES = 64
_EPS = 1e-9

AUTHENTIC = "Authentic"
RECOVERED = "Recovered"
REJECTED = "Rejected"
INCOMPLETE = "Incomplete"


@dataclass(frozen=True)
class Observation:
    """One frame as seen by one antenna."""

    antenna_id: int
    rx_time: float
    frame: bytes


@dataclass(frozen=True)
class VerificationVerdict:
    status: str
    frames: tuple[bytes, ...] = ()
    subsets_tried: int = 0
    reason: str = ""  # set for Rejected
    missing: str = ""  # set for Incomplete

    @property
    def detail(self) -> str:
        return self.reason or self.missing

    @classmethod
    def authentic(cls, frames: list[bytes]) -> "VerificationVerdict":
        return cls(status=AUTHENTIC, frames=tuple(frames))

    @classmethod
    def recovered(cls, frames: list[bytes], subsets_tried: int) -> "VerificationVerdict":
        return cls(status=RECOVERED, frames=tuple(frames), subsets_tried=subsets_tried)

    @classmethod
    def rejected(cls, reason: str, subsets_tried: int = 0) -> "VerificationVerdict":
        return cls(status=REJECTED, reason=reason, subsets_tried=subsets_tried)

    @classmethod
    def incomplete(cls, missing: str) -> "VerificationVerdict":
        return cls(status=INCOMPLETE, missing=missing)


class SlotBuffer:
    """Deduplicated observations for one (aircraft, slot)."""

    def __init__(self, icao: int, slot: int):
        self.icao = icao
        self.slot = slot
        # frame bytes -> antenna id -> first rx_time
        self.data: dict[bytes, dict[int, float]] = {}
        # chunk id -> content -> antenna id -> first rx_time
        self.digest_chunks: dict[int, dict[int, dict[int, float]]] = {}
        self.key_chunks: dict[int, dict[int, dict[int, float]]] = {}

    def add_data(self, frame: bytes, antenna_id: int, rx_time: float) -> None:
        self.data.setdefault(frame, {}).setdefault(antenna_id, rx_time)

    def add_digest_chunk(self, cid: int, content: int, antenna_id: int, rx_time: float) -> None:
        self.digest_chunks.setdefault(cid, {}).setdefault(content, {}).setdefault(
            antenna_id, rx_time
        )

    def add_key_chunk(self, cid: int, content: int, antenna_id: int, rx_time: float) -> None:
        self.key_chunks.setdefault(cid, {}).setdefault(content, {}).setdefault(
            antenna_id, rx_time
        )

    def antenna_count(self, frame: bytes) -> int:
        return len(self.data[frame])

    def median_rx(self, frame: bytes) -> float:
        return statistics.median(self.data[frame].values())


def canonical_order(buffer: SlotBuffer, frames: list[bytes] | None = None) -> list[bytes]:
    """Reconstructed transmission order: ascending median rx time, ties by
    frame bytes.  This is the order digests are recomputed in."""
    pool = buffer.data.keys() if frames is None else frames
    return sorted(pool, key=lambda f: (buffer.median_rx(f), f))


def majority_filter(
    buffer: SlotBuffer, announcement: Announcement, sub_slots: int | None = None
) -> list[bytes]:
    """Drop frames corroborated by a minority of antennas.

    The slot is cut into ``sub_slots`` windows by median rx time (default
    one per second of slot duration).  Within each window a frame survives
    iff its antenna count reaches half that window's best-received frame,
    rounded up.  Ties survive: a possibly-legitimate frame is never
    dropped on equal evidence.
    """
    s = sub_slots if sub_slots is not None else default_sub_slots(announcement.slot_duration)
    d = announcement.slot_duration
    start = announcement.t0 + buffer.slot * d
    width = d / s
    windows: dict[int, list[bytes]] = {}
    for frame in buffer.data:
        idx = int(math.floor((buffer.median_rx(frame) - start) / width + _EPS))
        windows.setdefault(min(max(idx, 0), s - 1), []).append(frame)
    survivors: list[bytes] = []
    for idx in sorted(windows):
        frames = windows[idx]
        best = max(buffer.antenna_count(f) for f in frames)
        threshold = (best + 1) // 2
        survivors.extend(f for f in frames if buffer.antenna_count(f) >= threshold)
    return canonical_order(buffer, survivors)


def default_sub_slots(slot_duration: float) -> int:
    return max(1, round(slot_duration))


def verify_slot_normal(
    buffer: SlotBuffer,
    announcement: Announcement,
    *,
    sub_slots: int | None = None,
    majority_filtering: bool = True,
    max_subsets: int = DEFAULT_MAX_SUBSETS,
) -> VerificationVerdict:
    """Verify one slot against its own buffered key and digest chunks.

    The two normal-mode checks: the disclosed key must hash back to the
    root commitment, and the digest over all N data frames must match the
    disclosed one.  Injection symptoms fall through to recovery.
    """
    key, key_status = _resolve_key(
        buffer, needed_position=buffer.slot + 1, anchor=(0, announcement.root_key)
    )
    if key is None:
        if key_status == "invalid":
            return VerificationVerdict.rejected("key-chain")
        return VerificationVerdict.incomplete("key")
    return evaluate_slot(
        buffer,
        announcement,
        key,
        sub_slots=sub_slots,
        majority_filtering=majority_filtering,
        max_subsets=max_subsets,
    )


def recover_slot(
    buffer: SlotBuffer,
    announcement: Announcement,
    max_subsets: int = DEFAULT_MAX_SUBSETS,
    *,
    sub_slots: int | None = None,
    majority_filtering: bool = True,
) -> VerificationVerdict:
    """Recovery mode only: majority voting then the N-subset digest search."""
    key, key_status = _resolve_key(
        buffer, needed_position=buffer.slot + 1, anchor=(0, announcement.root_key)
    )
    if key is None:
        if key_status == "invalid":
            return VerificationVerdict.rejected("key-chain")
        return VerificationVerdict.incomplete("key")
    digest, digest_status = _resolve_digest(buffer)
    if digest is None:
        if digest_status == "conflict":
            return VerificationVerdict.rejected("digest-conflict")
        return VerificationVerdict.incomplete("digest")
    return _recover(
        buffer, announcement, key, digest,
        sub_slots=sub_slots, majority_filtering=majority_filtering, max_subsets=max_subsets,
    )


def evaluate_slot(
    buffer: SlotBuffer,
    announcement: Announcement,
    key: bytes,
    *,
    sub_slots: int | None = None,
    majority_filtering: bool = True,
    max_subsets: int = DEFAULT_MAX_SUBSETS,
) -> VerificationVerdict:
    """Digest checks for a slot whose key has already been verified."""
    digest, digest_status = _resolve_digest(buffer)
    if digest is None:
        if digest_status == "conflict":
            return VerificationVerdict.rejected("digest-conflict")
        return VerificationVerdict.incomplete("digest")
    n = announcement.msgs_per_slot
    frames = canonical_order(buffer)
    if len(frames) == n and tesla.slot_digest(frames, key) == digest:
        return VerificationVerdict.authentic(frames)
    if len(frames) < n:
        # frames were lost, not injected; no subset can help
        return VerificationVerdict.incomplete("data-count")
    return _recover(
        buffer, announcement, key, digest,
        sub_slots=sub_slots, majority_filtering=majority_filtering, max_subsets=max_subsets,
    )


def _recover(
    buffer: SlotBuffer,
    announcement: Announcement,
    key: bytes,
    digest: bytes,
    *,
    sub_slots: int | None,
    majority_filtering: bool,
    max_subsets: int,
) -> VerificationVerdict:
    if majority_filtering:
        candidates = majority_filter(buffer, announcement, sub_slots)
    else:
        candidates = canonical_order(buffer)
    n = announcement.msgs_per_slot
    if len(candidates) < n:
        return VerificationVerdict.rejected("insufficient-candidates")
    # most-corroborated candidates first, so the legitimate pool is tried
    # early; ties fall back to transmission order
    ranked = sorted(
        candidates, key=lambda f: (-buffer.antenna_count(f), buffer.median_rx(f), f)
    )
    tried = 0
    for combo in itertools.combinations(ranked, n):
        tried += 1
        if tried > max_subsets:
            return VerificationVerdict.rejected("budget", subsets_tried=tried - 1)
        ordered = canonical_order(buffer, list(combo))
        if tesla.slot_digest(ordered, key) == digest:
            return VerificationVerdict.recovered(ordered, tried)
    return VerificationVerdict.rejected("no-match", subsets_tried=tried)


# -- chunk resolution ------------------------------------------------------


def _corroboration_ranked(chunks: dict[int, dict[int, dict[int, float]]], cid: int) -> list[int]:
    contents = chunks.get(cid, {})
    return sorted(contents, key=lambda c: (-len(contents[c]), c))


def _resolve_digest(buffer: SlotBuffer) -> tuple[bytes | None, str]:
    """Pick the digest supported by the antenna evidence.

    Conflicting contents for a chunk id resolve to the strictly better
    corroborated one; an exact tie is unresolvable and reported as a
    conflict (an attacker mirroring our coverage can only force this far).
    """
    picked: list[tuple[int, int]] = []
    for cid in range(tesla.CHUNKS_PER_VALUE):
        contents = buffer.digest_chunks.get(cid, {})
        if not contents:
            return None, "incomplete"
        ranked = _corroboration_ranked(buffer.digest_chunks, cid)
        if len(ranked) > 1:
            best, runner_up = ranked[0], ranked[1]
            if len(contents[best]) == len(contents[runner_up]):
                return None, "conflict"
        picked.append((cid, ranked[0]))
    return tesla.reassemble_value(picked), "ok"


def _resolve_key(
    buffer: SlotBuffer, needed_position: int, anchor: tuple[int, bytes]
) -> tuple[bytes | None, str]:
    """Reassemble key candidates and keep the one that chains to the anchor.

    Candidate contents are tried in corroboration order, so injected key
    chunks cost a few extra hashes at most; the chain check itself decides
    which candidate is genuine.
    """
    anchor_index, anchor_key = anchor
    per_cid = [_corroboration_ranked(buffer.key_chunks, cid)
               for cid in range(tesla.CHUNKS_PER_VALUE)]
    if any(not options for options in per_cid):
        return None, "incomplete"
    steps = needed_position - anchor_index
    if steps < 1:
        return None, "incomplete"
    for combo in itertools.islice(itertools.product(*per_cid), _MAX_KEY_CANDIDATES):
        candidate = tesla.reassemble_value(list(enumerate(combo)))
        if tesla.hash_times(candidate, steps) == anchor_key:
            return candidate, "ok"
    return None, "invalid"


# -- the community server ---------------------------------------------------


@dataclass
class VerdictRecord:
    icao: int
    slot: int
    verdict: VerificationVerdict
    data_frames: int = 0

    def csv_row(self) -> str:
        v = self.verdict
        return (
            f"{self.icao:06x},{self.slot},{v.status},{v.detail},"
            f"{self.data_frames},{len(v.frames)},{v.subsets_tried}"
        )


VERDICT_CSV_HEADER = "icao,slot,verdict,detail,data_frames,returned_frames,subsets_tried"


class CommunityVerifier:
    """Ingests antenna feeds and verdicts every observed (aircraft, slot).

    In secured mode (the default) frames are buffered until their slot can
    be verified.  In unsecured mode security frames are discarded and data
    frames pass straight through unauthenticated.
    """

    def __init__(
        self,
        registry: dict[int, Announcement],
        *,
        sub_slots: int | None = None,
        majority_filtering: bool = True,
        max_subsets: int = DEFAULT_MAX_SUBSETS,
        secured: bool = True,
    ):
        self.registry = registry
        self.sub_slots = sub_slots
        self.majority_filtering = majority_filtering
        self.max_subsets = max_subsets
        self.secured = secured
        self.buffers: dict[tuple[int, int], SlotBuffer] = {}
        self.quarantined: dict[int, int] = {}
        self.undecodable = 0
        self.stray_security = 0
        self.passthrough: list[bytes] = []  # unsecured mode only
        self._lock = threading.Lock()

    def ingest(self, obs: Observation) -> None:
        """Route one observation into its slot buffer (thread-safe)."""
        try:
            frame = frame_codec.decode_frame(obs.frame)
        except frame_codec.FrameLengthError:
            with self._lock:
                self.undecodable += 1
            return
        with self._lock:
            if not frame.parity_ok:
                self.undecodable += 1
                return
            if not self.secured:
                if frame.is_security:
                    self.stray_security += 1
                else:
                    self.passthrough.append(obs.frame)
                return
            ann = self.registry.get(frame.icao)
            if ann is None:
                self.quarantined[frame.icao] = self.quarantined.get(frame.icao, 0) + 1
                return
            if obs.rx_time < ann.t0:
                self.stray_security += 1
                return
            slot = slot_index(obs.rx_time, ann.t0, ann.slot_duration)
            if frame.is_security:
                sec = frame_codec.decode_security_payload(frame.payload)
                if sec.type_code == frame_codec.TYPE_VERIFICATION_DIGEST:
                    self._buffer(frame.icao, slot).add_digest_chunk(
                        sec.chunk_id, sec.content, obs.antenna_id, obs.rx_time
                    )
                else:
                    # a key burst at the start of slot i discloses slot i-1's key
                    if slot < 1:
                        self.stray_security += 1
                        return
                    self._buffer(frame.icao, slot - 1).add_key_chunk(
                        sec.chunk_id, sec.content, obs.antenna_id, obs.rx_time
                    )
            else:
                self._buffer(frame.icao, slot).add_data(
                    obs.frame, obs.antenna_id, obs.rx_time
                )

    def _buffer(self, icao: int, slot: int) -> SlotBuffer:
        key = (icao, slot)
        buf = self.buffers.get(key)
        if buf is None:
            buf = self.buffers[key] = SlotBuffer(icao, slot)
        return buf

    def finalize_all(self) -> list[VerdictRecord]:
        """Verdict every buffered slot, resolving keys across the whole run.

        Keys are resolved in a first pass that walks each aircraft's slots
        in order and advances the chain anchor; a second pass derives any
        positions the first one skipped (telescoping down from the highest
        verified position) and evaluates each slot.
        """
        records: list[VerdictRecord] = []
        by_icao: dict[int, list[SlotBuffer]] = {}
        for (icao, _), buf in self.buffers.items():
            by_icao.setdefault(icao, []).append(buf)
        for icao in sorted(by_icao):
            ann = self.registry[icao]
            bufs = sorted(by_icao[icao], key=lambda b: b.slot)
            known, burst_invalid = self._resolve_keys(bufs, ann)
            for buf in bufs:
                key = known.get(buf.slot + 1)
                if key is None:
                    if buf.slot in burst_invalid:
                        verdict = VerificationVerdict.rejected("key-chain")
                    else:
                        verdict = VerificationVerdict.incomplete("key")
                else:
                    verdict = evaluate_slot(
                        buf, ann, key,
                        sub_slots=self.sub_slots,
                        majority_filtering=self.majority_filtering,
                        max_subsets=self.max_subsets,
                    )
                records.append(
                    VerdictRecord(icao, buf.slot, verdict, data_frames=len(buf.data))
                )
        for icao in sorted(self.quarantined):
            records.append(
                VerdictRecord(icao, -1, VerificationVerdict.incomplete("announcement"))
            )
        records.sort(key=lambda r: (r.icao, r.slot))
        return records

    def _resolve_keys(
        self, bufs: list[SlotBuffer], ann: Announcement
    ) -> tuple[dict[int, bytes], set[int]]:
        known: dict[int, bytes] = {0: ann.root_key}
        burst_invalid: set[int] = set()
        anchor = (0, ann.root_key)
        for buf in bufs:
            position = buf.slot + 1
            key, status = _resolve_key(buf, position, anchor)
            if key is not None:
                known[position] = key
                anchor = (position, key)
            elif status == "invalid":
                burst_invalid.add(buf.slot)
        top = max(known)
        for position in range(top - 1, 0, -1):
            if position not in known:
                known[position] = tesla.hash_step(known[position + 1])
        return known, burst_invalid


# -- feed files --------------------------------------------------------------

_FEED_STRUCT = struct.Struct("<Hd")
FEED_RECORD_BYTES = _FEED_STRUCT.size + frame_codec.FRAME_BYTES


class FeedFormatError(ValueError):
    """Feed file byte/line content does not match either feed format."""


def write_feed(observations: list[Observation], path: str, binary: bool = True) -> None:
    """Dump observations as fixed 24-byte records or as text lines."""
    if binary:
        with open(path, "wb") as fh:
            for obs in observations:
                fh.write(_FEED_STRUCT.pack(obs.antenna_id, obs.rx_time) + obs.frame)
    else:
        with open(path, "w", encoding="ascii") as fh:
            for obs in observations:
                fh.write(f"{obs.antenna_id},{obs.rx_time!r},{obs.frame.hex()}\n")


def read_feed(path: str) -> list[Observation]:
    """Load a feed file, sniffing the binary and text forms apart."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if _looks_like_text(blob):
        return _read_text_feed(blob)
    return _read_binary_feed(blob)


def _looks_like_text(blob: bytes) -> bool:
    head = blob[:256]
    if not head:
        return True
    try:
        text = head.decode("ascii")
    except UnicodeDecodeError:
        return False
    return "," in text.splitlines()[0]


def _read_binary_feed(blob: bytes) -> list[Observation]:
    if len(blob) % FEED_RECORD_BYTES != 0:
        offset = len(blob) - (len(blob) % FEED_RECORD_BYTES)
        raise FeedFormatError(f"truncated binary feed record at byte offset {offset}")
    out = []
    for off in range(0, len(blob), FEED_RECORD_BYTES):
        antenna_id, rx_time = _FEED_STRUCT.unpack_from(blob, off)
        frame = blob[off + _FEED_STRUCT.size: off + FEED_RECORD_BYTES]
        out.append(Observation(antenna_id, rx_time, frame))
    return out


def _read_text_feed(blob: bytes) -> list[Observation]:
    out = []
    for lineno, line in enumerate(blob.decode("ascii").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise FeedFormatError(f"line {lineno}: expected 3 fields, got {len(parts)}")
        try:
            obs = Observation(int(parts[0]), float(parts[1]), bytes.fromhex(parts[2]))
        except ValueError as exc:
            raise FeedFormatError(f"line {lineno}: {exc}") from exc
        if len(obs.frame) != frame_codec.FRAME_BYTES:
            raise FeedFormatError(
                f"line {lineno}: frame must be {2 * frame_codec.FRAME_BYTES} hex chars"
            )
        out.append(obs)
    return out


def write_verdicts(records: list[VerdictRecord], path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(VERDICT_CSV_HEADER + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")
