"""Aircraft-side protocol engine: slot scheduling and frame emission.

Time is cut into slots of duration ``d`` starting at the boot time ``t0``
(slot boundaries are left-closed).  Each slot ``i`` emits, in order:

    * at the slot start, a burst of 3 key frames (type 32) disclosing the
      key that authenticated the previous slot -- slot 0 discloses nothing;
    * the slot's N position frames, evenly spread across the slot;
    * last, 3 digest frames (type 25) carrying the HMAC over exactly those
      N position frames.

Slot ``i`` is authenticated with chain position ``i + 1`` (position 0 is
the public root commitment, so the first usable key sits one step up the
chain).  The key for slot ``i`` therefore never leaves the aircraft until
slot ``i + 1`` has begun, which is the whole security premise: by the time
a key is on the air, the frames it authenticates are already history.

Security frames ride on top of the configured data rate, so a d=2 s,
6 msg/s flight emits 18 frames per slot (9 per second averaged).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import frame_codec, tesla
from .authority import SessionProvision
from .frame_codec import PositionPayload

DEFAULT_DF = 17
DEFAULT_CAPABILITY = 5

# fraction of a slot occupied by one emission step; the grid leaves room
# for N data frames plus the trailing digest burst
_GRID_EXTRA = 4

_EPS = 1e-9  # absorbs float rounding at exact slot boundaries


class PreBootError(ValueError):
    """Timestamp precedes the session boot time."""


def slot_index(now: float, t0: float, d: float) -> int:
    """Slot containing ``now``: floor((now - t0) / d), left-closed."""
    if d <= 0:
        raise ValueError(f"slot duration must be positive, got {d}")
    if now < t0:
        raise PreBootError(f"time {now} precedes boot time {t0}")
    return int(math.floor((now - t0) / d + _EPS))


@dataclass(frozen=True)
class Emission:
    """One scheduled transmission: wire bytes plus its tx timestamp."""

    time: float
    frame: bytes
    kind: str  # "data" | "digest" | "key"
    slot: int


class AircraftSession:
    """Tick-driven emitter for one flight.

    Call :meth:`emit_tick` with a current time and the position to report;
    it returns every emission that has come due since the previous tick,
    in schedule order.  :meth:`next_due_time` lets an event loop tick
    exactly on the schedule.
    """

    def __init__(
        self,
        icao: int,
        provision: SessionProvision,
        t0: float,
        slot_duration: float = 2.0,
        data_rate: float = 6.0,
        df: int = DEFAULT_DF,
        capability: int = DEFAULT_CAPABILITY,
    ):
        if slot_duration <= 0:
            raise ValueError("slot_duration must be positive")
        self.icao = icao
        self.t0 = t0
        self.slot_duration = slot_duration
        self.data_rate = data_rate
        self.msgs_per_slot = round(data_rate * slot_duration)
        if self.msgs_per_slot < 1:
            raise ValueError("data_rate x slot_duration must be at least one message")
        self.df = df
        self.capability = capability
        self.chain = tesla.KeyChain(provision.master_key, provision.n)
        self._step = slot_duration / (self.msgs_per_slot + _GRID_EXTRA)
        self._queue: list[tuple[float, str, int, int]] = []  # (time, kind, slot, seq)
        self._scheduled_through = -1
        self._slot_data: dict[int, list[bytes]] = {}
        self._digest_chunks: dict[int, list[tuple[int, int]]] = {}

    def slot_of(self, now: float) -> int:
        return slot_index(now, self.t0, self.slot_duration)

    def next_due_time(self) -> float:
        """Timestamp of the next scheduled emission."""
        if not self._queue:
            self._schedule_slot(self._scheduled_through + 1)
        return self._queue[0][0]

    def emit_tick(self, now: float, position: PositionPayload) -> list[Emission]:
        """Emit everything due at or before ``now``.

        Data frames emitted by this call all carry ``position``; tick once
        per :meth:`next_due_time` to give every frame a fresh report.
        Raises :class:`tesla.ChainExhaustedError` once the flight outlives
        its chain.
        """
        current = self.slot_of(now)
        while self._scheduled_through < current:
            self._schedule_slot(self._scheduled_through + 1)
        out: list[Emission] = []
        while self._queue and self._queue[0][0] <= now + _EPS:
            when, kind, slot, seq = self._queue.pop(0)
            if kind == "key":
                frame = self._key_frame(slot, seq)
            elif kind == "data":
                frame = self._data_frame(slot, position)
            else:
                frame = self._digest_frame(slot, seq)
            out.append(Emission(time=when, frame=frame, kind=kind, slot=slot))
        return out

    # -- schedule construction -------------------------------------------

    def _schedule_slot(self, i: int) -> None:
        if i + 1 > self.chain.n:
            raise tesla.ChainExhaustedError(
                f"slot {i} needs chain position {i + 1} but chain length is {self.chain.n}"
            )
        start = self.t0 + i * self.slot_duration
        n = self.msgs_per_slot
        if i >= 1:
            for cid in range(tesla.CHUNKS_PER_VALUE):
                self._queue.append((start, "key", i, cid))
        for k in range(n):
            self._queue.append((start + (k + 1) * self._step, "data", i, k))
        for cid in range(tesla.CHUNKS_PER_VALUE):
            self._queue.append((start + (n + 1 + cid) * self._step, "digest", i, cid))
        self._scheduled_through = i

    # -- frame builders ---------------------------------------------------

    def _data_frame(self, slot: int, position: PositionPayload) -> bytes:
        payload = frame_codec.encode_position_payload(position)
        frame = frame_codec.make_frame(self.df, self.capability, self.icao, payload)
        data = frame_codec.encode_frame(frame)
        self._slot_data.setdefault(slot, []).append(data)
        return data

    def _digest_frame(self, slot: int, cid: int) -> bytes:
        if slot not in self._digest_chunks:
            key = self.chain.slot_key(slot + 1).key
            digest = tesla.slot_digest(self._slot_data.pop(slot), key)
            self._digest_chunks[slot] = tesla.chunk_value(digest)
        chunk_id, content = self._digest_chunks[slot][cid]
        if cid == tesla.CHUNKS_PER_VALUE - 1:
            del self._digest_chunks[slot]
        return self._security_frame(frame_codec.TYPE_VERIFICATION_DIGEST, chunk_id, content)

    def _key_frame(self, slot: int, cid: int) -> bytes:
        # slot i's start discloses chain position i, the key of slot i-1
        chunk_id, content = tesla.chunk_value(self.chain.slot_key(slot).key)[cid]
        return self._security_frame(frame_codec.TYPE_VERIFICATION_KEY, chunk_id, content)

    def _security_frame(self, type_code: int, chunk_id: int, content: int) -> bytes:
        payload = frame_codec.encode_security_payload(
            frame_codec.SecurityPayload(type_code=type_code, chunk_id=chunk_id, content=content)
        )
        frame = frame_codec.make_frame(self.df, self.capability, self.icao, payload)
        return frame_codec.encode_frame(frame)
