"""Shared builders for protocol-level tests: a provisioned flight, its
emission stream, and lossless multi-antenna ingestion."""

from skyauth.authority import Announcement, SessionProvision, provision
from skyauth.frame_codec import PositionPayload
from skyauth.sender import AircraftSession, Emission
from skyauth.verifier import CommunityVerifier, Observation, SlotBuffer


def make_flight(
    icao: int = 0xABC001,
    n: int = 64,
    slot_duration: float = 2.0,
    data_rate: float = 6.0,
    seed: int = 11,
) -> tuple[SessionProvision, Announcement, AircraftSession]:
    prov, ann = provision(
        icao, 0.0, n=n, seed=seed, slot_duration=slot_duration, data_rate=data_rate
    )
    session = AircraftSession(
        icao, prov, 0.0, slot_duration=slot_duration, data_rate=data_rate
    )
    return prov, ann, session


def position_at(t: float, count: int) -> PositionPayload:
    """Distinct, moving position report for every emission."""
    return PositionPayload(
        type_code=11,
        t_flag=0,
        f_flag=count % 2,
        altitude=1000,
        latitude=(20000 + int(40 * t) + count) & 0x1FFFF,
        longitude=(40000 + int(25 * t)) & 0x1FFFF,
    )


def run_slots(session: AircraftSession, num_slots: int) -> list[Emission]:
    """Emit slots 0..num_slots-1 plus the key burst opening slot num_slots."""
    horizon = num_slots * session.slot_duration
    emissions: list[Emission] = []
    count = 0
    while True:
        due = session.next_due_time()
        if due > horizon + 1e-9:
            break
        for emission in session.emit_tick(due, position_at(due, count)):
            if emission.kind == "data":
                count += 1
            if emission.slot >= num_slots and emission.kind != "key":
                continue
            emissions.append(emission)
    return emissions


def ingest_all(
    community: CommunityVerifier, emissions: list[Emission], antennas: int = 1
) -> None:
    """Lossless delivery of every emission to every antenna."""
    for emission in emissions:
        for antenna in range(antennas):
            community.ingest(Observation(antenna, emission.time, emission.frame))


def buffer_from_emissions(
    icao: int, slot: int, emissions: list[Emission], antennas: int = 1
) -> SlotBuffer:
    """Build one slot's buffer directly, bypassing the community server.

    Data and digest frames come from the slot itself; the key chunks come
    from the key burst at the start of the following slot.
    """
    from skyauth import frame_codec

    buf = SlotBuffer(icao, slot)
    for emission in emissions:
        frame = frame_codec.decode_frame(emission.frame)
        for antenna in range(antennas):
            if emission.kind == "data" and emission.slot == slot:
                buf.add_data(emission.frame, antenna, emission.time)
            elif frame.is_security:
                sec = frame_codec.decode_security_payload(frame.payload)
                if emission.kind == "digest" and emission.slot == slot:
                    buf.add_digest_chunk(sec.chunk_id, sec.content, antenna, emission.time)
                elif emission.kind == "key" and emission.slot == slot + 1:
                    buf.add_key_chunk(sec.chunk_id, sec.content, antenna, emission.time)
    return buf
