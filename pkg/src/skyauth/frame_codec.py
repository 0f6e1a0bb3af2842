"""Bit-exact codec for 112-bit extended-squitter frames and their payloads.

Frame layout (14 bytes, MSB first):

    DF (5) | CA (3) | ICAO (24) | payload (56) | PI (24)

The 56-bit payload is either a position report or one of the two security
payload types used for slot authentication:

    position:  type (8) | T (1) | F (1) | altitude (12) | lat (17) | lon (17)
    security:  type (8) | chunk id (2) | content (46)      type in {25, 32}

Type 25 carries a chunk of the slot's verification digest, type 32 a chunk
of a disclosed verification key.  Position sub-fields are carried opaquely;
no CPR decoding happens here.

PI is a CRC-24 over the first 88 bits (generator 0xFFF409, zero init, no
final xor), so frames interoperate with conventional Mode-S tooling.
"""

from __future__ import annotations

from dataclasses import dataclass

FRAME_BYTES = 14
PI_INPUT_BYTES = 11  # header + payload, 88 bits

TYPE_VERIFICATION_DIGEST = 25
TYPE_VERIFICATION_KEY = 32
SECURITY_TYPE_CODES = frozenset((TYPE_VERIFICATION_DIGEST, TYPE_VERIFICATION_KEY))

_CRC_POLY = 0xFFF409


def _build_crc_table() -> list[int]:
    table = []
    for byte in range(256):
        reg = byte << 16
        for _ in range(8):
            if reg & 0x800000:
                reg = ((reg << 1) ^ _CRC_POLY) & 0xFFFFFF
            else:
                reg = (reg << 1) & 0xFFFFFF
        table.append(reg)
    return table


_CRC_TABLE = _build_crc_table()


class FrameLengthError(ValueError):
    """Input is not the exact byte length the operation requires."""


class FieldOverflowError(ValueError):
    """A field value does not fit in its declared bit width."""


class NotSecurityPayloadError(ValueError):
    """Payload type code is not one of the security types (25, 32)."""


def compute_pi(header_and_payload: bytes) -> int:
    """CRC-24 of the 88-bit frame prefix (the PI field value)."""
    if len(header_and_payload) != PI_INPUT_BYTES:
        raise FrameLengthError(
            f"PI input must be {PI_INPUT_BYTES} bytes, got {len(header_and_payload)}"
        )
    crc = 0
    for byte in header_and_payload:
        crc = ((crc << 8) & 0xFFFFFF) ^ _CRC_TABLE[((crc >> 16) ^ byte) & 0xFF]
    return crc


def _check_width(name: str, value: int, bits: int) -> None:
    if not 0 <= value < (1 << bits):
        raise FieldOverflowError(f"{name} must fit in {bits} bits, got {value}")


@dataclass(frozen=True)
class Es1090Frame:
    """One 112-bit extended-squitter frame.

    ``pi`` holds whatever was on the wire; ``parity_ok`` tells whether it
    matches the CRC of the first 88 bits.  Frames built with
    :func:`make_frame` always carry a consistent PI.
    """

    df: int
    capability: int
    icao: int
    payload: int
    pi: int

    def __post_init__(self) -> None:
        _check_width("df", self.df, 5)
        _check_width("capability", self.capability, 3)
        _check_width("icao", self.icao, 24)
        _check_width("payload", self.payload, 56)
        _check_width("pi", self.pi, 24)

    @property
    def parity_ok(self) -> bool:
        return self.pi == compute_pi(self._prefix_bytes())

    @property
    def type_code(self) -> int:
        """Leading 8 bits of the payload."""
        return (self.payload >> 48) & 0xFF

    @property
    def is_security(self) -> bool:
        return self.type_code in SECURITY_TYPE_CODES

    def _prefix_bytes(self) -> bytes:
        word = (self.df << 83) | (self.capability << 80) | (self.icao << 56) | self.payload
        return word.to_bytes(PI_INPUT_BYTES, "big")


def make_frame(df: int, capability: int, icao: int, payload: int) -> Es1090Frame:
    """Build a frame with the PI field computed from the other fields."""
    frame = Es1090Frame(df=df, capability=capability, icao=icao, payload=payload, pi=0)
    return Es1090Frame(df=df, capability=capability, icao=icao, payload=payload,
                       pi=compute_pi(frame._prefix_bytes()))


def encode_frame(frame: Es1090Frame) -> bytes:
    """Serialize to 14 bytes; PI is recomputed from the first 88 bits."""
    prefix = frame._prefix_bytes()
    return prefix + compute_pi(prefix).to_bytes(3, "big")


def decode_frame(data: bytes) -> Es1090Frame:
    """Parse 14 bytes into a frame, preserving the on-wire PI.

    Frames that fail the parity check are returned with ``parity_ok``
    False rather than dropped, so callers can count or study them.
    """
    if len(data) != FRAME_BYTES:
        raise FrameLengthError(f"frame must be {FRAME_BYTES} bytes, got {len(data)}")
    word = int.from_bytes(data, "big")
    return Es1090Frame(
        df=(word >> 107) & 0x1F,
        capability=(word >> 104) & 0x07,
        icao=(word >> 80) & 0xFFFFFF,
        payload=(word >> 24) & 0xFFFFFFFFFFFFFF,
        pi=word & 0xFFFFFF,
    )


def frame_to_hex(frame: Es1090Frame) -> str:
    """28-char uppercase hex form used in logs and CLI output."""
    return encode_frame(frame).hex().upper()


def frame_from_hex(text: str) -> Es1090Frame:
    cleaned = text.strip()
    if len(cleaned) != 2 * FRAME_BYTES:
        raise FrameLengthError(f"frame hex must be {2 * FRAME_BYTES} chars, got {len(cleaned)}")
    return decode_frame(bytes.fromhex(cleaned))


@dataclass(frozen=True)
class PositionPayload:
    """Opaque position report; sub-fields are carried, never interpreted."""

    type_code: int
    t_flag: int
    f_flag: int
    altitude: int
    latitude: int
    longitude: int

    def __post_init__(self) -> None:
        _check_width("type_code", self.type_code, 8)
        if self.type_code in SECURITY_TYPE_CODES:
            raise FieldOverflowError(
                f"type_code {self.type_code} is reserved for security payloads"
            )
        _check_width("t_flag", self.t_flag, 1)
        _check_width("f_flag", self.f_flag, 1)
        _check_width("altitude", self.altitude, 12)
        _check_width("latitude", self.latitude, 17)
        _check_width("longitude", self.longitude, 17)


def encode_position_payload(p: PositionPayload) -> int:
    return (
        (p.type_code << 48)
        | (p.t_flag << 47)
        | (p.f_flag << 46)
        | (p.altitude << 34)
        | (p.latitude << 17)
        | p.longitude
    )


def decode_position_payload(payload: int) -> PositionPayload:
    _check_width("payload", payload, 56)
    return PositionPayload(
        type_code=(payload >> 48) & 0xFF,
        t_flag=(payload >> 47) & 0x1,
        f_flag=(payload >> 46) & 0x1,
        altitude=(payload >> 34) & 0xFFF,
        latitude=(payload >> 17) & 0x1FFFF,
        longitude=payload & 0x1FFFF,
    )


@dataclass(frozen=True)
class SecurityPayload:
    """One 46-bit chunk of a digest (type 25) or disclosed key (type 32)."""

    type_code: int
    chunk_id: int
    content: int

    def __post_init__(self) -> None:
        if self.type_code not in SECURITY_TYPE_CODES:
            raise FieldOverflowError(
                f"security type_code must be 25 or 32, got {self.type_code}"
            )
        _check_width("chunk_id", self.chunk_id, 2)
        _check_width("content", self.content, 46)


def encode_security_payload(p: SecurityPayload) -> int:
    return (p.type_code << 48) | (p.chunk_id << 46) | p.content


def decode_security_payload(payload: int) -> SecurityPayload:
    _check_width("payload", payload, 56)
    type_code = (payload >> 48) & 0xFF
    if type_code not in SECURITY_TYPE_CODES:
        raise NotSecurityPayloadError(f"type_code {type_code} is not a security payload")
    return SecurityPayload(
        type_code=type_code,
        chunk_id=(payload >> 46) & 0x3,
        content=payload & 0x3FFFFFFFFFFF,
    )


def classify_payload(payload: int) -> PositionPayload | SecurityPayload:
    """Split the payload space by type code; 25/32 are security, rest position."""
    if ((payload >> 48) & 0xFF) in SECURITY_TYPE_CODES:
        return decode_security_payload(payload)
    return decode_position_payload(payload)
