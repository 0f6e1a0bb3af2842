"""Flight provisioning and the public announcement registry.

The authority hands each aircraft a fresh master key and chain length,
then publishes everything a verifier needs: icao, boot time, root key,
chain length, slot duration, and the fixed per-slot message count.  The
registry is a line-oriented text file,

    icao_hex,t0,K0_hex,n,d,N

one record per line, so it stays greppable and diff-friendly.  The master
key never appears in the registry.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass
from random import Random

from . import tesla

DEFAULT_SLOT_DURATION = 2.0
DEFAULT_DATA_RATE = 6.0


class ProvisioningError(ValueError):
    """Provisioning request conflicts with an already-active flight."""


class RegistryParseError(ValueError):
    """Registry file line does not match the record format."""


@dataclass(frozen=True)
class SessionProvision:
    """Secret half of a provisioning: stays on the aircraft."""

    master_key: bytes
    n: int


@dataclass(frozen=True)
class Announcement:
    """Public half of a provisioning: consumed by verifiers."""

    icao: int
    t0: float
    root_key: bytes
    n: int
    slot_duration: float
    msgs_per_slot: int

    def to_line(self) -> str:
        return (
            f"{self.icao:06x},{self.t0!r},{self.root_key.hex()},"
            f"{self.n},{self.slot_duration!r},{self.msgs_per_slot}"
        )

    @classmethod
    def from_line(cls, line: str, lineno: int = 0) -> "Announcement":
        parts = line.strip().split(",")
        if len(parts) != 6:
            raise RegistryParseError(f"line {lineno}: expected 6 fields, got {len(parts)}")
        try:
            icao = int(parts[0], 16)
            t0 = float(parts[1])
            root_key = bytes.fromhex(parts[2])
            n = int(parts[3])
            slot_duration = float(parts[4])
            msgs_per_slot = int(parts[5])
        except ValueError as exc:
            raise RegistryParseError(f"line {lineno}: {exc}") from exc
        if len(root_key) != tesla.KEY_BYTES:
            raise RegistryParseError(
                f"line {lineno}: root key must be {2 * tesla.KEY_BYTES} hex chars"
            )
        return cls(icao, t0, root_key, n, slot_duration, msgs_per_slot)


def provision(
    icao: int,
    t0: float,
    n: int = tesla.DEFAULT_CHAIN_LENGTH,
    seed: int | None = None,
    slot_duration: float = DEFAULT_SLOT_DURATION,
    data_rate: float = DEFAULT_DATA_RATE,
    active: dict[int, Announcement] | None = None,
) -> tuple[SessionProvision, Announcement]:
    """Equip one flight with {master key, n} and derive its announcement.

    ``seed`` makes the master key reproducible for tests and simulations;
    without it the key comes from the OS entropy pool.  ``active`` is an
    existing registry to enforce icao uniqueness against.
    """
    if not 0 <= icao < (1 << 24):
        raise ProvisioningError(f"icao must be a 24-bit address, got {icao}")
    if active is not None and icao in active:
        raise ProvisioningError(f"icao {icao:06x} already has an active flight")
    msgs_per_slot = round(data_rate * slot_duration)
    if msgs_per_slot < 1:
        raise ProvisioningError("data_rate x slot_duration must be at least one message")
    if seed is None:
        master_key = secrets.token_bytes(tesla.KEY_BYTES)
    else:
        master_key = Random(seed).getrandbits(8 * tesla.KEY_BYTES).to_bytes(
            tesla.KEY_BYTES, "big"
        )
    root_key = tesla.derive_root_key(master_key, n)
    announcement = Announcement(
        icao=icao,
        t0=t0,
        root_key=root_key,
        n=n,
        slot_duration=slot_duration,
        msgs_per_slot=msgs_per_slot,
    )
    return SessionProvision(master_key=master_key, n=n), announcement


def store_announcements(registry: dict[int, Announcement], path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for ann in registry.values():
            fh.write(ann.to_line() + "\n")


def load_announcements(path: str) -> dict[int, Announcement]:
    registry: dict[int, Announcement] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            ann = Announcement.from_line(line, lineno)
            if ann.icao in registry:
                raise RegistryParseError(f"line {lineno}: duplicate icao {ann.icao:06x}")
            registry[ann.icao] = ann
    return registry
