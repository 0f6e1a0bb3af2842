"""Closed-form calculators for overhead, loss tolerance, and recovery cost.

These reproduce the protocol's quantitative behavior without simulation:

    * bandwidth overhead: security frames per slot over data frames per
      slot, as a percentage;
    * slot verification success under per-frame loss probability p: the
      chance that every one of the ``window`` critical frames arrives,
      (1 - p) ** window;
    * recovery worst case: C(T, N) digest computations to sift N real
      frames out of T candidates.

The hierarchical-signature comparison scheme is represented only by its
published message counts (23 frames per authenticated payload, 2200 %
overhead); none of its cryptography is implemented here.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

CHUNK_CONTENT_BITS = 46

HIBS_WINDOW_MESSAGES = 23
HIBS_OVERHEAD_PERCENT = 2200.0
DEFAULT_BASELINE_RATE = 6.2  # the standard's recommended max msgs/s


@dataclass(frozen=True)
class OverheadParams:
    key_bits: int = 128
    digest_bits: int = 128
    slot_duration: float = 2.0
    data_rate: float = 6.0
    chunk_bits: int = CHUNK_CONTENT_BITS
    baseline_rate: float = DEFAULT_BASELINE_RATE

    @property
    def security_frames_per_slot(self) -> int:
        return math.ceil(self.key_bits / self.chunk_bits) + math.ceil(
            self.digest_bits / self.chunk_bits
        )

    @property
    def data_frames_per_slot(self) -> float:
        return self.data_rate * self.slot_duration


def overhead_percent(p: OverheadParams) -> float:
    """Security frames per slot over data frames per slot, in percent."""
    if p.slot_duration <= 0:
        raise ValueError("slot_duration must be positive")
    if p.data_rate <= 0:
        raise ValueError("data_rate must be positive")
    return 100.0 * p.security_frames_per_slot / p.data_frames_per_slot


def augmented_rate(p: OverheadParams) -> float:
    """Total message rate once security frames ride on the baseline rate."""
    return p.baseline_rate + p.security_frames_per_slot / p.slot_duration


def slot_success_prob(p_loss: float, window_msgs: int) -> float:
    """Probability that all ``window_msgs`` critical frames survive loss p."""
    if not 0.0 <= p_loss <= 1.0:
        raise ValueError("p_loss must be within [0, 1]")
    if window_msgs < 0:
        raise ValueError("window_msgs must be >= 0")
    return (1.0 - p_loss) ** window_msgs

def window_messages(
    slot_duration: float, data_rate: float = 6.0, digest_bits: int = 128,
    chunk_bits: int = CHUNK_CONTENT_BITS,
) -> int:
    """Frames that must all arrive for a slot to verify on the spot.

    That is the slot's data frames plus its digest chunks.  Key frames
    are excluded: a lost key burst is recovered by hashing any later
    disclosed key back down the chain, so keys do not gate a slot as long
    as the stream continues.  For a 2 s slot at 6 msg/s this gives the
    familiar 12 + 3 = 15 frame window.
    """
    return round(data_rate * slot_duration) + math.ceil(digest_bits / chunk_bits)


def recovery_worst_case(t: int, n: int) -> int:
    """Exact C(t, n): digests needed to try every n-subset of t candidates."""
    if n < 0 or t < n:
        raise ValueError(f"need t >= n >= 0, got t={t} n={n}")
    return math.comb(t, n)


# -- parameter sweeps ---------------------------------------------------------


def overhead_sweep(
    digest_bits_values: list[int] | None = None,
    slot_durations: list[float] | None = None,
    key_bits: int = 128,
    data_rate: float = 6.0,
) -> tuple[list[str], list[dict]]:
    """Overhead grid over digest size and slot duration (long form)."""
    digest_bits_values = digest_bits_values or list(range(64, 257, 32))
    slot_durations = slot_durations or [float(d) for d in range(1, 11)]
    if not digest_bits_values or not slot_durations:
        raise ValueError("empty parameter range")
    rows = []
    for digest_bits in digest_bits_values:
        for d in slot_durations:
            params = OverheadParams(
                key_bits=key_bits, digest_bits=digest_bits,
                slot_duration=d, data_rate=data_rate,
            )
            rows.append({
                "digest_bits": digest_bits,
                "slot_duration": d,
                "overhead_percent": round(overhead_percent(params), 6),
            })
    return ["digest_bits", "slot_duration", "overhead_percent"], rows


def loss_sweep(
    p_values: list[float] | None = None,
    slot_durations: list[float] | None = None,
    data_rate: float = 6.0,
) -> tuple[list[str], list[dict]]:
    """Slot success curves vs loss probability, one column per slot
    duration plus the 23-message comparison scheme."""
    if p_values is None:
        p_values = [i / 100 for i in range(0, 31)]
    slot_durations = slot_durations or [1.0, 2.0, 5.0]
    if not p_values or not slot_durations:
        raise ValueError("empty parameter range")
    columns = ["p_loss"]
    windows = {}
    for d in slot_durations:
        name = f"success_d{d:g}"
        columns.append(name)
        windows[name] = window_messages(d, data_rate)
    columns.append("success_hibs")
    rows = []
    for p in p_values:
        row: dict = {"p_loss": round(p, 6)}
        for name, window in windows.items():
            row[name] = round(slot_success_prob(p, window), 9)
        row["success_hibs"] = round(slot_success_prob(p, HIBS_WINDOW_MESSAGES), 9)
        rows.append(row)
    return columns, rows


def recovery_sweep(
    adversary_rates: list[float] | None = None,
    slot_durations: list[float] | None = None,
    data_rate: float = 6.0,
) -> tuple[list[str], list[dict]]:
    """Worst-case recovery computations vs injection rate.

    For a slot of duration d the verifier holds N = rate * d real frames
    plus J = adv_rate * d injected ones; the comparison scheme needs its
    whole 23-message window clean, so its candidate pool grows with the
    time that window spans.
    """
    adversary_rates = adversary_rates or [float(a) for a in range(1, 7)]
    slot_durations = slot_durations or [1.0, 2.0, 5.0]
    if not adversary_rates or not slot_durations:
        raise ValueError("empty parameter range")
    columns = ["adversary_rate"] + [f"subsets_d{d:g}" for d in slot_durations]
    columns.append("subsets_hibs")
    rows = []
    for rate in adversary_rates:
        row: dict = {"adversary_rate": rate}
        for d in slot_durations:
            n = round(data_rate * d)
            j = math.ceil(rate * d)
            row[f"subsets_d{d:g}"] = recovery_worst_case(n + j, n)
        n = HIBS_WINDOW_MESSAGES
        j = math.ceil(rate * n / data_rate)
        row["subsets_hibs"] = recovery_worst_case(n + j, n)
        rows.append(row)
    return columns, rows


def write_csv(path: str, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
