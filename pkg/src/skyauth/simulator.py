"""Deterministic desk-scale simulation of flights, antennas, and attacks.

Everything is driven by one seed: aircraft provisioning, per-antenna
channel draws, and adversary payloads all derive their randomness from
it, so a given config always produces the identical run report.

The channel is modelled per antenna: every emitted frame is delivered or
dropped independently (Bernoulli), or through a two-state burst process
where a bad state swallows whole runs of frames.  The adversary is a
ground-level injector: it spoofs the target aircraft's address at up to
the standard's 6 msg/s and reaches only its own subset of antennas, which
is exactly the asymmetry the majority filter exploits.

Adversary strategies:

    ghost  divergent position reports under the target's address
    dos    conflicting digest chunks plus ghost frames, meant to be run
           with coverage equal to the legitimate one; it can force slots
           to be rejected but never to verify with forged content
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from random import Random

from . import frame_codec, verifier as verifier_mod
from .authority import Announcement, provision
from .frame_codec import PositionPayload
from .sender import AircraftSession, Emission
from .verifier import (
    DEFAULT_MAX_SUBSETS,
    CommunityVerifier,
    Observation,
    VerdictRecord,
)

MAX_INJECTION_RATE = 6.0  # stealth cap: stay within the standard's rate


class ConfigError(ValueError):
    """Scenario configuration rejected; message names the offending field."""


@dataclass(frozen=True)
class AircraftSpec:
    icao: int
    lat0: int = 20000
    lon0: int = 40000
    altitude: int = 1000
    vlat: float = 37.0  # opaque payload units per second
    vlon: float = 23.0
    type_code: int = 11


@dataclass(frozen=True)
class AdversarySpec:
    strategy: str = "ghost"
    rate: float = 6.0
    coverage: float = 2  # int count of antennas, or a fraction < 1
    target: int | None = None  # spoofed icao; default first aircraft


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    num_slots: int = 10
    slot_duration: float = 2.0
    data_rate: float = 6.0
    antennas: int = 1
    loss: float = 0.0
    channel_model: str = "iid"  # iid | burst
    burst_enter: float = 0.05
    burst_exit: float = 0.5
    aircraft: tuple[AircraftSpec, ...] = (AircraftSpec(icao=0xABC001),)
    adversary: AdversarySpec | None = None
    chain_length: int | None = None  # default: num_slots + 2
    sub_slots: int | None = None
    majority_filtering: bool = True
    max_subsets: int = DEFAULT_MAX_SUBSETS


def validate_config(config: ScenarioConfig) -> None:
    if config.num_slots < 1:
        raise ConfigError("num_slots: must be >= 1")
    if config.slot_duration <= 0:
        raise ConfigError("slot_duration: must be positive")
    if config.data_rate <= 0:
        raise ConfigError("data_rate: must be positive")
    if config.antennas < 1:
        raise ConfigError("antennas: must be >= 1")
    if not 0.0 <= config.loss <= 1.0:
        raise ConfigError("loss: must be within [0, 1]")
    if config.channel_model not in ("iid", "burst"):
        raise ConfigError(f"channel_model: unknown model {config.channel_model!r}")
    if not 0.0 <= config.burst_enter <= 1.0:
        raise ConfigError("burst_enter: must be within [0, 1]")
    if not 0.0 <= config.burst_exit <= 1.0:
        raise ConfigError("burst_exit: must be within [0, 1]")
    if not config.aircraft:
        raise ConfigError("aircraft: at least one aircraft required")
    icaos = [a.icao for a in config.aircraft]
    if len(set(icaos)) != len(icaos):
        raise ConfigError("aircraft: duplicate icao")
    adv = config.adversary
    if adv is not None:
        if adv.strategy not in ("ghost", "dos"):
            raise ConfigError(f"adversary.strategy: unknown strategy {adv.strategy!r}")
        if not 0 < adv.rate <= MAX_INJECTION_RATE:
            raise ConfigError(
                f"adversary.rate: must be within (0, {MAX_INJECTION_RATE}] msgs/s"
            )
        if resolve_coverage(adv.coverage, config.antennas) < 1:
            raise ConfigError("adversary.coverage: resolves to zero antennas")
        if adv.target is not None and adv.target not in icaos:
            raise ConfigError("adversary.target: not among configured aircraft")
        if adv.strategy == "dos" and round(adv.rate * config.slot_duration) < 3:
            raise ConfigError("adversary.rate: dos needs at least 3 frames per slot")


def resolve_coverage(coverage: float, antennas: int) -> int:
    """Antenna count an adversary reaches: an absolute count or a fraction."""
    if 0 < coverage < 1:
        return min(antennas, max(1, round(coverage * antennas)))
    return min(antennas, int(coverage))


def sample_channel(rng: Random, p: float) -> bool:
    """One Bernoulli delivery draw: True means the frame got through."""
    if not 0.0 <= p <= 1.0:
        raise ConfigError("loss: must be within [0, 1]")
    return rng.random() >= p


class BernoulliChannel:
    def __init__(self, rng: Random, p: float):
        self.rng = rng
        self.p = p

    def deliver(self) -> bool:
        return self.rng.random() >= self.p


class BurstChannel:
    """Two-state loss process: the good state always delivers, the burst
    state always drops; transitions happen after each frame."""

    def __init__(self, rng: Random, p_enter: float, p_exit: float):
        self.rng = rng
        self.p_enter = p_enter
        self.p_exit = p_exit
        self.in_burst = False

    def deliver(self) -> bool:
        delivered = not self.in_burst
        if self.in_burst:
            if self.rng.random() < self.p_exit:
                self.in_burst = False
        elif self.rng.random() < self.p_enter:
            self.in_burst = True
        return delivered


@dataclass
class RunReport:
    """Everything a scenario produced, with the raw observations on request."""

    config: ScenarioConfig
    records: list[VerdictRecord]
    ground_truth: dict[tuple[int, int], tuple[bytes, ...]]
    emitted_data: int
    emitted_security: int
    emitted_adversary: int
    offered_per_antenna: list[int]
    delivered_per_antenna: list[int]
    slots_complete_per_antenna: list[int]
    server_delivered_emissions: int
    emitted_total: int
    observations: list[Observation] = field(default_factory=list)

    def verdict_counts(self) -> dict[str, int]:
        counts = {
            verifier_mod.AUTHENTIC: 0,
            verifier_mod.RECOVERED: 0,
            verifier_mod.REJECTED: 0,
            verifier_mod.INCOMPLETE: 0,
        }
        for rec in self.records:
            counts[rec.verdict.status] += 1
        return counts

    @property
    def slot_pairs(self) -> int:
        return self.config.num_slots * len(self.config.aircraft)

    def slot_success_rate(self) -> float:
        return self.verdict_counts()[verifier_mod.AUTHENTIC] / self.slot_pairs

    def verified_rate(self) -> float:
        counts = self.verdict_counts()
        good = counts[verifier_mod.AUTHENTIC] + counts[verifier_mod.RECOVERED]
        return good / self.slot_pairs

    def server_frame_delivery(self) -> float:
        return self.server_delivered_emissions / self.emitted_total

    def antenna_frame_delivery(self, antenna_id: int) -> float:
        offered = self.offered_per_antenna[antenna_id]
        return self.delivered_per_antenna[antenna_id] / offered if offered else 0.0

    def antenna_slot_success(self, antenna_id: int) -> float:
        return self.slots_complete_per_antenna[antenna_id] / self.slot_pairs

    def overhead_measured_percent(self) -> float:
        return 100.0 * self.emitted_security / self.emitted_data

    def max_subsets_tried(self) -> int:
        return max((r.verdict.subsets_tried for r in self.records), default=0)

    def summary_text(self) -> str:
        c = self.config
        counts = self.verdict_counts()
        adv = "none" if c.adversary is None else (
            f"{c.adversary.strategy} rate={c.adversary.rate:g} "
            f"coverage={resolve_coverage(c.adversary.coverage, c.antennas)}"
        )
        lines = [
            f"scenario: seed={c.seed} slots={c.num_slots} aircraft={len(c.aircraft)} "
            f"antennas={c.antennas} model={c.channel_model} loss={c.loss:g} adversary={adv}",
            f"verdicts: authentic={counts[verifier_mod.AUTHENTIC]} "
            f"recovered={counts[verifier_mod.RECOVERED]} "
            f"rejected={counts[verifier_mod.REJECTED]} "
            f"incomplete={counts[verifier_mod.INCOMPLETE]}",
            f"slot_success_rate={self.slot_success_rate():.6f}",
            f"verified_rate={self.verified_rate():.6f}",
            f"server_frame_delivery={self.server_frame_delivery():.6f}",
            f"overhead_measured_percent={self.overhead_measured_percent():.2f}",
            f"max_subsets_tried={self.max_subsets_tried()}",
        ]
        for a in range(c.antennas):
            lines.append(
                f"antenna {a}: delivered={self.delivered_per_antenna[a]}"
                f"/{self.offered_per_antenna[a]} "
                f"complete_slots={self.slots_complete_per_antenna[a]}/{self.slot_pairs}"
            )
        return "\n".join(lines)

    def write_report_csv(self, path: str) -> None:
        verifier_mod.write_verdicts(self.records, path)


@dataclass(frozen=True)
class _Event:
    time: float
    source: int  # aircraft index, or -1 for the adversary
    seq: int
    frame: bytes
    kind: str
    icao: int
    slot: int


def run_scenario(config: ScenarioConfig, keep_observations: bool = False) -> RunReport:
    """Run one scenario end to end and aggregate the report.

    Senders emit slots 0..num_slots-1 plus the key burst that opens slot
    num_slots (without it the final slot could never verify); verdicts
    cover exactly the num_slots counted slots.
    """
    validate_config(config)
    master = Random(config.seed)
    provision_seeds = [master.getrandbits(64) for _ in config.aircraft]
    channel_seed = master.getrandbits(64)
    adversary_seed = master.getrandbits(64)

    chain_length = config.chain_length or config.num_slots + 2
    registry: dict[int, Announcement] = {}
    sessions: list[AircraftSession] = []
    for spec, seed in zip(config.aircraft, provision_seeds):
        prov, ann = provision(
            spec.icao,
            t0=0.0,
            n=chain_length,
            seed=seed,
            slot_duration=config.slot_duration,
            data_rate=config.data_rate,
            active=registry,
        )
        registry[spec.icao] = ann
        sessions.append(
            AircraftSession(
                spec.icao, prov, t0=0.0,
                slot_duration=config.slot_duration, data_rate=config.data_rate,
            )
        )

    events = _legit_events(config, sessions)
    emitted_total = len(events)
    emitted_data = sum(1 for e in events if e.kind == "data")
    emitted_security = emitted_total - emitted_data
    adversary_events = _adversary_events(config, Random(adversary_seed))
    events = sorted(events + adversary_events, key=lambda e: (e.time, e.source, e.seq))

    channel_rng = Random(channel_seed)
    channels = _build_channels(config, channel_rng)
    coverage = (
        resolve_coverage(config.adversary.coverage, config.antennas)
        if config.adversary is not None
        else 0
    )

    community = CommunityVerifier(
        registry,
        sub_slots=config.sub_slots,
        majority_filtering=config.majority_filtering,
        max_subsets=config.max_subsets,
    )
    offered = [0] * config.antennas
    delivered = [0] * config.antennas
    server_delivered = 0
    # antenna id -> (icao, slot) -> count of in-slot frames received
    in_slot_seen: list[dict[tuple[int, int], int]] = [dict() for _ in range(config.antennas)]
    in_slot_needed = round(config.data_rate * config.slot_duration) + 3
    observations: list[Observation] = []

    for event in events:
        reachable = range(config.antennas) if event.source >= 0 else range(coverage)
        seen = False
        for antenna in reachable:
            offered[antenna] += 1
            if not channels[antenna].deliver():
                continue
            delivered[antenna] += 1
            seen = True
            obs = Observation(antenna, event.time, event.frame)
            observations.append(obs)
            community.ingest(obs)
            if event.source >= 0 and event.kind in ("data", "digest"):
                key = (event.icao, event.slot)
                in_slot_seen[antenna][key] = in_slot_seen[antenna].get(key, 0) + 1
        if seen and event.source >= 0:
            server_delivered += 1

    records = community.finalize_all()
    ground_truth: dict[tuple[int, int], list[bytes]] = {}
    for event in events:
        if event.source >= 0 and event.kind == "data":
            ground_truth.setdefault((event.icao, event.slot), []).append(event.frame)

    slots_complete = [
        sum(1 for count in per_antenna.values() if count == in_slot_needed)
        for per_antenna in in_slot_seen
    ]
    return RunReport(
        config=config,
        records=records,
        ground_truth={k: tuple(v) for k, v in ground_truth.items()},
        emitted_data=emitted_data,
        emitted_security=emitted_security,
        emitted_adversary=len(adversary_events),
        offered_per_antenna=offered,
        delivered_per_antenna=delivered,
        slots_complete_per_antenna=slots_complete,
        server_delivered_emissions=server_delivered,
        emitted_total=emitted_total,
        observations=observations if keep_observations else [],
    )


def _build_channels(config: ScenarioConfig, rng: Random):
    channels = []
    for _ in range(config.antennas):
        sub = Random(rng.getrandbits(64))
        if config.channel_model == "iid":
            channels.append(BernoulliChannel(sub, config.loss))
        else:
            channels.append(BurstChannel(sub, config.burst_enter, config.burst_exit))
    return channels


def _legit_events(config: ScenarioConfig, sessions: list[AircraftSession]) -> list[_Event]:
    horizon = config.num_slots * config.slot_duration
    events: list[_Event] = []
    for src, (spec, session) in enumerate(zip(config.aircraft, sessions)):
        frame_count = 0
        seq = 0
        while True:
            due = session.next_due_time()
            if due > horizon + 1e-9:
                break
            position = _position_at(spec, due, frame_count)
            for emission in session.emit_tick(due, position):
                if emission.kind == "data":
                    frame_count += 1
                if emission.slot >= config.num_slots and emission.kind != "key":
                    continue  # only the key burst of the horizon slot counts
                events.append(
                    _Event(emission.time, src, seq, emission.frame,
                           emission.kind, spec.icao, emission.slot)
                )
                seq += 1
    return events


def _position_at(spec: AircraftSpec, t: float, frame_count: int) -> PositionPayload:
    return PositionPayload(
        type_code=spec.type_code,
        t_flag=0,
        f_flag=frame_count % 2,
        altitude=spec.altitude & 0xFFF,
        latitude=(spec.lat0 + int(spec.vlat * t)) & 0x1FFFF,
        longitude=(spec.lon0 + int(spec.vlon * t)) & 0x1FFFF,
    )


def _adversary_events(config: ScenarioConfig, rng: Random) -> list[_Event]:
    adv = config.adversary
    if adv is None:
        return []
    target = adv.target if adv.target is not None else config.aircraft[0].icao
    spec = next(a for a in config.aircraft if a.icao == target)
    d = config.slot_duration
    per_slot = round(adv.rate * d)
    events: list[_Event] = []
    seq = 0
    for slot in range(config.num_slots):
        start = slot * d
        ghosts = per_slot
        if adv.strategy == "dos":
            # poison the digest: three conflicting chunks late in the slot
            for cid in range(3):
                payload = frame_codec.encode_security_payload(
                    frame_codec.SecurityPayload(
                        type_code=frame_codec.TYPE_VERIFICATION_DIGEST,
                        chunk_id=cid,
                        content=rng.getrandbits(46),
                    )
                )
                frame = frame_codec.encode_frame(
                    frame_codec.make_frame(17, 5, target, payload)
                )
                events.append(
                    _Event(start + d * (0.82 + 0.05 * cid), -1, seq, frame,
                           "fake-digest", target, slot)
                )
                seq += 1
            ghosts = per_slot - 3
        for j in range(ghosts):
            when = start + d * (j + 0.5) / max(ghosts, 1)
            position = PositionPayload(
                type_code=spec.type_code,
                t_flag=0,
                f_flag=j % 2,
                altitude=(spec.altitude + 512) & 0xFFF,
                latitude=(spec.lat0 + int(spec.vlat * when) + 45000 + 17 * j) & 0x1FFFF,
                longitude=(spec.lon0 + int(spec.vlon * when) + 29000 + 13 * j) & 0x1FFFF,
            )
            frame = frame_codec.encode_frame(
                frame_codec.make_frame(
                    17, 5, target, frame_codec.encode_position_payload(position)
                )
            )
            events.append(_Event(when, -1, seq, frame, "fake-data", target, slot))
            seq += 1
    return events


# -- config files -------------------------------------------------------------


def load_config(path: str) -> ScenarioConfig:
    """Parse the INI scenario format (see README for the schema)."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config: cannot read {path}")
    try:
        config = _config_from_parser(parser)
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"config: {exc}") from exc
    validate_config(config)
    return config


def _config_from_parser(parser: configparser.ConfigParser) -> ScenarioConfig:
    def get(section: str, option: str, conv, default):
        if not parser.has_option(section, option):
            return default
        raw = parser.get(section, option).strip()
        if raw == "":
            return default
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"{section}.{option}: {exc}") from exc

    def get_bool(section: str, option: str, default: bool) -> bool:
        if not parser.has_option(section, option):
            return default
        try:
            return parser.getboolean(section, option)
        except ValueError as exc:
            raise ConfigError(f"{section}.{option}: {exc}") from exc

    aircraft = []
    for section in parser.sections():
        if not section.startswith("aircraft:"):
            continue
        icao_text = section.split(":", 1)[1]
        try:
            icao = int(icao_text, 16)
        except ValueError as exc:
            raise ConfigError(f"{section}: icao must be hex") from exc
        aircraft.append(
            AircraftSpec(
                icao=icao,
                lat0=get(section, "lat0", int, 20000),
                lon0=get(section, "lon0", int, 40000),
                altitude=get(section, "altitude", int, 1000),
                vlat=get(section, "vlat", float, 37.0),
                vlon=get(section, "vlon", float, 23.0),
                type_code=get(section, "type_code", int, 11),
            )
        )
    if not aircraft:
        raise ConfigError("aircraft: at least one [aircraft:ICAO] section required")

    adversary = None
    if parser.has_section("adversary") and get_bool("adversary", "enabled", True):
        target = None
        if parser.has_option("adversary", "target"):
            target = int(parser.get("adversary", "target"), 16)
        adversary = AdversarySpec(
            strategy=get("adversary", "strategy", str, "ghost"),
            rate=get("adversary", "rate", float, 6.0),
            coverage=get("adversary", "coverage", float, 2),
            target=target,
        )

    return ScenarioConfig(
        seed=get("scenario", "seed", int, 0),
        num_slots=get("scenario", "slots", int, 10),
        slot_duration=get("protocol", "slot_duration", float, 2.0),
        data_rate=get("protocol", "data_rate", float, 6.0),
        chain_length=get("protocol", "chain_length", int, None),
        sub_slots=get("protocol", "sub_slots", int, None),
        antennas=get("channel", "antennas", int, 1),
        loss=get("channel", "loss", float, 0.0),
        channel_model=get("channel", "model", str, "iid"),
        burst_enter=get("channel", "burst_enter", float, 0.05),
        burst_exit=get("channel", "burst_exit", float, 0.5),
        adversary=adversary,
        majority_filtering=get_bool("verifier", "majority_filtering", True),
        max_subsets=get("verifier", "max_subsets", int, DEFAULT_MAX_SUBSETS),
    )
