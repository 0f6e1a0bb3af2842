"""Slot-based broadcast authentication for 1090ES surveillance traffic.

A standard-shaped frame codec with two added security payload types, a
delayed-disclosure hash-chain authenticator, a community-server verifier
with majority-vote recovery against injection, and a deterministic
simulator plus closed-form analysis tooling.
"""

from .analysis import (
    OverheadParams,
    overhead_percent,
    recovery_worst_case,
    slot_success_prob,
    window_messages,
)
from .authority import (
    Announcement,
    SessionProvision,
    load_announcements,
    provision,
    store_announcements,
)
from .frame_codec import (
    Es1090Frame,
    PositionPayload,
    SecurityPayload,
    compute_pi,
    decode_frame,
    encode_frame,
    make_frame,
)
from .sender import AircraftSession, Emission, slot_index
from .simulator import (
    AdversarySpec,
    AircraftSpec,
    RunReport,
    ScenarioConfig,
    run_scenario,
)
from .tesla import (
    KeyChain,
    chunk_value,
    derive_root_key,
    derive_slot_key,
    reassemble_value,
    slot_digest,
    verify_slot_key,
)
from .verifier import (
    CommunityVerifier,
    Observation,
    SlotBuffer,
    VerificationVerdict,
    majority_filter,
    recover_slot,
    verify_slot_normal,
)

__version__ = "0.1.0"
