"""Per-device DCF pieces: timing set, TXOP planning, countdown arithmetic.

The event-driven composition that wires devices, channel and policies
together lives in simulation.py; this module keeps the value types and the
pure arithmetic the state machine relies on.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional


class LinkUnusableError(ValueError):
    """Raised when the SNR supports no MCS at all (rate 0)."""


def us_to_ns(us: float) -> int:
    return int(round(us * 1000.0))


@dataclass(frozen=True)
class MacTimings:
    """All durations in integer nanoseconds; built from the config's microseconds.

    The DIFS relation (DIFS = SIFS + 2 slots) is validated at config load.
    Control-frame durations approximate a 6 Mb/s legacy rate and are config
    data, not constants.
    """
    slot_ns: int
    sifs_ns: int
    difs_ns: int
    rts_ns: int
    cts_ns: int
    back_ns: int
    phy_header_ns: int

    @classmethod
    def from_us(cls, slot_us: float, sifs_us: float, difs_us: float, rts_us: float,
                cts_us: float, back_us: float, phy_header_us: float) -> "MacTimings":
        return cls(us_to_ns(slot_us), us_to_ns(sifs_us), us_to_ns(difs_us),
                   us_to_ns(rts_us), us_to_ns(cts_us), us_to_ns(back_us),
                   us_to_ns(phy_header_us))


@dataclass(frozen=True)
class TxopPlan:
    mpdu_count: int
    mpdu_bytes: int
    data_rate_bps: int
    total_duration_ns: int   # PHY header + aggregate + SIFS + Block Ack


class MacPhase(Enum):
    IDLE_WAIT_DIFS = "idle_wait_difs"
    COUNTING_DOWN = "counting_down"
    FROZEN = "frozen"
    TX_RTS = "tx_rts"
    WAIT_CTS = "wait_cts"
    TX_DATA = "tx_data"
    WAIT_BACK = "wait_back"


class Outcome(Enum):
    SUCCESS = "success"
    RTS_LOSS = "rts_loss"
    DATA_LOSS = "data_loss"


@dataclass
class TxAttempt:
    """One RTS-initiated TXOP attempt."""
    bss_id: int
    rts_start_ns: int
    cycle_epoch_ns: int       # backoff start of the first contention since last success
    outcome: Optional[Outcome] = None
    payload_bits: int = 0
    end_ns: Optional[int] = None


def mpdu_duration_ns(mpdu_bytes: int, rate_bps: int) -> int:
    """Airtime of one MPDU, rounded up to a whole nanosecond."""
    bits = mpdu_bytes * 8
    return -(-bits * 1_000_000_000 // rate_bps)


def plan_txop(link_rate_bps: int, timings: MacTimings, txop_limit_ns: int,
              ampdu_max: int, mpdu_bytes: int) -> TxopPlan:
    """Fit the largest A-MPDU burst into the TXOP limit.

    mpdu_count = min(ampdu_max, largest k with
        phy_header + k * mpdu_airtime + SIFS + BAck <= txop_limit),
    floored at one MPDU so a very slow link still makes progress (the
    over-limit case is reported by the caller in run diagnostics).
    """
    if link_rate_bps <= 0:
        raise LinkUnusableError("link unusable: no MCS supported at this SNR")
    dur = mpdu_duration_ns(mpdu_bytes, link_rate_bps)
    budget = txop_limit_ns - timings.phy_header_ns - timings.sifs_ns - timings.back_ns
    count = max(1, min(ampdu_max, budget // dur))
    total = timings.phy_header_ns + count * dur + timings.sifs_ns + timings.back_ns
    return TxopPlan(mpdu_count=count, mpdu_bytes=mpdu_bytes,
                    data_rate_bps=link_rate_bps, total_duration_ns=total)


def elapsed_whole_slots(anchor_ns: int, now_ns: int, timings: MacTimings) -> int:
    """Whole idle slots completed since countdown (re)started at `anchor_ns`.

    The first DIFS after the anchor decrements nothing; afterwards one slot
    completes at each slot boundary.  A partial slot in progress when the
    channel turns busy does not count (floor rule), while a boundary hit
    exactly at the busy instant does.
    """
    return max(0, (now_ns - anchor_ns - timings.difs_ns) // timings.slot_ns)


def access_delay_ns(attempt: TxAttempt) -> int:
    """Channel access delay of a successful attempt.

    Measured from the backoff start of the contention cycle (including any
    failed retransmission rounds since the last success, freezes included)
    to the instant the winning RTS begins.
    """
    if attempt.outcome is not Outcome.SUCCESS:
        raise ValueError("access delay is defined for successful attempts only")
    return attempt.rts_start_ns - attempt.cycle_epoch_ns
