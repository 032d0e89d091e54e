"""The three backoff computation mechanisms behind one small interface.

"beb"  binary exponential backoff: CW doubles per consecutive collision up
       to a cap, BO drawn uniform in [0, CW-1].
"db"   deterministic backoff: BO = base + IPT while collision-free, where
       IPT counts countdown interruptions since the last draw; any collision
       falls back to the BEB draw until the next success.
"iyt"  token-ordered backoff: each device keeps an ascending-ID list of the
       BSSs it has overheard (itself included) and a token pointing at the
       BSS whose turn is next.  The circular distance d from the token to
       the device scales the draw window to [d*CW0 - 1, (d+1)*CW0 - 1], so
       list order maps onto backoff order.

Ordering policy is an interface point; ascending-identifier round robin is
the one shipped implementation.
"""

import bisect
from dataclasses import dataclass, field
from random import Random
from typing import List, Optional

POLICY_NAMES = ("beb", "db", "iyt")


@dataclass(frozen=True)
class PolicyParams:
    # range checks (cw0 >= 1, n_max >= 0, db_base >= 0) live in
    # scenario.validate so a bad config reports every violation at once
    cw0: int = 16        # initial contention window
    n_max: int = 5       # max CW stage
    db_base: int = 5     # deterministic base backoff


@dataclass
class ContentionState:
    """Per-device policy bookkeeping, owned by exactly one device."""
    bss_id: int
    n: int = 0                    # consecutive-collision counter
    ipt: int = 0                  # interruptions since the last backoff draw
    neighbor_list: List[int] = field(default_factory=list)   # ascending, self included
    token: Optional[int] = None   # BSS entitled to transmit next
    token_distance: int = 0       # circular index distance token -> self

    def __post_init__(self):
        if not self.neighbor_list:
            self.neighbor_list = [self.bss_id]


@dataclass(frozen=True)
class BackoffDraw:
    slots: int      # backoff counter, in idle slots
    cw_used: int    # window the draw came from; 0 marks a deterministic value


def beb_backoff(n: int, params: PolicyParams, rng: Random) -> BackoffDraw:
    """CW = CW0 * 2^min(n, n_max); BO uniform on [0, CW-1]."""
    cw = params.cw0 * (2 ** min(n, params.n_max))
    return BackoffDraw(slots=rng.randrange(cw), cw_used=cw)


def db_backoff(n: int, ipt: int, params: PolicyParams, rng: Random) -> BackoffDraw:
    """BO = base + IPT while n == 0; any retry state falls back to BEB.

    The deterministic branch consumes no randomness (zero variance).
    """
    if n == 0:
        return BackoffDraw(slots=params.db_base + ipt, cw_used=0)
    return beb_backoff(n, params, rng)


def iyt_bounds(token_distance: int, cw0: int) -> tuple:
    """Draw window [max(0, d*CW0 - 1), (d+1)*CW0 - 1] for token distance d."""
    return max(0, token_distance * cw0 - 1), (token_distance + 1) * cw0 - 1


def iyt_backoff(state: ContentionState, params: PolicyParams, rng: Random) -> BackoffDraw:
    """Uniform draw from the distance-scaled window; ignores the collision counter."""
    lo, hi = iyt_bounds(state.token_distance, params.cw0)
    return BackoffDraw(slots=rng.randint(lo, hi), cw_used=hi - lo + 1)


def iyt_on_tx_start(state: ContentionState, source_bss: int,
                    rx_power_dbm: float, cca_dbm: float) -> ContentionState:
    """Neighbor detection on an overheard transmission start.

    Signals below CCA leave the channel idle for this device and change
    nothing.  Above CCA the interruption counter bumps and the source joins
    the neighbor list at its ascending-ID slot if new.  Never called for the
    device's own transmissions.
    """
    if rx_power_dbm < cca_dbm:
        return state
    state.ipt += 1
    pos = bisect.bisect_left(state.neighbor_list, source_bss)
    if pos == len(state.neighbor_list) or state.neighbor_list[pos] != source_bss:
        state.neighbor_list.insert(pos, source_bss)
    return state


def iyt_on_tx_end(state: ContentionState, source_bss: int) -> ContentionState:
    """Round-robin token advance when a listed BSS ends a transmission.

    The token moves to the element after the source (circularly) and the
    distance from token to self is recomputed.  Ends from unlisted BSSs
    change nothing.
    """
    try:
        idx = state.neighbor_list.index(source_bss)
    except ValueError:
        return state
    size = len(state.neighbor_list)
    state.token = state.neighbor_list[(idx + 1) % size]
    self_idx = state.neighbor_list.index(state.bss_id)
    token_idx = state.neighbor_list.index(state.token)
    state.token_distance = (self_idx - token_idx) % size
    return state


def on_backoff_decrement_interrupted(state: ContentionState, policy: str) -> ContentionState:
    """Channel went idle -> busy mid-countdown: DB counts it, BEB does not.

    IYT's list maintenance happens in iyt_on_tx_start; nothing extra here.
    """
    if policy == "db":
        state.ipt += 1
    return state


def on_transmission_outcome(state: ContentionState, success: bool) -> ContentionState:
    """Post-TXOP bookkeeping: collision counter update, interruption reset.

    Callers that need the interruption count for the next deterministic
    draw must read it before calling (the draw logically precedes the
    reset; see draw_backoff's ipt argument).
    """
    state.n = 0 if success else state.n + 1
    state.ipt = 0
    return state


def draw_backoff(policy: str, state: ContentionState, params: PolicyParams,
                 rng: Random, ipt: Optional[int] = None) -> BackoffDraw:
    """Dispatch one backoff draw for the device's configured policy.

    `ipt` lets the MAC pass the interruption count captured before the
    post-outcome reset; defaults to the live state value.
    """
    if policy == "beb":
        return beb_backoff(state.n, params, rng)
    if policy == "db":
        return db_backoff(state.n, state.ipt if ipt is None else ipt, params, rng)
    if policy == "iyt":
        return iyt_backoff(state, params, rng)
    raise ValueError(f"unknown policy {policy!r}")
