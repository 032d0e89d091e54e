"""Deployment generators for the four experiment families, plus validation.

All generators are pure functions of (parameters, rng); the same seed always
yields the same Deployment.  Positions are meters in a rectangular area.
"""

import math
from dataclasses import dataclass, field
from random import Random
from typing import Dict, List, Optional, Tuple

from .backoff import POLICY_NAMES, PolicyParams
from .phy import PathLossParams, RadioConfig, cca_busy, decodable, rx_power, sinr, snr_to_rate

EXPERIMENT_KINDS = ("toy_a", "toy_b", "overlap", "grid")

# toy-scenario construction margin: solved positions must clear every SINR
# inequality by at least this much
TOY_MARGIN_DB = 3.0


@dataclass(frozen=True)
class BssSpec:
    bss_id: int
    ap_position_m: Tuple[float, float]
    sta_position_m: Tuple[float, float]
    channel_index: int
    policy: str
    policy_params: PolicyParams


@dataclass(frozen=True)
class Deployment:
    bsss: Tuple[BssSpec, ...]
    area_m: Tuple[float, float]
    seed: int

    def to_jsonable(self) -> dict:
        return {
            "area_m": list(self.area_m),
            "seed": self.seed,
            "bsss": [
                {
                    "bss_id": b.bss_id,
                    "ap": list(b.ap_position_m),
                    "sta": list(b.sta_position_m),
                    "channel": b.channel_index,
                    "policy": b.policy,
                    "policy_params": {
                        "cw0": b.policy_params.cw0,
                        "n_max": b.policy_params.n_max,
                        "db_base": b.policy_params.db_base,
                    },
                }
                for b in self.bsss
            ],
        }


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    n_bss: int
    n_sim: int
    horizon_s: float
    interval_s: float
    seeds: Tuple[int, ...]


def distance(a: Tuple[float, float], b: Tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _policies_for(n_bss: int, default_policy: str, default_params: PolicyParams,
                  per_bss: Optional[List[dict]]) -> List[Tuple[str, PolicyParams]]:
    out = []
    for i in range(n_bss):
        policy, params = default_policy, default_params
        if per_bss and i < len(per_bss) and per_bss[i]:
            entry = per_bss[i]
            policy = entry.get("policy", policy)
            params = PolicyParams(
                cw0=entry.get("cw0", default_params.cw0),
                n_max=entry.get("n_max", default_params.n_max),
                db_base=entry.get("db_base", default_params.db_base),
            )
        out.append((policy, params))
    return out


def gen_toy(variant: str, radio: RadioConfig, pl: PathLossParams,
            default_policy: str = "beb",
            default_params: PolicyParams = PolicyParams(),
            per_bss: Optional[List[dict]] = None,
            seed: int = 0) -> Deployment:
    """Two overlapping BSSs whose STA placement decides the fate of collisions.

    Variant "a": each STA sits outboard of its own AP, so even simultaneous
    transmissions decode (capture).  Variant "b": both STAs sit between the
    APs, so simultaneous transmissions lose both frames.  Coordinates are
    not hard-coded: candidate geometries are scanned and the first one whose
    SINR inequalities hold with >= TOY_MARGIN_DB margin is emitted.
    """
    if variant not in ("a", "b"):
        raise ValueError(f"unknown toy variant {variant!r}")
    area = (30.0, 30.0)
    ap1 = (10.0, 15.0)
    ap2 = (20.0, 15.0)

    # both APs must sense each other comfortably above CCA
    ap_gap_power = rx_power(radio, distance(ap1, ap2), pl)
    if ap_gap_power < radio.cca_dbm + TOY_MARGIN_DB:
        raise ValueError(
            f"toy scenario unsolvable: AP-AP power {ap_gap_power:.2f} dBm "
            f"< CCA {radio.cca_dbm:.2f} dBm + {TOY_MARGIN_DB} dB margin")

    solved = None
    if variant == "a":
        # STA outboard at distance a: own signal strong, cross link weak
        for a in [0.5 + 0.25 * k for k in range(11)]:
            sta1 = (ap1[0] - a, ap1[1])
            sta2 = (ap2[0] + a, ap2[1])
            if _toy_ok(variant, radio, pl, ap1, ap2, sta1, sta2):
                solved = (sta1, sta2)
                break
    else:
        # STAs near the midpoint, laterally offset: symmetric cross interference
        for h in [0.5 + 0.25 * k for k in range(11)]:
            sta1 = (15.0, 15.0 + h)
            sta2 = (15.0, 15.0 - h)
            if _toy_ok(variant, radio, pl, ap1, ap2, sta1, sta2):
                solved = (sta1, sta2)
                break
    if solved is None:
        raise ValueError(
            f"toy variant {variant}: no STA placement satisfies the SINR "
            f"inequalities with {TOY_MARGIN_DB} dB margin under this PHY config")

    policies = _policies_for(2, default_policy, default_params, per_bss)
    bsss = tuple(
        BssSpec(i + 1, ap, sta, 0, policies[i][0], policies[i][1])
        for i, (ap, sta) in enumerate(zip((ap1, ap2), solved))
    )
    return Deployment(bsss=bsss, area_m=area, seed=seed)


def _toy_ok(variant: str, radio: RadioConfig, pl: PathLossParams,
            ap1, ap2, sta1, sta2) -> bool:
    gamma = radio.capture_threshold_db
    for ap_own, ap_other, sta in ((ap1, ap2, sta1), (ap2, ap1, sta2)):
        signal = rx_power(radio, distance(ap_own, sta), pl)
        interf = rx_power(radio, distance(ap_other, sta), pl)
        solo_snr = signal - radio.noise_dbm
        joint = sinr(signal, [interf], radio.noise_dbm)
        if solo_snr < gamma + TOY_MARGIN_DB:
            return False          # the link must work when transmitting alone
        if variant == "a" and joint < gamma + TOY_MARGIN_DB:
            return False
        if variant == "b" and joint > gamma - TOY_MARGIN_DB:
            return False
    return True


def gen_overlap(n_bss: int, rng: Random,
                default_policy: str = "beb",
                default_params: PolicyParams = PolicyParams(),
                per_bss: Optional[List[dict]] = None,
                seed: int = 0) -> Deployment:
    """Fully overlapping BSSs: APs inside a 2 m disc, STAs 3-4 m out.

    The tight disc guarantees every AP pair senses each other for any draw;
    each STA sits at a uniform angle and uniform radius in [3, 4] m from its
    AP.  All BSSs share one channel.
    """
    if not 1 <= n_bss <= 9:
        raise ValueError("n_bss out of [1, 9]")
    area = (30.0, 30.0)
    center = (15.0, 15.0)
    policies = _policies_for(n_bss, default_policy, default_params, per_bss)
    bsss = []
    for i in range(n_bss):
        # draw order per BSS: ap radius, ap angle, sta radius, sta angle
        r = 2.0 * math.sqrt(rng.random())
        theta = 2.0 * math.pi * rng.random()
        ap = (center[0] + r * math.cos(theta), center[1] + r * math.sin(theta))
        sr = 3.0 + rng.random()
        stheta = 2.0 * math.pi * rng.random()
        sta = (ap[0] + sr * math.cos(stheta), ap[1] + sr * math.sin(stheta))
        bsss.append(BssSpec(i + 1, ap, sta, 0, policies[i][0], policies[i][1]))
    return Deployment(bsss=tuple(bsss), area_m=area, seed=seed)


GRID_CHANNEL_ROWS = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


def gen_grid(rng: Random,
             default_policy: str = "beb",
             default_params: PolicyParams = PolicyParams(),
             per_bss: Optional[List[dict]] = None,
             seed: int = 0) -> Deployment:
    """3x3 grid of 5x5 m cells, AP at each center, STA uniform in its cell.

    Channels follow the diagonal-stripe reuse-3 pattern, so no two
    horizontally or vertically adjacent cells share a channel.
    """
    area = (15.0, 15.0)
    cell = 5.0
    policies = _policies_for(9, default_policy, default_params, per_bss)
    bsss = []
    for row in range(3):
        for col in range(3):
            i = row * 3 + col
            ap = (cell * col + cell / 2.0, cell * row + cell / 2.0)
            # draw order per BSS: sta x offset, sta y offset
            sta = (cell * col + cell * rng.random(), cell * row + cell * rng.random())
            channel = GRID_CHANNEL_ROWS[row][col]
            bsss.append(BssSpec(i + 1, ap, sta, channel, policies[i][0], policies[i][1]))
    return Deployment(bsss=tuple(bsss), area_m=area, seed=seed)


def generate(kind: str, rng: Random, radio: RadioConfig, pl: PathLossParams,
             n_bss: int, default_policy: str, default_params: PolicyParams,
             per_bss: Optional[List[dict]], seed: int) -> Deployment:
    if kind == "toy_a":
        return gen_toy("a", radio, pl, default_policy, default_params, per_bss, seed)
    if kind == "toy_b":
        return gen_toy("b", radio, pl, default_policy, default_params, per_bss, seed)
    if kind == "overlap":
        return gen_overlap(n_bss, rng, default_policy, default_params, per_bss, seed)
    if kind == "grid":
        return gen_grid(rng, default_policy, default_params, per_bss, seed)
    raise ValueError(f"unknown experiment kind {kind!r}")


def validate(spec: ExperimentSpec, config) -> List[str]:
    """Collect every violated invariant; never stops at the first."""
    errors: List[str] = []
    if spec.kind not in EXPERIMENT_KINDS:
        errors.append(f"experiment.kind {spec.kind!r} not one of {EXPERIMENT_KINDS}")
    if spec.kind in ("overlap", "grid") and not 1 <= spec.n_bss <= 9:
        errors.append(f"n_bss out of [1,9]: {spec.n_bss}")
    if spec.kind in ("toy_a", "toy_b") and spec.n_bss != 2:
        errors.append(f"toy scenarios are 2-BSS; got n_bss={spec.n_bss}")
    if spec.kind == "grid" and spec.n_bss != 9:
        errors.append(f"grid scenario is 9-BSS; got n_bss={spec.n_bss}")
    if spec.n_sim < 1:
        errors.append(f"n_sim must be >= 1: {spec.n_sim}")
    if spec.horizon_s <= 0:
        errors.append(f"horizon_s must be positive: {spec.horizon_s}")
    if spec.interval_s <= 0:
        errors.append(f"interval_s must be positive: {spec.interval_s}")

    if config.policy_name not in POLICY_NAMES:
        errors.append(f"policy {config.policy_name!r} not one of {POLICY_NAMES}")
    p = config.policy_params
    if p.cw0 < 1:
        errors.append(f"cw0 must be >= 1: {p.cw0}")
    if p.n_max < 0:
        errors.append(f"n_max must be >= 0: {p.n_max}")
    if p.db_base < 0:
        errors.append(f"db_base must be >= 0: {p.db_base}")
    if config.per_bss_policies is not None:
        if len(config.per_bss_policies) != spec.n_bss:
            errors.append(
                f"per_bss_policies length {len(config.per_bss_policies)} != n_bss {spec.n_bss}")
        for i, entry in enumerate(config.per_bss_policies):
            name = entry.get("policy", config.policy_name)
            if name not in POLICY_NAMES:
                errors.append(f"per_bss_policies[{i}].policy {name!r} not one of {POLICY_NAMES}")

    radio = config.radio
    if radio.cca_dbm <= radio.noise_dbm:
        errors.append(f"cca_dbm {radio.cca_dbm} must exceed noise_dbm {radio.noise_dbm}")
    if radio.capture_threshold_db < 0:
        errors.append(f"capture_threshold_db must be >= 0: {radio.capture_threshold_db}")
    pl = config.path_loss
    if pl.exponent <= 0:
        errors.append(f"path-loss exponent must be > 0: {pl.exponent}")
    if pl.pl0_db < 0:
        errors.append(f"pl0_db must be >= 0: {pl.pl0_db}")
    if config.shadowing not in ("expected", "sampled"):
        errors.append(f"shadowing mode {config.shadowing!r} not 'expected' or 'sampled'")

    t = config.timings
    for name in ("slot_ns", "sifs_ns", "difs_ns", "rts_ns", "cts_ns", "back_ns", "phy_header_ns"):
        if getattr(t, name) <= 0:
            errors.append(f"mac.{name} must be positive")
    if t.difs_ns != t.sifs_ns + 2 * t.slot_ns:
        errors.append(
            f"DIFS relation violated: difs ({t.difs_ns} ns) != sifs + 2*slot "
            f"({t.sifs_ns + 2 * t.slot_ns} ns)")
    if config.txop_limit_ns <= 0:
        errors.append("txop_limit must be positive")
    if not 1 <= config.ampdu_max <= 64:
        errors.append(f"ampdu_max out of [1,64]: {config.ampdu_max}")
    if config.mpdu_bytes <= 0:
        errors.append(f"mpdu_bytes must be positive: {config.mpdu_bytes}")

    if not config.mcs_table:
        errors.append("mcs_table must be non-empty")
    else:
        floors = [row[0] for row in config.mcs_table]
        if floors != sorted(floors):
            errors.append("mcs_table must be sorted ascending by min_snr_db")
        if any(row[1] <= 0 for row in config.mcs_table):
            errors.append("mcs_table rates must be positive")
    return errors
