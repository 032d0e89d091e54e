"""Propagation and reception model: path loss, CCA, SINR, capture, rate lookup.

Everything here is a pure function over value types.  Powers are dBm,
ratios are dB, distances are meters; linear-domain arithmetic uses mW.
"""

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple


@dataclass(frozen=True)
class RadioConfig:
    tx_power_dbm: float
    antenna_gain_tx_dbi: float
    antenna_gain_rx_dbi: float
    noise_dbm: float
    cca_dbm: float
    capture_threshold_db: float
    bandwidth_mhz: float
    carrier_ghz: float


@dataclass(frozen=True)
class PathLossParams:
    pl0_db: float        # loss at the 1 m reference distance
    exponent: float      # log-distance exponent
    shadow_db: float     # shadowing spread, folded in as an expected-value term
    obstacle_db: float   # per-10 m obstacle penalty, likewise


@dataclass(frozen=True)
class LinkBudget:
    rx_power_dbm: float
    snr_db: float
    sinr_db: float

    def __post_init__(self):
        # interference can only degrade quality
        assert self.sinr_db <= self.snr_db + 1e-9


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return 10.0 * math.log10(mw)


def path_loss(distance_m: float, params: PathLossParams,
              shadow_frac: float = 0.5, obstacle_frac: float = 0.5) -> float:
    """Log-distance attenuation in dB.

    Shadowing and obstacles enter as deterministic expected-value terms
    (half the spread, half the per-10 m penalty) so a deployment replays
    bit-identically.  A sampled variant passes per-link uniform draws as
    the two fractions instead; they are never redrawn per frame.
    """
    if distance_m <= 0:
        raise ValueError("degenerate geometry: distance must be > 0 m")
    return (params.pl0_db
            + 10.0 * params.exponent * math.log10(distance_m)
            + params.shadow_db * shadow_frac
            + params.obstacle_db * obstacle_frac * (distance_m / 10.0))


def rx_power(tx: RadioConfig, distance_m: float, params: PathLossParams,
             shadow_frac: float = 0.5, obstacle_frac: float = 0.5) -> float:
    """Received power in dBm over a single link."""
    return (tx.tx_power_dbm + tx.antenna_gain_tx_dbi + tx.antenna_gain_rx_dbi
            - path_loss(distance_m, params, shadow_frac, obstacle_frac))


def cca_busy(detected_powers_dbm: Sequence[float], cca_dbm: float) -> bool:
    """Energy detection: linear sum of detected powers against the CCA threshold."""
    if not detected_powers_dbm:
        return False
    total_mw = sum(dbm_to_mw(p) for p in detected_powers_dbm)
    return total_mw >= dbm_to_mw(cca_dbm)


def sinr(signal_dbm: float, interferers_dbm: Sequence[float], noise_dbm: float) -> float:
    """Signal over noise-plus-interference, computed in the linear domain."""
    denom_mw = dbm_to_mw(noise_dbm) + sum(dbm_to_mw(p) for p in interferers_dbm)
    return signal_dbm - mw_to_dbm(denom_mw)


def decodable(sinr_db: float, capture_threshold_db: float) -> bool:
    """Capture effect: the frame decodes iff SINR reaches the threshold (inclusive)."""
    return sinr_db >= capture_threshold_db


def snr_to_rate(snr_db: float, mcs_table: Sequence[Tuple[float, int]]) -> int:
    """Rate of the highest MCS entry whose SNR floor is met; 0 = link unusable.

    The table is (min_snr_db, rate_bps) pairs sorted ascending by SNR floor.
    """
    if not mcs_table:
        raise ValueError("mcs_table must be non-empty")
    floors = [entry[0] for entry in mcs_table]
    if floors != sorted(floors):
        raise ValueError("mcs_table must be sorted ascending by min_snr_db")
    rate = 0
    for min_snr_db, rate_bps in mcs_table:
        if snr_db >= min_snr_db:
            rate = rate_bps
        else:
            break
    return rate


def link_budget(signal_dbm: float, interferers_dbm: Sequence[float],
                noise_dbm: float) -> LinkBudget:
    return LinkBudget(rx_power_dbm=signal_dbm,
                      snr_db=signal_dbm - noise_dbm,
                      sinr_db=sinr(signal_dbm, interferers_dbm, noise_dbm))
