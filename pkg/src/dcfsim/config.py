"""Run configuration: packaged defaults, JSON overlay, strict key checking.

Unknown keys are errors, not warnings; a silent typo in an experiment
config is the classic irreproducibility bug.  The fully resolved dict
(defaults + file + flag overrides) is echoed into every summary so a run
can be reproduced from its outputs alone.
"""

import copy
import json
from dataclasses import dataclass
from importlib import resources
from typing import Any, Dict, List, Optional, Tuple

from .backoff import PolicyParams
from .mac import MacTimings, us_to_ns
from .phy import PathLossParams, RadioConfig
from .scenario import ExperimentSpec

# keys allowed inside experiment.per_bss_policies entries
_PER_BSS_KEYS = {"policy", "cw0", "n_max", "db_base"}


@dataclass(frozen=True)
class RunConfig:
    radio: RadioConfig
    path_loss: PathLossParams
    shadowing: str
    timings: MacTimings
    txop_limit_ns: int
    ampdu_max: int
    mpdu_bytes: int
    policy_name: str
    policy_params: PolicyParams
    per_bss_policies: Optional[List[dict]]
    experiment: ExperimentSpec
    mcs_table: Tuple[Tuple[float, int], ...]
    master_seed: int
    output_prefix: str
    resolved: dict   # the echoed config


def default_config_dict() -> dict:
    with resources.files("dcfsim.data").joinpath("default_config.json").open() as fh:
        return json.load(fh)


def _merge(base: dict, overlay: dict, path: str, errors: List[str]) -> None:
    for key, value in overlay.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            errors.append(f"unknown config key: {here}")
            continue
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge(base[key], value, here, errors)
        else:
            base[key] = value


def _check_types(resolved: dict, errors: List[str]) -> None:
    def expect(path, value, kinds, label):
        if not isinstance(value, kinds) or isinstance(value, bool):
            errors.append(f"{path} must be {label}, got {value!r}")

    for section, keys in (("radio", ("tx_power_dbm", "antenna_gain_tx_dbi",
                                     "antenna_gain_rx_dbi", "noise_dbm", "cca_dbm",
                                     "capture_threshold_db", "bandwidth_mhz", "carrier_ghz")),
                          ("path_loss", ("pl0_db", "exponent", "shadow_db", "obstacle_db")),
                          ("mac", ("slot_us", "sifs_us", "difs_us", "rts_us", "cts_us",
                                   "back_us", "phy_header_us", "txop_limit_us"))):
        for key in keys:
            expect(f"{section}.{key}", resolved[section][key], (int, float), "a number")
    for path, kinds, label in (("mac.ampdu_max", int, "an integer"),
                               ("mac.mpdu_bytes", int, "an integer"),
                               ("policy.cw0", int, "an integer"),
                               ("policy.n_max", int, "an integer"),
                               ("policy.db_base", int, "an integer"),
                               ("policy.name", str, "a string"),
                               ("path_loss.shadowing", str, "a string"),
                               ("experiment.kind", str, "a string"),
                               ("experiment.n_bss", int, "an integer"),
                               ("experiment.n_sim", int, "an integer"),
                               ("experiment.horizon_s", (int, float), "a number"),
                               ("experiment.interval_s", (int, float), "a number"),
                               ("master_seed", int, "an integer"),
                               ("output_prefix", str, "a string")):
        section, _, key = path.rpartition(".")
        value = resolved[section][key] if section else resolved[key]
        expect(path, value, kinds, label)

    table = resolved["mcs_table"]
    if not isinstance(table, list) or not all(
            isinstance(row, list) and len(row) == 2
            and isinstance(row[0], (int, float)) and isinstance(row[1], int)
            for row in table):
        errors.append("mcs_table must be a list of [min_snr_db, rate_bps] pairs")

    per_bss = resolved["experiment"]["per_bss_policies"]
    if per_bss is not None:
        if not isinstance(per_bss, list):
            errors.append("experiment.per_bss_policies must be a list or null")
        else:
            for i, entry in enumerate(per_bss):
                if not isinstance(entry, dict):
                    errors.append(f"experiment.per_bss_policies[{i}] must be an object")
                    continue
                for key in entry:
                    if key not in _PER_BSS_KEYS:
                        errors.append(
                            f"unknown config key: experiment.per_bss_policies[{i}].{key}")


def build_config(resolved: dict) -> RunConfig:
    """Typed view over an already-validated resolved dict."""
    radio = RadioConfig(**resolved["radio"])
    pl = resolved["path_loss"]
    path_loss = PathLossParams(pl0_db=pl["pl0_db"], exponent=pl["exponent"],
                               shadow_db=pl["shadow_db"], obstacle_db=pl["obstacle_db"])
    mac = resolved["mac"]
    timings = MacTimings.from_us(mac["slot_us"], mac["sifs_us"], mac["difs_us"],
                                 mac["rts_us"], mac["cts_us"], mac["back_us"],
                                 mac["phy_header_us"])
    pol = resolved["policy"]
    params = PolicyParams(cw0=pol["cw0"], n_max=pol["n_max"], db_base=pol["db_base"])
    exp = resolved["experiment"]
    seeds = tuple(resolved["master_seed"] + i for i in range(exp["n_sim"]))
    spec = ExperimentSpec(kind=exp["kind"], n_bss=exp["n_bss"], n_sim=exp["n_sim"],
                          horizon_s=float(exp["horizon_s"]),
                          interval_s=float(exp["interval_s"]), seeds=seeds)
    return RunConfig(
        radio=radio, path_loss=path_loss, shadowing=pl["shadowing"],
        timings=timings, txop_limit_ns=us_to_ns(mac["txop_limit_us"]),
        ampdu_max=mac["ampdu_max"], mpdu_bytes=mac["mpdu_bytes"],
        policy_name=pol["name"], policy_params=params,
        per_bss_policies=exp["per_bss_policies"], experiment=spec,
        mcs_table=tuple((float(r[0]), int(r[1])) for r in resolved["mcs_table"]),
        master_seed=resolved["master_seed"], output_prefix=resolved["output_prefix"],
        resolved=resolved)


def load_config(file_dict: Optional[dict] = None,
                overrides: Optional[dict] = None) -> Tuple[Optional[RunConfig], dict, List[str]]:
    """Merge defaults <- file <- flag overrides; return (config, resolved, errors)."""
    errors: List[str] = []
    resolved = default_config_dict()
    if file_dict is not None:
        if not isinstance(file_dict, dict):
            return None, resolved, ["config file must contain a JSON object"]
        _merge(resolved, file_dict, "", errors)
    if overrides:
        _merge(resolved, overrides, "", errors)
    if resolved.get("schema_version") != 1:
        errors.append(f"unsupported schema_version: {resolved.get('schema_version')!r}")
    if not errors:
        _check_types(resolved, errors)
    if errors:
        return None, resolved, errors
    return build_config(resolved), resolved, errors


# sweepable parameters: CLI name -> path into the resolved dict + parser
SWEEPABLE = {
    "n_bss": (("experiment", "n_bss"), int),
    "n_sim": (("experiment", "n_sim"), int),
    "horizon_s": (("experiment", "horizon_s"), float),
    "policy": (("policy", "name"), str),
    "cw0": (("policy", "cw0"), int),
    "n_max": (("policy", "n_max"), int),
    "db_base": (("policy", "db_base"), int),
    "master_seed": (("master_seed",), int),
}


def apply_param(resolved: dict, name: str, value) -> dict:
    path, _ = SWEEPABLE[name]
    out = copy.deepcopy(resolved)
    node = out
    for key in path[:-1]:
        node = node[key]
    node[path[-1]] = value
    return out
