"""Shared helpers for building configs and running small simulations."""

from random import Random

from dcfsim.config import load_config
from dcfsim.scenario import generate
from dcfsim.simulation import run_deployment


def make_config(**sections):
    cfg, resolved, errors = load_config(sections if sections else None)
    assert not errors, errors
    return cfg


def run_once(kind, n_bss, policy, seed, horizon_s, per_bss=None, policy_over=None):
    """One deployment end to end with mostly-default config."""
    overrides = {
        "experiment": {"kind": kind, "n_bss": n_bss, "n_sim": 1,
                       "horizon_s": horizon_s, "per_bss_policies": per_bss},
        "policy": dict({"name": policy}, **(policy_over or {})),
    }
    cfg = make_config(**overrides)
    rng = Random(seed)
    dep = generate(kind, rng, cfg.radio, cfg.path_loss, n_bss, cfg.policy_name,
                   cfg.policy_params, per_bss, seed)
    return run_deployment(dep, cfg, rng), cfg, dep
