"""Event-driven composition: devices, channel occupancy, and the DCF loop.

One Simulation owns one deployment for one run.  Only APs contend
(downlink, full-buffer); each BSS's STA exists as the receive point for
SINR evaluation.  A TXOP is modeled as a single channel-occupancy interval
sourced at the AP (virtual carrier sensing folded into CCA), with the RTS
and data phases evaluated for capture at their phase ends.

Determinism contract: one RNG stream per run, consumed in this order:
  1. deployment generation (see scenario.py, ascending BSS id),
  2. per-link shadowing fractions when `shadowing: sampled`
     (AP-AP pairs i<j ascending, then AP->STA pairs row-major),
  3. backoff draws, in event dispatch order.
Device iteration is always in ascending BSS id, and equal-time events
dispatch in insertion order, so a (config, seed) pair replays exactly.
"""

from dataclasses import dataclass, field
from random import Random
from typing import Dict, List, Optional, Tuple

from .backoff import (ContentionState, PolicyParams, draw_backoff, iyt_on_tx_end,
                      iyt_on_tx_start, on_backoff_decrement_interrupted,
                      on_transmission_outcome)
from .engine import Event, EventHandle, EventKind, Simulator
from .mac import (LinkUnusableError, MacPhase, MacTimings, Outcome, TxAttempt,
                  TxopPlan, elapsed_whole_slots, plan_txop)
from .metrics import MetricRecord, MetricsCollector
from .phy import dbm_to_mw, decodable, rx_power, sinr, snr_to_rate
from .scenario import Deployment, distance

PHASE_RTS_END = "rts_end"
PHASE_DATA_END = "data_end"
PHASE_TXOP_END = "txop_end"


@dataclass
class DeviceRuntime:
    idx: int                      # dense index into the device arrays
    bss_id: int
    policy: str
    params: PolicyParams
    state: ContentionState
    channel: int
    plan: Optional[TxopPlan]      # None when the link supports no MCS (starved)
    phase: MacPhase = MacPhase.IDLE_WAIT_DIFS
    remaining_slots: int = 0
    anchor_ns: int = 0            # countdown (re)start time
    pending_expiry: Optional[EventHandle] = None
    busy: bool = False
    sensed_mw: Dict[int, float] = field(default_factory=dict)   # attempt id -> mw
    cycle_epoch_ns: Optional[int] = None
    current_attempt: Optional[TxAttempt] = None
    # counters
    expiries: int = 0
    successes: int = 0
    rts_losses: int = 0
    data_losses: int = 0


class ActiveTx:
    """One channel occupancy: an RTS-initiated TXOP sourced at one AP."""

    __slots__ = ("attempt_id", "device_idx", "channel", "start_ns", "end_ns",
                 "rts_end_ns", "data_start_ns", "data_end_ns", "attempt")

    def __init__(self, attempt_id: int, device_idx: int, channel: int,
                 start_ns: int, attempt: TxAttempt):
        self.attempt_id = attempt_id
        self.device_idx = device_idx
        self.channel = channel
        self.start_ns = start_ns
        self.end_ns: Optional[int] = None
        self.rts_end_ns: Optional[int] = None
        self.data_start_ns: Optional[int] = None
        self.data_end_ns: Optional[int] = None
        self.attempt = attempt


@dataclass
class RunResult:
    deployment: Deployment
    policy_by_bss: Dict[int, str]
    records: List[MetricRecord]
    delays_ns: Dict[int, List[int]]
    attempts: List[TxAttempt]
    counters: Dict[int, dict]
    trace: List[Tuple[int, int, str, str]]
    final_clock_ns: int
    starved: List[int]
    diagnostics: List[str]


class Simulation:
    def __init__(self, deployment: Deployment, cfg, rng: Random):
        self.deployment = deployment
        self.cfg = cfg
        self.rng = rng
        self.timings: MacTimings = cfg.timings
        self.noise_dbm = cfg.radio.noise_dbm
        self.cca_dbm = cfg.radio.cca_dbm
        self.cca_mw = dbm_to_mw(cfg.radio.cca_dbm)
        self.gamma_db = cfg.radio.capture_threshold_db

        bsss = sorted(deployment.bsss, key=lambda b: b.bss_id)
        n = len(bsss)
        self._link_fractions = self._draw_link_fractions(bsss) if cfg.shadowing == "sampled" else None
        # static link tables: AP->AP for sensing, AP->STA for reception
        self.p_ap_dbm = [[0.0] * n for _ in range(n)]
        self.p_ap_mw = [[0.0] * n for _ in range(n)]
        self.p_sta_dbm = [[0.0] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                if i != j:
                    sf, of = self._fractions("ap", i, j)
                    p = rx_power(cfg.radio, distance(bsss[i].ap_position_m,
                                                     bsss[j].ap_position_m),
                                 cfg.path_loss, sf, of)
                    self.p_ap_dbm[i][j] = p
                    self.p_ap_mw[i][j] = dbm_to_mw(p)
                sf, of = self._fractions("sta", i, j)
                self.p_sta_dbm[i][j] = rx_power(
                    cfg.radio, distance(bsss[i].ap_position_m, bsss[j].sta_position_m),
                    cfg.path_loss, sf, of)

        self.devices: List[DeviceRuntime] = []
        self.starved: List[int] = []
        self.diagnostics: List[str] = []
        for i, b in enumerate(bsss):
            snr = self.p_sta_dbm[i][i] - self.noise_dbm
            rate = snr_to_rate(snr, cfg.mcs_table)
            plan = None
            if rate > 0:
                plan = plan_txop(rate, self.timings, cfg.txop_limit_ns,
                                 cfg.ampdu_max, cfg.mpdu_bytes)
                if plan.total_duration_ns > cfg.txop_limit_ns:
                    self.diagnostics.append(
                        f"bss {b.bss_id}: single-MPDU TXOP exceeds the limit "
                        f"({plan.total_duration_ns} ns > {cfg.txop_limit_ns} ns)")
            else:
                self.starved.append(b.bss_id)
                self.diagnostics.append(
                    f"bss {b.bss_id}: link unusable at SNR {snr:.2f} dB; never contends")
            self.devices.append(DeviceRuntime(
                idx=i, bss_id=b.bss_id, policy=b.policy, params=b.policy_params,
                state=ContentionState(bss_id=b.bss_id), channel=b.channel_index,
                plan=plan))
        self.by_channel: Dict[int, List[DeviceRuntime]] = {}
        for dev in self.devices:
            self.by_channel.setdefault(dev.channel, []).append(dev)

        self.sim = Simulator()
        self.horizon_ns = int(round(cfg.experiment.horizon_s * 1e9))
        self.interval_ns = int(round(cfg.experiment.interval_s * 1e9))
        n_intervals = -(-self.horizon_ns // self.interval_ns)
        self.collector = MetricsCollector(self.interval_ns, n_intervals,
                                          [d.bss_id for d in self.devices])
        self.attempts: List[TxAttempt] = []
        self.trace: List[Tuple[int, int, str, str]] = []
        self._attempt_seq = 0
        self._chan_log: Dict[int, List[ActiveTx]] = {d.channel: [] for d in self.devices}

    # -- setup helpers -------------------------------------------------

    def _draw_link_fractions(self, bsss) -> dict:
        """Per-link uniform shadowing/obstacle fractions, drawn once per run."""
        fractions = {}
        n = len(bsss)
        for i in range(n):
            for j in range(i + 1, n):
                fractions[("ap", i, j)] = (self.rng.random(), self.rng.random())
        for i in range(n):
            for j in range(n):
                fractions[("sta", i, j)] = (self.rng.random(), self.rng.random())
        return fractions

    def _fractions(self, kind: str, i: int, j: int) -> Tuple[float, float]:
        if self._link_fractions is None:
            return 0.5, 0.5
        if kind == "ap":
            key = ("ap", min(i, j), max(i, j))   # reciprocal link
        else:
            key = ("sta", i, j)
        return self._link_fractions[key]

    # -- run loop ------------------------------------------------------

    def run(self, run_id: str = "run0", scenario: str = "") -> RunResult:
        boundary = self.interval_ns
        index = 0
        while boundary <= self.horizon_ns:
            self.sim.schedule(boundary, EventKind.INTERVAL_BOUNDARY, None, index)
            boundary += self.interval_ns
            index += 1
        for dev in self.devices:
            if dev.plan is not None:
                self._begin_contention(dev, 0)
        final = self.sim.run(self.horizon_ns, self._dispatch)
        counters = {
            dev.bss_id: {
                "expiries": dev.expiries, "successes": dev.successes,
                "rts_losses": dev.rts_losses, "data_losses": dev.data_losses,
                "starved": dev.plan is None,
            } for dev in self.devices
        }
        policy_by_bss = {dev.bss_id: dev.policy for dev in self.devices}
        scenario = scenario or self.cfg.experiment.kind
        return RunResult(
            deployment=self.deployment, policy_by_bss=policy_by_bss,
            records=self.collector.interval_records(run_id, scenario, policy_by_bss),
            delays_ns=self.collector.delays_ns, attempts=self.attempts,
            counters=counters, trace=self.trace, final_clock_ns=final,
            starved=self.starved, diagnostics=self.diagnostics)

    def _dispatch(self, event: Event) -> None:
        if event.kind is EventKind.BACKOFF_EXPIRY:
            self._on_expiry(self.devices[event.payload], event.time)
        elif event.kind is EventKind.TX_PHASE_END:
            phase, tx = event.payload
            if phase == PHASE_RTS_END:
                self._on_rts_end(tx, event.time)
            elif phase == PHASE_DATA_END:
                self._on_data_end(tx, event.time)
            else:
                self._on_txop_end(tx, event.time)
        else:
            self._trace(event.time, 0, "interval", f"index={event.payload}")

    def _trace(self, time_ns: int, bss_id: int, kind: str, detail: str) -> None:
        self.trace.append((time_ns, bss_id, kind, detail))

    # -- contention ----------------------------------------------------

    def _begin_contention(self, dev: DeviceRuntime, now: int,
                          ipt: Optional[int] = None) -> None:
        """Draw a fresh backoff and either start counting or freeze.

        The expiry lands at now + DIFS + slots * slot when the channel is
        idle; a busy channel parks the device FROZEN with the full draw.
        """
        draw = draw_backoff(dev.policy, dev.state, dev.params, self.rng, ipt)
        dev.remaining_slots = draw.slots
        if dev.cycle_epoch_ns is None:
            dev.cycle_epoch_ns = now
        self._trace(now, dev.bss_id, "contention",
                    f"slots={draw.slots} cw={draw.cw_used} n={dev.state.n} "
                    f"d={dev.state.token_distance}")
        if dev.busy:
            dev.phase = MacPhase.FROZEN
        else:
            dev.phase = MacPhase.COUNTING_DOWN
            dev.anchor_ns = now
            expiry = now + self.timings.difs_ns + draw.slots * self.timings.slot_ns
            dev.pending_expiry = self.sim.schedule(
                expiry, EventKind.BACKOFF_EXPIRY, dev.bss_id, dev.idx)

    def _on_device_busy(self, dev: DeviceRuntime, now: int) -> None:
        """Idle -> busy at this device: freeze an active countdown.

        A pending expiry at exactly `now` is left alone: the device decided
        to transmit on the same slot boundary the other transmission began,
        which is the simultaneous-collision case the PHY must arbitrate.
        """
        if dev.phase is not MacPhase.COUNTING_DOWN:
            return
        handle = dev.pending_expiry
        assert handle is not None
        if handle.event.time == now:
            return
        handle.cancel()
        dev.pending_expiry = None
        elapsed = elapsed_whole_slots(dev.anchor_ns, now, self.timings)
        dev.remaining_slots -= min(elapsed, dev.remaining_slots)
        dev.phase = MacPhase.FROZEN
        on_backoff_decrement_interrupted(dev.state, dev.policy)
        self._trace(now, dev.bss_id, "freeze", f"remaining={dev.remaining_slots}")

    def _on_device_idle(self, dev: DeviceRuntime, now: int) -> None:
        """Busy -> idle: resume a frozen countdown after a fresh DIFS."""
        if dev.phase is not MacPhase.FROZEN:
            return
        dev.phase = MacPhase.COUNTING_DOWN
        dev.anchor_ns = now
        expiry = now + self.timings.difs_ns + dev.remaining_slots * self.timings.slot_ns
        dev.pending_expiry = self.sim.schedule(
            expiry, EventKind.BACKOFF_EXPIRY, dev.bss_id, dev.idx)
        self._trace(now, dev.bss_id, "resume", f"remaining={dev.remaining_slots}")

    # -- transmission --------------------------------------------------

    def _on_expiry(self, dev: DeviceRuntime, now: int) -> None:
        dev.pending_expiry = None
        dev.expiries += 1
        dev.remaining_slots = 0
        dev.phase = MacPhase.TX_RTS
        self._attempt_seq += 1
        attempt = TxAttempt(bss_id=dev.bss_id, rts_start_ns=now,
                            cycle_epoch_ns=dev.cycle_epoch_ns)
        dev.current_attempt = attempt
        tx = ActiveTx(self._attempt_seq, dev.idx, dev.channel, now, attempt)
        tx.rts_end_ns = now + self.timings.rts_ns
        self._trace(now, dev.bss_id, "tx_start", f"attempt={tx.attempt_id}")
        self._occupancy_add(tx, now)
        self.sim.schedule(tx.rts_end_ns, EventKind.TX_PHASE_END, dev.bss_id,
                          (PHASE_RTS_END, tx))

    def _occupancy_add(self, tx: ActiveTx, now: int) -> None:
        log = self._chan_log[tx.channel]
        horizon = now - 2 * self.cfg.txop_limit_ns
        if len(log) > 4 * len(self.devices):
            log[:] = [e for e in log if e.end_ns is None or e.end_ns > horizon]
        log.append(tx)
        src = self.devices[tx.device_idx]
        for dev in self.by_channel[tx.channel]:
            if dev is src:
                continue
            p_dbm = self.p_ap_dbm[tx.device_idx][dev.idx]
            if dev.policy == "iyt":
                iyt_on_tx_start(dev.state, src.bss_id, p_dbm, self.cca_dbm)
            dev.sensed_mw[tx.attempt_id] = self.p_ap_mw[tx.device_idx][dev.idx]
            busy = sum(dev.sensed_mw.values()) >= self.cca_mw
            if busy and not dev.busy:
                dev.busy = True
                self._on_device_busy(dev, now)
            else:
                dev.busy = busy

    def _occupancy_end(self, tx: ActiveTx, now: int) -> None:
        tx.end_ns = now
        src = self.devices[tx.device_idx]
        self._trace(now, src.bss_id, "tx_end", f"attempt={tx.attempt_id}")
        for dev in self.by_channel[tx.channel]:
            if dev is src:
                # a device's own transmission end advances its token too,
                # otherwise round robin skips the sender's slot
                if dev.policy == "iyt":
                    iyt_on_tx_end(dev.state, src.bss_id)
                continue
            if (dev.policy == "iyt"
                    and self.p_ap_dbm[tx.device_idx][dev.idx] >= self.cca_dbm
                    and src.bss_id in dev.state.neighbor_list):
                iyt_on_tx_end(dev.state, src.bss_id)
                self._iyt_redraw(dev, now)
            dev.sensed_mw.pop(tx.attempt_id, None)
            idle = sum(dev.sensed_mw.values()) < self.cca_mw
            if idle and dev.busy:
                dev.busy = False
                self._on_device_idle(dev, now)
            else:
                dev.busy = not idle

    def _iyt_redraw(self, dev: DeviceRuntime, now: int) -> None:
        """Re-scale a pending token-ordered backoff after a token advance.

        The draw window tracks the live distance to the token, so a device
        mid-contention replaces its counter when the token moves; this is
        what maps list order onto access order.  Devices without an active
        backoff draw fresh at their next contention anyway.
        """
        if dev.phase is MacPhase.COUNTING_DOWN:
            handle = dev.pending_expiry
            if handle is not None and handle.event.time == now:
                return   # transmitting on this very boundary; let it stand
            handle.cancel()
            draw = draw_backoff("iyt", dev.state, dev.params, self.rng)
            dev.remaining_slots = draw.slots
            dev.anchor_ns = now
            expiry = now + self.timings.difs_ns + draw.slots * self.timings.slot_ns
            dev.pending_expiry = self.sim.schedule(
                expiry, EventKind.BACKOFF_EXPIRY, dev.bss_id, dev.idx)
            self._trace(now, dev.bss_id, "redraw",
                        f"slots={draw.slots} d={dev.state.token_distance}")
        elif dev.phase is MacPhase.FROZEN:
            draw = draw_backoff("iyt", dev.state, dev.params, self.rng)
            dev.remaining_slots = draw.slots
            self._trace(now, dev.bss_id, "redraw",
                        f"slots={draw.slots} d={dev.state.token_distance}")

    def _interferers(self, tx: ActiveTx, window_start: int, window_end: int) -> List[float]:
        """Received powers at tx's STA from occupancies overlapping the window."""
        me = tx.device_idx
        powers = []
        for other in self._chan_log[tx.channel]:
            if other.device_idx == me:
                continue
            if other.start_ns < window_end and (other.end_ns is None or
                                                other.end_ns > window_start):
                powers.append(self.p_sta_dbm[other.device_idx][me])
        return powers

    def _on_rts_end(self, tx: ActiveTx, now: int) -> None:
        dev = self.devices[tx.device_idx]
        t = self.timings
        signal = self.p_sta_dbm[dev.idx][dev.idx]
        interferers = self._interferers(tx, tx.start_ns, now)
        ok = decodable(sinr(signal, interferers, self.noise_dbm), self.gamma_db)
        if ok:
            dev.phase = MacPhase.TX_DATA
            plan = dev.plan
            data_air = plan.total_duration_ns - t.sifs_ns - t.back_ns
            tx.data_start_ns = now + t.sifs_ns + t.cts_ns + t.sifs_ns
            tx.data_end_ns = tx.data_start_ns + data_air
            self._trace(now, dev.bss_id, "rts_ok", f"attempt={tx.attempt_id}")
            self.sim.schedule(tx.data_end_ns, EventKind.TX_PHASE_END, dev.bss_id,
                              (PHASE_DATA_END, tx))
        else:
            # nothing answers a collided RTS; the channel frees now and the
            # sender discovers the loss at its CTS timeout
            dev.phase = MacPhase.WAIT_CTS
            tx.attempt.outcome = Outcome.RTS_LOSS
            self._trace(now, dev.bss_id, "rts_fail", f"attempt={tx.attempt_id}")
            self._occupancy_end(tx, now)
            self.sim.schedule(now + t.sifs_ns + t.cts_ns, EventKind.TX_PHASE_END,
                              dev.bss_id, (PHASE_TXOP_END, tx))

    def _on_data_end(self, tx: ActiveTx, now: int) -> None:
        dev = self.devices[tx.device_idx]
        t = self.timings
        signal = self.p_sta_dbm[dev.idx][dev.idx]
        interferers = self._interferers(tx, tx.data_start_ns, now)
        ok = decodable(sinr(signal, interferers, self.noise_dbm), self.gamma_db)
        dev.phase = MacPhase.WAIT_BACK
        if ok:
            tx.attempt.outcome = Outcome.SUCCESS
            tx.attempt.payload_bits = dev.plan.mpdu_count * dev.plan.mpdu_bytes * 8
            self._trace(now, dev.bss_id, "data_ok", f"attempt={tx.attempt_id}")
        else:
            tx.attempt.outcome = Outcome.DATA_LOSS
            self._trace(now, dev.bss_id, "data_fail", f"attempt={tx.attempt_id}")
            self._occupancy_end(tx, now)   # no Block Ack follows a lost burst
        self.sim.schedule(now + t.sifs_ns + t.back_ns, EventKind.TX_PHASE_END,
                          dev.bss_id, (PHASE_TXOP_END, tx))

    def _on_txop_end(self, tx: ActiveTx, now: int) -> None:
        dev = self.devices[tx.device_idx]
        attempt = tx.attempt
        if attempt.outcome is Outcome.SUCCESS:
            self._occupancy_end(tx, now)
        attempt.end_ns = now
        self.collector.record_txop(attempt)
        self.attempts.append(attempt)
        success = attempt.outcome is Outcome.SUCCESS
        if success:
            dev.successes += 1
            dev.cycle_epoch_ns = None
        elif attempt.outcome is Outcome.RTS_LOSS:
            dev.rts_losses += 1
        else:
            dev.data_losses += 1
        self._trace(now, dev.bss_id, "outcome",
                    f"attempt={tx.attempt_id} result={attempt.outcome.value} "
                    f"bits={attempt.payload_bits}")
        dev.current_attempt = None
        # Draw order per the backoff algorithm: update the collision counter,
        # compute the next backoff with the interruption count accumulated
        # during the finished cycle, then reset that count.
        ipt_before_reset = dev.state.ipt
        on_transmission_outcome(dev.state, success)
        self._begin_contention(dev, now, ipt=ipt_before_reset)


def run_deployment(deployment: Deployment, cfg, rng: Random,
                   run_id: str = "run0", scenario: str = "") -> RunResult:
    """Build and run one simulation; the RunResult carries interval records."""
    return Simulation(deployment, cfg, rng).run(run_id, scenario)
