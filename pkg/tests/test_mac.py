import pytest

from dcfsim.mac import (LinkUnusableError, MacTimings, Outcome, TxAttempt,
                        access_delay_ns, elapsed_whole_slots, mpdu_duration_ns,
                        plan_txop)

T = MacTimings.from_us(9.0, 16.0, 34.0, 46.0, 40.0, 68.0, 40.0)
TXOP_LIMIT = 5_484_000
AMPDU_MAX = 64
MPDU = 1500


def test_timings_convert_to_exact_nanoseconds():
    assert (T.slot_ns, T.sifs_ns, T.difs_ns) == (9000, 16000, 34000)
    assert T.difs_ns == T.sifs_ns + 2 * T.slot_ns


def test_mpdu_duration_rounds_up():
    # 12000 bits at 86 Mb/s = 139534.88.. ns
    assert mpdu_duration_ns(1500, 86_000_000) == 139_535
    assert mpdu_duration_ns(1500, 24_000_000) == 500_000


def test_plan_txop_high_rate_hits_aggregation_cap():
    plan = plan_txop(10**9, T, TXOP_LIMIT, AMPDU_MAX, MPDU)
    assert plan.mpdu_count == 64
    assert plan.total_duration_ns <= TXOP_LIMIT


def test_plan_txop_exact_fit_oracle():
    # at 24 Mb/s one MPDU lasts exactly 500 us: verify 10 fit and 11 do not
    plan = plan_txop(24_000_000, T, TXOP_LIMIT, AMPDU_MAX, MPDU)
    assert plan.mpdu_count == 10
    dur = mpdu_duration_ns(MPDU, 24_000_000)
    fits = T.phy_header_ns + 10 * dur + T.sifs_ns + T.back_ns
    too_big = T.phy_header_ns + 11 * dur + T.sifs_ns + T.back_ns
    assert fits <= TXOP_LIMIT < too_big
    assert plan.total_duration_ns == fits


def test_plan_txop_floors_at_one_mpdu():
    plan = plan_txop(1_000_000, T, TXOP_LIMIT, AMPDU_MAX, MPDU)
    assert plan.mpdu_count == 1
    assert plan.total_duration_ns > TXOP_LIMIT   # over the limit, reported upstream


def test_plan_txop_rejects_unusable_link():
    with pytest.raises(LinkUnusableError):
        plan_txop(0, T, TXOP_LIMIT, AMPDU_MAX, MPDU)


def test_whole_slot_accounting_floor_rule():
    anchor = 0
    # 3 full slots elapsed
    assert elapsed_whole_slots(anchor, T.difs_ns + 3 * T.slot_ns, T) == 3
    # busy mid-slot: 2.5 slots elapsed counts as 2
    assert elapsed_whole_slots(anchor, T.difs_ns + 22_500, T) == 2
    # busy during the DIFS wait decrements nothing
    assert elapsed_whole_slots(anchor, 20_000, T) == 0
    # a boundary hit exactly at the busy instant commits the slot
    assert elapsed_whole_slots(anchor, T.difs_ns + 9_000, T) == 1


def test_access_delay_examples():
    # zero backoff on an idle channel: exactly one DIFS
    a = TxAttempt(bss_id=1, rts_start_ns=T.difs_ns, cycle_epoch_ns=0,
                  outcome=Outcome.SUCCESS)
    assert access_delay_ns(a) == 34_000
    # eight slots, never frozen
    b = TxAttempt(bss_id=1, rts_start_ns=T.difs_ns + 8 * T.slot_ns, cycle_epoch_ns=0,
                  outcome=Outcome.SUCCESS)
    assert access_delay_ns(b) == 34_000 + 72_000


def test_access_delay_defined_for_successes_only():
    a = TxAttempt(bss_id=1, rts_start_ns=10, cycle_epoch_ns=0, outcome=Outcome.RTS_LOSS)
    with pytest.raises(ValueError):
        access_delay_ns(a)
