import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsnsync.clocks import NO_NOISE, ClockState, local_time
from wsnsync.estimators import (
    EstimateMethod,
    ExchangeRecord,
    IncompleteRecordError,
    MessageKind,
    SyncMessage,
    asymmetry_residual,
    compose_offsets,
    estimate_twoway,
    pbs_delay,
    pbs_estimate,
    pbs_offset,
)


def make_record(t1, t2, t3, t4, t2_listener=None, t4_listener=None, exchange_id=0):
    return ExchangeRecord(
        exchange_id=exchange_id,
        t1_master=t1,
        t2_slave=t2,
        t3_slave=t3,
        t4_master=t4,
        t2_listener=t2_listener,
        t4_listener=t4_listener,
    )


def forward_stamps(master, slave, t1, d_ms, d_sm, response_gap):
    """Build the four stamps of one exchange directly from the clock law."""
    t2 = t1 + d_ms
    t3 = t2 + response_gap
    t4 = t3 + d_sm
    return make_record(
        local_time(master, t1),
        local_time(slave, t2),
        local_time(slave, t3),
        local_time(master, t4),
    )


class TestTwoWay:
    def test_symmetric_zero_offset(self):
        est = estimate_twoway(make_record(0, 110, 200, 310))
        assert est.delta_hat == 0
        assert est.d_hat == 110
        assert est.method is EstimateMethod.TWO_WAY_1588

    def test_offset_fifty_delay_hundred_ten(self):
        # stamps constructed from theta_slave - theta_master = 50, d = 110
        master = ClockState(theta_ns=0)
        slave = ClockState(theta_ns=50)
        rec = forward_stamps(master, slave, t1=0, d_ms=110, d_sm=110, response_gap=40)
        assert (rec.t1_master, rec.t2_slave, rec.t3_slave, rec.t4_master) == (0, 160, 200, 260)
        est = estimate_twoway(rec)
        assert est.delta_hat == 50
        assert est.d_hat == 110

    def test_spec_substitution_values(self):
        est = estimate_twoway(make_record(0, 160, 200, 260))
        assert est.delta_hat == (160 - 60) // 2 == 50
        assert est.d_hat == (160 + 60) // 2 == 110

    def test_asymmetry_bias_is_half_delay_difference(self):
        master = ClockState(theta_ns=0)
        slave = ClockState(theta_ns=0)
        rec = forward_stamps(master, slave, t1=1000, d_ms=100, d_sm=120, response_gap=500)
        est = estimate_twoway(rec)
        assert est.delta_hat == -10  # (d_ms - d_sm) / 2
        assert est.d_hat == 110  # mean path delay

    def test_incomplete_record_rejected(self):
        with pytest.raises(IncompleteRecordError):
            estimate_twoway(make_record(0, 110, None, 310))

    def test_halving_truncates_toward_zero_and_records_remainder(self):
        est = estimate_twoway(make_record(0, 101, 200, 300))
        # forward 101, backward 100: delta 1/2 -> 0 rem 1, delay 201/2 -> 100 rem 1
        assert (est.delta_hat, est.delta_remainder) == (0, 1)
        assert (est.d_hat, est.d_remainder) == (100, 1)
        est = estimate_twoway(make_record(0, 100, 200, 301))
        assert (est.delta_hat, est.delta_remainder) == (0, -1)

    @given(
        theta=st.integers(-1_000_000, 1_000_000),
        d_ms=st.integers(0, 50_000),
        d_sm=st.integers(0, 50_000),
        gap=st.integers(0, 10_000_000),
        t1=st.integers(0, 10**12),
    )
    @settings(max_examples=300)
    def test_zero_drift_estimates_are_exact_closed_forms(self, theta, d_ms, d_sm, gap, t1):
        master = ClockState(theta_ns=0)
        slave = ClockState(theta_ns=theta)
        est = estimate_twoway(forward_stamps(master, slave, t1, d_ms, d_sm, gap))
        # halving truncates toward zero over the whole numerator; the exact
        # pre-halving quantities are the real oracle
        assert est.delta_hat * 2 + est.delta_remainder == 2 * theta + (d_ms - d_sm)
        assert est.d_hat * 2 + est.d_remainder == d_ms + d_sm
        assert abs(est.delta_hat - (theta + (d_ms - d_sm) / 2)) < 1
        assert abs(est.d_hat - (d_ms + d_sm) / 2) < 1
        assert not est.suspect


class TestPbs:
    def test_identical_clocks(self):
        assert pbs_offset(1090, 1090) == 0

    def test_direct_substitution(self):
        assert pbs_offset(1100, 1090) == 10

    def test_offset_recovered_exactly_with_equal_arrivals(self):
        # theta_listener - theta_master = +250, both stamps at the same true instant
        master = ClockState(theta_ns=0)
        listener = ClockState(theta_ns=250)
        t4 = 5_000_000
        assert pbs_offset(local_time(listener, t4), local_time(master, t4)) == 250

    def test_delay_colocated_synchronized(self):
        assert pbs_delay(1000, 1000, 0) == 0

    def test_delay_substitution(self):
        assert pbs_delay(360, 0, 250) == 110

    def test_delay_recovers_true_flight_time(self):
        master = ClockState(theta_ns=0)
        listener = ClockState(theta_ns=250)
        t1, d_mx = 10_000, 140
        t2_listener = local_time(listener, t1 + d_mx)
        t1_master = local_time(master, t1)
        delta = 250
        assert pbs_delay(t2_listener, t1_master, delta) == d_mx

    def test_pbs_estimate_requires_complete_record(self):
        with pytest.raises(IncompleteRecordError):
            pbs_estimate(make_record(0, None, None, 300, t2_listener=100, t4_listener=None))

    def test_pbs_estimate_bundles_offset_and_delay(self):
        master = ClockState(theta_ns=0)
        listener = ClockState(theta_ns=-75)
        t1, d_mx, t4 = 1_000, 90, 9_000
        rec = make_record(
            local_time(master, t1),
            None,
            None,
            local_time(master, t4),
            t2_listener=local_time(listener, t1 + d_mx),
            t4_listener=local_time(listener, t4),
        )
        est = pbs_estimate(rec)
        assert est.method is EstimateMethod.PBS
        assert est.delta_hat == -75
        assert est.d_hat == d_mx
        assert est.delta_remainder == 0


class TestComposition:
    def test_zero_plus_zero(self):
        assert compose_offsets(0, 0) == 0

    def test_signed_sum(self):
        assert compose_offsets(30, -10) == 20

    def test_composition_matches_direct_listener_offset(self):
        # noiseless symmetric scenario: listener estimate equals the sum of
        # the true pairwise offsets, exactly
        master = ClockState(theta_ns=40)
        slave = ClockState(theta_ns=-110)
        listener = ClockState(theta_ns=505)
        t4 = 77_000
        direct = pbs_offset(local_time(listener, t4), local_time(master, t4))
        via_slave = compose_offsets(
            local_time(listener, t4) - local_time(slave, t4),
            local_time(slave, t4) - local_time(master, t4),
        )
        assert direct == via_slave == 465


class TestAsymmetryResidual:
    def _record_with_asymmetry(self, d_sm, d_sx, theta_listener=300):
        master = ClockState(theta_ns=0)
        listener = ClockState(theta_ns=theta_listener)
        t3_true = 50_000  # request departure in true time
        return make_record(
            0,
            None,
            None,
            local_time(master, t3_true + d_sm),
            t2_listener=None,
            t4_listener=local_time(listener, t3_true + d_sx),
        ), theta_listener

    def test_equal_arrival_assumption_gives_zero(self):
        rec, true_delta = self._record_with_asymmetry(d_sm=120, d_sx=120)
        assert asymmetry_residual(rec, true_delta) == 0

    def test_forty_ns_asymmetry_recovered(self):
        rec, true_delta = self._record_with_asymmetry(d_sm=120, d_sx=160)
        assert asymmetry_residual(rec, true_delta) == 40

    def test_noisy_mean_tracks_asymmetry(self):
        rng = random.Random(9)
        d_sm, d_sx, sigma, n = 120, 160, 30, 1000
        total = 0
        for _ in range(n):
            rec, true_delta = self._record_with_asymmetry(d_sm, d_sx)
            noisy = ExchangeRecord(
                exchange_id=0,
                t1_master=rec.t1_master,
                t4_master=rec.t4_master + round(rng.gauss(0, sigma)),
                t4_listener=rec.t4_listener + round(rng.gauss(0, sigma)),
            )
            total += asymmetry_residual(noisy, true_delta)
        mean = total / n
        stderr = sigma * (2 / n) ** 0.5
        assert abs(mean - (d_sx - d_sm)) <= 3 * stderr

    def test_missing_arrival_stamps_rejected(self):
        with pytest.raises(IncompleteRecordError):
            asymmetry_residual(make_record(0, 1, 2, None), 0)


class TestSyncMessage:
    def test_timestamp_carriage_invariants(self):
        SyncMessage(MessageKind.SYNC, "r1", 1, "n9")
        SyncMessage(MessageKind.FOLLOW_UP, "r1", 1, "n9", carried_timestamp=123)
        with pytest.raises(ValueError):
            SyncMessage(MessageKind.SYNC, "r1", 1, "n9", carried_timestamp=5)
        with pytest.raises(ValueError):
            SyncMessage(MessageKind.DELAY_RESPONSE, "r1", 1, "n9")
