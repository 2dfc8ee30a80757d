import math

import numpy as np
import pytest

from sqglab.dyadic import BesovSpec
from sqglab.errors import IncompleteLedgerError
from sqglab.ledger import TimeSeriesLedger, mixed_time_norm


def _ledger(block0, block1, times=(0.0, 1.0)):
    led = TimeSeriesLedger()
    for i, t in enumerate(times):
        led.record(
            t,
            {2.0: block0[i] + block1[i]},
            {(0, 2.0): block0[i], (1, 2.0): block1[i]},
            grad_v_inf=2.0,
        )
    return led


class TestTimeSeriesLedger:
    def test_record_keeps_columns_aligned(self):
        led = _ledger([1.0, 0.5], [0.0, 0.25])
        assert len(led) == 2
        assert led.block_indices == [0, 1]
        assert led.ps == [2.0]
        assert led.block_norms_at(1, 2.0) == {0: 0.5, 1: 0.25}

    def test_times_must_increase(self):
        led = _ledger([1.0, 0.5], [0.0, 0.25])
        with pytest.raises(ValueError, match="increase"):
            led.record(1.0, {2.0: 0.0}, {(0, 2.0): 0.0, (1, 2.0): 0.0}, 0.0)

    def test_accumulated_v(self):
        """V(t) = int_0^t ||grad v||_inf with a constant integrand."""
        led = _ledger([1.0, 1.0, 1.0], [0.0, 0.0, 0.0], times=(0.0, 0.5, 2.0))
        np.testing.assert_allclose(led.accumulated_v(), [0.0, 1.0, 4.0])

    def test_missing_block_exponent(self):
        led = _ledger([1.0, 0.5], [0.0, 0.25])
        with pytest.raises(IncompleteLedgerError, match="per-block"):
            led.block_norms_at(0, math.inf)

    def test_forcing_defaults_to_zero(self):
        led = _ledger([1.0, 0.5], [0.0, 0.25])
        np.testing.assert_array_equal(led.accumulated_forcing(2.0), [0.0, 0.0])


class TestMixedTimeNorm:
    def test_minkowski_direction(self):
        """Block-first norms dominate when r >= m and are dominated when r <= m."""
        led = _ledger([1.0, 0.0], [0.0, 1.0])
        spec = BesovSpec(0.0, 2.0, 1.0)
        tilde = mixed_time_norm(led, spec, math.inf, 1.0, tilde=True)
        plain = mixed_time_norm(led, spec, math.inf, 1.0, tilde=False)
        assert tilde == pytest.approx(2.0)
        assert plain == pytest.approx(1.0)
        spec_inf = BesovSpec(0.0, 2.0, math.inf)
        assert mixed_time_norm(led, spec_inf, 1.0, 1.0, tilde=True) <= mixed_time_norm(
            led, spec_inf, 1.0, 1.0, tilde=False
        )

    def test_equal_exponents_agree(self):
        led = _ledger([1.0, 0.5], [0.2, 1.0])
        spec = BesovSpec(0.5, 2.0, 1.0)
        a = mixed_time_norm(led, spec, 1.0, 1.0, tilde=True)
        b = mixed_time_norm(led, spec, 1.0, 1.0, tilde=False)
        assert a == pytest.approx(b, rel=1e-14)

    def test_weights(self):
        led = _ledger([1.0, 1.0], [1.0, 1.0])
        # sum_q 2^{q s} with s = 1 over q in {0, 1}
        assert mixed_time_norm(led, BesovSpec(1.0, 2.0, 1.0), math.inf, 1.0, tilde=True) == pytest.approx(3.0)

    def test_window_must_be_covered(self):
        led = _ledger([1.0, 0.5], [0.0, 0.25])
        with pytest.raises(IncompleteLedgerError, match="covers"):
            mixed_time_norm(led, BesovSpec(0.0, 2.0), 1.0, 5.0, tilde=True)

    def test_empty_ledger(self):
        with pytest.raises(IncompleteLedgerError, match="empty"):
            mixed_time_norm(TimeSeriesLedger(), BesovSpec(0.0, 2.0), 1.0, 1.0, tilde=True)
