import math

import mpmath as mp
import pytest

from hdgc import Gas, GasConcentrationRecord, ValidationError, concentration_to_forcing

# High-precision evaluation of the CO2 formula at the 2019 concentration,
# computed once with mpmath at 50 digits and frozen here.
CO2_2019_FORCING = 2.199409117239969731


def forcing(gas, value, **kw):
    return concentration_to_forcing(GasConcentrationRecord(gas, value), **kw)


class TestBaselines:
    def test_co2_baseline_is_zero(self):
        assert forcing(Gas.CO2, 280.0) == pytest.approx(0.0, abs=1e-12)

    def test_ch4_baseline_is_zero(self):
        assert forcing(Gas.CH4, 700.0) == pytest.approx(0.0, abs=1e-12)

    def test_n2o_baseline_is_zero(self):
        assert forcing(Gas.N2O, 275.0) == pytest.approx(0.0, abs=1e-12)

    def test_custom_baseline_shifts_zero(self):
        assert forcing(Gas.CO2, 277.0, co2_baseline=277.0) == pytest.approx(0.0, abs=1e-12)


class TestCo2Value:
    def test_2019_concentration_matches_frozen_oracle(self):
        assert forcing(Gas.CO2, 409.85) == pytest.approx(CO2_2019_FORCING, abs=1e-10)

    def test_2019_concentration_is_roughly_2p2(self):
        assert abs(forcing(Gas.CO2, 409.85) - 2.2) < 0.01

    def test_live_mpmath_oracle(self):
        """Recompute all three formulas at high precision and compare."""
        mp.mp.dps = 40

        def f(c):
            return mp.mpf("5.04") * mp.log(c + mp.mpf("0.0005") * c * c)

        def g(m, n):
            return mp.mpf("0.5") * mp.log(1 + mp.mpf("0.00002") * (m * n) ** mp.mpf("0.75"))

        co2 = float(f(mp.mpf("400")) - f(280))
        ch4 = float(
            mp.mpf("0.04") * (mp.sqrt(mp.mpf("1800")) - mp.sqrt(700))
            - (g(1800, 275) - g(700, 275))
        )
        n2o = float(
            mp.mpf("0.14") * (mp.sqrt(mp.mpf("330")) - mp.sqrt(275))
            - (g(700, 330) - g(700, 275))
        )
        assert forcing(Gas.CO2, 400.0) == pytest.approx(co2, abs=1e-12)
        assert forcing(Gas.CH4, 1800.0) == pytest.approx(ch4, abs=1e-12)
        assert forcing(Gas.N2O, 330.0) == pytest.approx(n2o, abs=1e-12)


class TestMonotonicity:
    @pytest.mark.parametrize(
        "gas,baseline",
        [(Gas.CO2, 280.0), (Gas.CH4, 700.0), (Gas.N2O, 275.0)],
    )
    def test_strictly_increasing_on_grid(self, gas, baseline):
        grid = [baseline * f for f in
                [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 7.5, 10.0]]
        values = [forcing(gas, c) for c in grid]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_sign_flips_at_baseline(self):
        assert forcing(Gas.CH4, 650.0) < 0 < forcing(Gas.CH4, 750.0)


class TestValidation:
    def test_nonpositive_concentration_rejected(self):
        with pytest.raises(ValidationError):
            GasConcentrationRecord(Gas.CO2, 0.0)
        with pytest.raises(ValidationError):
            GasConcentrationRecord(Gas.N2O, -3.0)

    def test_gas_coerced_from_string(self):
        rec = GasConcentrationRecord("co2", 280.0)
        assert rec.gas is Gas.CO2
        assert concentration_to_forcing(rec) == pytest.approx(0.0, abs=1e-12)

    def test_bad_baseline_rejected(self):
        with pytest.raises(ValidationError):
            forcing(Gas.CO2, 300.0, co2_baseline=0.0)

    def test_overlap_term_present_in_ch4(self):
        # without the overlap correction CH4 forcing would be the pure
        # square-root term; the g() correction must reduce it
        m = 1800.0
        pure = 0.04 * (math.sqrt(m) - math.sqrt(700.0))
        assert forcing(Gas.CH4, m) < pure
