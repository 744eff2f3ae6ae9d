import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acoherence.gw import (
    CONSTANTS,
    PRESETS,
    REFERENCE_BAR,
    BarDetector,
    ChirpScenario,
    PhysicalConstants,
    acoherence_signal,
    bandwidth,
    bar_coupling,
    dt_max,
    evaluate,
    flux_from_occupation,
    gamma0_from_coupling,
    load_scenarios,
    rows_to_csv,
    weber_gamma0,
)


class Quantity:
    """Number carrying exponents of (kg, m, s); arithmetic checks dimensions."""

    def __init__(self, value, kg=0, m=0, s=0):
        self.value = float(value)
        self.dims = tuple(Fraction(d).limit_denominator(1000) for d in (kg, m, s))

    def _wrap(self, other):
        return other if isinstance(other, Quantity) else Quantity(other)

    def __mul__(self, other):
        o = self._wrap(other)
        return Quantity(self.value * o.value, *[a + b for a, b in zip(self.dims, o.dims)])

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._wrap(other)
        return Quantity(self.value / o.value, *[a - b for a, b in zip(self.dims, o.dims)])

    def __rtruediv__(self, other):
        return self._wrap(other) / self

    def __pow__(self, p):
        return Quantity(self.value ** p, *[d * Fraction(p).limit_denominator(1000) for d in self.dims])

    def __add__(self, other):
        o = self._wrap(other)
        assert self.dims == o.dims, "adding quantities of different dimensions"
        return Quantity(self.value + o.value, *self.dims)

    __radd__ = __add__

    def __gt__(self, other):
        return self.value > float(other)

    def __lt__(self, other):
        return self.value < float(other)

    def __float__(self):
        return self.value


def dims(kg=0, m=0, s=0):
    return tuple(Fraction(x) for x in (kg, m, s))


SI = PhysicalConstants(
    G=Quantity(CONSTANTS.G, kg=-1, m=3, s=-2),
    c=Quantity(CONSTANTS.c, m=1, s=-1),
    hbar=Quantity(CONSTANTS.hbar, kg=1, m=2, s=-1),
    solar_mass=Quantity(CONSTANTS.solar_mass, kg=1),
)


def test_units_of_every_formula():
    bar = BarDetector(Quantity(1400, kg=1), Quantity(1.5, m=1), Quantity(1e4, s=-1))
    chirp = ChirpScenario(Quantity(6e31, kg=1), Quantity(200, s=-1))
    g0 = weber_gamma0(bar, SI)
    assert g0.dims == dims(s=-1)
    assert bar_coupling(bar, SI).dims == dims(s=-1)
    assert gamma0_from_coupling(bar_coupling(bar, SI), bar.omega).dims == dims(s=-1)
    t = dt_max(chirp, SI)
    assert t.dims == dims(s=1)
    assert bandwidth(chirp, SI).dims == dims(s=-1)
    assert acoherence_signal(g0, t, Quantity(1.0), Quantity(1e36)).dims == dims()
    # W / m^2 = kg s^-3
    assert flux_from_occupation(Quantity(1e36), chirp.omega, SI).dims == dims(kg=1, s=-3)


def test_dimensioned_values_equal_plain_values():
    bar = BarDetector(Quantity(1400, kg=1), Quantity(1.5, m=1), Quantity(1e4, s=-1))
    plain = BarDetector(1400, 1.5, 1e4)
    assert float(weber_gamma0(bar, SI)) == pytest.approx(weber_gamma0(plain), rel=1e-14)


def test_reference_bar_rate_is_tiny():
    g0 = weber_gamma0(REFERENCE_BAR)
    assert 1e-35 <= g0 <= 1e-31
    assert g0 == pytest.approx(7.28287176512e-35, rel=1e-10)


def test_rate_scalings():
    b = BarDetector(1000.0, 2.0, 5000.0)
    g = weber_gamma0(b)
    assert weber_gamma0(BarDetector(1000.0, 2.0, 10000.0)) == pytest.approx(16 * g)
    assert weber_gamma0(BarDetector(2000.0, 2.0, 5000.0)) == pytest.approx(2 * g)
    gc = gamma0_from_coupling(3.0, 7.0)
    assert gamma0_from_coupling(6.0, 7.0) == pytest.approx(4 * gc)


@settings(max_examples=50)
@given(st.floats(1.0, 1e5), st.floats(0.1, 10.0), st.floats(10.0, 1e5))
def test_coupling_route_reproduces_weber_rate(mass, length, omega):
    bar = BarDetector(mass, length, omega)
    assert gamma0_from_coupling(bar_coupling(bar), omega) == pytest.approx(weber_gamma0(bar), rel=1e-12)


def test_chirp_window_examples():
    assert dt_max(PRESETS["GW150914"]) == pytest.approx(5e-3, rel=0.2)
    assert dt_max(PRESETS["GW170817"]) == pytest.approx(4e-3, rel=0.25)
    assert dt_max(PRESETS["GW170817@200Hz"]) == pytest.approx(70e-3, rel=0.2)
    t = dt_max(PRESETS["GW150914"])
    assert bandwidth(PRESETS["GW150914"]) == pytest.approx(8 / t)


def test_chirp_window_power_laws():
    masses = np.geomspace(1, 100, 7)
    freqs = np.geomspace(10, 2000, 7)
    tm = [dt_max(ChirpScenario.solar(m, 100.0)) for m in masses]
    tf = [dt_max(ChirpScenario.solar(10.0, f)) for f in freqs]
    assert np.polyfit(np.log(masses), np.log(tm), 1)[0] == pytest.approx(-5 / 6, abs=1e-6)
    assert np.polyfit(np.log(freqs), np.log(tf), 1)[0] == pytest.approx(-11 / 6, abs=1e-6)


def test_signal_and_flux():
    assert acoherence_signal(1e-33, 5e-3, 1e36, 1e36) == pytest.approx(25.0)
    assert acoherence_signal(1e-33, 5e-3, 0.0) == 0.0
    assert acoherence_signal(1e-33, 1e-2, 1.0) == pytest.approx(4 * acoherence_signal(1e-33, 5e-3, 1.0))
    with pytest.raises(ValueError):
        acoherence_signal(math.nan, 1.0, 1.0)
    omega = 2 * math.pi * 200
    assert flux_from_occupation(0.0, omega) == 0.0
    assert flux_from_occupation(2e36, omega) == pytest.approx(2 * flux_from_occupation(1e36, omega))
    # regression constant, order of magnitude only
    assert flux_from_occupation(1e36, omega) == pytest.approx(0.0029259992556404076, rel=1e-12)
    with pytest.raises(ValueError):
        flux_from_occupation(-1.0, omega)


def test_validation():
    with pytest.raises(ValueError):
        BarDetector(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        ChirpScenario(1.0, -5.0)
    with pytest.raises(ValueError):
        gamma0_from_coupling(0.0, 1.0)


def test_scenario_file_and_table(tmp_path):
    doc = {"chirps": ["GW150914", {"name": "light", "M_c_solar": 1.19, "nu_Hz": 200}],
           "bar": {"M_kg": 2300, "L_m": 3.0, "nu_Hz": 900}, "Q": 2.0, "n_mean": 1e30}
    path = tmp_path / "scen.json"
    path.write_text(json.dumps(doc))
    chirps, bar, q, n = load_scenarios(str(path))
    assert [c.name for c in chirps] == ["GW150914", "light"]
    assert bar.M == 2300 and q == 2.0 and n == 1e30
    rows = evaluate(chirps, bar, q, n)
    assert rows[1].dt_max_s == pytest.approx(0.0775, rel=1e-3)
    text = rows_to_csv(rows)
    header = text.splitlines()[0].split(",")
    assert header == ["name", "nu_Hz", "dt_max_s", "bandwidth_rad_s", "gamma0_per_s", "acoherence_signal"]
    assert len(text.splitlines()) == 3
    assert load_scenarios({})[0] == list(PRESETS.values())
    with pytest.raises(ValueError):
        load_scenarios({"chirps": ["nope"]})
    with pytest.raises(ValueError):
        load_scenarios({"chirps": [{"nu_Hz": 100}]})
