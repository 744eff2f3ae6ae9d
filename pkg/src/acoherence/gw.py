"""Order-of-magnitude numbers for acoherence searches with resonant-mass detectors.

All quantities are SI. Signatures carry unit aliases (``Kilogram``, ``Hertz``
and so on); they are plain floats at run time. The formulas use only
arithmetic operators, so any number-like object with unit bookkeeping can be
passed through them.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

from scipy import constants as _sc

Kilogram = float
Meter = float
Second = float
Hertz = float
RadPerSecond = float
PerSecond = float
WattPerSquareMeter = float
Dimensionless = float

DEFAULT_OCCUPATION = 1e36


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 values from :mod:`scipy.constants`; solar mass from IAU 2015 (GM_sun / G)."""

    G: float = _sc.G  # m^3 kg^-1 s^-2
    c: float = _sc.c  # m s^-1
    hbar: float = _sc.hbar  # J s
    solar_mass: float = 1.98847e30  # kg


CONSTANTS = PhysicalConstants()


def _positive(name, value):
    if not value > 0 or not math.isfinite(float(value)):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class BarDetector:
    """Resonant bar of mass ``M`` (kg), length ``L`` (m) and angular frequency ``omega`` (rad/s)."""

    M: Kilogram
    L: Meter
    omega: RadPerSecond
    name: str = ""

    def __post_init__(self):
        _positive("M", self.M)
        _positive("L", self.L)
        _positive("omega", self.omega)

    @classmethod
    def from_frequency(cls, M: Kilogram, L: Meter, nu: Hertz, name: str = "") -> BarDetector:
        return cls(M, L, 2 * math.pi * nu, name)

    @property
    def nu(self) -> Hertz:
        return self.omega / (2 * math.pi)


# A kHz-band aluminium bar of the resonant-mass generation; the round numbers
# are representative, not those of any particular instrument.
REFERENCE_BAR = BarDetector.from_frequency(1.4e3, 1.5, 1.6e3, name="reference bar")


@dataclass(frozen=True)
class ChirpScenario:
    """Inspiral with chirp mass ``M_c`` (kg) observed around frequency ``nu`` (Hz)."""

    M_c: Kilogram
    nu: Hertz
    name: str = ""

    def __post_init__(self):
        _positive("M_c", self.M_c)
        _positive("nu", self.nu)

    @classmethod
    def solar(cls, M_c_solar: float, nu: Hertz, name: str = "") -> ChirpScenario:
        return cls(M_c_solar * CONSTANTS.solar_mass, nu, name)

    @property
    def omega(self) -> RadPerSecond:
        return 2 * math.pi * self.nu

    def k(self, const: PhysicalConstants = CONSTANTS):
        """Chirp rate constant in d(omega)/dt = k omega^(11/3), units s^(5/3)."""
        return 48 / 5 * (const.G * self.M_c / (2 * const.c ** 3)) ** (5 / 3)


PRESETS = {
    "GW150914": ChirpScenario.solar(30.0, 200.0, name="GW150914"),
    "GW170817": ChirpScenario.solar(1.19, 1000.0, name="GW170817"),
    "GW170817@200Hz": ChirpScenario.solar(1.19, 200.0, name="GW170817@200Hz"),
}


def weber_gamma0(bar: BarDetector, const: PhysicalConstants = CONSTANTS) -> PerSecond:
    """Spontaneous graviton emission rate 8 G M L^2 omega^4 / (pi^4 c^5)."""
    return 8 * const.G * bar.M * bar.L ** 2 * bar.omega ** 4 / (math.pi ** 4 * const.c ** 5)


def bar_coupling(bar: BarDetector, const: PhysicalConstants = CONSTANTS) -> PerSecond:
    """Bar-field coupling g = sqrt(8 G M L^2 omega^5 / (pi^3 c^5))."""
    return (8 * const.G * bar.M * bar.L ** 2 * bar.omega ** 5 / (math.pi ** 3 * const.c ** 5)) ** 0.5


def gamma0_from_coupling(g: PerSecond, omega: RadPerSecond) -> PerSecond:
    """Golden-rule rate g^2 / (pi omega) for the mode density 1/(2 pi^2 omega)."""
    _positive("g", g)
    _positive("omega", omega)
    return g ** 2 / (math.pi * omega)


def dt_max(scenario: ChirpScenario, const: PhysicalConstants = CONSTANTS) -> Second:
    """Longest window over which the chirp stays within the detector band, 2 sqrt(2/k) omega^(-11/6)."""
    return 2 * (2 / scenario.k(const)) ** 0.5 * scenario.omega ** (-11 / 6)


def bandwidth(scenario: ChirpScenario, const: PhysicalConstants = CONSTANTS) -> RadPerSecond:
    """Full angular bandwidth 2 d(omega) = 8 / dt_max needed to follow the chirp (diagnostic)."""
    return 8 / dt_max(scenario, const)


def acoherence_signal(gamma0: PerSecond, dt: Second, Q: Dimensionless,
                      n_mean: Dimensionless = DEFAULT_OCCUPATION) -> Dimensionless:
    """Excess count variance (gamma0 dt)^2 Q <n> over the Poisson value."""
    for name, v in (("gamma0", gamma0), ("dt", dt), ("Q", Q), ("n_mean", n_mean)):
        if not math.isfinite(float(v)):
            raise ValueError(f"{name} must be finite")
    return (gamma0 * dt) ** 2 * Q * n_mean


def flux_from_occupation(n_mean: Dimensionless, omega: RadPerSecond,
                         const: PhysicalConstants = CONSTANTS) -> WattPerSquareMeter:
    """Energy flux density <n> hbar omega^4 / c^2 of a mode occupied by <n> quanta."""
    if n_mean < 0:
        raise ValueError("occupation must be non-negative")
    _positive("omega", omega)
    return n_mean * const.hbar * omega ** 4 / const.c ** 2


# ---------------------------------------------------------------------------
# scenario files and tables

TABLE_COLUMNS = ("name", "nu_Hz", "dt_max_s", "bandwidth_rad_s", "gamma0_per_s", "acoherence_signal")


@dataclass
class ScenarioRow:
    name: str
    nu_Hz: float
    dt_max_s: float
    bandwidth_rad_s: float
    gamma0_per_s: float
    acoherence_signal: float


def evaluate(chirps, bar: BarDetector = REFERENCE_BAR, Q: float = 1.0,
             n_mean: float = DEFAULT_OCCUPATION) -> list[ScenarioRow]:
    """One row per chirp: window length, bandwidth, bar rate and the signal size at that window."""
    g0 = weber_gamma0(bar)
    rows = []
    for ch in chirps:
        t = dt_max(ch)
        rows.append(ScenarioRow(ch.name, ch.nu, t, bandwidth(ch), g0, acoherence_signal(g0, t, Q, n_mean)))
    return rows


def load_scenarios(source) -> tuple[list[ChirpScenario], BarDetector, float, float]:
    """Read a scenario JSON document (a path, a JSON string or a dict).

    Keys: ``chirps`` (list of ``{name, M_c_solar | M_c_kg, nu_Hz}`` or preset
    names), optional ``bar`` (``{M_kg, L_m, nu_Hz | omega_rad_s}``), ``Q`` and
    ``n_mean``.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            with open(text) as fh:
                text = fh.read()
        doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValueError("scenario document must be a JSON object")
    chirps = []
    for item in doc.get("chirps", list(PRESETS)):
        if isinstance(item, str):
            if item not in PRESETS:
                raise ValueError(f"unknown preset {item!r}; choose from {', '.join(PRESETS)}")
            chirps.append(PRESETS[item])
            continue
        if "M_c_kg" in item:
            m = float(item["M_c_kg"])
        elif "M_c_solar" in item:
            m = float(item["M_c_solar"]) * CONSTANTS.solar_mass
        else:
            raise ValueError("each chirp needs M_c_solar or M_c_kg")
        chirps.append(ChirpScenario(m, float(item["nu_Hz"]), item.get("name", "")))
    bar = REFERENCE_BAR
    if "bar" in doc:
        b = doc["bar"]
        if "omega_rad_s" in b:
            bar = BarDetector(float(b["M_kg"]), float(b["L_m"]), float(b["omega_rad_s"]), b.get("name", ""))
        else:
            bar = BarDetector.from_frequency(float(b["M_kg"]), float(b["L_m"]), float(b["nu_Hz"]),
                                             b.get("name", ""))
    return chirps, bar, float(doc.get("Q", 1.0)), float(doc.get("n_mean", DEFAULT_OCCUPATION))


def rows_to_csv(rows, fmt=lambda x: f"{x:.12g}") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for r in rows:
        d = asdict(r)
        w.writerow([d["name"]] + [fmt(d[c]) for c in TABLE_COLUMNS[1:]])
    return buf.getvalue()
