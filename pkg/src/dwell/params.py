"""Experiment parameters, unit conventions, scaling laws and decoherence budgets.

Internal unit system
--------------------
Lengths are measured in the zero-point width of the preparation trap,
x_zpf = sqrt(hbar / (2 m omega_t)), momenta in p_zpf = hbar / (2 x_zpf),
times in 1/omega_dw and hbar = 1.  In these units the dynamics depends only
on the dimensionless groups

    R  = omega_t / omega_dw      (trap-to-well frequency ratio)
    D  = d / x_zpf               (well half-separation)
    u0 = x0 / d                  (release point, 0 < u0 < 1)

which avoids floating-point extremes of SI nanoparticle values.

The double well is V(x) = m omega_dw^2 [-x^2 + x^4/(2 d^2)] / 2 with minima
at +-d and an inverted-harmonic barrier at x = 0.  A particle released at
rest from x0 inside the right well swings out to x_out = sqrt(2 d^2 - x0^2)
and back; the half period is well approximated by
omega_dw * t_max = log(4 sqrt(2) d / x0) for x0 << d.

The peak delocalization reached near the first crossing of x = d is
eta = (omega_t/omega_dw) (d/x0) / sqrt(2) zero-point widths, with squeezing
S0 = 20 log10(eta) dB.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field, asdict

import jsonschema

from .errors import DomainError, SchemaError

HBAR = 1.054571817e-34  # J s
KB = 1.380649e-23  # J/K

# Spacing of the first two maxima of a squared Airy function, in units of
# the Airy length: |a2'| - |a1'| with an' the zeros of Ai'.
AIRY_MAX_SPACING = 2.2294046103890538

# Advisory wide-well thresholds: below these the asymptotic scalings
# (period formula, eta, fringe estimate) degrade noticeably.
WIDE_WELL_MIN_D_ZPF = 100.0
WIDE_WELL_MIN_RATIO = 10.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one release experiment.

    ``trap_frequency`` and ``well_frequency`` are angular frequencies.  In
    dimensionless mode (``mass is None`` and ``length_unit == "x_zpf"``)
    only their ratio matters and ``well_frequency = 1.0`` makes times come
    out in units of 1/omega_dw.  ``well_length`` is d, in meters or in
    x_zpf units according to ``length_unit``.  ``start_fraction`` is x0/d.
    ``decoherence_rate`` is the total position-localization rate in units
    of omega_t.  ``position_imprecision`` (x_zpf) and ``timing_imprecision``
    (1/omega_dw) are standard deviations of run-to-run Gaussian errors.
    """

    trap_frequency: float
    well_frequency: float
    well_length: float
    start_fraction: float
    mass: float | None = None
    mean_phonons: float = 0.0
    decoherence_rate: float = 0.0
    position_imprecision: float = 0.0
    timing_imprecision: float = 0.0
    length_unit: str = "x_zpf"
    label: str = ""

    def __post_init__(self):
        if not (self.trap_frequency > 0 and self.well_frequency > 0):
            raise DomainError("trap and well frequencies must be positive")
        if not self.well_length > 0:
            raise DomainError("well length d must be positive")
        if not 0 < self.start_fraction < 1:
            raise DomainError(
                "start position must satisfy 0 < x0 < d "
                f"(got x0/d = {self.start_fraction})"
            )
        if self.mean_phonons < 0:
            raise DomainError("mean phonon number must be >= 0")
        if self.decoherence_rate < 0:
            raise DomainError("decoherence rate must be >= 0")
        if self.position_imprecision < 0 or self.timing_imprecision < 0:
            raise DomainError("imprecision widths must be >= 0")
        if self.length_unit not in ("x_zpf", "m"):
            raise DomainError(f"unsupported length unit {self.length_unit!r}")
        if self.length_unit == "m" and self.mass is None:
            raise DomainError("well_length in meters requires a mass")
        if self.mass is not None and self.mass <= 0:
            raise DomainError("mass must be positive")
        if self.frequency_ratio < WIDE_WELL_MIN_RATIO:
            warnings.warn(
                f"omega_t/omega_dw = {self.frequency_ratio:.3g} is not deep in "
                "the wide-well regime (omega_dw << omega_t); asymptotic "
                "scalings are approximate",
                stacklevel=2,
            )
        if self.d_zpf < WIDE_WELL_MIN_D_ZPF:
            warnings.warn(
                f"d/x_zpf = {self.d_zpf:.3g} is not deep in the wide-well "
                "regime (d >> x_zpf)",
                stacklevel=2,
            )

    @property
    def frequency_ratio(self) -> float:
        """R = omega_t / omega_dw."""
        return self.trap_frequency / self.well_frequency

    @property
    def x_zpf_m(self) -> float | None:
        """Zero-point width in meters, or None in dimensionless mode."""
        if self.mass is None:
            return None
        return math.sqrt(HBAR / (2.0 * self.mass * self.trap_frequency))

    @property
    def d_zpf(self) -> float:
        """Well half-separation d in units of x_zpf."""
        if self.length_unit == "x_zpf":
            return self.well_length
        return self.well_length / self.x_zpf_m

    @property
    def x0_zpf(self) -> float:
        """Release point x0 in units of x_zpf."""
        return self.start_fraction * self.d_zpf

    @property
    def eta(self) -> float:
        """Peak delocalization in zero-point widths."""
        return self.frequency_ratio / (math.sqrt(2.0) * self.start_fraction)

    def config_hash(self) -> str:
        """Stable hash of the physical content, used to tie artifacts together."""
        payload = json.dumps(asdict(self), sort_keys=True, default=repr)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class NoiseSpectra:
    """Noise power spectral densities and environment parameters.

    ``S1`` (s) is the PSD of the dimensionless well-position jitter, ``S2``
    (s) of the relative amplitude jitter, ``S_F`` (N^2 s) of a fluctuating
    homogeneous force.  Gas parameters and the particle radius feed the
    single-collision timescale; ``internal_temperature`` feeds the thermal
    emission rate.
    """

    S1: float = 0.0
    S2: float = 0.0
    S_F: float = 0.0
    gas_mass: float | None = None  # kg
    gas_temperature: float | None = None  # K
    gas_pressure: float | None = None  # Pa
    particle_radius: float | None = None  # m
    internal_temperature: float | None = None  # K

    def __post_init__(self):
        if self.S1 < 0 or self.S2 < 0 or self.S_F < 0:
            raise DomainError("noise PSDs must be >= 0")
        for name in ("gas_mass", "gas_temperature", "gas_pressure",
                     "particle_radius", "internal_temperature"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise DomainError(f"{name} must be positive")


@dataclass
class DecoherenceBudget:
    """Additive decoherence budget, all rates in units of omega_t."""

    thermal: float | None = None
    potential_bound: float | None = None
    force: float | None = None

    @property
    def total(self) -> float:
        return sum(v for v in (self.thermal, self.potential_bound, self.force)
                   if v is not None)


@dataclass
class DerivedScales:
    """Quantities derived from an ExperimentConfig (+ optional spectra).

    Lengths carry x_zpf units, times 1/omega_dw, except where noted.
    ``t_d`` here is the inverted-harmonic estimate arccosh(d/x0)/omega_dw of
    the first crossing of x = d; the classical integrator refines it.
    """

    x_zpf: float  # meters, or 1.0 in dimensionless mode
    p_zpf: float  # kg m/s, or 1.0
    eta: float
    squeezing_db: float
    t_max: float  # units 1/omega_dw
    t_d: float  # units 1/omega_dw (estimate)
    x_out: float  # units of d
    x_out_zpf: float
    fringe_estimate: float  # first-to-second maximum spacing, x_zpf
    t_max_seconds: float | None = None
    gas_time: float | None = None  # seconds
    gas_feasible: bool | None = None
    budget: DecoherenceBudget | None = None
    dimensionless: bool = True
    wide_well: bool = True

    def to_dict(self) -> dict:
        out = asdict(self)
        out["units"] = {
            "x_zpf": "m" if not self.dimensionless else "x_zpf",
            "p_zpf": "kg m/s" if not self.dimensionless else "p_zpf",
            "t_max": "1/omega_dw",
            "t_d": "1/omega_dw",
            "x_out": "d",
            "x_out_zpf": "x_zpf",
            "fringe_estimate": "x_zpf",
            "t_max_seconds": "s",
            "gas_time": "s",
            "budget": "omega_t",
        }
        out["notes"] = {
            "potential_bound": "upper bound, used as the working rate",
            "t_d": "inverted-harmonic estimate; classical module refines",
        }
        return out


def period_formula(start_fraction: float) -> float:
    """Half period omega_dw * t_max = log(4 sqrt(2) / u0), valid for u0 << 1."""
    if not 0 < start_fraction < 1:
        raise DomainError("period formula requires 0 < x0/d < 1")
    return math.log(4.0 * math.sqrt(2.0) / start_fraction)


def crossing_time_estimate(start_fraction: float) -> float:
    """Inverted-harmonic estimate of the first crossing of x = d.

    Treating the barrier region as a pure inverted parabola gives
    x(t) = x0 cosh(omega t), hence omega t_d ~ arccosh(d/x0).
    """
    return math.acosh(1.0 / start_fraction)


def fringe_spacing_estimate(frequency_ratio: float, d_zpf: float,
                            start_fraction: float) -> float:
    """Predicted spacing of the two leading interference maxima, in x_zpf.

    At the outer turning point the potential is locally linear with slope
    F = m omega_dw^2 d sqrt(2 - u0^2)(1 - u0^2); the stationary pattern is
    a squared Airy function of width w = (hbar^2 / 2 m F)^(1/3), giving
    delta_f = 2.2294 w.  In x_zpf units w = (2 R^2 / F~)^(1/3) with
    F~ = D sqrt(2 - u0^2)(1 - u0^2).
    """
    u0 = start_fraction
    f_tilde = d_zpf * math.sqrt(2.0 - u0 * u0) * (1.0 - u0 * u0)
    w = (2.0 * frequency_ratio**2 / f_tilde) ** (1.0 / 3.0)
    return AIRY_MAX_SPACING * w


def squeezing_db_from_eta(eta: float) -> float:
    """S0 = 20 log10(eta), the squeezing reached at peak delocalization."""
    if eta <= 0:
        raise DomainError("eta must be positive")
    return 20.0 * math.log10(eta)


def gas_collision_time(spectra: NoiseSpectra, t_max_seconds: float | None = None,
                       margin: float = 10.0) -> tuple[float, bool | None]:
    """Timescale of a single gas-molecule scattering event, in seconds.

    t_gas = 3 sqrt(m_gas k_B T_gas) / (16 pi sqrt(2 pi) P_gas R^2).
    Returns (t_gas, feasible) where feasible checks that a full orbit fits
    comfortably inside one collision time, 2 t_max < t_gas / margin; it is
    None when t_max_seconds is not supplied.
    """
    if None in (spectra.gas_mass, spectra.gas_temperature,
                spectra.gas_pressure, spectra.particle_radius):
        raise DomainError("gas parameters (mass, temperature, pressure, radius) required")
    t_gas = (3.0 * math.sqrt(spectra.gas_mass * KB * spectra.gas_temperature)
             / (16.0 * math.pi * math.sqrt(2.0 * math.pi)
                * spectra.gas_pressure * spectra.particle_radius**2))
    feasible = None
    if t_max_seconds is not None:
        feasible = 2.0 * t_max_seconds < t_gas / margin
    return t_gas, feasible


def thermal_decoherence_rate(internal_temperature: float,
                             trap_frequency: float) -> float:
    """Thermal-emission decoherence rate, Gamma_T = omega_t 1e-10 (T/300K)^6.

    Quoted for a silica particle at omega_t/2pi = 100 kHz; other materials
    or trap frequencies fall outside the validity of this scaling and only
    get the same power law applied.
    """
    if internal_temperature <= 0:
        raise DomainError("temperature must be positive")
    if trap_frequency <= 0:
        raise DomainError("trap frequency must be positive")
    return trap_frequency * 1e-10 * (internal_temperature / 300.0) ** 6


def potential_noise_bound(spectra: NoiseSpectra, config: ExperimentConfig) -> float:
    """Upper bound on the decoherence rate from well jitter, units of omega_t.

    Gamma_P / omega_t <= (2 pi omega_dw / 4) (omega_dw/omega_t)^3
                         [25 S1 + 2 (d/x_zpf)^2 S2]

    The position jitter couples through the orbit-maximum curvature
    V'' < 5 m omega_dw^2 and the amplitude jitter through the maximum slope
    V' < sqrt(2) d m omega_dw^2, whence the 25 and 2 factors.  The bound is
    returned as the working (conservative) rate.
    """
    ratio = config.well_frequency / config.trap_frequency
    bracket = 25.0 * spectra.S1 + 2.0 * config.d_zpf**2 * spectra.S2
    return (2.0 * math.pi * config.well_frequency / 4.0) * ratio**3 * bracket


def force_noise_rate(S_F: float, x_zpf: float, hbar: float = HBAR) -> float:
    """Decoherence rate of a white force of PSD S_F: Gamma_F = 2 pi x_zpf^2 S_F / hbar^2.

    Absolute rate in 1/s for SI inputs; pass hbar=1 for scaled units.
    """
    if S_F < 0:
        raise DomainError("force PSD must be >= 0")
    return 2.0 * math.pi * x_zpf**2 * S_F / hbar**2


def derive_scales(config: ExperimentConfig,
                  spectra: NoiseSpectra | None = None) -> DerivedScales:
    """Populate every derived quantity for a config; budget needs spectra."""
    eta = config.eta
    u0 = config.start_fraction
    x_out = math.sqrt(2.0 - u0 * u0)
    t_max = period_formula(u0)
    dimensionless = config.mass is None
    x_zpf = config.x_zpf_m if not dimensionless else 1.0
    p_zpf = HBAR / (2.0 * x_zpf) if not dimensionless else 1.0
    t_max_seconds = None
    if not dimensionless:
        # SI mode: well_frequency carries rad/s
        t_max_seconds = t_max / config.well_frequency

    scales = DerivedScales(
        x_zpf=x_zpf,
        p_zpf=p_zpf,
        eta=eta,
        squeezing_db=squeezing_db_from_eta(eta),
        t_max=t_max,
        t_d=crossing_time_estimate(u0),
        x_out=x_out,
        x_out_zpf=x_out * config.d_zpf,
        fringe_estimate=fringe_spacing_estimate(
            config.frequency_ratio, config.d_zpf, u0),
        t_max_seconds=t_max_seconds,
        dimensionless=dimensionless,
        wide_well=(config.d_zpf >= WIDE_WELL_MIN_D_ZPF
                   and config.frequency_ratio >= WIDE_WELL_MIN_RATIO),
    )

    if spectra is not None:
        budget = DecoherenceBudget()
        if spectra.internal_temperature is not None:
            budget.thermal = 1e-10 * (spectra.internal_temperature / 300.0) ** 6
        budget.potential_bound = (potential_noise_bound(spectra, config)
                                  / config.trap_frequency)
        if config.x_zpf_m is not None:
            budget.force = (force_noise_rate(spectra.S_F, config.x_zpf_m)
                            / config.trap_frequency)
        elif spectra.S_F == 0.0:
            budget.force = 0.0
        scales.budget = budget
        if (spectra.gas_pressure is not None
                and spectra.particle_radius is not None
                and spectra.gas_mass is not None
                and spectra.gas_temperature is not None):
            scales.gas_time, scales.gas_feasible = gas_collision_time(
                spectra, t_max_seconds=scales.t_max_seconds)
    return scales


# --------------------------------------------------------------------------
# Parameter-set presets.
#
# The three large sets come straight from the published table
# (u0 = 0.1, omega_dw/omega_t and d/x_zpf per row).  The desk-scale sets are
# constructed from the eta/S0 formulas to land on the 40, 20 and 1 dB rungs
# of the size ladder and are marked "derived"; they keep u0 = 0.1.
# --------------------------------------------------------------------------

def _preset(label, ratio, d_zpf, source, gamma=0.0):
    return {
        "config": ExperimentConfig(
            trap_frequency=ratio,
            well_frequency=1.0,
            well_length=d_zpf,
            start_fraction=0.1,
            decoherence_rate=gamma,
            label=label,
        ),
        "source": source,
    }


with warnings.catch_warnings():
    warnings.simplefilter("ignore")  # XS/S are deliberately not wide-well
    PRESETS = {
        "XXL": _preset("XXL", 1e4, 1e8, "table"),
        "XL": _preset("XL", 1e3, 1e6, "table"),
        "L": _preset("L", 1e2, 1e4, "table"),
        "M": _preset("M", 10.0 * math.sqrt(2.0), 1e3, "derived"),
        "S": _preset("S", math.sqrt(2.0), 1e2, "derived"),
        "XS": _preset("XS", math.sqrt(2.0) * 10 ** (0.05) / 10.0, 30.0, "derived"),
    }


def get_preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]["config"]
    except KeyError:
        raise DomainError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None


# --------------------------------------------------------------------------
# JSON experiment documents: every field carries an explicit unit string.
# --------------------------------------------------------------------------

def _unit_field(units):
    return {
        "type": "object",
        "required": ["value", "unit"],
        "properties": {
            "value": {"type": "number"},
            "unit": {"enum": list(units)},
        },
        "additionalProperties": False,
    }


CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["trap_frequency", "well_frequency", "well_length",
                 "start_position"],
    "properties": {
        "label": {"type": "string"},
        "trap_frequency": _unit_field(["rad/s", "Hz", "omega_dw"]),
        "well_frequency": _unit_field(["rad/s", "Hz", "omega_dw"]),
        "well_length": _unit_field(["m", "um", "nm", "x_zpf"]),
        "start_position": _unit_field(["d", "x_zpf"]),
        "mass": _unit_field(["kg"]),
        "mean_phonons": _unit_field(["1"]),
        "decoherence_rate": _unit_field(["omega_t", "omega_dw"]),
        "position_imprecision": _unit_field(["x_zpf"]),
        "timing_imprecision": _unit_field(["1/omega_dw", "s"]),
        "noise": {
            "type": "object",
            "properties": {
                "S1": _unit_field(["s"]),
                "S2": _unit_field(["s"]),
                "S_F": _unit_field(["N^2 s"]),
                "gas_mass": _unit_field(["kg"]),
                "gas_temperature": _unit_field(["K"]),
                "gas_pressure": _unit_field(["Pa", "mbar"]),
                "particle_radius": _unit_field(["m", "nm"]),
                "internal_temperature": _unit_field(["K"]),
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_LENGTH_TO_M = {"m": 1.0, "um": 1e-6, "nm": 1e-9}
_PRESSURE_TO_PA = {"Pa": 1.0, "mbar": 100.0}


def _angular(entry):
    value, unit = entry["value"], entry["unit"]
    if unit == "Hz":
        return 2.0 * math.pi * value, "rad/s"
    return value, unit


def config_from_document(doc: dict) -> tuple[ExperimentConfig, NoiseSpectra | None]:
    """Build a config (and optional spectra) from a validated JSON document."""
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"config document invalid: {exc.message}") from exc

    omega_t, omega_t_unit = _angular(doc["trap_frequency"])
    omega_dw, omega_dw_unit = _angular(doc["well_frequency"])
    if (omega_t_unit == "omega_dw") != (omega_dw_unit == "omega_dw"):
        raise SchemaError("frequencies must both be absolute or both relative")
    if omega_dw_unit == "omega_dw" and omega_dw != 1.0:
        raise SchemaError("well_frequency in omega_dw units must be 1.0")

    mass = doc.get("mass", {}).get("value")

    length = doc["well_length"]
    if length["unit"] == "x_zpf":
        d_value, length_unit = length["value"], "x_zpf"
    else:
        d_value = length["value"] * _LENGTH_TO_M[length["unit"]]
        length_unit = "m"

    start = doc["start_position"]
    if start["unit"] == "d":
        start_fraction = start["value"]
    else:  # x_zpf: needs d in the same units
        if length_unit != "x_zpf":
            if mass is None:
                raise SchemaError("start_position in x_zpf with metric d needs a mass")
            x_zpf = math.sqrt(HBAR / (2.0 * mass * omega_t))
            start_fraction = start["value"] * x_zpf / d_value
        else:
            start_fraction = start["value"] / d_value

    gamma = doc.get("decoherence_rate", {"value": 0.0, "unit": "omega_t"})
    gamma_value = gamma["value"]
    if gamma["unit"] == "omega_dw":
        gamma_value = gamma_value * omega_dw / omega_t

    sigma_t = doc.get("timing_imprecision", {"value": 0.0, "unit": "1/omega_dw"})
    sigma_t_value = sigma_t["value"]
    if sigma_t["unit"] == "s":
        sigma_t_value = sigma_t_value * omega_dw

    config = ExperimentConfig(
        trap_frequency=omega_t,
        well_frequency=omega_dw if omega_dw_unit != "omega_dw" else 1.0,
        well_length=d_value,
        start_fraction=start_fraction,
        mass=mass,
        mean_phonons=doc.get("mean_phonons", {"value": 0.0})["value"],
        decoherence_rate=gamma_value,
        position_imprecision=doc.get("position_imprecision", {"value": 0.0})["value"],
        timing_imprecision=sigma_t_value,
        length_unit=length_unit,
        label=doc.get("label", ""),
    )

    spectra = None
    if "noise" in doc:
        n = doc["noise"]
        pressure = n.get("gas_pressure")
        radius = n.get("particle_radius")
        spectra = NoiseSpectra(
            S1=n.get("S1", {"value": 0.0})["value"],
            S2=n.get("S2", {"value": 0.0})["value"],
            S_F=n.get("S_F", {"value": 0.0})["value"],
            gas_mass=n.get("gas_mass", {}).get("value"),
            gas_temperature=n.get("gas_temperature", {}).get("value"),
            gas_pressure=(pressure["value"] * _PRESSURE_TO_PA[pressure["unit"]]
                          if pressure else None),
            particle_radius=(radius["value"] * _LENGTH_TO_M[radius["unit"]]
                             if radius else None),
            internal_temperature=n.get("internal_temperature", {}).get("value"),
        )
    return config, spectra


def load_config(path) -> tuple[ExperimentConfig, NoiseSpectra | None]:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config file is not valid JSON: {exc}") from exc
    return config_from_document(doc)
