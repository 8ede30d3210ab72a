"""Classical reference orbit in the double well.

In units of the well length d and the inverse well frequency (tau = omega_dw t)
the equation of motion is universal,

    u'' = u - u^3,        u(0) = x0/d,  u'(0) = 0,

with conserved energy E = u'^2/2 + (-u^2 + u^4/2)/2 in units of m omega^2 d^2.
The orbit runs from u0 out to u_out = sqrt(2 - u0^2) and back; the half period
t_max is located by the sign change of the momentum.  A velocity-Verlet
integrator keeps the energy error bounded; events are refined by local
quadratic interpolation so their accuracy beats the step size.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ToleranceError
from .params import ExperimentConfig, period_formula

# Hard ceiling from the fastest curvature on the orbit, |V''| <= 5 m omega^2:
# dt must resolve sqrt(5) omega.
MAX_DT = 0.01 / math.sqrt(5.0)
DEFAULT_DT = 2.0e-4
ENERGY_DRIFT_LIMIT = 1e-8  # relative, per period, measured at period marks


def evaluate_potential(x, config: ExperimentConfig):
    """V(x) at x in x_zpf units, returned in units of hbar omega_dw.

    V / (hbar omega_dw) = (1/4R) [-xi^2 + xi^4 / (2 D^2)].
    """
    xi = np.asarray(x, dtype=float)
    r = config.frequency_ratio
    d = config.d_zpf
    return (-(xi**2) + xi**4 / (2.0 * d * d)) / (4.0 * r)


def evaluate_force(x, config: ExperimentConfig):
    """-V'(x) at x in x_zpf units, in units of hbar omega_dw / x_zpf."""
    xi = np.asarray(x, dtype=float)
    r = config.frequency_ratio
    d = config.d_zpf
    return (xi - xi**3 / (d * d)) / (2.0 * r)


def evaluate_curvature(x, config: ExperimentConfig):
    """V''(x) at x in x_zpf units, in units of m omega_dw^2.

    V'' = m omega_dw^2 (3 x^2 / d^2 - 1): -1 at the barrier top, +2 at the
    minima, +5 at the outer turning point sqrt(2) d.
    """
    xi = np.asarray(x, dtype=float)
    return 3.0 * (xi / config.d_zpf) ** 2 - 1.0


def period_approx(config: ExperimentConfig) -> float:
    """Closed-form half period omega_dw t_max = log(4 sqrt(2) d / x0).

    Valid for x0 << d; the relative error grows once x0/d is no longer
    small (at x0/d = 4 sqrt(2)/e ~ 2.08 the formula would return 1, far
    outside its validity).
    """
    return period_formula(config.start_fraction)


@dataclass
class OrbitEvents:
    """Refined event times (1/omega_dw) and derived orbit quantities."""

    t_max: float  # first outer turning point (p sign change)
    t_d: float  # first crossing of x = d
    x_out: float  # turning-point position, units of d
    energy: float  # conserved energy, units of m omega^2 d^2
    energy_drift: float  # relative drift at the final period mark
    closure_error: float  # |u(2 t_max) - u0|, units of d

    def to_dict(self):
        return {
            "t_max": self.t_max,
            "t_d": self.t_d,
            "period": 2.0 * self.t_max,
            "x_out_over_d": self.x_out,
            "energy": self.energy,
            "energy_drift": self.energy_drift,
            "closure_error_over_d": self.closure_error,
            "units": {"time": "1/omega_dw", "energy": "m omega_dw^2 d^2"},
        }


class ClassicalTrajectory:
    """Time-sampled orbit plus events; positions in units of d internally."""

    def __init__(self, config: ExperimentConfig, times, u, v, dt, events: OrbitEvents):
        self.config = config
        self.times = times
        self.u = u  # x/d
        self.v = v  # u' = p / (m omega_dw d)
        self.dt = dt
        self.events = events

    @property
    def t_max(self):
        return self.events.t_max

    @property
    def t_d(self):
        return self.events.t_d

    @property
    def energy(self):
        return self.events.energy

    @property
    def x_zpf_units(self):
        """Positions in x_zpf units."""
        return self.u * self.config.d_zpf

    @property
    def p_zpf_units(self):
        """Momenta in p_zpf units: p/p_zpf = (D/R) u'."""
        return self.v * self.config.d_zpf / self.config.frequency_ratio

    def interpolate(self, tau):
        """Cubic-Hermite (u, u') at arbitrary times within the sampled span."""
        tau = np.asarray(tau, dtype=float)
        if np.any(tau < self.times[0] - 1e-12) or np.any(tau > self.times[-1] + 1e-12):
            raise DomainError("requested time outside the integrated span")
        idx = np.clip(np.searchsorted(self.times, tau) - 1, 0, len(self.times) - 2)
        h = self.dt
        s = (tau - self.times[idx]) / h
        u0, u1 = self.u[idx], self.u[idx + 1]
        v0, v1 = self.v[idx], self.v[idx + 1]
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        u = h00 * u0 + h10 * h * v0 + h01 * u1 + h11 * h * v1
        # derivative of the Hermite basis gives u'
        d00 = 6 * s * (s - 1) / h
        d10 = (1 - 4 * s + 3 * s * s)
        d01 = -d00
        d11 = (3 * s * s - 2 * s)
        v = d00 * u0 + d10 * v0 + d01 * u1 + d11 * v1
        return u, v

    def export_csv(self, path, stride: int = 1):
        """Write (t, x, p) with both d- and x_zpf-normalized columns."""
        d_zpf = self.config.d_zpf
        ratio = self.config.frequency_ratio
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_omega_dw", "x_over_d", "p_over_m_omega_d",
                             "x_over_xzpf", "p_over_pzpf"])
            for i in range(0, len(self.times), stride):
                writer.writerow([
                    f"{self.times[i]:.12g}",
                    f"{self.u[i]:.12g}",
                    f"{self.v[i]:.12g}",
                    f"{self.u[i] * d_zpf:.12g}",
                    f"{self.v[i] * d_zpf / ratio:.12g}",
                ])

    def export_events_json(self, path):
        payload = self.events.to_dict()
        payload["config_hash"] = self.config.config_hash()
        payload["label"] = self.config.label
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)


def _acceleration(u):
    return u * (1.0 - u * u)


def _energy(u, v):
    return 0.5 * v * v + 0.5 * (-(u * u) + 0.5 * u**4)


def _refine_quadratic(t0, dt, f0, f1, f2):
    """Root of the parabola through (t0, f0), (t0+dt, f1), (t0+2dt, f2).

    Returns the root inside [t0 + dt*0, t0 + 2dt] closest to the sign
    change between f1 and f2 (callers bracket accordingly).
    """
    a = 0.5 * (f2 - 2.0 * f1 + f0)
    b = 0.5 * (f2 - f0)
    c = f1  # parabola in s = (t - (t0 + dt)) / dt
    if abs(a) < 1e-300:
        s = -c / b
    else:
        disc = b * b - 4.0 * a * c
        disc = max(disc, 0.0)
        s1 = (-b + math.sqrt(disc)) / (2.0 * a)
        s2 = (-b - math.sqrt(disc)) / (2.0 * a)
        s = s1 if 0.0 <= s1 <= 1.0 else s2
    return t0 + dt * (1.0 + s)


def integrate_from(u0: float, v0: float, dt: float, t_end: float):
    """Raw velocity-Verlet run from (u0, v0) in d-units; returns (times, u, v).

    No event detection; used for perturbed starts and degenerate cases such
    as release exactly at the well minimum.
    """
    if dt > MAX_DT:
        raise DomainError(
            f"dt = {dt} does not resolve the fastest curvature; need <= {MAX_DT:.3g}")
    n_steps = int(math.ceil(t_end / dt))
    u = np.empty(n_steps + 1)
    v = np.empty(n_steps + 1)
    u[0], v[0] = u0, v0
    a = _acceleration(u0)
    ui, vi = u0, v0
    for i in range(1, n_steps + 1):
        ui = ui + vi * dt + 0.5 * a * dt * dt
        a_new = ui * (1.0 - ui * ui)
        vi = vi + 0.5 * (a + a_new) * dt
        a = a_new
        u[i] = ui
        v[i] = vi
    return np.arange(n_steps + 1) * dt, u, v


def integrate_orbit(config: ExperimentConfig, dt: float | None = None,
                    n_periods: float = 1.0) -> ClassicalTrajectory:
    """Velocity-Verlet integration over at least ``n_periods`` full periods.

    Raises ToleranceError if the energy drift at the final period mark
    exceeds 1e-8 relative.
    """
    if dt is None:
        dt = DEFAULT_DT
    u0 = config.start_fraction
    t_end = 2.0 * period_formula(u0) * n_periods * 1.05 + 5.0 * dt
    times, u, v = integrate_from(u0, 0.0, dt, t_end)
    n_steps = len(times) - 1
    e0 = _energy(u0, 0.0)

    # first momentum sign change (+ -> -) locates t_max
    sign_change = np.nonzero((v[1:-1] > 0.0) & (v[2:] <= 0.0))[0]
    if len(sign_change) == 0:
        raise DomainError("no turning point found; is the start a fixed point?")
    k = sign_change[0] + 1
    t_max = _refine_quadratic(times[k - 1], dt, v[k - 1], v[k], v[k + 1])
    # position at the refined time from a local Taylor step
    h = t_max - times[k]
    x_out = u[k] + v[k] * h + 0.5 * _acceleration(u[k]) * h * h

    # first crossing of u = 1
    cross = np.nonzero((u[:-1] < 1.0) & (u[1:] >= 1.0))[0]
    if len(cross) == 0:
        t_d = math.nan
    else:
        j = cross[0]
        # solve u_j + v_j h + a_j h^2 / 2 = 1 on [0, dt]
        aj = 0.5 * _acceleration(u[j])
        bj, cj = v[j], u[j] - 1.0
        disc = max(bj * bj - 4.0 * aj * cj, 0.0)
        h1 = (-bj + math.sqrt(disc)) / (2.0 * aj)
        h2 = (-bj - math.sqrt(disc)) / (2.0 * aj)
        hh = h1 if 0.0 <= h1 <= dt else h2
        t_d = times[j] + hh

    # energy drift at the last full period mark
    t_period = 2.0 * t_max
    marks = int(math.floor(times[-1] / t_period))
    e_scale = max(abs(e0), 0.25)  # well depth is 1/4 in these units
    if marks >= 1:
        k_mark = int(round(marks * t_period / dt))
        k_mark = min(k_mark, n_steps)
        drift = abs(_energy(u[k_mark], v[k_mark]) - e0) / e_scale / marks
    else:
        drift = abs(_energy(u[-1], v[-1]) - e0) / e_scale
    if drift > ENERGY_DRIFT_LIMIT:
        raise ToleranceError(
            f"energy drift {drift:.3g} per period exceeds {ENERGY_DRIFT_LIMIT}; "
            "reduce dt")

    k2 = int(round(t_period / dt))
    closure = abs(u[min(k2, n_steps)] - u0) if k2 <= n_steps else math.nan

    events = OrbitEvents(t_max=t_max, t_d=t_d, x_out=x_out, energy=e0,
                         energy_drift=drift, closure_error=closure)
    return ClassicalTrajectory(config, times, u, v, dt, events)


def integrate_orbit_reference(config: ExperimentConfig, t_eval=None,
                              rtol: float = 1e-12):
    """Independent adaptive RK45 cross-check (scipy), same units.

    Returns (times, u, v).  Used as an oracle against the symplectic
    integrator, never in the production path.
    """
    from scipy.integrate import solve_ivp

    u0 = config.start_fraction
    t_end = 2.2 * period_formula(u0)
    if t_eval is None:
        t_eval = np.linspace(0.0, t_end, 4001)

    def rhs(_, y):
        return [y[1], y[0] * (1.0 - y[0] ** 2)]

    sol = solve_ivp(rhs, (0.0, t_end), [u0, 0.0], t_eval=t_eval,
                    rtol=rtol, atol=1e-14, method="RK45")
    return sol.t, sol.y[0], sol.y[1]
