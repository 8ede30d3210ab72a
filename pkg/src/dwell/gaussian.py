"""Second-moment (Gaussian) dynamics in the frame riding the classical orbit.

The potential is expanded to second order around the classical trajectory,
so the centered moments obey linear equations with time-dependent stiffness
k(t) = V''(x_c(t)).  In zero-point units (s_xx = sigma_xx / x_zpf^2, etc.,
tau = omega_dw t, R = omega_t/omega_dw, a = k / m omega_dw^2):

    s_xx' = 2 R s_xp
    s_xp' = R s_pp - (a/R) s_xx
    s_pp' = -2 (a/R) s_xp + 4 Gamma/omega_dw

The last term is the momentum diffusion equivalent to the position-dephasing
double commutator at rate Gamma per x_zpf^2.  Means stay at zero in this
frame.  The same linear system's fundamental matrix Phi(tau) provides the
response of the state to initial displacements and to a white force, which
the analysis layer uses to fold decoherence into coherent distributions.

The squeezing metric is evaluated from these quadratic moments only:
S = -10 log10(min_theta var(x_theta) / x_zpf^2), the minimizer being the
smallest eigenvalue of the normalized covariance matrix.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .classical import ClassicalTrajectory, DEFAULT_DT
from .errors import DomainError, ToleranceError
from .params import ExperimentConfig

HEISENBERG_TOL = 1e-9


@dataclass
class GaussianState:
    """Centered second moments at one instant, in zero-point units."""

    s_xx: float
    s_xp: float
    s_pp: float
    time: float = 0.0
    mean_x: float = 0.0
    mean_p: float = 0.0

    def validate(self):
        if self.s_xx <= 0.0 or self.s_pp <= 0.0:
            raise DomainError("covariance diagonal must be positive")
        det = self.s_xx * self.s_pp - self.s_xp**2
        if det < 1.0 - HEISENBERG_TOL:
            raise DomainError(
                f"covariance violates the Heisenberg bound: det = {det:.12g} < 1")
        return self

    @classmethod
    def thermal(cls, n_bar: float = 0.0):
        if n_bar < 0:
            raise DomainError("mean phonon number must be >= 0")
        width = 2.0 * n_bar + 1.0
        return cls(s_xx=width, s_xp=0.0, s_pp=width)


def squeezing_db(state: GaussianState) -> float:
    """Best squeezing over all quadrature angles, in dB.

    min_theta var(x_theta) with x_theta = cos(theta) x + x_zpf sin(theta)
    p/p_zpf is the smallest eigenvalue of [[s_xx, s_xp], [s_xp, s_pp]].
    """
    state.validate()
    half_trace = 0.5 * (state.s_xx + state.s_pp)
    radius = math.hypot(0.5 * (state.s_xx - state.s_pp), state.s_xp)
    lam_min = half_trace - radius
    return -10.0 * math.log10(lam_min)


def delta_x(state: GaussianState) -> float:
    """Position spread in zero-point units."""
    state.validate()
    return math.sqrt(state.s_xx)


def rotate_state(state: GaussianState, theta: float) -> GaussianState:
    """Rotate the normalized covariance in phase space (test helper)."""
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, s], [-s, c]])
    cov = np.array([[state.s_xx, state.s_xp], [state.s_xp, state.s_pp]])
    out = rot @ cov @ rot.T
    return GaussianState(out[0, 0], out[0, 1], out[1, 1], time=state.time)


class MomentTimeline:
    """Moments and fundamental matrix sampled on a uniform tau grid."""

    def __init__(self, config, times, s_xx, s_xp, s_pp, phi, gamma, mode,
                 events=None):
        self.config = config
        self.times = times
        self.s_xx = s_xx
        self.s_xp = s_xp
        self.s_pp = s_pp
        self.phi = phi  # shape (n, 2, 2)
        self.gamma = gamma  # units of omega_t
        self.mode = mode
        self.events = events

    @property
    def delta_x_zpf(self):
        return np.sqrt(self.s_xx)

    @property
    def squeezing_db(self):
        half_trace = 0.5 * (self.s_xx + self.s_pp)
        radius = np.hypot(0.5 * (self.s_xx - self.s_pp), self.s_xp)
        return -10.0 * np.log10(half_trace - radius)

    @property
    def symplectic_det(self):
        return self.s_xx * self.s_pp - self.s_xp**2

    def state_at(self, tau) -> GaussianState:
        i = int(np.clip(np.searchsorted(self.times, tau), 1, len(self.times) - 1))
        # linear interpolation is plenty at the integration step
        w = (tau - self.times[i - 1]) / (self.times[i] - self.times[i - 1])
        w = float(np.clip(w, 0.0, 1.0))
        pick = lambda arr: float((1 - w) * arr[i - 1] + w * arr[i])
        return GaussianState(pick(self.s_xx), pick(self.s_xp), pick(self.s_pp),
                             time=float(tau))

    def peak_delta_x(self):
        i = int(np.argmax(self.s_xx))
        return math.sqrt(self.s_xx[i]), self.times[i]

    def peak_squeezing(self):
        s = self.squeezing_db
        i = int(np.argmax(s))
        return float(s[i]), self.times[i]

    def displacement_variance(self, t_end: float, gamma: float | None = None) -> float:
        """Variance of the position displacement accumulated from white force
        noise up to t_end, in x_zpf^2, by linear response.

        The dephasing rate gamma (units of omega_t) enters the equivalent
        force diffusion as var(delta pi)' = 4 gamma R; propagating each kick
        with the fundamental matrix gives

        var = 4 gamma R * int_0^T [Phi12(T) Phi11(s) - Phi11(T) Phi12(s)]^2 ds
        """
        if gamma is None:
            gamma = self.gamma
        gamma_dw = gamma * self.config.frequency_ratio
        n = int(np.clip(np.searchsorted(self.times, t_end), 1, len(self.times) - 1))
        p11 = self.phi[: n + 1, 0, 0]
        p12 = self.phi[: n + 1, 0, 1]
        green = p12[n] * p11 - p11[n] * p12
        return 4.0 * gamma_dw * float(np.trapezoid(green**2, self.times[: n + 1]))

    def check_physicality(self):
        # Coherent evolution conserves det; diffusion only grows it, so the
        # initial det (>= 1 by Heisenberg) is a floor for the whole run.
        # Evaluating s_xx s_pp - s_xp^2 cancels ~ det/trace^2 digits at high
        # squeezing, so the certifiable floor includes a conditioning term.
        det = self.symplectic_det
        half_trace = 0.5 * (self.s_xx + self.s_pp)
        # roundoff seeded while the state is highly squeezed survives the
        # later recompression, hence the running maximum
        worst_trace = np.maximum.accumulate(half_trace)
        roundoff = 64.0 * np.finfo(float).eps * worst_trace**2
        floor = max(det[0], 1.0) * (1.0 - HEISENBERG_TOL) - roundoff
        if np.min(self.s_xx) <= 0 or np.any(det < floor):
            worst = int(np.argmin(det - floor))
            raise ToleranceError(
                "moment integration violated positivity/Heisenberg beyond "
                f"{HEISENBERG_TOL}; reduce the step size "
                f"(det = {det[worst]:.12g} at tau = {self.times[worst]:.4g})")

    def export_csv(self, path, stride: int = 1):
        """Timeline CSV: (t, s_xx, s_xp, s_pp, delta_x/x_zpf, S dB)."""
        dx = self.delta_x_zpf
        sq = self.squeezing_db
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_omega_dw", "sigma_xx_zpf2", "sigma_xp_zpf",
                             "sigma_pp_zpf2", "delta_x_over_xzpf", "squeezing_db"])
            for i in range(0, len(self.times), stride):
                writer.writerow([f"{self.times[i]:.12g}", f"{self.s_xx[i]:.12g}",
                                 f"{self.s_xp[i]:.12g}", f"{self.s_pp[i]:.12g}",
                                 f"{dx[i]:.12g}", f"{sq[i]:.12g}"])


def _stiffness_mode(mode, config, a_const):
    """Return (classical_active, a_of_u) for the requested potential mode."""
    r = config.frequency_ratio
    if mode == "double_well":
        return True, lambda u: 3.0 * u * u - 1.0
    if mode == "harmonic_trap":
        return False, lambda u: r * r
    if mode == "free":
        return False, lambda u: 0.0
    if mode == "constant":
        if a_const is None:
            raise DomainError("mode='constant' needs a_const (k in m omega_dw^2)")
        return False, lambda u: a_const
    raise DomainError(f"unknown mode {mode!r}")


_GAUSS_LO = 0.5 - math.sqrt(3.0) / 6.0
_GAUSS_HI = 0.5 + math.sqrt(3.0) / 6.0


def _exp_traceless(o11, o12, o21):
    """exp of the traceless 2x2 matrix [[o11, o12], [o21, -o11]].

    Analytic form f I + g Omega with q^2 = o11^2 + o12 o21; determinant is
    exactly 1, which keeps the one-step map symplectic to roundoff.
    """
    q2 = o11 * o11 + o12 * o21
    if q2 > 1e-12:
        q = math.sqrt(q2)
        f, g = math.cosh(q), math.sinh(q) / q
    elif q2 < -1e-12:
        q = math.sqrt(-q2)
        f, g = math.cos(q), math.sin(q) / q
    else:
        f = 1.0 + q2 / 2.0 + q2 * q2 / 24.0
        g = 1.0 + q2 / 6.0 + q2 * q2 / 120.0
    return f + g * o11, g * o12, g * o21, f - g * o11


def propagate_moments(traj: ClassicalTrajectory | None, config: ExperimentConfig,
                      gamma: float | None = None, *, t_end: float | None = None,
                      dt: float | None = None, n_bar: float | None = None,
                      mode: str = "double_well", a_const: float | None = None,
                      initial: GaussianState | None = None) -> MomentTimeline:
    """Integrate the centered moments and the fundamental matrix.

    ``gamma`` is the dephasing rate in units of omega_t (defaults to the
    config value).  The linear flow is advanced with a fourth-order Magnus
    stepper (stiffness sampled at the two Gauss points of each step, taken
    from the classical trajectory); each one-step map has determinant one
    analytically, so purity of the coherent dynamics survives the strong
    inflation.  Momentum diffusion is Strang-split around the coherent map.
    """
    if gamma is None:
        gamma = config.decoherence_rate
    if gamma < 0:
        raise DomainError("gamma must be >= 0")
    if n_bar is None:
        n_bar = config.mean_phonons
    if dt is None:
        dt = traj.dt if traj is not None else DEFAULT_DT
    if t_end is None:
        if traj is None:
            raise DomainError("t_end required when no trajectory is given")
        t_end = traj.times[-1]
    if traj is not None and t_end > traj.times[-1] + 1e-12:
        raise DomainError("trajectory does not cover the requested span")

    _, a_of_u = _stiffness_mode(mode, config, a_const)
    r = config.frequency_ratio
    diff = 4.0 * gamma * r  # d s_pp / d tau, gamma converted to omega_dw units

    init = initial if initial is not None else GaussianState.thermal(n_bar)
    init.validate()

    n_steps = int(math.ceil(t_end / dt))
    dt = t_end / n_steps
    times = np.arange(n_steps + 1) * dt

    # stiffness at the Gauss nodes of every step
    if mode == "double_well":
        u_lo, _ = traj.interpolate(times[:-1] + _GAUSS_LO * dt)
        u_hi, _ = traj.interpolate(times[:-1] + _GAUSS_HI * dt)
        a_lo, a_hi = a_of_u(u_lo), a_of_u(u_hi)
    else:
        a_lo = a_hi = np.full(n_steps, a_of_u(0.0))

    # Magnus-4 generator: (dt/2)(A1 + A2) + (sqrt(3) dt^2 / 12) [A2, A1]
    # with A = [[0, R], [-a/R, 0]]; the commutator is diagonal traceless.
    omega11 = (math.sqrt(3.0) * dt * dt / 12.0) * (a_hi - a_lo)
    omega12 = np.full(n_steps, dt * r)
    omega21 = -dt * (a_lo + a_hi) / (2.0 * r)

    sxx = np.empty(n_steps + 1)
    sxp = np.empty(n_steps + 1)
    spp = np.empty(n_steps + 1)
    phi = np.empty((n_steps + 1, 2, 2))
    sxx[0], sxp[0], spp[0] = init.s_xx, init.s_xp, init.s_pp
    phi[0] = np.eye(2)

    xx, xp, pp = init.s_xx, init.s_xp, init.s_pp
    p11, p12, p21, p22 = 1.0, 0.0, 0.0, 1.0
    half_diff = 0.5 * diff * dt
    for i in range(n_steps):
        m11, m12, m21, m22 = _exp_traceless(omega11[i], omega12[i], omega21[i])
        pp += half_diff
        # Sigma <- M Sigma M^T
        t11 = m11 * xx + m12 * xp
        t12 = m11 * xp + m12 * pp
        t21 = m21 * xx + m22 * xp
        t22 = m21 * xp + m22 * pp
        xx = t11 * m11 + t12 * m12
        xp = t11 * m21 + t12 * m22
        pp = t21 * m21 + t22 * m22
        pp += half_diff
        # Phi <- M Phi
        q11 = m11 * p11 + m12 * p21
        q12 = m11 * p12 + m12 * p22
        q21 = m21 * p11 + m22 * p21
        q22 = m21 * p12 + m22 * p22
        p11, p12, p21, p22 = q11, q12, q21, q22
        sxx[i + 1], sxp[i + 1], spp[i + 1] = xx, xp, pp
        phi[i + 1, 0, 0], phi[i + 1, 0, 1] = p11, p12
        phi[i + 1, 1, 0], phi[i + 1, 1, 1] = p21, p22

    timeline = MomentTimeline(
        config, times, sxx, sxp, spp, phi, gamma, mode,
        events=traj.events if traj is not None else None)
    timeline.check_physicality()
    return timeline
