"""Individual-based simulation of coupled alignment/synchronization dynamics.

Each of n particles carries a position x in a periodic square [0, L)^2, a
heading theta in (-pi, pi], and an intrinsic angular frequency omega.  One
Euler-Maruyama step of size dt reads

    x     <- x + c * (cos theta, sin theta) * dt                (mod L)
    theta <- theta + [omega + k_theta * sin(theta_bar - theta)] * dt
                   + sqrt(2*alpha2*dt) * xi                     (wrapped)
    omega <- omega + k_omega * (omega_bar - omega) * dt
                   + sqrt(2*beta2*dt) * xi'

where theta_bar and omega_bar are the direction of the local mean heading
flux J and the local mean frequency, computed over the ball of radius R
around each particle (itself included) with an indicator kernel normalized
to unit integral.  sin(theta_bar - theta) is evaluated in cross-product
form from J directly, so no arctangent is taken and a particle aligned with
its neighborhood feels exactly zero torque up to rounding.

Noise is drawn from a counter-based generator: the pair of normal variates
for particle i at step s is a pure function of (seed, s, i), independent of
threading or call history.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _neighbors, diagnostics
from ._util import wrap_angle
from .errors import NumericalAbort

logger = logging.getLogger(__name__)

#: local mean fluxes shorter than this give no alignment torque
J_FLOOR = 1e-14

#: explicit relaxation steps steeper than this are refused without allow_stiff
STIFFNESS_LIMIT = 0.5


@dataclass(frozen=True)
class KernelSpec:
    """Interaction kernel: an indicator on the ball of radius ``radius``,
    normalized so its integral over the plane is one."""

    radius: float
    shape: str = "indicator"

    def __post_init__(self):
        if self.shape != "indicator":
            raise ValueError(f"unsupported kernel shape {self.shape!r}")
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"kernel radius must be > 0, got {self.radius!r}")

    @property
    def value(self) -> float:
        """Kernel height inside the ball: 1 / (pi R^2)."""
        return 1.0 / (math.pi * self.radius * self.radius)


@dataclass(frozen=True)
class MicroParams:
    """Physical and numerical parameters of a particle run."""

    k_theta: float
    k_omega: float
    alpha2: float
    beta2: float
    R: float
    L: float
    dt: float
    t_end: float
    c: float = 1.0
    seed: int = 0
    allow_stiff: bool = False
    kernel: KernelSpec = field(default=None)  # defaults to indicator(R)

    def __post_init__(self):
        for name in ("k_theta", "k_omega", "alpha2", "beta2", "c"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")
        for name in ("R", "L", "dt", "t_end"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")
        if self.R >= 0.5 * self.L:
            raise ValueError(
                f"interaction radius R={self.R} must be < L/2={0.5 * self.L} "
                "(minimum-image convention)")
        if self.kernel is None:
            object.__setattr__(self, "kernel", KernelSpec(radius=self.R))
        elif self.kernel.radius != self.R:
            raise ValueError("kernel radius must equal R")
        stiffness = self.dt * max(self.k_theta, self.k_omega)
        if stiffness > STIFFNESS_LIMIT:
            if not self.allow_stiff:
                raise ValueError(
                    f"dt*max(k_theta, k_omega) = {stiffness:.3g} exceeds "
                    f"{STIFFNESS_LIMIT}; shrink dt or set allow_stiff")
            logger.warning(
                "stiff run accepted: dt*max(k_theta, k_omega) = %.3g > %.2g",
                stiffness, STIFFNESS_LIMIT)

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))


@dataclass
class ParticleEnsemble:
    """State arrays for n particles."""

    x: np.ndarray       # (n, 2) positions in [0, L)^2
    theta: np.ndarray   # (n,) headings in (-pi, pi]
    omega: np.ndarray   # (n,) intrinsic frequencies

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        self.theta = np.ascontiguousarray(self.theta, dtype=np.float64)
        self.omega = np.ascontiguousarray(self.omega, dtype=np.float64)
        n = self.x.shape[0]
        if self.x.shape != (n, 2) or self.theta.shape != (n,) \
                or self.omega.shape != (n,):
            raise ValueError("inconsistent ensemble array shapes")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def validate(self, L: float) -> None:
        """Check the range invariants; raises ValueError on violation."""
        if not (np.isfinite(self.x).all() and np.isfinite(self.theta).all()
                and np.isfinite(self.omega).all()):
            raise ValueError("non-finite ensemble state")
        if self.x.min(initial=0.0) < 0.0 or self.x.max(initial=0.0) >= L:
            raise ValueError("positions outside [0, L)")
        if self.theta.min(initial=0.0) <= -np.pi \
                or self.theta.max(initial=0.0) > np.pi:
            raise ValueError("headings outside (-pi, pi]")

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(self.x.copy(), self.theta.copy(),
                                self.omega.copy())


class LocalMeans(NamedTuple):
    J: np.ndarray          # (n, 2) kernel-weighted mean heading flux
    omega_bar: np.ndarray  # (n,) kernel-weighted mean frequency
    weight: np.ndarray     # (n,) kernel mass seen by each particle


def local_means(ens: ParticleEnsemble, p: MicroParams) -> LocalMeans:
    """Neighborhood averages for every particle (self included)."""
    ct = np.cos(ens.theta)
    st = np.sin(ens.theta)
    sumc, sums, sumo, cnt = _neighbors.neighbor_sums(
        ens.x, ct, st, ens.omega, p.L, p.R)
    kval = p.kernel.value
    scale = kval / ens.n
    J = np.stack([scale * sumc, scale * sums], axis=-1)
    return LocalMeans(J=J, omega_bar=sumo / cnt, weight=kval * cnt)


def step_noise(seed: int, step: int, n: int):
    """The (xi_theta, xi_omega) normal draws for one step.

    Counter-based: a fresh Philox stream is keyed by (seed, step), and
    particle i reads lanes i and n+i.  No generator state survives between
    steps, so the draw for any (seed, step, i) is reproducible in isolation.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(0, step))
    rng = np.random.Generator(np.random.Philox(ss))
    block = rng.standard_normal(2 * n)
    return block[:n], block[n:]


def init_rng(seed: int) -> np.random.Generator:
    """Generator for initial conditions, distinct from every step stream."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(1,))))


def em_step(ens: ParticleEnsemble, p: MicroParams, step: int,
            means: LocalMeans | None = None) -> ParticleEnsemble:
    """One Euler-Maruyama step; returns a new ensemble."""
    if means is None:
        means = local_means(ens, p)
    Jx = means.J[:, 0]
    Jy = means.J[:, 1]
    ct = np.cos(ens.theta)
    st = np.sin(ens.theta)
    norm = np.hypot(Jx, Jy)
    safe = np.where(norm > 0.0, norm, 1.0)
    # sin(theta_bar - theta) = (J x tau) / |J|, zero when J vanishes
    torque = np.where(norm > J_FLOOR, (Jy * ct - Jx * st) / safe, 0.0)

    xi_theta, xi_omega = step_noise(p.seed, step, ens.n)
    dtheta = (ens.omega + p.k_theta * torque) * p.dt \
        + math.sqrt(2.0 * p.alpha2 * p.dt) * xi_theta
    domega = p.k_omega * (means.omega_bar - ens.omega) * p.dt \
        + math.sqrt(2.0 * p.beta2 * p.dt) * xi_omega

    x = ens.x + (p.c * p.dt) * np.stack([ct, st], axis=-1)
    np.mod(x, p.L, out=x)
    theta = wrap_angle(ens.theta + dtheta)
    omega = ens.omega + domega
    if not (np.isfinite(theta).all() and np.isfinite(omega).all()
            and np.isfinite(x).all()):
        raise NumericalAbort(f"non-finite particle state at step {step}")
    return ParticleEnsemble(x, theta, omega)


# ----------------------------------------------------------------------------
# initial conditions
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class InitSpec:
    """How to draw the initial ensemble.

    kinds:
      ``disordered``  uniform positions and headings; omega is drawn as
                      +omega_scale*U[0,1) for a ``positive_fraction`` of the
                      particles and -omega_scale*U[0,1) for the rest.
      ``aligned``     uniform positions, all headings theta0, all
                      frequencies omega0.
      ``equilibrium`` uniform positions, (theta, omega) sampled from the
                      local equilibrium around (theta0, omega0); requires
                      ``kappa`` and ``omega_variance``.
    """

    n: int
    kind: str = "disordered"
    theta0: float = 0.0
    omega0: float = 0.0
    omega_scale: float = 5.0
    positive_fraction: float = 0.25
    kappa: float | None = None
    omega_variance: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.kind not in ("disordered", "aligned", "equilibrium"):
            raise ValueError(f"unknown init kind {self.kind!r}")
        if not 0.0 <= self.positive_fraction <= 1.0:
            raise ValueError("positive_fraction must lie in [0, 1]")
        if self.kind == "equilibrium" and (self.kappa is None
                                           or self.omega_variance is None):
            raise ValueError("equilibrium init needs kappa and omega_variance")


def build_ensemble(init: InitSpec, p: MicroParams) -> ParticleEnsemble:
    rng = init_rng(p.seed)
    n = init.n
    x = rng.random((n, 2)) * p.L
    if init.kind == "aligned":
        theta = np.full(n, wrap_angle(init.theta0))
        omega = np.full(n, float(init.omega0))
    elif init.kind == "equilibrium":
        from .coefficients import EquilibriumPair, sample_equilibrium
        eq = EquilibriumPair(theta_bar=wrap_angle(init.theta0),
                             omega_bar=init.omega0, kappa=init.kappa,
                             omega_variance=init.omega_variance)
        theta, omega = sample_equilibrium(eq, n, rng)
    else:
        theta = rng.uniform(-np.pi, np.pi, n)
        n_pos = int(round(init.positive_fraction * n))
        omega = np.empty(n)
        omega[:n_pos] = init.omega_scale * rng.random(n_pos)
        omega[n_pos:] = -init.omega_scale * rng.random(n - n_pos)
    ens = ParticleEnsemble(x, theta, omega)
    ens.validate(p.L)
    return ens


# ----------------------------------------------------------------------------
# run loop
# ----------------------------------------------------------------------------

@dataclass
class MicroRunResult:
    params: MicroParams
    final: ParticleEnsemble
    series: "diagnostics.OrderTimeSeries"
    n_steps: int


def run_micro(p: MicroParams, init: InitSpec, sink=None, *,
              snapshot_every: float = 0.0,
              diag_every: float = 0.1) -> MicroRunResult:
    """Integrate the particle system to t_end.

    ``sink`` receives periodic state snapshots (see snapshots.SnapshotSink);
    pass None to skip snapshotting.  Diagnostics are sampled every
    ``diag_every`` time units into an OrderTimeSeries.
    """
    from ._util import configure_threads
    configure_threads()

    ens = build_ensemble(init, p)
    n_steps = p.n_steps
    snap_stride = 0
    if sink is not None and snapshot_every > 0.0:
        snap_stride = max(1, int(round(snapshot_every / p.dt)))
    diag_stride = max(1, int(round(diag_every / p.dt)))
    nbins = diagnostics.default_bin_count(p.L, p.R)

    times, polar, angles, mean_om, dens_var = [], [], [], [], []

    def record(t, e):
        times.append(t)
        polar.append(diagnostics.polar_order(e))
        angles.append(diagnostics.global_heading(e))
        mean_om.append(float(np.mean(e.omega)))
        dens_var.append(
            diagnostics.density_variance(e, L=p.L, nbins=nbins))

    record(0.0, ens)
    if snap_stride:
        sink.write_micro(0.0, ens, p.L)
    for step in range(n_steps):
        ens = em_step(ens, p, step)
        t = (step + 1) * p.dt
        if (step + 1) % diag_stride == 0 or step + 1 == n_steps:
            record(t, ens)
        if snap_stride and ((step + 1) % snap_stride == 0
                            or step + 1 == n_steps):
            sink.write_micro(t, ens, p.L)

    series = diagnostics.OrderTimeSeries(
        t=np.asarray(times), polar_order=np.asarray(polar),
        global_angle=np.unwrap(np.asarray(angles)),
        mean_omega=np.asarray(mean_om),
        density_variance=np.asarray(dens_var))
    logger.info("micro run finished: %d steps, final polar order %.3f",
                n_steps, series.polar_order[-1])
    return MicroRunResult(params=p, final=ens, series=series,
                          n_steps=n_steps)


def table_regime_params(k_theta: float, k_omega: float, *, n: int = 15000,
                        L: float = 64.0, seed: int = 0,
                        t_end: float = 200.0) -> tuple[MicroParams, InitSpec]:
    """The reference phase-diagram regime: R=2, dt=0.01, noise 0.5^2/2.

    Convenience for sweeps over the two relaxation rates; everything else is
    held at the reference values (speed 1, mixed +-5 frequency draw).
    """
    p = MicroParams(k_theta=k_theta, k_omega=k_omega,
                    alpha2=0.125, beta2=0.125, R=2.0, L=L, dt=0.01,
                    t_end=t_end, c=1.0, seed=seed,
                    allow_stiff=0.01 * max(k_theta, k_omega)
                    > STIFFNESS_LIMIT)
    return p, InitSpec(n=n)
