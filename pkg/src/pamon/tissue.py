"""Optical state of the irradiated tissue and the pressure source law.

The treated spot is modeled as a single pigmented absorber whose absorption
coefficient relaxes toward a floor while the laser is on.  Treatment time is
split into three stages:

* ``SCATTERING`` (A): pigment breaks up, absorption decays exponentially.
* ``OSCILLATION`` (B): pigment fully scattered; the signal source holds at
  the floor with a zero-mean multiplicative per-pulse perturbation.
* ``SCORCHED`` (C): the spot chars; the effective signal source declines
  again at a slower rate while ``scorch_level`` saturates toward 1.

Laser-off periods freeze the kinetics entirely (excised-sample assumption:
no clearance, no diffusion).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidArgumentError


class Stage(enum.Enum):
    """Ground-truth treatment stage. Values are the conventional letters."""

    SCATTERING = "A"
    OSCILLATION = "B"
    SCORCHED = "C"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class OpticalProperties:
    """Thermoelastic source parameters of the absorber.

    grueneisen
        Grueneisen parameter (dimensionless, > 0). Constant: thermal
        nonlinearity is out of scope.
    conversion_efficiency
        Fraction of absorbed optical energy converted to pressure, in [0, 1].
    absorption_coeff
        Optical absorption coefficient in 1/m, >= 0.
    """

    grueneisen: float = 0.2
    conversion_efficiency: float = 0.5
    absorption_coeff: float = 0.0

    def __post_init__(self):
        if not (self.grueneisen > 0 and math.isfinite(self.grueneisen)):
            raise InvalidArgumentError(f"grueneisen must be > 0, got {self.grueneisen}")
        if not (0.0 <= self.conversion_efficiency <= 1.0):
            raise InvalidArgumentError(
                f"conversion_efficiency must be in [0, 1], got {self.conversion_efficiency}"
            )
        if not (self.absorption_coeff >= 0 and math.isfinite(self.absorption_coeff)):
            raise InvalidArgumentError(
                f"absorption_coeff must be >= 0, got {self.absorption_coeff}"
            )


@dataclass(frozen=True)
class LaserPulseConfig:
    """Pulsed treatment laser settings.

    Defaults follow a low-energy 532 nm treatment laser: 67 mJ per pulse at
    5 Hz into a 4 mm spot.
    """

    wavelength_nm: float = 532.0
    pulse_energy_j: float = 0.067
    spot_diameter_m: float = 4.0e-3
    repetition_rate_hz: float = 5.0

    def __post_init__(self):
        if self.pulse_energy_j <= 0:
            raise InvalidArgumentError(f"pulse_energy_j must be > 0, got {self.pulse_energy_j}")
        if self.repetition_rate_hz <= 0:
            raise InvalidArgumentError(
                f"repetition_rate_hz must be > 0, got {self.repetition_rate_hz}"
            )
        if self.spot_diameter_m <= 0:
            raise InvalidArgumentError(
                f"spot_diameter_m must be > 0, got {self.spot_diameter_m}"
            )

    def fluence(self) -> float:
        """Per-pulse fluence in J/m^2 over the circular spot."""
        return self.pulse_energy_j / (math.pi * (self.spot_diameter_m / 2.0) ** 2)

    @property
    def pulse_period_s(self) -> float:
        return 1.0 / self.repetition_rate_hz


@dataclass(frozen=True)
class TreatmentKinetics:
    """Stagewise evolution law of the absorber under irradiation.

    ``mu_a_initial`` relaxes toward ``mu_a_floor`` at ``decay_rate`` during
    stage A, which ends at ``t_scatter`` seconds of accumulated laser-on
    time; stage C starts at ``t_scorch``.  ``oscillation_sigma`` is the
    relative std of the per-pulse stage-B perturbation of the signal source;
    ``scorch_decay_rate`` drives the renewed stage-C decline.
    """

    mu_a_initial: float = 100.0
    mu_a_floor: float = 20.0
    decay_rate: float = 0.05
    t_scatter: float = 35.0
    t_scorch: float = 50.0
    oscillation_sigma: float = 0.08
    scorch_decay_rate: float = 0.01

    def __post_init__(self):
        if not self.mu_a_floor < self.mu_a_initial:
            raise InvalidArgumentError("mu_a_floor must be < mu_a_initial")
        if self.mu_a_floor < 0:
            raise InvalidArgumentError("mu_a_floor must be >= 0")
        if not (0.0 < self.t_scatter < self.t_scorch):
            raise InvalidArgumentError("require 0 < t_scatter < t_scorch")
        if self.decay_rate <= 0:
            raise InvalidArgumentError("decay_rate must be > 0")
        if self.oscillation_sigma < 0 or self.scorch_decay_rate < 0:
            raise InvalidArgumentError("noise/scorch rates must be >= 0")


@dataclass(frozen=True)
class TissueState:
    """Snapshot of the treated spot.

    ``mu_a_current`` is the pigment absorption coefficient, always within
    [mu_a_floor, mu_a_initial].  ``effective_mu_a`` is the absorption the
    acquisition chain sees: it carries the stage-B perturbation and the
    stage-C decline and may therefore drop below the floor.
    ``elapsed_irradiation`` accumulates laser-on time only.
    """

    elapsed_irradiation: float = 0.0
    mu_a_current: float = 100.0
    effective_mu_a: float = 100.0
    stage: Stage = Stage.SCATTERING
    scorch_level: float = 0.0
    depth_m: float = 2.4e-3


def initial_pressure(props: OpticalProperties, fluence: float) -> float:
    """Initial photoacoustic pressure in Pa for one laser pulse.

    The product law ``p0 = grueneisen * conversion_efficiency *
    absorption_coeff * fluence``; exactly linear in every factor.
    """
    if not (math.isfinite(fluence) and fluence >= 0):
        raise InvalidArgumentError(f"fluence must be finite and >= 0, got {fluence}")
    return props.grueneisen * props.conversion_efficiency * props.absorption_coeff * fluence


def stage_at(elapsed_irradiation: float, kinetics: TreatmentKinetics) -> Stage:
    """Scripted stage for a given accumulated laser-on time.

    Boundaries belong to the later stage: ``t_scatter`` is already B,
    ``t_scorch`` already C.
    """
    if elapsed_irradiation < kinetics.t_scatter:
        return Stage.SCATTERING
    if elapsed_irradiation < kinetics.t_scorch:
        return Stage.OSCILLATION
    return Stage.SCORCHED


def ground_truth_stage(state: TissueState, kinetics: TreatmentKinetics) -> Stage:
    """Scripted stage of a tissue snapshot (see :func:`stage_at`)."""
    return stage_at(state.elapsed_irradiation, kinetics)


def _pigment_mu(elapsed: float, k: TreatmentKinetics) -> float:
    """Clamped pigment absorption at a given laser-on time (stage A law)."""
    if elapsed >= k.t_scatter:
        return k.mu_a_floor
    return k.mu_a_floor + (k.mu_a_initial - k.mu_a_floor) * math.exp(-k.decay_rate * elapsed)


def advance(
    state: TissueState,
    dt: float,
    laser_on: bool,
    kinetics: TreatmentKinetics,
    rng: np.random.Generator | None = None,
) -> TissueState:
    """Advance the tissue by ``dt`` seconds.

    With the laser off the state is returned unchanged.  With the laser on,
    ``elapsed_irradiation`` grows by ``dt`` and the absorption follows the
    stagewise law in closed form, so trajectories do not depend on step
    size.  The stage-B perturbation draws one sample from ``rng`` per call;
    pass ``rng=None`` to disable the oscillation (deterministic floor).
    """
    if not (dt > 0 and math.isfinite(dt)):
        raise InvalidArgumentError(f"dt must be > 0, got {dt}")
    if not laser_on:
        return state

    elapsed = state.elapsed_irradiation + dt
    stage = stage_at(elapsed, kinetics)
    mu = _pigment_mu(elapsed, kinetics)

    if stage is Stage.SCATTERING:
        effective = mu
        scorch = 0.0
    elif stage is Stage.OSCILLATION:
        effective = mu
        if rng is not None and kinetics.oscillation_sigma > 0:
            # multiplicative, zero mean; clipped so the source stays positive
            factor = 1.0 + float(rng.normal(0.0, kinetics.oscillation_sigma))
            effective = mu * max(factor, 0.05)
        scorch = 0.0
    else:
        since_scorch = elapsed - kinetics.t_scorch
        effective = mu * math.exp(-kinetics.scorch_decay_rate * since_scorch)
        scorch = 1.0 - math.exp(-kinetics.scorch_decay_rate * since_scorch)

    return replace(
        state,
        elapsed_irradiation=elapsed,
        mu_a_current=mu,
        effective_mu_a=effective,
        stage=stage,
        scorch_level=scorch,
    )
