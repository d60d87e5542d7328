"""Ready-made models used by the demos and the acceptance suite."""

from __future__ import annotations

from .model import (
    DiscreteMarks, ExponentialKernel, ModelSpec, PowerKernel, ShotShape, UnitStepShot, stationary_mu0,
)


def exponential_single(m: float = 0.5, lambda_I: float = 1.0, b: float = 1.0, shot: ShotShape | None = None,
                       stationary: bool = True) -> ModelSpec:
    """Unmarked exponential kernel ``m b exp(-b t)``; starts in equilibrium by default."""
    marks = DiscreteMarks((1.0,))
    spec = ModelSpec(lambda_I=lambda_I, nu_I=marks, nu_H=marks, kernel=ExponentialKernel(a=m * b, b=b),
                     shot=shot if shot is not None else UnitStepShot())
    return spec.replace(mu0=stationary_mu0(spec)) if stationary else spec


def exponential_two_atom(masses=(0.3, 0.7), probs=(0.5, 0.5), lambda_I: float = 1.0, b: float = 1.0,
                         stationary: bool = True) -> ModelSpec:
    """Two labels with kernel masses ``masses`` and common decay ``b``."""
    marks = DiscreteMarks(tuple(probs))
    spec = ModelSpec(lambda_I=lambda_I, nu_I=marks, nu_H=marks,
                     kernel=ExponentialKernel(a=tuple(x * b for x in masses), b=b))
    return spec.replace(mu0=stationary_mu0(spec)) if stationary else spec


def power_single(a: float = 0.75, p: float = 2.5, b: float = 1.0, lambda_I: float = 1.0,
                 theta0: float = 1.2) -> ModelSpec:
    """Unmarked power-law kernel ``a (1 + b t)^(-p)``; ``theta0`` must stay below ``p - 1``."""
    marks = DiscreteMarks((1.0,))
    return ModelSpec(lambda_I=lambda_I, nu_I=marks, nu_H=marks, kernel=PowerKernel(a=a, b=b, p=p), theta0=theta0)
