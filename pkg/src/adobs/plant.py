"""Parameterized plant, the third-order example system and its excitation.

The example system has physical parameters ``theta = (t1, t2, t3)`` and

    dx/dt = A(theta) x + B(theta) u = Phi^T(x, u) Theta_AB(theta)
    A = [[0, t1+t2, 0], [-t2, 0, t2], [0, -t3, 0]],  B = (0, 0, t3),
    y = x3.

Its transfer function is

    (t3 s^2 + t3 t2 (t1+t2)) / (s^3 + t2 (t1+t2+t3) s),

so in the observable form ``xi' = A0 xi + psi_a y + psi_b u, y = xi_1`` the
identifiable coefficients sit at

    psi_a = (0, -(t1+t2+t3) t2, 0),    psi_b = (t3, 0, t3 t2 (t1+t2)).

``psi_ab`` picks the three nonzero entries, i.e. rows 2, 4, 6 (1-based) of
the stacked vector ``(psi_a; psi_b)``.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateParameterError

__all__ = [
    "EXAMPLE",
    "PlantModel",
    "PlantRealization",
    "SignalSpec",
    "control",
    "phi",
    "plant_rhs",
    "psi_ab",
    "psi_stack",
    "realize",
    "reference",
    "theta_ab",
]


@dataclass(frozen=True)
class SignalSpec:
    """Reference ``offset + amp * exp(-decay t) sin(freq t)`` and the
    proportional law ``u = ctrl_gain * (r - y)``."""

    ref_offset: float = 100.0
    ref_amp: float = 2.5
    ref_decay: float = 1.0
    ref_freq: float = 10.0
    ctrl_gain: float = -25.0

    def __post_init__(self):
        for name in ("ref_offset", "ref_amp", "ref_decay", "ref_freq", "ctrl_gain"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class PlantRealization:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    n: int
    n_theta: int
    n_big_theta: int
    regressor: Callable[[np.ndarray, float], np.ndarray]

    def rhs(self, x, u):
        return self.a @ x + self.b * u

    def output(self, x):
        return float(self.c @ x)


def _check_theta(theta):
    th = np.asarray(theta, dtype=float)
    if th.shape != (3,):
        raise DegenerateParameterError(f"theta must have 3 components, got shape {th.shape}")
    if not np.all(np.isfinite(th)):
        raise DegenerateParameterError("theta must be finite")
    if np.any(th == 0.0):
        raise DegenerateParameterError(f"theta components must be nonzero, got {th.tolist()}")
    return th


def phi(x, u):
    """Transposed regressor ``Phi^T(x, u) = diag(x2, x3 - x1, u - x2)``."""
    x1, x2, x3 = (float(v) for v in x)
    return np.array([[x2, 0.0, 0.0], [0.0, x3 - x1, 0.0], [0.0, 0.0, u - x2]])


def theta_ab(theta):
    t1, t2, t3 = theta
    return np.array([t1 + t2, t2, t3], dtype=float)


def psi_stack(theta):
    """Observable-form coefficients ``(psi_a, psi_b)``."""
    t1, t2, t3 = theta
    psi_a = np.array([0.0, -(t1 + t2 + t3) * t2, 0.0])
    psi_b = np.array([t3, 0.0, t3 * t2 * (t2 + t1)])
    return psi_a, psi_b


def psi_ab(theta):
    t1, t2, t3 = theta
    return np.array([-(t1 + t2 + t3) * t2, t3, t3 * t2 * (t2 + t1)], dtype=float)


def realize(theta):
    t1, t2, t3 = _check_theta(theta)
    a = np.array([[0.0, t1 + t2, 0.0], [-t2, 0.0, t2], [0.0, -t3, 0.0]])
    b = np.array([0.0, 0.0, t3])
    c = np.array([0.0, 0.0, 1.0])
    return PlantRealization(a=a, b=b, c=c, n=3, n_theta=3, n_big_theta=3, regressor=phi)


def plant_rhs(x, u, theta):
    return realize(theta).rhs(np.asarray(x, dtype=float), u)


def reference(t, spec=SignalSpec()):
    return spec.ref_offset + spec.ref_amp * np.exp(-spec.ref_decay * t) * np.sin(spec.ref_freq * t)


def control(r, y, spec=SignalSpec()):
    return spec.ctrl_gain * (r - y)


@dataclass(frozen=True)
class PlantModel:
    """Everything the engine needs to know about a concrete system.

    ``l_ab_rows`` are 1-based rows of ``(psi_a; psi_b)`` forming ``psi_ab``.
    ``bundle`` builds the heterogeneous mappings for a given ``a_m``.
    """

    name: str
    realize: Callable
    phi: Callable
    theta_ab: Callable
    psi_ab: Callable
    psi_stack: Callable
    l_ab_rows: tuple
    bundle: Callable
    gain: Callable


def _example_bundle(a_m):
    from .mappings import example_bundle

    return example_bundle(a_m)


def _example_gain(theta, a_m):
    from .mappings import oracle_maps

    return oracle_maps(theta, a_m).l


EXAMPLE = PlantModel(
    name="third-order example",
    realize=realize,
    phi=phi,
    theta_ab=theta_ab,
    psi_ab=psi_ab,
    psi_stack=psi_stack,
    l_ab_rows=(2, 4, 6),
    bundle=_example_bundle,
    gain=_example_gain,
)
