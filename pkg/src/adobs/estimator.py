"""Switched-gain gradient identifiers for Theta_AB and the correction gain L.

    dTheta_hat/dt = -gamma_Theta * M_ab * (M_ab * Theta_hat - Y_ab)
    dL_hat/dt     = -gamma_L     * M_l  * (M_l  * L_hat     - Y_l)

Both gains are zero while ``Delta < rho`` (dead zone).  Otherwise they
normalise by ``M^2``, so with exact regressions the parameter errors obey
``e' = -(gamma1 + gamma0 * extra) e``: a contraction at rate at least
``gamma1`` regardless of how large or small ``M`` is.  The update is
evaluated as ``(numerator / M) * (M * estimate - Y)`` so that ``M^2`` is
never formed.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .densemat import sym_eigen_extremes
from .errors import ConfigurationError

log = logging.getLogger(__name__)

__all__ = ["EstimateState", "EstimatorConfig", "estimator_rhs", "gamma_l", "gamma_theta"]


@dataclass(frozen=True)
class EstimatorConfig:
    rho: float = 0.1
    gamma0: float = 1e-4
    gamma1: float = 1.0
    # M_l grows like Delta^45, so the guard only catches M^2 leaving the
    # normal float range rather than any physically small regressor
    m_floor: float = 1e-150

    def validate(self):
        for key in ("rho", "gamma0", "gamma1"):
            value = getattr(self, key)
            if not (math.isfinite(value) and value > 0.0):
                raise ConfigurationError(f"{key} must be > 0", key=key)
        if not (math.isfinite(self.m_floor) and self.m_floor >= 0.0):
            raise ConfigurationError("m_floor must be >= 0", key="m_floor")
        return self


@dataclass
class EstimateState:
    theta_ab_hat: np.ndarray
    l_hat: np.ndarray
    x_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def is_finite(self):
        return bool(
            np.all(np.isfinite(self.theta_ab_hat))
            and np.all(np.isfinite(self.l_hat))
            and np.all(np.isfinite(self.x_hat))
        )


def _normalised(numerator, delta, m, cfg):
    """``numerator / M^2``, or 0 in the dead zone, below the floor or on overflow."""
    if delta < cfg.rho or abs(m) < cfg.m_floor:
        return 0.0
    m2 = m * m
    if not math.isfinite(m2):
        return 0.0
    return numerator / m2


def _gain_times_m(numerator, m, cfg):
    """``gamma * M = numerator / M``; avoids forming ``M^2``, which overflows
    long before ``M`` does since ``M_l`` grows like ``Delta^45``."""
    if not math.isfinite(m) or abs(m) < cfg.m_floor:
        return 0.0
    return numerator / m


def _theta_numerator(phi_t, cfg):
    phi_t = np.asarray(phi_t, dtype=float)
    return cfg.gamma1 + cfg.gamma0 * sym_eigen_extremes(phi_t.T @ phi_t)[1]


def _l_numerator(y_tilde, cfg):
    return cfg.gamma1 + cfg.gamma0 * y_tilde * y_tilde


def gamma_theta(delta, m_ab, phi_t, cfg):
    """Gain of the Theta_AB identifier; ``phi_t`` is ``Phi^T(x_hat, u)``."""
    if delta < cfg.rho:
        return 0.0
    return _normalised(_theta_numerator(phi_t, cfg), delta, m_ab, cfg)


def gamma_l(delta, m_l, y_tilde, cfg):
    return _normalised(_l_numerator(y_tilde, cfg), delta, m_l, cfg)


def _update(numerator, m, y_reg, estimate, cfg, label):
    gm = _gain_times_m(numerator, m, cfg)
    if gm == 0.0:
        return np.zeros_like(estimate, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        out = -gm * (m * estimate - y_reg)
    if not np.all(np.isfinite(out)):
        log.debug("%s update not finite (|M|=%.3e); frozen", label, abs(m))
        return np.zeros_like(estimate, dtype=float)
    return out


def estimator_rhs(est, snap, phi_t, y_tilde, cfg):
    """Time derivatives ``(dTheta_hat, dL_hat)`` of the parameter estimates."""
    if snap.delta < cfg.rho:
        return np.zeros_like(est.theta_ab_hat, dtype=float), np.zeros_like(est.l_hat, dtype=float)
    d_theta = _update(
        _theta_numerator(phi_t, cfg), snap.m_ab, snap.y_ab, est.theta_ab_hat, cfg, "theta"
    )
    d_l = _update(_l_numerator(y_tilde, cfg), snap.m_l, snap.y_l, est.l_hat, cfg, "L")
    return d_theta, d_l
