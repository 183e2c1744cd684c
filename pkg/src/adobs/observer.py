"""Luenberger-type adaptive observer running on the physical coordinates."""

import numpy as np

__all__ = ["observer_rhs"]


def observer_rhs(x_hat, u, y, theta_ab_hat, l_hat, plant, phi_t=None):
    """``dx_hat/dt = Phi^T(x_hat, u) Theta_hat - L_hat (y_hat - y)``.

    ``phi_t`` may carry an already evaluated ``Phi^T(x_hat, u)``.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    if phi_t is None:
        phi_t = plant.regressor(x_hat, u)
    y_tilde = float(plant.c @ x_hat) - y
    return phi_t @ theta_ab_hat - np.asarray(l_hat) * y_tilde
