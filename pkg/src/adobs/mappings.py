"""Heterogeneous mappings and the division-free regression cascade.

Starting from ``Y = Delta * psi_ab(theta)`` the cascade produces three
measurable regressions without ever dividing by a signal:

    y_theta = M_theta * theta,   y_ab = M_ab * Theta_AB,   y_l = M_l * L.

Each stage builds a matrix polynomially from the previous stage's outputs,
multiplies by its adjugate and keeps the determinant as the new scalar
regressor.  A :class:`MappingBundle` carries the system-specific polynomials;
:func:`example_bundle` implements them for the third-order example.

All bundle components are heterogeneous: scaling every argument (the
regression vector and its scalar regressor) by ``c`` scales row ``i`` of the
result by ``c ** degrees[name][i]``.
"""

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .densemat import adjugate_det
from .errors import DegenerateParameterError
from .plant import psi_ab as _psi_ab
from .plant import theta_ab as _theta_ab

__all__ = [
    "MappingBundle",
    "OracleMaps",
    "RegressionSnapshot",
    "cascade",
    "cascade_arrays",
    "example_bundle",
    "gain_stage",
    "oracle_maps",
    "theta_ab_stage",
    "theta_stage",
]


@dataclass(frozen=True)
class MappingBundle:
    """System-specific mapping polynomials.

    t_g(Y, Delta) -> (n_th, n_th)      t_s(Y, Delta) -> (n_th,)
    t_theta(Y_th, M_th) -> (n_Th,)     pi_theta(M_th) -> (n_Th, n_Th)
    t_p(Y_th, M_th) -> (n, n)          t_q(Y_th, M_th, a_m) -> (n,)
    """

    t_g: Callable
    t_s: Callable
    t_theta: Callable
    pi_theta: Callable
    t_p: Callable
    t_q: Callable
    a_m: float
    degrees: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.a_m > 0:
            raise ValueError("a_m must be > 0")


@dataclass(frozen=True)
class RegressionSnapshot:
    y_raw: np.ndarray
    delta: float
    y_theta: np.ndarray
    m_theta: float
    y_ab: np.ndarray
    m_ab: float
    y_l: np.ndarray
    m_l: float


def _diag(*entries):
    entries = np.broadcast_arrays(*[np.asarray(e, dtype=float) for e in entries])
    shape = entries[0].shape
    n = len(entries)
    out = np.zeros(shape + (n, n))
    for i, e in enumerate(entries):
        out[..., i, i] = e
    return out


def _vec(*entries):
    return np.stack(np.broadcast_arrays(*[np.asarray(e, dtype=float) for e in entries]), axis=-1)


def _split(y):
    y = np.asarray(y, dtype=float)
    return y[..., 0], y[..., 1], y[..., 2]


def _t_g(y, delta):
    y1, y2, y3 = _split(y)
    return _diag(y2**3 * (y1 * y2 + delta * y3), y2 * y2, delta * y1)


def _t_s(y, delta):
    y1, y2, y3 = _split(y)
    mixed = y1 * y2 + delta * y3
    return _vec(y2 * mixed * mixed - y2**4 * y3, -mixed, y2 * y1)


def _t_theta(y_th, m_th):
    y1, y2, y3 = _split(y_th)
    return _vec(y1 + y2, y2, y3)


def _pi_theta(m_th):
    m_th = np.asarray(m_th, dtype=float)
    return m_th[..., None, None] * np.eye(3)


def _t_p(y_th, m_th):
    y1, y2, y3 = _split(y_th)
    return _diag(y2 * y3, m_th * y3, y1)


def _t_q(y_th, m_th, a_m):
    # det(sI - A + L c^T) = s^3 + l3 s^2 + (t2 (t1+t2+t3) - t3 l2) s
    #                       + t2 ((t1+t2) l3 + t3 l1)
    # matched to (s + a_m)^3 with l3 = 3 a_m, then scaled by M_th^2
    y1, y2, y3 = _split(y_th)
    m2 = np.asarray(m_th, dtype=float) ** 2
    return _vec(
        a_m**3 * m2 - 3.0 * a_m * (y1 + y2) * y2,
        -3.0 * a_m**2 * m2 + (y1 + y2 + y3) * y2,
        3.0 * a_m * y1,
    )


def example_bundle(a_m=1.0):
    return MappingBundle(
        t_g=_t_g,
        t_s=_t_s,
        t_theta=_t_theta,
        pi_theta=_pi_theta,
        t_p=_t_p,
        t_q=_t_q,
        a_m=float(a_m),
        degrees={
            "t_g": (5, 2, 2),
            "t_s": (5, 2, 2),
            "t_theta": (1, 1, 1),
            "pi_theta": (1, 1, 1),
            "t_p": (2, 2, 1),
            "t_q": (2, 2, 1),
        },
    )


def _apply(adj, v):
    return np.matmul(adj, np.asarray(v)[..., None])[..., 0]


def _stage_adjugate(m):
    """Adjugate and determinant that map an overflowed (non-finite) stage
    matrix to NaN outputs instead of raising, so one bad sample in a
    stack does not poison its neighbours."""
    m = np.asarray(m, dtype=float)
    bad = ~np.all(np.isfinite(m), axis=(-2, -1))
    if not np.any(bad):
        return adjugate_det(m)
    adj, d = adjugate_det(np.where(bad[..., None, None], 0.0, m))
    adj = np.where(bad[..., None, None], np.nan, adj)
    d = np.where(bad, np.nan, d)
    return adj, (float(d) if m.ndim == 2 else d)


def theta_stage(y_raw, delta, bundle):
    adj, m_theta = _stage_adjugate(bundle.t_g(y_raw, delta))
    return _apply(adj, bundle.t_s(y_raw, delta)), m_theta


def theta_ab_stage(y_theta, m_theta, bundle):
    adj, m_ab = _stage_adjugate(bundle.pi_theta(m_theta))
    return _apply(adj, bundle.t_theta(y_theta, m_theta)), m_ab


def gain_stage(y_theta, m_theta, delta, bundle):
    # delta is part of the generic signature; the example absorbs the known
    # closed-loop coefficients with M_theta^2 instead
    adj, m_l = _stage_adjugate(bundle.t_p(y_theta, m_theta))
    return _apply(adj, bundle.t_q(y_theta, m_theta, bundle.a_m)), m_l


def cascade_arrays(y_raw, delta, bundle):
    """Stack-capable cascade returning a dict of arrays keyed like
    :class:`RegressionSnapshot` fields."""
    y_raw = np.asarray(y_raw, dtype=float)
    delta = np.asarray(delta, dtype=float)
    y_theta, m_theta = theta_stage(y_raw, delta, bundle)
    y_ab, m_ab = theta_ab_stage(y_theta, m_theta, bundle)
    y_l, m_l = gain_stage(y_theta, m_theta, delta, bundle)
    return {
        "y_raw": y_raw,
        "delta": delta,
        "y_theta": y_theta,
        "m_theta": np.asarray(m_theta),
        "y_ab": y_ab,
        "m_ab": np.asarray(m_ab),
        "y_l": y_l,
        "m_l": np.asarray(m_l),
    }


def cascade(y_raw, delta, bundle):
    d = cascade_arrays(y_raw, float(delta), bundle)
    return RegressionSnapshot(
        y_raw=d["y_raw"],
        delta=float(delta),
        y_theta=d["y_theta"],
        m_theta=float(d["m_theta"]),
        y_ab=d["y_ab"],
        m_ab=float(d["m_ab"]),
        y_l=d["y_l"],
        m_l=float(d["m_l"]),
    )


class OracleMaps(NamedTuple):
    g: np.ndarray
    s: np.ndarray
    p: np.ndarray
    q: np.ndarray
    l: np.ndarray
    f_inverse_check: np.ndarray


def oracle_maps(theta, a_m=1.0):
    """Closed-form maps of the example evaluated at the true parameters.

    Independent of the cascade: solves ``G(psi) theta = S(psi)`` and
    ``P(theta) L = Q(theta, a_m)`` with LU instead of adjugates.
    """
    t1, t2, t3 = np.asarray(theta, dtype=float)
    psi1, psi2, psi3 = _psi_ab((t1, t2, t3))
    mixed = psi1 * psi2 + psi3
    g = np.diag([psi2**3 * mixed, psi2**2, psi1])
    s = np.array([psi2 * mixed**2 - psi2**4 * psi3, -mixed, psi2 * psi1])
    p = np.diag([t2 * t3, t3, t1])
    q = np.array(
        [
            a_m**3 - 3.0 * a_m * (t1 + t2) * t2,
            -3.0 * a_m**2 + (t1 + t2 + t3) * t2,
            3.0 * a_m * t1,
        ]
    )
    if np.prod(np.diag(g)) == 0.0:
        raise DegenerateParameterError(f"G(psi_ab) singular at theta={[t1, t2, t3]}")
    if np.prod(np.diag(p)) == 0.0:
        raise DegenerateParameterError(f"P(theta) singular at theta={[t1, t2, t3]}")
    return OracleMaps(
        g=g,
        s=s,
        p=p,
        q=q,
        l=np.linalg.solve(p, q),
        f_inverse_check=np.linalg.solve(g, s),
    )


def true_snapshot_ratios(theta, a_m=1.0):
    """Targets ``(theta, Theta_AB, L)`` the cascade ratios must reproduce."""
    th = np.asarray(theta, dtype=float)
    return th, _theta_ab(th), oracle_maps(th, a_m).l
