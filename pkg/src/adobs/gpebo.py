"""GPEBO filters, exponential-forgetting extension and DREM mixing.

With the observable-form state ``xi`` the filters

    z'  = A_K z + K y,     Omega' = A_K Omega + I y,     P' = A_K P + I u,
    chi' = A_K^T chi,      chi(t0) = C0,

give the measurable regression ``q = y - C0^T z = phi^T eta`` with

    phi = (Omega^T C0; P^T C0; chi),   eta = (psi_a; psi_b; xi~(t0)).

The third block is ``exp(A_K^T (t - t0)) C0``: the residual ``xi~`` obeys
``xi~' = A_K xi~`` so ``C0^T xi~(t) = (exp(A_K^T (t-t0)) C0)^T xi~(t0)``.

Extension with forgetting weight ``w(t) = exp(-sigma (t - t0))``:

    qbar' = w phi q,       phibar' = w phi phi^T,

and mixing with the adjugate yields the scalar-regressor equations
``Y = k L_ab L0 adj(phibar) qbar = Delta psi_ab`` with ``Delta = k det(phibar)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .densemat import adjugate_det, charpoly, is_hurwitz
from .errors import ConfigurationError

__all__ = [
    "FilterBankState",
    "GpeboConfig",
    "filter_rhs",
    "init_filter_bank",
    "mix",
    "mix_arrays",
    "pack",
    "regressor_phi",
    "state_size",
    "symmetric_adjugate",
    "unpack",
]


@dataclass(frozen=True)
class GpeboConfig:
    """Filter gains of the extension/mixing stage.

    ``sigma = 0`` switches forgetting off; only useful as a diagnostic, since
    the excitation scalar then never settles.
    """

    k_gain: tuple = (3.0, 3.0, 1.0)
    sigma: float = 5.0
    k_amp: float = 1e7
    l_ab_rows: tuple = (2, 4, 6)
    n: int = 3
    a0: np.ndarray = field(init=False, repr=False, compare=False)
    c0: np.ndarray = field(init=False, repr=False, compare=False)
    a_k: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        k = np.asarray(self.k_gain, dtype=float)
        if k.shape != (self.n,):
            raise ConfigurationError(f"K must have {self.n} entries", key="K")
        object.__setattr__(self, "k_gain", tuple(float(v) for v in k))
        object.__setattr__(self, "l_ab_rows", tuple(int(r) for r in self.l_ab_rows))
        a0 = np.eye(self.n, k=1)
        c0 = np.zeros(self.n)
        c0[0] = 1.0
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "a_k", a0 - np.outer(k, c0))

    @property
    def rows0(self):
        """``l_ab_rows`` as 0-based indices into ``eta``."""
        return np.asarray(self.l_ab_rows, dtype=int) - 1

    def validate(self):
        if not is_hurwitz(charpoly(self.a_k)):
            raise ConfigurationError(
                f"A_K = A0 - K C0^T is not Hurwitz for K={list(self.k_gain)}", key="K"
            )
        if not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise ConfigurationError("sigma must be >= 0", key="sigma")
        if not (math.isfinite(self.k_amp) and self.k_amp > 0.0):
            raise ConfigurationError("k_amp must be > 0", key="k_amp")
        rows = self.l_ab_rows
        if len(set(rows)) != len(rows) or any(r < 1 or r > 2 * self.n for r in rows):
            raise ConfigurationError(
                f"l_ab_rows must be distinct indices in [1, {2 * self.n}]", key="l_ab_rows"
            )
        return self


@dataclass
class FilterBankState:
    z: np.ndarray
    omega: np.ndarray
    p_filt: np.ndarray
    chi: np.ndarray
    qbar: np.ndarray
    phibar: np.ndarray
    t0: float = 0.0

    @property
    def n(self):
        return self.z.shape[0]


def init_filter_bank(cfg, t0=0.0):
    cfg.validate()
    n = cfg.n
    return FilterBankState(
        z=np.zeros(n),
        omega=np.zeros((n, n)),
        p_filt=np.zeros((n, n)),
        chi=cfg.c0.copy(),
        qbar=np.zeros(3 * n),
        phibar=np.zeros((3 * n, 3 * n)),
        t0=float(t0),
    )


def regressor_phi(state, y):
    """``(phi, q)`` read off the filter state; ``C0 = e1`` so
    ``Omega^T C0`` is the first row of ``Omega``."""
    phi = np.concatenate((state.omega[0], state.p_filt[0], state.chi))
    return phi, y - state.z[0]


def filter_rhs(state, y, u, t, cfg):
    a_k = cfg.a_k
    n = state.n
    eye = np.eye(n)
    phi, q = regressor_phi(state, y)
    w = math.exp(-cfg.sigma * (t - state.t0))
    return FilterBankState(
        z=a_k @ state.z + np.asarray(cfg.k_gain) * y,
        omega=a_k @ state.omega + eye * y,
        p_filt=a_k @ state.p_filt + eye * u,
        chi=a_k.T @ state.chi,
        qbar=(w * q) * phi,
        phibar=w * np.outer(phi, phi),
        t0=state.t0,
    )


def symmetric_adjugate(m):
    """Adjugate route used for ``phibar``, which is symmetric PSD."""
    return adjugate_det(m, symmetric=True)


def mix_arrays(phibar, qbar, cfg, adjugate=symmetric_adjugate):
    """``(Y, Delta)`` from raw arrays; accepts stacks ``(..., 3n, 3n)``."""
    adj, d = adjugate(phibar)
    rows = adj[..., cfg.rows0, :]
    y_vec = cfg.k_amp * np.matmul(rows, np.asarray(qbar)[..., None])[..., 0]
    return y_vec, cfg.k_amp * d


def mix(state, cfg, adjugate=symmetric_adjugate):
    """``(Y, Delta)``; singular ``phibar`` yields ``Delta = 0`` without error."""
    return mix_arrays(state.phibar, state.qbar, cfg, adjugate)


def state_size(n):
    """Length of :func:`pack` output."""
    return 5 * n + 11 * n * n


def pack(state):
    return np.concatenate(
        (
            state.z,
            state.omega.ravel(),
            state.p_filt.ravel(),
            state.chi,
            state.qbar,
            state.phibar.ravel(),
        )
    )


def unpack(vec, n, t0=0.0):
    """Inverse of :func:`pack`; the returned arrays are views into ``vec``."""
    i = 0
    parts = []
    for shape in ((n,), (n, n), (n, n), (n,), (3 * n,), (3 * n, 3 * n)):
        size = int(np.prod(shape))
        parts.append(vec[i : i + size].reshape(shape))
        i += size
    return FilterBankState(*parts, t0=t0)
