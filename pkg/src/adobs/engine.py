"""Fixed-step simulation of plant, filter bank, identifiers and observer.

The augmented state is advanced with classical RK4.  Its structure is
exploited without changing the numerical method:

* ``(x, z, Omega, P, chi)`` is a linear time-invariant block driven only by
  the reference ``r(t)``.  One RK4 step of it is an affine map of the state
  and the three reference samples ``r(t), r(t + h/2), r(t + h)``.  The map
  and its four stage maps are built once by probing the right-hand sides.
* ``(qbar, phibar)`` and the unweighted Gram have derivatives that depend
  on time and the stage values of the linear block only.  Their RK4
  increments are therefore quadratures over the stage outputs and can be
  evaluated for a whole chunk of steps at once.
* The regression snapshot (mixing + mapping cascade) is held constant over
  each step, so it is a function of the step-start ``phibar``/``qbar`` and
  is also evaluated per chunk.
* ``(x_hat, Theta_hat, L_hat)`` depends on everything above and is stepped
  sequentially with :func:`rk4_step`, fed with the stage-local ``y`` and
  ``u`` of the linear block.

Nothing feeds back from the last group into the others, so the result is
the RK4 solution of the full augmented system (up to rounding order).
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .densemat import sym_eigen_extremes
from .errors import ConfigurationError, ContractError, DivergenceError, IntegrationError
from .estimator import EstimateState, EstimatorConfig, estimator_rhs
from .gpebo import FilterBankState, GpeboConfig, filter_rhs, mix_arrays, regressor_phi
from .mappings import RegressionSnapshot, cascade_arrays
from .observer import observer_rhs
from .plant import EXAMPLE, PlantModel, SignalSpec, control, reference

log = logging.getLogger(__name__)

__all__ = [
    "DIVERGENCE_LIMIT",
    "ScenarioConfig",
    "SimLog",
    "excitation_gram",
    "regressor_gram",
    "rk4_step",
    "run_scenario",
]

DIVERGENCE_LIMIT = 1e9
CHUNK = 2048
RK4_WEIGHTS = (1.0, 2.0, 2.0, 1.0)


@dataclass(frozen=True)
class ScenarioConfig:
    theta_true: tuple = (1.0, 1.0, -1.0)
    x0: tuple = (-1.0, 0.0, 2.0)
    signal: SignalSpec = field(default_factory=SignalSpec)
    gpebo: GpeboConfig = field(default_factory=GpeboConfig)
    est: EstimatorConfig = field(default_factory=EstimatorConfig)
    a_m: float = 1.0
    t0: float = 0.0
    t_end: float = 30.0
    h: float = 1e-4
    log_every: int = 100
    # lambda_min of the running Gram above which the regressor counts as FE
    alpha_threshold: float = 1e-10
    theta_ab_hat0: tuple = (0.0, 0.0, 0.0)
    l_hat0: tuple = (0.0, 0.0, 0.0)
    x_hat0: tuple = (0.0, 0.0, 0.0)
    model: PlantModel = EXAMPLE

    def __post_init__(self):
        for name in ("theta_true", "x0", "theta_ab_hat0", "l_hat0", "x_hat0"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    @property
    def n_steps(self):
        # a final partial step is rounded up to a full one
        return max(1, math.ceil((self.t_end - self.t0) / self.h - 1e-9))

    def validate(self):
        if not (math.isfinite(self.h) and 0.0 < self.h <= 1e-2):
            raise ConfigurationError("h must satisfy 0 < h <= 1e-2", key="h")
        if not (math.isfinite(self.t0) and math.isfinite(self.t_end) and self.t_end > self.t0):
            raise ConfigurationError("t_end must be > t0", key="t_end")
        if int(self.log_every) != self.log_every or self.log_every < 1:
            raise ConfigurationError("log_every must be an integer >= 1", key="log_every")
        if not (self.gpebo.sigma > 0.0):
            raise ConfigurationError("sigma must be > 0", key="sigma")
        if not (math.isfinite(self.a_m) and self.a_m > 0.0):
            raise ConfigurationError("a_m must be > 0", key="a_m")
        if not (math.isfinite(self.alpha_threshold) and self.alpha_threshold >= 0.0):
            raise ConfigurationError("alpha_threshold must be >= 0", key="alpha_threshold")
        self.gpebo.validate()
        self.est.validate()
        real = self.model.realize(np.asarray(self.theta_true))
        if len(self.x0) != real.n:
            raise ConfigurationError(f"x0 must have {real.n} entries", key="x0")
        if real.n != self.gpebo.n:
            raise ConfigurationError("filter order differs from plant order", key="K")
        if len(self.gpebo.l_ab_rows) != real.n_theta:
            raise ConfigurationError("l_ab_rows must select n_theta rows", key="l_ab_rows")
        return self


@dataclass(frozen=True)
class SimLog:
    """Decimated trajectory; row ``i`` of every array belongs to ``t[i]``.

    Besides the CSV columns the log keeps the raw mixing output ``y_raw``,
    the weighted extension ``phibar`` and the unweighted cumulative Gram
    ``gram`` (integral from ``t0``) at each logged instant.
    """

    t: np.ndarray
    x: np.ndarray
    x_hat: np.ndarray
    theta_ab_hat: np.ndarray
    l_hat: np.ndarray
    delta: np.ndarray
    m_theta: np.ndarray
    m_ab: np.ndarray
    m_l: np.ndarray
    y: np.ndarray
    u: np.ndarray
    y_tilde: np.ndarray
    x_err_norm: np.ndarray
    excitation_alpha: np.ndarray
    y_raw: np.ndarray
    phibar: np.ndarray
    gram: np.ndarray
    n_steps: int
    h: float
    alpha_threshold: float = 0.0

    COLUMNS = (
        "t,x1,x2,x3,xhat1,xhat2,xhat3,thab1,thab2,thab3,l1,l2,l3,"
        "delta,m_theta,m_ab,m_l,y,u,y_tilde,x_err_norm,alpha"
    ).split(",")

    def __len__(self):
        return self.t.shape[0]

    def table(self):
        """Rows in CSV column order, shape ``(len(self), 22)``."""
        scalars = (
            self.delta,
            self.m_theta,
            self.m_ab,
            self.m_l,
            self.y,
            self.u,
            self.y_tilde,
            self.x_err_norm,
            self.excitation_alpha,
        )
        return np.column_stack(
            (self.t, self.x, self.x_hat, self.theta_ab_hat, self.l_hat) + scalars
        )

    def first_time(self, mask):
        idx = np.flatnonzero(mask)
        return float(self.t[idx[0]]) if idx.size else None

    @property
    def fe_onset(self):
        """First logged time the running Gram exceeds ``alpha_threshold``."""
        return self.first_time(self.excitation_alpha > self.alpha_threshold)


def rk4_step(rhs, state, t, h):
    """One classical RK4 step of ``state' = rhs(t, state)``.

    ``rhs`` is called exactly four times, in stage order, so a caller may
    feed stage-specific exogenous samples through a closure.  A non-finite
    stage always propagates into the result, which is checked once.
    """
    half = 0.5 * h
    k1 = rhs(t, state)
    k2 = rhs(t + half, state + half * k1)
    k3 = rhs(t + half, state + half * k2)
    k4 = rhs(t + h, state + h * k3)
    out = state + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationError(f"non-finite state in RK4 step at t={t:.6g}", t)
    return out


class _LinearBlock:
    """Affine RK4 maps of ``(x, z, Omega, P, chi)`` driven by ``r``."""

    def __init__(self, cfg, real):
        n = real.n
        self.n = n
        self.m = 3 * n + 2 * n * n
        gcfg = cfg.gpebo
        spec = cfg.signal
        zero_ext = (np.zeros(3 * n), np.zeros((3 * n, 3 * n)))

        def unpack(s):
            fb = FilterBankState(
                z=s[n : 2 * n],
                omega=s[2 * n : 2 * n + n * n].reshape(n, n),
                p_filt=s[2 * n + n * n : 2 * n + 2 * n * n].reshape(n, n),
                chi=s[2 * n + 2 * n * n :],
                qbar=zero_ext[0],
                phibar=zero_ext[1],
                t0=cfg.t0,
            )
            return s[:n], fb

        def rhs(s, r):
            x, fb = unpack(s)
            y = float(real.c @ x)
            u = control(r, y, spec)
            d = filter_rhs(fb, y, u, cfg.t0, gcfg)
            return np.concatenate(
                (real.rhs(x, u), d.z, d.omega.ravel(), d.p_filt.ravel(), d.chi)
            )

        def out(s, r):
            x, fb = unpack(s)
            y = float(real.c @ x)
            phi, q = regressor_phi(fb, y)
            return np.concatenate((phi, [q, y, control(r, y, spec)]))

        m = self.m
        eye = np.eye(m)
        f = np.column_stack([rhs(eye[j], 0.0) for j in range(m)])
        g = rhs(np.zeros(m), 1.0)
        hmat = np.column_stack([out(eye[j], 0.0) for j in range(m)])
        hr = out(np.zeros(m), 1.0)

        rng = np.random.default_rng(0)
        s_probe, r_probe = rng.standard_normal(m), 0.7
        for fn, mat, vec in ((rhs, f, g), (out, hmat, hr)):
            ref = fn(s_probe, r_probe)
            if not np.allclose(mat @ s_probe + vec * r_probe, ref, rtol=1e-10, atol=1e-10):
                raise ConfigurationError(
                    "plant, filters and control law must be linear in (state, r)", key="model"
                )

        self.s0 = np.concatenate(
            (
                np.asarray(cfg.x0, dtype=float),
                np.zeros(n),
                np.zeros(n * n),
                np.zeros(n * n),
                gcfg.c0,
            )
        )

        # maps from zeta = (s, r(t), r(t+h/2), r(t+h))
        h = cfg.h
        aug = np.eye(m + 3)
        s1 = aug[:m]
        sel = (aug[m], aug[m + 1], aug[m + 1], aug[m + 2])
        k1 = f @ s1 + np.outer(g, sel[0])
        s2 = s1 + 0.5 * h * k1
        k2 = f @ s2 + np.outer(g, sel[1])
        s3 = s1 + 0.5 * h * k2
        k3 = f @ s3 + np.outer(g, sel[2])
        s4 = s1 + h * k3
        k4 = f @ s4 + np.outer(g, sel[3])
        step = s1 + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        self.step_s = step[:, :m].copy()
        self.step_r = step[:, m:].copy()
        self.stage_out = np.stack(
            [hmat @ si + np.outer(hr, e) for si, e in zip((s1, s2, s3, s4), sel)]
        )
        self.h_out = hmat
        self.hr_out = hr
        self.n_phi = 3 * n

    def advance(self, s, rvals):
        """States at the start of each step and the state after the last."""
        drive = rvals @ self.step_r.T
        states = np.empty((rvals.shape[0] + 1, self.m))
        states[0] = s
        step_s = self.step_s
        for k in range(rvals.shape[0]):
            s = step_s @ s + drive[k]
            states[k + 1] = s
        return states

    def outputs(self, s, r):
        return self.h_out @ s + self.hr_out * r


def _snapshot_arrays(phibar, qbar, cfg, bundle):
    # the cascade degrees reach 45 in Delta, so large Delta can overflow;
    # the estimator treats a non-finite M as carrying no information
    with np.errstate(over="ignore", invalid="ignore"):
        y_raw, delta = mix_arrays(phibar, qbar, cfg.gpebo)
        return cascade_arrays(y_raw, delta, bundle)


class _FrozenObserver:
    """Affine RK4 map of the observer while the estimates are frozen.

    With constant ``(Theta_hat, L_hat)`` the observer is linear in
    ``(x_hat, u, y)`` whenever the regressor is linear in ``(x, u)``.  One
    RK4 step is then ``x_hat' = R x_hat + G w`` with ``w`` the stage samples
    ``(u1, y1, ..., u4, y4)``.
    """

    def __init__(self, step_x, step_w):
        self.step_x = step_x
        self.step_w = step_w

    @classmethod
    def build(cls, real, theta_ab_hat, l_hat, h):
        n = real.n

        def f(x, u, y):
            return observer_rhs(x, u, y, theta_ab_hat, l_hat, real)

        eye = np.eye(n)
        zero = np.zeros(n)
        fx = np.column_stack([f(eye[j], 0.0, 0.0) for j in range(n)])
        fu = f(zero, 1.0, 0.0)
        fy = f(zero, 0.0, 1.0)
        probe = np.random.default_rng(1).standard_normal(n + 2)
        ref = f(probe[:n], probe[n], probe[n + 1])
        lin = fx @ probe[:n] + fu * probe[n] + fy * probe[n + 1]
        if not np.allclose(lin, ref, rtol=1e-10, atol=1e-10):
            return None

        aug = np.eye(n + 8)
        s1 = aug[:n]

        def deriv(si, i):
            return fx @ si + np.outer(fu, aug[n + 2 * i]) + np.outer(fy, aug[n + 2 * i + 1])

        k1 = deriv(s1, 0)
        k2 = deriv(s1 + 0.5 * h * k1, 1)
        k3 = deriv(s1 + 0.5 * h * k2, 2)
        k4 = deriv(s1 + h * k3, 3)
        step = s1 + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        return cls(step[:, :n].copy(), step[:, n:].copy())

    def advance(self, x, ys, us):
        """States at each step start plus the final one, ``(len(ys)+1, n)``."""
        w = np.empty((ys.shape[0], 8))
        w[:, 0::2] = us
        w[:, 1::2] = ys
        drive = w @ self.step_w.T
        out = np.empty((ys.shape[0] + 1, x.shape[0]))
        out[0] = x
        step_x = self.step_x
        for k in range(ys.shape[0]):
            x = step_x @ x + drive[k]
            out[k + 1] = x
        return out


def _segments(mask):
    """``(start, stop, value)`` runs of a boolean sequence."""
    mask = np.asarray(mask, dtype=bool)
    edges = np.flatnonzero(np.diff(mask.astype(np.int8))) + 1
    starts = np.concatenate(([0], edges))
    stops = np.concatenate((edges, [mask.size]))
    return [(int(a), int(b), bool(mask[a])) for a, b in zip(starts, stops)]


def _diverged(v, n, t, delta):
    return DivergenceError(
        f"observer diverged: |x_hat|={float(np.linalg.norm(v[:n])):.3e} > {DIVERGENCE_LIMIT:g} "
        f"after step at t={t:.6g} (delta={delta:.3e}, "
        f"theta_ab_hat={v[n:2 * n].tolist()}, l_hat={v[2 * n:].tolist()})",
        t,
    )


def _simulate(cfg, marks=()):
    cfg.validate()
    model = cfg.model
    real = model.realize(np.asarray(cfg.theta_true))
    bundle = model.bundle(cfg.a_m)
    block = _LinearBlock(cfg, real)
    n, n_phi = real.n, block.n_phi
    h, t0, sigma = cfg.h, cfg.t0, cfg.gpebo.sigma
    n_steps = cfg.n_steps
    every = int(cfg.log_every)
    est_cfg = cfg.est
    rho = est_cfg.rho
    spec = cfg.signal
    c_vec = real.c
    regressor = real.regressor
    n_th = real.n_big_theta

    mark_idx = {}
    for mk in marks:
        k = int(round((mk - t0) / h))
        if not 0 <= k <= n_steps:
            raise ContractError(f"time {mk} outside the simulated interval")
        mark_idx.setdefault(k, []).append(mk)
    mark_out = {}

    logged = list(range(0, n_steps, every)) + [n_steps]
    n_rows = len(logged)
    rows = {
        "x": np.empty((n_rows, n)),
        "v": np.empty((n_rows, n + n_th + n)),
        "y_raw": np.empty((n_rows, n_th)),
        "phibar": np.empty((n_rows, n_phi, n_phi)),
        "gram": np.empty((n_rows, n_phi, n_phi)),
    }
    scal = {k: np.empty(n_rows) for k in ("delta", "m_theta", "m_ab", "m_l", "y", "u")}

    s = block.s0
    qbar = np.zeros(n_phi)
    phibar = np.zeros((n_phi, n_phi))
    gram = np.zeros((n_phi, n_phi))
    v = np.concatenate(
        (
            np.asarray(cfg.x_hat0, dtype=float),
            np.asarray(cfg.theta_ab_hat0, dtype=float),
            np.asarray(cfg.l_hat0, dtype=float),
        )
    )
    i_th, i_l = n, n + n_th
    zeros_est = np.zeros(n_th + n)
    weights = np.array(RK4_WEIGHTS) * (h / 6.0)
    stage_dt = np.array([0.0, 0.5 * h, 0.5 * h, h])
    frozen = {}

    def prefix_sums(start, incr):
        return np.cumsum(np.concatenate((start[None], incr)), axis=0)

    def frozen_map(v):
        key = v[n:].tobytes()
        if key not in frozen:
            frozen.clear()
            frozen[key] = _FrozenObserver.build(real, v[i_th:i_l].copy(), v[i_l:].copy(), h)
        return frozen[key]

    for k0 in range(0, n_steps, CHUNK):
        k1 = min(k0 + CHUNK, n_steps)
        ks = np.arange(k0, k1)
        tk = t0 + ks * h
        rvals = np.column_stack(
            (reference(tk, spec), reference(tk + 0.5 * h, spec), reference(tk + h, spec))
        )
        states = block.advance(s, rvals)
        zeta = np.concatenate((states[:-1], rvals), axis=1)
        outs = np.einsum("ipm,km->kip", block.stage_out, zeta)
        phis = outs[:, :, :n_phi]
        qs = outs[:, :, n_phi]
        ys = outs[:, :, n_phi + 1]
        us = outs[:, :, n_phi + 2]

        wts = np.exp(-sigma * (tk[:, None] + stage_dt[None, :] - t0)) * weights
        d_qbar = np.einsum("ki,ki,kia->ka", wts, qs, phis)
        outer = np.einsum("kia,kib->kiab", phis, phis)
        d_phibar = np.einsum("ki,kiab->kab", wts, outer)
        d_gram = np.einsum("i,kiab->kab", weights, outer)
        d_phibar = 0.5 * (d_phibar + np.swapaxes(d_phibar, 1, 2))
        d_gram = 0.5 * (d_gram + np.swapaxes(d_gram, 1, 2))
        qbar_seq = prefix_sums(qbar, d_qbar)
        phibar_seq = prefix_sums(phibar, d_phibar)
        gram_seq = prefix_sums(gram, d_gram)
        for kk, mks in mark_idx.items():
            if k0 <= kk < k1:
                for mk in mks:
                    mark_out[mk] = gram_seq[kk - k0].copy()

        snaps = _snapshot_arrays(phibar_seq[:-1], qbar_seq[:-1], cfg, bundle)
        delta = snaps["delta"]

        local = np.flatnonzero(ks % every == 0)
        rix = ks[local] // every
        rows["x"][rix] = states[local, :n]
        rows["y_raw"][rix] = snaps["y_raw"][local]
        rows["phibar"][rix] = phibar_seq[local]
        rows["gram"][rix] = gram_seq[local]
        for key in ("delta", "m_theta", "m_ab", "m_l"):
            scal[key][rix] = snaps[key][local]
        scal["y"][rix] = ys[local, 0]
        scal["u"][rix] = us[local, 0]

        for a, b, is_active in _segments(delta >= rho):
            fmap = None if is_active else frozen_map(v)
            if fmap is not None:
                xs = fmap.advance(v[:n], ys[a:b], us[a:b])
                sel = local[(local >= a) & (local < b)]
                rows["v"][ks[sel] // every] = np.concatenate(
                    (xs[sel - a], np.broadcast_to(v[n:], (sel.size, v.size - n))), axis=1
                )
                bad = ~np.isfinite(xs[1:]).all(axis=1)
                big = np.sqrt(np.einsum("ki,ki->k", xs[1:], xs[1:])) > DIVERGENCE_LIMIT
                if bad.any() or big.any():
                    j = int(np.flatnonzero(bad | big)[0])
                    t_j = t0 + (k0 + a + j) * h
                    if bad[j]:
                        raise IntegrationError(f"non-finite state in RK4 step at t={t_j:.6g}", t_j)
                    raise _diverged(np.concatenate((xs[j + 1], v[n:])), n, t_j, float(delta[a + j]))
                v = np.concatenate((xs[-1], v[n:]))
                continue

            y_list = ys[a:b].tolist()
            u_list = us[a:b].tolist()
            m_ab = snaps["m_ab"][a:b].tolist()
            m_l = snaps["m_l"][a:b].tolist()
            for k in range(a, b):
                kk = k0 + k
                if kk % every == 0:
                    rows["v"][kk // every] = v
                y_st = y_list[k - a]
                u_st = u_list[k - a]
                stage = [0]
                if is_active:
                    held = RegressionSnapshot(
                        y_raw=snaps["y_raw"][k],
                        delta=float(delta[k]),
                        y_theta=snaps["y_theta"][k],
                        m_theta=float(snaps["m_theta"][k]),
                        y_ab=snaps["y_ab"][k],
                        m_ab=m_ab[k - a],
                        y_l=snaps["y_l"][k],
                        m_l=m_l[k - a],
                    )
                else:
                    held = None

                def rhs(t, w):
                    i = stage[0]
                    stage[0] = i + 1
                    y, u = y_st[i], u_st[i]
                    xh, th, lh = w[:i_th], w[i_th:i_l], w[i_l:]
                    pt = regressor(xh, u)
                    dx = observer_rhs(xh, u, y, th, lh, real, phi_t=pt)
                    if held is None:
                        return np.concatenate((dx, zeros_est))
                    yt = float(c_vec @ xh) - y
                    est = EstimateState(theta_ab_hat=th, l_hat=lh, x_hat=xh)
                    dth, dl = estimator_rhs(est, held, pt, yt, est_cfg)
                    return np.concatenate((dx, dth, dl))

                t_k = t0 + kk * h
                v = rk4_step(rhs, v, t_k, h)
                if float(v[:n] @ v[:n]) > DIVERGENCE_LIMIT**2:
                    raise _diverged(v, n, t_k, float(delta[k]))

        s = states[-1]
        qbar = qbar_seq[-1]
        phibar = phibar_seq[-1]
        gram = gram_seq[-1]

    t_final = t0 + n_steps * h
    if n_steps in mark_idx:
        for mk in mark_idx[n_steps]:
            mark_out[mk] = gram.copy()
    snap = _snapshot_arrays(phibar, qbar, cfg, bundle)
    o = block.outputs(s, float(reference(t_final, spec)))
    last = n_rows - 1
    rows["x"][last] = s[:n]
    rows["v"][last] = v
    rows["y_raw"][last] = snap["y_raw"]
    rows["phibar"][last] = phibar
    rows["gram"][last] = gram
    for key in ("delta", "m_theta", "m_ab", "m_l"):
        scal[key][last] = snap[key]
    scal["y"][last] = o[n_phi + 1]
    scal["u"][last] = o[n_phi + 2]
    rows["x_hat"] = rows["v"][:, :n]
    rows["theta_ab_hat"] = rows["v"][:, i_th:i_l]
    rows["l_hat"] = rows["v"][:, i_l:]

    t = t0 + np.asarray(logged, dtype=float) * h
    y_tilde = rows["x_hat"] @ c_vec - scal["y"]
    x_err = np.linalg.norm(rows["x_hat"] - rows["x"], axis=1)
    alpha = sym_eigen_extremes(rows["gram"])[0]
    sim = SimLog(
        t=t,
        x=rows["x"],
        x_hat=rows["x_hat"],
        theta_ab_hat=rows["theta_ab_hat"],
        l_hat=rows["l_hat"],
        delta=scal["delta"],
        m_theta=scal["m_theta"],
        m_ab=scal["m_ab"],
        m_l=scal["m_l"],
        y=scal["y"],
        u=scal["u"],
        y_tilde=y_tilde,
        x_err_norm=x_err,
        excitation_alpha=alpha,
        y_raw=rows["y_raw"],
        phibar=rows["phibar"],
        gram=rows["gram"],
        n_steps=n_steps,
        h=h,
        alpha_threshold=cfg.alpha_threshold,
    )
    log.info(
        "scenario done: %d steps, %d rows, max delta %.3e (rho %.3g)",
        n_steps,
        len(sim),
        float(np.max(sim.delta)),
        rho,
    )
    return sim, mark_out


def run_scenario(cfg):
    """Integrate the scenario and return the decimated :class:`SimLog`.

    Rows are logged at every ``log_every``-th step and at the final step,
    so ``len(log) == 1 + ceil(n_steps / log_every)``.
    """
    return _simulate(cfg)[0]


def excitation_gram(cfg, window_start, window_end):
    """Unweighted Gram of the GPEBO regressor over a window and its
    ``lambda_min``.  Window ends are rounded to the step grid."""
    if not window_end > window_start:
        raise ContractError(f"empty window [{window_start}, {window_end}]")
    if window_start < cfg.t0 - 1e-12 or window_end > cfg.t_end + 1e-12:
        raise ContractError(f"window [{window_start}, {window_end}] outside [{cfg.t0}, {cfg.t_end}]")
    sub = replace(cfg, t_end=window_end)
    _, marks = _simulate(sub, marks=(window_start, window_end))
    gram = marks[window_end] - marks[window_start]
    gram = 0.5 * (gram + gram.T)
    return gram, sym_eigen_extremes(gram)[0]


def regressor_gram(phi_fn, window_start, window_end, h=1e-3):
    """Gram of a given regressor ``phi_fn(t)`` over a window, RK4 quadrature."""
    if not window_end > window_start:
        raise ContractError(f"empty window [{window_start}, {window_end}]")
    n = np.asarray(phi_fn(window_start)).shape[0]
    steps = max(1, math.ceil((window_end - window_start) / h - 1e-9))
    dt = (window_end - window_start) / steps

    def rhs(t, _g):
        p = np.asarray(phi_fn(t), dtype=float)
        return np.outer(p, p).ravel()

    g = np.zeros(n * n)
    for k in range(steps):
        g = rk4_step(rhs, g, window_start + k * dt, dt)
    gram = g.reshape(n, n)
    gram = 0.5 * (gram + gram.T)
    return gram, sym_eigen_extremes(gram)[0]
