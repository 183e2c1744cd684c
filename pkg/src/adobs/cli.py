"""Command line: run scenarios to CSV, run the oracle checks, report excitation.

Configuration files are line oriented ``key = value`` with ``#`` comments.
Vector values are comma separated.  Absent keys keep their defaults and
``--set key=value`` overrides win over the file.
"""

import argparse
import logging
import math
import sys
from dataclasses import replace

import numpy as np

from .densemat import adjugate_det, charpoly, sym_eigen_extremes
from .engine import ScenarioConfig, excitation_gram, run_scenario
from .errors import AdobsError, ConfigParseError, ConfigurationError, ContractError, DegenerateParameterError
from .gpebo import GpeboConfig
from .mappings import cascade, example_bundle, gain_stage, true_snapshot_ratios
from .plant import psi_ab, realize

log = logging.getLogger(__name__)

__all__ = ["format_config", "main", "parse_config", "write_csv", "cmd_verify"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

VECTOR_KEYS = ("theta_true", "x0", "K")
INT_KEYS = ("log_every",)
KEYS = (
    "theta_true",
    "x0",
    "K",
    "k_amp",
    "sigma",
    "rho",
    "gamma0",
    "gamma1",
    "a_m",
    "ctrl_gain",
    "ref_offset",
    "ref_amp",
    "ref_decay",
    "ref_freq",
    "t0",
    "t_end",
    "h",
    "log_every",
    "alpha_threshold",
)
_SIGNAL = ("ctrl_gain", "ref_offset", "ref_amp", "ref_decay", "ref_freq")
_EST = ("rho", "gamma0", "gamma1")
_TOP = ("a_m", "t0", "t_end", "h", "log_every", "alpha_threshold")


def _read_pairs(text):
    """``{key: (raw value, line number)}``; rejects unknown keys and junk."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"line {lineno}: expected 'key = value'", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigParseError(f"line {lineno}: unknown key {key!r}", line=lineno, key=key)
        if key in pairs:
            raise ConfigParseError(f"line {lineno}: duplicate key {key!r}", line=lineno, key=key)
        pairs[key] = (value, lineno)
    return pairs


def _number(text, key, lineno):
    where = f"line {lineno}" if lineno else "override"
    try:
        return float(text)
    except ValueError:
        raise ConfigParseError(f"{where}: malformed number {text!r} for {key}", line=lineno, key=key) from None


def _convert(key, value, lineno):
    if key in VECTOR_KEYS:
        parts = [p.strip() for p in value.split(",")]
        if any(not p for p in parts):
            raise ConfigParseError(f"line {lineno}: empty entry in {key}", line=lineno, key=key)
        return tuple(_number(p, key, lineno) for p in parts)
    number = _number(value, key, lineno)
    if key in INT_KEYS:
        if not number.is_integer():
            raise ConfigParseError(f"line {lineno}: {key} must be an integer", line=lineno, key=key)
        return int(number)
    return number


def build_config(values, base=None):
    """ScenarioConfig from converted values; unspecified keys come from ``base``."""
    base = base or ScenarioConfig()
    g = base.gpebo
    gpebo = GpeboConfig(
        k_gain=values.get("K", g.k_gain),
        sigma=values.get("sigma", g.sigma),
        k_amp=values.get("k_amp", g.k_amp),
        l_ab_rows=g.l_ab_rows,
        n=len(values.get("K", g.k_gain)),
    )
    signal = replace(base.signal, **{k: values[k] for k in _SIGNAL if k in values})
    est = replace(base.est, **{k: values[k] for k in _EST if k in values})
    cfg = replace(
        base,
        theta_true=values.get("theta_true", base.theta_true),
        x0=values.get("x0", base.x0),
        gpebo=gpebo,
        signal=signal,
        est=est,
        **{k: values[k] for k in _TOP if k in values},
    )
    try:
        return cfg.validate()
    except DegenerateParameterError as exc:
        raise ConfigurationError(str(exc), key="theta_true") from exc


def parse_config(text, overrides=()):
    """Parse a configuration document (plus ``key=value`` overrides) into a
    validated :class:`ScenarioConfig`."""
    pairs = _read_pairs(text)
    for item in overrides:
        if "=" not in item:
            raise ConfigParseError(f"override {item!r}: expected key=value")
        key, value = (part.strip() for part in item.split("=", 1))
        if key not in KEYS:
            raise ConfigParseError(f"override: unknown key {key!r}", key=key)
        pairs[key] = (value, None)
    values = {key: _convert(key, value, lineno) for key, (value, lineno) in pairs.items()}
    return build_config(values)


def config_values(cfg):
    return {
        "theta_true": cfg.theta_true,
        "x0": cfg.x0,
        "K": cfg.gpebo.k_gain,
        "k_amp": cfg.gpebo.k_amp,
        "sigma": cfg.gpebo.sigma,
        "rho": cfg.est.rho,
        "gamma0": cfg.est.gamma0,
        "gamma1": cfg.est.gamma1,
        "a_m": cfg.a_m,
        "ctrl_gain": cfg.signal.ctrl_gain,
        "ref_offset": cfg.signal.ref_offset,
        "ref_amp": cfg.signal.ref_amp,
        "ref_decay": cfg.signal.ref_decay,
        "ref_freq": cfg.signal.ref_freq,
        "t0": cfg.t0,
        "t_end": cfg.t_end,
        "h": cfg.h,
        "log_every": cfg.log_every,
        "alpha_threshold": cfg.alpha_threshold,
    }


def format_config(cfg):
    """Inverse of :func:`parse_config` (floats printed with ``repr``)."""
    lines = []
    for key, value in config_values(cfg).items():
        if key in VECTOR_KEYS:
            text = ", ".join(repr(float(v)) for v in value)
        elif key in INT_KEYS:
            text = str(int(value))
        else:
            text = repr(float(value))
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def write_csv(sim, path):
    if len(sim) == 0:
        raise ValueError("empty log")
    table = sim.table()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(sim.COLUMNS) + "\n")
        for row in table.tolist():
            fh.write(",".join(repr(v) for v in row) + "\n")


# -- verification suite ---------------------------------------------------

VERIFY_T_END = 6.0


class _Report:
    def __init__(self, out):
        self.out = out
        self.failed = []

    def check(self, name, ok, detail):
        status = "PASS" if ok else "FAIL"
        print(f"{status} {name}: {detail}", file=self.out)
        if not ok:
            self.failed.append(name)

    def info(self, name, detail):
        print(f"INFO {name}: {detail}", file=self.out)


def _check_adjugate(report, adjugate, rng):
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 10))
        m = rng.standard_normal((n, n)) * 10.0 ** rng.uniform(-3, 3)
        if rng.random() < 0.25 and n > 1:
            m[:, -1] = m[:, :-1] @ rng.standard_normal(n - 1)
        adj, d = adjugate(m)
        scale = 1.0 + np.max(np.abs(m)) ** n
        err = np.max(np.abs(adj @ m - d * np.eye(n))) / scale
        worst = max(worst, float(err))
    report.check("adjugate identity", worst <= 1e-9, f"max |adj(M) M - det(M) I| / (1 + |M|^n) = {worst:.3e}")


def _check_jacobi(report, rng):
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 10))
        a = rng.standard_normal((n, n))
        a = a + a.T
        lo, hi = sym_eigen_extremes(a)
        v = rng.standard_normal((100, n))
        rq = np.einsum("ki,ij,kj->k", v, a, v) / np.einsum("ki,ki->k", v, v)
        scale = np.max(np.abs(a))
        worst = max(worst, float(np.max(rq - hi)) / scale, float(np.max(lo - rq)) / scale)
    report.check("jacobi extremes", worst <= 1e-12, f"max relative bracket violation {worst:.3e}")


def _check_cascade(report, rng, bundle):
    worst = 0.0
    for _ in range(100):
        th = np.array([rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(-2, -0.5)])
        d = rng.uniform(0.1, 10.0)
        snap = cascade(d * psi_ab(th), d, bundle)
        want = true_snapshot_ratios(th, bundle.a_m)
        got = (snap.y_theta / snap.m_theta, snap.y_ab / snap.m_ab, snap.y_l / snap.m_l)
        for g, w in zip(got, want):
            worst = max(worst, float(np.max(np.abs(g - w) / np.abs(w))))
    report.check("cascade round-trip", worst <= 1e-8, f"max relative error {worst:.3e}")


def _check_placement(report, a_m):
    th = np.array([1.0, 1.0, -1.0])
    m_th = 1.7
    y_l, m_l = gain_stage(m_th * th, m_th, 1.0, example_bundle(a_m))
    gain = y_l / m_l
    real = realize(th)
    coeffs = charpoly(real.a - np.outer(gain, real.c))
    target = np.poly(-a_m * np.ones(real.n))
    err = float(np.max(np.abs(coeffs - target)))
    report.check(
        "eigen-placement",
        err <= 1e-9,
        f"L = {gain.tolist()}, charpoly {coeffs.tolist()}, error {err:.3e}",
    )


def _check_heterogeneity(report, rng, bundle):
    worst = 0.0
    for _ in range(20):
        y = rng.uniform(-2, 2, 3)
        d = rng.uniform(0.1, 3)
        c = rng.uniform(0.2, 3)
        deg = bundle.degrees
        pairs = (
            ("t_g", np.diagonal(bundle.t_g(c * y, c * d)), np.diagonal(bundle.t_g(y, d))),
            ("t_s", bundle.t_s(c * y, c * d), bundle.t_s(y, d)),
            ("t_theta", bundle.t_theta(c * y, c * d), bundle.t_theta(y, d)),
            ("pi_theta", np.diagonal(bundle.pi_theta(c * d)), np.diagonal(bundle.pi_theta(d))),
            ("t_p", np.diagonal(bundle.t_p(c * y, c * d)), np.diagonal(bundle.t_p(y, d))),
            ("t_q", bundle.t_q(c * y, c * d, bundle.a_m), bundle.t_q(y, d, bundle.a_m)),
        )
        for name, scaled, plain in pairs:
            want = c ** np.asarray(deg[name], dtype=float) * plain
            err = np.abs(scaled - want) / (1.0 + np.abs(want))
            worst = max(worst, float(np.max(err)))
    report.check("heterogeneity scaling", worst <= 1e-10, f"max relative error {worst:.3e}")


def _check_scenario(report, cfg):
    sim = run_scenario(cfg)
    psi = psi_ab(np.asarray(cfg.theta_true))
    mask = sim.t >= 3.0 - 1e-12
    resid = np.linalg.norm(sim.y_raw[mask] - sim.delta[mask, None] * psi, axis=1)
    bound = 1e-4 * (1.0 + np.abs(sim.delta[mask]) * np.linalg.norm(psi))
    ratio = float(np.max(resid / bound)) if mask.any() else math.inf
    report.check(
        "mixing residual",
        ratio <= 1.0,
        f"max |Y - Delta psi_ab| / bound = {ratio:.3e} over t in [3, {cfg.t_end:g}]",
    )
    _, alpha = excitation_gram(cfg, cfg.t0, cfg.t0 + 3.0)
    report.check("finite excitation", alpha > 0.0, f"lambda_min of Gram over [0, 3] = {alpha:.6e}")
    dmax = float(np.max(sim.delta))
    report.info(
        "dead zone",
        f"max Delta = {dmax:.3e} vs rho = {cfg.est.rho:g}; identifiers "
        + ("activate" if dmax >= cfg.est.rho else "never activate with this k_amp"),
    )


def cmd_verify(adjugate=adjugate_det, cfg=None, full=False, out=None):
    """Run the oracle checks; returns the exit code."""
    out = out or sys.stdout
    cfg = cfg or ScenarioConfig()
    if not full:
        cfg = replace(cfg, t_end=min(cfg.t_end, cfg.t0 + VERIFY_T_END))
    rng = np.random.default_rng(20240611)
    report = _Report(out)
    bundle = example_bundle(cfg.a_m)
    _check_adjugate(report, adjugate, rng)
    _check_jacobi(report, rng)
    _check_cascade(report, rng, bundle)
    _check_placement(report, cfg.a_m)
    _check_heterogeneity(report, rng, bundle)
    _check_scenario(report, cfg)
    if report.failed:
        print(f"{len(report.failed)} check(s) failed: {', '.join(report.failed)}", file=out)
        return EXIT_FAIL
    print("all checks passed", file=out)
    return EXIT_OK


# -- entry point -----------------------------------------------------------


def _parse_window(text):
    try:
        lo, hi = (float(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like START:END, got {text!r}") from None
    return lo, hi


def build_parser():
    parser = argparse.ArgumentParser(
        prog="adobs",
        description="Adaptive observer simulation (GPEBO + DREM + heterogeneous mappings).",
        epilog="Values from --set override the --config file, which overrides the defaults.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one configuration key (repeatable, wins over --config)",
        )

    run = sub.add_parser("run", help="simulate a scenario and write the CSV log")
    common(run)
    run.add_argument("--out", required=True, help="CSV output path")

    verify = sub.add_parser("verify", help="run the oracle checks")
    common(verify)
    verify.add_argument("--full", action="store_true", help="simulate the whole horizon")

    exc = sub.add_parser("excitation", help="Gram of the regressor over a window")
    common(exc)
    exc.add_argument("--window", type=_parse_window, default=(0.0, 3.0), help="START:END (default 0:3)")

    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def _load(args):
    text = ""
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    return parse_config(text, args.overrides)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        cfg = _load(args)
    except ConfigParseError as exc:
        print(f"adobs: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigurationError as exc:
        print(f"adobs: invalid configuration ({exc.key}): {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"adobs: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if args.command == "run":
            sim = run_scenario(cfg)
            write_csv(sim, args.out)
            print(
                f"wrote {len(sim)} rows to {args.out}; t={sim.t[-1]:g} "
                f"|x_hat - x|={sim.x_err_norm[-1]:.3e} max Delta={np.max(sim.delta):.3e}"
            )
            return EXIT_OK
        if args.command == "verify":
            return cmd_verify(cfg=cfg, full=args.full)
        lo, hi = args.window
        gram, alpha = excitation_gram(cfg, lo, hi)
        lam_max = sym_eigen_extremes(gram)[1]
        print(f"window [{lo:g}, {hi:g}]: lambda_min = {alpha:.6e}, lambda_max = {lam_max:.6e}")
        verdict = "finitely exciting" if alpha > cfg.alpha_threshold else "not finitely exciting"
        print(f"{verdict} (threshold {cfg.alpha_threshold:g})")
        return EXIT_OK
    except ContractError as exc:
        # e.g. an excitation window outside the horizon
        print(f"adobs: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AdobsError, OSError) as exc:
        print(f"adobs: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
