"""Experiment harness: single transports, convergence sweeps, series checks
and symmetric-space exactness certification, with deterministic seeding and
CSV output.

Subcommands: transport | convergence | bch-check | exactness.
Exit codes: 0 ok, 1 config error, 2 numerical error, 3 insufficient data,
4 exactness failure.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from .analysis import (
    alt_error_predicted,
    bch_numeric,
    bch_series,
    convergence_order,
    default_noise_floor,
    generic_directions,
    pole_error_measured,
    pole_error_predicted,
)
from .chart import ChartSpace, ODESolverConfig
from .core import (
    ConfigError,
    ConnectionSpace,
    GeometryError,
    InsufficientData,
    Point,
    TangentVector,
    ToleranceConfig,
)
from .ladders import LADDER_KINDS, ladder_step, transport_along_geodesic
from .manifolds import make_space, registry_names

__all__ = ["ExperimentConfig", "main", "cmd_transport", "cmd_convergence",
           "cmd_bch_check", "cmd_exactness", "sample_trial", "exactness_sweep"]

SYMMETRIC_FLEET = ("sphere-2", "hyperbolic-2", "spd-3", "so3")
POLE_SCHEMES = ("pole_v1", "pole_v2", "pole_alt", "pole_avg")

_FIXED_STEP = 1.0 / 256.0


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run; the seed fully determines all random draws."""

    command: str = "transport"
    manifold: str | None = None
    scheme: str | None = None  # None = command default (pole_v2 / all variants)
    h_min: float = 0.02
    h_max: float = 0.2
    num_scales: int = 7
    n_rungs: int = 1
    seed: int = 0
    trials: int = 100
    tol_exactness: float | None = None
    output: str | None = None
    fixed_step: bool = False
    noise_floor: float | None = None
    dist_cap: float | None = None
    u_cap: float | None = None
    # explicit trial overrides (comma-separated coordinates), config-file only
    p: str | None = None
    q: str | None = None
    u: str | None = None
    # ToleranceConfig overrides
    membership_tol: float | None = None
    log_tol: float | None = None
    exactness_tol: float | None = None
    ode_rel_tol: float | None = None
    ode_abs_tol: float | None = None
    max_shooting_iters: int | None = None

    def config_hash(self) -> str:
        # the output path does not influence the numbers, so two runs of the
        # same experiment into different files hash identically
        text = "\n".join(
            f"{f.name}={getattr(self, f.name)!r}" for f in fields(self)
            if f.name != "output"
        )
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def tolerances(self) -> ToleranceConfig:
        base = ToleranceConfig()
        overrides = {}
        for name in ("membership_tol", "log_tol", "exactness_tol",
                     "ode_rel_tol", "ode_abs_tol", "max_shooting_iters"):
            value = getattr(self, name)
            if value is not None:
                overrides[name] = value
        if self.tol_exactness is not None:
            overrides["exactness_tol"] = self.tol_exactness
        return replace(base, **overrides) if overrides else base

    def build_space(self) -> ConnectionSpace:
        if self.manifold is None:
            raise ConfigError("a manifold name is required (--manifold)")
        solver = None
        if self.fixed_step:
            tol = self.tolerances()
            solver = ODESolverConfig(method="rk4", initial_step=_FIXED_STEP,
                                     rel_tol=tol.ode_rel_tol,
                                     abs_tol=tol.ode_abs_tol)
        try:
            return make_space(self.manifold, self.tolerances(), solver)
        except ValueError as err:
            raise ConfigError(str(err)) from err

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


# ---------------------------------------------------------------------------
# config file / flag merging
# ---------------------------------------------------------------------------

_BOOL_WORDS = {"true": True, "1": True, "yes": True,
               "false": False, "0": False, "no": False}


def _parse_value(name: str, raw: str):
    target = ExperimentConfig.__dataclass_fields__[name].type
    raw = raw.strip()
    if name in ("p", "q", "u", "manifold", "scheme", "output", "command"):
        return raw
    if name == "fixed_step":
        try:
            return _BOOL_WORDS[raw.lower()]
        except KeyError:
            raise ConfigError(f"bad boolean for {name}: {raw!r}")
    if name in ("num_scales", "n_rungs", "seed", "trials", "max_shooting_iters"):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"bad integer for {name}: {raw!r}")
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"bad number for {name}: {raw!r} (type {target})")


def load_config_file(path: str) -> dict:
    """Parse a key=value config file; '#' starts a comment."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}")
    known = set(ExperimentConfig.__dataclass_fields__)
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, raw = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    return values


def _make_config(args: argparse.Namespace) -> ExperimentConfig:
    values = {"command": args.command}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    for name in ExperimentConfig.__dataclass_fields__:
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            values[name] = flag_value
    cfg = ExperimentConfig(**values)
    if cfg.scheme is not None and cfg.scheme not in LADDER_KINDS:
        raise ConfigError(
            f"unknown scheme {cfg.scheme!r}; choose from {LADDER_KINDS}")
    if cfg.h_min >= cfg.h_max:
        raise ConfigError("h_min must be smaller than h_max")
    if cfg.n_rungs < 1:
        raise ConfigError("n_rungs must be at least 1")
    if cfg.trials < 1:
        raise ConfigError("trials must be at least 1")
    return cfg


# ---------------------------------------------------------------------------
# CSV helpers
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


class _CsvSink:
    def __init__(self, path: str | None):
        self.path = path
        self.lines: list[str] = []

    def row(self, *cells):
        self.lines.append(",".join(_fmt(c) for c in cells))

    def comment(self, text: str):
        self.lines.append(f"# {text}")

    def flush(self):
        text = "\n".join(self.lines) + "\n"
        if self.path is None:
            sys.stdout.write(text)
        else:
            with open(self.path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)


# ---------------------------------------------------------------------------
# trial sampling
# ---------------------------------------------------------------------------

def sample_trial(space: ConnectionSpace, rng: np.random.Generator,
                 dist_cap: float | None = None, u_cap: float | None = None):
    """One seeded (p, q, u) triple with caps keeping the ladder constructions
    inside the validity region (dist <= 0.9 inj, |u| <= 0.45 inj by default).
    """
    inj = space.injectivity_radius
    finite = math.isfinite(inj)  # False for inf and for unknown (NaN)
    dcap = dist_cap if dist_cap is not None else (
        min(0.9 * inj, 2.0) if finite else 2.0)
    ucap = u_cap if u_cap is not None else (
        min(0.45 * inj, 1.0) if finite else 1.0)
    p = space.random_point(rng)
    d = rng.uniform(0.1, 1.0) * dcap
    q = space.exp(p, d * space.random_direction(rng, p))
    r = rng.uniform(0.1, 1.0) * ucap
    u = r * space.random_direction(rng, p)
    return p, q, u


def _trial_within_conditions(space, p, q, u) -> bool:
    """Exactness requires dist(p, q) < inj and |u| < inj (metric spaces)."""
    inj = space.injectivity_radius
    if not math.isfinite(inj):
        return True
    return space.dist(p, q) < inj and space.norm(u) < inj


def _explicit_trial(space, cfg: ExperimentConfig):
    try:
        p = space.point([float(t) for t in cfg.p.split(",")])
        q = space.point([float(t) for t in cfg.q.split(",")])
    except ValueError as err:
        raise ConfigError(f"bad p/q override: {err}")
    if cfg.u is not None:
        u = space.tangent(p, [float(t) for t in cfg.u.split(",")])
    else:
        u = 0.5 * space.random_direction(cfg.rng(), p)
    return p, q, u


def _base_point(space, rng) -> Point:
    # chart spaces carry a canonical interior anchor for sweeps; closed-form
    # spaces use a seeded random point
    if isinstance(space, ChartSpace):
        return space.anchor_point()
    return space.random_point(rng)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_transport(cfg: ExperimentConfig) -> int:
    """One ladder transport; CSV row with the result and the oracle error."""
    space = cfg.build_space()
    rng = cfg.rng()
    scheme = cfg.scheme or "pole_v2"
    if cfg.p is not None and cfg.q is not None:
        p, q, u = _explicit_trial(space, cfg)
    else:
        p, q, u = sample_trial(space, rng, cfg.dist_cap, cfg.u_cap)
    result = transport_along_geodesic(space, p, q, u, cfg.n_rungs, scheme)
    oracle = space.transport(u, q)
    err = space.norm(result.vector - oracle)
    sink = _CsvSink(cfg.output)
    sink.row("manifold", "scheme", "n_rungs", "u_norm", "dist_pq",
             "result", "oracle_error", "config_hash")
    sink.row(cfg.manifold, scheme, cfg.n_rungs, space.norm(u),
             space.dist(p, q),
             ";".join(_fmt(c) for c in result.vector.components),
             err, cfg.config_hash())
    sink.flush()
    return 0


def _predicted_error_norm(space, scheme, m, u, v) -> float:
    if scheme in ("pole_v1", "pole_v2"):
        return pole_error_predicted(space, m, u, v).component_norm
    if scheme == "pole_alt":
        return alt_error_predicted(space, m, u, v).component_norm
    if scheme == "pole_avg":
        avg = 0.5 * (pole_error_predicted(space, m, u, v)
                     + alt_error_predicted(space, m, u, v))
        return avg.component_norm
    return math.nan


def cmd_convergence(cfg: ExperimentConfig) -> int:
    """One-step error sweep under joint scaling, with a log-log slope fit."""
    if cfg.num_scales < 5:
        raise ConfigError("convergence runs need at least 5 scales")
    space = cfg.build_space()
    scheme = cfg.scheme or "pole_v2"
    rng = cfg.rng()
    m = _base_point(space, rng)
    u_dir, v_dir = generic_directions(space, m, rng)
    scales = np.geomspace(cfg.h_max, cfg.h_min, cfg.num_scales)
    chash = cfg.config_hash()
    sink = _CsvSink(cfg.output)
    sink.row("manifold", "scheme", "h", "n_rungs", "error",
             "predicted_error", "slope_running", "config_hash")
    errors = []
    for i, h in enumerate(scales):
        u = float(h) * u_dir
        v = float(h) * v_dir
        err = pole_error_measured(space, m, u, v, scheme,
                                  n_rungs=cfg.n_rungs).component_norm
        errors.append(err)
        predicted = (_predicted_error_norm(space, scheme, m, u, v)
                     if cfg.n_rungs == 1 and space.has_curvature else math.nan)
        if i >= 2 and min(errors) > 0.0:
            running = float(np.polyfit(np.log(scales[: i + 1]),
                                       np.log(errors), 1)[0])
        else:
            running = math.nan
        sink.row(cfg.manifold, scheme, float(h), cfg.n_rungs, err,
                 predicted, running, chash)
    errors = np.asarray(errors)
    scale_hint = 1.0 + float(np.max(np.abs(m.coords)))
    floor = cfg.noise_floor if cfg.noise_floor is not None \
        else default_noise_floor(scale_hint)
    if np.all(errors <= floor):
        sink.comment("exact within tolerance (all errors at the noise floor)")
        sink.flush()
        return 0
    report = convergence_order(scales, errors, noise_floor=floor)
    sink.comment(f"fitted_slope={report.fitted_slope:.6f} "
                 f"r_squared={report.r_squared:.8f} n_used={report.n_used}")
    sink.flush()
    return 0


def cmd_bch_check(cfg: ExperimentConfig) -> int:
    """Residuals of the double-exponential series at orders 1, 3 and 4."""
    if cfg.num_scales < 5:
        raise ConfigError("bch-check runs need at least 5 scales")
    space = cfg.build_space()
    if not space.has_curvature:
        raise ConfigError(f"{cfg.manifold} has no curvature capability")
    rng = cfg.rng()
    m = _base_point(space, rng)
    u_dir, v_dir = generic_directions(space, m, rng)
    scales = np.geomspace(cfg.h_max, cfg.h_min, cfg.num_scales)
    chash = cfg.config_hash()
    sink = _CsvSink(cfg.output)
    sink.row("manifold", "order", "h", "residual", "config_hash")
    scale_hint = 1.0 + float(np.max(np.abs(m.coords)))
    floor = cfg.noise_floor if cfg.noise_floor is not None \
        else default_noise_floor(scale_hint)
    ok = True
    summaries = []
    for order in (1, 3, 4):
        residuals = []
        for h in scales:
            u = float(h) * u_dir
            v = float(h) * v_dir
            res = (bch_numeric(space, m, v, u)
                   - bch_series(space, m, v, u, order)).component_norm
            residuals.append(res)
            sink.row(cfg.manifold, order, float(h), res, chash)
        residuals = np.asarray(residuals)
        if np.all(residuals <= floor):
            summaries.append(f"order_{order}=exact_within_tolerance")
            continue
        report = convergence_order(scales, residuals, noise_floor=floor)
        summaries.append(f"order_{order}_slope={report.fitted_slope:.4f}")
        if report.fitted_slope < order + 0.8:
            ok = False
    for line in summaries:
        sink.comment(line)
    sink.flush()
    if not ok:
        print("bch-check: a residual slope fell below its order threshold",
              file=sys.stderr)
        return 3
    return 0


def exactness_sweep(space: ConnectionSpace, schemes, trials: int,
                    rng: np.random.Generator,
                    dist_cap: float | None = None,
                    u_cap: float | None = None):
    """Max relative transport error per scheme over seeded trials.

    Trials violating the exactness conditions (distances under the
    injectivity radius) are excluded and counted, not failed.
    """
    worst = {kind: 0.0 for kind in schemes}
    excluded = 0
    for _ in range(trials):
        p, q, u = sample_trial(space, rng, dist_cap, u_cap)
        if not _trial_within_conditions(space, p, q, u):
            excluded += 1
            continue
        oracle = space.transport(u, q)
        u_norm = space.norm(u)
        for kind in schemes:
            err = space.norm(ladder_step(space, p, q, u, kind) - oracle)
            worst[kind] = max(worst[kind], err / u_norm)
    return worst, excluded


def cmd_exactness(cfg: ExperimentConfig) -> int:
    """Certify pole-ladder exactness on the locally symmetric fleet."""
    manifolds = (cfg.manifold,) if cfg.manifold else SYMMETRIC_FLEET
    if cfg.scheme is not None and cfg.scheme not in POLE_SCHEMES:
        raise ConfigError(
            f"exactness applies to pole variants only, not {cfg.scheme!r}")
    schemes = (cfg.scheme,) if cfg.scheme else POLE_SCHEMES
    chash = cfg.config_hash()
    sink = _CsvSink(cfg.output)
    sink.row("manifold", "scheme", "trials", "excluded", "max_rel_error",
             "config_hash")
    failures = []
    for name in manifolds:
        space = make_space(name, cfg.tolerances())
        if not space.locally_symmetric:
            raise ConfigError(f"{name} is not flagged locally symmetric")
        tol = space.tolerances.exactness_tol
        rng = cfg.rng()
        worst, excluded = exactness_sweep(space, schemes, cfg.trials, rng,
                                          cfg.dist_cap, cfg.u_cap)
        if excluded:
            sink.comment(f"{name}: {excluded} trials excluded "
                         "(condition violated)")
        for kind in schemes:
            sink.row(name, kind, cfg.trials - excluded, excluded,
                     worst[kind], chash)
            if worst[kind] > tol:
                failures.append(f"{name}/{kind}: {worst[kind]:.3e} > {tol:.1e}")
    sink.flush()
    if failures:
        for failure in failures:
            print(f"exactness failure: {failure}", file=sys.stderr)
        return 4
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="geoladders",
        description="Parallel-transport experiments with geodesic ladders.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "transport": "one ladder transport against the oracle",
        "convergence": "one-step error sweep with a log-log slope fit",
        "bch-check": "double-exponential series residuals at orders 1, 3, 4",
        "exactness": "symmetric-space exactness certification",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--manifold", help=f"one of {registry_names()}")
        p.add_argument("--scheme", choices=LADDER_KINDS)
        p.add_argument("--h-min", dest="h_min", type=float)
        p.add_argument("--h-max", dest="h_max", type=float)
        p.add_argument("--num-scales", dest="num_scales", type=int)
        p.add_argument("--n-rungs", dest="n_rungs", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--tol-exactness", dest="tol_exactness", type=float)
        p.add_argument("--output", help="CSV output path (default: stdout)")
        p.add_argument("--fixed-step", dest="fixed_step", action="store_const",
                       const=True, help="fixed-step RK4 integration for "
                       "bit-reproducible sweeps")
        p.add_argument("--config", help="key=value config file; flags override")
    return parser


_COMMANDS = {
    "transport": cmd_transport,
    "convergence": cmd_convergence,
    "bch-check": cmd_bch_check,
    "exactness": cmd_exactness,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _make_config(args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except InsufficientData as err:
        print(f"insufficient data: {err}", file=sys.stderr)
        return 3
    except GeometryError as err:
        print(f"numerical error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
