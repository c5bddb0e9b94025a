"""Experiment configs, dispatch and JSON reports.

Config files hold one ``key = value`` per line; ``#`` starts a comment.
Keys::

    params.a  params.b  params.c  params.p  params.y1_0  params.y2_0
    experiment  horizon  replicates  master_seed  epsilon
    t_max  t_points  n_grid  workers  output_path  samples_path

``params.p`` and ``epsilon`` accept decimals or fractions (``0.25``, ``1/4``);
``n_grid`` is a comma-separated list of integers.
"""

import hashlib
import json
import time
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Optional

import numpy as np

from . import __version__
from .core import (
    UrnParams,
    derived_constants,
    simulate,
    validate_params,
)
from .errors import (
    CapExceeded,
    CltConditionViolated,
    InsufficientExceedances,
    OutOfRange,
    ParseError,
    TheoremPreconditionViolated,
    ValidationError,
)
from .harness import (
    Verdict,
    cf_gap,
    clt_samples,
    clt_test,
    conditional_variance_track,
    coupling_l1,
    default_workers,
    growth_rate,
    ldp_decay,
    lil_envelope,
)
from .oracle import conditional_checks, exact_distribution, verify_drift_bound
from .recursions import (
    CfRecursionSpec,
    cf_recursion,
    log_checkpoints,
    second_moment_recursion,
    write_triples,
)
from .rng import SEED_RULE, replicate_seed

EXPERIMENTS = ("constants", "simulate", "clt", "ldp", "lil", "cf", "couple", "oracle", "recursion")

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3

CF_GAP_TOL = 0.05
RECURSION_TOL = 1e-3

_PARAM_KEYS = ("a", "b", "c", "p", "y1_0", "y2_0")
_INT_KEYS = {"horizon", "replicates", "master_seed", "t_points", "workers"}
_FRACTION_KEYS = {"epsilon", "t_max"}
KEYS = (
    tuple(f"params.{k}" for k in _PARAM_KEYS)
    + ("experiment", "horizon", "replicates", "master_seed", "epsilon", "t_max", "t_points",
       "n_grid", "workers", "output_path", "samples_path")
)
# execution details that may differ between otherwise identical runs
_EXECUTION_KEYS = ("workers", "output_path", "samples_path")

_REQUIRED = {
    "simulate": ("horizon",),
    "clt": ("horizon",),
    "cf": ("horizon",),
    "lil": ("horizon",),
    "oracle": ("horizon",),
    "recursion": ("horizon",),
    "ldp": ("epsilon", "n_grid"),
    "couple": ("n_grid",),
}


@dataclass(frozen=True)
class ExperimentConfig:
    params: UrnParams
    experiment: str = "constants"
    horizon: int = 0
    replicates: int = 10_000
    master_seed: int = 0
    epsilon: Optional[Fraction] = None
    t_max: Fraction = Fraction(3)
    t_points: int = 61
    n_grid: tuple = ()
    workers: int = field(default_factory=default_workers)
    output_path: Optional[str] = None
    samples_path: Optional[str] = None

    def echo(self, execution=True):
        """Flat key -> string mapping that :func:`parse_config` reads back."""
        out = {f"params.{k}": str(getattr(self.params, k)) for k in _PARAM_KEYS}
        for f in fields(self):
            if f.name == "params":
                continue
            if not execution and f.name in _EXECUTION_KEYS:
                continue
            v = getattr(self, f.name)
            if v is None:
                continue
            out[f.name] = ",".join(map(str, v)) if f.name == "n_grid" else str(v)
        return out

    def dumps(self):
        return "".join(f"{k} = {v}\n" for k, v in self.echo().items())


def parse_number(text, key, line=None, integer=False):
    try:
        if integer:
            value = int(text.strip())
        else:
            value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        kind = "integer" if integer else "number"
        raise ParseError(f"expected a {kind}, got {text!r}", line=line, field=key) from None
    return value


def read_config_text(text):
    """Parse ``key = value`` lines into a raw mapping of strings."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError("expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in KEYS:
            raise ParseError(f"unknown key {key!r}", line=lineno, field=key)
        raw[key] = (value, lineno)
    return raw


def build_config(raw):
    """Turn ``{key: (string, line)}`` into a validated :class:`ExperimentConfig`."""
    for key in raw:
        if key not in KEYS:
            raise ParseError(f"unknown key {key!r}", field=key)
    pvals = {}
    for k in _PARAM_KEYS:
        full = f"params.{k}"
        if full not in raw:
            if k in ("y1_0", "y2_0"):
                continue
            raise ParseError("missing required key", field=full)
        text, line = raw[full]
        pvals[k] = parse_number(text, full, line, integer=(k != "p"))
    params = UrnParams(**pvals)
    try:
        validate_params(params)
    except OutOfRange as exc:
        raise ValidationError(str(exc)) from exc

    kw = {}
    for key, (text, line) in raw.items():
        if key.startswith("params."):
            continue
        if key in _INT_KEYS:
            kw[key] = parse_number(text, key, line, integer=True)
        elif key in _FRACTION_KEYS:
            kw[key] = parse_number(text, key, line)
        elif key == "n_grid":
            items = [s for s in text.split(",") if s.strip()]
            kw[key] = tuple(parse_number(s.strip(), key, line, integer=True) for s in items)
        else:
            kw[key] = text
    cfg = ExperimentConfig(params, **kw)
    _validate(cfg, raw)
    return cfg


def _validate(cfg, raw):
    if cfg.experiment not in EXPERIMENTS:
        raise ValidationError(f"experiment must be one of {EXPERIMENTS}, got {cfg.experiment!r}")
    for key in _REQUIRED.get(cfg.experiment, ()):
        if key not in raw:
            raise ValidationError(f"experiment {cfg.experiment!r} requires {key!r}")
    if cfg.replicates < 1:
        raise ValidationError("replicates must be >= 1")
    if cfg.horizon < 0:
        raise ValidationError("horizon must be >= 0")
    if cfg.workers < 1:
        raise ValidationError("workers must be >= 1")
    if not 0 <= cfg.master_seed < 2**64:
        raise ValidationError("master_seed must be a 64-bit unsigned integer")
    if cfg.epsilon is not None and cfg.epsilon <= 0:
        raise ValidationError("epsilon must be positive")


def parse_config(path=None, overrides=None):
    """Read a config file (optional) and apply flag overrides on top."""
    raw = {}
    if path is not None:
        with open(path) as fh:
            raw = read_config_text(fh.read())
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = (str(value), None)
    return build_config(raw)


def _f(x):
    if isinstance(x, (np.floating, Fraction)):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    return _f(obj)


def _t_grid(cfg):
    t_max = float(cfg.t_max)
    return np.linspace(-t_max, t_max, cfg.t_points)


def _run_constants(cfg, constants):
    return [], {}


def _run_simulate(cfg, constants):
    seed = replicate_seed(cfg.master_seed, 0)
    steps = [0] + [int(n) for n in log_checkpoints(cfg.horizon)] if cfg.horizon else [0]
    steps = sorted(set(steps))
    traj = simulate(cfg.params, seed, cfg.horizon, steps)
    last = traj.checkpoints[-1]
    p = cfg.params
    sandwich = sum(
        1
        for cp in traj.checkpoints
        if cp.n >= 1 and not (cp.n * p.min_step <= cp.t <= p.t0 + cp.n * p.max_step)
    )
    verdicts = [Verdict.upper("t_sandwich_violations", sandwich, 0)]
    if cfg.horizon >= 1000:
        verdicts.append(growth_rate(last.t, last.n, p, constants))
    track = conditional_variance_track(p, constants, traj)
    summary = {
        "checkpoints": [[cp.n, cp.y1, cp.t] for cp in traj.checkpoints],
        "terminal_z": last.z,
        "terminal_conditional_variance": track.exact[-1],
    }
    if cfg.samples_path:
        write_triples(cfg.samples_path, [(cp.n, cp.t, cp.z) for cp in traj.checkpoints], ("n", "t", "z"))
    return verdicts, summary


def _samples(cfg):
    s = clt_samples(cfg.params, cfg.horizon, cfg.replicates, cfg.master_seed, workers=cfg.workers)
    if cfg.samples_path:
        _write_samples(cfg, s.values)
    return s


def _write_samples(cfg, values):
    echo = cfg.echo(execution=False)
    digest = "".join(f"{k} = {v}\n" for k, v in echo.items()).encode()
    with open(cfg.samples_path, "w") as fh:
        fh.write(f"# config sha256 {hashlib.sha256(digest).hexdigest()}\n")
        for v in values:
            fh.write(f"{float(v)!r}\n")


def _run_clt(cfg, constants):
    if not constants.clt_ok:
        raise CltConditionViolated("3bp + cp > ap + c fails; no Gaussian limit")
    samples = _samples(cfg)
    res = clt_test(samples, constants)
    summary = {
        "replicates": samples.replicates,
        "empirical_mean": res.mean.observed,
        "empirical_variance": res.variance.observed,
        "ks_distance": res.ks.observed,
    }
    return res.verdicts, summary


def _run_cf(cfg, constants):
    if not constants.clt_ok:
        raise CltConditionViolated("2*Gamma - 1 > 0 fails")
    samples = _samples(cfg)
    gap = cf_gap(samples, constants, _t_grid(cfg))
    verdicts = [Verdict.upper("cf_gap_gaussian", gap.sup_gap_gaussian, CF_GAP_TOL)]
    summary = {"sup_gap_beta": gap.sup_gap_beta, "sup_gap_gaussian": gap.sup_gap_gaussian}
    return verdicts, summary


def _run_ldp(cfg, constants):
    res = ldp_decay(
        cfg.params, float(cfg.epsilon), cfg.n_grid, cfg.replicates, cfg.master_seed, cfg.workers
    )
    summary = {
        "n_grid": res.n_grid,
        "exceedances": res.counts,
        "probabilities": res.probabilities,
        "slope": res.slope,
        "intercept": res.intercept,
    }
    return res.verdicts, summary


def _run_lil(cfg, constants):
    grid = list(cfg.n_grid) or [int(n) for n in log_checkpoints(cfg.horizon, per_decade=8) if n >= 8]
    v = lil_envelope(cfg.params, constants, cfg.replicates, cfg.horizon, grid, cfg.master_seed, cfg.workers)
    return [v], {"max_scaled_excursion": v.observed, "checkpoints": grid}


def _run_couple(cfg, constants):
    res = coupling_l1(cfg.params, constants, cfg.replicates, cfg.n_grid, cfg.master_seed, cfg.workers)
    summary = {
        "checkpoints": res.checkpoints,
        "mean_abs_delta": res.mean_abs_delta,
        "se_abs_delta": res.se_abs_delta,
        "mean_abs_d": res.mean_abs_d,
        "se_abs_d": res.se_abs_d,
    }
    return res.verdicts, summary


def _run_oracle(cfg, constants):
    dist = exact_distribution(cfg.params, cfg.horizon)
    p = cfg.params
    total = dist.total()
    mean_z = sum(m * s.z(p) for s, m in dist.mass.items())
    var_z = sum(m * s.z(p) ** 2 for s, m in dist.mass.items()) - mean_z**2
    mean_t = sum(m * s.t(p) for s, m in dist.mass.items())
    residual_nonzero = sum(1 for s in dist.mass if conditional_checks(p, s).drift_residual != 0)
    bound = verify_drift_bound(p, cfg.horizon) if cfg.horizon >= 1 else None
    verdicts = [
        Verdict.two_sided("mass_conservation", float(total - 1), 0.0, 0.0),
        Verdict.upper("martingale_residual_nonzero_states", residual_nonzero, 0),
    ]
    summary = {
        "states": len(dist.mass),
        "mean_z": str(mean_z),
        "var_z": str(var_z),
        "mean_t": str(mean_t),
    }
    if bound is not None:
        verdicts.append(Verdict.upper("drift_bound_k", float(bound.k_empirical), float(bound.k_analytic)))
        verdicts.append(Verdict.upper("drift_closed_form_mismatches", bound.closed_form_mismatches, 0))
    if cfg.samples_path:
        dist.to_csv(cfg.samples_path)
    return verdicts, summary


def _run_recursion(cfg, constants):
    if not constants.clt_ok:
        raise CltConditionViolated("recursion limit needs 2*Gamma - 1 > 0")
    gamma, s2 = float(constants.gamma), float(constants.sigma_sq)
    rec = second_moment_recursion(gamma - 0.5, s2, 0.0, max(cfg.horizon, 1))
    cf = cf_recursion(CfRecursionSpec(gamma, s2, tuple(_t_grid(cfg)), max(cfg.horizon, 1)))
    if cfg.samples_path:
        rec.to_csv(cfg.samples_path)
    verdicts = [
        Verdict.two_sided(
            "second_moment_limit", rec.final, float(constants.limit_variance), RECURSION_TOL
        ),
    ]
    summary = {
        "second_moment_final": rec.final,
        "trajectory": rec.rows(),
        "cf_sup_gap": cf.sup_gap,
        "cf_nonpositive_factor": cf.nonpositive_factor,
    }
    return verdicts, summary


_DISPATCH = {
    "constants": _run_constants,
    "simulate": _run_simulate,
    "clt": _run_clt,
    "ldp": _run_ldp,
    "lil": _run_lil,
    "cf": _run_cf,
    "couple": _run_couple,
    "oracle": _run_oracle,
    "recursion": _run_recursion,
}


def run(cfg):
    """Execute one experiment; return ``(report, exit_code)``.

    Typed precondition failures are reported with exit code 3 rather than
    raised, so callers always get a report.
    """
    started = time.perf_counter()
    report = {
        "tool": "mixedurn",
        "version": __version__,
        "config": cfg.echo(execution=False),
        "seed_audit": {"master_seed": cfg.master_seed, "derivation_rule": SEED_RULE},
    }
    try:
        constants = derived_constants(cfg.params, exact=True)
        report["derived_constants"] = constants.as_dict()
        verdicts, summary = _DISPATCH[cfg.experiment](cfg, constants)
    except (TheoremPreconditionViolated, CapExceeded, InsufficientExceedances) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = EXIT_PRECONDITION
        verdicts, summary = [], {}
    else:
        code = EXIT_VERDICT if any(v.failed for v in verdicts) else EXIT_OK
    report["verdicts"] = [v.as_dict() for v in verdicts]
    report["summary"] = summary
    report["exit_code"] = code
    report["execution"] = {
        "workers": cfg.workers,
        "output_path": cfg.output_path,
        "samples_path": cfg.samples_path,
        "wall_clock_seconds": time.perf_counter() - started,
    }
    report = _clean(report)
    if cfg.output_path:
        with open(cfg.output_path, "w") as fh:
            fh.write(dumps_report(report))
    return report, code


def dumps_report(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def reproducible_part(report):
    """The report minus execution details (worker count, paths, wall clock)."""
    return {k: v for k, v in report.items() if k != "execution"}


def config_from_report(report):
    """Rebuild the config recorded in a report."""
    raw = {k: (v, None) for k, v in report["config"].items()}
    for key in _EXECUTION_KEYS:
        value = report.get("execution", {}).get(key)
        if value is not None:
            raw[key] = (str(value), None)
    return build_config(raw)
