"""Command-line front end.

    cavityqis run      --config run.cfg --out results/
    cavityqis validate --config ladder.cfg
    cavityqis sweep    --config sweep.cfg --seed 7 --format csv
    cavityqis scenario --config cheat.cfg

Configs are flat ``key = value`` files; ``#`` starts a comment.  Exit codes:
0 ok, 1 configuration error, 2 a validation check failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

from . import analysis
from .model import DESIGNEES, FockCutoff, InteractionSchedule, PhysicalParams, RegimeWarning
from .protocols import (
    PROBE_SECRET,
    SUCCESS_FIDELITY,
    CorrectionError,
    SecretState,
    WCoefficients,
    derive_correction_table,
    run_ghz_exact,
    run_ghz_sampled,
    run_w_exact,
    run_w_sampled,
    scenario_intercept_resend,
    scenario_no_cooperation,
    total_success,
)
from .qcore import ConvergenceError, RandomSource

LOAD_TOL = 1e-9
SIG_DIGITS = 12

SECRET_PRESETS = {
    "probe": (PROBE_SECRET.alpha, PROBE_SECRET.beta),
    "e": (1, 0),
    "g": (0, 1),
    "plus": (1 / math.sqrt(2), 1 / math.sqrt(2)),
    "minus": (1 / math.sqrt(2), -1 / math.sqrt(2)),
    "plus_i": (1 / math.sqrt(2), 1j / math.sqrt(2)),
}

# key -> parser; anything else in a config file is rejected
_FLOAT_KEYS = ("alpha_re", "alpha_im", "beta_re", "beta_im", "a", "b", "c", "a_im", "b_im", "c_im",
               "fab_alpha_re", "fab_alpha_im", "fab_beta_re", "fab_beta_im",
               "g", "delta", "omega_rabi", "lambda_t", "omega_t", "tol", "check_fraction")
_INT_KEYS = ("trials", "seed", "n_max")
_STR_KEYS = ("protocol", "designee", "mode", "secret", "fabricated", "scenario",
             "ladder", "fock_states", "c_values", "stagger_fractions", "compensated")
KNOWN_KEYS = frozenset(_FLOAT_KEYS + _INT_KEYS + _STR_KEYS)


class ConfigError(ValueError):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)
    source: Optional[str] = None
    renormalized: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def has(self, *keys) -> bool:
        return any(k in self.values for k in keys)

    def choice(self, key, options, default):
        v = str(self.get(key, default)).lower()
        if v not in options:
            raise ConfigError(key, f"expected one of {', '.join(options)}, got {v!r}")
        return v

    def number_list(self, key, default):
        raw = self.get(key)
        if raw is None:
            return list(default)
        out = []
        for tok in str(raw).replace(";", ",").split(","):
            tok = tok.strip()
            if not tok:
                continue
            try:
                out.append(1 / math.sqrt(3) if tok in ("max", "1/sqrt3") else float(tok))
            except ValueError:
                raise ConfigError(key, f"not a number: {tok!r}") from None
        return out


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line.split()[0], f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(key, f"line {lineno}: unknown key")
        values[key] = _coerce(key, val)
    return RunConfig(values, source)


def _coerce(key, val):
    try:
        if key in _INT_KEYS:
            n = int(val)
            if key == "seed" and not 0 <= n < 2 ** 64:
                raise ValueError
            return n
        if key in _FLOAT_KEYS:
            x = 1 / math.sqrt(3) if key == "c" and val in ("max", "1/sqrt3") else float(val)
            if not math.isfinite(x):
                raise ValueError
            return x
    except ValueError:
        raise ConfigError(key, f"bad value {val!r}") from None
    return val


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config_text(text, path)


# --- config -> domain objects -----------------------------------------------

def _state_from(cfg: RunConfig, prefix: str, preset_key: str, default: str):
    comps = [prefix + k for k in ("alpha_re", "alpha_im", "beta_re", "beta_im")]
    if cfg.has(*comps):
        alpha = complex(cfg.get(comps[0], 0.0), cfg.get(comps[1], 0.0))
        beta = complex(cfg.get(comps[2], 0.0), cfg.get(comps[3], 0.0))
        key = comps[0]
    else:
        name = cfg.choice(preset_key, tuple(SECRET_PRESETS), default)
        alpha, beta = SECRET_PRESETS[name]
        key = preset_key
    n2 = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(n2 - 1.0) > LOAD_TOL:
        raise ConfigError(key, f"|alpha|^2 + |beta|^2 = {n2:.12g}, not 1 within {LOAD_TOL:g}")
    cfg.renormalized[preset_key] = n2 - 1.0
    return SecretState.normalized(alpha, beta)


def secret_from(cfg: RunConfig) -> SecretState:
    return _state_from(cfg, "", "secret", "probe")


def fabricated_from(cfg: RunConfig) -> SecretState:
    return _state_from(cfg, "fab_", "fabricated", "plus")


def w_from(cfg: RunConfig) -> WCoefficients:
    if cfg.has("a", "b", "a_im", "b_im"):
        a = complex(cfg.get("a", 0.0), cfg.get("a_im", 0.0))
        b = complex(cfg.get("b", 0.0), cfg.get("b_im", 0.0))
        c = complex(cfg.get("c", 0.0), cfg.get("c_im", 0.0))
        n2 = abs(a) ** 2 + abs(b) ** 2 + abs(c) ** 2
        if abs(n2 - 1.0) > LOAD_TOL:
            raise ConfigError("a", f"|a|^2 + |b|^2 + |c|^2 = {n2:.12g}, not 1 within {LOAD_TOL:g}")
        cfg.renormalized["w"] = n2 - 1.0
        s = math.sqrt(n2)
        try:
            return WCoefficients(a / s, b / s, c / s)
        except ValueError as exc:
            raise ConfigError("c", str(exc)) from None
    c = cfg.get("c", 1 / math.sqrt(3))
    try:
        return WCoefficients.from_c(c)
    except ValueError as exc:
        raise ConfigError("c", str(exc)) from None


def schedule_from(cfg: RunConfig) -> InteractionSchedule:
    try:
        return InteractionSchedule(cfg.get("lambda_t", math.pi / 4), cfg.get("omega_t", math.pi))
    except ValueError as exc:
        raise ConfigError("lambda_t", str(exc)) from None


def cutoff_from(cfg: RunConfig, default: int) -> FockCutoff:
    try:
        return FockCutoff(cfg.get("n_max", default))
    except ValueError as exc:
        raise ConfigError("n_max", str(exc)) from None


def rng_from(cfg: RunConfig) -> RandomSource:
    seed = cfg.get("seed")
    if seed is None:
        raise ConfigError("seed", "seed required for sampled mode")
    return RandomSource(seed)


def trials_from(cfg: RunConfig, default: int = 10_000) -> int:
    n = cfg.get("trials", default)
    if n < 1:
        raise ConfigError("trials", "must be >= 1")
    return n


# --- serialization ------------------------------------------------------------

def _num(x: float):
    if not math.isfinite(x):
        return str(x)
    return float(f"{x:.{SIG_DIGITS}g}")


def plain(obj):
    """JSON-ready copy: complex -> [re, im], floats at 12 significant digits."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, complex):
        return [_num(obj.real), _num(obj.imag)]
    if isinstance(obj, float):
        return _num(obj)
    if hasattr(obj, "item") and not hasattr(obj, "__len__"):   # numpy scalar
        return plain(obj.item())
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, frozenset, set)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [plain(v) for v in items]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _cell(v):
    v = plain(v)
    if isinstance(v, list):
        return " ".join(str(x) for x in v)
    return "" if v is None else v


def write_outputs(command: str, report: dict, rows: list[dict], out_dir: str, fmt: str, argv) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if fmt in ("json", "both"):
        path = os.path.join(out_dir, f"{command}_report.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(plain(report), fh, sort_keys=True, indent=2)
            fh.write("\n")
        written.append(path)
    if fmt in ("csv", "both"):
        path = os.path.join(out_dir, f"{command}_summary.csv")
        header = list(rows[0]) if rows else ["statistic", "value"]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: _cell(v) for k, v in r.items()})
        written.append(path)
    meta = os.path.join(out_dir, f"{command}_meta.json")
    with open(meta, "w", encoding="utf-8") as fh:
        json.dump({"timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                   "argv": list(argv), "outputs": [os.path.basename(p) for p in written]},
                  fh, sort_keys=True, indent=2)
        fh.write("\n")
    return written


def _stat_rows(stats: dict) -> list[dict]:
    return [{"statistic": k, "value": v} for k, v in stats.items()]


def _z(sampled, exact, trials):
    sigma = analysis.binomial_sigma(exact, trials)
    z = analysis._zscore(sampled, exact, sigma)
    return sigma, z


# --- commands -------------------------------------------------------------------

def cmd_run(cfg: RunConfig) -> tuple[dict, list[dict], list[str]]:
    protocol = cfg.choice("protocol", ("ghz", "w"), "ghz")
    designee = cfg.choice("designee", DESIGNEES, "charlie")
    mode = cfg.choice("mode", ("exact", "sampled"), "exact")
    secret = secret_from(cfg)
    schedule = schedule_from(cfg)
    failures = []

    report = {"command": "run", "protocol": protocol, "designee": designee, "mode": mode,
              "secret": {"alpha": secret.alpha, "beta": secret.beta},
              "schedule": {"lambda_t": schedule.lambda_t, "omega_t": schedule.omega_t}}
    if protocol == "ghz":
        table = derive_correction_table("ghz", designee, schedule=schedule)
        exact = run_ghz_exact(secret, designee, schedule, table)
        expected = 1.0
        coeffs = None
    else:
        coeffs = w_from(cfg)
        cutoff = cutoff_from(cfg, 1)
        table = derive_correction_table("w", designee, coeffs, schedule=schedule, cutoff=cutoff)
        exact, _ = run_w_exact(secret, coeffs, designee, schedule, cutoff, table)
        expected = coeffs.success_probability
        report["w_coefficients"] = {"a": coeffs.a, "b": coeffs.b, "c": coeffs.c}
        report["stranded"] = sorted(table.stranded)

    total = math.fsum(r.probability for r in exact)
    p_ok = total_success(exact)
    report["correction_table"] = table.to_records()
    report["branches"] = [r.to_record() for r in exact]
    report["branch_count"] = len(exact)
    report["total_probability"] = total
    report["success_probability"] = p_ok
    report["expected_success_probability"] = expected
    report["renormalized"] = dict(cfg.renormalized)

    if abs(total - 1.0) > 1e-10:
        failures.append(f"branch probabilities sum to {total:.12g}")
    if abs(p_ok - expected) > 1e-10:
        failures.append(f"success probability {p_ok:.12g} != expected {expected:.12g}")
    low = [r for r in exact if r.correction is not None and r.photons in (None, 0)
           and r.fidelity < SUCCESS_FIDELITY]
    if low:
        failures.append(f"{len(low)} corrected branch(es) below fidelity {SUCCESS_FIDELITY!r}")

    stats = {"protocol": protocol, "designee": designee, "mode": mode, "branches": len(exact),
             "total_probability": total, "success_probability": p_ok,
             "expected_success_probability": expected}

    if mode == "sampled":
        rng = rng_from(cfg)
        trials = trials_from(cfg)
        if protocol == "ghz":
            s = run_ghz_sampled(secret, designee, trials, rng, schedule, table)
        else:
            s = run_w_sampled(secret, coeffs, designee, trials, rng, schedule, cutoff, table)
        sigma, z = _z(s.success_rate, p_ok, trials)
        counts = {}
        for r in s.results:
            key = f"{r.alice}/{r.helper}" + ("" if r.photons is None else f"/{r.photons}")
            counts[key] = counts.get(key, 0) + 1
        report["sampled"] = dict(s.to_record(), seed=cfg.get("seed"), sigma=sigma, z=z,
                                 outcome_counts=counts)
        stats.update(trials=trials, seed=cfg.get("seed"), sampled_success_rate=s.success_rate,
                     sigma=sigma, z=z)
        if abs(z) > 3:
            failures.append(f"sampled success rate {s.success_rate:.6g} is {z:+.2f} sigma from exact")

    report["checks_failed"] = failures
    return report, _stat_rows(stats), failures


def cmd_validate(cfg: RunConfig) -> tuple[dict, list[dict], list[str]]:
    ladder_raw = cfg.get("ladder")
    g = cfg.get("g", 1.0)
    if ladder_raw is None and cfg.has("delta", "omega_rabi"):
        # a single explicit point
        ladder = [(cfg.get("delta", 10.0 * g) / g, cfg.get("omega_rabi", 100.0 * g) / g)] if g > 0 else []
    elif ladder_raw is None:
        ladder = analysis.DEFAULT_LADDER
    else:
        ladder = []
        for tok in str(ladder_raw).split(","):
            tok = tok.strip()
            if not tok:
                continue
            try:
                d, w = (float(x) for x in tok.split(":"))
            except ValueError:
                raise ConfigError("ladder", f"expected delta/g:Omega/g pairs, got {tok!r}") from None
            ladder.append((d, w))
        if not ladder:
            raise ConfigError("ladder", "empty ladder")
    fock = [int(x) for x in cfg.number_list("fock_states", analysis.DEFAULT_FOCK)]
    if not fock or min(fock) < 0:
        raise ConfigError("fock_states", "need nonnegative photon numbers")
    cutoff = cutoff_from(cfg, 7)
    if cutoff.n_max < max(fock) + 2:
        raise ConfigError("n_max", f"cutoff {cutoff.n_max} too small for Fock input n={max(fock)} "
                                   f"(need >= {max(fock) + 2})")
    if not g > 0:
        raise ConfigError("g", "validation needs g > 0")
    try:
        grid = analysis.ladder_params(ladder, g)
    except ValueError as exc:
        raise ConfigError("ladder", str(exc)) from None
    schedule = schedule_from(cfg)
    secret = secret_from(cfg)
    try:
        rep = analysis.validate_effective(grid, schedule, fock, cutoff, analysis.protocol_input(secret),
                                          tol=cfg.get("tol", 1e-6))
    except ConvergenceError as exc:
        return {"command": "validate", "error": str(exc)}, _stat_rows({"error": str(exc)}), [str(exc)]

    rows = []
    for p in rep.points:
        for e in p.entries:
            rows.append({"delta_over_g": p.params.delta / p.params.g,
                         "omega_over_g": p.params.omega_rabi / p.params.g,
                         "fock_n": e.fock_n, "infidelity": e.infidelity, "spread": p.spread,
                         "top_population": e.top_population, "cutoff_breach": e.cutoff_breach,
                         "steps": e.steps})
    warn = list(rep.notes) if rep.cutoff_breach else []
    warn += sorted({w for p in rep.points for w in p.regime_warnings})
    report = {"command": "validate", "cutoff": rep.cutoff, "fock_states": list(rep.fock_states),
              "secret": {"alpha": secret.alpha, "beta": secret.beta},
              "grid": [{"g": p.params.g, "delta": p.params.delta, "omega_rabi": p.params.omega_rabi,
                        "spread": p.spread, "cutoff_breach": p.cutoff_breach,
                        "entries": [{"fock_n": e.fock_n, "fidelity": e.fidelity, "infidelity": e.infidelity,
                                     "top_population": e.top_population, "steps": e.steps,
                                     "lambda_t": e.lambda_t, "omega_t": e.omega_t} for e in p.entries]}
                       for p in rep.points],
              "trend": rep.trend if rep.trend is not None else "insufficient ladder",
              "trend_ok": rep.trend_ok,
              "effective_fock_independent": rep.effective_fock_independent,
              "effective_max_deviation": rep.effective_max_deviation,
              "notes": rep.notes, "warnings": warn, "renormalized": dict(cfg.renormalized)}

    fracs = cfg.number_list("stagger_fractions", ())
    if fracs:
        try:
            params = PhysicalParams(g, cfg.get("delta", 10.0 * g), cfg.get("omega_rabi", 100.0 * g))
            curve = analysis.simultaneity_sensitivity(secret, fracs, params)
        except ValueError as exc:
            raise ConfigError("stagger_fractions", str(exc)) from None
        report["stagger"] = {"baseline": curve.baseline,
                             "points": [{"fraction": s.fraction, "fidelity": s.fidelity,
                                         "delta_vs_baseline": s.delta_vs_baseline} for s in curve.points]}

    failures = []
    if rep.trend_ok is False:
        failures.append("monotone trend assertion failed: " + json.dumps(plain(rep.trend), sort_keys=True))
    if not rep.effective_fock_independent:
        failures.append("effective evolution is not Fock-independent")
    report["checks_failed"] = failures
    return report, rows, failures


def cmd_sweep(cfg: RunConfig) -> tuple[dict, list[dict], list[str]]:
    default = (0.1, 0.2, 0.3, 0.4, 0.5, 1 / math.sqrt(3))
    cs = cfg.number_list("c_values", default)
    if not cs:
        raise ConfigError("c_values", "empty grid")
    for c in cs:
        if not 0.0 <= c <= 1 / math.sqrt(3) + 1e-12:
            raise ConfigError("c_values", f"c = {c} outside [0, 1/sqrt(3)]")
    designee = cfg.choice("designee", DESIGNEES, "charlie")
    mode = cfg.choice("mode", ("exact", "sampled"), "exact")
    secret = secret_from(cfg)
    rng, trials = None, 0
    if mode == "sampled":
        rng = rng_from(cfg)
        trials = trials_from(cfg)
    res = analysis.sweep_success_vs_c(secret, cs, designee, trials, rng)
    rows = [{"c": r.c, "exact": r.exact, "sampled": r.sampled, "sigma": r.sigma} for r in res.rows]
    failures = []
    if not res.exact_matches_formula:
        failures.append("exact success probability departs from 2c^2")
    if not res.sampled_within_3sigma:
        failures.append("sampled success rate outside 3 sigma")
    report = {"command": "sweep", "designee": designee, "mode": mode, "trials": trials,
              "seed": cfg.get("seed"), "secret": {"alpha": secret.alpha, "beta": secret.beta},
              "rows": [dict(row, formula=r.formula, z=r.z) for row, r in zip(rows, res.rows)],
              "renormalized": dict(cfg.renormalized), "checks_failed": failures}
    return report, rows, failures


def cmd_scenario(cfg: RunConfig) -> tuple[dict, list[dict], list[str]]:
    kind = cfg.choice("scenario", ("no_cooperation", "intercept_resend"), "no_cooperation")
    secret = secret_from(cfg)
    schedule = schedule_from(cfg)
    failures = []
    report = {"command": "scenario", "scenario": kind,
              "secret": {"alpha": secret.alpha, "beta": secret.beta}}

    if kind == "no_cooperation":
        cheater = cfg.choice("designee", DESIGNEES, "charlie")
        mode = cfg.choice("mode", ("exact", "sampled"), "exact")
        ex = scenario_no_cooperation(secret, cheater, schedule=schedule)
        report["exact"] = ex.to_record()
        report["correction_table"] = derive_correction_table("ghz", cheater, schedule=schedule).to_records()
        stats = dict(ex.to_record())
        if ex.degenerate_secret:
            report["caveat"] = ("secret is a computational basis state: both candidate corrections "
                                "agree up to phase, so guessing does not hurt")
        elif abs(ex.success_probability - 0.5) > 1e-10:
            failures.append(f"exact success {ex.success_probability:.12g} != 0.5")
        if mode == "sampled":
            s = scenario_no_cooperation(secret, cheater, rng=rng_from(cfg), trials=trials_from(cfg),
                                        schedule=schedule)
            sigma, z = _z(s.success_probability, ex.success_probability, s.trials)
            report["sampled"] = dict(s.to_record(), sigma=sigma, z=z, seed=cfg.get("seed"))
            stats.update(sampled_success=s.success_probability, trials=s.trials, sigma=sigma, z=z)
            if abs(z) > 3:
                failures.append(f"sampled success {z:+.2f} sigma from exact")
    else:
        fab = fabricated_from(cfg)
        frac = cfg.get("check_fraction", 0.5)
        if not 0.0 < frac <= 1.0:
            raise ConfigError("check_fraction", "must lie in (0, 1]")
        comp = cfg.choice("compensated", ("true", "false"), "true") == "true"
        st = scenario_intercept_resend(secret, fab, frac, trials_from(cfg), rng_from(cfg),
                                       compensated=comp, schedule=schedule)
        report["fabricated"] = {"alpha": fab.alpha, "beta": fab.beta}
        report["check_fraction"] = frac
        report["stats"] = st.to_record()
        z = analysis._zscore(st.detection_rate, st.exact_detection_per_check, st.sigma) if st.checked else 0.0
        report["stats"]["z"] = z
        report["seed"] = cfg.get("seed")
        stats = dict(st.to_record(), z=z)
        if st.checked and abs(z) > 3:
            failures.append(f"detection rate {z:+.2f} sigma from exact")
        if st.bob_fidelity < SUCCESS_FIDELITY:
            failures.append("Bob failed to reconstruct the stolen secret")
    report["renormalized"] = dict(cfg.renormalized)
    report["checks_failed"] = failures
    return report, _stat_rows(stats), failures


COMMANDS = {"run": cmd_run, "validate": cmd_validate, "sweep": cmd_sweep, "scenario": cmd_scenario}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("arguments", message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value configuration file")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (overrides the config)")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory (default: .)")
    common.add_argument("--format", choices=("json", "csv", "both"), default="both")

    parser = _Parser(prog="cavityqis", description="Cavity-QED quantum information sharing simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("run", parents=[common], help="GHZ or W sharing, exact or sampled")
    sub.add_parser("validate", parents=[common], help="full vs effective Hamiltonian along a ladder")
    sub.add_parser("sweep", parents=[common], help="W success probability versus c")
    sub.add_parser("scenario", parents=[common], help="dishonest-party scenarios")
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("seed", "must be a 64-bit unsigned integer")
            cfg.values["seed"] = args.seed
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            try:
                report, rows, failures = COMMANDS[args.command](cfg)
            except CorrectionError as exc:
                # e.g. an off-reconstruction schedule: no local correction exists
                report, rows, failures = {"command": args.command, "error": str(exc)}, [], [str(exc)]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    if cfg.source:
        report["config_file"] = os.path.basename(cfg.source)
    report["config"] = dict(sorted(cfg.values.items()))
    report["status"] = "fail" if failures else "ok"
    paths = write_outputs(args.command, report, rows, args.out, args.format, argv)
    for p in paths:
        print(f"wrote {p}")
    if failures:
        for f in failures:
            print(f"FAILED: {f}", file=sys.stderr)
        return 2
    print(f"{args.command}: ok")
    return 0
