"""Validation studies: effective-Hamiltonian accuracy, photon-number
independence, success-probability sweeps, simultaneity sensitivity and
Monte Carlo versus exact agreement.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import qcore
from .model import (
    CANONICAL,
    FockCutoff,
    InteractionSchedule,
    PhysicalParams,
    RegimeWarning,
    build_HI,
    check_designee,
    evolution_U,
)
from .protocols import (
    PROBE_SECRET,
    SecretState,
    WCoefficients,
    bob_rotation,
    derive_correction_table,
    prepare_ghz,
    run_ghz_exact,
    run_ghz_sampled,
    run_w_exact,
    run_w_sampled,
    scenario_no_cooperation,
    total_success,
)
from .qcore import (
    DensityMatrix,
    RandomSource,
    StateVector,
    apply_local,
    embed,
    enumerate_branches,
    fidelity,
    mixed_fidelity,
    partial_trace,
    propagate_td,
    tensor,
)

DEFAULT_LADDER = ((5.0, 20.0), (10.0, 50.0), (10.0, 100.0), (20.0, 200.0))
DEFAULT_FOCK = (0, 1, 2, 5)
TOP_POPULATION_LIMIT = 1e-6


def ladder_params(ladder=DEFAULT_LADDER, g: float = 1.0) -> list[PhysicalParams]:
    """(delta/g, Omega/g) pairs -> PhysicalParams."""
    return [PhysicalParams(g, d * g, w * g) for d, w in ladder]


def regime_key(p: PhysicalParams) -> tuple[float, float]:
    r = (p.driving_ratio, p.detuning_ratio)
    return (min(r), max(r))


def protocol_input(secret: SecretState = PROBE_SECRET) -> StateVector:
    """Secret on atom 0 with the GHZ resource on atoms 1-3."""
    return tensor([secret.ket(), prepare_ghz()])


@dataclass(frozen=True)
class ApproximationEntry:
    g: float
    delta: float
    omega_rabi: float
    lambda_t: float
    omega_t: float
    fock_n: int
    fidelity: float
    top_population: float
    cutoff_breach: bool
    steps: int

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity


@dataclass(frozen=True)
class GridPoint:
    params: PhysicalParams
    entries: tuple[ApproximationEntry, ...]
    spread: float
    regime_warnings: tuple[str, ...]

    @property
    def cutoff_breach(self) -> bool:
        return any(e.cutoff_breach for e in self.entries)


@dataclass
class ApproximationReport:
    points: list[GridPoint]
    fock_states: tuple[int, ...]
    cutoff: int
    effective_fock_independent: bool
    effective_max_deviation: float
    trend: Optional[dict] = None
    notes: list[str] = field(default_factory=list)

    @property
    def entries(self) -> list[ApproximationEntry]:
        return [e for p in self.points for e in p.entries]

    @property
    def trend_ok(self) -> Optional[bool]:
        if self.trend is None:
            return None
        return bool(self.trend["infidelity_decreasing"] and self.trend["spread_decreasing"])

    @property
    def cutoff_breach(self) -> bool:
        return any(p.cutoff_breach for p in self.points)


def _strictly_decreasing(xs: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def validate_effective(grid: Sequence[PhysicalParams], schedule: InteractionSchedule = CANONICAL,
                       fock_states: Sequence[int] = DEFAULT_FOCK, cutoff: FockCutoff = FockCutoff(7),
                       atomic_input: Optional[StateVector] = None, tol: float = 1e-6,
                       initial_steps: Optional[int] = None, max_doublings: int = 14) -> ApproximationReport:
    """Compare the driven-cavity propagation with the effective two-atom evolution.

    The first two atoms of ``atomic_input`` enter the cavity, prepared in each
    Fock state of ``fock_states``; the rest are spectators.  The duration is
    lambda_t / lambda; the effective evolution uses the same lambda*t and the
    Omega*t actually accumulated.  Fidelity is <psi_eff| rho_atoms |psi_eff>.
    """
    fock_states = tuple(int(n) for n in fock_states)
    if any(p.g <= 0 for p in grid):
        raise ValueError("validation needs g > 0 (lambda = g^2 / 2 delta sets the duration)")
    if not fock_states:
        raise ValueError("no Fock states requested")
    if cutoff.n_max < max(fock_states) + 2:
        raise ValueError(f"cutoff n_max={cutoff.n_max} too small for Fock inputs up to {max(fock_states)} "
                         f"(need >= {max(fock_states) + 2})")
    if atomic_input is None:
        atomic_input = protocol_input()
    if not atomic_input.is_normalized():
        raise ValueError("atomic input not normalized")
    if atomic_input.dims[:2] != (2, 2) or any(d != 2 for d in atomic_input.dims):
        raise ValueError("atomic input must be a register of atoms (dimension 2 each)")

    ncav = cutoff.dim
    d_rest = atomic_input.layout.total_dim // 4
    pieces = atomic_input.amps.reshape(4, d_rest)   # (atoms 0,1) x spectators
    cols = np.concatenate(
        [np.einsum("ar,c->acr", pieces, np.eye(ncav)[n]).reshape(4 * ncav, d_rest) for n in fock_states],
        axis=1) / math.sqrt(len(fock_states))

    points = []
    for params in sorted(grid, key=regime_key):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RegimeWarning)
            h = build_HI(params, cutoff)
        T = schedule.lambda_t / params.lam
        if initial_steps is None:
            scale = np.linalg.norm(h.matrix(0.0), 2)
            steps0 = max(64, int(math.ceil(T * scale)))
        else:
            steps0 = initial_steps
        final, steps = propagate_td(h, cols, T, steps0, tol=tol / math.sqrt(len(fock_states)),
                                    max_doublings=max_doublings, return_steps=True)
        final = final * math.sqrt(len(fock_states))

        sched = InteractionSchedule(params.lam * T, params.omega_rabi * T)
        eff = apply_local(evolution_U(sched), atomic_input, (0, 1))

        entries, rhos = [], []
        for k, n in enumerate(fock_states):
            block = final[:, k * d_rest:(k + 1) * d_rest].reshape(4, ncav, d_rest)
            top = float(np.sum(np.abs(block[:, -1, :]) ** 2))
            m = block.transpose(0, 2, 1).reshape(4 * d_rest, ncav)   # atoms x cavity
            rho = DensityMatrix(atomic_input.layout, m @ m.conj().T)
            rhos.append(rho)
            entries.append(ApproximationEntry(params.g, params.delta, params.omega_rabi, sched.lambda_t,
                                              sched.omega_t, n, fidelity(eff, rho), top,
                                              top > TOP_POPULATION_LIMIT, steps))
        spread = max((1.0 - mixed_fidelity(r1, r2) for r1, r2 in itertools.combinations(rhos, 2)),
                     default=0.0)
        points.append(GridPoint(params, tuple(entries), spread, tuple(str(w.message) for w in caught)))

    ok, dev = effective_fock_independence(atomic_input, schedule, fock_states, cutoff)
    report = ApproximationReport(points, fock_states, cutoff.n_max, ok, dev)
    if len(points) < 2:
        report.notes.append("insufficient ladder: trend assertions skipped")
    else:
        per_n = {}
        for k, n in enumerate(fock_states):
            per_n[n] = _strictly_decreasing([p.entries[k].infidelity for p in points])
        report.trend = {
            "infidelity_decreasing_per_n": per_n,
            "infidelity_decreasing": all(per_n.values()),
            "spread_decreasing": _strictly_decreasing([p.spread for p in points]),
        }
    if report.cutoff_breach:
        report.notes.append(f"population of |n_max={cutoff.n_max}> exceeded {TOP_POPULATION_LIMIT:g} "
                            "for some entries; truncation affects those rows")
    return report


def effective_fock_independence(atomic_input: StateVector, schedule: InteractionSchedule,
                                fock_states: Sequence[int], cutoff: FockCutoff) -> tuple[bool, float]:
    """The effective evolution acts as identity on the cavity, entry for entry.

    Checks the lifted operator against U (x) 1 exactly and compares the reduced
    atomic outputs across Fock inputs.
    """
    u = evolution_U(schedule)
    layout = qcore.HilbertLayout((2, 2, cutoff.dim))
    lifted = embed(u, (0, 1), layout).entries
    op_exact = np.array_equal(lifted, np.kron(u.entries, np.eye(cutoff.dim)))

    full_layout = atomic_input.layout.concat(qcore.HilbertLayout((cutoff.dim,)))
    ref = None
    dev = 0.0
    cav = len(atomic_input.layout)
    for n in fock_states:
        psi = tensor([atomic_input, qcore.fock_ket(n, cutoff.n_max)])
        out = apply_local(u, psi, (0, 1))
        rho = partial_trace(out, range(cav)).entries
        if ref is None:
            ref = rho
        dev = max(dev, float(np.max(np.abs(rho - ref))))
    assert out.layout == full_layout
    return bool(op_exact and dev == 0.0), dev


@dataclass(frozen=True)
class SweepRow:
    c: float
    exact: float
    formula: float
    sampled: Optional[float] = None
    sigma: Optional[float] = None

    @property
    def z(self) -> Optional[float]:
        if self.sampled is None:
            return None
        return _zscore(self.sampled, self.exact, self.sigma)


@dataclass
class SweepResult:
    designee: str
    trials: int
    rows: list[SweepRow]

    @property
    def exact_matches_formula(self) -> bool:
        return all(abs(r.exact - r.formula) <= 1e-10 for r in self.rows)

    @property
    def sampled_within_3sigma(self) -> bool:
        return all(r.z is None or abs(r.z) <= 3 for r in self.rows)


def sweep_success_vs_c(secret: SecretState, c_values: Sequence[float], designee: str = "charlie",
                       trials: int = 0, rng: Optional[RandomSource] = None) -> SweepResult:
    """Exact (and optionally sampled) W success probability along a = b = sqrt((1-c^2)/2)."""
    designee = check_designee(designee)
    if not len(c_values):
        raise ValueError("empty c grid")
    if trials and rng is None:
        raise ValueError("sampled sweep needs a RandomSource")
    coeffs = [WCoefficients.from_c(float(c)) for c in c_values]
    rows = []
    for i, (c, w) in enumerate(zip(c_values, coeffs)):
        _, exact = run_w_exact(secret, w, designee)
        sampled = run_w_sampled(secret, w, designee, trials, rng.spawn(i)).success_rate if trials else None
        sigma = binomial_sigma(exact, trials) if trials else None
        rows.append(SweepRow(float(c), exact, 2 * float(c) ** 2, sampled, sigma))
    return SweepResult(designee, trials, rows)


@dataclass(frozen=True)
class StaggerPoint:
    fraction: float
    fidelity: float
    delta_vs_baseline: float


@dataclass
class StaggerCurve:
    params: PhysicalParams
    designee: str
    points: list[StaggerPoint]
    baseline: float


def _late_entry_state(secret: SecretState, fraction: float, params: PhysicalParams,
                      cutoff: FockCutoff, schedule: InteractionSchedule, fock_n: int, tol: float) -> StateVector:
    """Atoms 0-3 plus cavity after atom 1 enters a fraction of the window late."""
    T = schedule.lambda_t / params.lam
    ncav = cutoff.dim
    pieces = protocol_input(secret).amps.reshape(4, 4)
    cols = np.einsum("ar,c->acr", pieces, np.eye(ncav)[fock_n]).reshape(4 * ncav, 4)
    h_both = build_HI(params, cutoff)
    steps_both = max(64, int(math.ceil(T * np.linalg.norm(h_both.matrix(0.0), 2))))
    t_late = fraction * T
    if t_late > 0:
        h_one = build_HI(params, cutoff, coupled=(0,))
        cols = propagate_td(h_one, cols, t_late, max(16, int(steps_both * fraction)), tol=tol)
    cols = propagate_td(h_both, cols, T - t_late, max(16, int(steps_both * (1 - fraction))), tol=tol, t0=t_late)
    amps = cols.reshape(2, 2, ncav, 2, 2).transpose(0, 1, 3, 4, 2).reshape(-1)
    # thousands of eigh-built steps leave ~1e-10 of rounding in the norm
    return StateVector((2, 2, 2, 2, ncav), amps).normalized()


def _protocol_fidelity(state: StateVector, secret: SecretState, designee: str, table) -> float:
    """Branch-averaged fidelity of the designee's corrected atom (cavity traced out)."""
    target = secret.ket()
    helper = 0 if designee == "charlie" else 1
    total = 0.0
    for ab in enumerate_branches(state, (0, 1), keep_measured=False):
        rotated = apply_local(bob_rotation(), ab.collapsed, (helper,))
        for hb in enumerate_branches(rotated, (helper,), keep_measured=False):
            corr = table[(qcore.outcome_label(ab.outcome), qcore.outcome_label(hb.outcome))]
            fixed = apply_local(corr.matrix(), hb.collapsed, (0,))
            rho = partial_trace(fixed, (0,))
            total += ab.probability * hb.probability * fidelity(target, rho)
    return total


def simultaneity_sensitivity(secret: SecretState, stagger_fractions: Sequence[float],
                             params: PhysicalParams = PhysicalParams(1.0, 10.0, 100.0),
                             cutoff: FockCutoff = FockCutoff(5), schedule: InteractionSchedule = CANONICAL,
                             designee: str = "charlie", fock_n: int = 0, tol: float = 1e-7) -> StaggerCurve:
    """Protocol fidelity when the second atom enters the cavity late.

    For a stagger fraction f, only the first atom couples (and is driven) for
    f*T, then both couple for (1-f)*T.  The designee applies the ideal
    correction table; the baseline is the f = 0 run of the same model.
    """
    designee = check_designee(designee)
    for f in stagger_fractions:
        if not 0.0 <= f <= 0.2:
            raise ValueError(f"stagger fraction {f} outside [0, 0.2]")
    table = derive_correction_table("ghz", designee, schedule=schedule)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        base = _protocol_fidelity(_late_entry_state(secret, 0.0, params, cutoff, schedule, fock_n, tol),
                                  secret, designee, table)
        pts = []
        for f in stagger_fractions:
            fid = base if f == 0 else _protocol_fidelity(
                _late_entry_state(secret, float(f), params, cutoff, schedule, fock_n, tol), secret, designee, table)
            pts.append(StaggerPoint(float(f), fid, fid - base))
    return StaggerCurve(params, designee, pts, base)


@dataclass(frozen=True)
class ComparisonRow:
    statistic: str
    exact: float
    sampled: float
    trials: int

    @property
    def sigma(self) -> float:
        return binomial_sigma(self.exact, self.trials)

    @property
    def z(self) -> float:
        return _zscore(self.sampled, self.exact, self.sigma)

    @property
    def passed(self) -> bool:
        return abs(self.z) <= 3


def binomial_sigma(p: float, trials: int) -> float:
    """Standard error of a frequency; exactly 0 when p is 0 or 1 up to rounding."""
    v = p * (1 - p)
    return 0.0 if v < 1e-12 else math.sqrt(v / trials)


def _zscore(sampled: float, exact: float, sigma: float) -> float:
    if sigma == 0:
        return 0.0 if abs(sampled - exact) <= 1e-9 else math.copysign(math.inf, sampled - exact)
    return (sampled - exact) / sigma


def mc_vs_exact(trials: int, rng: RandomSource, secret: SecretState = PROBE_SECRET,
                c: float = 0.3) -> list[ComparisonRow]:
    """Sampled versus exact values of every reported protocol statistic."""
    if trials < 100:
        raise ValueError("mc_vs_exact needs at least 100 trials")
    rows = []
    for k, designee in enumerate(("charlie", "bob")):
        exact = run_ghz_exact(secret, designee)
        s = run_ghz_sampled(secret, designee, trials, rng.spawn(k))
        rows.append(ComparisonRow(f"ghz_success_{designee}", total_success(exact), s.success_rate, trials))
        if designee == "charlie":
            for alice in ("ee", "eg", "ge", "gg"):
                p = math.fsum(r.probability for r in exact if r.alice == alice)
                freq = sum(r.alice == alice for r in s.results) / trials
                rows.append(ComparisonRow(f"ghz_alice_{alice}", p, freq, trials))
    for k, w in enumerate((WCoefficients.from_c(c), WCoefficients.from_c(1 / math.sqrt(3))), start=2):
        _, exact = run_w_exact(secret, w, "charlie")
        s = run_w_sampled(secret, w, "charlie", trials, rng.spawn(k))
        rows.append(ComparisonRow(f"w_success_c={abs(w.c):.6f}", exact, s.success_rate, trials))
    nc_exact = scenario_no_cooperation(secret, "charlie")
    nc_samp = scenario_no_cooperation(secret, "charlie", rng=rng.spawn(4), trials=trials)
    rows.append(ComparisonRow("no_cooperation_success", nc_exact.success_probability,
                              nc_samp.success_probability, trials))
    return rows
