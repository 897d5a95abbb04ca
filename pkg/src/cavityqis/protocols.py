"""GHZ- and W-channel sharing of a single-qubit secret between Bob and Charlie.

Atoms are numbered 0..3 here (the secret is atom 0, Alice keeps atoms 0 and 1,
Bob receives atom 2 and Charlie atom 3).  Outcome labels are 'e'/'g' strings
in atom order, e.g. Alice outcome "eg" means atom 0 found in |e>, atom 1 in |g>.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import qcore
from .model import (
    ATOM,
    CANONICAL,
    FockCutoff,
    InteractionSchedule,
    check_designee,
    evolution_U,
    jc_evolution,
    reconstruction_time,
)
from .qcore import (
    Branch,
    BranchSet,
    OperatorMatrix,
    RandomSource,
    StateVector,
    apply_local,
    atom_ket,
    enumerate_branches,
    fidelity,
    measure,
    outcome_label,
    sample_branch,
    tensor,
)

SUCCESS_FIDELITY = 1.0 - 1e-10
VERIFY_SEED = 20240607
VERIFY_SECRETS = 8


@dataclass(frozen=True)
class SecretState:
    alpha: complex
    beta: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        n = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {n!r}, expected 1")

    @classmethod
    def normalized(cls, alpha: complex, beta: complex) -> "SecretState":
        n = math.sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
        if n == 0:
            raise ValueError("zero secret")
        return cls(alpha / n, beta / n)

    @classmethod
    def random(cls, rng: RandomSource) -> "SecretState":
        v = rng.normal(4)
        return cls.normalized(complex(v[0], v[1]), complex(v[2], v[3]))

    def ket(self) -> StateVector:
        return StateVector(ATOM, [self.alpha, self.beta])


PROBE_SECRET = SecretState(0.6, 0.8 * cmath.exp(1j * math.pi / 7))


@dataclass(frozen=True)
class WCoefficients:
    """Weights of a|gge> + b|geg> + i c|egg>, ordered |a| >= |b| >= |c|."""

    a: complex
    b: complex
    c: complex

    def __post_init__(self):
        for k in ("a", "b", "c"):
            object.__setattr__(self, k, complex(getattr(self, k)))
        n = abs(self.a) ** 2 + abs(self.b) ** 2 + abs(self.c) ** 2
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"|a|^2 + |b|^2 + |c|^2 = {n!r}, expected 1")
        if not abs(self.a) >= abs(self.b) - 1e-12 or not abs(self.b) >= abs(self.c) - 1e-12:
            raise ValueError(f"W coefficients must satisfy |a| >= |b| >= |c|, got "
                             f"{abs(self.a):.6g}, {abs(self.b):.6g}, {abs(self.c):.6g}")

    @classmethod
    def from_c(cls, c: float) -> "WCoefficients":
        """Default completion a = b = sqrt((1 - c^2)/2); needs 0 <= c <= 1/sqrt(3)."""
        if c < 0 or c > 1 / math.sqrt(3) + 1e-12:
            raise ValueError(f"c = {c} violates the ordering under a = b completion (need 0 <= c <= 1/sqrt(3))")
        c = min(c, 1 / math.sqrt(3))
        ab = math.sqrt((1 - c * c) / 2)
        return cls(ab, ab, c)

    @classmethod
    def random(cls, rng: RandomSource, complex_phases: bool = False) -> "WCoefficients":
        v = np.sort(np.abs(rng.normal(3)))[::-1]
        v = v / np.linalg.norm(v)
        if complex_phases:
            ph = np.exp(2j * np.pi * np.array([rng.random() for _ in range(3)]))
            v = v * ph
        return cls(*v)

    @property
    def success_probability(self) -> float:
        return 2 * abs(self.c) ** 2


@dataclass(frozen=True)
class Correction:
    """diag(1, e^{i phase}) @ X^flip applied to the designee's atom."""

    flip: bool
    phase: float = 0.0

    @property
    def label(self) -> str:
        ph = math.remainder(self.phase, 2 * math.pi)
        if abs(ph) < 1e-9:
            return "X" if self.flip else "I"
        if abs(abs(ph) - math.pi) < 1e-9:
            return "XZ" if self.flip else "Z"
        return f"P({ph:.6f})X" if self.flip else f"P({ph:.6f})"

    def matrix(self) -> OperatorMatrix:
        x = np.array([[0, 1], [1, 0]], dtype=complex) if self.flip else np.eye(2, dtype=complex)
        p = np.diag([1.0, cmath.exp(1j * self.phase)])
        return OperatorMatrix(ATOM, p @ x, unitary=True)

    def apply(self, state: StateVector) -> StateVector:
        return StateVector(ATOM, self.matrix().entries @ state.amps)


def find_correction(state: StateVector, secret: SecretState) -> Optional[Correction]:
    """Search I, Z, X, XZ; fall back to fitting the relative phase.

    Returns None when no element of the family restores the secret.
    """
    target = secret.ket()
    for flip in (False, True):
        for phase in (0.0, math.pi):
            c = Correction(flip, phase)
            if fidelity(target, c.apply(state)) >= SUCCESS_FIDELITY:
                return c
    if abs(secret.alpha) < 1e-9 or abs(secret.beta) < 1e-9:
        return None
    for flip in (False, True):
        v = Correction(flip).apply(state).amps
        if abs(v[0]) < 1e-12 or abs(v[1]) < 1e-12:
            continue
        phase = cmath.phase((secret.beta / secret.alpha) * (v[0] / v[1]))
        c = Correction(flip, phase)
        if fidelity(target, c.apply(state)) >= SUCCESS_FIDELITY:
            return c
    return None


class CorrectionError(RuntimeError):
    """A branch admits no correction in the search family."""


@dataclass
class CorrectionTable:
    protocol: str
    designee: str
    entries: dict[tuple[str, str], Correction]
    # W protocol: helper outcomes that leave the designee in a basis state
    stranded: frozenset = frozenset()

    def __getitem__(self, key: tuple[str, str]) -> Correction:
        return self.entries[key]

    def __contains__(self, key) -> bool:
        return key in self.entries

    def to_records(self) -> list[dict]:
        rows = []
        for (alice, helper), corr in sorted(self.entries.items()):
            rows.append({"alice": alice, "helper": helper, "correction": corr.label,
                         "flip": corr.flip, "phase": math.remainder(corr.phase, 2 * math.pi)})
        return rows


@dataclass(frozen=True)
class ProtocolResult:
    alice: str
    helper: str
    probability: float
    correction: Optional[str]
    success: bool
    fidelity: float
    photons: Optional[int] = None

    def __post_init__(self):
        if self.success and self.fidelity < SUCCESS_FIDELITY:
            raise ValueError("successful branch with fidelity below threshold")

    def to_record(self) -> dict:
        return {"alice": self.alice, "helper": self.helper, "photons": self.photons,
                "probability": self.probability, "correction": self.correction,
                "success": self.success, "fidelity": self.fidelity}


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "honest"            # honest | no_cooperation | intercept_resend
    designee: str = "charlie"
    guess_policy: str = "uniform"
    fabricated: Optional[SecretState] = None
    check_fraction: float = 0.5

    def __post_init__(self):
        if self.kind not in ("honest", "no_cooperation", "intercept_resend"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        check_designee(self.designee)
        if self.kind == "intercept_resend":
            if self.fabricated is None:
                raise ValueError("intercept_resend needs a fabricated state")
            if not 0.0 < self.check_fraction <= 1.0:
                raise ValueError("check_fraction must lie in (0, 1]")
        if self.guess_policy != "uniform":
            raise ValueError("only the uniform guess policy is modelled")


@dataclass
class SampledSummary:
    trials: int
    successes: int
    mean_fidelity: float
    results: list[ProtocolResult] = field(repr=False, default_factory=list)

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    def to_record(self) -> dict:
        return {"trials": self.trials, "successes": self.successes,
                "success_rate": self.success_rate, "mean_fidelity": self.mean_fidelity}


# --- resource states --------------------------------------------------------

def prepare_ghz() -> StateVector:
    """(|eee> + i|ggg>)/sqrt(2)."""
    return (atom_ket("eee") + 1j * atom_ket("ggg")) * (1 / math.sqrt(2))


def prepare_w(coeffs: WCoefficients) -> StateVector:
    """a|gge> + b|geg> + i c|egg>."""
    return coeffs.a * atom_ket("gge") + coeffs.b * atom_ket("geg") + (1j * coeffs.c) * atom_ket("egg")


def bob_rotation() -> OperatorMatrix:
    """|e> -> (|e>+|g>)/sqrt(2), |g> -> (|e>-|g>)/sqrt(2)."""
    return OperatorMatrix(ATOM, np.array([[1, 1], [1, -1]]) / math.sqrt(2), hermitian=True, unitary=True)


def _distribute(secret: SecretState, resource: StateVector, schedule: InteractionSchedule) -> BranchSet:
    psi = tensor([secret.ket(), resource])
    psi = apply_local(evolution_U(schedule), psi, (0, 1))
    return enumerate_branches(psi, (0, 1), keep_measured=False)


def ghz_distribute(secret: SecretState, schedule: InteractionSchedule = CANONICAL) -> BranchSet:
    """Alice's four outcomes on atoms 0, 1; collapsed states live on Bob's and Charlie's atoms."""
    return _distribute(secret, prepare_ghz(), schedule)


def w_distribute(secret: SecretState, coeffs: WCoefficients,
                 schedule: InteractionSchedule = CANONICAL) -> BranchSet:
    return _distribute(secret, prepare_w(coeffs), schedule)


def _helper_index(designee: str) -> int:
    # position within the (Bob, Charlie) pair
    return 0 if designee == "charlie" else 1


def _helper_split(pair: StateVector, designee: str, rotate: bool) -> BranchSet:
    h = _helper_index(designee)
    if rotate:
        pair = apply_local(bob_rotation(), pair, (h,))
    return enumerate_branches(pair, (h,), keep_measured=False)


# --- GHZ protocol -------------------------------------------------------------

def _ghz_leaves(secret: SecretState, designee: str, schedule: InteractionSchedule = CANONICAL):
    """(alice, helper, probability, designee state) for every branch."""
    leaves = []
    for ab in ghz_distribute(secret, schedule):
        for hb in _helper_split(ab.collapsed, designee, rotate=True):
            leaves.append((outcome_label(ab.outcome), outcome_label(hb.outcome),
                           ab.probability * hb.probability, hb.collapsed))
    return leaves


def _w_leaves(secret: SecretState, coeffs: WCoefficients, designee: str,
              schedule: InteractionSchedule = CANONICAL, cutoff: FockCutoff = FockCutoff(1)):
    """(alice, helper, photons, probability, pre-JC state, post-detection state)."""
    u_jc = jc_evolution(reconstruction_time(coeffs, designee), cutoff)
    vac = qcore.fock_ket(0, cutoff.n_max)
    leaves = []
    for ab in w_distribute(secret, coeffs, schedule):
        for hb in _helper_split(ab.collapsed, designee, rotate=False):
            joint = qcore.apply(u_jc, tensor([hb.collapsed, vac]))
            for pb in enumerate_branches(joint, (1,), keep_measured=False):
                leaves.append((outcome_label(ab.outcome), outcome_label(hb.outcome), pb.outcome[0],
                               ab.probability * hb.probability * pb.probability,
                               hb.collapsed, pb.collapsed))
    return leaves


def _is_basis_state(state: StateVector) -> bool:
    return min(abs(a) ** 2 for a in state.amps) <= qcore.PROB_CUTOFF


def derive_correction_table(protocol: str, designee: str, coeffs: Optional[WCoefficients] = None,
                            schedule: InteractionSchedule = CANONICAL,
                            cutoff: FockCutoff = FockCutoff(1),
                            probe: SecretState = PROBE_SECRET,
                            verify: int = VERIFY_SECRETS) -> CorrectionTable:
    """Find each branch's correction with the probe secret, then re-check on random secrets."""
    designee = check_designee(designee)
    protocol = protocol.lower()
    entries: dict[tuple[str, str], Correction] = {}
    stranded = set()
    if protocol == "ghz":
        for alice, helper, _, state in _ghz_leaves(probe, designee, schedule):
            corr = find_correction(state, probe)
            if corr is None:
                raise CorrectionError(f"GHZ branch alice={alice} helper={helper} admits no correction")
            entries[(alice, helper)] = corr
    elif protocol == "w":
        if coeffs is None:
            raise ValueError("W protocol needs coefficients")
        for alice, helper, photons, _, pre, post in _w_leaves(probe, coeffs, designee, schedule, cutoff):
            if _is_basis_state(pre):
                stranded.add((alice, helper))
                continue
            if photons != 0:
                continue
            corr = find_correction(post, probe)
            if corr is None:
                raise CorrectionError(f"W branch alice={alice} helper={helper} admits no correction")
            entries[(alice, helper)] = corr
    else:
        raise ValueError(f"unknown protocol {protocol!r}")

    table = CorrectionTable(protocol, designee, entries, frozenset(stranded))
    rng = RandomSource(VERIFY_SEED)
    for _ in range(verify):
        s = SecretState.random(rng)
        results = (run_ghz_exact(s, designee, schedule, table=table) if protocol == "ghz"
                   else run_w_exact(s, coeffs, designee, schedule, cutoff, table=table)[0])
        for r in results:
            if (r.alice, r.helper) in entries and (r.photons in (None, 0)) and r.fidelity < SUCCESS_FIDELITY:
                raise CorrectionError(f"correction {r.correction} for alice={r.alice} helper={r.helper} "
                                      f"fails on a random secret (fidelity {r.fidelity:.12f})")
    return table


def run_ghz_exact(secret: SecretState, designee: str, schedule: InteractionSchedule = CANONICAL,
                  table: Optional[CorrectionTable] = None) -> list[ProtocolResult]:
    """Every (Alice pair, helper bit) branch with the designee's corrected fidelity."""
    designee = check_designee(designee)
    if table is None:
        table = derive_correction_table("ghz", designee, schedule=schedule)
    target = secret.ket()
    out = []
    for alice, helper, p, state in _ghz_leaves(secret, designee, schedule):
        corr = table.entries.get((alice, helper))
        f = fidelity(target, corr.apply(state)) if corr else fidelity(target, state)
        out.append(ProtocolResult(alice, helper, p, corr.label if corr else None,
                                  bool(corr) and f >= SUCCESS_FIDELITY, f))
    return out


def total_success(results: list[ProtocolResult]) -> float:
    return math.fsum(r.probability for r in results if r.success)


class _GhzSampler:
    """Sequential measurements drawn from branch sets computed once."""

    def __init__(self, secret, designee, schedule, table):
        self.designee = check_designee(designee)
        self.table = table or derive_correction_table("ghz", self.designee, schedule=schedule)
        psi = tensor([secret.ket(), prepare_ghz()])
        self.alice = enumerate_branches(apply_local(evolution_U(schedule), psi, (0, 1)), (0, 1),
                                        keep_measured=False)
        self.helper = {b.outcome: _helper_split(b.collapsed, self.designee, rotate=True) for b in self.alice}
        self.target = secret.ket()

    def alice_and_helper(self, rng):
        ab = sample_branch(self.alice, rng)
        hb = sample_branch(self.helper[ab.outcome], rng)
        return outcome_label(ab.outcome), outcome_label(hb.outcome), ab.probability * hb.probability, hb.collapsed


def run_ghz_sampled(secret: SecretState, designee: str, trials: int, rng: RandomSource,
                    schedule: InteractionSchedule = CANONICAL,
                    table: Optional[CorrectionTable] = None) -> SampledSummary:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    s = _GhzSampler(secret, designee, schedule, table)
    results, fids = [], []
    for _ in range(trials):
        alice, helper, p, state = s.alice_and_helper(rng)
        corr = s.table[(alice, helper)]
        f = fidelity(s.target, corr.apply(state))
        results.append(ProtocolResult(alice, helper, p, corr.label, f >= SUCCESS_FIDELITY, f))
        fids.append(f)
    return SampledSummary(trials, sum(r.success for r in results), math.fsum(fids) / trials, results)


# --- W protocol -------------------------------------------------------------

def w_reconstruct(branch: Branch, secret: SecretState, coeffs: WCoefficients, designee: str,
                  cutoff: FockCutoff = FockCutoff(1), table: Optional[CorrectionTable] = None,
                  rng: Optional[RandomSource] = None) -> list[ProtocolResult]:
    """Helper measurement, JC step and photon detection for one Alice branch.

    Without ``rng`` every (helper, photon) leaf is returned with its joint
    probability; with ``rng`` a single sampled leaf is returned.
    """
    designee = check_designee(designee)
    if table is None:
        table = derive_correction_table("w", designee, coeffs, cutoff=cutoff)
    gt = reconstruction_time(coeffs, designee)
    u_jc = jc_evolution(gt, cutoff)
    vac = qcore.fock_ket(0, cutoff.n_max)
    alice = outcome_label(branch.outcome)
    target = secret.ket()

    def finish(helper, photons, p, state):
        return _w_result(alice, helper, photons, p, state, table, target)

    h = _helper_index(designee)
    if rng is not None:
        hb = measure(branch.collapsed, (h,), rng, keep_measured=False)
        joint = qcore.apply(u_jc, tensor([hb.collapsed, vac]))
        pb = measure(joint, (1,), rng, keep_measured=False)
        return [finish(outcome_label(hb.outcome), pb.outcome[0],
                       branch.probability * hb.probability * pb.probability, pb.collapsed)]

    out = []
    for hb in enumerate_branches(branch.collapsed, (h,), keep_measured=False):
        joint = qcore.apply(u_jc, tensor([hb.collapsed, vac]))
        for pb in enumerate_branches(joint, (1,), keep_measured=False):
            out.append(finish(outcome_label(hb.outcome), pb.outcome[0],
                              branch.probability * hb.probability * pb.probability, pb.collapsed))
    return out


def _w_result(alice, helper, photons, p, state, table, target) -> ProtocolResult:
    corr = table.entries.get((alice, helper)) if photons == 0 else None
    if corr is not None:
        f = fidelity(target, corr.apply(state))
        return ProtocolResult(alice, helper, p, corr.label, f >= SUCCESS_FIDELITY, f, photons)
    return ProtocolResult(alice, helper, p, None, False, fidelity(target, state), photons)


def designee_cavity_state(branch: Branch, designee: str, helper: str, coeffs: WCoefficients,
                          cutoff: FockCutoff = FockCutoff(1)) -> StateVector:
    """Unnormalized (atom, cavity) state after the JC step, for helper outcome ``helper``.

    Its squared norm is the joint probability of the Alice branch and the
    helper outcome, matching the unnormalized bookkeeping of the derivation.
    """
    designee = check_designee(designee)
    h = _helper_index(designee)
    hb = enumerate_branches(branch.collapsed, (h,), keep_measured=False).by_outcome()
    key = (qcore.ATOM_LABELS.index(helper),)
    if key not in hb:
        raise ValueError(f"helper outcome {helper!r} has zero probability on this branch")
    b = hb[key]
    u_jc = jc_evolution(reconstruction_time(coeffs, designee), cutoff)
    joint = qcore.apply(u_jc, tensor([b.collapsed, qcore.fock_ket(0, cutoff.n_max)]))
    return joint * math.sqrt(branch.probability * b.probability)


def run_w_exact(secret: SecretState, coeffs: WCoefficients, designee: str,
                schedule: InteractionSchedule = CANONICAL, cutoff: FockCutoff = FockCutoff(1),
                table: Optional[CorrectionTable] = None) -> tuple[list[ProtocolResult], float]:
    designee = check_designee(designee)
    if table is None:
        table = derive_correction_table("w", designee, coeffs, schedule=schedule, cutoff=cutoff)
    results = []
    for ab in w_distribute(secret, coeffs, schedule):
        results.extend(w_reconstruct(ab, secret, coeffs, designee, cutoff, table))
    total = math.fsum(r.probability for r in results)
    if abs(total - 1.0) > 1e-10:
        raise ArithmeticError(f"W branch tree probabilities sum to {total}")
    return results, total_success(results)


def run_w_sampled(secret: SecretState, coeffs: WCoefficients, designee: str, trials: int,
                  rng: RandomSource, schedule: InteractionSchedule = CANONICAL,
                  cutoff: FockCutoff = FockCutoff(1),
                  table: Optional[CorrectionTable] = None) -> SampledSummary:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    designee = check_designee(designee)
    if table is None:
        table = derive_correction_table("w", designee, coeffs, schedule=schedule, cutoff=cutoff)
    u_jc = jc_evolution(reconstruction_time(coeffs, designee), cutoff)
    vac = qcore.fock_ket(0, cutoff.n_max)
    alice = w_distribute(secret, coeffs, schedule)
    helper, photons = {}, {}
    for ab in alice:
        helper[ab.outcome] = hs = _helper_split(ab.collapsed, designee, rotate=False)
        for hb in hs:
            joint = qcore.apply(u_jc, tensor([hb.collapsed, vac]))
            photons[ab.outcome, hb.outcome] = enumerate_branches(joint, (1,), keep_measured=False)
    target = secret.ket()
    results = []
    for _ in range(trials):
        ab = sample_branch(alice, rng)
        hb = sample_branch(helper[ab.outcome], rng)
        pb = sample_branch(photons[ab.outcome, hb.outcome], rng)
        results.append(_w_result(outcome_label(ab.outcome), outcome_label(hb.outcome), pb.outcome[0],
                                 ab.probability * hb.probability * pb.probability, pb.collapsed, table, target))
    return SampledSummary(trials, sum(r.success for r in results),
                          math.fsum(r.fidelity for r in results) / trials, results)


# --- dishonest-party scenarios --------------------------------------------------

@dataclass
class NoCooperationSummary:
    cheater: str
    success_probability: float
    mean_fidelity: float
    degenerate_secret: bool
    trials: Optional[int] = None
    successes: Optional[int] = None

    def to_record(self) -> dict:
        rec = {"cheater": self.cheater, "success_probability": self.success_probability,
               "mean_fidelity": self.mean_fidelity, "degenerate_secret": self.degenerate_secret}
        if self.trials is not None:
            rec.update(trials=self.trials, successes=self.successes)
        return rec


def scenario_no_cooperation(secret: SecretState, cheater: str = "charlie", *,
                            rng: Optional[RandomSource] = None, trials: int = 0,
                            schedule: InteractionSchedule = CANONICAL) -> NoCooperationSummary:
    """The designee reconstructs without the helper's bit, guessing between its two candidate corrections.

    Exact averaging unless ``rng`` and ``trials`` are given.  A secret for which
    the two candidates coincide in effect (a computational basis state) is
    flagged as degenerate: guessing is then harmless.
    """
    cheater = check_designee(cheater)
    table = derive_correction_table("ghz", cheater, schedule=schedule)
    target = secret.ket()
    candidates: dict[str, list[Correction]] = {}
    for (alice, _), corr in sorted(table.entries.items()):
        candidates.setdefault(alice, []).append(corr)

    degenerate = min(abs(secret.alpha), abs(secret.beta)) < 1e-9

    if rng is None:
        p_ok = f_sum = 0.0
        for alice, _, p, state in _ghz_leaves(secret, cheater, schedule):
            cands = candidates[alice]
            for corr in cands:
                f = fidelity(target, corr.apply(state))
                p_ok += p / len(cands) * (f >= SUCCESS_FIDELITY)
                f_sum += p / len(cands) * f
        return NoCooperationSummary(cheater, p_ok, f_sum, degenerate)

    if trials < 1:
        raise ValueError("sampled mode needs trials >= 1")
    sampler = _GhzSampler(secret, cheater, schedule, table)
    ok, fsum = 0, 0.0
    for _ in range(trials):
        alice, _, _, state = sampler.alice_and_helper(rng)
        cands = candidates[alice]
        corr = cands[min(int(rng.random() * len(cands)), len(cands) - 1)]
        f = fidelity(target, corr.apply(state))
        ok += f >= SUCCESS_FIDELITY
        fsum += f
    return NoCooperationSummary(cheater, ok / trials, fsum / trials, degenerate, trials, ok)


@dataclass
class InterceptStats:
    trials: int
    checked: int
    detected: int
    exact_detection_per_check: float
    bob_fidelity: float
    compensated: bool

    @property
    def detection_rate(self) -> float:
        return self.detected / self.checked if self.checked else float("nan")

    @property
    def sigma(self) -> float:
        p = self.exact_detection_per_check
        if not self.checked:
            return float("nan")
        v = p * (1 - p)
        return 0.0 if v < 1e-12 else math.sqrt(v / self.checked)

    def to_record(self) -> dict:
        return {"trials": self.trials, "checked": self.checked, "detected": self.detected,
                "detection_rate": self.detection_rate, "sigma": self.sigma,
                "exact_detection_per_check": self.exact_detection_per_check,
                "bob_fidelity": self.bob_fidelity, "compensated": self.compensated}


def scenario_intercept_resend(secret: SecretState, fabricated: SecretState, check_fraction: float,
                              trials: int, rng: RandomSource, *, compensated: bool = True,
                              schedule: InteractionSchedule = CANONICAL) -> InterceptStats:
    """Bob keeps Charlie's atom and forwards ``fabricated``; Alice designates Charlie.

    Bob, holding both shares, reconstructs the secret himself (``bob_fidelity``).
    With ``compensated`` the forwarded qubit is taken to be what Charlie ends
    up holding, so a check detects with probability 1 - F(secret, fabricated).
    Otherwise the forwarded qubit passes through Charlie's branch correction,
    with Bob reporting his true helper outcome.
    A checked run projects Charlie's qubit onto the secret; failure = detection.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0.0 < check_fraction <= 1.0:
        raise ValueError("check_fraction must lie in (0, 1]")
    target = secret.ket()
    fab = fabricated.ket()
    table = derive_correction_table("ghz", "charlie", schedule=schedule)
    bob_results = run_ghz_exact(secret, "charlie", schedule, table)
    bob_fid = min(r.fidelity for r in bob_results)

    if compensated:
        exact = 1.0 - fidelity(target, fab)
    else:
        exact = math.fsum(r.probability * (1.0 - fidelity(target, table[(r.alice, r.helper)].apply(fab)))
                          for r in bob_results)

    sampler = _GhzSampler(secret, "charlie", schedule, table)
    checked = detected = 0
    for _ in range(trials):
        alice, helper, _, _ = sampler.alice_and_helper(rng)
        if rng.random() >= check_fraction:
            continue
        checked += 1
        held = fab if compensated else table[(alice, helper)].apply(fab)
        if rng.random() >= fidelity(target, held):
            detected += 1
    return InterceptStats(trials, checked, detected, min(max(exact, 0.0), 1.0), bob_fid, compensated)
