"""Hamiltonians and evolution operators for the driven two-atom cavity and the
resonant Jaynes-Cummings reconstruction cavity.

Operator convention: ``S_plus = |e><g|`` raises, ``S_minus = |g><e|`` lowers.
All evolutions are parameterised by dimensionless products (lambda*t,
Omega*t, g*t), so no absolute time unit appears anywhere.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .qcore import HilbertLayout, OperatorMatrix, _expm_eigh, hermitian_expm, kron_ops

ATOM = HilbertLayout((2,))
TWO_ATOMS = HilbertLayout((2, 2))

DESIGNEES = ("bob", "charlie")


class RegimeWarning(UserWarning):
    """Parameters fall outside the strong-driving / large-detuning regime."""


@dataclass(frozen=True)
class PhysicalParams:
    """Coupling g, detuning delta = w0 - wa and Rabi frequency Omega (rad/s).

    ``regime_factor`` is how many times larger a quantity must be to count as
    "much greater than".
    """

    g: float
    delta: float
    omega_rabi: float
    omega0: Optional[float] = None
    regime_factor: float = 10.0

    def __post_init__(self):
        if not self.g >= 0:
            raise ValueError("g must be nonnegative")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def lam(self) -> float:
        return self.g ** 2 / (2.0 * self.delta)

    @property
    def strong_driving(self) -> bool:
        return 2.0 * self.omega_rabi >= self.regime_factor * max(self.delta, self.g)

    @property
    def large_detuning(self) -> bool:
        return 2.0 * self.delta >= self.regime_factor * self.g

    @property
    def driving_ratio(self) -> float:
        return 2.0 * self.omega_rabi / max(self.delta, self.g)

    @property
    def detuning_ratio(self) -> float:
        return 2.0 * self.delta / self.g

    def regime_problems(self) -> list[str]:
        out = []
        if not self.strong_driving:
            out.append(f"weak driving: 2*Omega/max(delta,g) = {self.driving_ratio:.3g} < {self.regime_factor:g}")
        if not self.large_detuning:
            out.append(f"small detuning: 2*delta/g = {self.detuning_ratio:.3g} < {self.regime_factor:g}")
        return out

    def warn_regime(self) -> None:
        for msg in self.regime_problems():
            warnings.warn(msg, RegimeWarning, stacklevel=3)


@dataclass(frozen=True)
class EffectiveCoupling:
    lam: float

    @classmethod
    def from_params(cls, params: PhysicalParams) -> "EffectiveCoupling":
        return cls(params.lam)


@dataclass(frozen=True)
class InteractionSchedule:
    lambda_t: float = math.pi / 4
    omega_t: float = math.pi

    def __post_init__(self):
        if self.lambda_t < 0 or self.omega_t < 0:
            raise ValueError("schedule products must be nonnegative")


CANONICAL = InteractionSchedule()


@dataclass(frozen=True)
class FockCutoff:
    n_max: int = 5

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1 when the cavity exchanges excitations")

    @property
    def dim(self) -> int:
        return self.n_max + 1


def atomic_operators() -> dict[str, OperatorMatrix]:
    e = np.array([1, 0], dtype=complex)
    g = np.array([0, 1], dtype=complex)
    sp = np.outer(e, g)
    sm = np.outer(g, e)
    pe, pg = np.outer(e, e), np.outer(g, g)
    return {
        "S_plus": OperatorMatrix(ATOM, sp),
        "S_minus": OperatorMatrix(ATOM, sm),
        "S_z": OperatorMatrix(ATOM, 0.5 * (pe - pg), hermitian=True),
        "sigma_x": OperatorMatrix(ATOM, sp + sm, hermitian=True, unitary=True),
        "sigma_z_phase": OperatorMatrix(ATOM, pe - pg, hermitian=True, unitary=True),
        "identity": OperatorMatrix(ATOM, np.eye(2), hermitian=True, unitary=True),
    }


def cavity_operators(cutoff: FockCutoff) -> dict[str, OperatorMatrix]:
    """Truncated mode operators; ``a_dag`` annihilates ``|n_max>``."""
    layout = HilbertLayout((cutoff.dim,))
    a = np.diag(np.sqrt(np.arange(1, cutoff.dim)), 1).astype(complex)
    return {
        "a": OperatorMatrix(layout, a),
        "a_dag": OperatorMatrix(layout, a.conj().T),
        "n": OperatorMatrix(layout, np.diag(np.arange(cutoff.dim)).astype(complex), hermitian=True),
        "identity": OperatorMatrix(layout, np.eye(cutoff.dim), hermitian=True, unitary=True),
    }


class DrivenCavityHamiltonian:
    """Interaction-picture Hamiltonian of driven atoms sharing a detuned cavity.

    H(t) = Omega * sum_j (S_j+ + S_j-) + g * sum_j (e^{-i delta t} a+ S_j- + e^{i delta t} a S_j+)

    on the layout (atom, atom, cavity).  ``coupled`` selects which atoms are
    inside the cavity (and driven); an atom outside it evolves trivially.
    Calling the object returns the OperatorMatrix at time t.
    """

    def __init__(self, params: PhysicalParams, cutoff: FockCutoff, coupled: Sequence[int] = (0, 1)):
        self.params = params
        self.cutoff = cutoff
        self.coupled = tuple(coupled)
        if not set(self.coupled) <= {0, 1}:
            raise ValueError("coupled atoms must be drawn from (0, 1)")
        self.layout = HilbertLayout((2, 2, cutoff.dim))

        at = atomic_operators()
        cav = cavity_operators(cutoff)
        ident = at["identity"]
        ic = cav["identity"]
        drive = np.zeros((self.layout.total_dim,) * 2, dtype=complex)
        lower = np.zeros_like(drive)
        for j in self.coupled:
            factors = [ident, ident]
            factors[j] = at["sigma_x"]
            drive += kron_ops(*factors, ic).entries
            factors[j] = at["S_minus"]
            lower += kron_ops(*factors, cav["a_dag"]).entries
        self._drive = params.omega_rabi * drive
        self._b = params.g * lower                # a+ S-, carries e^{-i delta t}
        self._photons = np.tile(np.arange(cutoff.dim), 4).astype(float)
        self._u0_cache: dict[float, np.ndarray] = {}

    def matrix(self, t: float) -> np.ndarray:
        ph = np.exp(-1j * self.params.delta * t)
        return self._drive + ph * self._b + np.conj(ph) * self._b.conj().T

    def __call__(self, t: float) -> OperatorMatrix:
        return OperatorMatrix(self.layout, self.matrix(t), hermitian=True)

    def step_unitary(self, t: float, dt: float) -> np.ndarray:
        """exp(-i H(t) dt), exact for the frozen Hamiltonian at time t.

        H(t) = R(t) H(0) R(t)^dag with R(t) = exp(-i delta t a+a), so one
        eigendecomposition per step size serves every step.
        """
        u0 = self._u0_cache.get(dt)
        if u0 is None:
            u0 = _expm_eigh(self.matrix(0.0), dt)
            self._u0_cache = {dt: u0}
        r = np.exp(-1j * self.params.delta * t * self._photons)
        return (r[:, None] * u0) * r.conj()[None, :]


def build_HI(params: PhysicalParams, cutoff: FockCutoff, coupled: Sequence[int] = (0, 1)) -> DrivenCavityHamiltonian:
    params.warn_regime()
    return DrivenCavityHamiltonian(params, cutoff, coupled)


def build_H0(params: PhysicalParams) -> OperatorMatrix:
    at = atomic_operators()
    sx, i2 = at["sigma_x"], at["identity"]
    m = params.omega_rabi * (np.kron(sx.entries, i2.entries) + np.kron(i2.entries, sx.entries))
    return OperatorMatrix(TWO_ATOMS, m, hermitian=True)


def build_He(lam) -> OperatorMatrix:
    """Photon-number-independent two-atom Hamiltonian.

    (lam/2) [ sum_j (|e><e| + |g><g|)_j + sum_{j != k} (S_j+ S_k+ + S_j+ S_k- + h.c.) ]
    with the j != k sum running over ordered pairs.
    """
    if isinstance(lam, EffectiveCoupling):
        lam = lam.lam
    at = atomic_operators()
    sp, sm, i2 = at["S_plus"].entries, at["S_minus"].entries, np.eye(2)

    def on(j, op):
        ops = [i2, i2]
        ops[j] = op
        return np.kron(*ops)

    m = on(0, i2) + on(1, i2)
    for j, k in ((0, 1), (1, 0)):
        pair = on(j, sp) @ on(k, sp) + on(j, sp) @ on(k, sm)
        m = m + pair + pair.conj().T
    return OperatorMatrix(TWO_ATOMS, 0.5 * lam * m, hermitian=True)


@functools.lru_cache(maxsize=64)
def evolution_U(schedule: InteractionSchedule = CANONICAL) -> OperatorMatrix:
    """exp(-i H0 t) exp(-i He t) from the products Omega*t and lambda*t."""
    u0 = hermitian_expm(build_H0(PhysicalParams(1.0, 1.0, 1.0)), schedule.omega_t)
    ue = hermitian_expm(build_He(1.0), schedule.lambda_t)
    return u0 @ ue


def build_JC(params: PhysicalParams, cutoff: FockCutoff, include_free: bool = False) -> OperatorMatrix:
    """Resonant atom-cavity Hamiltonian on (atom, cavity).

    The free term omega*(a+a + S_z) commutes with the coupling at resonance,
    so it is dropped unless ``include_free`` is set (then ``params.omega0``
    supplies omega).
    """
    at = atomic_operators()
    cav = cavity_operators(cutoff)
    m = params.g * (np.kron(at["S_plus"].entries, cav["a"].entries)
                    + np.kron(at["S_minus"].entries, cav["a_dag"].entries))
    if include_free:
        if params.omega0 is None:
            raise ValueError("include_free needs params.omega0")
        m = m + params.omega0 * (np.kron(np.eye(2), cav["n"].entries)
                                 + np.kron(at["S_z"].entries, np.eye(cutoff.dim)))
    return OperatorMatrix(HilbertLayout((2, cutoff.dim)), m, hermitian=True)


@functools.lru_cache(maxsize=64)
def jc_evolution(gt: float, cutoff: FockCutoff = FockCutoff(1)) -> OperatorMatrix:
    """Resonant JC propagator for the dimensionless time g*t."""
    return hermitian_expm(build_JC(PhysicalParams(1.0, 1.0, 0.0), cutoff), gt)


def reconstruction_time(coeffs, designee: str) -> float:
    """g*t for the designee's JC step: arccos(|c|/|a|) for Charlie, arccos(|c|/|b|) for Bob."""
    designee = check_designee(designee)
    top = abs(coeffs.a) if designee == "charlie" else abs(coeffs.b)
    c = abs(coeffs.c)
    if top == 0.0 or c > top + 1e-12:
        raise ValueError(f"arccos domain: |c|={c:.6g} exceeds {top:.6g}; invalid W ordering")
    return math.acos(min(1.0, c / top))


def check_designee(designee: str) -> str:
    d = str(designee).lower()
    if d not in DESIGNEES:
        raise ValueError(f"designee must be one of {DESIGNEES}, got {designee!r}")
    return d
