"""Dense state-vector engine for small composite quantum systems.

Basis convention: every subsystem is indexed row-major in the order given by
``HilbertLayout.dims``.  For atoms, local index 0 is the excited state
``|e>`` and index 1 the ground state ``|g>``; for a cavity mode index ``n`` is
the Fock state ``|n>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Sequence, Union

import numpy as np

E, G = 0, 1
ATOM_LABELS = "eg"

PROB_CUTOFF = 1e-14
NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10


class ConvergenceError(RuntimeError):
    """Raised when step doubling fails to reach the requested tolerance."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HilbertLayout:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValueError("layout needs at least one subsystem")
        if any(d < 2 for d in dims):
            raise ValueError(f"subsystem dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def __len__(self) -> int:
        return len(self.dims)

    def check_index(self, i: int) -> int:
        if not 0 <= i < len(self.dims):
            raise IndexError(f"subsystem index {i} out of range for {len(self.dims)} subsystems")
        return i

    def concat(self, other: "HilbertLayout") -> "HilbertLayout":
        return HilbertLayout(self.dims + other.dims)

    def subset(self, indices: Sequence[int]) -> "HilbertLayout":
        return HilbertLayout(tuple(self.dims[i] for i in indices))


def _as_layout(layout) -> HilbertLayout:
    if isinstance(layout, HilbertLayout):
        return layout
    return HilbertLayout(tuple(layout))


@dataclass(frozen=True)
class StateVector:
    layout: HilbertLayout
    amps: np.ndarray

    def __post_init__(self):
        layout = _as_layout(self.layout)
        amps = _frozen(np.ravel(self.amps))
        if amps.shape[0] != layout.total_dim:
            raise ValueError(f"{amps.shape[0]} amplitudes for total dimension {layout.total_dim}")
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "amps", amps)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.layout.dims

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.layout, self.amps / n)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= tol

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per subsystem."""
        return self.amps.reshape(self.dims)

    def amplitude(self, *local: int) -> complex:
        return complex(self.tensor()[tuple(local)])

    def __mul__(self, scalar) -> "StateVector":
        return StateVector(self.layout, self.amps * scalar)

    __rmul__ = __mul__

    def __add__(self, other: "StateVector") -> "StateVector":
        if other.layout != self.layout:
            raise ValueError("layout mismatch")
        return StateVector(self.layout, self.amps + other.amps)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return self + (-1) * other

    def dm(self) -> "DensityMatrix":
        return DensityMatrix(self.layout, np.outer(self.amps, self.amps.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    layout: HilbertLayout
    entries: np.ndarray

    def __post_init__(self):
        layout = _as_layout(self.layout)
        entries = _frozen(self.entries)
        n = layout.total_dim
        if entries.shape != (n, n):
            raise ValueError(f"density matrix shape {entries.shape} does not match dimension {n}")
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "entries", entries)

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def check(self, tol: float = NORM_TOL, eig_tol: float = 1e-10) -> None:
        m = self.entries
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(self.trace() - 1.0) > tol:
            raise ValueError(f"density matrix trace {self.trace()} != 1")
        if np.min(np.linalg.eigvalsh(m)) < -eig_tol:
            raise ValueError("density matrix has negative eigenvalues")


@dataclass(frozen=True)
class OperatorMatrix:
    layout: HilbertLayout
    entries: np.ndarray
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self):
        layout = _as_layout(self.layout)
        entries = _frozen(self.entries)
        n = layout.total_dim
        if entries.shape != (n, n):
            raise ValueError(f"operator shape {entries.shape} does not match dimension {n}")
        if self.hermitian and np.max(np.abs(entries - entries.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ValueError("operator flagged Hermitian is not Hermitian")
        if self.unitary and np.max(np.abs(entries @ entries.conj().T - np.eye(n)), initial=0.0) > UNITARY_TOL:
            raise ValueError("operator flagged unitary is not unitary")
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.layout, self.entries.conj().T, self.hermitian, self.unitary)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        if other.layout != self.layout:
            raise ValueError("layout mismatch")
        return OperatorMatrix(self.layout, self.entries @ other.entries,
                              unitary=self.unitary and other.unitary)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if other.layout != self.layout:
            raise ValueError("layout mismatch")
        return OperatorMatrix(self.layout, self.entries + other.entries,
                              hermitian=self.hermitian and other.hermitian)

    def scaled(self, c: complex) -> "OperatorMatrix":
        herm = self.hermitian and np.isreal(c)
        unit = self.unitary and abs(abs(c) - 1.0) < 1e-15
        return OperatorMatrix(self.layout, self.entries * c, hermitian=bool(herm), unitary=bool(unit))


@dataclass(frozen=True)
class Branch:
    outcome: tuple[int, ...]
    probability: float
    collapsed: StateVector


@dataclass(frozen=True)
class BranchSet:
    targets: tuple[int, ...]
    branches: tuple[Branch, ...]

    def __iter__(self):
        return iter(self.branches)

    def __len__(self) -> int:
        return len(self.branches)

    def total_probability(self) -> float:
        return math.fsum(b.probability for b in self.branches)

    def by_outcome(self) -> dict[tuple[int, ...], Branch]:
        return {b.outcome: b for b in self.branches}


class RandomSource:
    """Seeded generator (numpy PCG64).

    One instance per worker; parallel workers use ``spawn(worker_index)``,
    which seeds a fresh source with ``seed + worker_index``.
    """

    algorithm = "numpy.random.PCG64"

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def random(self) -> float:
        return float(self._gen.random())

    def normal(self, size=None):
        return self._gen.normal(size=size)

    def spawn(self, worker_index: int) -> "RandomSource":
        return RandomSource((self.seed + int(worker_index)) % 2**64)

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed})"


# --- constructors -----------------------------------------------------------

def basis_state(dims: Sequence[int], local: Sequence[int]) -> StateVector:
    layout = HilbertLayout(tuple(dims))
    if len(local) != len(layout):
        raise ValueError("one local index per subsystem required")
    amps = np.zeros(layout.total_dim, dtype=complex)
    amps[np.ravel_multi_index(tuple(local), layout.dims)] = 1.0
    return StateVector(layout, amps)


def atom_ket(labels: str) -> StateVector:
    """Product of atomic basis states, e.g. ``atom_ket("eg")`` is |e>|g>."""
    try:
        local = [ATOM_LABELS.index(ch) for ch in labels]
    except ValueError:
        raise ValueError(f"atom labels must be drawn from 'e'/'g', got {labels!r}") from None
    return basis_state([2] * len(labels), local)


def fock_ket(n: int, n_max: int) -> StateVector:
    if not 0 <= n <= n_max:
        raise ValueError(f"Fock index {n} outside 0..{n_max}")
    return basis_state([n_max + 1], [n])


def outcome_label(outcome: Sequence[int]) -> str:
    """'e'/'g' string for atomic outcomes."""
    return "".join(ATOM_LABELS[i] for i in outcome)


# --- operations -------------------------------------------------------------

def tensor(parts: Sequence[StateVector]) -> StateVector:
    if not parts:
        raise ValueError("no parts")
    layout = reduce(lambda a, b: a.concat(b), (p.layout for p in parts))
    amps = reduce(np.kron, (p.amps for p in parts))
    return StateVector(layout, amps)


def kron_ops(*ops: OperatorMatrix) -> OperatorMatrix:
    if not ops:
        raise ValueError("no parts")
    layout = reduce(lambda a, b: a.concat(b), (o.layout for o in ops))
    entries = reduce(np.kron, (o.entries for o in ops))
    return OperatorMatrix(layout, entries,
                          hermitian=all(o.hermitian for o in ops),
                          unitary=all(o.unitary for o in ops))


def embed(op: OperatorMatrix, targets: Sequence[int], layout) -> OperatorMatrix:
    """Lift ``op`` acting on ``targets`` (in op's subsystem order) to ``layout``."""
    layout = _as_layout(layout)
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"repeated target index in {targets}")
    for t in targets:
        layout.check_index(t)
    if len(targets) != len(op.layout):
        raise ValueError("number of targets does not match operator subsystems")
    if tuple(layout.dims[t] for t in targets) != op.layout.dims:
        raise ValueError(f"target dims {[layout.dims[t] for t in targets]} do not match operator dims {op.layout.dims}")

    n = len(layout)
    rest = [i for i in range(n) if i not in targets]
    d_rest = math.prod(layout.dims[i] for i in rest)
    full = np.kron(op.entries, np.eye(d_rest))
    # full acts on subsystems ordered (targets..., rest...); permute back
    order = list(targets) + rest
    dims_ordered = [layout.dims[i] for i in order]
    inv = np.argsort(order)
    t = full.reshape(dims_ordered + dims_ordered)
    t = t.transpose(list(inv) + [n + i for i in inv])
    return OperatorMatrix(layout, t.reshape(layout.total_dim, layout.total_dim),
                          hermitian=op.hermitian, unitary=op.unitary)


def apply(op: OperatorMatrix, state: StateVector) -> StateVector:
    if op.layout.total_dim != state.layout.total_dim or op.layout.dims != state.layout.dims:
        raise ValueError(f"operator layout {op.layout.dims} does not match state layout {state.layout.dims}")
    out = op.entries @ state.amps
    if op.unitary:
        n_in, n_out = np.linalg.norm(state.amps), np.linalg.norm(out)
        if abs(n_out - n_in) > UNITARY_TOL:
            raise ArithmeticError(f"unitary application changed the norm by {abs(n_out - n_in):.3e}")
        if n_out > 0 and abs(n_in - 1.0) < 1e-8:
            out = out / n_out
    return StateVector(state.layout, out)


def apply_local(op: OperatorMatrix, state: StateVector, targets: Sequence[int]) -> StateVector:
    """Apply ``op`` to ``targets`` of ``state`` without building the full matrix."""
    targets = tuple(targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"repeated target index in {targets}")
    for t in targets:
        state.layout.check_index(t)
    if tuple(state.dims[t] for t in targets) != op.layout.dims:
        raise ValueError("target dims do not match operator dims")
    k = len(targets)
    psi = np.moveaxis(state.tensor(), targets, range(k))
    shape = psi.shape
    psi = (op.entries @ psi.reshape(op.dim, -1)).reshape(shape)
    out = np.moveaxis(psi, range(k), targets).reshape(-1)
    if op.unitary and abs(np.linalg.norm(out) - state.norm()) > UNITARY_TOL:
        raise ArithmeticError("unitary application changed the norm")
    return StateVector(state.layout, out)


def partial_trace(state: Union[StateVector, DensityMatrix], keep: Sequence[int]) -> DensityMatrix:
    keep = tuple(keep)
    if not keep:
        raise ValueError("empty keep list")
    if len(set(keep)) != len(keep):
        raise ValueError(f"repeated subsystem in keep list {keep}")
    layout = state.layout
    for i in keep:
        layout.check_index(i)
    n = len(layout)
    rest = [i for i in range(n) if i not in keep]
    d_keep = math.prod(layout.dims[i] for i in keep)
    sub = layout.subset(keep)

    if isinstance(state, StateVector):
        m = np.transpose(state.tensor(), list(keep) + rest).reshape(d_keep, -1)
        rho = m @ m.conj().T
    else:
        dims = list(layout.dims)
        t = state.entries.reshape(dims + dims)
        # contract each traced subsystem's row and column axes
        t = np.transpose(t, list(keep) + rest + [n + i for i in keep] + [n + i for i in rest])
        d_rest = math.prod(layout.dims[i] for i in rest)
        t = t.reshape(d_keep, d_rest, d_keep, d_rest)
        rho = np.einsum("arbr->ab", t)
    tr = np.real(np.trace(rho))
    if abs(tr - 1.0) > 1e-10:
        raise ValueError(f"reduced state has trace {tr}; input not normalized")
    return DensityMatrix(sub, rho)


def enumerate_branches(state: StateVector, targets: Sequence[int], *,
                       keep_measured: bool = True, cutoff: float = PROB_CUTOFF) -> BranchSet:
    """Every joint computational-basis outcome of ``targets`` with nonzero probability.

    With ``keep_measured=False`` the measured subsystems are removed from the
    collapsed states (they are in a known basis state after the projection).
    """
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"repeated target index in {targets}")
    for t in targets:
        state.layout.check_index(t)
    n = len(state.layout)
    rest = [i for i in range(n) if i not in targets]
    tdims = tuple(state.dims[t] for t in targets)
    moved = np.transpose(state.tensor(), list(targets) + rest)

    branches = []
    for outcome in np.ndindex(*tdims):
        comp = moved[outcome]
        p = float(np.real(np.vdot(comp, comp)))
        if p <= cutoff:
            continue
        if keep_measured:
            full = np.zeros_like(moved)
            full[outcome] = comp
            amps = np.transpose(full, np.argsort(list(targets) + rest)).reshape(-1)
            collapsed = StateVector(state.layout, amps / math.sqrt(p))
        else:
            if not rest:
                raise ValueError("cannot discard every subsystem")
            collapsed = StateVector(state.layout.subset(rest), comp.reshape(-1) / math.sqrt(p))
        branches.append(Branch(tuple(int(o) for o in outcome), p, collapsed))

    total = math.fsum(b.probability for b in branches)
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"branch probabilities sum to {total}; input not normalized")
    return BranchSet(targets, tuple(branches))


def measure(state: StateVector, targets: Sequence[int], rng: RandomSource, *,
            keep_measured: bool = True) -> Branch:
    """Sample one branch of ``enumerate_branches`` with its Born probability."""
    return sample_branch(enumerate_branches(state, targets, keep_measured=keep_measured), rng)


def sample_branch(bs: BranchSet, rng: RandomSource) -> Branch:
    """Draw one branch of a precomputed BranchSet (one uniform draw)."""
    r = rng.random()
    acc = 0.0
    for b in bs.branches:
        acc += b.probability
        if r < acc:
            return b
    return bs.branches[-1]


def fidelity(a: StateVector, b: Union[StateVector, DensityMatrix]) -> float:
    if a.layout.dims != b.layout.dims:
        raise ValueError(f"layout mismatch: {a.layout.dims} vs {b.layout.dims}")
    if isinstance(b, StateVector):
        return float(abs(np.vdot(a.amps, b.amps)) ** 2)
    return float(np.real(np.vdot(a.amps, b.entries @ a.amps)))


def mixed_fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity, as (sum of singular values of sqrt(rho) sqrt(sigma))^2."""
    if rho.layout.dims != sigma.layout.dims:
        raise ValueError("layout mismatch")
    sv = np.linalg.svd(_psd_sqrt(rho.entries) @ _psd_sqrt(sigma.entries), compute_uv=False)
    return float(min(1.0, np.sum(sv) ** 2))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    # eigenvalues at rounding level would otherwise turn into 1e-8 after the sqrt
    w = np.where(w > 1e-14 * max(w.max(), 1e-300), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def hermitian_expm(h: OperatorMatrix, t: float) -> OperatorMatrix:
    """exp(-i h t) through the eigendecomposition of Hermitian ``h``."""
    m = h.entries
    if not h.hermitian or np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise ValueError("hermitian_expm requires a Hermitian operator")
    return OperatorMatrix(h.layout, _expm_eigh(m, t), unitary=True)


def _expm_eigh(m: np.ndarray, t: float) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


# --- time-dependent propagation --------------------------------------------

HamiltonianBuilder = Callable[[float], OperatorMatrix]


def _step_unitary(h_of_t, t_mid: float, dt: float) -> np.ndarray:
    # builders may supply a cheaper exact midpoint unitary
    fast = getattr(h_of_t, "step_unitary", None)
    if fast is not None:
        return fast(t_mid, dt)
    h = h_of_t(t_mid)
    return hermitian_expm(h, dt).entries


def _midpoint_run(h_of_t, psi: np.ndarray, t0: float, T: float, steps: int) -> np.ndarray:
    dt = T / steps
    for k in range(steps):
        psi = _step_unitary(h_of_t, t0 + (k + 0.5) * dt, dt) @ psi
    return psi


def propagate_td(h_of_t: HamiltonianBuilder, psi0, T: float, steps: int, *,
                 tol: float = 1e-7, max_doublings: int = 12, t0: float = 0.0,
                 return_steps: bool = False):
    """Midpoint piecewise-constant propagation of ``psi0`` from ``t0`` to ``t0 + T``.

    ``psi0`` is a normalized StateVector, or a (dim, k) array whose columns are
    propagated together (e.g. the Schmidt pieces of a state with spectator
    subsystems; their joint norm must be 1).  Steps are doubled until two
    successive runs differ by less than ``tol`` in max-abs amplitude;
    ``ConvergenceError`` is raised after ``max_doublings`` unsuccessful doublings.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    as_state = isinstance(psi0, StateVector)
    cols = psi0.amps[:, None] if as_state else np.asarray(psi0, dtype=complex)
    if cols.ndim == 1:
        cols = cols[:, None]
    norms0 = np.linalg.norm(cols, axis=0)
    if abs(np.linalg.norm(norms0) - 1.0) > 1e-10:
        raise ValueError("initial state not normalized")

    prev = _midpoint_run(h_of_t, cols, t0, T, steps)
    for _ in range(max_doublings):
        steps *= 2
        cur = _midpoint_run(h_of_t, cols, t0, T, steps)
        diff = float(np.max(np.abs(cur - prev)))
        prev = cur
        if diff < tol:
            break
    else:
        raise ConvergenceError(
            f"propagation did not converge to {tol:g} after {max_doublings} doublings "
            f"({steps} steps, last change {diff:.3e})")

    drift = float(np.max(np.abs(np.linalg.norm(prev, axis=0) - norms0)))
    if drift > 1e-8:
        raise ArithmeticError(f"propagation drifted from unit norm by {drift:.3e}")
    if as_state:
        out = StateVector(psi0.layout, prev[:, 0])
    elif np.ndim(psi0) == 1:
        out = prev[:, 0]
    else:
        out = prev
    return (out, steps) if return_steps else out
