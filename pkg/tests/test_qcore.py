import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from cavityqis import qcore
from cavityqis.model import FockCutoff, PhysicalParams, build_HI, build_JC
from cavityqis.protocols import SecretState, prepare_ghz
from cavityqis.qcore import (
    DensityMatrix,
    HilbertLayout,
    OperatorMatrix,
    RandomSource,
    StateVector,
    apply,
    apply_local,
    atom_ket,
    embed,
    enumerate_branches,
    fidelity,
    hermitian_expm,
    measure,
    mixed_fidelity,
    partial_trace,
    propagate_td,
    tensor,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
ATOM = HilbertLayout((2,))


def bell():
    return (atom_ket("ee") + atom_ket("gg")) * (1 / math.sqrt(2))


def random_state(dims, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=math.prod(dims)) + 1j * rng.normal(size=math.prod(dims))
    return StateVector(dims, v / np.linalg.norm(v))


def random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (m + m.conj().T) / 2


def taylor_expm(m, t, terms=80):
    # scaling and squaring around a plain power series
    a = -1j * t * m
    s = max(0, int(math.ceil(math.log2(max(np.linalg.norm(a, 1), 1e-300)))) + 1)
    a = a / 2 ** s
    out = term = np.eye(len(m), dtype=complex)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


# --- layouts and states ------------------------------------------------------

def test_layout_rejects_bad_dims():
    with pytest.raises(ValueError):
        HilbertLayout((2, 0))
    with pytest.raises(ValueError):
        HilbertLayout(())


def test_state_length_mismatch():
    with pytest.raises(ValueError):
        StateVector((2, 2), [1, 0, 0])


def test_product_basis_order():
    np.testing.assert_array_equal(tensor([atom_ket("e"), atom_ket("g")]).amps, [0, 1, 0, 0])


def test_tensor_of_one_part_is_identity():
    s = random_state((3,), 1)
    assert np.array_equal(tensor([s]).amps, s.amps)


def test_tensor_empty():
    with pytest.raises(ValueError, match="no parts"):
        tensor([])


def test_combined_secret_ghz_state():
    a, b = 0.6, 0.8j
    psi = tensor([SecretState(a, b).ket(), prepare_ghz()])
    assert psi.dims == (2, 2, 2, 2)
    r = 1 / math.sqrt(2)
    expect = {"eeee": a * r, "eggg": 1j * a * r, "geee": b * r, "gggg": 1j * b * r}
    for lab, amp in expect.items():
        assert psi.amplitude(*[qcore.ATOM_LABELS.index(c) for c in lab]) == pytest.approx(amp)
    assert np.count_nonzero(psi.amps) == 4


def test_amps_read_only():
    s = atom_ket("e")
    with pytest.raises(ValueError):
        s.amps[0] = 2


# --- embed ---------------------------------------------------------------------

def test_embed_identity():
    lay = HilbertLayout((2, 3, 2))
    op = embed(OperatorMatrix(ATOM, np.eye(2)), (2,), lay)
    np.testing.assert_array_equal(op.entries, np.eye(12))


def test_embed_sigma_x_on_second_atom():
    x = OperatorMatrix(ATOM, SX, hermitian=True, unitary=True)
    out = apply(embed(x, (1,), (2, 2)), atom_ket("gg"))
    np.testing.assert_allclose(out.amps, atom_ket("ge").amps)


def test_embed_against_kron():
    m = random_hermitian(4, 3)
    op = OperatorMatrix((2, 2), m, hermitian=True)
    lifted = embed(op, (0, 1), (2, 2, 3))
    np.testing.assert_array_equal(lifted.entries, np.kron(m, np.eye(3)))


def test_embed_reversed_targets_swaps_order():
    a = random_hermitian(2, 4)
    b = random_hermitian(2, 5)
    op = OperatorMatrix((2, 2), np.kron(a, b), hermitian=True)
    lifted = embed(op, (1, 0), (2, 2))
    np.testing.assert_allclose(lifted.entries, np.kron(b, a), atol=1e-14)


def test_embed_errors():
    x = OperatorMatrix(ATOM, SX)
    with pytest.raises(ValueError, match="repeated"):
        embed(OperatorMatrix((2, 2), np.eye(4)), (1, 1), (2, 2))
    with pytest.raises(IndexError):
        embed(x, (3,), (2, 2))
    with pytest.raises(ValueError):
        embed(x, (0,), (3, 2))


@given(st.integers(0, 2**31), st.permutations([0, 1, 2]))
def test_embed_matches_apply_local(seed, perm):
    m = random_hermitian(4, seed)
    op = OperatorMatrix((2, 2), m, hermitian=True)
    targets = tuple(perm[:2])
    psi = random_state((2, 2, 2), seed + 1)
    direct = apply(embed(op, targets, psi.layout), psi)
    local = apply_local(op, psi, targets)
    np.testing.assert_allclose(direct.amps, local.amps, atol=1e-12)


# --- apply ----------------------------------------------------------------------

def test_apply_identity_and_x():
    psi = random_state((2,), 9)
    np.testing.assert_allclose(apply(OperatorMatrix(ATOM, np.eye(2), unitary=True), psi).amps, psi.amps)
    out = apply(OperatorMatrix(ATOM, SX, unitary=True), atom_ket("e"))
    np.testing.assert_allclose(out.amps, atom_ket("g").amps)


def test_projector_not_renormalized():
    proj = OperatorMatrix(ATOM, np.diag([1, 0]).astype(complex), hermitian=True)
    out = apply(proj, StateVector(ATOM, [1, 1]).normalized())
    assert out.norm() == pytest.approx(1 / math.sqrt(2))


def test_false_unitary_flag_rejected():
    with pytest.raises(ValueError):
        OperatorMatrix(ATOM, np.diag([1, 0]), unitary=True)


def test_layout_mismatch():
    with pytest.raises(ValueError):
        apply(OperatorMatrix(ATOM, np.eye(2)), atom_ket("ee"))


@given(st.integers(0, 2**31))
def test_unitary_preserves_norm(seed):
    u = hermitian_expm(OperatorMatrix((2, 3), random_hermitian(6, seed), hermitian=True), 1.3)
    psi = random_state((2, 3), seed)
    assert apply(u, psi).norm() == pytest.approx(1.0, abs=1e-12)


# --- partial trace ------------------------------------------------------------------

def test_partial_trace_product():
    rho = partial_trace(atom_ket("eg"), (0,))
    np.testing.assert_allclose(rho.entries, [[1, 0], [0, 0]])


def test_partial_trace_bell():
    np.testing.assert_allclose(partial_trace(bell(), (0,)).entries, np.eye(2) / 2, atol=1e-15)


def test_partial_trace_ghz_pair():
    ghz = prepare_ghz()
    rho = partial_trace(ghz, (1, 2)).entries
    # oracle: sum over the traced atom of |psi_k><psi_k|
    t = ghz.tensor()
    oracle = sum(np.outer(t[k].reshape(-1), t[k].reshape(-1).conj()) for k in range(2))
    np.testing.assert_allclose(rho, oracle, atol=1e-15)
    np.testing.assert_allclose(rho, np.diag([0.5, 0, 0, 0.5]), atol=1e-15)
    assert np.linalg.matrix_rank(rho) == 2


def test_partial_trace_of_density_matches_pure():
    psi = random_state((2, 3, 2), 11)
    a = partial_trace(psi, (2, 0))
    b = partial_trace(psi.dm(), (2, 0))
    np.testing.assert_allclose(a.entries, b.entries, atol=1e-14)


def test_partial_trace_errors():
    with pytest.raises(ValueError):
        partial_trace(atom_ket("ee"), (0, 0))
    with pytest.raises(ValueError):
        partial_trace(atom_ket("ee"), ())
    with pytest.raises(ValueError, match="not normalized"):
        partial_trace(atom_ket("ee") * 2, (0,))


# --- branches ---------------------------------------------------------------------

def test_single_branch():
    bs = enumerate_branches(atom_ket("e"), (0,))
    assert len(bs) == 1 and bs.branches[0].probability == 1.0


def test_enumerate_rejects_unnormalized():
    with pytest.raises(ValueError, match="not normalized"):
        enumerate_branches(atom_ket("ee") * 0.5, (0,))


@given(st.integers(0, 2**31), st.sampled_from([(0,), (1,), (2,), (0, 2), (2, 1), (0, 1, 2)]))
def test_branch_completeness(seed, targets):
    psi = random_state((2, 3, 2), seed)
    bs = enumerate_branches(psi, targets)
    assert math.fsum(b.probability for b in bs) == pytest.approx(1.0, abs=1e-12)
    # weighted collapsed states reassemble the input
    rebuilt = sum((b.collapsed.amps * math.sqrt(b.probability) for b in bs), np.zeros(12, complex))
    np.testing.assert_allclose(rebuilt, psi.amps, atol=1e-12)
    for b in bs:
        assert b.collapsed.is_normalized(1e-12)


def test_keep_measured_false_drops_targets():
    bs = enumerate_branches(random_state((2, 3, 2), 2), (0, 2), keep_measured=False)
    assert all(b.collapsed.dims == (3,) for b in bs)


def test_measure_deterministic_outcome():
    b = measure(atom_ket("g"), (0,), RandomSource(1))
    assert b.outcome == (1,) and b.probability == 1.0


def test_measure_bell_frequencies():
    rng = RandomSource(314)
    n = 10_000
    hits = sum(measure(bell(), (0,), rng).outcome == (0,) for _ in range(n))
    assert abs(hits / n - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_measure_matches_enumeration():
    psi = random_state((2, 2), 77)
    probs = {b.outcome: b.probability for b in enumerate_branches(psi, (0, 1))}
    rng = RandomSource(8)
    n = 10_000
    counts = {}
    for _ in range(n):
        o = measure(psi, (0, 1), rng).outcome
        counts[o] = counts.get(o, 0) + 1
    for o, p in probs.items():
        assert abs(counts.get(o, 0) / n - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_random_source_reproducible():
    a, b = RandomSource(5), RandomSource(5)
    assert [a.random() for _ in range(5)] == [b.random() for _ in range(5)]
    assert RandomSource(5).spawn(3).seed == 8
    with pytest.raises(ValueError):
        RandomSource(-1)


# --- fidelity -----------------------------------------------------------------------

def test_fidelity_basics():
    psi = random_state((2,), 3)
    assert fidelity(psi, psi) == pytest.approx(1.0)
    assert fidelity(atom_ket("e"), atom_ket("g")) == 0.0
    plus = StateVector(ATOM, [1, 1]).normalized()
    assert fidelity(plus, atom_ket("e")) == pytest.approx(0.5)


@given(st.integers(0, 2**31), st.floats(0, 2 * math.pi))
def test_fidelity_global_phase_invariant(seed, phi):
    a, b = random_state((2, 2), seed), random_state((2, 2), seed + 7)
    assert fidelity(a, b * np.exp(1j * phi)) == pytest.approx(fidelity(a, b), abs=1e-12)


def test_pure_vs_mixed_fidelity_agree():
    a, b = random_state((3,), 1), random_state((3,), 2)
    assert fidelity(a, b.dm()) == pytest.approx(fidelity(a, b), abs=1e-12)
    assert mixed_fidelity(a.dm(), b.dm()) == pytest.approx(fidelity(a, b), abs=1e-8)


def test_density_checks():
    with pytest.raises(ValueError):
        DensityMatrix(ATOM, np.diag([0.5, 0.4])).check()


# --- matrix exponential ------------------------------------------------------------

def test_expm_zero():
    u = hermitian_expm(OperatorMatrix(ATOM, np.zeros((2, 2)), hermitian=True), 3.0)
    np.testing.assert_allclose(u.entries, np.eye(2), atol=1e-15)


def test_expm_sigma_x_quarter_turn():
    u = hermitian_expm(OperatorMatrix(ATOM, SX, hermitian=True), math.pi / 2)
    np.testing.assert_allclose(u.entries, -1j * SX, atol=1e-14)


def test_expm_rejects_non_hermitian():
    with pytest.raises(ValueError):
        hermitian_expm(OperatorMatrix(ATOM, np.array([[0, 1], [0, 0]])), 1.0)


@given(st.integers(2, 8), st.integers(0, 2**31), st.floats(-5, 5))
def test_expm_matches_series_oracle(n, seed, t):
    m = random_hermitian(n, seed)
    u = hermitian_expm(OperatorMatrix((n,), m, hermitian=True), t).entries
    np.testing.assert_allclose(u, taylor_expm(m, t), atol=1e-10)
    np.testing.assert_allclose(u, scipy.linalg.expm(-1j * t * m), atol=1e-10)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(n), atol=1e-12)


def test_jc_block_rotation():
    gt_values = [0.0, math.pi / 6, math.pi / 4, math.pi / 2]
    h = build_JC(PhysicalParams(1.0, 1.0, 0.0), FockCutoff(1))
    for gt in gt_values:
        u = hermitian_expm(h, gt).entries
        # basis (e0, e1, g0, g1); block {e0, g1}
        assert abs(u[0, 0]) == pytest.approx(abs(math.cos(gt)), abs=1e-12)
        assert abs(u[3, 0]) == pytest.approx(abs(math.sin(gt)), abs=1e-12)


# --- time-dependent propagation --------------------------------------------------

def test_propagate_constant_matches_expm():
    m = random_hermitian(4, 21)
    op = OperatorMatrix((4,), m, hermitian=True)
    psi = random_state((4,), 22)
    out = propagate_td(lambda t: op, psi, 1.7, 4)
    np.testing.assert_allclose(out.amps, apply(hermitian_expm(op, 1.7), psi).amps, atol=1e-10)


def test_propagate_zero_coupling_is_identity():
    h = build_HI(PhysicalParams(0.0, 1.0, 0.0, regime_factor=0.0), FockCutoff(2))
    psi = random_state((2, 2, 3), 5)
    out = propagate_td(h, psi, 2.0, 8)
    np.testing.assert_allclose(out.amps, psi.amps, atol=1e-12)


def rotating_frame_oracle(h, psi, T):
    # H(t) = R H(0) R^dag, R = exp(-i delta t N): psi(T) = R(T) exp(-i (H(0) - delta N) T) psi
    d = h.params.delta
    n = np.diag(h._photons)
    u = scipy.linalg.expm(-1j * T * (h.matrix(0.0) - d * n))
    return np.exp(-1j * d * T * h._photons) * (u @ psi.amps)


@pytest.mark.parametrize("fast", [True, False])
def test_propagate_against_rotating_frame(fast):
    p = PhysicalParams(1.0, 3.0, 2.0, regime_factor=0.0)
    h = build_HI(p, FockCutoff(3))
    psi = random_state((2, 2, 4), 31)
    # the generic path rebuilds exp(-i H(t) dt) every step
    builder = h if fast else (lambda t: h(t))
    out = propagate_td(builder, psi, 1.0, 64, tol=1e-8)
    np.testing.assert_allclose(out.amps, rotating_frame_oracle(h, psi, 1.0), atol=1e-7)


def test_propagate_columns_match_single():
    p = PhysicalParams(1.0, 3.0, 2.0, regime_factor=0.0)
    h = build_HI(p, FockCutoff(2))
    a, b = random_state((2, 2, 3), 1), random_state((2, 2, 3), 2)
    cols = np.stack([a.amps, b.amps], axis=1) / math.sqrt(2)
    out = propagate_td(h, cols, 1.0, 32, tol=1e-8)
    np.testing.assert_allclose(out[:, 0] * math.sqrt(2), propagate_td(h, a, 1.0, 32, tol=1e-8).amps, atol=1e-12)


def test_propagate_convergence_error():
    p = PhysicalParams(1.0, 50.0, 40.0, regime_factor=0.0)
    h = build_HI(p, FockCutoff(2))
    with pytest.raises(qcore.ConvergenceError):
        propagate_td(h, random_state((2, 2, 3), 3), 10.0, 1, tol=1e-14, max_doublings=2)


def test_propagate_rejects_unnormalized():
    with pytest.raises(ValueError):
        propagate_td(lambda t: OperatorMatrix((2,), np.eye(2), hermitian=True),
                     np.array([1.0, 1.0]), 1.0, 2)
