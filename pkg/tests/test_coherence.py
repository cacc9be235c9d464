import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsubsys.channels import (
    Channel,
    StateDM,
    channels_commute,
    classical_from_stochastic,
    compose,
    dephase,
    diagonal_unitary,
    erasure_to,
    identity,
    permutation_unitary,
    random_cptp,
    unitary,
)
from qsubsys.coherence import (
    basis_preserving_commutant_dimension,
    channel_fixing_only_identity,
    classical_quotient_channel,
    classify_monoid,
    is_basis_preserving,
    is_classical,
    is_dephasing_covariant,
    is_incoherent_kraus,
    is_maximally_incoherent,
    is_multiphase_covariant,
    is_phase_covariant,
    is_physically_incoherent_kraus_form,
    is_strictly_incoherent,
    multiphase_pattern_residual,
    multiphase_violation_witness,
    sample_basis_preserving,
    sample_multiphase_covariant,
)
from qsubsys.numerics import max_abs, random_density_matrix, random_pure_state

X = np.array([[0, 1], [1, 0]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def random_stochastic(d, seed):
    rng = np.random.default_rng(seed)
    p = rng.random((d, d))
    return p / p.sum(axis=0, keepdims=True)


# ---------------------------------------------------------------------------
# individual predicates
# ---------------------------------------------------------------------------

def test_dephase_satisfies_all_covariance_predicates():
    d = dephase(3)
    assert is_basis_preserving(d)
    assert is_multiphase_covariant(d, cross_validate=True)
    assert is_dephasing_covariant(d)
    assert is_phase_covariant(d)
    assert is_classical(d)
    assert is_strictly_incoherent(d)
    assert is_incoherent_kraus(d)
    assert is_maximally_incoherent(d)


def test_diagonal_unitary_is_basis_preserving():
    t = diagonal_unitary([0.3, 1.1])
    assert is_basis_preserving(t)
    assert not is_basis_preserving(unitary(X))


def test_classical_channels_are_multiphase_covariant():
    for seed in range(5):
        t = classical_from_stochastic(random_stochastic(3, seed))
        assert is_multiphase_covariant(t, cross_validate=True)


def test_hadamard_fails_multiphase_pattern():
    t = unitary(H)
    # oracle: the Choi of a unitary channel is |vec_r(U)><vec_r(U)| whose
    # entry ((0,0),(0,1)) = H[0,0] conj(H[0,1]) = 1/2 is off-pattern
    assert abs(t.choi[0, 1]) == pytest.approx(0.5)
    assert multiphase_pattern_residual(t) >= 0.4
    assert not is_multiphase_covariant(t)


def test_permutation_is_strictly_and_physically_incoherent():
    t = permutation_unitary([2, 0, 1])
    assert is_strictly_incoherent(t)
    assert is_physically_incoherent_kraus_form(t)
    assert is_incoherent_kraus(t)


def test_probe_channel_incoherent_but_not_dephasing_covariant():
    plus = np.ones(2) / np.sqrt(2)
    c = channel_fixing_only_identity(plus)
    assert is_incoherent_kraus(c)
    assert is_maximally_incoherent(c)
    # oracle: evaluate both sides of D . C = C . D on a basis of inputs
    dp = dephase(2)
    disagrees = False
    for j in range(2):
        for k in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[j, k] = 1.0
            if max_abs(dp(c(e)) - c(dp(e))) > 1e-9:
                disagrees = True
    assert disagrees
    assert not is_dephasing_covariant(c)


def test_random_cptp_is_not_multiphase_covariant():
    t = random_cptp(3, 7)
    assert not is_multiphase_covariant(t)


# ---------------------------------------------------------------------------
# samplers and the duality theorem
# ---------------------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_sampled_multiphase_passes_predicate(seed, d):
    t = sample_multiphase_covariant(d, seed)
    assert is_multiphase_covariant(t, cross_validate=True)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_sampled_basis_preserving_passes_predicate(seed, d):
    t = sample_basis_preserving(d, seed)
    assert is_basis_preserving(t)


def test_degenerate_sampler_identity():
    # p = 0 and a single Kraus M1 = I is the identity channel
    t = Channel([np.eye(3, dtype=complex)])
    assert is_multiphase_covariant(t)
    assert is_basis_preserving(t)


def test_duality_sampled_pairs_commute():
    for d in (2, 3):
        for seed in range(10):
            m = sample_multiphase_covariant(d, 100 + seed)
            b = sample_basis_preserving(d, 200 + seed)
            assert max_abs(m.superop @ b.superop - b.superop @ m.superop) <= 1e-10


def test_basis_preserving_fixes_diagonal_entries():
    for seed in range(5):
        b = sample_basis_preserving(3, 300 + seed)
        rho = random_density_matrix(3, 400 + seed)
        out = b(rho)
        assert max_abs(np.diag(out) - np.diag(rho)) <= 1e-10


def test_violation_witness_detects_off_pattern_channels():
    from qsubsys.numerics import random_unitary

    for seed in range(5):
        t = unitary(random_unitary(3, seed))
        assert not is_multiphase_covariant(t)
        w = multiphase_violation_witness(t)
        assert is_basis_preserving(w)
        assert not channels_commute(t, w)
        comm = max_abs(t.superop @ w.superop - w.superop @ t.superop)
        assert comm >= 1e-4


def test_violation_witness_rejects_covariant_channel():
    with pytest.raises(ValueError):
        multiphase_violation_witness(dephase(2))


# ---------------------------------------------------------------------------
# classical quotient
# ---------------------------------------------------------------------------

def test_classical_quotient_identity_and_permutation():
    assert max_abs(classical_quotient_channel(identity(3)) - np.eye(3)) <= 1e-12
    p = classical_quotient_channel(permutation_unitary([1, 2, 0]))
    expected = np.zeros((3, 3))
    for k, j in enumerate([1, 2, 0]):
        expected[j, k] = 1.0
    assert max_abs(p - expected) <= 1e-12


def test_classical_quotient_of_sampled_multiphase():
    for seed in range(5):
        t = sample_multiphase_covariant(3, 500 + seed)
        p = classical_quotient_channel(t)
        assert max_abs(p.sum(axis=0) - 1.0) <= 1e-10
        assert p.min() >= -1e-12
        for k in range(3):
            e = np.zeros((3, 3), dtype=complex)
            e[k, k] = 1.0
            assert max_abs(p[:, k] - np.diag(t(e)).real) <= 1e-12


def test_classical_quotient_is_multiplicative_for_dephasing_covariant():
    for seed in range(5):
        t1 = sample_multiphase_covariant(3, 600 + seed)
        t2 = classical_from_stochastic(random_stochastic(3, 700 + seed))
        lhs = classical_quotient_channel(compose(t1, t2))
        rhs = classical_quotient_channel(t1) @ classical_quotient_channel(t2)
        assert max_abs(lhs - rhs) <= 1e-10


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def test_classify_single_dephase_is_undetermined():
    report = classify_monoid([dephase(2)])
    assert report.dephasing_covariant
    assert report.classical_subsystem_verdict == "undetermined"


def test_classify_classical_monoid():
    d = 3
    gens = [classical_from_stochastic(random_stochastic(d, s)) for s in range(3)]
    gens += [erasure_to(StateDM.basis_state(d, k)) for k in range(d)]
    report = classify_monoid(gens)
    assert report.classical_subsystem_verdict == f"classical({d})"
    assert report.classical


def test_classify_attested_multiphase_monoid():
    gens = [sample_multiphase_covariant(3, s) for s in range(4)]
    report = classify_monoid(gens, contains_classical_channels=True)
    assert report.classical_subsystem_verdict == "classical(3)"
    assert report.multiphase_covariant


def test_classify_incoherent_probe_family_is_whole_system():
    rng = np.random.default_rng(5)
    gens = [channel_fixing_only_identity(random_pure_state(3, rng)) for _ in range(8)]
    gens.append(channel_fixing_only_identity(np.ones(3) / np.sqrt(3)))
    report = classify_monoid(gens, contains_classical_channels=True)
    assert report.classical_subsystem_verdict == "whole_system"
    assert not report.dephasing_covariant
    assert report.incoherent


def test_basis_preserving_commutant_dimension_extremes():
    assert basis_preserving_commutant_dimension([identity(2)]) == 4
    rng = np.random.default_rng(9)
    probes = [channel_fixing_only_identity(random_pure_state(2, rng)) for _ in range(6)]
    assert basis_preserving_commutant_dimension(probes) == 1


def test_report_implication_lattice():
    samples = [dephase(3), permutation_unitary([1, 0, 2]), identity(3),
               sample_multiphase_covariant(3, 1), sample_basis_preserving(3, 2),
               classical_from_stochastic(random_stochastic(3, 3)),
               random_cptp(3, 4), random_cptp(3, 5)]
    for t in samples:
        report = classify_monoid([t])
        if report.basis_preserving:
            assert is_dephasing_covariant(t)
        if report.multiphase_covariant:
            assert report.phase_covariant
        if report.classical:
            assert report.dephasing_covariant
