import numpy as np
import pytest

from qsubsys.carver import (
    AgentSpec,
    CarveError,
    carve,
    check_causality,
    check_dual_pair,
    check_no_signalling,
    check_non_overlapping,
    embed_representative,
    quotient_state,
    states_equivalent_by_chain,
)
from qsubsys.channels import (
    Channel,
    StateDM,
    apply,
    compose,
    dephase,
    diagonal_unitary,
    erasure_to,
    identity,
    random_cptp,
    unitary,
)
from qsubsys.coherence import sample_basis_preserving, sample_multiphase_covariant
from qsubsys.numerics import (
    dagger,
    kron,
    max_abs,
    random_density_matrix,
    random_pure_state,
    random_unitary,
)
from qsubsys.star_algebra import (
    commutant,
    generate_algebra,
    random_channel_in_algebra,
    trace_out_channel,
)

I2 = np.eye(2, dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)


def tensor_agent():
    return AgentSpec(4, "algebra_generators", matrices=[kron(X, I2), kron(Z, I2)])


# ---------------------------------------------------------------------------
# carve dispatch
# ---------------------------------------------------------------------------

def test_carve_full_monoid_is_whole_system():
    sub = carve(AgentSpec(2, "named_monoid", monoid="full"))
    assert sub.state_space_tag == "full"
    rho = StateDM(2, random_density_matrix(2, 1))
    assert max_abs(quotient_state(sub, rho) - rho.matrix) <= 1e-12


def test_carve_multiphase_is_classical():
    sub = carve(AgentSpec(3, "named_monoid", monoid="multiphase_covariant"))
    assert sub.state_space_tag == "diagonal_probabilities"
    assert sub.state_space_params["dimension"] == 3
    rho = StateDM(3, random_density_matrix(3, 2))
    assert max_abs(sub.quotient(rho) - np.diag(rho.matrix).real) <= 1e-12


def test_carve_algebra_tensor_factor():
    sub = carve(tensor_agent(), seed=0)
    assert sub.state_space_tag == "block_states"
    assert sub.state_space_params["blocks"] == [[2, 2]]


def test_carve_incoherent_and_maximally_incoherent_full():
    for name in ("incoherent", "maximally_incoherent"):
        sub = carve(AgentSpec(3, "named_monoid", monoid=name))
        assert sub.state_space_tag == "full"
        rho = StateDM(3, random_density_matrix(3, 3))
        assert max_abs(sub.quotient(rho) - rho.matrix) <= 1e-12
        assert sub.adversary.sample(np.random.default_rng(0)).equals(identity(3))


def test_carve_basis_preserving_is_trivial():
    sub = carve(AgentSpec(3, "named_monoid", monoid="basis_preserving"))
    assert sub.state_space_tag == "trivial"
    r1 = sub.quotient(StateDM(3, random_density_matrix(3, 4)))
    r2 = sub.quotient(StateDM.basis_state(3, 0))
    assert np.array_equal(r1, r2)


def test_carve_diagonal_group_rep():
    sub = carve(AgentSpec(2, "group_rep", matrices=[Z]), seed=0)
    assert sub.state_space_tag == "spectra_unordered"
    plus = StateDM.pure(np.ones(2) / np.sqrt(2))
    assert max_abs(sub.quotient(plus) - np.array([0.5, 0.5])) <= 1e-12


def test_carve_rejects_unsupported_kinds():
    with pytest.raises(CarveError):
        carve(AgentSpec(2, "channel_generators", channels=[identity(2)]))
    with pytest.raises(CarveError):
        carve(AgentSpec(2, "group_rep", matrices=[X]))
    with pytest.raises(CarveError):
        AgentSpec(2, "named_monoid", monoid="mystery")


def test_carve_rejects_degenerate_diagonal_rep():
    # repeated characters: the commutant mixes the degenerate components, so
    # a unitary inside the -1 eigenspace changes the dephased diagonal of a
    # state it acts on; the unordered-spectra quotient would be ill-posed
    v = np.zeros(3, dtype=complex)
    v[1] = v[2] = 1 / np.sqrt(2)
    mixer = np.eye(3, dtype=complex)
    mixer[1:, 1:] = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    rep_gen = np.diag([1.0, -1.0, -1.0]).astype(complex)
    assert max_abs(mixer @ rep_gen - rep_gen @ mixer) <= 1e-12
    before = np.sort(np.diag(StateDM.basis_state(3, 1).matrix).real)
    after = np.sort(np.diag(StateDM.pure(mixer @ np.eye(3)[1]).matrix).real)
    assert max_abs(before - after) > 0.4
    with pytest.raises(CarveError):
        carve(AgentSpec(3, "group_rep", matrices=[rep_gen]))
    with pytest.raises(CarveError):
        carve(AgentSpec(2, "group_rep", matrices=[np.eye(2, dtype=complex)]))


# ---------------------------------------------------------------------------
# quotients and embeddings
# ---------------------------------------------------------------------------

def test_quotient_constant_on_adversary_orbits():
    rng = np.random.default_rng(0)
    for name in ("multiphase_covariant", "dephasing_covariant", "classical"):
        sub = carve(AgentSpec(3, "named_monoid", monoid=name))
        for s in range(5):
            rho = StateDM(3, random_density_matrix(3, 100 + s))
            b = sub.adversary.sample(rng)
            assert max_abs(sub.quotient(rho) - sub.quotient(b(rho.matrix))) <= 1e-9


def test_embed_round_trips():
    # diagonal probabilities
    sub = carve(AgentSpec(3, "named_monoid", monoid="dephasing_covariant"))
    p = np.array([0.5, 0.3, 0.2])
    emb = embed_representative(sub, p)
    assert max_abs(emb.matrix - np.diag(p)) <= 1e-12
    assert max_abs(sub.quotient(emb) - p) <= 1e-12
    # block states: embed pairs the block with a maximally mixed factor
    sub = carve(tensor_agent(), seed=1)
    rho = StateDM(4, random_density_matrix(4, 7))
    q = sub.quotient(rho)
    emb = embed_representative(sub, q)
    assert max_abs(sub.quotient(emb) - q) <= 1e-9
    # spectra embed sorted descending
    sub = carve(AgentSpec(2, "group_rep", matrices=[Z]), seed=0)
    emb = embed_representative(sub, np.array([0.3, 0.7]))
    assert max_abs(emb.matrix - np.diag([0.7, 0.3])) <= 1e-12


def test_projection_onto_representatives_is_idempotent():
    sub = carve(tensor_agent(), seed=2)
    for s in range(5):
        rho = StateDM(4, random_density_matrix(4, 200 + s))
        once = embed_representative(sub, sub.quotient(rho))
        twice = embed_representative(sub, sub.quotient(once))
        assert max_abs(once.matrix - twice.matrix) <= 1e-9


def test_restriction_is_monoid_homomorphism_on_samples():
    sub = carve(AgentSpec(3, "named_monoid", monoid="multiphase_covariant"))
    t1 = sample_multiphase_covariant(3, 11)
    t2 = sample_multiphase_covariant(3, 12)
    lhs = sub.restriction(compose(t1, t2))
    rhs = sub.restriction(t1) @ sub.restriction(t2)
    assert max_abs(lhs - rhs) <= 1e-9


def test_restriction_rejects_outside_double_commutant():
    sub = carve(AgentSpec(2, "named_monoid", monoid="dephasing_covariant"))
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    with pytest.raises(CarveError):
        sub.restriction(unitary(h))


def test_quotient_well_posed_on_equivalent_pairs():
    # representatives connected by an adversary action restrict identically
    sub = carve(AgentSpec(3, "named_monoid", monoid="multiphase_covariant"))
    rng = np.random.default_rng(5)
    t = sample_multiphase_covariant(3, 21)
    for s in range(5):
        rho = StateDM(3, random_density_matrix(3, 300 + s))
        b = sub.adversary.sample(rng)
        lhs = sub.quotient(t(b(rho.matrix)))
        rhs = sub.quotient(t(rho.matrix))
        assert max_abs(lhs - rhs) <= 1e-9


# ---------------------------------------------------------------------------
# chain oracle
# ---------------------------------------------------------------------------

def test_chain_equal_states_length_one():
    rho = StateDM(2, random_density_matrix(2, 1))
    result = states_equivalent_by_chain(rho, rho, [identity(2)])
    assert result.status == "found"
    assert len(result.certificate.links) == 1
    assert result.certificate.verify() <= 1e-10


def test_chain_algebra_equal_partial_traces_via_d0():
    agent = tensor_agent()
    sub = carve(agent, seed=3)
    dec = sub.decomposition
    sigma = random_density_matrix(2, 41)
    rho1 = StateDM(4, dagger(dec.unitary) @ kron(sigma, random_density_matrix(2, 42)) @ dec.unitary)
    rho2 = StateDM(4, dagger(dec.unitary) @ kron(sigma, random_density_matrix(2, 43)) @ dec.unitary)
    d0 = trace_out_channel(dec)
    result = states_equivalent_by_chain(rho1, rho2, [d0], max_words=2)
    assert result.status == "found"
    assert result.certificate.verify() <= 1e-9
    # independent link-by-link check using only channel operations
    for i, link in enumerate(result.certificate.links):
        lhs = apply(link.forward, result.certificate.states[i])
        rhs = apply(link.backward, result.certificate.states[i + 1])
        assert max_abs(lhs.matrix - rhs.matrix) <= 1e-9


def test_chain_diagonal_unitary_orbit():
    psi = random_pure_state(3, 51)
    theta = np.array([0.4, 1.3, 2.2])
    u = diagonal_unitary(theta)
    psi2 = u.kraus[0] @ psi
    result = states_equivalent_by_chain(
        StateDM.pure(psi), StateDM.pure(psi2), [u], max_words=3)
    assert result.status == "found"
    assert result.certificate.verify() <= 1e-9


def test_chain_not_found_vs_bounds():
    rho = StateDM.basis_state(2, 0)
    sigma = StateDM.basis_state(2, 1)
    # the closed monoid {I, dephase} cannot connect distinct basis states
    result = states_equivalent_by_chain(rho, sigma, [dephase(2)], max_words=4)
    assert result.status == "not_found"
    # an order-12 phase rotation cannot close within a 2-word budget
    u = diagonal_unitary([0.0, 2 * np.pi / 12])
    result = states_equivalent_by_chain(rho, sigma, [u], max_words=2)
    assert result.status == "bounds_exceeded"


# ---------------------------------------------------------------------------
# no-signalling, causality, dual pairs
# ---------------------------------------------------------------------------

def test_no_signalling_reports():
    rng = np.random.default_rng(9)
    sub = carve(tensor_agent(), seed=4)
    advs = [sub.adversary.sample(rng) for _ in range(5)]
    states = [StateDM(4, random_density_matrix(4, 500 + s)) for s in range(5)]
    report = check_no_signalling(sub, advs, states)
    assert report.passed and report.max_deviation <= 1e-8
    assert report.checks == 25
    # identity adversary deviates by exactly zero
    report = check_no_signalling(sub, [identity(4)], states)
    assert report.max_deviation == 0.0


def test_causality_witnesses():
    states = [StateDM(3, random_density_matrix(3, 600 + s)) for s in range(4)]
    erasure = erasure_to(StateDM(3, random_density_matrix(3, 7)))
    others = [random_cptp(3, 8), unitary(random_unitary(3, 9))]
    assert check_causality(others + [erasure], states)
    # unitary-only samples cannot collapse states with different spectra
    assert not check_causality(others, states)
    assert check_causality(others, states[:1])


def test_dual_pairs_and_overlap():
    a = generate_algebra([kron(X, I2), kron(Z, I2)])
    b = generate_algebra([kron(I2, X), kron(I2, Z)])
    assert check_dual_pair(a, b)
    assert check_non_overlapping(a)
    diags = generate_algebra([np.diag([1.0, 2.0]).astype(complex)])
    assert check_dual_pair(diags, diags)
    assert not check_non_overlapping(diags)
    trivial = generate_algebra([], dim=2)
    full = generate_algebra([X, Z])
    assert check_dual_pair(trivial, full)
    assert check_non_overlapping(full)


def test_carve_full_quotient_identity_in_class():
    # with the full monoid the commutant is trivial: classes are singletons
    sub = carve(AgentSpec(2, "named_monoid", monoid="full"))
    rho = StateDM(2, random_density_matrix(2, 77))
    assert max_abs(sub.quotient(rho) - rho.matrix) == 0.0
