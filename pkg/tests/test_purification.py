import numpy as np
import pytest

from qsubsys.channels import StateDM, unitary
from qsubsys.group_rep import adversarial_group, close_group, isotypic_decompose
from qsubsys.numerics import (
    dagger,
    max_abs,
    random_density_matrix,
    random_pure_state,
    random_unitary,
)
from qsubsys.purification import (
    NotPurifiableError,
    check_regularity_chain,
    connect_purifications,
    extend_isometry,
    purify,
    reduced_block_states,
    unitary_connecting_pure_states,
)
from qsubsys.star_algebra import model_decomposition

Z = np.diag([1.0, -1.0]).astype(complex)


def rand_reduced(blocks, seed, ranks=None):
    rng = np.random.default_rng(seed)
    weights = rng.random(len(blocks)) + 0.1
    weights /= weights.sum()
    out = []
    for i, (da, db) in enumerate(blocks):
        rank = min(da, db) if ranks is None else ranks[i]
        out.append((weights[i], random_density_matrix(da, rng, rank=rank)))
    return out


# ---------------------------------------------------------------------------
# purify
# ---------------------------------------------------------------------------

def test_pure_block_state_gives_product_purification():
    blocks = [(2, 3)]
    psi_a = random_pure_state(2, 0)
    reduced = [(1.0, np.outer(psi_a, psi_a.conj()))]
    wit = purify(blocks, reduced)
    p, rho = reduced_block_states(blocks, wit.global_pure)[0]
    assert p == pytest.approx(1.0)
    assert max_abs(rho - reduced[0][1]) <= 1e-10
    # product form: the coefficient matrix has rank one
    c = wit.global_pure.reshape(2, 3)
    assert np.linalg.matrix_rank(c, tol=1e-9) == 1


def test_maximally_mixed_qubit_purifies_to_bell_type_vector():
    wit = purify([(2, 2)], [(1.0, np.eye(2) / 2)])
    c = wit.global_pure.reshape(2, 2)
    s = np.linalg.svd(c, compute_uv=False)
    assert max_abs(s - np.array([1, 1]) / np.sqrt(2)) <= 1e-10


def test_purify_rejects_rank_exceeding_multiplicity():
    # full-rank state on a (3,2) block cannot be purified there
    with pytest.raises(NotPurifiableError):
        purify([(3, 2)], [(1.0, random_density_matrix(3, 1))])
    # rank 2 fits the bound min(3, 2) = 2
    purify([(3, 2)], [(1.0, random_density_matrix(3, 2, rank=2))])


def test_purify_round_trip_many_shapes():
    shapes = [[(2, 2)], [(1, 1), (2, 2)], [(2, 3), (1, 2)], [(3, 3)], [(1, 2), (1, 1), (2, 2)]]
    for i, blocks in enumerate(shapes):
        reduced = rand_reduced(blocks, 100 + i)
        wit = purify(blocks, reduced, seed=i)
        back = reduced_block_states(blocks, wit.global_pure)
        for (p, rho), (p2, rho2) in zip(reduced, back):
            assert abs(p - p2) <= 1e-9
            assert max_abs(rho - rho2) <= 1e-9


def test_purify_weight_validation():
    with pytest.raises(ValueError):
        purify([(2, 2)], [(0.7, np.eye(2) / 2)])


def test_purify_round_trip_in_ambient_frame():
    # block decomposition with a nontrivial change of basis: the global pure
    # vector lives in the original coordinates, not the model ones
    from qsubsys.numerics import kron, random_unitary
    from qsubsys.star_algebra import block_decompose, generate_algebra

    X = np.array([[0, 1], [1, 0]], dtype=complex)
    q = random_unitary(4, 5)
    gens = [q @ kron(m, np.eye(2)) @ dagger(q) for m in (X, Z)]
    dec = block_decompose(generate_algebra(gens), seed=1)
    assert dec.blocks == [(2, 2)]
    reduced = [(1.0, random_density_matrix(2, 6))]
    wit = purify(dec, reduced)
    p, rho = reduced_block_states(dec, wit.global_pure)[0]
    assert abs(p - 1.0) <= 1e-9
    assert max_abs(rho - reduced[0][1]) <= 1e-9
    # and essential uniqueness holds in the same frame
    wit2 = purify(dec, reduced, seed=7)
    con = connect_purifications(dec, wit.global_pure, wit2.global_pure)
    assert np.linalg.norm(con.connecting_unitary @ wit.global_pure - wit2.global_pure) <= 1e-8
    assert dec.commutant_pattern_residual(con.connecting_unitary) <= 1e-8


# ---------------------------------------------------------------------------
# essential uniqueness
# ---------------------------------------------------------------------------

def test_connect_identical_purifications_gives_identity_direction():
    blocks = [(2, 2)]
    wit = purify(blocks, rand_reduced(blocks, 3))
    con = connect_purifications(blocks, wit.global_pure, wit.global_pure)
    assert max_abs(con.connecting_unitary @ wit.global_pure - wit.global_pure) <= 1e-10


def test_connect_independent_purifications():
    shapes = [[(2, 2)], [(1, 2), (2, 2)], [(2, 3), (1, 1)], [(3, 4)]]
    for i, blocks in enumerate(shapes):
        reduced = rand_reduced(blocks, 200 + i)
        w1 = purify(blocks, reduced, seed=None)
        w2 = purify(blocks, reduced, seed=900 + i)
        con = connect_purifications(blocks, w1.global_pure, w2.global_pure)
        u = con.connecting_unitary
        assert max_abs(dagger(u) @ u - np.eye(u.shape[0])) <= 1e-9
        assert np.linalg.norm(u @ w1.global_pure - w2.global_pure) <= 1e-8
        # the connecting unitary acts on multiplicity factors only
        dec = model_decomposition(blocks)
        assert dec.commutant_pattern_residual(u) <= 1e-8


def test_connect_rejects_different_reduced_states():
    blocks = [(2, 2)]
    w1 = purify(blocks, rand_reduced(blocks, 5))
    w2 = purify(blocks, rand_reduced(blocks, 6))
    with pytest.raises(ValueError):
        connect_purifications(blocks, w1.global_pure, w2.global_pure)


def test_coherent_superposition_connecting_unitary_is_diagonal_phase():
    # purifications of a classical distribution differ by diagonal phases
    d = 4
    rng = np.random.default_rng(7)
    p = rng.random(d) + 0.1
    p /= p.sum()
    theta = rng.uniform(0, 2 * np.pi, d)
    theta2 = rng.uniform(0, 2 * np.pi, d)
    psi = np.sqrt(p) * np.exp(1j * theta)
    psi2 = np.sqrt(p) * np.exp(1j * theta2)
    blocks = [(1, 1)] * d
    con = connect_purifications(blocks, psi, psi2)
    u = con.connecting_unitary
    expected = np.diag(np.exp(1j * (theta2 - theta)))
    assert max_abs(u - expected) <= 1e-9


def test_connecting_unitary_is_adversarial_group_member():
    # phase-flip scenario: purifications of equal spectra connect inside G_B
    rep = close_group([Z])
    iso = isotypic_decompose(rep, seed=0)
    adv = adversarial_group(iso)
    p = np.array([0.3, 0.7])
    psi = np.sqrt(p)
    psi2 = np.sqrt(p) * np.exp(1j * np.array([0.9, 2.1]))
    con = connect_purifications(iso, psi, psi2)
    assert adv.contains(con.connecting_unitary)


# ---------------------------------------------------------------------------
# isometry extension
# ---------------------------------------------------------------------------

def test_extend_identity_pair():
    v = np.eye(3, dtype=complex)[:, :2]
    direction, w = extend_isometry(v, v)
    assert direction == "v_prime = w v"
    assert max_abs(w @ v - v) <= 1e-12


def test_extend_truncated_shift_vs_embedding():
    # shift |n> -> |n+1> on C^6 against the identity embedding
    v = np.zeros((6, 5), dtype=complex)
    for n in range(5):
        v[n + 1, n] = 1.0
    v_prime = np.eye(6, dtype=complex)[:, :5]
    direction, w = extend_isometry(v, v_prime)
    assert direction == "v_prime = w v"
    assert max_abs(w @ v - v_prime) <= 1e-12
    assert max_abs(dagger(w) @ w - np.eye(6)) <= 1e-12


def test_extend_random_isometries():
    rng = np.random.default_rng(11)
    for seed in range(10):
        g1 = rng.standard_normal((7, 3)) + 1j * rng.standard_normal((7, 3))
        g2 = rng.standard_normal((7, 3)) + 1j * rng.standard_normal((7, 3))
        v, _ = np.linalg.qr(g1)
        v2, _ = np.linalg.qr(g2)
        direction, w = extend_isometry(v, v2)
        assert max_abs(dagger(w) @ w - np.eye(7)) <= 1e-9
        assert max_abs(w @ v - v2) <= 1e-9


def test_extend_rejects_non_isometry():
    with pytest.raises(ValueError):
        extend_isometry(np.ones((3, 2)), np.ones((3, 2)))


# ---------------------------------------------------------------------------
# regularity collapse and transitivity
# ---------------------------------------------------------------------------

def test_regularity_equal_states_identity_witness():
    psi = random_pure_state(3, 1)
    wit = check_regularity_chain(psi, psi, [unitary(random_unitary(3, 2))])
    assert wit is not None
    assert wit.residual <= 1e-9


def test_regularity_collapses_unitary_chain():
    u1 = unitary(random_unitary(3, 5))
    u2 = unitary(random_unitary(3, 6))
    psi = random_pure_state(3, 7)
    phi = u2.kraus[0] @ (u1.kraus[0] @ psi)
    wit = check_regularity_chain(psi, phi, [u1, u2], max_words=3)
    assert wit is not None
    assert wit.direction == "psi_prime = W psi"
    assert wit.residual <= 1e-9


def test_regularity_collapses_length_three_chain():
    # with single-letter words only, psi -> u1 psi -> u2 u1 psi needs an
    # intermediate pool state, so the found chain has two links to collapse
    u1 = unitary(random_unitary(3, 21))
    u2 = unitary(random_unitary(3, 22))
    psi = random_pure_state(3, 23)
    phi = u2.kraus[0] @ (u1.kraus[0] @ psi)
    wit = check_regularity_chain(psi, phi, [u1, u2], max_words=1)
    assert wit is not None
    assert wit.residual <= 1e-9


def test_regularity_not_found_within_bounds():
    psi = np.eye(2)[:, 0]
    phi = np.eye(2)[:, 1]
    wit = check_regularity_chain(psi, phi, [unitary(Z)], max_words=2)
    assert wit is None


def test_closed_system_transitivity():
    for d in (2, 3, 4):
        for seed in range(5):
            psi = random_pure_state(d, 100 * d + seed)
            phi = random_pure_state(d, 200 * d + seed)
            u = unitary_connecting_pure_states(psi, phi)
            assert max_abs(dagger(u) @ u - np.eye(d)) <= 1e-9
            assert np.linalg.norm(u @ psi - phi) <= 1e-9
