"""Carving subsystems out of a system from a set of operations.

An agent is a set of operations on a d-dimensional quantum system; its
maximal adversary is everything commuting with them.  Two states are
equivalent for the agent when a finite chain of adversary degradations
connects them; the subsystem is the quotient.  This module dispatches each
supported agent kind to its theorem-backed quotient:

* algebra generators -> block decomposition, partial trace over the commutant;
* the classical coherence monoids -> diagonal probability vectors with
  column-stochastic reduced transformations;
* incoherent / maximally incoherent monoids -> the whole system (their
  commutant is the identity alone);
* basis-preserving channels -> the trivial subsystem (their commutant holds
  every erasure onto a basis state, collapsing all states into one class);
* diagonal-unitary group representations (closed-system reading, pure-state
  domain) -> unordered spectra with a trivial transformation monoid.

A bounded breadth-first chain search provides the generic (one-sided)
equivalence oracle with verifiable certificates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channels import (
    Channel,
    StateDM,
    apply,
    compose,
    identity,
)
from .coherence import (
    classical_quotient_channel,
    is_multiphase_covariant,
    sample_basis_preserving,
)
from .group_rep import adversarial_group, close_group, isotypic_decompose
from .numerics import (
    DEFAULT_TOL,
    Tolerance,
    _as_rng,
    dagger,
    kron,
    max_abs,
    random_unitary,
)
from .star_algebra import (
    BlockDecomposition,
    StarAlgebra,
    block_decompose,
    block_direct_sum,
    center,
    commutant,
    generate_algebra,
    partial_trace_over_commutant,
    random_channel_in_algebra,
    restrict_homomorphism,
    spans_equal,
)

__all__ = [
    "AgentSpec",
    "SubsystemDescription",
    "AdversaryDescription",
    "ChainLink",
    "ChainCertificate",
    "ChainSearchResult",
    "CarveError",
    "NAMED_MONOIDS",
    "CLASSICAL_MONOIDS",
    "carve",
    "quotient_state",
    "states_equivalent_by_chain",
    "check_no_signalling",
    "check_causality",
    "check_dual_pair",
    "check_non_overlapping",
    "embed_representative",
]

CLASSICAL_MONOIDS = (
    "multiphase_covariant",
    "dephasing_covariant",
    "strictly_incoherent",
    "phase_covariant",
    "classical",
)

NAMED_MONOIDS = CLASSICAL_MONOIDS + (
    "basis_preserving",
    "incoherent",
    "maximally_incoherent",
    "full",
)


class CarveError(ValueError):
    """Unsupported agent kind or malformed payload."""


@dataclass(frozen=True)
class AgentSpec:
    """A set of operations, given as generators of one of the known kinds."""

    dim: int
    kind: str  # algebra_generators | channel_generators | group_rep | named_monoid
    matrices: list = None
    channels: list = None
    monoid: str = None

    def __post_init__(self):
        if self.kind == "algebra_generators":
            if self.matrices is None:
                raise CarveError("algebra_generators needs matrices")
        elif self.kind == "group_rep":
            if not self.matrices:
                raise CarveError("group_rep needs generator matrices")
        elif self.kind == "channel_generators":
            if not self.channels:
                raise CarveError("channel_generators needs channels")
        elif self.kind == "named_monoid":
            if self.monoid not in NAMED_MONOIDS:
                raise CarveError(f"unknown monoid name {self.monoid!r}")
        else:
            raise CarveError(f"unknown agent kind {self.kind!r}")


@dataclass(frozen=True)
class AdversaryDescription:
    text: str
    sampler: Callable = field(repr=False, default=None)

    def sample(self, rng) -> Channel:
        if self.sampler is None:
            raise CarveError("adversary has no sampler")
        return self.sampler(rng)


@dataclass(frozen=True)
class SubsystemDescription:
    """The carved subsystem: state-space tag, quotient map, restriction map."""

    source_dim: int
    state_space_tag: str  # block_states | diagonal_probabilities | spectra_unordered | full | trivial
    state_space_params: dict
    quotient: Callable = field(repr=False)   # StateDM | ndarray -> canonical ndarray
    restriction: Callable = field(repr=False)  # Channel -> canonical ndarray
    adversary: AdversaryDescription
    decomposition: BlockDecomposition | None = field(default=None, repr=False)
    algebra: StarAlgebra | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "source_dim": self.source_dim,
            "state_space": {"tag": self.state_space_tag, **self.state_space_params},
            "adversary": self.adversary.text,
        }


def _as_matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, StateDM) else np.asarray(rho, dtype=np.complex128)


# ---------------------------------------------------------------------------
# carve: the dispatch table
# ---------------------------------------------------------------------------

def carve(agent: AgentSpec, seed=0, tol: Tolerance = DEFAULT_TOL) -> SubsystemDescription:
    """Carve the subsystem belonging to a supported agent kind.

    The dispatch table is closed: agent kinds without a theorem-backed
    quotient are rejected rather than approximated (the generic chain oracle
    remains available for those).
    """
    if agent.kind == "algebra_generators":
        return _carve_algebra(agent, seed, tol)
    if agent.kind == "group_rep":
        return _carve_diagonal_group(agent, seed, tol)
    if agent.kind == "named_monoid":
        return _carve_named(agent, seed, tol)
    raise CarveError(f"no theorem-backed subsystem for agent kind {agent.kind!r}; "
                     f"use the chain-equivalence oracle instead")


def _carve_algebra(agent: AgentSpec, seed, tol: Tolerance) -> SubsystemDescription:
    algebra = generate_algebra(agent.matrices, dim=agent.dim, tol=tol)
    dec = block_decompose(algebra, seed, tol)
    com = commutant(algebra, tol)

    def quotient(rho):
        return block_direct_sum(dec, partial_trace_over_commutant(dec, _as_matrix(rho), tol))

    def restriction(c: Channel):
        per_block = restrict_homomorphism(dec, algebra, c, tol)
        sizes = [b.superop.shape[0] for b in per_block]
        out = np.zeros((sum(sizes), sum(sizes)), dtype=np.complex128)
        off = 0
        for b, n in zip(per_block, sizes):
            out[off:off + n, off:off + n] = b.superop
            off += n
        return out

    def sampler(rng):
        return random_channel_in_algebra(dec, rng, side="commutant", tol=tol)

    return SubsystemDescription(
        source_dim=agent.dim,
        state_space_tag="block_states",
        state_space_params={"blocks": [list(b) for b in dec.blocks]},
        quotient=quotient,
        restriction=restriction,
        adversary=AdversaryDescription(
            "channels with Kraus operators in the commutant algebra", sampler),
        decomposition=dec,
        algebra=algebra,
    )


def _carve_diagonal_group(agent: AgentSpec, seed, tol: Tolerance) -> SubsystemDescription:
    gens = [np.asarray(m, dtype=np.complex128) for m in agent.matrices]
    for g in gens:
        if max_abs(g - np.diag(np.diag(g))) > tol.eq_tol:
            raise CarveError("group_rep carving supports diagonal unitary "
                             "representations only")
    rep = close_group(gens, tol=tol)
    iso = isotypic_decompose(rep, seed, tol)
    if any(db > 1 for _, db in iso.blocks):
        # a repeated character makes the commutant mix degenerate components,
        # and the dephased diagonal is no longer constant on adversary orbits
        raise CarveError("diagonal representation has repeated characters; the "
                         "unordered-spectra quotient needs a multiplicity-free "
                         "representation")
    adv = adversarial_group(iso, seed, tol)
    d = agent.dim

    def quotient(rho):
        # pure-state domain: the class of |psi><psi| is fixed by the moduli
        # |psi_k|, up to the adversarial irrep permutations; the sorted
        # dephased diagonal is constant on those orbits
        return np.sort(np.diag(_as_matrix(rho)).real)[::-1].copy()

    def restriction(c: Channel):
        # the restricted transformation monoid is trivial
        return np.zeros(0)

    def sampler(rng):
        entry = adv.entries[rng.integers(len(adv.entries))]
        phases = rng.uniform(0, 2 * np.pi, d)
        v0_model = np.zeros((d, d), dtype=np.complex128)
        for k, sl in enumerate(iso.decomposition.block_slices()):
            da, db = iso.blocks[k]
            v0_model[sl, sl] = kron(np.eye(da), random_unitary(db, rng))
        v0 = dagger(iso.decomposition.unitary) @ v0_model @ iso.decomposition.unitary
        v = entry.unitary @ v0 @ np.diag(np.exp(1j * phases))
        return Channel([v], tol=tol)

    return SubsystemDescription(
        source_dim=d,
        state_space_tag="spectra_unordered",
        state_space_params={"dimension": d},
        quotient=quotient,
        restriction=restriction,
        adversary=AdversaryDescription(
            "unitary channels commuting with the representation "
            "(commutant times irrep permutations)", sampler),
        decomposition=iso.decomposition,
    )


def _carve_named(agent: AgentSpec, seed, tol: Tolerance) -> SubsystemDescription:
    d = agent.dim
    name = agent.monoid
    if name in CLASSICAL_MONOIDS:
        def quotient(rho):
            return np.diag(_as_matrix(rho)).real.copy()

        def restriction(c: Channel):
            # Act'' of every classical monoid is the multiphase covariant
            # channels; the reduced transformation is the transition matrix
            if not is_multiphase_covariant(c, tol):
                raise CarveError("channel is outside the double commutant "
                                 "(not multiphase covariant)")
            return classical_quotient_channel(c)

        return SubsystemDescription(
            source_dim=d,
            state_space_tag="diagonal_probabilities",
            state_space_params={"dimension": d},
            quotient=quotient,
            restriction=restriction,
            adversary=AdversaryDescription(
                "basis-preserving channels",
                lambda rng: sample_basis_preserving(d, rng, tol=tol)),
        )

    if name in ("incoherent", "maximally_incoherent", "full"):
        texts = {
            "incoherent": "identity channel only (trivial commutant)",
            "maximally_incoherent": "identity channel only (trivial commutant)",
            "full": "identity channel only (trivial center)",
        }
        return SubsystemDescription(
            source_dim=d,
            state_space_tag="full",
            state_space_params={"dimension": d},
            quotient=lambda rho: _as_matrix(rho).copy(),
            restriction=lambda c: c.superop.copy(),
            adversary=AdversaryDescription(texts[name], lambda rng: identity(d, tol)),
        )

    if name == "basis_preserving":
        # the commutant (multiphase covariant channels) contains every
        # erasure onto a basis state, so all states fall into one class
        from .coherence import sample_multiphase_covariant

        return SubsystemDescription(
            source_dim=d,
            state_space_tag="trivial",
            state_space_params={},
            quotient=lambda rho: np.zeros(0),
            restriction=lambda c: np.zeros(0),
            adversary=AdversaryDescription(
                "multiphase covariant channels",
                lambda rng: sample_multiphase_covariant(d, rng, tol=tol)),
        )

    raise CarveError(f"unknown monoid name {name!r}")


def quotient_state(sub: SubsystemDescription, rho) -> np.ndarray:
    """Canonical representation of the state's equivalence class."""
    return sub.quotient(rho)


def embed_representative(sub: SubsystemDescription, canonical,
                         tol: Tolerance = DEFAULT_TOL) -> StateDM:
    """Deterministic section of the quotient: quotient(embed(x)) = x.

    Block states get maximally mixed commutant factors; probability vectors
    embed as diagonal matrices; unordered spectra embed sorted-descending.
    """
    tag = sub.state_space_tag
    d = sub.source_dim
    if tag == "full":
        return StateDM(d, np.asarray(canonical, dtype=np.complex128), tol)
    if tag == "trivial":
        return StateDM.basis_state(d, 0, tol)
    if tag == "diagonal_probabilities":
        p = np.asarray(canonical, dtype=float).reshape(-1)
        return StateDM(d, np.diag(p).astype(np.complex128), tol)
    if tag == "spectra_unordered":
        p = np.sort(np.asarray(canonical, dtype=float).reshape(-1))[::-1]
        return StateDM(d, np.diag(p).astype(np.complex128), tol)
    if tag == "block_states":
        dec = sub.decomposition
        canonical = np.asarray(canonical, dtype=np.complex128)
        model = np.zeros((d, d), dtype=np.complex128)
        off = 0
        for (da, db), sl in zip(dec.blocks, dec.block_slices()):
            blk = canonical[off:off + da, off:off + da]
            model[sl, sl] = kron(blk, np.eye(db) / db)
            off += da
        return StateDM(d, dagger(dec.unitary) @ model @ dec.unitary, tol)
    raise CarveError(f"unknown state space tag {tag!r}")


# ---------------------------------------------------------------------------
# generic chain-equivalence oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainLink:
    """Witness pair: forward(state_i) = backward(state_{i+1})."""

    forward: Channel
    backward: Channel


@dataclass(frozen=True)
class ChainCertificate:
    states: list
    links: list

    def verify(self, tol: Tolerance = DEFAULT_TOL) -> float:
        """Max link residual; checkable with channel applications alone."""
        worst = 0.0
        for i, link in enumerate(self.links):
            lhs = apply(link.forward, self.states[i]).matrix
            rhs = apply(link.backward, self.states[i + 1]).matrix
            worst = max(worst, max_abs(lhs - rhs))
        return worst


@dataclass(frozen=True)
class ChainSearchResult:
    status: str  # "found" | "not_found" | "bounds_exceeded"
    certificate: ChainCertificate | None = None


def _enumerate_words(gens: list[Channel], max_words: int, tol: Tolerance):
    """Monoid words up to the length bound, deduplicated as maps.

    Returns (channels, closed) where ``closed`` is True when no new word
    appeared at the final length (the enumeration saturated the monoid).
    """
    d = gens[0].dim_in
    words: list[Channel] = [identity(d, tol)]
    sups = [words[0].superop]
    frontier = [0]
    grew = True
    for _ in range(max_words):
        if not grew:
            break
        grew = False
        new_frontier = []
        for i in frontier:
            for g in gens:
                cand = compose(g, words[i], tol)
                if any(max_abs(cand.superop - s) <= 100 * tol.eq_tol for s in sups):
                    continue
                words.append(cand)
                sups.append(cand.superop)
                new_frontier.append(len(words) - 1)
                grew = True
        frontier = new_frontier
    return words, not grew


def states_equivalent_by_chain(rho: StateDM, sigma: StateDM, adversary_gens: list[Channel],
                               max_len: int = 8, max_words: int = 4, seed=0,
                               tol: Tolerance = DEFAULT_TOL) -> ChainSearchResult:
    """Bounded search for a degradation chain connecting two states.

    Enumerates monoid words over the generators up to length ``max_words``,
    pools the word-images of both endpoints, and runs a breadth-first search
    on the intersection condition Deg(psi_i) cap Deg(psi_{i+1}) != {} up to
    chain length ``max_len``.  A certificate is returned when found; absence
    of a certificate is NOT a proof of inequivalence (the pool of
    intermediate states is heuristic and the bounds are finite).
    ``bounds_exceeded`` flags an unsaturated word enumeration.
    """
    if rho.dim != sigma.dim:
        raise ValueError("states must share a dimension")
    if not adversary_gens:
        adversary_gens = [identity(rho.dim, tol)]
    words, closed = _enumerate_words(adversary_gens, max_words, tol)

    if max_abs(rho.matrix - sigma.matrix) <= tol.eq_tol:
        ident = identity(rho.dim, tol)
        cert = ChainCertificate([rho, sigma], [ChainLink(ident, ident)])
        return ChainSearchResult("found", cert)

    def degset(state: StateDM):
        return [w(state.matrix) for w in words]

    # pool of candidate chain states: endpoint degradations
    pool: list[StateDM] = [rho, sigma]
    for base in (rho, sigma):
        for w in words[1:]:
            cand = apply(w, base)
            if not any(max_abs(cand.matrix - p.matrix) <= tol.eq_tol for p in pool):
                pool.append(cand)
    degs = [degset(p) for p in pool]

    def edge(i: int, j: int):
        for wi, di in zip(words, degs[i]):
            for wj, dj in zip(words, degs[j]):
                if max_abs(di - dj) <= 10 * tol.eq_tol:
                    return ChainLink(wi, wj)
        return None

    # breadth-first search from rho (index 0) to sigma (index 1)
    parents = {0: None}
    frontier = [0]
    depth = 0
    while frontier and depth < max_len:
        depth += 1
        new_frontier = []
        for i in frontier:
            for j in range(len(pool)):
                if j in parents:
                    continue
                link = edge(i, j)
                if link is None:
                    continue
                parents[j] = (i, link)
                if j == 1:
                    chain_states, chain_links = [pool[1]], []
                    node = 1
                    while parents[node] is not None:
                        prev, lk = parents[node]
                        chain_states.append(pool[prev])
                        chain_links.append(lk)
                        node = prev
                    chain_states.reverse()
                    chain_links.reverse()
                    cert = ChainCertificate(chain_states, chain_links)
                    if cert.verify(tol) <= 10 * tol.eq_tol:
                        return ChainSearchResult("found", cert)
                new_frontier.append(j)
        frontier = new_frontier
    return ChainSearchResult("not_found" if closed else "bounds_exceeded")


# ---------------------------------------------------------------------------
# structural predicates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoSignallingReport:
    max_deviation: float
    checks: int
    passed: bool


def check_no_signalling(sub: SubsystemDescription, adversary_samples, state_samples,
                        tol: Tolerance = DEFAULT_TOL) -> NoSignallingReport:
    """quotient(B(rho)) must equal quotient(rho) for adversary actions B."""
    worst, n = 0.0, 0
    for b in adversary_samples:
        for rho in state_samples:
            before = sub.quotient(rho)
            after = sub.quotient(b(_as_matrix(rho)))
            worst = max(worst, max_abs(np.asarray(before) - np.asarray(after)))
            n += 1
    return NoSignallingReport(worst, n, worst <= 10 * tol.eq_tol)


def check_causality(transf_samples, state_samples, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff some sampled transformation collapses every sampled state to a
    common output (an erasure-type witness for the single-class quotient)."""
    states = [_as_matrix(s) for s in state_samples]
    if len(states) <= 1:
        return True
    for t in transf_samples:
        outs = [t(s) for s in states]
        if all(max_abs(o - outs[0]) <= 10 * tol.eq_tol for o in outs[1:]):
            return True
    return False


def check_dual_pair(a: StarAlgebra, b: StarAlgebra, tol: Tolerance = DEFAULT_TOL) -> bool:
    return spans_equal(b, commutant(a, tol), tol) and spans_equal(a, commutant(b, tol), tol)


def check_non_overlapping(a: StarAlgebra, tol: Tolerance = DEFAULT_TOL) -> bool:
    return center(a, tol).space_dim == 1
