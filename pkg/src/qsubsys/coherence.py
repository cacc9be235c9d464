"""Predicates and structure tests for the free-operation monoids tied to a
distinguished basis: basis-preserving, multiphase/phase/dephasing covariant,
(strictly/maximally) incoherent, and classical channels.

Multiphase covariance is decided structurally on the Choi matrix: with the
output factor first, a channel commutes with every diagonal-phase unitary
channel iff its Choi is supported on the entries M[(s,s),(t,t)] and
M[(j,k),(j,k)] only.  Torus spot checks are kept as cross-validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import (
    Channel,
    channels_commute,
    classical_from_stochastic,
    compose,
    dephase,
    diagonal_unitary,
    erasure_to,
    identity,
    StateDM,
)
from .numerics import (
    DEFAULT_TOL,
    Tolerance,
    _as_rng,
    kron,
    max_abs,
    nullspace,
    vec,
)

__all__ = [
    "CoherenceClassReport",
    "is_basis_preserving",
    "is_multiphase_covariant",
    "is_dephasing_covariant",
    "is_phase_covariant",
    "is_classical",
    "is_incoherent_kraus",
    "is_maximally_incoherent",
    "is_strictly_incoherent",
    "is_physically_incoherent_kraus_form",
    "classify_monoid",
    "classical_quotient_channel",
    "sample_multiphase_covariant",
    "sample_basis_preserving",
    "multiphase_pattern_residual",
    "multiphase_violation_witness",
    "channel_fixing_only_identity",
    "basis_preserving_commutant_dimension",
]


def is_basis_preserving(t: Channel, tol: Tolerance = DEFAULT_TOL) -> bool:
    """B(|k><k|) = |k><k| for every computational basis state."""
    d = t.dim_in
    if t.dim_out != d:
        raise ValueError("predicate requires a square channel")
    for k in range(d):
        e = np.zeros((d, d), dtype=np.complex128)
        e[k, k] = 1.0
        if max_abs(t(e) - e) > tol.eq_tol:
            return False
    return True


def multiphase_pattern_residual(t: Channel) -> float:
    """Choi mass outside the multiphase-covariant support pattern.

    Allowed entries ((s,i),(t,j)): s == i and t == j, or (s,i) == (t,j).
    """
    d = t.dim_in
    m4 = t.choi.reshape(d, d, d, d)
    masked = m4.copy()
    for s in range(d):
        for tt in range(d):
            masked[s, s, tt, tt] = 0.0
    for j in range(d):
        for k in range(d):
            masked[j, k, j, k] = 0.0
    return max_abs(masked)


def is_multiphase_covariant(t: Channel, tol: Tolerance = DEFAULT_TOL,
                            cross_validate: bool = False) -> bool:
    """Commutes with all diagonal-phase unitary channels U_theta.

    Decided structurally on the Choi pattern; optionally cross-validated by
    commutation with the d single-axis pi/2 phase channels.
    """
    if t.dim_in != t.dim_out:
        raise ValueError("predicate requires a square channel")
    structural = multiphase_pattern_residual(t) <= tol.eq_tol
    if not cross_validate:
        return structural
    d = t.dim_in
    sampled = all(
        channels_commute(t, diagonal_unitary(np.pi / 2 * np.eye(d)[k]), tol)
        for k in range(d)
    )
    return structural and sampled


def is_dephasing_covariant(t: Channel, tol: Tolerance = DEFAULT_TOL) -> bool:
    return channels_commute(t, dephase(t.dim_in, tol), tol)


def _phase_pattern_residual(t: Channel) -> float:
    # commutation with U_phi = sum_k e^{ik phi}|k><k| for all phi forces
    # Choi support on entries with s - i == t - j
    d = t.dim_in
    m4 = t.choi.reshape(d, d, d, d)
    masked = m4.copy()
    for s in range(d):
        for i in range(d):
            for tt in range(d):
                for j in range(d):
                    if s - i == tt - j:
                        masked[s, i, tt, j] = 0.0
    return max_abs(masked)


def is_phase_covariant(t: Channel, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Commutes with the one-parameter family U_phi = sum e^{ik phi}|k><k|.

    Structural Choi test plus sampled phases phi = 2 pi m / (2d+1).
    """
    if t.dim_in != t.dim_out:
        raise ValueError("predicate requires a square channel")
    if _phase_pattern_residual(t) > tol.eq_tol:
        return False
    d = t.dim_in
    ks = np.arange(d)
    for m in range(1, 2 * d + 1):
        phi = 2 * np.pi * m / (2 * d + 1)
        if not channels_commute(t, diagonal_unitary(ks * phi), tol):
            return False
    return True


def is_classical(t: Channel, tol: Tolerance = DEFAULT_TOL) -> bool:
    """T = D . T . D."""
    d = dephase(t.dim_in, tol)
    lhs = compose(d, compose(t, d))
    return max_abs(lhs.superop - t.superop) <= tol.eq_tol


def is_maximally_incoherent(t: Channel, tol: Tolerance = DEFAULT_TOL) -> bool:
    """T . D = D . T . D (diagonal states stay diagonal)."""
    d = dephase(t.dim_in, tol)
    return max_abs(compose(t, d).superop - compose(d, compose(t, d)).superop) <= tol.eq_tol


def _kraus_maps(t: Channel):
    for k in t.kraus:
        yield k


def is_strictly_incoherent(t: Channel, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Every stored Kraus map satisfies D . T_i = T_i . D.

    Representation-dependent (checked on the stored Kraus set): sufficient in
    the form used by the classical-subsystem results, not a decision over all
    Kraus representations.
    """
    d = t.dim_in
    dp = dephase(d, tol).superop
    for k in _kraus_maps(t):
        s = kron(np.conj(k), k)
        if max_abs(dp @ s - s @ dp) > tol.eq_tol:
            return False
    return True


def is_incoherent_kraus(t: Channel, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Every stored Kraus map sends diagonal matrices to diagonal matrices."""
    d = t.dim_in
    dp = dephase(d, tol).superop
    for k in _kraus_maps(t):
        s = kron(np.conj(k), k)
        if max_abs(s @ dp - dp @ s @ dp) > tol.eq_tol:
            return False
    return True


def is_physically_incoherent_kraus_form(t: Channel, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Stored Kraus set matches the permutation * phases * projector shape.

    Each operator must be a uniform-modulus partial permutation matrix (at
    most one entry per row and column).  Sufficient, not necessary: deciding
    membership in the convex hull of such channels is out of scope.
    """
    floor = np.sqrt(tol.eq_tol)
    for k in _kraus_maps(t):
        mags = np.abs(k)
        support = mags > floor
        if support.sum() == 0:
            continue
        if np.any(support.sum(axis=0) > 1) or np.any(support.sum(axis=1) > 1):
            return False
        nz = mags[support]
        if nz.max() - nz.min() > floor:
            return False
    return True


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoherenceClassReport:
    strictly_incoherent: bool
    dephasing_covariant: bool
    phase_covariant: bool
    multiphase_covariant: bool
    basis_preserving: bool
    classical: bool
    incoherent: bool
    maximally_incoherent: bool
    physically_incoherent_kraus_form: bool
    classical_subsystem_verdict: str  # "classical(d)" | "whole_system" | "undetermined"

    def to_json(self) -> dict:
        return {
            "flags": {
                "strictly_incoherent": self.strictly_incoherent,
                "dephasing_covariant": self.dephasing_covariant,
                "phase_covariant": self.phase_covariant,
                "multiphase_covariant": self.multiphase_covariant,
                "basis_preserving": self.basis_preserving,
                "classical": self.classical,
                "incoherent": self.incoherent,
                "maximally_incoherent": self.maximally_incoherent,
                "physically_incoherent_kraus_form": self.physically_incoherent_kraus_form,
            },
            "classical_subsystem_verdict": self.classical_subsystem_verdict,
        }


def basis_preserving_commutant_dimension(channels: list[Channel],
                                         tol: Tolerance = DEFAULT_TOL) -> int:
    """Dimension of the basis-preserving maps commuting with the given channels.

    Basis-preserving channels have all-diagonal Kraus operators, so their
    superoperators are diagonal; for diagonal X = diag(x) the commutation
    [X, S] = 0 reads (x_r - x_c) S[r,c] = 0 entrywise.  Dimension 1 means the
    identity is the only such channel.
    """
    if not channels:
        raise ValueError("need at least one channel")
    n = channels[0].superop.shape[0]
    rows = []
    for c in channels:
        s = c.superop
        nz = np.argwhere(np.abs(s) > tol.eq_tol)
        for r, cc in nz:
            if r == cc:
                continue
            row = np.zeros(n, dtype=np.complex128)
            row[r] = s[r, cc]
            row[cc] = -s[r, cc]
            rows.append(row)
    if not rows:
        return n
    return len(nullspace(np.vstack(rows), tol))


def _contains_erasure_witnesses(gens: list[Channel], max_len: int,
                                tol: Tolerance) -> bool:
    """Search bounded words for the erasure channel onto every basis state."""
    d = gens[0].dim_in
    targets = [erasure_to(StateDM.basis_state(d, k), tol).superop for k in range(d)]
    found = [False] * d
    frontier = [np.eye(d * d, dtype=np.complex128)]
    seen: list[np.ndarray] = []
    for _ in range(max_len):
        new = []
        for w in frontier:
            for g in gens:
                s = g.superop @ w
                if any(max_abs(s - t) <= 100 * tol.eq_tol for t in seen + new):
                    continue
                new.append(s)
                for k, tgt in enumerate(targets):
                    if max_abs(s - tgt) <= 100 * tol.eq_tol:
                        found[k] = True
        if all(found):
            return True
        seen.extend(new)
        frontier = new
        if not frontier:
            break
    return all(found)


def classify_monoid(gens: list[Channel], *, contains_classical_channels: bool = False,
                    witness_search_len: int = 3,
                    tol: Tolerance = DEFAULT_TOL) -> CoherenceClassReport:
    """Classify a generated monoid of channels against the coherence families.

    The verdict is classical(d) when every generator commutes with the
    dephasing channel and the monoid is known (attested or witnessed by a
    bounded word search for the basis-state erasures) to contain the
    classical channels; whole_system when the joint linear commutant of the
    generators' superoperators collapses to the scalars, so the maximal
    adversary is the identity alone; otherwise undetermined.
    """
    if not gens:
        raise ValueError("need at least one generator")
    d = gens[0].dim_in
    flags = dict(
        strictly_incoherent=all(is_strictly_incoherent(g, tol) for g in gens),
        dephasing_covariant=all(is_dephasing_covariant(g, tol) for g in gens),
        phase_covariant=all(is_phase_covariant(g, tol) for g in gens),
        multiphase_covariant=all(is_multiphase_covariant(g, tol) for g in gens),
        basis_preserving=all(is_basis_preserving(g, tol) for g in gens),
        classical=all(is_classical(g, tol) for g in gens),
        incoherent=all(is_incoherent_kraus(g, tol) for g in gens),
        maximally_incoherent=all(is_maximally_incoherent(g, tol) for g in gens),
        physically_incoherent_kraus_form=all(
            is_physically_incoherent_kraus_form(g, tol) for g in gens),
    )
    witnessed = contains_classical_channels or _contains_erasure_witnesses(
        gens, witness_search_len, tol)
    if flags["dephasing_covariant"] and witnessed:
        verdict = f"classical({d})"
    elif witnessed and basis_preserving_commutant_dimension(gens, tol) == 1:
        # the commutant of a monoid containing the classical channels consists
        # of basis-preserving channels; if only the identity survives, the
        # subsystem is the whole system
        verdict = "whole_system"
    else:
        verdict = "undetermined"
    return CoherenceClassReport(classical_subsystem_verdict=verdict, **flags)


def classical_quotient_channel(t: Channel) -> np.ndarray:
    """The transition matrix P[j,k] = <j| T(|k><k|) |j> of the classical shadow."""
    d = t.dim_in
    p = np.zeros((d, d))
    for k in range(d):
        e = np.zeros((d, d), dtype=np.complex128)
        e[k, k] = 1.0
        p[:, k] = np.diag(t(e)).real
    return p


# ---------------------------------------------------------------------------
# samplers and witnesses
# ---------------------------------------------------------------------------

def sample_multiphase_covariant(d: int, seed, n_diagonal: int = 2,
                                tol: Tolerance = DEFAULT_TOL) -> Channel:
    """Random channel sum_i M_i rho M_i^dag + sum_{j!=k} p(j|k) |j><k| rho |k><j|
    with diagonal M_i; trace preservation is repaired by rescaling the
    diagonals, which keeps them diagonal.
    """
    rng = _as_rng(seed)
    p = rng.random((d, d))
    np.fill_diagonal(p, 0.0)
    off_mass = rng.random(d) * 0.5  # column sums of p, kept below 1
    colsums = p.sum(axis=0)
    p = p / np.where(colsums > 0, colsums, 1.0) * off_mass
    diags = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for _ in range(n_diagonal)]
    t = sum(np.abs(m) ** 2 for m in diags)
    scale = np.sqrt((1.0 - p.sum(axis=0)) / t)
    kraus = [np.diag(m * scale) for m in diags]
    for j in range(d):
        for k in range(d):
            if j != k and p[j, k] > 0:
                op = np.zeros((d, d), dtype=np.complex128)
                op[j, k] = np.sqrt(p[j, k])
                kraus.append(op)
    return Channel(kraus, tol=tol)


def sample_basis_preserving(d: int, seed, n_kraus: int = 3,
                            tol: Tolerance = DEFAULT_TOL) -> Channel:
    """Random basis-preserving channel: all-diagonal Kraus operators whose
    column vectors (c_1k, ..., c_rk) are unit length for every k."""
    rng = _as_rng(seed)
    c = rng.standard_normal((n_kraus, d)) + 1j * rng.standard_normal((n_kraus, d))
    c /= np.linalg.norm(c, axis=0, keepdims=True)
    return Channel([np.diag(row) for row in c], tol=tol)


def multiphase_violation_witness(t: Channel, tol: Tolerance = DEFAULT_TOL) -> Channel:
    """A basis-preserving (diagonal-phase) channel not commuting with ``t``.

    Targets the largest off-pattern Choi entry ((s,i),(t,j)): with integer
    frequency vector v = e_s - e_i - e_t + e_j != 0 the phase choice
    theta = pi v / (v.v) flips that entry by e^{i pi} under conjugation.
    """
    d = t.dim_in
    m4 = t.choi.reshape(d, d, d, d)
    best, best_v = 0.0, None
    for s in range(d):
        for i in range(d):
            for tt in range(d):
                for j in range(d):
                    if (s == i and tt == j) or (s == tt and i == j):
                        continue
                    if abs(m4[s, i, tt, j]) > best:
                        v = np.zeros(d)
                        v[s] += 1
                        v[i] -= 1
                        v[tt] -= 1
                        v[j] += 1
                        if np.any(v != 0):
                            best, best_v = abs(m4[s, i, tt, j]), v
    if best_v is None:
        raise ValueError("channel satisfies the multiphase Choi pattern; no witness exists")
    theta = np.pi * best_v / float(best_v @ best_v)
    return diagonal_unitary(theta, tol)


def channel_fixing_only_identity(psi, tol: Tolerance = DEFAULT_TOL) -> Channel:
    """The probe channel rho -> |1><1| <psi|rho|psi> + (I-|1><1|)/(d-1) Tr[(I-|psi><psi|) rho].

    Incoherent and maximally incoherent monoids contain this family for every
    unit vector psi, and the only basis-preserving channel commuting with all
    of them is the identity.  The Kraus set below keeps the incoherent form
    (each column of each operator touches a single row).
    """
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    d = len(psi)
    if d < 2:
        raise ValueError("need dimension at least 2")
    ops = [np.outer(np.eye(d)[0], psi.conj())]
    # orthonormal basis of the complement of psi
    q, _ = np.linalg.qr(np.column_stack([psi] + [np.eye(d)[i] for i in range(d)])[:, :d])
    comp = q[:, 1:]
    for l in range(d - 1):
        phi = comp[:, l]
        for m in range(1, d):
            ops.append(np.outer(np.eye(d)[m], phi.conj()) / np.sqrt(d - 1))
    return Channel(ops, tol=tol)
