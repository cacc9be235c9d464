"""Finite-group unitary representations: isotypic decomposition and the
structure of the adversarial group.

For a matrix group G = {U_g} the adversarial group consists of the unitaries
V with V U_g = omega(V, g) U_g V for a multiplicative character omega.  Each
such V factors as a block-permutation operator (built from twisted
intertwiners between equal-dimension irreps with matching multiplicities)
times an element of the operator commutant U'.  The permutations form an
abelian subgroup of the permutations of the irrep labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    DEFAULT_TOL,
    Tolerance,
    _as_rng,
    dagger,
    gram_schmidt_hs,
    is_unitary,
    kron,
    max_abs,
    unvec,
    vec,
)
from .star_algebra import (
    BlockDecomposition,
    StarAlgebra,
    block_decompose,
    commutant,
    generate_algebra,
)

__all__ = [
    "FiniteGroupRep",
    "IsotypicData",
    "TwistedIntertwiner",
    "AdversarialEntry",
    "AdversarialGroupStructure",
    "close_group",
    "isotypic_decompose",
    "twisted_intertwiners",
    "adversarial_group",
    "verify_channel_commutation",
]


class GroupClosureError(RuntimeError):
    pass


@dataclass(frozen=True)
class FiniteGroupRep:
    """A finite group of unitary matrices with its multiplication table."""

    dim: int
    elements: list = field(repr=False)
    table: np.ndarray = field(repr=False)  # table[i, j] = index of elements[i] @ elements[j]
    identity_index: int = 0

    @property
    def order(self) -> int:
        return len(self.elements)

    def index_of(self, m: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> int:
        for i, e in enumerate(self.elements):
            if max_abs(e - m) <= 100 * tol.eq_tol:
                return i
        raise ValueError("matrix is not a group element")


def close_group(gens, max_order: int = 512, tol: Tolerance = DEFAULT_TOL) -> FiniteGroupRep:
    """Close a set of unitary generators under multiplication.

    Elements are deduplicated at matrix distance; scalar multiples count as
    distinct elements.  Raises if the closure exceeds ``max_order``.
    """
    gens = [np.asarray(g, dtype=np.complex128) for g in gens]
    if not gens:
        raise ValueError("need at least one generator (use the identity for the trivial group)")
    d = gens[0].shape[0]
    for g in gens:
        if g.shape != (d, d) or not is_unitary(g, tol):
            raise ValueError("generators must be unitary matrices of equal dimension")

    elements = [np.eye(d, dtype=np.complex128)]

    def find(m):
        for i, e in enumerate(elements):
            if max_abs(e - m) <= 100 * tol.eq_tol:
                return i
        return -1

    frontier = [0]
    while frontier:
        new_frontier = []
        for i in frontier:
            for g in gens:
                p = elements[i] @ g
                if find(p) < 0:
                    elements.append(p)
                    new_frontier.append(len(elements) - 1)
                    if len(elements) > max_order:
                        raise GroupClosureError(f"group order exceeds bound {max_order}")
        frontier = new_frontier

    n = len(elements)
    table = np.zeros((n, n), dtype=int)
    for i in range(n):
        for j in range(n):
            k = find(elements[i] @ elements[j])
            if k < 0:
                raise GroupClosureError("closure is not multiplication-complete")
            table[i, j] = k
    # inverses: every row of the table must contain the identity
    for i in range(n):
        if 0 not in table[i]:
            raise GroupClosureError("an element has no inverse in the closure")
    return FiniteGroupRep(d, elements, table, 0)


# ---------------------------------------------------------------------------
# isotypic decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IsotypicData:
    """Blocks (irrep_dim, multiplicity) with per-element irrep matrices."""

    rep: FiniteGroupRep
    blocks: list  # [(d_R, d_M), ...]
    irreps: list = field(repr=False)  # irreps[k][g] = U_g^{(k)}
    decomposition: BlockDecomposition = field(repr=False)
    algebra: StarAlgebra = field(repr=False)

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    def pattern_residual(self) -> float:
        return max(self.decomposition.algebra_pattern_residual(u) for u in self.rep.elements)


def isotypic_decompose(rep: FiniteGroupRep, seed, tol: Tolerance = DEFAULT_TOL) -> IsotypicData:
    """Decompose U_g = (+)_j (U_g^{(j)} (x) I_Mj).

    The span of the group elements is already the generated *-algebra (it is
    closed under products and adjoints and contains I), and its block
    decomposition exhibits the representation and multiplicity factors.
    """
    basis = gram_schmidt_hs(rep.elements, tol)
    algebra = StarAlgebra(rep.dim, basis, list(rep.elements))
    dec = block_decompose(algebra, seed, tol)
    irreps = []
    for k in range(dec.num_blocks):
        irreps.append([dec.algebra_factor(u, k) for u in rep.elements])
    iso = IsotypicData(rep, list(dec.blocks), irreps, dec, algebra)
    if iso.pattern_residual() > 10 * tol.eq_tol:
        raise RuntimeError("isotypic pattern residual too large")
    return iso


# ---------------------------------------------------------------------------
# twisted intertwiners
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwistedIntertwiner:
    """Unitary X with X U_g^{(source)} = omega(g) U_g^{(target)} X for all g."""

    source: int
    target: int
    omega: np.ndarray  # one phase per group element
    x: np.ndarray = field(repr=False)


def twisted_intertwiners(iso: IsotypicData, target: int, source: int, seed=0,
                         tol: Tolerance = DEFAULT_TOL) -> list[TwistedIntertwiner]:
    """All (omega, X) with X U^{(source)} = omega U^{(target)} X.

    Vectorized, X satisfies W_g vec(X) = conj(omega(g)) vec(X) with
    W_g = conj(U^{(source)}_g) (x) U^{(target)}_g, so the solutions are the
    one-dimensional isotypic components of the algebra spanned by the W_g.
    Empty when the irrep dimensions differ (Schur).
    """
    d_r_t, _ = iso.blocks[target]
    d_r_s, _ = iso.blocks[source]
    if d_r_t != d_r_s:
        return []
    n = iso.rep.order
    ws = [kron(np.conj(iso.irreps[source][g]), iso.irreps[target][g]) for g in range(n)]
    w_algebra = StarAlgebra(d_r_t * d_r_s, gram_schmidt_hs(ws, tol), ws)
    dec = block_decompose(w_algebra, seed, tol)
    q = dagger(dec.unitary)  # columns are the model basis in ambient coordinates
    out = []
    for k, sl in enumerate(dec.block_slices()):
        da, db = dec.blocks[k]
        if da != 1:
            continue
        # each column in a (1, m) block is a joint eigenvector; Schur forces
        # m = 1 between irreducibles, but iterate defensively
        for col in range(sl.start, sl.stop):
            x_vec = q[:, col]
            chi = np.array([np.vdot(x_vec, w @ x_vec) for w in ws])
            omega = np.conj(chi)
            x = unvec(x_vec, d_r_t, d_r_s)
            scale = np.sqrt(np.trace(dagger(x) @ x).real / d_r_t)
            x = x / scale
            worst = max(
                max_abs(x @ iso.irreps[source][g] - omega[g] * iso.irreps[target][g] @ x)
                for g in range(n))
            if worst <= 10 * np.sqrt(tol.eq_tol):
                out.append(TwistedIntertwiner(source, target, omega, x))
    return out


# ---------------------------------------------------------------------------
# adversarial group
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdversarialEntry:
    """One (permutation, character) sector of the adversarial group."""

    permutation: tuple
    omega: np.ndarray
    intertwiners: list = field(repr=False)  # T_{pi(k), k} indexed by k
    multiplicity_isometries: list = field(repr=False)  # S_{pi(k), k} indexed by k
    unitary: np.ndarray = field(repr=False)  # assembled ambient representative


@dataclass(frozen=True)
class AdversarialGroupStructure:
    iso: IsotypicData
    commutant_basis: list = field(repr=False)
    entries: list = field(repr=False)

    @property
    def commutant_dim(self) -> int:
        return len(self.commutant_basis)

    def permutations(self) -> list[tuple]:
        seen = []
        for e in self.entries:
            if e.permutation not in seen:
                seen.append(e.permutation)
        return seen

    def permutation_group_order(self) -> int:
        return len(self.permutations())

    def contains(self, v: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> bool:
        """Membership via the canonical form V = U_pi V0 with V0 in U'."""
        v = np.asarray(v, dtype=np.complex128)
        if not is_unitary(v, tol):
            return False
        dec = self.iso.decomposition
        for entry in self.entries:
            v0 = dagger(entry.unitary) @ v
            if dec.commutant_pattern_residual(v0) <= np.sqrt(tol.eq_tol):
                return True
        return False


def _dedup_characters(chars):
    out = []
    for c in chars:
        if not any(max_abs(c - c2) <= 1e-6 for c2 in out):
            out.append(c)
    return out


def adversarial_group(iso: IsotypicData, seed=0, tol: Tolerance = DEFAULT_TOL) -> AdversarialGroupStructure:
    """Assemble the sectors of the adversarial group.

    For every multiplicative character found among the twisted intertwiners,
    a sector exists iff the character induces a bijection of the irrep labels
    with matching multiplicity dimensions.  Multiplicity isometries are the
    identity in the decomposed basis, which satisfies the composition
    compatibility convention trivially.
    """
    dec = iso.decomposition
    nb = iso.num_blocks
    d = iso.rep.dim

    # operator commutant basis, constructed blockwise in model coordinates
    com_basis = []
    for k, sl in enumerate(dec.block_slices()):
        da, db = iso.blocks[k]
        for i in range(db):
            for j in range(db):
                e = np.zeros((db, db), dtype=np.complex128)
                e[i, j] = 1.0
                model = np.zeros((d, d), dtype=np.complex128)
                model[sl, sl] = kron(np.eye(da), e)
                com_basis.append(dec.from_model(model) / np.sqrt(da))

    # twisted intertwiners for all label pairs
    pair_tws: dict[tuple, list[TwistedIntertwiner]] = {}
    all_chars = []
    for k in range(nb):
        for j in range(nb):
            tws = twisted_intertwiners(iso, j, k, seed=seed, tol=tol)
            if tws:
                pair_tws[(j, k)] = tws
                all_chars.extend(t.omega for t in tws)

    entries = []
    for omega in _dedup_characters(all_chars):
        perm = [-1] * nb
        t_ops: list = [None] * nb
        ok = True
        for k in range(nb):
            matches = []
            for j in range(nb):
                for t in pair_tws.get((j, k), []):
                    if max_abs(t.omega - omega) <= 1e-6:
                        matches.append((j, t))
            if len(matches) != 1:
                ok = False
                break
            j, t = matches[0]
            if iso.blocks[j][1] != iso.blocks[k][1]:
                ok = False  # multiplicity spaces must be unitarily isomorphic
                break
            perm[k] = j
            t_ops[k] = t.x
        if not ok or sorted(perm) != list(range(nb)):
            continue
        s_ops = [np.eye(iso.blocks[k][1], dtype=np.complex128) for k in range(nb)]
        model = np.zeros((d, d), dtype=np.complex128)
        slices = dec.block_slices()
        for k in range(nb):
            model[slices[perm[k]], slices[k]] = kron(t_ops[k], s_ops[k])
        entries.append(AdversarialEntry(tuple(perm), omega, t_ops, s_ops,
                                        dec.from_model(model)))
    return AdversarialGroupStructure(iso, com_basis, entries)


def verify_channel_commutation(rep: FiniteGroupRep, v: np.ndarray,
                               tol: Tolerance = DEFAULT_TOL) -> bool:
    """Whether the unitary channel of ``v`` commutes with every U_g channel.

    Checked in superoperator form: V (x) conj(V) must commute with
    U_g (x) conj(U_g) for every group element.
    """
    v = np.asarray(v, dtype=np.complex128)
    if not is_unitary(v, tol):
        raise ValueError("matrix is not unitary")
    sv = kron(np.conj(v), v)
    for u in rep.elements:
        su = kron(np.conj(u), u)
        if max_abs(sv @ su - su @ sv) > 100 * tol.eq_tol:
            return False
    return True
