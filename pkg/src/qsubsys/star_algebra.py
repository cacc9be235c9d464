"""Unital *-subalgebras of M_d(C): generation, commutant, center, and the
block (Wedderburn) decomposition H = (+)_k H_Ak (x) H_Bk.

In the decomposed basis every algebra element looks like (+)_k (C_k (x) I_Bk)
and every commutant element like (+)_k (I_Ak (x) D_k).  The change of basis is
stored so that ``U M U^dag`` is block-patterned for M in the algebra; block
order is canonicalized so runs with equal seeds reproduce byte-identical
output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import Channel
from .numerics import (
    DEFAULT_TOL,
    NumericalFailure,
    Tolerance,
    _as_rng,
    dagger,
    eig_hermitian,
    gram_schmidt_hs,
    hs_inner,
    kron,
    max_abs,
    nullspace,
    unvec,
    vec,
)

__all__ = [
    "StarAlgebra",
    "BlockDecomposition",
    "BlockState",
    "generate_algebra",
    "commutant",
    "double_commutant_check",
    "center",
    "block_decompose",
    "partial_trace_over_commutant",
    "restrict_homomorphism",
    "spans_equal",
    "random_algebra_element",
    "random_channel_in_algebra",
    "trace_out_channel",
    "conditional_expectation_channel",
]


@dataclass(frozen=True)
class StarAlgebra:
    """A unital *-subalgebra of M_d(C), held as an HS-orthonormal basis."""

    dim: int
    basis: list = field(repr=False)
    generators: list = field(default_factory=list, repr=False)

    @property
    def space_dim(self) -> int:
        return len(self.basis)

    def project(self, m: np.ndarray) -> np.ndarray:
        """Orthogonal projection of a matrix onto the algebra's span."""
        out = np.zeros_like(np.asarray(m, dtype=np.complex128))
        for b in self.basis:
            out += hs_inner(b, m) * b
        return out

    def contains(self, m: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> bool:
        """Membership by projection residual, the package-wide criterion."""
        return max_abs(self.project(m) - m) <= tol.eq_tol

    def closure_residual(self) -> float:
        """Max projection residual over adjoints and pairwise products."""
        worst = 0.0
        for a in self.basis:
            worst = max(worst, max_abs(self.project(dagger(a)) - dagger(a)))
            for b in self.basis:
                p = a @ b
                worst = max(worst, max_abs(self.project(p) - p))
        return worst


def generate_algebra(gens, dim: int | None = None, tol: Tolerance = DEFAULT_TOL) -> StarAlgebra:
    """Smallest unital *-algebra containing the generators.

    Seeds the basis with {I, gens, gens^dag}, then repeatedly multiplies basis
    pairs and orthonormalizes new directions until the dimension stabilizes
    (bounded by d^2, so this always terminates).
    """
    gens = [np.asarray(g, dtype=np.complex128) for g in gens]
    if dim is None:
        if not gens:
            raise ValueError("need generators or an explicit dimension")
        dim = gens[0].shape[0]
    for g in gens:
        if g.shape != (dim, dim):
            raise ValueError("generators must be square with equal dimension")
    seed = [np.eye(dim, dtype=np.complex128)] + gens + [dagger(g) for g in gens]
    basis = gram_schmidt_hs(seed, tol)
    while True:
        products = [a @ b for a in basis for b in basis]
        new_basis = gram_schmidt_hs(basis + products, tol)
        if len(new_basis) == len(basis):
            return StarAlgebra(dim, new_basis, list(gens))
        basis = new_basis


def commutant(a: StarAlgebra, tol: Tolerance = DEFAULT_TOL) -> StarAlgebra:
    """{X : XG = GX for all G in the algebra}, via a joint nullspace.

    XG - GX = 0 vectorizes to (I (x) G - G^T (x) I) vec(X) = 0 under the
    column-stacking convention.
    """
    d = a.dim
    eye = np.eye(d)
    rows = [kron(eye, g) - kron(g.T, eye) for g in a.basis]
    stacked = np.vstack(rows) if rows else np.zeros((0, d * d))
    basis = [unvec(v, d, d) for v in nullspace(stacked, tol)]
    return StarAlgebra(d, basis)


def double_commutant_check(a: StarAlgebra, tol: Tolerance = DEFAULT_TOL) -> bool:
    return spans_equal(a, commutant(commutant(a, tol), tol), tol)


def spans_equal(a: StarAlgebra, b: StarAlgebra, tol: Tolerance = DEFAULT_TOL) -> bool:
    if a.dim != b.dim or a.space_dim != b.space_dim:
        return False
    return all(b.contains(m, tol) for m in a.basis)


def center(a: StarAlgebra, tol: Tolerance = DEFAULT_TOL) -> StarAlgebra:
    """Intersection of the algebra with its commutant.

    Computed as the joint nullspace of the projections onto the orthogonal
    complements of the two spans.
    """
    d = a.dim
    com = commutant(a, tol)
    n = d * d
    p_a = np.zeros((n, n), dtype=np.complex128)
    for m in a.basis:
        v = vec(m)
        p_a += np.outer(v, v.conj())
    p_b = np.zeros((n, n), dtype=np.complex128)
    for m in com.basis:
        v = vec(m)
        p_b += np.outer(v, v.conj())
    stacked = np.vstack([np.eye(n) - p_a, np.eye(n) - p_b])
    basis = [unvec(v, d, d) for v in nullspace(stacked, tol)]
    return StarAlgebra(d, basis)


# ---------------------------------------------------------------------------
# Block decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockDecomposition:
    """Change of basis realizing H = (+)_k H_Ak (x) H_Bk.

    ``unitary @ M @ unitary^dag`` is (+)_k (C_k (x) I) for M in the algebra
    and (+)_k (I (x) D_k) for M in the commutant.  ``projectors`` are the
    central projectors onto the blocks, in the original basis.
    """

    dim: int
    blocks: list  # [(d_A, d_B), ...]
    unitary: np.ndarray = field(repr=False)
    projectors: list = field(repr=False)

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    def block_slices(self) -> list[slice]:
        out, off = [], 0
        for da, db in self.blocks:
            out.append(slice(off, off + da * db))
            off += da * db
        return out

    def to_model(self, m: np.ndarray) -> np.ndarray:
        return self.unitary @ np.asarray(m, dtype=np.complex128) @ dagger(self.unitary)

    def from_model(self, m: np.ndarray) -> np.ndarray:
        return dagger(self.unitary) @ np.asarray(m, dtype=np.complex128) @ self.unitary

    def algebra_factor(self, m: np.ndarray, k: int) -> np.ndarray:
        """Extract C_k from an algebra element (average over the B factor)."""
        da, db = self.blocks[k]
        blk = self.to_model(m)[self.block_slices()[k], self.block_slices()[k]]
        t = blk.reshape(da, db, da, db)
        return np.einsum("ibjb->ij", t) / db

    def commutant_factor(self, m: np.ndarray, k: int) -> np.ndarray:
        """Extract D_k from a commutant element (average over the A factor)."""
        da, db = self.blocks[k]
        blk = self.to_model(m)[self.block_slices()[k], self.block_slices()[k]]
        t = blk.reshape(da, db, da, db)
        return np.einsum("aiaj->ij", t) / da

    def algebra_pattern_residual(self, m: np.ndarray) -> float:
        """Distance of U m U^dag from the (+)_k (C_k (x) I) pattern."""
        mdl = self.to_model(m)
        rebuilt = np.zeros_like(mdl)
        for k, sl in enumerate(self.block_slices()):
            da, db = self.blocks[k]
            rebuilt[sl, sl] = kron(self.algebra_factor(m, k), np.eye(db))
        return max_abs(mdl - rebuilt)

    def commutant_pattern_residual(self, m: np.ndarray) -> float:
        mdl = self.to_model(m)
        rebuilt = np.zeros_like(mdl)
        for k, sl in enumerate(self.block_slices()):
            da, db = self.blocks[k]
            rebuilt[sl, sl] = kron(np.eye(da), self.commutant_factor(m, k))
        return max_abs(mdl - rebuilt)


class BlockDecompositionError(NumericalFailure):
    """Raised when generic eigen-splitting keeps failing across retries."""


def model_decomposition(blocks) -> BlockDecomposition:
    """A decomposition already in block form (identity change of basis)."""
    blocks = [(int(da), int(db)) for da, db in blocks]
    d = sum(da * db for da, db in blocks)
    projectors = []
    off = 0
    for da, db in blocks:
        p = np.zeros((d, d), dtype=np.complex128)
        p[off:off + da * db, off:off + da * db] = np.eye(da * db)
        projectors.append(p)
        off += da * db
    return BlockDecomposition(d, blocks, np.eye(d, dtype=np.complex128), projectors)


def _cluster(values: np.ndarray, gap: float) -> list[list[int]]:
    """Group ascending values into clusters separated by more than ``gap``."""
    clusters: list[list[int]] = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] <= gap:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters


def random_algebra_element(a: StarAlgebra, rng, hermitian: bool = False) -> np.ndarray:
    coeff = rng.standard_normal(a.space_dim) + 1j * rng.standard_normal(a.space_dim)
    m = sum(c * b for c, b in zip(coeff, a.basis))
    return (m + dagger(m)) / 2 if hermitian else m


def _orthonormal_range(p: np.ndarray, tol: Tolerance) -> np.ndarray:
    """Orthonormal basis (columns) of the range of a projector."""
    vals, vecs = eig_hermitian(p, tol)
    cols = [v for lam, v in zip(vals, vecs.T) if lam > 0.5]
    return np.array(cols).T


def block_decompose(a: StarAlgebra, seed, tol: Tolerance = DEFAULT_TOL,
                    max_retries: int = 5) -> BlockDecomposition:
    """Block decomposition by randomized central eigen-splitting.

    (1) split H along the eigenprojections of a random Hermitian center
    element (eigenvalues merged within sqrt(eq_tol)); (2) inside each block a
    random Hermitian algebra element generically has d_A distinct eigenvalues
    of uniform multiplicity d_B; (3) partial isometries between its
    eigenspaces, from polar factors of a second random algebra element,
    assemble the product basis.  Retries with fresh randomness on degenerate
    draws.
    """
    rng = _as_rng(seed)
    last_err = "unknown"
    for _ in range(max_retries):
        try:
            return _block_decompose_once(a, rng, tol)
        except _RetryDecomposition as exc:
            last_err = str(exc)
    raise BlockDecompositionError(
        f"block decomposition failed after {max_retries} attempts: {last_err}")


class _RetryDecomposition(Exception):
    pass


def _block_decompose_once(a: StarAlgebra, rng, tol: Tolerance) -> BlockDecomposition:
    d = a.dim
    gap = np.sqrt(tol.eq_tol)
    cen = center(a, tol)
    z = random_algebra_element(cen, rng, hermitian=True)
    vals, vecs = eig_hermitian(z, tol)
    raw_projectors = []
    for cluster in _cluster(vals, gap):
        cols = vecs[:, cluster]
        raw_projectors.append(cols @ dagger(cols))
    # sanity: the projectors must be central (they are, if z separated blocks)
    for p in raw_projectors:
        if not cen.contains(p, Tolerance(max(100 * tol.eq_tol, 1e-7), tol.rank_tol)):
            raise _RetryDecomposition("eigenprojection of center element not central")

    blocks = []
    for p in raw_projectors:
        block_dim = int(round(np.trace(p).real))
        basis_cols = _orthonormal_range(p, tol)
        if basis_cols.shape[1] != block_dim:
            raise _RetryDecomposition("projector range dimension mismatch")
        h = random_algebra_element(a, rng, hermitian=True)
        hb = dagger(basis_cols) @ h @ basis_cols
        vals_b, vecs_b = eig_hermitian(hb, tol)
        clusters = _cluster(vals_b, gap)
        mult = {len(c) for c in clusters}
        if len(mult) != 1:
            raise _RetryDecomposition("non-uniform eigenvalue multiplicities")
        db = mult.pop()
        da = len(clusters)
        if da * db != block_dim:
            raise _RetryDecomposition("multiplicity pattern inconsistent")
        eigenspaces = [basis_cols @ vecs_b[:, c] for c in clusters]  # ambient, d x db
        x = random_algebra_element(a, rng)
        frames = [eigenspaces[0]]
        for w in eigenspaces[1:]:
            m = dagger(w) @ x @ eigenspaces[0]
            u, s, vh = np.linalg.svd(m)
            if s[0] <= 0 or s[-1] <= gap * s[0]:
                raise _RetryDecomposition("rank-deficient polar factor")
            frames.append(w @ (u @ vh))
        # columns ordered A-major: flat index i*db + j -> frames[i][:, j]
        cols = np.hstack(frames)
        blocks.append((da, db, cols, p))

    # canonical order: by (d_A, d_B, first-projector trace moment)
    moment_op = np.diag(np.arange(d, dtype=float))
    def sort_key(item):
        da, db, _, p = item
        return (da, db, round(float(np.trace(p @ moment_op).real), 6))
    blocks.sort(key=sort_key)

    q = np.hstack([cols for _, _, cols, _ in blocks])
    if max_abs(dagger(q) @ q - np.eye(d)) > 100 * tol.eq_tol:
        raise _RetryDecomposition("assembled basis is not unitary")
    dec = BlockDecomposition(
        dim=d,
        blocks=[(da, db) for da, db, _, _ in blocks],
        unitary=dagger(q),
        projectors=[p for _, _, _, p in blocks],
    )
    worst = max(dec.algebra_pattern_residual(m) for m in a.basis)
    if worst > 10 * tol.eq_tol:
        raise _RetryDecomposition(f"algebra pattern residual {worst:.2e}")
    return dec


# ---------------------------------------------------------------------------
# Partial trace over the commutant and restriction of algebra channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockState:
    """One component of a partial trace: weight p_k and normalized block state."""

    weight: float
    state: np.ndarray
    negligible: bool = False


def partial_trace_over_commutant(dec: BlockDecomposition, rho,
                                 tol: Tolerance = DEFAULT_TOL) -> list[BlockState]:
    """Tr_B(rho) = (+)_k Tr_Bk[Pi_k rho Pi_k], returned blockwise normalized.

    Weight-zero blocks are kept (flagged) so the output shape is stable.
    """
    mat = rho.matrix if hasattr(rho, "matrix") else np.asarray(rho, dtype=np.complex128)
    if mat.shape != (dec.dim, dec.dim):
        raise ValueError(f"state must be {dec.dim}x{dec.dim}")
    mdl = dec.to_model(mat)
    out = []
    for k, sl in enumerate(dec.block_slices()):
        da, db = dec.blocks[k]
        blk = mdl[sl, sl].reshape(da, db, da, db)
        reduced = np.einsum("ibjb->ij", blk)
        weight = float(np.trace(reduced).real)
        if weight <= 10 * tol.rank_tol:
            out.append(BlockState(max(weight, 0.0), np.zeros((da, da), dtype=np.complex128),
                                  negligible=True))
        else:
            out.append(BlockState(weight, reduced / weight))
    return out


def block_direct_sum(dec: BlockDecomposition, block_states: list[BlockState]) -> np.ndarray:
    """Assemble (+)_k p_k sigma_k as one matrix on (+)_k H_Ak."""
    total = sum(da for da, _ in dec.blocks)
    out = np.zeros((total, total), dtype=np.complex128)
    off = 0
    for (da, _), bs in zip(dec.blocks, block_states):
        out[off:off + da, off:off + da] = bs.weight * bs.state
        off += da
    return out


def restrict_homomorphism(dec: BlockDecomposition, algebra: StarAlgebra, c: Channel,
                          tol: Tolerance = DEFAULT_TOL) -> list[Channel]:
    """Per-block reduced channels of a channel with Kraus operators in the algebra."""
    for k in c.kraus:
        if not algebra.contains(k, tol):
            raise ValueError("channel has a Kraus operator outside the algebra")
    reduced: list[list[np.ndarray]] = [[] for _ in dec.blocks]
    for kr in c.kraus:
        for k in range(dec.num_blocks):
            reduced[k].append(dec.algebra_factor(kr, k))
    return [Channel(ops, tol=tol) for ops in reduced]


# ---------------------------------------------------------------------------
# Channels attached to a decomposition
# ---------------------------------------------------------------------------

def random_channel_in_algebra(dec: BlockDecomposition, rng, side: str = "algebra",
                              kraus_rank: int = 2, tol: Tolerance = DEFAULT_TOL) -> Channel:
    """Random CPTP channel with Kraus operators in the algebra (or commutant).

    Built in model coordinates so trace preservation can be repaired exactly:
    raw factors L_i get replaced by L_i T^{-1/2} with T = sum L_i^dag L_i,
    which stays inside the (*-closed) algebra.
    """
    d = dec.dim
    kraus_model = [np.zeros((d, d), dtype=np.complex128) for _ in range(kraus_rank)]
    for k, sl in enumerate(dec.block_slices()):
        da, db = dec.blocks[k]
        fdim = da if side == "algebra" else db
        factors = [rng.standard_normal((fdim, fdim)) + 1j * rng.standard_normal((fdim, fdim))
                   for _ in range(kraus_rank)]
        t = sum(dagger(f) @ f for f in factors)
        vals, vecs = np.linalg.eigh(t)
        if vals[0] <= 1e-8:
            return random_channel_in_algebra(dec, rng, side, kraus_rank, tol)
        inv_sqrt = vecs @ np.diag(vals ** -0.5) @ dagger(vecs)
        for i, f in enumerate(factors):
            g = f @ inv_sqrt
            blk = kron(g, np.eye(db)) if side == "algebra" else kron(np.eye(da), g)
            kraus_model[i][sl, sl] = blk
    kraus = [dec.from_model(m) for m in kraus_model]
    return Channel(kraus, tol=tol)


def trace_out_channel(dec: BlockDecomposition, betas: list[np.ndarray] | None = None,
                      tol: Tolerance = DEFAULT_TOL) -> Channel:
    """The commutant-side erasure D0(rho) = (+)_k Tr_Bk[P_k rho P_k] (x) beta_k.

    Its Kraus operators lie in the commutant; applying it to two states gives
    equal outputs iff the states have the same partial trace over the
    commutant, which is the single-step witness for state equivalence.
    """
    d = dec.dim
    kraus = []
    for k, sl in enumerate(dec.block_slices()):
        da, db = dec.blocks[k]
        beta = np.eye(db, dtype=np.complex128) / db if betas is None else betas[k]
        vals, vecs = np.linalg.eigh((beta + dagger(beta)) / 2)
        for lam, v in zip(vals, vecs.T):
            if lam <= tol.rank_tol:
                continue
            for b in range(db):
                op = np.zeros((d, d), dtype=np.complex128)
                op[sl, sl] = kron(np.eye(da), np.sqrt(lam) * np.outer(v, np.eye(db)[b]))
                kraus.append(op)
    return Channel([dec.from_model(m) for m in kraus], tol=tol)


def conditional_expectation_channel(dec: BlockDecomposition,
                                    tol: Tolerance = DEFAULT_TOL) -> Channel:
    """P_A = embed . Tr_B as a channel on the full system (idempotent)."""
    return trace_out_channel(dec, betas=None, tol=tol)
