"""Dense complex linear algebra primitives shared by every other module.

Matrices are plain ``numpy.ndarray`` objects with dtype complex128.  All
vectorization in this package uses the COLUMN-STACKING convention::

    vec(A X B) = (B^T (x) A) vec(X)

so that a superoperator acting on vec(rho) is sum_i conj(K_i) (x) K_i for a
channel with Kraus operators K_i.  Approximate equality everywhere means
max-abs entry difference, controlled by a single :class:`Tolerance` policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "NumericalFailure",
    "as_cmatrix",
    "dagger",
    "max_abs",
    "approx_equal",
    "is_hermitian",
    "is_unitary",
    "kron",
    "vec",
    "unvec",
    "nullspace",
    "eig_hermitian",
    "gram_schmidt_hs",
    "hs_inner",
    "matrix_to_json",
    "matrix_from_json",
    "random_unitary",
    "random_hermitian",
    "random_pure_state",
    "random_density_matrix",
]


class NumericalFailure(RuntimeError):
    """Raised when a numerical routine cannot meet its contract."""


@dataclass(frozen=True)
class Tolerance:
    """Global tolerance policy.

    eq_tol bounds max-abs entry differences in approximate equality checks;
    rank_tol is the singular-value cutoff for nullspace/rank decisions.
    """

    eq_tol: float = 1e-9
    rank_tol: float = 1e-10

    def __post_init__(self):
        if not (0.0 < self.rank_tol <= self.eq_tol < 1.0):
            raise ValueError(
                f"require 0 < rank_tol <= eq_tol < 1, got "
                f"rank_tol={self.rank_tol}, eq_tol={self.eq_tol}"
            )


DEFAULT_TOL = Tolerance()


def as_cmatrix(m) -> np.ndarray:
    """Coerce to a 2-d complex128 array and reject non-finite entries."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError("matrix contains NaN or Inf entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def max_abs(m) -> float:
    a = np.asarray(m)
    return 0.0 if a.size == 0 else float(np.max(np.abs(a)))


def approx_equal(a, b, tol: Tolerance = DEFAULT_TOL) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    return max_abs(a - b) <= tol.eq_tol


def is_hermitian(m, tol: Tolerance = DEFAULT_TOL) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and max_abs(m - dagger(m)) <= tol.eq_tol


def is_unitary(m, tol: Tolerance = DEFAULT_TOL) -> bool:
    m = np.asarray(m)
    if m.shape[0] != m.shape[1]:
        return False
    eye = np.eye(m.shape[0])
    return max_abs(dagger(m) @ m - eye) <= tol.eq_tol


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, first factor on the coarse (slow) index."""
    return np.kron(np.asarray(a), np.asarray(b))


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization, returned as a 1-d array."""
    return np.asarray(m).flatten(order="F")


def unvec(v: np.ndarray, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec`.  Square by default."""
    v = np.asarray(v).reshape(-1)
    if rows is None:
        rows = int(round(np.sqrt(v.size)))
        cols = rows
    if cols is None:
        cols = v.size // rows
    if rows * cols != v.size:
        raise ValueError(f"cannot reshape length-{v.size} vector to {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product Tr[a^dag b]."""
    return complex(np.sum(np.conj(a) * b))


def nullspace(m: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> list[np.ndarray]:
    """Orthonormal basis of the (right) nullspace of ``m``.

    A singular value counts as zero when sigma <= rank_tol * max(sigma_max, 1);
    the absolute floor keeps noise-only matrices (for instance an exact-zero
    commutator block perturbed at machine precision) from faking full rank.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.size == 0:
        return [e for e in np.eye(m.shape[1], dtype=np.complex128).T]
    try:
        # the reduced SVD already carries the full right-singular basis for
        # tall matrices; only wide inputs need the full V
        _, s, vh = np.linalg.svd(m, full_matrices=m.shape[0] < m.shape[1])
    except np.linalg.LinAlgError as exc:  # pragma: no cover - scipy fallback rare
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol.rank_tol * max(smax, 1.0)))
    return [vh[i].conj() for i in range(rank, m.shape[1])]


def eig_hermitian(m: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (values ascending, matrix of orthonormal column eigenvectors).
    Raises ValueError if the input is not Hermitian within eq_tol.
    """
    m = np.asarray(m, dtype=np.complex128)
    if not is_hermitian(m, tol):
        raise ValueError("eig_hermitian requires a Hermitian matrix")
    vals, vecs = np.linalg.eigh((m + dagger(m)) / 2.0)
    return vals, vecs


def gram_schmidt_hs(mats, tol: Tolerance = DEFAULT_TOL) -> list[np.ndarray]:
    """Orthonormalize matrices under the Hilbert-Schmidt inner product.

    Modified Gram-Schmidt with a second re-orthogonalization pass; inputs that
    are numerically dependent on the running span are dropped at rank_tol.
    """
    basis: list[np.ndarray] = []
    shape = None
    for m in mats:
        m = np.asarray(m, dtype=np.complex128)
        if shape is None:
            shape = m.shape
        elif m.shape != shape:
            raise ValueError("all matrices must share the same shape")
        w = m.copy()
        for _ in range(2):
            for b in basis:
                w = w - hs_inner(b, w) * b
        norm = np.linalg.norm(w)
        if norm > tol.rank_tol * max(1.0, np.linalg.norm(m)):
            basis.append(w / norm)
    return basis


# ---------------------------------------------------------------------------
# JSON encoding: {"rows": n, "cols": m, "data": [[re, im], ...]} row-major.
# ---------------------------------------------------------------------------

def matrix_to_json(m: np.ndarray) -> dict:
    m = as_cmatrix(m)
    data = [[float(z.real), float(z.imag)] for z in m.flatten(order="C")]
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "data": data}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix object: {exc}") from exc
    if rows <= 0 or cols <= 0:
        raise ValueError("matrix dimensions must be positive")
    if len(data) != rows * cols:
        raise ValueError(f"expected {rows * cols} entries, got {len(data)}")
    flat = np.array([complex(re, im) for re, im in data], dtype=np.complex128)
    return as_cmatrix(flat.reshape((rows, cols)))


# ---------------------------------------------------------------------------
# Seeded samplers.  Every randomized routine in the package threads an
# explicit numpy Generator (or an integer seed) through these helpers.
# ---------------------------------------------------------------------------

def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_unitary(d: int, seed) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    rng = _as_rng(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(d: int, seed) -> np.ndarray:
    rng = _as_rng(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + dagger(g)) / 2.0


def random_pure_state(d: int, seed) -> np.ndarray:
    """Unit vector of dimension d (1-d array)."""
    rng = _as_rng(seed)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_density_matrix(d: int, seed, rank: int | None = None) -> np.ndarray:
    """Density matrix from a normalized Wishart factor of the given rank."""
    rng = _as_rng(seed)
    r = d if rank is None else rank
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real
