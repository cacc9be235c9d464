"""Quantum channels (CPTP maps) with Kraus, Choi, and superoperator forms.

Conventions, fixed package-wide:

* superoperator ``S = sum_i conj(K_i) (x) K_i`` acts on column-stacked
  vectorizations, ``vec(T(rho)) = S vec(rho)``;
* the Choi matrix lives on out (x) in with the OUTPUT factor first,
  ``M = sum_ij T(|i><j|) (x) |i><j|``;
* trace preservation means ``Tr_out(M) = I_in`` to eq_tol and is enforced at
  construction (malformed inputs are rejected, never normalized).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    DEFAULT_TOL,
    Tolerance,
    as_cmatrix,
    dagger,
    is_unitary,
    is_hermitian,
    kron,
    matrix_from_json,
    matrix_to_json,
    max_abs,
    unvec,
    vec,
    _as_rng,
)

__all__ = [
    "StateDM",
    "Channel",
    "compose",
    "apply",
    "channels_commute",
    "identity",
    "unitary",
    "erasure_to",
    "dephase",
    "diagonal_unitary",
    "permutation_unitary",
    "classical_from_stochastic",
    "is_logically_invertible",
    "is_physically_reversible",
    "random_cptp",
    "channel_to_json",
    "channel_from_json",
    "traceless_hermitian_basis",
]


@dataclass(frozen=True)
class StateDM:
    """A density matrix: Hermitian, positive semidefinite, unit trace."""

    dim: int
    matrix: np.ndarray
    tol: Tolerance = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        m = as_cmatrix(self.matrix)
        if m.shape != (self.dim, self.dim):
            raise ValueError(f"state matrix must be {self.dim}x{self.dim}")
        if not is_hermitian(m, self.tol):
            raise ValueError("state matrix is not Hermitian")
        evs = np.linalg.eigvalsh((m + dagger(m)) / 2)
        # channel outputs may dip a hair below zero; allow 10*rank_tol slack
        if evs[0] < -10 * self.tol.rank_tol:
            raise ValueError(f"state matrix is not PSD (min eigenvalue {evs[0]:.3e})")
        if abs(np.trace(m).real - 1.0) > self.tol.eq_tol or abs(np.trace(m).imag) > self.tol.eq_tol:
            raise ValueError(f"state matrix has trace {np.trace(m):.6f}, expected 1")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def pure(cls, psi, tol: Tolerance = DEFAULT_TOL) -> "StateDM":
        v = np.asarray(psi, dtype=np.complex128).reshape(-1)
        v = v / np.linalg.norm(v)
        return cls(len(v), np.outer(v, v.conj()), tol)

    @classmethod
    def basis_state(cls, dim: int, k: int, tol: Tolerance = DEFAULT_TOL) -> "StateDM":
        m = np.zeros((dim, dim), dtype=np.complex128)
        m[k, k] = 1.0
        return cls(dim, m, tol)

    @classmethod
    def maximally_mixed(cls, dim: int, tol: Tolerance = DEFAULT_TOL) -> "StateDM":
        return cls(dim, np.eye(dim, dtype=np.complex128) / dim, tol)


def _kraus_to_superop(kraus: list[np.ndarray]) -> np.ndarray:
    dout, din = kraus[0].shape
    s = np.zeros((dout * dout, din * din), dtype=np.complex128)
    for k in kraus:
        s += kron(np.conj(k), k)
    return s


def _kraus_to_choi(kraus: list[np.ndarray]) -> np.ndarray:
    dout, din = kraus[0].shape
    m = np.zeros((dout * din, dout * din), dtype=np.complex128)
    for k in kraus:
        w = k.flatten(order="C")  # row-major puts the output index first
        m += np.outer(w, w.conj())
    return m


def _superop_to_choi(s: np.ndarray, dout: int, din: int) -> np.ndarray:
    s4 = s.reshape(dout, dout, din, din)  # axes (t, s, j, i)
    return s4.transpose(1, 3, 0, 2).reshape(dout * din, dout * din)


def _choi_to_superop(m: np.ndarray, dout: int, din: int) -> np.ndarray:
    m4 = m.reshape(dout, din, dout, din)  # axes (s, i, t, j)
    return m4.transpose(2, 0, 3, 1).reshape(dout * dout, din * din)


def _choi_to_kraus(m: np.ndarray, dout: int, din: int, tol: Tolerance) -> list[np.ndarray]:
    vals, vecs = np.linalg.eigh((m + dagger(m)) / 2)
    vmax = max(vals[-1], 0.0)
    ops = []
    for lam, v in zip(vals, vecs.T):
        if lam > tol.rank_tol * max(vmax, 1.0):
            ops.append(np.sqrt(lam) * v.reshape(dout, din))
    return ops


class Channel:
    """An immutable CPTP map with all three representations cached."""

    def __init__(self, kraus: list[np.ndarray], *, tol: Tolerance = DEFAULT_TOL,
                 _skip_validation: bool = False):
        kraus = [as_cmatrix(k) for k in kraus]
        if not kraus:
            raise ValueError("need at least one Kraus operator")
        dout, din = kraus[0].shape
        if any(k.shape != (dout, din) for k in kraus):
            raise ValueError("Kraus operators must share a common shape")
        self.dim_in = din
        self.dim_out = dout
        self.tol = tol
        self.kraus = tuple(kraus)  # immutable after construction
        self.superop = _kraus_to_superop(kraus)
        self.choi = _kraus_to_choi(kraus)
        if not _skip_validation:
            self._validate()

    def _validate(self):
        tp = self.trace_out_choi()
        if max_abs(tp - np.eye(self.dim_in)) > self.tol.eq_tol:
            raise ValueError("map is not trace preserving within eq_tol")

    def trace_out_choi(self) -> np.ndarray:
        m4 = self.choi.reshape(self.dim_out, self.dim_in, self.dim_out, self.dim_in)
        return np.einsum("sisj->ij", m4)

    @classmethod
    def from_kraus(cls, ops, tol: Tolerance = DEFAULT_TOL) -> "Channel":
        return cls(list(ops), tol=tol)

    @classmethod
    def from_choi(cls, m, dim_out: int | None = None, dim_in: int | None = None,
                  tol: Tolerance = DEFAULT_TOL) -> "Channel":
        m = as_cmatrix(m)
        if dim_out is None or dim_in is None:
            d = int(round(np.sqrt(m.shape[0])))
            dim_out = dim_in = d
        if m.shape != (dim_out * dim_in,) * 2:
            raise ValueError("Choi matrix has inconsistent dimensions")
        if not is_hermitian(m, tol):
            raise ValueError("Choi matrix is not Hermitian")
        evs = np.linalg.eigvalsh((m + dagger(m)) / 2)
        if evs[0] < -tol.rank_tol * max(1.0, evs[-1]):
            raise ValueError(f"Choi matrix is not PSD (min eigenvalue {evs[0]:.3e})")
        ops = _choi_to_kraus(m, dim_out, dim_in, tol)
        return cls(ops, tol=tol)

    @classmethod
    def from_superop(cls, s, dim_out: int | None = None, dim_in: int | None = None,
                     tol: Tolerance = DEFAULT_TOL) -> "Channel":
        s = as_cmatrix(s)
        if dim_out is None or dim_in is None:
            dim_out = int(round(np.sqrt(s.shape[0])))
            dim_in = int(round(np.sqrt(s.shape[1])))
        return cls.from_choi(_superop_to_choi(s, dim_out, dim_in), dim_out, dim_in, tol)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        """Apply to a raw matrix (no state validation)."""
        rho = np.asarray(rho, dtype=np.complex128)
        out = np.zeros((self.dim_out, self.dim_out), dtype=np.complex128)
        for k in self.kraus:
            out += k @ rho @ dagger(k)
        return out

    def adjoint_apply(self, x: np.ndarray) -> np.ndarray:
        """Heisenberg-picture action sum_i K_i^dag X K_i."""
        x = np.asarray(x, dtype=np.complex128)
        out = np.zeros((self.dim_in, self.dim_in), dtype=np.complex128)
        for k in self.kraus:
            out += dagger(k) @ x @ k
        return out

    def equals(self, other: "Channel", tol: Tolerance | None = None) -> bool:
        tol = tol or self.tol
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out):
            return False
        return max_abs(self.superop - other.superop) <= tol.eq_tol

    def __repr__(self):
        return f"Channel(dim_in={self.dim_in}, dim_out={self.dim_out}, kraus_rank={len(self.kraus)})"


def compose(t1: Channel, t2: Channel, tol: Tolerance | None = None) -> Channel:
    """The channel "t2 first, then t1"; superoperator product S(t1) S(t2)."""
    if t1.dim_in != t2.dim_out:
        raise ValueError(f"cannot compose: t1 expects dim {t1.dim_in}, t2 outputs {t2.dim_out}")
    tol = tol or t1.tol
    ops = [k1 @ k2 for k1 in t1.kraus for k2 in t2.kraus]
    if len(ops) > t1.dim_out * t2.dim_in * 2:
        # keep Kraus ranks bounded under repeated composition
        return Channel.from_choi(_kraus_to_choi(ops), t1.dim_out, t2.dim_in, tol)
    return Channel(ops, tol=tol)


def apply(t: Channel, rho: StateDM) -> StateDM:
    if rho.dim != t.dim_in:
        raise ValueError(f"state has dim {rho.dim}, channel expects {t.dim_in}")
    return StateDM(t.dim_out, t(rho.matrix), t.tol)


def channels_commute(a: Channel, b: Channel, tol: Tolerance = DEFAULT_TOL) -> bool:
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out) or a.dim_in != a.dim_out:
        raise ValueError("commutation requires equal square channels")
    return max_abs(a.superop @ b.superop - b.superop @ a.superop) <= tol.eq_tol


# ---------------------------------------------------------------------------
# Named constructors
# ---------------------------------------------------------------------------

def identity(d: int, tol: Tolerance = DEFAULT_TOL) -> Channel:
    return Channel([np.eye(d, dtype=np.complex128)], tol=tol)


def unitary(u, tol: Tolerance = DEFAULT_TOL) -> Channel:
    u = as_cmatrix(u)
    if not is_unitary(u, tol):
        raise ValueError("matrix is not unitary within eq_tol")
    return Channel([u], tol=tol)


def erasure_to(state, tol: Tolerance = DEFAULT_TOL) -> Channel:
    """rho -> sigma Tr[rho] for a fixed target density matrix sigma."""
    sigma = state.matrix if isinstance(state, StateDM) else as_cmatrix(state)
    d = sigma.shape[0]
    vals, vecs = np.linalg.eigh((sigma + dagger(sigma)) / 2)
    ops = []
    for lam, v in zip(vals, vecs.T):
        if lam > tol.rank_tol:
            for i in range(d):
                k = np.zeros((d, d), dtype=np.complex128)
                k[:, i] = np.sqrt(lam) * v
                ops.append(k)
    return Channel(ops, tol=tol)


def dephase(d: int, tol: Tolerance = DEFAULT_TOL) -> Channel:
    ops = []
    for k in range(d):
        p = np.zeros((d, d), dtype=np.complex128)
        p[k, k] = 1.0
        ops.append(p)
    return Channel(ops, tol=tol)


def diagonal_unitary(thetas, tol: Tolerance = DEFAULT_TOL) -> Channel:
    thetas = np.asarray(thetas, dtype=float).reshape(-1)
    return Channel([np.diag(np.exp(1j * thetas))], tol=tol)


def permutation_unitary(perm, tol: Tolerance = DEFAULT_TOL) -> Channel:
    """Unitary channel of the permutation matrix sending |k> to |perm[k]>."""
    perm = list(perm)
    d = len(perm)
    if sorted(perm) != list(range(d)):
        raise ValueError("not a permutation")
    u = np.zeros((d, d), dtype=np.complex128)
    for k, j in enumerate(perm):
        u[j, k] = 1.0
    return Channel([u], tol=tol)


def classical_from_stochastic(p, tol: Tolerance = DEFAULT_TOL) -> Channel:
    """Classical channel sum_jk P[j,k] |j><k| rho |k><j| of a column-stochastic P."""
    p = np.asarray(p, dtype=float)
    d = p.shape[0]
    if p.shape != (d, d):
        raise ValueError("stochastic matrix must be square")
    if np.min(p) < -DEFAULT_TOL.rank_tol:
        raise ValueError("stochastic matrix has negative entries")
    colsums = p.sum(axis=0)
    if max_abs(colsums - 1.0) > tol.eq_tol:
        raise ValueError("stochastic matrix columns must sum to 1")
    ops = []
    for j in range(d):
        for k in range(d):
            if p[j, k] > 0:
                op = np.zeros((d, d), dtype=np.complex128)
                op[j, k] = np.sqrt(p[j, k])
                ops.append(op)
    return Channel(ops, tol=tol)


# ---------------------------------------------------------------------------
# Conservation-of-information predicates
# ---------------------------------------------------------------------------

def traceless_hermitian_basis(d: int) -> list[np.ndarray]:
    """Orthonormal (HS) basis of the traceless Hermitian subspace, size d^2-1."""
    basis = []
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=np.complex128)
            m[j, k] = m[k, j] = 1 / np.sqrt(2)
            basis.append(m)
            m = np.zeros((d, d), dtype=np.complex128)
            m[j, k] = -1j / np.sqrt(2)
            m[k, j] = 1j / np.sqrt(2)
            basis.append(m)
    for l in range(1, d):
        m = np.zeros((d, d), dtype=np.complex128)
        for i in range(l):
            m[i, i] = 1.0
        m[l, l] = -l
        basis.append(m / np.linalg.norm(m))
    return basis


def is_logically_invertible(t: Channel, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff the channel is injective on density matrices.

    Density matrices span the Hermitian matrices and trace is preserved, so
    injectivity is equivalent to the restriction of the map to the traceless
    Hermitian subspace having trivial nullspace at rank_tol.
    """
    if t.dim_in != t.dim_out:
        raise ValueError("invertibility is defined for square channels")
    d = t.dim_in
    basis = traceless_hermitian_basis(d)
    if not basis:
        return True
    cols = np.array([[np.sum(np.conj(b2) * t(b1)).real for b1 in basis] for b2 in basis])
    s = np.linalg.svd(cols, compute_uv=False)
    return bool(s[-1] > tol.rank_tol * max(s[0], 1.0))


def is_physically_reversible(t: Channel, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff the inverse map exists and is itself a channel (CPTP)."""
    if t.dim_in != t.dim_out:
        raise ValueError("reversibility is defined for square channels")
    s = t.superop
    sv = np.linalg.svd(s, compute_uv=False)
    if sv[-1] <= tol.rank_tol * max(sv[0], 1.0):
        return False
    sinv = np.linalg.inv(s)
    choi_inv = _superop_to_choi(sinv, t.dim_out, t.dim_in)
    herm_defect = max_abs(choi_inv - dagger(choi_inv))
    scale = max(1.0, max_abs(choi_inv))
    if herm_defect > 100 * tol.rank_tol * scale:
        return False
    evs = np.linalg.eigvalsh((choi_inv + dagger(choi_inv)) / 2)
    if evs[0] < -100 * tol.rank_tol * scale:
        return False
    m4 = choi_inv.reshape(t.dim_out, t.dim_in, t.dim_out, t.dim_in)
    tp = np.einsum("sisj->ij", m4)
    return max_abs(tp - np.eye(t.dim_in)) <= 100 * tol.eq_tol * scale


# ---------------------------------------------------------------------------
# Sampling and JSON
# ---------------------------------------------------------------------------

def random_cptp(d: int, seed, kraus_rank: int | None = None,
                tol: Tolerance = DEFAULT_TOL) -> Channel:
    """Random CPTP channel from a Haar-random Stinespring isometry."""
    rng = _as_rng(seed)
    r = kraus_rank or d
    g = rng.standard_normal((d * r, d)) + 1j * rng.standard_normal((d * r, d))
    q, _ = np.linalg.qr(g)  # (d*r) x d isometry
    ops = [q[i * d:(i + 1) * d, :] for i in range(r)]
    return Channel(ops, tol=tol)


def channel_to_json(t: Channel) -> dict:
    return {"kind": "kraus", "ops": [matrix_to_json(k) for k in t.kraus]}


def channel_from_json(obj: dict, tol: Tolerance = DEFAULT_TOL) -> Channel:
    kind = obj.get("kind")
    if kind == "kraus":
        return Channel([matrix_from_json(o) for o in obj["ops"]], tol=tol)
    if kind == "choi":
        return Channel.from_choi(matrix_from_json(obj["matrix"]), tol=tol)
    if kind == "unitary":
        return unitary(matrix_from_json(obj["matrix"]), tol=tol)
    if kind == "stochastic":
        return classical_from_stochastic(matrix_from_json(obj["matrix"]).real, tol=tol)
    raise ValueError(f"unknown channel kind: {kind!r}")
