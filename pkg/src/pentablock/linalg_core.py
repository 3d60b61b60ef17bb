"""Dense complex linear algebra: defects, polar parts, numerical radius,
joint spectra of commuting matrices and a small subspace calculus."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

TOL = 1e-9


def as_cmatrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got an array of shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def adj(M: np.ndarray) -> np.ndarray:
    return M.conj().T


def opnorm(M: np.ndarray) -> float:
    """Spectral norm; zero for empty matrices."""
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def hermitian_part(M: np.ndarray) -> np.ndarray:
    return (M + adj(M)) / 2


def default_rank_tol(M: np.ndarray) -> float:
    """``(1 + sigma_max) * dim * 1e-12``."""
    return (1.0 + opnorm(M)) * max(M.shape + (1,)) * 1e-12


# subspaces


@dataclass(frozen=True)
class Subspace:
    """A subspace of C^n stored as a matrix with orthonormal columns."""

    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=complex).reshape(self.ambient_dim, -1)
        object.__setattr__(self, "basis", B)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ adj(self.basis)

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, np.eye(n, dtype=complex))

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(n, np.zeros((n, 0), dtype=complex))

    def contains(self, v: np.ndarray, tol: float = 1e-8) -> bool:
        v = np.asarray(v, dtype=complex)
        return bool(np.linalg.norm(v - self.basis @ (adj(self.basis) @ v)) <= tol * (1 + np.linalg.norm(v)))

    def same_as(self, other: "Subspace", tol: float = 1e-8) -> bool:
        return self.dim == other.dim and opnorm(self.projector - other.projector) <= tol


def span(M: np.ndarray, rank_tol: Optional[float] = None) -> Subspace:
    """Orthonormal basis of the column space (SVD based, deterministic)."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    if M.shape[1] == 0:
        return Subspace.zero(n)
    U, sv, _ = np.linalg.svd(M, full_matrices=False)
    thr = default_rank_tol(M) if rank_tol is None else rank_tol
    return Subspace(n, U[:, sv > thr])


def kernel(M: np.ndarray, rank_tol: Optional[float] = None) -> Subspace:
    """Null space from the right singular vectors with small singular values."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[1]
    if M.shape[0] == 0 or n == 0:
        return Subspace.full(n)
    _, sv, Vh = np.linalg.svd(M, full_matrices=True)
    thr = default_rank_tol(M) if rank_tol is None else rank_tol
    rank = int(np.sum(sv > thr))
    return Subspace(n, adj(Vh[rank:]))


def intersect(U: Subspace, V: Subspace, rank_tol: float = 1e-10) -> Subspace:
    """Vectors fixed by both orthogonal projections."""
    if U.ambient_dim != V.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    n = U.ambient_dim
    eye = np.eye(n)
    return kernel(np.vstack([eye - U.projector, eye - V.projector]), rank_tol)


def intersect_all(spaces: Sequence[Subspace], rank_tol: float = 1e-10) -> Subspace:
    out = spaces[0]
    for V in spaces[1:]:
        out = intersect(out, V, rank_tol)
    return out


def complement(U: Subspace) -> Subspace:
    if U.dim == 0:
        return Subspace.full(U.ambient_dim)
    return kernel(adj(U.basis), rank_tol=0.5)


def compress(M: np.ndarray, U: Subspace) -> np.ndarray:
    if M.shape[0] != U.ambient_dim:
        raise ValueError("dimension mismatch")
    return adj(U.basis) @ M @ U.basis


def restricted_kernel(M: np.ndarray, K: Subspace, rank_tol: float) -> Subspace:
    """``{v in K : M v = 0}`` expressed in ambient coordinates."""
    if K.dim == 0:
        return K
    inner = kernel(M @ K.basis, rank_tol)
    return Subspace(K.ambient_dim, _orthonormalize(K.basis @ inner.basis))


def _orthonormalize(B: np.ndarray) -> np.ndarray:
    if B.shape[1] == 0:
        return B
    Q, _ = np.linalg.qr(B)
    return Q


def largest_reducing_in(
    ops: Sequence[np.ndarray],
    K: Subspace,
    tol: float = 1e-9,
    rng: Optional[np.random.Generator] = None,
) -> Subspace:
    """Largest subspace of ``K`` invariant under every ``X`` and ``X*`` in ``ops``.

    Iterates ``L <- {v in L : X v in L, X* v in L}`` until the dimension stops
    dropping. ``rng`` only rotates the starting basis; the result does not
    depend on it.
    """
    n = K.ambient_dim
    mats = [np.asarray(X, dtype=complex) for X in ops]
    mats = mats + [adj(X) for X in mats]
    scale = 1.0 + max((opnorm(X) for X in mats), default=0.0)
    B = K.basis
    if rng is not None and B.shape[1] > 1:
        B = B @ random_unitary(B.shape[1], rng)
    while B.shape[1] > 0:
        outside = np.vstack([X @ B - B @ (adj(B) @ (X @ B)) for X in mats])
        null = kernel(outside, tol * scale)
        if null.dim == B.shape[1]:
            break
        B = _orthonormalize(B @ null.basis)
    return polish_reducing(mats[: len(ops)], Subspace(n, B))


def polish_reducing(ops: Sequence[np.ndarray], L: Subspace, iters: int = 3) -> Subspace:
    """Sharpen a nearly reducing subspace by block inverse iteration.

    The iteration above keeps vectors whose leak is below its rank threshold,
    so its answer is only accurate to that threshold. Inverse iteration on a
    fixed generic combination ``Z`` of the operators, started from the
    eigenvalues of ``Z`` compressed to ``L``, converges to the nearby exact
    invariant subspace. The result is kept only if it reduces better.
    """
    k = L.dim
    n = L.ambient_dim
    if k == 0 or k == n:
        return L
    mats = [np.asarray(X, dtype=complex) for X in ops]
    c = np.exp(1j * (0.7 + 1.3 * np.arange(len(mats)))) / (1.0 + np.arange(len(mats)))
    Z = sum(ci * X for ci, X in zip(c, mats))
    lam, Y = np.linalg.eig(adj(L.basis) @ Z @ L.basis)
    scale = 1.0 + opnorm(Z)
    cols = []
    for j in range(k):
        x = L.basis @ Y[:, j]
        shift = lam[j] + 1e-13 * scale
        for _ in range(iters):
            try:
                x = np.linalg.solve(Z - shift * np.eye(n), x)
            except np.linalg.LinAlgError:
                break
            x = x / np.linalg.norm(x)
        cols.append(x)
    B = _orthonormalize(np.stack(cols, axis=1))
    if np.linalg.matrix_rank(B.conj().T @ L.basis, tol=1e-6) < k:
        return L
    cand = Subspace(n, B)
    both = list(mats) + [adj(X) for X in mats]
    return cand if reducing_residual(both, cand) < reducing_residual(both, L) else L


def reducing_residual(ops: Sequence[np.ndarray], L: Subspace) -> float:
    """``max_X ||(I - P_L) X P_L|| + ||(I - P_L) X* P_L||``."""
    Pl = L.projector
    Q = np.eye(L.ambient_dim) - Pl
    worst = 0.0
    for X in ops:
        X = np.asarray(X, dtype=complex)
        worst = max(worst, opnorm(Q @ X @ Pl) + opnorm(Q @ adj(X) @ Pl))
    return worst


# square roots and defects


def psd_sqrt(M: np.ndarray, tol: float = TOL) -> np.ndarray:
    """Hermitian square root of a psd matrix.

    Eigenvalues at rounding level are set to zero so that an exact zero is not
    inflated to ``sqrt(eps)``.
    """
    M = as_cmatrix(M)
    if M.size == 0:
        return M.copy()
    scale = 1.0 + opnorm(M)
    if opnorm(M - adj(M)) > tol * scale:
        raise ValueError("matrix is not Hermitian")
    w, V = np.linalg.eigh(hermitian_part(M))
    if w[0] < -tol * scale:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    w = np.where(w > _round_floor(w), w, 0.0)
    return (V * np.sqrt(w)) @ adj(V)


def _round_floor(w: np.ndarray) -> float:
    return 8 * max(w.size, 1) * np.finfo(float).eps * (1.0 + float(np.max(np.abs(w))))


@dataclass(frozen=True)
class Defect:
    """``D_P = (I - P*P)^{1/2}`` together with an eigenbasis of its range.

    ``basis`` has orthonormal columns spanning the range and ``values`` holds the
    matching eigenvalues of ``D_P``. ``Dm = diag(values) basis*`` is ``D_P``
    viewed as a map into range coordinates.
    """

    D: np.ndarray
    range: Subspace
    values: np.ndarray

    @property
    def dim(self) -> int:
        return self.range.dim

    @property
    def basis(self) -> np.ndarray:
        return self.range.basis

    @property
    def Dm(self) -> np.ndarray:
        return self.values[:, None] * adj(self.basis)

    @property
    def Dm_pinv(self) -> np.ndarray:
        """Right inverse of ``Dm``: ``basis diag(1/values)``."""
        return self.basis / self.values[None, :]

    def to_defect(self, M: np.ndarray) -> np.ndarray:
        """Coordinates on the defect range of an operator given on the ambient space."""
        return adj(self.basis) @ M @ self.basis


def defect(P: np.ndarray, tol: float = TOL, rank_tol: Optional[float] = None) -> Defect:
    """Defect operator of a contraction.

    The rank decision is taken on the eigenvalues of ``D_P^2 = I - P*P``, which
    are free of the square-root amplification of rounding noise.
    """
    P = as_cmatrix(P)
    n = P.shape[0]
    if opnorm(P) > 1 + tol:
        raise ValueError(f"not a contraction: ||P|| = {opnorm(P):.12g}")
    M = hermitian_part(np.eye(n) - adj(P) @ P)
    w, V = np.linalg.eigh(M)
    w = np.where(w > _round_floor(w), w, 0.0)
    D = (V * np.sqrt(w)) @ adj(V)
    thr = (1.0 + (w.max() if n else 0.0)) * max(n, 1) * 1e-12 if rank_tol is None else rank_tol
    keep = w > thr
    return Defect(D, Subspace(n, V[:, keep]), np.sqrt(w[keep]))


def polar_unitary(N: np.ndarray, tol: float = TOL) -> np.ndarray:
    """``u(N)`` with ``u(z) = z/|z|`` and ``u(0) = 1`` for a normal matrix."""
    N = as_cmatrix(N)
    scale = 1.0 + opnorm(N) ** 2
    if opnorm(N @ adj(N) - adj(N) @ N) > tol * scale:
        raise ValueError("matrix is not normal")
    T, Z = scipy.linalg.schur(N, output="complex")
    d = np.diag(T)
    mod = np.abs(d)
    small = mod <= tol * (1 + opnorm(N))
    u = np.where(small, 1.0, d / np.where(small, 1.0, mod))
    return (Z * u) @ adj(Z)


# numerical radius


def _top_eig(F: np.ndarray, theta: np.ndarray) -> np.ndarray:
    rot = np.exp(1j * np.asarray(theta))[..., None, None]
    H = (rot * F + np.conj(rot) * adj(F)) / 2
    return np.linalg.eigvalsh(H)[..., -1]


def numerical_radius(F: np.ndarray, grid: int = 720, refine_iters: int = 40) -> float:
    """``max_theta lambda_max(Re(e^{i theta} F))`` by grid search plus golden sections."""
    F = as_cmatrix(F) if np.asarray(F).size else np.zeros((0, 0), dtype=complex)
    if F.size == 0:
        return 0.0
    thetas = 2 * np.pi * np.arange(grid) / grid
    vals = _top_eig(F, thetas)
    best = float(vals.max())
    h = 2 * np.pi / grid
    invphi = (np.sqrt(5) - 1) / 2
    for k in np.argsort(vals)[-3:]:
        lo, hi = thetas[k] - h, thetas[k] + h
        c = hi - invphi * (hi - lo)
        d = lo + invphi * (hi - lo)
        fc, fd = _top_eig(F, c), _top_eig(F, d)
        for _ in range(refine_iters):
            if fc > fd:
                hi, d, fd = d, c, fc
                c = hi - invphi * (hi - lo)
                fc = _top_eig(F, c)
            else:
                lo, c, fc = c, d, fd
                d = lo + invphi * (hi - lo)
                fd = _top_eig(F, d)
        best = max(best, float(fc), float(fd))
    return best


# joint spectrum


class DeflationError(ArithmeticError):
    def __init__(self, msg: str, residual: float):
        super().__init__(f"{msg} (residual {residual:.3e})")
        self.residual = residual


def commutator_residual(mats: Sequence[np.ndarray]) -> float:
    """``max ||[X, Y]|| / (1 + ||X|| ||Y||)`` over pairs."""
    worst = 0.0
    for i, X in enumerate(mats):
        for Y in mats[i + 1:]:
            r = opnorm(X @ Y - Y @ X) / (1 + opnorm(X) * opnorm(Y))
            worst = max(worst, r)
    return worst


def joint_spectrum(
    mats: Sequence[np.ndarray],
    tol: float = TOL,
    rng: Optional[np.random.Generator] = None,
    max_retries: int = 8,
) -> np.ndarray:
    """Joint eigenvalues of commuting matrices with multiplicity, shape (n, k).

    Recursive deflation: a common eigenvector is found inside an eigenspace of a
    random linear combination, the tuple is read off, and the quotient is
    handled the same way. Derogatory families recurse inside eigenspaces.
    """
    mats = [as_cmatrix(M) for M in mats]
    n = mats[0].shape[0]
    if any(M.shape != (n, n) for M in mats):
        raise ValueError("joint_spectrum needs square matrices of equal size")
    if commutator_residual(mats) > tol:
        raise ValueError("matrices do not commute")
    rng = np.random.default_rng(0) if rng is None else rng
    out: list = []
    _deflate(mats, out, rng, max_retries)
    return np.array(out, dtype=complex).reshape(n, len(mats))


def _deflate(mats, out, rng, max_retries):
    n = mats[0].shape[0]
    k = len(mats)
    if n == 0:
        return
    if n == 1:
        out.append([M[0, 0] for M in mats])
        return
    scale = 1.0 + max(opnorm(M) for M in mats)
    worst = np.inf
    for _ in range(max_retries):
        c = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        c /= np.linalg.norm(c)
        C = sum(ci * M for ci, M in zip(c, mats))
        lam = np.linalg.eigvals(C)
        lam0 = lam[np.argmax(np.abs(lam))]
        _, sv, Vh = np.linalg.svd(C - lam0 * np.eye(n))
        thr = 1e-10 * scale
        d = max(1, int(np.sum(sv <= thr)))
        Kb = adj(Vh[n - d:])
        leak = max(opnorm(M @ Kb - Kb @ (adj(Kb) @ M @ Kb)) for M in mats)
        worst = min(worst, leak)
        if leak > 1e-6 * scale:
            continue
        if d == n:
            for _ in range(n):
                out.append([np.trace(M) / n for M in mats])
            return
        W = complement(Subspace(n, Kb)).basis
        _deflate([adj(Kb) @ M @ Kb for M in mats], out, rng, max_retries)
        _deflate([adj(W) @ M @ W for M in mats], out, rng, max_retries)
        return
    raise DeflationError("no common invariant subspace found", worst)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


# commuting triples


class CommutingTriple:
    """Three commuting operators of equal size (matrices or BlockOps).

    The constructor rejects inputs with ``||[X, Y]|| > tol (1 + ||X|| ||Y||)``.
    """

    __slots__ = ("A", "S", "P")

    def __init__(self, A, S, P, tol: float = TOL, check: bool = True):
        from .block_toeplitz import BlockOp

        ops = [A, S, P]
        if not all(isinstance(X, BlockOp) for X in ops):
            ops = [as_cmatrix(X) for X in ops]
            n = ops[0].shape[0]
            if any(X.shape != (n, n) for X in ops):
                raise ValueError("triple entries must be square of equal size")
        self.A, self.S, self.P = ops
        if check:
            worst = self.commutator_residual()
            if worst > tol:
                raise ValueError(f"triple does not commute (relative residual {worst:.3e})")

    def __iter__(self):
        yield self.A
        yield self.S
        yield self.P

    @property
    def is_matrix(self) -> bool:
        return isinstance(self.A, np.ndarray)

    @property
    def dim(self) -> int:
        return self.A.shape[0] if self.is_matrix else self.A.m

    def commutator_residual(self) -> float:
        if self.is_matrix:
            return commutator_residual(list(self))
        worst = 0.0
        ops = list(self)
        for i, X in enumerate(ops):
            for Y in ops[i + 1:]:
                worst = max(worst, (X @ Y - Y @ X).max_block_norm())
        return worst

    def adjoint(self) -> "CommutingTriple":
        if self.is_matrix:
            return CommutingTriple(*(adj(X) for X in self), check=False)
        return CommutingTriple(*(X.H for X in self), check=False)

    def restrict(self, U: Subspace) -> "CommutingTriple":
        return CommutingTriple(*(compress(X, U) for X in self), check=False)

    def conjugate(self, W: np.ndarray) -> "CommutingTriple":
        """``(W X W*)`` for each entry."""
        return CommutingTriple(*(W @ X @ adj(W) for X in self), check=False)

    def __repr__(self) -> str:
        kind = "matrix" if self.is_matrix else "BlockOp"
        return f"CommutingTriple({kind}, dim={self.dim})"
