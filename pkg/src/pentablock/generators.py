"""Random instances with known classification, for tests and the ``sample`` command."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import scalar_geometry as sg
from .block_toeplitz import BlockOp
from .linalg_core import CommutingTriple, adj, opnorm, psd_sqrt, random_unitary


def _diag_triple(a, s, p, W: Optional[np.ndarray] = None) -> CommutingTriple:
    ops = [np.diag(np.asarray(x, dtype=complex)) for x in (a, s, p)]
    if W is not None:
        ops = [W @ X @ adj(W) for X in ops]
    return CommutingTriple(*ops, check=False)


def p_unitary(n: int, rng: np.random.Generator, scramble: bool = True) -> CommutingTriple:
    """Diagonal bP points conjugated by a random unitary."""
    a, s, p = sg.sample_many("b_penta", n, rng)
    return _diag_triple(a, s, p, random_unitary(n, rng) if scramble else None)


def normal_p_contraction(
    n: int,
    rng: np.random.Generator,
    p_max: Optional[float] = None,
    scramble: bool = True,
) -> CommutingTriple:
    """Diagonal pentablock points (images of random contractions), conjugated.

    With ``p_max`` every point has ``|p| <= p_max``, so ``||P|| < 1``.
    """
    cols = [np.empty(0, dtype=complex)] * 3
    while cols[0].size < n:
        a, s, p = sg.sample_many("penta", 2 * n, rng)
        if p_max is not None:
            keep = np.abs(p) <= p_max
            a, s, p = a[keep], s[keep], p[keep]
        cols = [np.concatenate([c, x]) for c, x in zip(cols, (a, s, p))]
    a, s, p = (c[:n] for c in cols)
    return _diag_triple(a, s, p, random_unitary(n, rng) if scramble else None)


def perturbed_p_unitary(n: int, rng: np.random.Generator) -> CommutingTriple:
    """A normal triple that is a P-unitary except at one joint eigenvalue."""
    a, s, p = sg.sample_many("b_penta", n, rng)
    k = int(rng.integers(n))
    mode = int(rng.integers(3))
    if mode == 0:
        a[k] *= 0.5 + 0.4 * rng.random()
    elif mode == 1:
        p[k] *= 0.5 + 0.4 * rng.random()
    else:
        a[k], s[k], p[k] = (x[0] for x in sg.sample_many("penta", 1, rng))
    return _diag_triple(a, s, p, random_unitary(n, rng))


def gamma_contraction(n: int, rng: np.random.Generator) -> tuple:
    """``(T1 + T2, T1 T2)`` for commuting contractions that are polynomials in one matrix.

    By Ando's theorem such a pair is the compression of the symmetrization of
    a commuting unitary pair, so it is a Gamma-contraction.
    """
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    T1 = M + c[0] * np.eye(n)
    T2 = M @ M + c[1] * M + c[2] * np.eye(n)
    T1 *= rng.uniform(0.2, 1.0) / opnorm(T1)
    T2 *= rng.uniform(0.2, 1.0) / opnorm(T2)
    return T1 + T2, T1 @ T2


def partial_isometry(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """``W (U (+) 0) W*`` with a k x k unitary ``U``; its defect ``D_T`` satisfies ``D_T T = 0``."""
    W = random_unitary(n, rng)
    core = np.zeros((n, n), dtype=complex)
    core[:k, :k] = random_unitary(k, rng)
    return W @ core @ adj(W)


def t00_family(n: int, rng: np.random.Generator, k: Optional[int] = None) -> tuple:
    """``(T, 0, 0)`` with ``D_T T = 0`` and its admissible ambient data ``(T, D_T)``."""
    k = int(rng.integers(0, n + 1)) if k is None else k
    T = partial_isometry(n, k, rng)
    D = psd_sqrt(np.eye(n) - adj(T) @ T)
    Z = np.zeros((n, n), dtype=complex)
    return CommutingTriple(T, Z, Z), (T, D)


def i0t_family(n: int, rng: np.random.Generator) -> tuple:
    """``(I, 0, T)`` for a random contraction ``T``; admissible data is ``(I, 0)``."""
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    T = M * rng.uniform(0.1, 0.95) / opnorm(M)
    return CommutingTriple(np.eye(n), np.zeros((n, n)), T), "identity"


def jordan(n: int) -> np.ndarray:
    return np.diag(np.ones(n - 1), -1).astype(complex)


def cnu_triple(n: int, rng: np.random.Generator) -> CommutingTriple:
    """A P-contraction with no P-unitary summand.

    Either normal with every joint eigenvalue having ``|p| <= 0.9`` or a
    scaled nilpotent Jordan block paired with ``(0, -I)``.
    """
    if n >= 2 and rng.random() < 0.5:
        c = rng.uniform(0.3, 1.0)
        return CommutingTriple(c * jordan(n), np.zeros((n, n)), -np.eye(n))
    return normal_p_contraction(n, rng, p_max=0.9)


def block_diag(*triples) -> CommutingTriple:
    mats = []
    for idx in range(3):
        blocks = [list(t)[idx] for t in triples]
        size = sum(b.shape[0] for b in blocks)
        out = np.zeros((size, size), dtype=complex)
        at = 0
        for b in blocks:
            k = b.shape[0]
            out[at:at + k, at:at + k] = b
            at += k
        mats.append(out)
    return CommutingTriple(*mats, check=False)


@dataclass
class Construction:
    triple: CommutingTriple
    unitary_dim: int
    pure_dim: int


def mixed_triple(k_u: int, k_c: int, rng: np.random.Generator) -> Construction:
    """``W (unitary part (+) c.n.u. part) W*`` with known dimensions."""
    parts = []
    if k_u:
        parts.append(p_unitary(k_u, rng))
    if k_c:
        parts.append(cnu_triple(k_c, rng))
    t = block_diag(*parts)
    W = random_unitary(k_u + k_c, rng)
    return Construction(t.conjugate(W), k_u, k_c)


# BlockOp P-isometries


def toeplitz_pure_p_isometry(f: np.ndarray) -> CommutingTriple:
    """Pure P-isometry on ``H^2(C^e)`` built from real weights ``|f_i| <= 1``.

    ``V3 = T_z``, ``V2`` has symbol ``diag(f)(1 + z)`` and ``V1`` has symbol
    ``alpha + beta z`` with ``alpha, beta = (1 +- sqrt(1 - f^2)) / 2`` signs
    chosen so that ``|V1 symbol|^2 + |V2 symbol|^2 / 4 = 1`` on the circle.
    """
    f = np.asarray(f, dtype=float)
    q = np.sqrt(1 - f ** 2)
    alpha, beta = np.diag((1 + q) / 2), np.diag((q - 1) / 2)
    F = np.diag(f).astype(complex)
    e = f.size
    V1 = BlockOp.toeplitz({0: alpha, 1: beta})
    V2 = BlockOp.toeplitz({0: F, 1: F})
    V3 = BlockOp.toeplitz({1: np.eye(e)})
    return CommutingTriple(V1, V2, V3, check=False)


def shift_b_penta_isometry(a, s, p) -> CommutingTriple:
    """``(diag(a) T_z, diag(s), diag(p))`` for bP points; no P-unitary part unless ``a = 0``."""
    a, s, p = (np.diag(np.asarray(x, dtype=complex)) for x in (a, s, p))
    V1 = BlockOp.toeplitz({1: a})
    V2 = BlockOp.toeplitz({0: s})
    V3 = BlockOp.toeplitz({0: p})
    return CommutingTriple(V1, V2, V3, check=False)


def pure_p_isometry(e: int, rng: np.random.Generator) -> CommutingTriple:
    if rng.random() < 0.5:
        return toeplitz_pure_p_isometry(rng.uniform(-1, 1, e))
    theta = rng.uniform(0.05, np.pi / 2, e)
    psi, chi = rng.uniform(0, 2 * np.pi, (2, e))
    return shift_b_penta_isometry(*sg.b_penta_param(theta, psi, chi))


def mixed_p_isometry(k_u: int, e: int, rng: np.random.Generator) -> Construction:
    """P-unitary on ``k_u`` extra head coordinates plus a pure part, head scrambled."""
    pure = pure_p_isometry(e, rng)
    ops = list(pure)
    if k_u:
        u = p_unitary(k_u, rng)
        ops = [X.with_head_summand(M) for X, M in zip(ops, u)]
    W = random_unitary(ops[0].m, rng)
    ops = [X.conjugate_head(W) for X in ops]
    return Construction(CommutingTriple(*ops, check=False), k_u, ops[0].m - k_u)
