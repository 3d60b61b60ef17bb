"""Exact algebra of eventually-Toeplitz banded block operators.

A ``BlockOp`` acts on ``H + E + E + ...`` where block 0 is ``H`` (dimension
``m``) and every later block is ``E`` (dimension ``e``). Entry ``(i, j)``
vanishes when ``|i - j| > b``; when ``min(i, j) >= r`` it equals the tail
symbol ``t_{i-j}``; the remaining entries are stored explicitly as head blocks.

Sums, products and adjoints stay in this class, so operator identities between
shifts, Schaffer-type dilations and Toeplitz operators can be checked exactly
with finitely many block comparisons.
"""

from __future__ import annotations

from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from .linalg_core import adj, opnorm

Key = Tuple[int, int]


def head_keys(b: int, r: int) -> Iterable[Key]:
    for i in range(r + b):
        for j in range(max(0, i - b), i + b + 1):
            if min(i, j) < r:
                yield (i, j)


class BlockOp:
    __slots__ = ("m", "e", "b", "r", "head", "tail")

    def __init__(
        self,
        m: int,
        e: int,
        b: int = 0,
        r: int = 1,
        head: Optional[Dict[Key, np.ndarray]] = None,
        tail: Optional[Dict[int, np.ndarray]] = None,
    ):
        if m < 0 or e < 0 or b < 0 or r < 1:
            raise ValueError(f"invalid BlockOp parameters m={m} e={e} b={b} r={r}")
        self.m, self.e, self.b, self.r = int(m), int(e), int(b), int(r)
        head = head or {}
        tail = tail or {}
        self.head: Dict[Key, np.ndarray] = {}
        for key in head_keys(self.b, self.r):
            blk = head.get(key)
            self.head[key] = self._checked(key, blk)
        for key in head:
            if key not in self.head and np.any(np.asarray(head[key]) != 0):
                raise ValueError(f"head block {key} lies outside band b={b} / threshold r={r}")
        self.tail: Dict[int, np.ndarray] = {}
        for d in range(-self.b, self.b + 1):
            self.tail[d] = self._checked((self.r + max(d, 0), self.r + max(-d, 0)), tail.get(d))
        for d in tail:
            if abs(d) > self.b and np.any(np.asarray(tail[d]) != 0):
                raise ValueError(f"tail symbol t_{d} lies outside band b={b}")

    # shapes

    def dim(self, i: int) -> int:
        return self.m if i == 0 else self.e

    def _checked(self, key: Key, blk) -> np.ndarray:
        shape = (self.dim(key[0]), self.dim(key[1]))
        if blk is None:
            return np.zeros(shape, dtype=complex)
        blk = np.asarray(blk, dtype=complex)
        if blk.shape != shape:
            raise ValueError(f"block {key} has shape {blk.shape}, expected {shape}")
        return blk

    def block(self, i: int, j: int) -> np.ndarray:
        if abs(i - j) > self.b:
            return np.zeros((self.dim(i), self.dim(j)), dtype=complex)
        if min(i, j) < self.r:
            return self.head[(i, j)]
        return self.tail[i - j]

    # constructors

    @classmethod
    def zeros(cls, m: int, e: int) -> "BlockOp":
        return cls(m, e)

    @classmethod
    def embed(cls, M, e: int = 0) -> "BlockOp":
        M = np.asarray(M, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("embed needs a square matrix")
        return cls(M.shape[0], e, 0, 1, head={(0, 0): M})

    @classmethod
    def identity(cls, m: int, e: int) -> "BlockOp":
        return cls(m, e, 0, 1, head={(0, 0): np.eye(m)}, tail={0: np.eye(e)})

    @classmethod
    def shift(cls, m: int, e: int, first: Optional[np.ndarray] = None) -> "BlockOp":
        """Unilateral block shift; ``first`` is the (1, 0) block (identity if m == e)."""
        if first is None:
            if m != e:
                raise ValueError("shift with m != e needs an explicit first block")
            first = np.eye(e)
        return cls(m, e, 1, 1, head={(1, 0): first}, tail={1: np.eye(e)})

    @classmethod
    def toeplitz(cls, symbols: Dict[int, np.ndarray]) -> "BlockOp":
        """Pure block Toeplitz operator (head = E, every entry ``t_{i-j}``)."""
        e = next(iter(symbols.values())).shape[0] if symbols else 0
        b = max((abs(d) for d in symbols), default=0)
        head = {k: symbols.get(k[0] - k[1], np.zeros((e, e))) for k in head_keys(b, 1)}
        return cls(e, e, b, 1, head=head, tail=symbols)

    # normal form

    def inflate(self, b: int, r: int) -> "BlockOp":
        b, r = max(b, self.b), max(r, self.r)
        if (b, r) == (self.b, self.r):
            return self
        head = {k: self.block(*k) for k in head_keys(b, r)}
        return BlockOp(self.m, self.e, b, r, head=head, tail=dict(self.tail))

    def _same_space(self, other: "BlockOp"):
        if not isinstance(other, BlockOp):
            raise TypeError(f"expected BlockOp, got {type(other).__name__}")
        if (self.m, self.e) != (other.m, other.e):
            raise ValueError(f"space mismatch: ({self.m},{self.e}) vs ({other.m},{other.e})")

    # algebra

    def __add__(self, other: "BlockOp") -> "BlockOp":
        self._same_space(other)
        b, r = max(self.b, other.b), max(self.r, other.r)
        x, y = self.inflate(b, r), other.inflate(b, r)
        head = {k: x.head[k] + y.head[k] for k in x.head}
        tail = {d: x.tail[d] + y.tail[d] for d in x.tail}
        return BlockOp(self.m, self.e, b, r, head=head, tail=tail)

    def __neg__(self) -> "BlockOp":
        return self.scale(-1)

    def __sub__(self, other: "BlockOp") -> "BlockOp":
        return self + (-other)

    def scale(self, c: complex) -> "BlockOp":
        head = {k: c * v for k, v in self.head.items()}
        tail = {d: c * v for d, v in self.tail.items()}
        return BlockOp(self.m, self.e, self.b, self.r, head=head, tail=tail)

    def __mul__(self, c):
        if isinstance(c, BlockOp):
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def adjoint(self) -> "BlockOp":
        head = {(j, i): adj(v) for (i, j), v in self.head.items()}
        tail = {-d: adj(v) for d, v in self.tail.items()}
        return BlockOp(self.m, self.e, self.b, self.r, head=head, tail=tail)

    @property
    def H(self) -> "BlockOp":
        return self.adjoint()

    def _entry_of_product(self, other: "BlockOp", i: int, j: int) -> np.ndarray:
        acc = np.zeros((self.dim(i), other.dim(j)), dtype=complex)
        lo = max(0, i - self.b, j - other.b)
        hi = min(i + self.b, j + other.b)
        for k in range(lo, hi + 1):
            acc = acc + self.block(i, k) @ other.block(k, j)
        return acc

    def __matmul__(self, other: "BlockOp") -> "BlockOp":
        if not isinstance(other, BlockOp):
            return NotImplemented
        self._same_space(other)
        b = self.b + other.b
        r = max(self.r, other.r) + max(self.b, other.b)
        head = {k: self._entry_of_product(other, *k) for k in head_keys(b, r)}
        tail = {d: self._entry_of_product(other, r + max(d, 0), r + max(-d, 0)) for d in range(-b, b + 1)}
        return BlockOp(self.m, self.e, b, r, head=head, tail=tail)

    def power(self, k: int) -> "BlockOp":
        out = BlockOp.identity(self.m, self.e)
        for _ in range(k):
            out = out @ self
        return out

    # comparison

    def max_block_norm(self) -> float:
        """Largest spectral norm among stored blocks; zero iff the operator is zero."""
        vals = [opnorm(v) for v in self.head.values()] + [opnorm(v) for v in self.tail.values()]
        return max(vals, default=0.0)

    def distance(self, other: "BlockOp") -> float:
        return (self - other).max_block_norm()

    def equals(self, other: "BlockOp", tol: float = 1e-12) -> bool:
        self._same_space(other)
        b, r = max(self.b, other.b), max(self.r, other.r)
        x, y = self.inflate(b, r), other.inflate(b, r)
        return all(np.max(np.abs(x.head[k] - y.head[k]), initial=0) <= tol for k in x.head) and all(
            np.max(np.abs(x.tail[d] - y.tail[d]), initial=0) <= tol for d in x.tail
        )

    def is_zero(self, tol: float = 1e-12) -> bool:
        return self.equals(BlockOp.zeros(self.m, self.e), tol)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BlockOp) or (self.m, self.e) != (other.m, other.e):
            return False
        return self.equals(other, 0.0)

    __hash__ = None

    # finite views

    def truncate(self, N: int) -> np.ndarray:
        """Top-left corner on levels ``0..N`` (dimension ``m + N e``)."""
        offs = [0, self.m] + [self.m + (k - 1) * self.e for k in range(2, N + 2)]
        out = np.zeros((offs[N + 1], offs[N + 1]), dtype=complex)
        for i in range(N + 1):
            for j in range(max(0, i - self.b), min(N, i + self.b) + 1):
                out[offs[i]:offs[i + 1], offs[j]:offs[j + 1]] = self.block(i, j)
        return out

    def window_dim(self, N: int) -> int:
        return self.m + N * self.e

    def compress_head(self) -> np.ndarray:
        return self.head[(0, 0)].copy()

    def is_lower_triangular(self) -> bool:
        return all(not np.any(v) for (i, j), v in self.head.items() if j > i) and all(
            not np.any(v) for d, v in self.tail.items() if d < 0
        )

    # norms

    def symbol_sup_bound(self, grid: int = 4096) -> float:
        """Upper bound on ``sup_theta ||sum_d t_d e^{i d theta}||``.

        Every matrix coefficient of the symbol is a trigonometric polynomial of
        degree ``b``; at an interior maximum its second derivative is at most
        ``b^2`` times the maximum (Bernstein), so the grid maximum falls short
        of the supremum by a factor of at least ``1 - (b pi / grid)^2 / 2``.
        """
        if self.e == 0:
            return 0.0
        ds = np.arange(-self.b, self.b + 1)
        T = np.stack([self.tail[int(d)] for d in ds])
        top = 0.0
        for start in range(0, grid, 8192):
            theta = 2 * np.pi * np.arange(start, min(grid, start + 8192)) / grid
            G = np.tensordot(np.exp(1j * np.outer(theta, ds)), T, axes=(1, 0))
            top = max(top, float(np.linalg.norm(G, 2, axis=(1, 2)).max()))
        gap = (self.b * np.pi / grid) ** 2 / 2
        if gap >= 1:
            raise ValueError(f"grid {grid} too coarse for bandwidth {self.b}")
        return top / (1 - gap)

    def toeplitz_extension(self) -> "BlockOp":
        """The block Toeplitz operator whose symbols are this operator's tail (needs m == e)."""
        if self.m != self.e:
            raise ValueError("Toeplitz extension needs m == e")
        return BlockOp.toeplitz({d: self.tail[d] for d in range(-self.b, self.b + 1)}) if self.e else BlockOp.zeros(0, 0)

    def norm_bounds(self, N_max: int = 32, grid: int = 4096) -> Tuple[float, float]:
        """``(lower, upper)`` with ``lower <= ||A|| <= upper``.

        ``lower`` is the norm of the level-``N_max`` truncation. ``upper`` is the
        smallest of the diagonal-sum bound, a bound that splits off the first
        ``r`` levels and controls the Toeplitz remainder by its symbol, and
        (when ``m == e``) the symbol bound plus the finite head correction.
        """
        lower = opnorm(self.truncate(N_max))
        diag_sum = 0.0
        for d in range(-self.b, self.b + 1):
            sup = opnorm(self.tail[d]) if self.e else 0.0
            for (i, j), v in self.head.items():
                if i - j == d:
                    sup = max(sup, opnorm(v))
            diag_sum += sup
        upper = diag_sum
        if self.e:
            r = self.r
            full = self.truncate(r + self.b)
            w = self.window_dim(r - 1)
            n00 = opnorm(full[:w, :w])
            n01 = opnorm(full[:w, w:])
            n10 = opnorm(full[w:, :w])
            tau = self.symbol_sup_bound(grid)
            upper = min(upper, opnorm(np.array([[n00, n01], [n10, tau]])))
            if self.m == self.e:
                corr = (self - self.toeplitz_extension()).truncate(self.r + self.b)
                upper = min(upper, tau + opnorm(corr))
        else:
            upper = min(upper, opnorm(self.head[(0, 0)]))
        return lower, max(upper, lower)

    # structure helpers

    def with_head_summand(self, M: np.ndarray) -> "BlockOp":
        """``M (+) self`` where ``M`` acts on extra head coordinates placed first."""
        M = np.asarray(M, dtype=complex)
        k = M.shape[0]
        head = {}
        for (i, j), v in self.head.items():
            if i == 0 and j == 0:
                blk = np.zeros((k + self.m, k + self.m), dtype=complex)
                blk[:k, :k] = M
                blk[k:, k:] = v
            elif i == 0:
                blk = np.vstack([np.zeros((k, v.shape[1])), v])
            elif j == 0:
                blk = np.hstack([np.zeros((v.shape[0], k)), v])
            else:
                blk = v
            head[(i, j)] = blk
        return BlockOp(k + self.m, self.e, self.b, self.r, head=head, tail=dict(self.tail))

    def conjugate_head(self, W: np.ndarray) -> "BlockOp":
        """``(W (+) I (+) I ...) self (W (+) I ...)*`` for a unitary ``W`` on the head."""
        W = np.asarray(W, dtype=complex)
        head = {}
        for (i, j), v in self.head.items():
            if i == 0:
                v = W @ v
            if j == 0:
                v = v @ adj(W)
            head[(i, j)] = v
        return BlockOp(self.m, self.e, self.b, self.r, head=head, tail=dict(self.tail))

    def __repr__(self) -> str:
        return f"BlockOp(m={self.m}, e={self.e}, b={self.b}, r={self.r})"


def embed_window_vectors(V: np.ndarray, big_dim: int) -> np.ndarray:
    """Zero-pad window coordinates to a larger truncation."""
    out = np.zeros((big_dim, V.shape[1]), dtype=complex)
    out[: V.shape[0]] = V
    return out
