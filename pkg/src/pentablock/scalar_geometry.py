"""Scalar membership tests and samplers for the pentablock and related sets.

Sets handled here (all closed):

* ``Gamma``: the closed symmetrized bidisc, pairs ``(s, p) = (z1 + z2, z1 z2)``
  with ``|z1|, |z2| <= 1``.
* ``bGamma``: its distinguished boundary, ``|p| = 1``, ``s = conj(s) p``,
  ``|s| <= 2``.
* ``P``: the closed pentablock, the image of the closed 2x2 matrix ball under
  ``pi(A0) = (a21, tr A0, det A0)``.
* ``bP``: the distinguished boundary of the pentablock.
* the closed unit ball of C^2.

Every predicate accepts scalars or numpy arrays and broadcasts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

TOL = 1e-9

ArrayLike = Union[complex, float, np.ndarray]


@dataclass(frozen=True)
class Point3:
    """A candidate pentablock point ``(a, s, p)``."""

    a: complex
    s: complex
    p: complex

    def __iter__(self):
        yield self.a
        yield self.s
        yield self.p

    def conj(self) -> "Point3":
        return Point3(np.conj(self.a), np.conj(self.s), np.conj(self.p))

    def to_json(self) -> list:
        return [[float(np.real(z)), float(np.imag(z))] for z in self]


@dataclass(frozen=True)
class GammaPoint:
    s: complex
    p: complex
    roots: tuple

    @classmethod
    def from_sp(cls, s: complex, p: complex) -> "GammaPoint":
        return cls(complex(s), complex(p), tuple(complex(r) for r in gamma_roots(s, p)))

    @property
    def beta(self) -> complex:
        return complex(_beta(self.s, self.p))


def _as_triple(pt) -> tuple:
    if isinstance(pt, Point3):
        return pt.a, pt.s, pt.p
    a, s, p = pt
    return a, s, p


def pi_map(A0) -> Point3:
    """``(a21, tr A0, det A0)`` for a 2x2 matrix."""
    A0 = np.asarray(A0, dtype=complex)
    if A0.shape != (2, 2):
        raise ValueError(f"pi_map expects a 2x2 matrix, got shape {A0.shape}")
    return Point3(
        complex(A0[1, 0]),
        complex(A0[0, 0] + A0[1, 1]),
        complex(A0[0, 0] * A0[1, 1] - A0[0, 1] * A0[1, 0]),
    )


def pi_map_batch(A0: np.ndarray) -> tuple:
    """Vectorized ``pi_map`` over a stack of shape (n, 2, 2)."""
    A0 = np.asarray(A0, dtype=complex)
    a = A0[..., 1, 0]
    s = A0[..., 0, 0] + A0[..., 1, 1]
    p = A0[..., 0, 0] * A0[..., 1, 1] - A0[..., 0, 1] * A0[..., 1, 0]
    return a, s, p


def gamma_roots(s: ArrayLike, p: ArrayLike) -> tuple:
    """Roots of ``z^2 - s z + p``, larger modulus first.

    The second root comes from ``p / lam1`` to avoid cancellation, or from
    ``s - lam1`` when ``lam1`` is too small to divide by.
    """
    s = np.asarray(s, dtype=complex)
    p = np.asarray(p, dtype=complex)
    d = np.sqrt(s * s - 4 * p)
    plus = s + d
    minus = s - d
    big = np.where(np.abs(plus) >= np.abs(minus), plus, minus) / 2
    safe = np.abs(big) > 1e-150
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        small = np.where(safe, p / np.where(safe, big, 1), s - big)
    if big.ndim == 0:
        return complex(big), complex(small)
    return big, small


def _root_slack(s, p):
    """Root displacement caused by rounding the coefficients ``s`` and ``p``.

    Near a double root the roots move like the square root of the
    coefficient error, so a point built in floating point on the circle can
    have a root ``1e-8`` outside it.
    """
    s = np.asarray(s, dtype=complex)
    u = 8 * np.finfo(float).eps * (1 + np.abs(s) ** 2 + np.abs(p))
    d = np.abs(np.sqrt(s * s - 4 * np.asarray(p, dtype=complex)))
    with np.errstate(divide="ignore"):
        return 0.5 * np.minimum(np.sqrt(u), u / d)


def in_gamma(s: ArrayLike, p: ArrayLike, tol: float = TOL):
    """Both roots in the closed disc, up to ``tol`` plus the rounding slack of the roots."""
    l1, l2 = gamma_roots(s, p)
    lim = 1 + tol + _root_slack(s, p)
    return (np.abs(l1) <= lim) & (np.abs(l2) <= lim)


def in_b_gamma(s: ArrayLike, p: ArrayLike, tol: float = TOL):
    s = np.asarray(s, dtype=complex)
    p = np.asarray(p, dtype=complex)
    return (
        (np.abs(np.abs(p) - 1) <= tol)
        & (np.abs(s - np.conj(s) * p) <= tol)
        & (np.abs(s) <= 2 + tol)
    )


def penta_bound(s: ArrayLike, p: ArrayLike):
    """Largest ``|a|`` with ``(a, s, p)`` in the closed pentablock, via the roots.

    Meaningful only when ``(s, p)`` lies in Gamma.
    """
    l1, l2 = gamma_roots(s, p)
    r1 = np.sqrt(np.clip(1 - np.abs(l1) ** 2, 0, None))
    r2 = np.sqrt(np.clip(1 - np.abs(l2) ** 2, 0, None))
    return 0.5 * np.abs(1 - np.conj(l2) * l1) + 0.5 * r1 * r2


def _beta(s, p, tol: float = TOL):
    s = np.asarray(s, dtype=complex)
    p = np.asarray(p, dtype=complex)
    denom = 1 - np.abs(p) ** 2
    interior = np.abs(p) < 1 - tol
    with np.errstate(divide="ignore", invalid="ignore"):
        b = (s - np.conj(s) * p) / np.where(interior, denom, 1)
    return np.where(interior, b, s / 2)


def penta_bound_beta(s: ArrayLike, p: ArrayLike, tol: float = TOL):
    """Same bound written through ``beta = (s - conj(s) p) / (1 - |p|^2)``."""
    s = np.asarray(s, dtype=complex)
    b = _beta(s, p, tol)
    root = np.sqrt(np.clip(1 - np.abs(b) ** 2, 0, None))
    return np.abs(1 - 0.5 * s * np.conj(b) / (1 + root))


def in_pentablock_closed(pt, tol: float = TOL):
    """Closed pentablock membership.

    The root form is authoritative. The bound inherits the square-root
    conditioning of the roots at a double root, so the comparison carries the
    same rounding slack as ``in_gamma``. When ``|p| < 1 - tol`` the beta form is
    evaluated too; the two are the same function on Gamma, so a gap beyond
    rounding (scaled by the conditioning of ``1 - |p|^2``) raises.
    """
    a, s, p = _as_triple(pt)
    a = np.asarray(a, dtype=complex)
    g = in_gamma(s, p, tol)
    bound = penta_bound(s, p)
    ok = g & (np.abs(a) <= bound + tol + 2 * _root_slack(s, p))
    inner = g & (np.abs(np.asarray(p)) < 1 - tol)
    if np.any(inner):
        alt = penta_bound_beta(s, p, tol)
        slack = 1e-6 + 10 * np.sqrt(1e-15 / np.clip(1 - np.abs(np.asarray(p)) ** 2, 1e-300, None))
        gap = np.where(inner, np.abs(alt - bound) - slack, 0.0)
        if np.max(gap) > 0:
            raise ArithmeticError(f"root and beta forms disagree by {np.max(gap):.3e}")
    return ok


def in_b_pentablock(pt, tol: float = TOL):
    """``(s, p)`` in bGamma and ``|a| = sqrt(1 - |s|^2 / 4)``.

    The modulus condition is evaluated as ``||a|^2 - t^2| <= tol (|a| + t)``,
    which is the same inequality, plus a rounding floor on the squares so that
    ``t`` near zero does not turn rounding noise into a ``1e-8`` gap.
    """
    a, s, p = _as_triple(pt)
    a = np.abs(np.asarray(a, dtype=complex))
    s = np.asarray(s, dtype=complex)
    t2 = 1 - np.abs(s) ** 2 / 4
    t = np.sqrt(np.clip(t2, 0, None))
    floor = 8 * np.finfo(float).eps
    return in_b_gamma(s, p, tol) & (np.abs(a**2 - t2) <= tol * (a + t) + floor)


def in_biball(a: ArrayLike, s_half: ArrayLike, tol: float = TOL):
    return np.abs(a) ** 2 + np.abs(s_half) ** 2 <= 1 + tol


def lift_biball_boundary(a: complex, s_half: complex) -> Point3:
    """Lift a unit-sphere point ``(a, s/2)`` to a point of bP with unimodular ``p``."""
    s = 2 * complex(s_half)
    p = np.exp(2j * np.angle(s)) if s != 0 else 1.0 + 0j
    return Point3(complex(a), s, complex(p))


# samplers

SETS = ("penta", "b_penta", "gamma", "b_gamma", "biball")


def _cgauss(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _disc(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))


def clamp_contractions(M: np.ndarray) -> np.ndarray:
    """Clamp singular values of a stack of matrices to at most one."""
    U, sv, Vh = np.linalg.svd(M)
    sv = np.minimum(sv, 1.0)
    return (U * sv[..., None, :]) @ Vh


def b_penta_param(theta, psi, chi) -> tuple:
    """``(e^{i chi} sin theta, 2 cos theta e^{i psi}, e^{2 i psi})``."""
    theta = np.asarray(theta, dtype=float)
    a = np.exp(1j * np.asarray(chi)) * np.sin(theta)
    s = 2 * np.cos(theta) * np.exp(1j * np.asarray(psi))
    p = np.exp(2j * np.asarray(psi))
    return a, s, p


def sample_many(set_id: str, n: int, rng: np.random.Generator) -> tuple:
    """Draw ``n`` points as arrays; one array per coordinate."""
    if set_id == "penta":
        return pi_map_batch(clamp_contractions(_cgauss(rng, (n, 2, 2))))
    if set_id == "b_penta":
        th, ps, ch = rng.random((3, n)) * np.array([[np.pi / 2], [2 * np.pi], [2 * np.pi]])
        return b_penta_param(th, ps, ch)
    if set_id == "gamma":
        z1, z2 = _disc(rng, n), _disc(rng, n)
        return z1 + z2, z1 * z2
    if set_id == "b_gamma":
        th, ps = rng.random((2, n)) * 2 * np.pi
        return 2 * np.cos(th) * np.exp(1j * ps), np.exp(2j * ps)
    if set_id == "biball":
        v = _cgauss(rng, (n, 2))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        v *= rng.random((n, 1)) ** 0.25
        return v[:, 0], v[:, 1]
    raise ValueError(f"unknown set id {set_id!r}; expected one of {SETS}")


def sample(set_id: str, rng: np.random.Generator):
    """One point from ``set_id``: a Point3, an (s, p) pair, or an (a, s/2) pair."""
    cols = [complex(c[0]) for c in sample_many(set_id, 1, rng)]
    if set_id in ("penta", "b_penta"):
        return Point3(*cols)
    return tuple(cols)


def all_true(x: Iterable) -> bool:
    return bool(np.all(np.asarray(x)))
