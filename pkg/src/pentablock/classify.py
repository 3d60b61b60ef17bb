"""Classification of commuting pairs and triples.

Verdicts are three-valued. ``Certified`` means every defining condition was
verified (exactly for BlockOps, to ``tol`` for matrices). ``Refuted`` means some
necessary condition failed and a witness says which. ``NotRefuted`` means
nothing failed but the checks run are not sufficient, or a norm condition on
an infinite operator could not be settled at the examined window.
"""

from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from . import scalar_geometry as sg
from .block_toeplitz import BlockOp
from .linalg_core import (
    TOL,
    CommutingTriple,
    DeflationError,
    adj,
    as_cmatrix,
    commutator_residual,
    joint_spectrum,
    opnorm,
)


class Verdict(str, enum.Enum):
    CERTIFIED = "Certified"
    REFUTED = "Refuted"
    NOT_REFUTED = "NotRefuted"


@dataclass
class ClassReport:
    verdict: Verdict
    residuals: Dict[str, float] = field(default_factory=dict)
    witness: Optional[dict] = None
    details: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.residuals = {k: max(0.0, float(v)) for k, v in self.residuals.items()}
        if self.verdict is Verdict.REFUTED and self.witness is None:
            raise ValueError("a refutation needs a witness")

    @property
    def certified(self) -> bool:
        return self.verdict is Verdict.CERTIFIED

    @property
    def refuted(self) -> bool:
        return self.verdict is Verdict.REFUTED


# generic operator helpers (ndarray or BlockOp)


def _is_block(X) -> bool:
    return isinstance(X, BlockOp)


def _H(X):
    return X.H if _is_block(X) else adj(X)


def _eye_like(X):
    return BlockOp.identity(X.m, X.e) if _is_block(X) else np.eye(X.shape[0])


def _size(X) -> float:
    """Exact-zero detector for BlockOps, spectral norm for matrices."""
    return X.max_block_norm() if _is_block(X) else opnorm(X)


def _norm_bounds(X, levels: int):
    if _is_block(X):
        return X.norm_bounds(levels)
    n = opnorm(X)
    return n, n


def _prep(ops: Sequence):
    if all(_is_block(X) for X in ops):
        return list(ops)
    return [as_cmatrix(X) for X in ops]


def _require_commuting(ops: Sequence, tol: float):
    if _is_block(ops[0]):
        worst = max(
            ((X @ Y - Y @ X).max_block_norm() for i, X in enumerate(ops) for Y in ops[i + 1:]),
            default=0.0,
        )
    else:
        worst = commutator_residual(ops)
    if worst > tol:
        raise ValueError(f"operators do not commute (residual {worst:.3e})")


def _self_commutator(X) -> float:
    return _size(X @ _H(X) - _H(X) @ X)


def _condition_witness(failed: List[str], **extra) -> dict:
    return {"kind": "condition", "failed": failed, **extra}


def _verdict_from(residuals: Dict[str, float], tol: float, undetermined: List[str] = ()) -> tuple:
    failed = [k for k, v in residuals.items() if v > tol]
    if failed:
        return Verdict.REFUTED, _condition_witness(failed)
    if undetermined:
        return Verdict.NOT_REFUTED, None
    return Verdict.CERTIFIED, None


def _norm_check(X, bound: float, tol: float, levels: int, name: str, residuals: dict, details: dict):
    """Three-valued ``||X|| <= bound``; returns True if undetermined."""
    lower, upper = _norm_bounds(X, levels)
    if _is_block(X) and lower <= bound + tol < upper:
        # retry with a grid fine enough to settle symbols touching the bound
        lower, upper = X.norm_bounds(levels, grid=2**17)
    details[f"{name}_bounds"] = (lower, upper)
    residuals[f"{name}_excess"] = max(0.0, lower - bound)
    return lower <= bound + tol < upper


# Gamma


def _gamma_report(S, P, tol: float, levels: int, unitary: bool) -> ClassReport:
    S, P = _prep([S, P])
    _require_commuting([S, P], tol)
    I = _eye_like(P)
    residuals = {
        "S - S*P": _size(S - _H(S) @ P),
        "P*P - I": _size(_H(P) @ P - I),
    }
    if unitary:
        residuals["PP* - I"] = _size(P @ _H(P) - I)
    details: dict = {}
    und = _norm_check(S, 2.0, tol, levels, "norm(S)", residuals, details)
    verdict, witness = _verdict_from(residuals, tol, ["norm(S)"] if und else [])
    if und:
        details["undetermined"] = f"norm of S not settled at {levels} levels"
    return ClassReport(verdict, residuals, witness, details)


def is_gamma_unitary(S, P, tol: float = TOL, levels: int = 32) -> ClassReport:
    return _gamma_report(S, P, tol, levels, unitary=True)


def is_gamma_isometry(S, P, tol: float = TOL, levels: int = 32) -> ClassReport:
    return _gamma_report(S, P, tol, levels, unitary=False)


# spherical tuples

SPHERICAL_KINDS = ("unitary", "isometry", "contraction", "row_contraction")


def _min_eig_lower(M, levels: int) -> float:
    """Smallest eigenvalue of a Hermitian matrix, or of a BlockOp truncation."""
    if _is_block(M):
        M = M.truncate(levels)
    if M.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh((M + adj(M)) / 2)[0])


def is_spherical(kind: str, ops: Sequence, tol: float = TOL, levels: int = 32) -> ClassReport:
    if kind not in SPHERICAL_KINDS:
        raise ValueError(f"unknown spherical kind {kind!r}")
    ops = _prep(ops)
    _require_commuting(ops, tol)
    I = _eye_like(ops[0])
    col = functools.reduce(lambda x, y: x + y, (_H(T) @ T for T in ops))
    row = functools.reduce(lambda x, y: x + y, (T @ _H(T) for T in ops))
    residuals: Dict[str, float] = {}
    details: dict = {}
    if kind in ("unitary", "isometry"):
        residuals["sum T*T - I"] = _size(col - I)
        if kind == "unitary":
            for i, T in enumerate(ops):
                residuals[f"[T{i + 1}*, T{i + 1}]"] = _self_commutator(T)
        verdict, witness = _verdict_from(residuals, tol)
        return ClassReport(verdict, residuals, witness, details)
    gram = col if kind == "contraction" else row
    name = "I - sum T*T" if kind == "contraction" else "I - sum TT*"
    if _size(gram - I) <= tol:
        residuals[f"{name} negativity"] = 0.0
        return ClassReport(Verdict.CERTIFIED, residuals, details=details)
    lam = _min_eig_lower(I - gram, levels)
    residuals[f"{name} negativity"] = -lam
    if lam < -tol:
        return ClassReport(Verdict.REFUTED, residuals, _condition_witness([f"{name} negativity"]), details)
    if _is_block(gram):
        details["undetermined"] = f"positivity checked on a {levels}-level truncation only"
        return ClassReport(Verdict.NOT_REFUTED, residuals, details=details)
    return ClassReport(Verdict.CERTIFIED, residuals, details=details)


# P-unitary / P-isometry


def _as_ops(triple) -> list:
    if isinstance(triple, CommutingTriple):
        return list(triple)
    return _prep(list(triple))


def block_unitary(A, S, P) -> np.ndarray:
    """``[[S/2, -A* P], [A, S/2]]``."""
    return np.block([[S / 2, -adj(A) @ P], [A, S / 2]])


def _spectrum_in(points: np.ndarray, pred, tol: float):
    bad = [pt for pt in points if not bool(pred(tuple(pt), tol))]
    return bad


def p_unitary_conditions(triple, tol: float = TOL) -> Dict[str, bool]:
    """The five equivalent characterizations of a P-unitary, evaluated separately.

    Matrices only. Keys: ``spectral`` (normal with joint spectrum in bP),
    ``subnormal`` (A normal, (S, P) a Gamma-unitary, A*A = I - S*S/4),
    ``identities`` (both A*A and AA* identities plus Gamma-unitary),
    ``spherical`` ((A, S/2) spherical unitary plus Gamma-unitary),
    ``block`` (the 2x2 operator block matrix is unitary and reproduces the triple).
    """
    A, S, P = _as_ops(triple)
    n = A.shape[0]
    I = np.eye(n)
    normal = all(_self_commutator(X) <= tol for X in (A, S, P))
    gamma_u = is_gamma_unitary(S, P, tol).certified
    out = {}
    if normal:
        pts = joint_spectrum([A, S, P], tol=max(tol, 1e-9))
        out["spectral"] = not _spectrum_in(pts, sg.in_b_pentablock, 1e-7)
    else:
        out["spectral"] = False
    star = opnorm(adj(A) @ A - (I - adj(S) @ S / 4)) <= tol
    out["subnormal"] = _self_commutator(A) <= tol and gamma_u and star
    out["identities"] = gamma_u and star and opnorm(A @ adj(A) - (I - S @ adj(S) / 4)) <= tol
    out["spherical"] = is_spherical("unitary", [A, S / 2], tol).certified and gamma_u
    U = block_unitary(A, S, P)
    unitary = opnorm(adj(U) @ U - np.eye(2 * n)) <= tol
    recovered = opnorm(U[n:, :n] - A) <= tol and opnorm(U[:n, :n] + U[n:, n:] - S) <= tol
    det = U[:n, :n] @ U[n:, n:] - U[:n, n:] @ U[n:, :n]
    out["block"] = unitary and recovered and opnorm(det - P) <= tol
    return out


def is_p_unitary(triple, tol: float = TOL, levels: int = 32) -> ClassReport:
    A, S, P = _as_ops(triple)
    _require_commuting([A, S, P], tol)
    I = _eye_like(A)
    residuals = {f"[{n}*, {n}]": _self_commutator(X) for n, X in zip("ASP", (A, S, P))}
    g = is_gamma_unitary(S, P, tol, levels)
    residuals.update({f"gamma: {k}": v for k, v in g.residuals.items()})
    residuals["A*A - (I - S*S/4)"] = _size(_H(A) @ A - (I - _H(S) @ S * 0.25))
    residuals["AA* - (I - SS*/4)"] = _size(A @ _H(A) - (I - S @ _H(S) * 0.25))
    details: dict = {}
    und = g.verdict is Verdict.NOT_REFUTED
    verdict, witness = _verdict_from(residuals, tol, ["norm(S)"] if und else [])
    if not _is_block(A):
        cond = p_unitary_conditions([A, S, P], tol)
        details["conditions"] = cond
        details["consistent"] = len(set(cond.values()) | {verdict is Verdict.CERTIFIED}) == 1
        if verdict is Verdict.REFUTED and _self_commutator(A) <= tol and _self_commutator(S) <= tol and _self_commutator(P) <= tol:
            pts = joint_spectrum([A, S, P], tol=max(tol, 1e-9))
            bad = _spectrum_in(pts, sg.in_b_pentablock, 1e-7)
            if bad:
                witness["spectral_point"] = _point_json(bad[0])
    return ClassReport(verdict, residuals, witness, details)


def is_p_isometry(triple, tol: float = TOL, levels: int = 32) -> ClassReport:
    A, S, P = _as_ops(triple)
    _require_commuting([A, S, P], tol)
    I = _eye_like(A)
    sph = _size(_H(A) @ A + _H(S) @ S * 0.25 - I)
    residuals = {"A*A + S*S/4 - I": sph}
    g = is_gamma_isometry(S, P, tol, levels)
    residuals.update({f"gamma: {k}": v for k, v in g.residuals.items()})
    details = {"gamma": g.details}
    und = g.verdict is Verdict.NOT_REFUTED
    if und and sph <= tol:
        # S*S/4 <= I - A*A <= I forces ||S|| <= 2
        und = False
        details["norm(S)"] = "bounded by the spherical identity"
    verdict, witness = _verdict_from(residuals, tol, ["norm(S)"] if und else [])
    return ClassReport(verdict, residuals, witness, details)


# P-contraction


def _point_json(pt) -> list:
    return [[float(np.real(z)), float(np.imag(z))] for z in pt]


def _is_normal(ops, tol) -> bool:
    return all(_self_commutator(X) <= tol * (1 + opnorm(X) ** 2) for X in ops)


def gamma_contraction_certificate(S, P, tol: float = TOL) -> ClassReport:
    """Exact for normal pairs; otherwise a battery of necessary conditions."""
    S, P = _prep([S, P])
    _require_commuting([S, P], tol)
    residuals = {"norm(S) excess": opnorm(S) - 2, "norm(P) excess": opnorm(P) - 1}
    if residuals["norm(S) excess"] > tol or residuals["norm(P) excess"] > tol:
        return ClassReport(Verdict.REFUTED, residuals, _condition_witness([k for k, v in residuals.items() if v > tol]))
    pts = joint_spectrum([S, P], tol=max(tol, 1e-9))
    bad = [pt for pt in pts if not sg.in_gamma(pt[0], pt[1], 1e-7)]
    if bad:
        return ClassReport(Verdict.REFUTED, residuals, {"kind": "spectral_point", "point": _point_json(bad[0])})
    if _is_normal([S, P], tol):
        return ClassReport(Verdict.CERTIFIED, residuals, details={"route": "normal joint spectrum"})
    from .decompose import NoSolution, fundamental_operator

    try:
        fo = fundamental_operator(S, P, tol)
    except NoSolution as exc:
        residuals["fundamental residual"] = exc.residual
        return ClassReport(Verdict.REFUTED, residuals, _condition_witness(["fundamental residual"]))
    residuals["fundamental residual"] = fo.residual
    if fo.well_conditioned:
        residuals["omega(F) excess"] = fo.omega - 1
        if fo.omega > 1 + max(tol, 1e-6):
            return ClassReport(Verdict.REFUTED, residuals, _condition_witness(["omega(F) excess"]))
    return ClassReport(Verdict.NOT_REFUTED, residuals, details={"route": "necessary battery"})


def p_contraction_certificate(
    triple,
    tol: float = TOL,
    falsify_budget: int = 50,
    degree: int = 4,
    seed: int = 0,
) -> ClassReport:
    A, S, P = _as_ops(triple)
    if _is_block(A):
        raise TypeError("p_contraction_certificate works on matrices")
    _require_commuting([A, S, P], tol)
    nA, nS, nP = opnorm(A), opnorm(S), opnorm(P)
    residuals = {"norm(A) excess": nA - 1, "norm(S) excess": nS - 2, "norm(P) excess": nP - 1}

    if _is_normal([A, S, P], tol):
        pts = joint_spectrum([A, S, P], tol=max(tol, 1e-9))
        worst, bad = 0.0, None
        for pt in pts:
            if not sg.in_gamma(pt[1], pt[2], tol):
                excess = 1.0
            else:
                excess = abs(pt[0]) - float(sg.penta_bound(pt[1], pt[2]))
            if excess > worst:
                worst, bad = excess, pt
        residuals["spectral excess"] = worst
        if bad is not None and not sg.in_pentablock_closed(tuple(bad), tol):
            return ClassReport(Verdict.REFUTED, residuals, {"kind": "spectral_point", "point": _point_json(bad)}, {"route": "normal"})
        return ClassReport(Verdict.CERTIFIED, residuals, details={"route": "normal"})

    if nS <= tol:
        ok = nA <= 1 + tol and nP <= 1 + tol
        if ok:
            return ClassReport(Verdict.CERTIFIED, residuals, details={"route": "(T, 0, T')"})
        idx = 0 if nA > 1 + tol else 2
        return ClassReport(Verdict.REFUTED, residuals, {"kind": "polynomial", **coordinate_poly(idx).to_json()}, {"route": "(T, 0, T')"})

    for idx, key in enumerate(("norm(A) excess", "norm(S) excess", "norm(P) excess")):
        if residuals[key] > tol:
            return ClassReport(Verdict.REFUTED, residuals, {"kind": "polynomial", **coordinate_poly(idx).to_json()})

    try:
        pts = joint_spectrum([A, S, P], tol=max(tol, 1e-9))
        bad = [pt for pt in pts if not sg.in_pentablock_closed(tuple(pt), 1e-7)]
        if bad:
            return ClassReport(Verdict.REFUTED, residuals, {"kind": "spectral_point", "point": _point_json(bad[0])})
    except DeflationError:
        pass

    g = gamma_contraction_certificate(S, P, tol)
    residuals.update({f"gamma: {k}": v for k, v in g.residuals.items()})
    if g.refuted:
        return ClassReport(Verdict.REFUTED, residuals, g.witness)

    # (A, S/2) must be a ball contraction: every unit linear functional stays <= 1
    rng = np.random.default_rng(seed)
    zeta = rng.standard_normal((256, 2)) + 1j * rng.standard_normal((256, 2))
    zeta /= np.linalg.norm(zeta, axis=1, keepdims=True)
    worst, arg = 0.0, None
    for z1, z2 in zeta:
        v = opnorm(z1 * A + z2 * S / 2)
        if v > worst:
            worst, arg = v, (z1, z2)
    residuals["ball functional excess"] = worst - 1
    if worst > 1 + tol:
        poly = PolySample(1, [(1, 0, 0), (0, 1, 0)], np.array([arg[0], arg[1] / 2]))
        return ClassReport(Verdict.REFUTED, residuals, {"kind": "polynomial", **poly.to_json(), "sup_bound": 1.0})

    hit = vn_falsify([A, S, P], degree=degree, trials=falsify_budget, seed=seed)
    if hit is not None:
        return ClassReport(Verdict.REFUTED, residuals, {"kind": "polynomial", **hit.to_json()})
    return ClassReport(Verdict.NOT_REFUTED, residuals, details={"route": "battery + falsifier"})


# von Neumann falsifier


def monomials(degree: int) -> List[tuple]:
    return [e for e in itertools.product(range(degree + 1), repeat=3) if sum(e) <= degree]


@dataclass
class PolySample:
    """``f(z1, z2, z3) = sum_k c_k z1^i z2^j z3^l`` with ``i + j + l <= degree``."""

    degree: int
    exponents: List[tuple]
    coeffs: np.ndarray
    sup_estimate: Optional[float] = None
    operator_norm: Optional[float] = None

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if any(sum(e) > self.degree for e in self.exponents):
            raise ValueError("exponent exceeds degree bound")

    def __call__(self, a, s, p):
        a, s, p = (np.asarray(x, dtype=complex) for x in (a, s, p))
        return sum(c * a ** i * s ** j * p ** k for c, (i, j, k) in zip(self.coeffs, self.exponents))

    def of_operators(self, ops) -> np.ndarray:
        return _poly_matrix(self.exponents, self.coeffs, _power_table(ops, self.degree))

    def to_json(self) -> dict:
        out = {
            "degree": self.degree,
            "terms": [
                {"exponent": list(e), "coeff": [float(c.real), float(c.imag)]}
                for e, c in zip(self.exponents, self.coeffs)
            ],
        }
        if self.sup_estimate is not None:
            out["sup_estimate"] = self.sup_estimate
        if self.operator_norm is not None:
            out["operator_norm"] = self.operator_norm
        return out


def coordinate_poly(idx: int) -> PolySample:
    e = [0, 0, 0]
    e[idx] = 1
    return PolySample(1, [tuple(e)], np.array([1.0]))


def _power_table(ops, degree: int) -> List[List[np.ndarray]]:
    ops = [as_cmatrix(X) for X in ops]
    n = ops[0].shape[0]
    table = []
    for X in ops:
        pw = [np.eye(n, dtype=complex)]
        for _ in range(degree):
            pw.append(pw[-1] @ X)
        table.append(pw)
    return table


def _poly_matrix(exponents, coeffs, table) -> np.ndarray:
    n = table[0][0].shape[0]
    out = np.zeros((n, n), dtype=complex)
    for c, (i, j, k) in zip(coeffs, exponents):
        if c != 0:
            out += c * (table[0][i] @ table[1][j] @ table[2][k])
    return out


@functools.lru_cache(maxsize=8)
def _domain_samples(degree: int, samples: int, seed: int):
    """Monomial values on sample points of the closed pentablock.

    Three quarters of the points are images of unitaries with equal diagonal
    (the distinguished boundary, where moduli of holomorphic functions peak);
    the rest are images of general contractions.
    """
    rng = np.random.default_rng(seed)
    nb = (3 * samples) // 4
    th = rng.random(nb) * np.pi / 2
    ps = rng.random(nb) * 2 * np.pi
    ch = rng.random(nb) * 2 * np.pi
    a1, s1, p1 = sg.b_penta_param(th, ps, ch)
    a2, s2, p2 = sg.sample_many("penta", samples - nb, rng)
    a, s, p = np.concatenate([a1, a2]), np.concatenate([s1, s2]), np.concatenate([p1, p2])
    params = np.stack([th, ps, ch], axis=1)
    exps = monomials(degree)
    M = np.stack([a ** i * s ** j * p ** k for i, j, k in exps], axis=1)
    return exps, M, params


def _boundary_max(coeffs, exps, starts) -> float:
    E = np.array(exps)

    def neg(x):
        a, s, p = sg.b_penta_param(x[0], x[1], x[2])
        return -abs(np.sum(coeffs * a ** E[:, 0] * s ** E[:, 1] * p ** E[:, 2]))

    best = 0.0
    for x0 in starts:
        res = minimize(neg, x0, method="Nelder-Mead", options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 400})
        best = max(best, -res.fun)
    return best


def estimate_sup(poly: PolySample, samples: int = 100_000, seed: int = 12345, refine: int = 3) -> float:
    """Estimate of the sup norm over the closed pentablock (never above the truth)."""
    exps, M, params = _domain_samples(poly.degree, samples, seed)
    index = {e: k for k, e in enumerate(exps)}
    c = np.zeros(len(exps), dtype=complex)
    for e, v in zip(poly.exponents, poly.coeffs):
        c[index[tuple(e)]] += v
    vals = np.abs(M @ c)
    est = float(vals.max())
    if refine:
        nb = params.shape[0]
        top = np.argsort(vals[:nb])[-refine:]
        est = max(est, _boundary_max(c, exps, params[top]))
    return est


def random_poly(degree: int, rng: np.random.Generator) -> PolySample:
    exps = monomials(degree)
    c = rng.standard_normal(len(exps)) + 1j * rng.standard_normal(len(exps))
    return PolySample(degree, exps, c)


def vn_falsify(
    triple,
    degree: int = 4,
    trials: int = 100,
    seed: int = 0,
    samples: int = 100_000,
    margin: float = 1e-3,
    coordinates: bool = True,
) -> Optional[PolySample]:
    """Search for a polynomial with ``||f(A, S, P)|| > sup |f| (1 + margin)``.

    The coordinate functions are tried first, then random complex Gaussian
    polynomials normalized to estimated sup norm one. Returns the first
    violating polynomial, or None.
    """
    ops = [as_cmatrix(X) for X in _as_ops(triple)]
    table = _power_table(ops, degree)
    rng = np.random.default_rng(seed)
    exps = monomials(degree)
    index = {e: k for k, e in enumerate(exps)}
    candidates = []
    if coordinates:
        candidates = [coordinate_poly(i) for i in range(3)]
    for t in range(trials):
        poly = candidates[t] if t < len(candidates) else random_poly(degree, rng)
        full = np.zeros(len(exps), dtype=complex)
        for e, v in zip(poly.exponents, poly.coeffs):
            full[index[tuple(e)]] += v
        est = estimate_sup(PolySample(degree, exps, full), samples)
        if est <= 0:
            continue
        value = opnorm(_poly_matrix(exps, full, table))
        if value > est * (1 + margin):
            return PolySample(degree, exps, full / est, sup_estimate=1.0, operator_norm=value / est)
    return None
