"""Acceptance gate: ten criteria at their stated tolerances.

Run with pytest, or directly as a script; either way one PASS/FAIL line is
printed per criterion.
"""

import sys
import time

import numpy as np
import pytest

from pentablock import classify as cl
from pentablock import decompose as dc
from pentablock import dilate as dl
from pentablock import generators as gen
from pentablock import scalar_geometry as sg
from pentablock.block_toeplitz import BlockOp
from pentablock.linalg_core import CommutingTriple, adj, opnorm

SEED = 20240611


def _eigh_sqrt(M):
    w, V = np.linalg.eigh(M)
    return (V * np.sqrt(np.clip(w, 0, None))) @ adj(V)


# criteria; each returns (ok, summary)


def criterion_1():
    tol = 1e-9
    r3 = np.sqrt(3) / 2
    checks = [
        bool(sg.in_biball(r3, 0.5, tol)),
        bool(sg.in_gamma(1, 0, tol)),
        not bool(sg.in_pentablock_closed((r3, 1, 0), tol)),
        bool(sg.in_pentablock_closed((0.5, 1, 0), tol)),
        not bool(sg.in_biball(0.5, 1.0, tol)),
        bool(sg.in_pentablock_closed((0, 0, 1), tol)),
        not bool(sg.in_b_pentablock((0, 0, 1), tol)),
    ]
    return all(checks), f"{sum(checks)}/7 membership answers correct"


def criterion_2():
    rng = np.random.default_rng(SEED)
    n = 100_000
    M = rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2))
    # mix clamped (boundary heavy) and scaled (interior) contractions
    A0 = sg.clamp_contractions(M)
    half = n // 2
    A0[half:] = M[half:] * (rng.random((n - half, 1, 1)) / np.linalg.norm(M[half:], ord=2, axis=(1, 2))[:, None, None])
    assert np.all(np.linalg.norm(A0, ord=2, axis=(1, 2)) <= 1 + 1e-12)
    bad_penta = int(np.sum(~sg.in_pentablock_closed(sg.pi_map_batch(A0), 1e-9)))
    phi, eta, th = rng.random((3, n)) * np.array([[2 * np.pi], [2 * np.pi], [np.pi / 2]])
    c, s = np.cos(th), np.sin(th)
    U = np.empty((n, 2, 2), dtype=complex)
    U[:, 0, 0] = U[:, 1, 1] = c
    U[:, 0, 1] = 1j * s * np.exp(1j * eta)
    U[:, 1, 0] = 1j * s * np.exp(-1j * eta)
    U *= np.exp(1j * phi)[:, None, None]
    gram = np.einsum("nji,njk->nik", U.conj(), U)
    assert np.abs(gram - np.eye(2)).max() <= 1e-12
    bad_b = int(np.sum(~sg.in_b_pentablock(sg.pi_map_batch(U), 1e-9)))
    return bad_penta == 0 and bad_b == 0, f"failures: {bad_penta} contractions, {bad_b} unitaries out of {n} each"


def criterion_3():
    rng = np.random.default_rng(SEED + 3)
    split = mixed = block_bad = 0
    for k in range(1000):
        nd = int(rng.integers(1, 5))
        member = k % 2 == 0
        t = gen.p_unitary(nd, rng) if member else gen.perturbed_p_unitary(nd, rng)
        conds = cl.p_unitary_conditions(t)
        if len(set(conds.values())) != 1:
            split += 1
            continue
        verdict = next(iter(conds.values()))
        if verdict != member:
            mixed += 1
        A, S, P = t
        U = cl.block_unitary(A, S, P)
        unitary = opnorm(adj(U) @ U - np.eye(2 * nd)) <= 1e-9
        if unitary != verdict:
            block_bad += 1
    ok = split == mixed == block_bad == 0
    return ok, f"disagreements {split}, wrong verdicts {mixed}, block/verdict mismatches {block_bad} over 1000"


def criterion_4():
    Tz, Z, mI = BlockOp.shift(1, 1), BlockOp.zeros(1, 1), BlockOp.identity(1, 1).scale(-1)
    t = CommutingTriple(Tz, Z, mI)
    iso = cl.is_p_isometry(t)
    uni = cl.is_p_unitary(t)
    co = cl.is_p_isometry(CommutingTriple(Tz.H, Z, mI))
    ok = (
        iso.verdict is cl.Verdict.CERTIFIED
        and max(iso.residuals.values()) <= 1e-12
        and uni.verdict is cl.Verdict.REFUTED
        and co.verdict is cl.Verdict.REFUTED
    )
    return ok, f"isometry {iso.verdict.value}, unitary {uni.verdict.value}, adjoint isometry {co.verdict.value}"


def criterion_5():
    rng = np.random.default_rng(SEED + 5)
    bad = []
    for k in range(100):
        k_u, k_c = int(rng.integers(0, 4)), int(rng.integers(1, 4))
        c = gen.mixed_triple(k_u, k_c, rng)
        dec = dc.canonical_p(c.triple, seed=k)
        other = dc.canonical_p(c.triple, seed=k + 1000)
        ok = (
            dec.dims == (k_u, k_c)
            and opnorm(other.part_u.projector - dec.part_u.projector) <= 1e-8
            and dc.canonical_p(dec.restricted_c).dims[0] == 0
        )
        if not ok:
            bad.append(("matrix", k))
    for k in range(100):
        c = gen.mixed_p_isometry(int(rng.integers(0, 3)), int(rng.integers(1, 3)), rng)
        dec = dc.wold_p_isometry(c.triple, seed=k)
        other = dc.wold_p_isometry(c.triple, seed=k + 1000)
        ok = (
            dec.part_u.dim == c.unitary_dim
            and opnorm(other.part_u.projector - dec.part_u.projector) <= 1e-8
            and dec.certificates["pure_recheck"].verdict is cl.Verdict.CERTIFIED
        )
        if not ok:
            bad.append(("blockop", k))
    return not bad, f"{200 - len(bad)}/200 round trips recovered" + (f"; failing {bad[:5]}" if bad else "")


def criterion_6():
    rng = np.random.default_rng(SEED + 6)
    worst = {"residual": 0.0, "omega": 0.0, "cross": 0.0}
    for _ in range(500):
        S, P = gen.gamma_contraction(int(rng.integers(1, 5)), rng)
        fo = dc.fundamental_operator(S, P)
        D = _eigh_sqrt(np.eye(len(P)) - adj(P) @ P)
        F = fo.ambient()
        worst["residual"] = max(worst["residual"], opnorm(S - adj(S) @ P - D @ F @ D))
        worst["omega"] = max(worst["omega"], fo.omega)
        worst["cross"] = max(worst["cross"], opnorm(D @ S - F @ D - adj(F) @ D @ P))
    ok = worst["residual"] <= 1e-9 and worst["omega"] <= 1 + 1e-8 and worst["cross"] <= 1e-8
    return ok, "worst residual {residual:.1e}, omega {omega:.6f}, cross {cross:.1e}".format(**worst)


def criterion_7():
    rng = np.random.default_rng(SEED + 7)
    bad = 0
    n_solvable = 0
    worst = {"residual": 0.0, "omega": 0.0, "resolve": 0.0}
    for _ in range(1000):
        nd = int(rng.integers(1, 4))
        t = gen.normal_p_contraction(nd, rng, p_max=0.95)
        A, S, P = t
        sol = dc.solve_sigma(t)
        D = _eigh_sqrt(np.eye(nd) - adj(P) @ P)
        sigma = np.eye(nd) - adj(A) @ A - adj(S) @ S / 4
        sigma = (sigma + adj(sigma)) / 2
        direct = min(np.linalg.eigvalsh(D @ D - sigma)[0], np.linalg.eigvalsh(D @ D + sigma)[0]) >= -1e-9
        if sol.solvable != direct:
            bad += 1
            continue
        if not sol.solvable:
            continue
        n_solvable += 1
        Q = sol.defect.basis
        X = Q @ sol.X @ adj(Q)
        # independent re-solve with the invertible square root
        Y = np.linalg.solve(D, np.linalg.solve(D, sigma).conj().T).conj().T
        worst["residual"] = max(worst["residual"], sol.residual)
        worst["omega"] = max(worst["omega"], sol.omega)
        worst["resolve"] = max(worst["resolve"], opnorm(X - Y))
        x_psd = np.linalg.eigvalsh(sol.X)[0] >= -1e-10
        s_psd = np.linalg.eigvalsh(sigma)[0] >= -1e-10
        if x_psd != s_psd:
            bad += 1
    ok = bad == 0 and worst["residual"] <= 1e-9 and worst["omega"] <= 1 + 1e-8 and worst["resolve"] <= 1e-9
    return ok, (
        f"{bad} mismatches, {n_solvable} solvable; worst residual {worst['residual']:.1e}, "
        f"omega {worst['omega']:.6f}, re-solve gap {worst['resolve']:.1e}"
    )


def criterion_8():
    rng = np.random.default_rng(SEED + 8)
    failures = 0
    worst_exact = worst_mono = 0.0
    for k in range(200):
        nd = int(rng.integers(1, 4))
        if k % 2 == 0:
            t, (F1, F2) = gen.t00_family(nd, rng)
        else:
            t, _ = gen.i0t_family(nd, rng)
            F1, F2 = np.eye(nd), np.zeros((nd, nd))
        fo = dc.fundamental_operator(*list(t)[1:])
        data = dl.DilationData.from_ambient(F1, F2, fo.defect.basis)
        res = dl.penta_dilation(t, data, degree=5)
        worst_exact = max(worst_exact, max(res.report.values()))
        worst_mono = max(worst_mono, res.monomial_check)
        if not res.passed:
            failures += 1
    obstruction = not dc.solve_sigma((np.zeros((2, 2)), np.zeros((2, 2)), np.eye(2))).solvable
    ok = failures == 0 and worst_exact <= 1e-10 and worst_mono <= 1e-9 and obstruction
    return ok, (
        f"{200 - failures}/200 dilations pass; worst identity {worst_exact:.1e}, "
        f"worst monomial {worst_mono:.1e}; (0,0,I) unsolvable: {obstruction}"
    )


def criterion_9():
    rng = np.random.default_rng(SEED + 9)
    worst = np.inf
    for _ in range(1000):
        nd = int(rng.integers(1, 5))
        A, S, P = gen.normal_p_contraction(nd, rng)
        M = np.eye(nd) - adj(A) @ A - adj(S) @ S / 4
        worst = min(worst, float(np.linalg.eigvalsh((M + adj(M)) / 2)[0]))
    return worst >= -1e-10, f"smallest eigenvalue {worst:.3e}"


def criterion_10():
    rng = np.random.default_rng(SEED + 10)
    false_hits = 0
    trials = 0
    for k in range(20):
        t = gen.normal_p_contraction(int(rng.integers(1, 4)), rng)
        assert cl.p_contraction_certificate(t).verdict is cl.Verdict.CERTIFIED
        # 3 coordinate polynomials plus 47 random ones per triple
        if cl.vn_falsify(t, trials=50, seed=k) is not None:
            false_hits += 1
        trials += 50
    hit = cl.vn_falsify((1.1 * np.eye(2), np.zeros((2, 2)), np.zeros((2, 2))), trials=10)
    ok = false_hits == 0 and hit is not None
    return ok, f"{false_hits} false refutations over {trials} trials; (1.1 I, 0, 0) refuted: {hit is not None}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def _report(idx, ok, msg, elapsed):
    line = f"{'PASS' if ok else 'FAIL'} criterion {idx}: {msg} ({elapsed:.1f}s)"
    return line


@pytest.mark.parametrize("idx", range(1, 11))
def test_criterion(idx, capsys):
    start = time.perf_counter()
    ok, msg = CRITERIA[idx - 1]()
    line = _report(idx, ok, msg, time.perf_counter() - start)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for i, fn in enumerate(CRITERIA, 1):
        start = time.perf_counter()
        ok, msg = fn()
        failed += not ok
        print(_report(i, ok, msg, time.perf_counter() - start), flush=True)
    sys.exit(1 if failed else 0)
