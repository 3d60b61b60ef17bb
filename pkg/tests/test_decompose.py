import numpy as np
import pytest
from hypothesis import given, settings

from conftest import cgauss
from pentablock import decompose as dc
from pentablock import generators as gen
from pentablock.block_toeplitz import BlockOp
from pentablock.classify import Verdict
from pentablock.linalg_core import CommutingTriple, adj, numerical_radius, opnorm, random_unitary
from strategies import seeds


def _check_split(dec, ops, tol=1e-10):
    n = dec.part_u.ambient_dim
    assert opnorm(dec.part_u.projector + dec.part_c.projector - np.eye(n)) <= 1e-10
    assert opnorm(adj(dec.part_u.basis) @ dec.part_c.basis) <= 1e-10
    assert dec.reducing_residual <= tol


# canonical decomposition


def test_canonical_p_unitary_input(rng):
    t = gen.p_unitary(3, rng)
    dec = dc.canonical_p(t)
    assert dec.dims == (3, 0)
    assert dec.certificates["unitary_part"].verdict is Verdict.CERTIFIED


def test_canonical_half_identity():
    t = (0.5 * np.eye(2), np.zeros((2, 2)), 0.5 * np.eye(2))
    assert dc.canonical_p(t).dims == (0, 2)


@given(seed=seeds)
def test_canonical_recovers_construction(seed):
    rng = np.random.default_rng(seed)
    k_u, k_c = int(rng.integers(0, 4)), int(rng.integers(0, 4))
    if k_u + k_c == 0:
        k_c = 1
    c = gen.mixed_triple(k_u, k_c, rng)
    dec = dc.canonical_p(c.triple, seed=seed)
    assert dec.dims == (k_u, k_c)
    _check_split(dec, list(c.triple))
    if k_c:
        assert dc.canonical_p(dec.restricted_c).dims[0] == 0
    other = dc.canonical_p(c.triple, seed=seed + 1)
    assert opnorm(other.part_u.projector - dec.part_u.projector) <= 1e-8


def test_canonical_restrictions_commute(rng):
    c = gen.mixed_triple(2, 3, rng)
    dec = dc.canonical_p(c.triple)
    for part in (dec.restricted_u, dec.restricted_c):
        assert part.commutator_residual() <= 1e-10


def test_canonical_rejects_blockops():
    t = CommutingTriple(BlockOp.shift(1, 1), BlockOp.zeros(1, 1), BlockOp.identity(1, 1).scale(-1))
    with pytest.raises(TypeError):
        dc.canonical_p(t)


# Wold decompositions


def test_wold_matrix_short_circuit(rng):
    dec = dc.wold_isometry(random_unitary(3, rng))
    assert dec.dims == (3, 0)


def test_wold_rejects_non_isometry():
    with pytest.raises(ValueError):
        dc.wold_isometry(BlockOp.shift(1, 1).H)


def test_wold_shift_has_no_unitary_part():
    for levels in (4, 8, 12):
        dec = dc.wold_isometry(BlockOp.shift(1, 1), levels=levels)
        assert dec.part_u.dim == 0 and dec.approximate and dec.window_levels == levels


def test_wold_recovers_head_unitary(rng):
    U = random_unitary(2, rng)
    V = BlockOp.shift(1, 1).with_head_summand(U).conjugate_head(random_unitary(3, rng))
    dec = dc.wold_isometry(V)
    assert dec.part_u.dim == 2
    assert dec.reducing_residual <= 1e-10


def test_wold_p_isometry_shift_with_minus_identity():
    t = CommutingTriple(BlockOp.shift(1, 1), BlockOp.zeros(1, 1), BlockOp.identity(1, 1).scale(-1))
    dec = dc.wold_p_isometry(t)
    assert dec.part_u.dim == 0 and dec.part_c.dim == dec.part_u.ambient_dim
    assert dec.certificates["pure_recheck"].verdict is Verdict.CERTIFIED


def test_wold_p_isometry_unitary_input(rng):
    t = gen.p_unitary(3, rng)
    assert dc.wold_p_isometry(t).dims == (3, 0)


def test_wold_p_isometry_rejects_non_isometry():
    t = CommutingTriple(BlockOp.shift(1, 1).H, BlockOp.zeros(1, 1), BlockOp.identity(1, 1).scale(-1))
    with pytest.raises(ValueError):
        dc.wold_p_isometry(t)


@settings(max_examples=25)
@given(seed=seeds)
def test_wold_p_isometry_recovers_construction(seed):
    rng = np.random.default_rng(seed)
    c = gen.mixed_p_isometry(int(rng.integers(0, 3)), int(rng.integers(1, 3)), rng)
    dec = dc.wold_p_isometry(c.triple, seed=seed)
    assert dec.part_u.dim == c.unitary_dim
    assert dec.certificates["pure_recheck"].verdict is Verdict.CERTIFIED
    assert dec.reducing_residual <= 1e-10
    again = dc.wold_p_isometry(c.triple, seed=seed + 17)
    assert opnorm(again.part_u.projector - dec.part_u.projector) <= 1e-8


# fundamental operator


def test_fundamental_operator_examples(rng):
    U1, U2 = (random_unitary(1, rng) for _ in range(2))
    fo = dc.fundamental_operator(U1 + U2, U1 @ U2)
    assert fo.F.shape == (0, 0) and fo.residual <= 1e-12
    fo = dc.fundamental_operator(np.zeros((2, 2)), np.zeros((2, 2)))
    assert fo.defect.dim == 2 and np.allclose(fo.F, 0)


def test_fundamental_operator_no_solution():
    # S - S*P must vanish on Ker D_P; here P = I but S is not self-adjoint
    with pytest.raises(dc.NoSolution):
        dc.fundamental_operator(np.diag([1j, 0]), np.eye(2))


def _fundamental_by_kronecker(S, P):
    """Independent route: least squares for D F D = S - S*P with vec and Kronecker products."""
    n = P.shape[0]
    w, V = np.linalg.eigh(np.eye(n) - adj(P) @ P)
    D = (V * np.sqrt(np.clip(w, 0, None))) @ adj(V)
    G = S - adj(S) @ P
    K = np.kron(D.T, D)
    f, *_ = np.linalg.lstsq(K, G.reshape(-1, order="F"), rcond=1e-12)
    return f.reshape(n, n, order="F")


@given(seed=seeds)
def test_fundamental_operator_against_kronecker(seed):
    rng = np.random.default_rng(seed)
    S, P = gen.gamma_contraction(int(rng.integers(1, 4)), rng)
    fo = dc.fundamental_operator(S, P)
    assert fo.residual <= 1e-9 and fo.cross_residual <= 1e-8
    assert fo.omega <= 1 + 1e-8
    if fo.well_conditioned:
        assert opnorm(fo.ambient() - _fundamental_by_kronecker(S, P)) <= 1e-6


@given(seed=seeds)
def test_fundamental_operator_uniqueness_perturb_and_project(seed):
    rng = np.random.default_rng(seed)
    S, P = gen.gamma_contraction(int(rng.integers(1, 4)), rng)
    fo = dc.fundamental_operator(S, P)
    Dm = fo.defect.Dm
    E = cgauss(rng, fo.F.shape)
    # any other solution differs by something killed by Dm* . Dm, which is zero on the range
    assert opnorm(adj(Dm) @ E @ Dm) > 0 or fo.defect.dim == 0
    assert opnorm(adj(Dm) @ (fo.F + 1e-3 * E) @ Dm - (S - adj(S) @ P)) > fo.residual


# Sigma equation


def test_sigma_examples():
    sol = dc.solve_sigma((np.zeros((2, 2)), np.zeros((2, 2)), np.eye(2)))
    assert not sol.solvable and sol.X is None
    sol = dc.solve_sigma((np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2))))
    assert sol.solvable and sol.psd and np.allclose(sol.X, np.eye(2))


def _sigma_by_solve(A, S, P):
    n = P.shape[0]
    w, V = np.linalg.eigh(np.eye(n) - adj(P) @ P)
    D = (V * np.sqrt(w)) @ adj(V)
    sigma = np.eye(n) - adj(A) @ A - adj(S) @ S / 4
    return np.linalg.solve(D, np.linalg.solve(D, sigma.conj().T).conj().T)


@given(seed=seeds)
def test_sigma_solution_on_normal_contractions(seed):
    rng = np.random.default_rng(seed)
    t = gen.normal_p_contraction(int(rng.integers(1, 4)), rng, p_max=0.95)
    A, S, P = t
    sol = dc.solve_sigma(t)
    D2 = np.eye(len(A)) - adj(P) @ P
    sig = sol.sigma
    direct = min(np.linalg.eigvalsh(D2 - sig)[0], np.linalg.eigvalsh(D2 + sig)[0]) >= -1e-9
    assert sol.solvable == direct
    assert np.linalg.eigvalsh(sig)[0] >= -1e-10
    if sol.solvable:
        assert sol.residual <= 1e-9 and sol.omega <= 1 + 1e-8
        Q = sol.defect.basis
        assert opnorm(Q @ sol.X @ adj(Q) - _sigma_by_solve(A, S, P)) <= 1e-8
        assert (np.linalg.eigvalsh(sol.X)[0] >= -1e-10) == (np.linalg.eigvalsh(sig)[0] >= -1e-10)


def test_sigma_psd_flag_matches_spherical_contraction(rng):
    A = np.diag([0.9, 0.1])
    S = np.diag([1.0, 0.2])
    sol = dc.solve_sigma((A, S, np.zeros((2, 2))))
    assert not sol.psd
    assert sol.margins["Sigma"] == pytest.approx(1 - 0.81 - 0.25)


def test_sigma_scalar_example():
    # Sigma = 1 - 0.36 = 0.64 and D_P^2 = 0.75, so X = 0.64 / 0.75
    sol = dc.solve_sigma((np.array([[0.6]]), np.zeros((1, 1)), np.array([[0.5]])))
    assert sol.solvable
    assert numerical_radius(sol.X) == pytest.approx(0.64 / 0.75)


def test_sigma_scalar_unsolvable():
    # Sigma = 0.91 exceeds D_P^2 = 0.75
    sol = dc.solve_sigma((np.array([[0.3]]), np.zeros((1, 1)), np.array([[0.5]])))
    assert not sol.solvable
