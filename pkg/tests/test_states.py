import numpy as np
import pytest

from qst_dantzig.pauli import InvalidStateError, PauliSet
from qst_dantzig.states import (
    DensityMatrix,
    DomainError,
    binary_entropy,
    binomial_kl,
    build_packing,
    entropy_and_kl,
    experiment_kl,
    find_spread_vector,
    mix_identity,
    project_simplex,
    project_spectrahedron,
    random_state,
    schatten_norm,
)


def rand_herm(m, rng):
    A = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return (A + A.conj().T) / 2


# ---------------------------------------------------------------- DensityMatrix


def test_density_matrix_validation():
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.eye(2))  # trace 2
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.array([[0.5, 1], [0, 0.5]]))
    rho = DensityMatrix(np.eye(2) / 2)
    assert rho.m == 2
    with pytest.raises(ValueError):
        rho.data[0, 0] = 1


def test_density_matrix_round_trips():
    rho = random_state(8, 3, seed=5)
    assert DensityMatrix.from_bytes(rho.to_bytes()) == rho
    assert DensityMatrix.from_json(rho.to_json()) == rho
    raw = rho.to_bytes()
    assert len(raw) == 8 * 8 * 16
    first = np.frombuffer(raw[:16], dtype="<f8")
    assert first[0] == rho.data[0, 0].real and first[1] == rho.data[0, 0].imag


def test_binary_rejects_bad_length():
    with pytest.raises(InvalidStateError):
        DensityMatrix.from_bytes(b"\x00" * 40)


# ---------------------------------------------------------------- random states


def test_random_pure_qubit():
    rho = random_state(2, 1, seed=0)
    assert np.trace(rho.data).real == pytest.approx(1, abs=1e-12)
    assert abs(np.linalg.det(rho.data)) < 1e-10


def test_random_equal_spectrum_full_rank_is_uniform():
    np.testing.assert_allclose(random_state(8, 8, seed=1, equal_spectrum=True).data, np.eye(8) / 8, atol=1e-15)


@pytest.mark.parametrize("m,r", [(16, 3), (8, 1), (4, 4), (32, 5)])
def test_random_state_rank(m, r):
    rho = random_state(m, r, seed=m + r)
    assert np.sum(np.linalg.eigvalsh(rho.data) > 1e-8) == r


def test_random_state_rank_too_large():
    with pytest.raises(ValueError):
        random_state(4, 5, seed=0)


def test_random_state_deterministic():
    assert random_state(8, 2, seed=3) == random_state(8, 2, seed=3)
    assert random_state(8, 2, seed=3) != random_state(8, 2, seed=4)


# ---------------------------------------------------------------- Schatten norms


def test_schatten_basic():
    assert schatten_norm(np.eye(4), 1) == pytest.approx(4)
    assert schatten_norm(np.diag([3.0, -4.0]), np.inf) == pytest.approx(4)
    assert schatten_norm(np.diag([3.0, -4.0]), 2) == pytest.approx(5)
    with pytest.raises(ValueError):
        schatten_norm(np.eye(2), 0.5)


@pytest.mark.parametrize("p", [1, 1.5, 2, 3, 7])
def test_schatten_matches_eigenvalue_formula(p):
    rng = np.random.default_rng(int(p * 10))
    A = rand_herm(6, rng)
    lam = np.abs(np.linalg.eigvalsh(A))
    assert schatten_norm(A, p) == pytest.approx(np.sum(lam**p) ** (1 / p), rel=1e-12)


@pytest.mark.parametrize("p,q,r", [(1, 2, np.inf), (1, 4 / 3, 2), (2, 3, np.inf)])
def test_interpolation_inequality(p, q, r):
    ir = 0.0 if np.isinf(r) else 1 / r
    mu = (1 / q - ir) / (1 / p - ir)
    rng = np.random.default_rng(7)
    for _ in range(300):
        A = rand_herm(int(rng.choice([2, 4, 8])), rng)
        assert schatten_norm(A, q) <= schatten_norm(A, p) ** mu * schatten_norm(A, r) ** (1 - mu) * (1 + 1e-12)


def test_cone_inequality():
    rng = np.random.default_rng(8)
    for i in range(300):
        m = int(rng.choice([4, 8, 16]))
        l = int(rng.integers(1, m + 1))
        S = random_state(m, l, seed=rng)
        S1 = random_state(m, int(rng.integers(1, m + 1)), seed=rng)
        D = S1.data - S.data
        assert schatten_norm(D, 1) <= 2 * np.sqrt(2 * l) * schatten_norm(D, 2) + 1e-12


# ---------------------------------------------------------------- entropy / KL


def test_entropy_kl_uniform():
    u = DensityMatrix.maximally_mixed(8)
    d = entropy_and_kl(u, u)
    assert d.entropy == pytest.approx(np.log(8))
    assert d.kl == pytest.approx(0, abs=1e-14)
    assert not d.floored


def test_entropy_of_pure_state_is_zero():
    d = entropy_and_kl(random_state(4, 1, seed=2), DensityMatrix.maximally_mixed(4))
    assert abs(d.entropy) < 1e-9


def test_kl_commuting_matches_classical():
    rng = np.random.default_rng(9)
    p, q = rng.dirichlet(np.ones(6)), rng.dirichlet(np.ones(6))
    d = entropy_and_kl(np.diag(p), np.diag(q))
    assert d.kl == pytest.approx(np.sum(p * np.log(p / q)), rel=1e-12)
    assert d.symmetric_kl == pytest.approx(np.sum((p - q) * np.log(p / q)), rel=1e-12)


def test_kl_flag_on_singular_second_argument():
    pure = random_state(4, 1, seed=1)
    d = entropy_and_kl(DensityMatrix.maximally_mixed(4), pure)
    assert d.floored and np.isfinite(d.kl)
    assert not entropy_and_kl(pure, DensityMatrix.maximally_mixed(4)).floored


def test_entropy_range():
    for seed in range(20):
        rho = random_state(8, 1 + seed % 8, seed=seed)
        v = entropy_and_kl(rho, rho).entropy
        assert -1e-12 <= v <= np.log(8) + 1e-12


@pytest.mark.parametrize("delta", [0.1, 0.01])
def test_identity_mixing_bound(delta):
    rng = np.random.default_rng(11)
    for _ in range(100):
        m = int(rng.choice([2, 4, 8]))
        rho = random_state(m, int(rng.integers(1, m + 1)), seed=rng)
        S = random_state(m, m, seed=rng)
        lhs = entropy_and_kl(rho, S).kl
        rhs = (entropy_and_kl(mix_identity(rho, delta), S).kl + binary_entropy(delta)) / (1 - delta)
        assert lhs <= rhs + 1e-10


# ---------------------------------------------------------------- projections


def test_project_simplex_against_known_values():
    np.testing.assert_allclose(project_simplex([0.5, 0.5]), [0.5, 0.5])
    np.testing.assert_allclose(project_simplex([2.0, 0.0]), [1.0, 0.0])
    np.testing.assert_allclose(project_simplex([1.0, 1.0, 1.0]), [1 / 3] * 3)


def test_projection_idempotent_and_scaling():
    rho = random_state(8, 3, seed=1)
    np.testing.assert_allclose(project_spectrahedron(rho.data).data, rho.data, atol=1e-10)
    np.testing.assert_allclose(project_spectrahedron(2 * np.eye(8) / 8).data, np.eye(8) / 8, atol=1e-12)


def test_projection_beats_random_feasible_points():
    rng = np.random.default_rng(12)
    A = rand_herm(4, rng)
    P = project_spectrahedron(A).data
    best = np.linalg.norm(P - A)
    for i in range(10_000):
        X = random_state(4, int(rng.integers(1, 5)), seed=rng).data
        assert np.linalg.norm(X - A) >= best - 1e-12


def test_projection_nonexpansive():
    rng = np.random.default_rng(13)
    for _ in range(100):
        A, B = rand_herm(6, rng), rand_herm(6, rng)
        d = np.linalg.norm(project_spectrahedron(A).data - project_spectrahedron(B).data)
        assert d <= np.linalg.norm(A - B) + 1e-12


def test_mix_identity():
    rho = random_state(2, 1, seed=0)
    np.testing.assert_allclose(np.linalg.eigvalsh(mix_identity(rho, 0.5).data), [0.25, 0.75], atol=1e-12)
    rng = np.random.default_rng(14)
    for _ in range(50):
        rho = random_state(8, int(rng.integers(1, 9)), seed=rng)
        delta = float(rng.uniform(0.001, 0.999))
        mixed = mix_identity(rho, delta)
        assert np.trace(mixed.data).real == pytest.approx(1, abs=1e-12)
        assert np.linalg.eigvalsh(mixed.data)[0] >= delta / 8 - 1e-12
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            mix_identity(rho, bad)


# ---------------------------------------------------------------- Binomial experiments


@pytest.mark.parametrize("K", [1, 10, 100])
def test_binomial_kl_quadratic_bound(K):
    ps = np.linspace(0.15, 0.85, 50)
    P, Q = np.meshgrid(ps, ps)
    assert np.all(binomial_kl(K, P, Q) <= 8 * K * (P - Q) ** 2 + 1e-15)


def test_binomial_kl_against_direct_sum():
    from scipy import stats

    K, p, q = 7, 0.3, 0.55
    j = np.arange(K + 1)
    a, b = stats.binom.pmf(j, K, p), stats.binom.pmf(j, K, q)
    assert binomial_kl(K, p, q) == pytest.approx(np.sum(a * np.log(a / b)), rel=1e-12)


def test_experiment_kl_zero_on_identical_states():
    inst = build_packing(8, 2, 256, 100, seed=0)
    rho = inst.states[0]
    assert experiment_kl(rho, rho, 256, 100) == 0.0


def test_experiment_kl_domain():
    with pytest.raises(DomainError):
        experiment_kl(random_state(4, 1, seed=0), DensityMatrix.maximally_mixed(4), 10, 10)


# ---------------------------------------------------------------- packing


def test_spread_vector_quality_is_consistent():
    v, q = find_spread_vector(8, trials=2000, seed=3)
    ps = PauliSet(PauliSet.full(3).labels[1:])
    assert np.linalg.norm(v) == pytest.approx(1)
    assert q == pytest.approx(np.sqrt(8) * np.abs(ps.quadratic(v)).max(), rel=1e-12)


def test_packing_block_spectrum_r2():
    m, n, K = 8, 100, 100
    kappa_target = 0.2
    c1 = kappa_target * np.sqrt(n * K) / (m * 1)
    inst = build_packing(m, 2, n, K, target_count=4, c1=c1, seed=1, spread_trials=1000)
    assert inst.kappa == pytest.approx(0.2)
    for s in inst.states:
        lam = np.sort(np.linalg.eigvalsh(s.data))[::-1]
        np.testing.assert_allclose(lam[:2], [0.8, 0.2], atol=1e-12)
        np.testing.assert_allclose(lam[2:], 0, atol=1e-12)


def test_packing_instance_properties():
    inst = build_packing(8, 2, 256, 100, p=2, target_count=8, seed=0)
    assert len(inst.states) == 8 and not inst.budget_exhausted
    ps = PauliSet(PauliSet.full(3).labels[1:])
    for s in inst.states:
        assert s.rank(1e-10) <= 2
        assert np.trace(s.data).real == pytest.approx(1)
        assert np.abs(ps.inner(s.data)).max() <= inst.coefficient_bound() + 1e-12
    dists = [schatten_norm(a.data - b.data, 2) for i, a in enumerate(inst.states) for b in inst.states[i + 1 :]]
    assert min(dists) == pytest.approx(inst.min_pairwise_distance)
    assert inst.achieved_constant > 0
    for i, a in enumerate(inst.states):
        for b in inst.states[i + 1 :]:
            kl = experiment_kl(a, b, 256, 100)
            assert kl <= 256 * 100 / 8 * np.linalg.norm(a.data - b.data) ** 2 + 1e-9


def test_packing_frame_is_unitary():
    inst = build_packing(8, 2, 256, 100, target_count=2, seed=4, spread_trials=1000)
    np.testing.assert_allclose(inst.frame.conj().T @ inst.frame, np.eye(8), atol=1e-12)


def test_packing_kappa_too_large():
    with pytest.raises(DomainError):
        build_packing(8, 4, 10, 10, c1=0.25)


def test_packing_budget_warning():
    with pytest.warns(RuntimeWarning):
        inst = build_packing(8, 2, 256, 100, target_count=50, c_sep=1.4, budget=30, seed=0, spread_trials=500)
    assert inst.budget_exhausted and len(inst.states) < 50


def test_packing_json_round_trip():
    inst = build_packing(8, 2, 256, 100, target_count=3, seed=2, spread_trials=500)
    back = type(inst).from_json_dict(inst.to_json_dict())
    assert back.states == inst.states
    assert back.min_pairwise_distance == inst.min_pairwise_distance
    np.testing.assert_array_equal(back.frame, inst.frame)
