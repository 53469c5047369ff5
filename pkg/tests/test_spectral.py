import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import assert_multiset_close
from gamebound import (
    BlockSpectralBounds,
    DegenerateBoundsError,
    DimensionError,
    UndefinedKappaError,
    UnsupportedArityError,
    ValidationError,
    block_spectral_bounds,
    build_game,
    eigenvalues,
    kappa_domino_basic,
    kappa_domino_improved,
    kappa_jacobian,
    kappa_table1,
    pscli2_instance,
    spectral_case,
    toeplitz_symbol_range,
)


def bounds(mu1, mu2, mu12, L1, L2, L12):
    return BlockSpectralBounds(mu1=mu1, mu2=mu2, mu12=mu12, L1=L1, L2=L2, L12=L12)


def sample_quadrant(quadrant, rng):
    """Random valid bounds landing in the requested discriminant quadrant."""
    mu12 = rng.uniform(0.2, 1.5)
    L12 = mu12 + rng.uniform(0.2, 1.5)
    if quadrant in ("exact", "L-real"):
        dmu = rng.uniform(0.0, 1.9) * mu12
    else:
        dmu = 2 * mu12 + rng.uniform(0.1, 2.0)
    if quadrant in ("exact", "mu-real"):
        dL = rng.uniform(0.0, 1.9) * L12
    else:
        dL = 2 * L12 + rng.uniform(0.1, 2.0)
    mu1 = rng.uniform(0.5, 2.0)
    mu2 = mu1 + dmu
    L2 = mu2 + rng.uniform(0.0, 1.0)
    L1 = L2 + dL
    return bounds(mu1, mu2, mu12, L1, L2, L12)


class TestEigenvalues:
    def test_rotation_generator(self):
        spec = eigenvalues([[0, 1], [-1, 0]])
        assert_multiset_close(spec.eigenvalues, [1j, -1j], tol=1e-12)
        assert spec.max_modulus == pytest.approx(1.0)
        assert spec.min_modulus == pytest.approx(1.0)

    def test_diagonal(self):
        spec = eigenvalues(np.diag([1.0, 3.0]))
        assert_multiset_close(spec.eigenvalues, [1.0, 3.0], tol=1e-12)

    def test_hard_pattern_closed_form(self):
        # mu pair 1.5 +- i sqrt(8.75); L pair 4.5 +- i sqrt(35.75)
        inst = pscli2_instance(1, 4, 2, 5, 3, 6)
        spec = eigenvalues(inst.game.A)
        expected = [
            1.5 + 1j * np.sqrt(8.75), 1.5 - 1j * np.sqrt(8.75),
            4.5 + 1j * np.sqrt(35.75), 4.5 - 1j * np.sqrt(35.75),
        ]
        assert_multiset_close(spec.eigenvalues, expected, tol=1e-10)

    def test_non_square(self):
        with pytest.raises(DimensionError):
            eigenvalues(np.ones((2, 3)))

    def test_non_finite(self):
        with pytest.raises(ValidationError):
            eigenvalues([[np.inf, 0], [0, 1]])

    def test_order_limit(self):
        with pytest.raises(ValidationError):
            eigenvalues(np.zeros((4097, 4097)))

    @settings(max_examples=20, deadline=None)
    @given(arrays(np.float64, (5, 5), elements=st.floats(-5, 5)))
    def test_conjugate_closure_trace_det(self, a):
        spec = eigenvalues(a)
        vals = spec.eigenvalues
        # conjugate closure
        assert_multiset_close(vals, np.conj(vals), tol=1e-8)
        # trace and determinant identities
        tr = complex(vals.sum())
        assert abs(tr - np.trace(a)) <= 1e-8 * (1 + abs(np.trace(a)))
        det = complex(np.prod(vals))
        target = np.linalg.det(a)
        assert abs(det - target) <= 1e-6 * max(abs(target), 1e-12) + 1e-9

    def test_eigenpair_residual_via_inverse_iteration(self, rng):
        # independent oracle: inverse iteration recovers an eigenvector for
        # each reported eigenvalue; residual must be small relative to ||A||
        for _ in range(5):
            n = int(rng.integers(4, 33))
            a = rng.standard_normal((n, n))
            norm = np.linalg.norm(a)
            for lam in eigenvalues(a).eigenvalues:
                shifted = a.astype(complex) - (lam + 1e-9) * np.eye(n)
                v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                for _ in range(3):
                    v = np.linalg.solve(shifted, v)
                    v = v / np.linalg.norm(v)
                assert np.linalg.norm(a @ v - lam * v) <= 1e-8 * norm


class TestBlockSpectralBounds:
    def test_bilinear_diag(self):
        g = build_game([2, 2], {(1, 2): np.diag([1.0, 2.0]),
                                (2, 1): -np.diag([1.0, 2.0])})
        bb = block_spectral_bounds(g)
        assert (bb.mu1, bb.L1, bb.mu2, bb.L2) == (0, 0, 0, 0)
        assert bb.mu12 == pytest.approx(1.0)
        assert bb.L12 == pytest.approx(2.0)

    def test_scalar_game(self):
        g = build_game([1, 1], {(1, 1): [[0.5]], (1, 2): [[-3.0]],
                                (2, 1): [[3.0]], (2, 2): [[2.0]]})
        bb = block_spectral_bounds(g)
        assert (bb.mu1, bb.L1) == (0.5, 0.5)
        assert (bb.mu2, bb.L2) == (2.0, 2.0)
        assert bb.mu12 == pytest.approx(3.0)
        assert bb.L12 == pytest.approx(3.0)

    def test_rectangular_uses_smaller_gram(self, rng):
        m = rng.standard_normal((2, 5))
        g = build_game([2, 5], {(1, 2): m, (2, 1): -m.T})
        bb = block_spectral_bounds(g)
        sv = np.linalg.svd(m, compute_uv=False)
        assert bb.L12 == pytest.approx(sv.max())
        assert bb.mu12 == pytest.approx(sv.min())

    def test_needs_two_players(self):
        with pytest.raises(UnsupportedArityError):
            block_spectral_bounds(build_game([2], {(1, 1): np.eye(2)}))

    def test_indefinite_diagonal_uses_moduli(self):
        g = build_game([2, 1], {(1, 1): np.diag([-3.0, 1.0]), (2, 2): [[1.0]],
                                (1, 2): [[1.0], [0.0]], (2, 1): [[-1.0, 0.0]]})
        bb = block_spectral_bounds(g)
        assert bb.mu1 == pytest.approx(1.0)
        assert bb.L1 == pytest.approx(3.0)


class TestKappaJacobian:
    def test_rotation(self):
        g = build_game([1, 1], {(1, 2): [[1]], (2, 1): [[-1]]})
        assert kappa_jacobian(g) == pytest.approx(1.0)

    def test_diagonal(self):
        g = build_game([2], {(1, 1): np.diag([1.0, 3.0])})
        assert kappa_jacobian(g) == pytest.approx(3.0)

    def test_tightness_instance(self):
        inst = pscli2_instance(4, 4, 2, 2, 0, 1)
        assert kappa_jacobian(inst.game) == pytest.approx(2.0, abs=1e-12)

    def test_scaling_invariance(self, rng):
        a = rng.standard_normal((4, 4)) + 3 * np.eye(4)
        for _ in range(10):
            c = float(rng.uniform(0.1, 10))
            g1 = build_game([4], {(1, 1): a})
            g2 = build_game([4], {(1, 1): c * a})
            assert kappa_jacobian(g2) == pytest.approx(kappa_jacobian(g1), rel=1e-10)

    def test_singular_spectrum(self):
        g = build_game([1, 1], {(1, 1): [[1.0]]})
        with pytest.raises(UndefinedKappaError):
            kappa_jacobian(g)


class TestKappaTable1:
    def test_exact_cell(self):
        value, case = kappa_table1(bounds(1, 1, 1, 1, 1, 2))
        assert case == "exact"
        assert value == pytest.approx(np.sqrt(5 / 2))

    def test_tightness_cell(self):
        value, case = kappa_table1(bounds(4, 2, 0, 4, 2, 1))
        assert case == "both-real"
        assert value == 1.5

    def test_perfectly_conditioned(self):
        value, case = kappa_table1(bounds(1, 1, 1, 1, 1, 1))
        assert case == "exact"
        assert value == pytest.approx(1.0)

    def test_degenerate(self):
        with pytest.raises(DegenerateBoundsError):
            kappa_table1(bounds(0, 0, 0, 1, 1, 1))

    @pytest.mark.parametrize("quadrant", ["exact", "mu-real", "L-real", "both-real"])
    def test_lower_bound_property(self, quadrant, rng):
        # randomized parameters per quadrant; table value never exceeds the
        # exact kappa of the assembled pattern (equality in the exact cell)
        for _ in range(20):
            bb = sample_quadrant(quadrant, rng)
            value, case = kappa_table1(bb)
            assert case == quadrant
            inst = pscli2_instance(bb.mu1, bb.L1, bb.mu2, bb.L2, bb.mu12, bb.L12)
            exact = kappa_jacobian(inst.game)
            if case == "exact":
                assert value == pytest.approx(exact, rel=1e-8)
            else:
                assert value <= exact + 1e-8


class TestDominoKappas:
    def test_basic_values(self):
        assert kappa_domino_basic(bounds(1, 1, 0, 1, 1, 2)) == pytest.approx(2.0)
        assert kappa_domino_basic(bounds(4, 1, 0, 4, 1, 2)) == pytest.approx(1.0)

    def test_basic_undefined(self):
        with pytest.raises(UndefinedKappaError):
            kappa_domino_basic(bounds(0, 1, 0, 0, 1, 2))

    def test_improved_values(self):
        assert kappa_domino_improved(bounds(2, 3, 1, 2, 3, 1)) == pytest.approx(1.0)
        assert kappa_domino_improved(bounds(1, 1, 0, 1, 1, 2)) == pytest.approx(np.sqrt(5))

    def test_improved_bilinear_limit(self):
        assert kappa_domino_improved(bounds(0, 0, 1, 0, 0, 2)) == pytest.approx(2.0)

    def test_improved_degenerate(self):
        with pytest.raises(DegenerateBoundsError):
            kappa_domino_improved(bounds(0, 0, 0, 1, 1, 2))

    def test_improved_reduces_to_basic(self, rng):
        for _ in range(10):
            mu1, mu2, L12 = rng.uniform(0.2, 4, 3)
            bb = bounds(mu1, mu2, 0, mu1, mu2, L12)
            kb = kappa_domino_basic(bb)
            ki = kappa_domino_improved(bb)
            assert ki == pytest.approx(np.sqrt(kb**2 + 1), rel=1e-12)


class TestToeplitzSymbolRange:
    def test_unit_coefficients(self):
        assert toeplitz_symbol_range(1, -1) == (0.0, 4.0)

    def test_improved_choice_recovers_bounds(self):
        mu12, L12 = 0.7, 2.5
        lo, hi = toeplitz_symbol_range((L12 + mu12) / 2, (mu12 - L12) / 2)
        assert lo == pytest.approx(mu12**2)
        assert hi == pytest.approx(L12**2)

    def test_diagonal_operator(self):
        assert toeplitz_symbol_range(1.5, 0) == (2.25, 2.25)

    @pytest.mark.parametrize("a0,a1", [(1.0, -1.0), (1.0, -0.4), (0.8, 0.5)])
    def test_truncation_convergence(self, a0, a1):
        # truncated Gram of the bidiagonal operator approaches the symbol
        # range at rate O(1/d^2)
        for d in (100, 200):
            m = np.zeros((d, d))
            np.fill_diagonal(m, a0)
            np.fill_diagonal(m[:, 1:], a1)
            eigs = scipy.linalg.eigvalsh(m @ m.T)
            lo, hi = toeplitz_symbol_range(a0, a1)
            assert hi - eigs.max() <= 4 * (np.pi / d) ** 2
            assert eigs.max() <= hi + 1e-12
            assert eigs.min() >= lo - 1e-12


class TestSpectralCase:
    def test_complex_pair(self):
        case = spectral_case(bounds(1, 2, 3, 1, 2, 3))
        assert case.delta_mu == pytest.approx(1 - 36)
        assert case.lambda_mu_plus == pytest.approx(1.5 + 1j * np.sqrt(8.75))
        assert case.lambda_mu_minus == pytest.approx(1.5 - 1j * np.sqrt(8.75))

    def test_decoupled(self):
        case = spectral_case(bounds(1, 3, 0, 1, 3, 0))
        assert case.lambda_mu_plus == pytest.approx(3.0)
        assert case.lambda_mu_minus == pytest.approx(1.0)

    def test_equal_mu_modulus(self, rng):
        for _ in range(10):
            mu = float(rng.uniform(0.1, 3))
            mu12 = float(rng.uniform(0.1, 3))
            case = spectral_case(bounds(mu, mu, mu12, mu, mu, mu12))
            assert case.lambda_mu_plus == pytest.approx(mu + 1j * mu12)
            expected = np.sqrt(mu * mu + mu12 * mu12)
            assert abs(case.lambda_mu_plus) == pytest.approx(expected, rel=1e-10)

    def test_modulus_identity_when_complex(self, rng):
        for _ in range(10):
            mu1, mu2 = rng.uniform(0.1, 2, 2)
            mu12 = abs(mu1 - mu2) / 2 + rng.uniform(0.05, 1)
            case = spectral_case(bounds(mu1, mu2, mu12, mu1, mu2, mu12))
            assert case.delta_mu < 0
            expected = np.sqrt(mu1 * mu2 + mu12**2)
            assert abs(case.lambda_mu_plus) == pytest.approx(expected, rel=1e-10)
