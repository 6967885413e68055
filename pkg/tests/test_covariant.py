"""Distance function, gradient, minimizer, theta, closed form."""

import mpmath as mp
import pytest

from cluster_reduce import (
    DegeneratePositionError,
    HermitianForm,
    NotPositiveDefiniteError,
    PointCluster,
    ProjectivePoint,
    StabilityError,
    act,
    classify,
    conjugate,
    eval_D,
    grad_D,
    minimize,
    normalize_cluster,
    simplex_covariant,
    theta,
)

from conftest import (
    matrices_close_mod_scaling,
    random_cluster,
    random_pd_hermitian,
    random_real_cluster,
    random_sl,
    random_trace_free_hermitian,
)
from oracles import fd_directional_derivative, fd_second_difference, transported_curve


def cluster_of(*coords):
    return PointCluster(tuple(ProjectivePoint(c) for c in coords))


def standard_simplex(n):
    pts = [tuple(1 if i == j else 0 for j in range(n + 1)) for i in range(n + 1)]
    pts.append(tuple(1 for _ in range(n + 1)))
    return cluster_of(*pts)


def q0_matrix(n):
    return mp.matrix([[(n + 2 if i == j else 0) - 1 for j in range(n + 1)] for i in range(n + 1)])


class TestEvalD:
    def test_single_point_identity(self):
        zc = normalize_cluster(cluster_of((1, 0, 0)))
        assert abs(eval_D(zc, HermitianForm.from_matrix(mp.eye(3)))) < mp.mpf("1e-60")

    def test_scaling_law(self, rnd):
        Z = random_cluster(rnd, 2, 4)
        zc = normalize_cluster(Z)
        Q = HermitianForm.from_matrix(random_pd_hermitian(rnd, 3))
        base = eval_D(zc, Q)
        scaled = eval_D(zc.scale_point(0, 2), Q)
        assert abs(scaled - base - mp.log(4)) < mp.mpf("1e-50")

    def test_invariant_under_q_scaling(self, rnd):
        Z = random_cluster(rnd, 2, 5)
        zc = normalize_cluster(Z)
        M = random_pd_hermitian(rnd, 3)
        a = eval_D(zc, HermitianForm.from_matrix(M))
        b = eval_D(zc, HermitianForm.from_matrix(M * mp.mpf(7)))
        assert abs(a - b) < mp.mpf("1e-55")

    def test_standard_four_point_value(self):
        zc = normalize_cluster(standard_simplex(2))
        Q = HermitianForm.from_matrix(q0_matrix(2))
        expected = mp.log(27) - mp.mpf(4) / 3 * mp.log(16)
        assert abs(eval_D(zc, Q) - expected) < mp.mpf("1e-55")

    def test_not_positive_definite_rejected(self):
        zc = normalize_cluster(cluster_of((1, 0), (0, 1)))
        with pytest.raises(NotPositiveDefiniteError):
            eval_D(zc, HermitianForm(((1, 0), (0, -1))))

    def test_conjugation_invariance(self, rnd):
        Z = random_cluster(rnd, 2, 4)
        zc = normalize_cluster(Z)
        M = random_pd_hermitian(rnd, 3)
        Mc = mp.matrix(3, 3)
        for i in range(3):
            for j in range(3):
                Mc[i, j] = mp.conj(M[i, j])
        a = eval_D(zc, HermitianForm.from_matrix(M))
        b = eval_D(zc.conjugate(), HermitianForm.from_matrix(Mc))
        assert abs(a - b) < mp.mpf("1e-55")

    def test_change_of_variables_invariance(self, rnd):
        # D(Z.gamma, Q.gamma) = D(Z, Q) with Q.gamma = conj(gamma)^T Q gamma
        # and the point action P -> P gamma^(-T)
        Z = random_cluster(rnd, 2, 4)
        zc = normalize_cluster(Z)
        Q = random_pd_hermitian(rnd, 3)
        g = random_sl(rnd, 3)
        Qg = g.transpose_conj() * Q * g
        Qg = (Qg + Qg.transpose_conj()) / 2
        ginv_t = (g**-1).transpose()
        moved = [tuple(sum(row[a] * ginv_t[a, j] for a in range(3)) for j in range(3))
                 for row in zc.reps]
        from cluster_reduce import ScaledCluster

        a = eval_D(ScaledCluster(tuple(moved)), HermitianForm.from_matrix(Qg))
        b = eval_D(zc, HermitianForm.from_matrix(Q))
        assert abs(a - b) < mp.mpf("1e-45")


class TestGradD:
    def test_zero_at_symmetric_configuration(self):
        Z = standard_simplex(2)
        Q = HermitianForm.from_matrix(q0_matrix(2)).normalized()
        G = grad_D(normalize_cluster(Z), Q)
        assert G.norm() < mp.mpf("1e-55")

    def test_single_point_formula(self):
        n = 3
        Z = cluster_of((1, 0, 0, 0))
        G = grad_D(normalize_cluster(Z), HermitianForm.from_matrix(mp.eye(4)))
        M = G.mat()
        for i in range(4):
            for j in range(4):
                expected = (1 if i == j == 0 else 0) - (mp.mpf(1) / 4 if i == j else 0)
                assert abs(M[i, j] - expected) < mp.mpf("1e-60")

    def test_matches_finite_differences(self, rnd):
        zc = normalize_cluster(random_cluster(rnd, 2, 5))
        Q = random_pd_hermitian(rnd, 3)
        G = grad_D(zc, HermitianForm.from_matrix(Q)).mat()
        eps = mp.mpf("1e-20")
        for _ in range(20):
            B = random_trace_free_hermitian(rnd, 3)
            fd = fd_directional_derivative(
                lambda M: eval_D(zc, HermitianForm.from_matrix(M)), Q, B, eps
            )
            pairing = mp.re(mp.fsum(
                G[i, j] * B[j, i] for i in range(3) for j in range(3)
            ))
            assert abs(fd - pairing) < mp.mpf("1e-6") * max(1, abs(pairing))

    def test_trace_free_hermitian_output(self, rnd):
        zc = normalize_cluster(random_cluster(rnd, 2, 4))
        G = grad_D(zc, HermitianForm.from_matrix(random_pd_hermitian(rnd, 3)))
        G.check()


class TestMinimize:
    def test_standard_simplex_covariant(self):
        for n in (1, 2, 3):
            res = minimize(standard_simplex(n))
            expected = q0_matrix(n)
            assert matrices_close_mod_scaling(res.z.mat(), expected, mp.mpf("1e-10"))

    def test_requires_stability(self):
        Z = cluster_of((1, 0), (1, 0), (0, 1))  # double point of a cubic cluster
        with pytest.raises(StabilityError):
            minimize(Z)

    def test_unique_minimizer_many_starts(self, rnd):
        Z = random_cluster(rnd, 2, 4)
        assert classify(Z).is_stable
        base = minimize(Z).z.mat()
        for _ in range(10):
            init = random_pd_hermitian(rnd, 3)
            res = minimize(Z, initial=HermitianForm.from_matrix(init))
            assert matrices_close_mod_scaling(res.z.mat(), base, mp.mpf("1e-6"))

    def test_theta_consistency(self, rnd):
        Z = random_cluster(rnd, 1, 4)
        res = minimize(Z)
        value = eval_D(normalize_cluster(Z), res.z)
        assert abs(mp.log(res.theta) - value) < mp.mpf("1e-20")

    def test_equivariance(self, rnd):
        Z = random_cluster(rnd, 2, 4)
        g = random_sl(rnd, 3)
        ginv_t = (g**-1).transpose()
        # acting on rows by g^(-T) moves the covariant by conj(g)^T z g
        moved = minimize(act(Z, ginv_t)).z.mat()
        zg = g.transpose_conj() * minimize(Z).z.mat() * g
        assert matrices_close_mod_scaling(moved, zg, mp.mpf("1e-6"))

    def test_real_cluster_real_covariant(self, rnd):
        Z = random_real_cluster(rnd, 2, 4)
        if not classify(Z).is_stable:
            pytest.skip("random draw unstable")
        res = minimize(Z)
        imag = max(abs(mp.im(v)) for row in res.z.matrix for v in row)
        assert imag < mp.mpf("1e-8")

    def test_pencil_base_points_match_published_covariant(self):
        # the four base points of the reference pencil: the descent from the
        # identity must cross 13 orders of magnitude of eigenvalue spread
        from cluster_reduce import curve_intersection

        from conftest import PENCIL_COVARIANT, PENCIL_Q1, PENCIL_Q2

        Q1p = -21 * PENCIL_Q1 + 8 * PENCIL_Q2
        Q2p = -8 * PENCIL_Q1 + 3 * PENCIL_Q2
        Z = curve_intersection(Q1p, Q2p).cluster()
        res = minimize(Z)
        assert matrices_close_mod_scaling(
            res.z.mat(), mp.matrix(PENCIL_COVARIANT), mp.mpf("1e-3")
        )


class TestTheta:
    def test_standard_four_point_value(self):
        zc = normalize_cluster(standard_simplex(2))
        res = theta(zc)
        expected = mp.mpf(27) / mp.mpf(2) ** (mp.mpf(16) / 3)
        assert res.attained
        assert abs(res.value - expected) < mp.mpf("1e-10")

    def test_scaling_law(self, rnd):
        Z = random_cluster(rnd, 2, 4)
        zc = normalize_cluster(Z)
        lam = mp.mpc(mp.mpf("1.5"), mp.mpf("-0.7"))
        a = theta(zc).value
        b = theta(zc.scale_point(1, lam)).value
        assert abs(b - abs(lam) ** 2 * a) < mp.mpf("1e-8") * abs(a)

    def test_unstable_returns_zero_with_witness(self):
        # 5 of 6 points on a line in P^2
        Z = cluster_of(
            (1, 0, 0), (0, 1, 0), (1, 1, 0), (1, 2, 0), (1, 3, 0), (0, 0, 1)
        )
        res = theta(normalize_cluster(Z))
        assert res.value == 0
        assert not res.attained
        assert res.witness is not None
        # D diverges along the witness family
        zc = normalize_cluster(Z)
        values = [eval_D(zc, res.witness.form_at(mp.e ** k)) for k in (1, 5, 20)]
        assert values[2] < values[1] < values[0]

    def test_semistable_not_attained_flag(self):
        Z = cluster_of((1, 0), (1, 0), (0, 1), (1, 1))
        res = theta(normalize_cluster(Z))
        assert not res.attained
        assert res.value > 0
        # for this configuration the infimum is exp(-log 2)
        assert abs(res.value - mp.mpf("0.5")) < mp.mpf("1e-10")

    def test_witness_evaluators_agree_at_moderate_lambda(self):
        Z = cluster_of(
            (1, 0, 0), (0, 1, 0), (1, 1, 0), (1, 2, 0), (1, 3, 0), (0, 0, 1)
        )
        zc = normalize_cluster(Z)
        res = theta(zc)
        for t in (0, 1, 3):
            lam = mp.e ** mp.mpf(t)
            direct = res.witness.distance_at(zc, lam)
            dense = eval_D(zc, res.witness.form_at(lam))
            assert abs(direct - dense) < mp.mpf("1e-25")


class TestSimplexCovariant:
    def test_standard_points(self):
        for n in (1, 2, 3):
            z = simplex_covariant(standard_simplex(n))
            assert matrices_close_mod_scaling(z.mat(), q0_matrix(n), mp.mpf("1e-25"))

    def test_degenerate_position_rejected(self):
        Z = cluster_of((1, 0, 0), (0, 1, 0), (1, 1, 0), (1, 1, 1))
        with pytest.raises(DegeneratePositionError):
            simplex_covariant(Z)

    def test_wrong_count_rejected(self):
        Z = cluster_of((1, 0), (0, 1))
        with pytest.raises(Exception):
            simplex_covariant(Z)

    def test_agrees_with_minimizer(self, rnd):
        for n in (1, 2):
            Z = random_cluster(rnd, n, n + 2)
            closed = simplex_covariant(Z)
            descended = minimize(Z)
            assert matrices_close_mod_scaling(
                closed.mat(), descended.z.mat(), mp.mpf("1e-9")
            )

    def test_equivariance_via_closed_form(self, rnd):
        Z = random_cluster(rnd, 2, 4)
        g = random_sl(rnd, 3)
        ginv_t = (g**-1).transpose()
        moved = simplex_covariant(act(Z, ginv_t)).mat()
        zg = g.transpose_conj() * simplex_covariant(Z).mat() * g
        assert matrices_close_mod_scaling(moved, zg, mp.mpf("1e-20"))


class TestConvexity:
    def test_second_difference_nonnegative(self, rnd):
        zc = normalize_cluster(random_cluster(rnd, 2, 5))
        Q = random_pd_hermitian(rnd, 3)
        eps = mp.mpf("1e-12")
        for _ in range(5):
            B = random_trace_free_hermitian(rnd, 3)
            second = fd_second_difference(
                lambda M: eval_D(zc, HermitianForm.from_matrix(M)), Q, B, eps
            )
            assert second > -mp.mpf("1e-8")

    def test_split_cluster_degenerate_direction(self):
        # split cluster: second derivative vanishes along the splitting
        zc = normalize_cluster(cluster_of((1, 0), (0, 1)))
        Q = mp.eye(2)
        B = mp.matrix([[1, 0], [0, -1]])
        second = fd_second_difference(
            lambda M: eval_D(zc, HermitianForm.from_matrix(M)), Q, B, mp.mpf("1e-12")
        )
        assert abs(second) < mp.mpf("1e-8")
