import numpy as np
import pytest

from stiefel_hermite import calculus, linalg, stiefel
from stiefel_hermite.errors import DomainError, PreconditionError, VelocityTransportError


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def fd_qr(t, t_dot, h=1e-6):
    plus = linalg.qr_econ(t + h * t_dot)
    minus = linalg.qr_econ(t - h * t_dot)
    return (plus.q - minus.q) / (2 * h), (plus.r_factor - minus.r_factor) / (2 * h)


class TestDiffQR:
    def test_zero_direction(self, rng):
        t = rng.standard_normal((10, 4))
        d = calculus.diff_qr(t, np.zeros_like(t), linalg.qr_econ(t))
        assert np.linalg.norm(d.q_dot) < 1e-14
        assert np.linalg.norm(d.r_dot) < 1e-14

    def test_pure_r_path(self, rng):
        # T(s) = Q0 (R0 + s Rdot0) with upper-triangular Rdot0: Q stays put
        q0 = linalg.qr_econ(rng.standard_normal((12, 4))).q
        r0 = np.triu(rng.standard_normal((4, 4))) + 4.0 * np.eye(4)
        rdot0 = np.triu(rng.standard_normal((4, 4)))
        t = q0 @ r0
        t_dot = q0 @ rdot0
        qr = linalg.qr_econ(t)
        d = calculus.diff_qr(t, t_dot, qr)
        fd_q, fd_r = fd_qr(t, t_dot)
        assert np.linalg.norm(d.q_dot) < 1e-10
        assert np.linalg.norm(d.q_dot - fd_q) < 1e-6
        assert np.linalg.norm(d.r_dot - fd_r) < 1e-6 * max(1.0, np.linalg.norm(fd_r))

    def test_matches_fd_oracle(self, rng):
        t = rng.standard_normal((30, 5))
        t_dot = rng.standard_normal((30, 5))
        qr = linalg.qr_econ(t)
        d = calculus.diff_qr(t, t_dot, qr)
        fd_q, fd_r = fd_qr(t, t_dot)
        assert np.linalg.norm(d.q_dot - fd_q) <= 1e-6 * np.linalg.norm(fd_q)
        assert np.linalg.norm(d.r_dot - fd_r) <= 1e-6 * np.linalg.norm(fd_r)

    def test_invariants(self, rng):
        t = rng.standard_normal((20, 6))
        t_dot = rng.standard_normal((20, 6))
        qr = linalg.qr_econ(t)
        d = calculus.diff_qr(t, t_dot, qr)
        rec = d.q_dot @ qr.r_factor + qr.q @ d.r_dot
        assert np.linalg.norm(rec - t_dot) <= 1e-10 * np.linalg.norm(t_dot)
        x = qr.q.T @ d.q_dot
        assert np.linalg.norm(x + x.T) < 1e-10

    def test_singular_r_rejected(self, rng):
        t = np.zeros((8, 3))
        t[:, 0] = 1.0
        qr = linalg.qr_econ(t)
        with pytest.raises(DomainError):
            calculus.diff_qr(t, rng.standard_normal((8, 3)), qr)


def fd_svd(y, y_dot, u_ref, v_cols, h=1e-6):
    """Central FD of the sign-normalized SVD path (first v_cols columns)."""
    def factors(mat):
        u, s, v = linalg.svd_full(mat)
        un, vn = calculus.svd_sign_normalize(u[:, :v_cols], v[:, :v_cols], u_ref[:, :v_cols])
        return un, s[:v_cols], vn

    up, sp, vp = factors(y + h * y_dot)
    um, sm, vm = factors(y - h * y_dot)
    return (up - um) / (2 * h), (sp - sm) / (2 * h), (vp - vm) / (2 * h)


class TestDiffSVD:
    def test_diagonal_case(self):
        y = np.zeros((5, 2))
        y[0, 0], y[1, 1] = 3.0, 1.0
        y_dot = np.zeros((5, 2))
        y_dot[0, 0], y_dot[1, 1] = 0.5, 0.2
        d = calculus.diff_svd(y, y_dot, linalg.svd_full(y))
        assert np.allclose(d.sigma_dot, [0.5, 0.2], atol=1e-14)
        assert np.linalg.norm(d.u_dot) < 1e-12
        assert np.linalg.norm(d.v_dot) < 1e-12

    def test_zero_direction(self, rng):
        y = rng.standard_normal((10, 4))
        d = calculus.diff_svd(y, np.zeros_like(y), linalg.svd_full(y))
        assert np.linalg.norm(d.u_dot) < 1e-13
        assert np.linalg.norm(d.v_dot) < 1e-13
        assert np.linalg.norm(d.sigma_dot) < 1e-13

    def test_matches_fd_oracle(self, rng):
        y = rng.standard_normal((12, 6))
        y_dot = rng.standard_normal((12, 6))
        u, s, v = linalg.svd_full(y)
        d = calculus.diff_svd(y, y_dot, (u, s, v))
        fd_u, fd_s, fd_v = fd_svd(y, y_dot, u, 6)
        assert np.linalg.norm(d.u_dot - fd_u) <= 1e-6 * np.linalg.norm(fd_u)
        assert np.linalg.norm(d.sigma_dot - fd_s) <= 1e-6 * np.linalg.norm(fd_s)
        assert np.linalg.norm(d.v_dot - fd_v) <= 1e-6 * np.linalg.norm(fd_v)

    def test_left_factor_derivative_is_tangent(self, rng):
        y = rng.standard_normal((15, 5))
        y_dot = rng.standard_normal((15, 5))
        u, s, v = linalg.svd_full(y)
        d = calculus.diff_svd(y, y_dot, (u, s, v))
        skew = u.T @ d.u_dot
        assert np.linalg.norm(skew + skew.T) < 1e-9

    def test_repeated_singular_values_rejected(self, rng):
        u = linalg.qr_econ(rng.standard_normal((8, 3))).q
        v = linalg.qr_econ(rng.standard_normal((3, 3))).q
        y = u @ np.diag([2.0, 1.0 + 1e-12, 1.0]) @ v.T
        with pytest.raises(DomainError):
            calculus.diff_svd(y, rng.standard_normal((8, 3)), linalg.svd_full(y))

    def test_zero_singular_value_rejected(self, rng):
        y = np.zeros((6, 2))
        y[0, 0] = 1.0
        with pytest.raises(DomainError):
            calculus.diff_svd(y, rng.standard_normal((6, 2)), linalg.svd_full(y))


class TestDiffSVDTruncated:
    def _rank_r_pair(self, rng, n, m, r):
        y1 = rng.uniform(0.0, 1.0, (n, r))
        z1 = rng.uniform(0.0, 1.0, (r, m))
        y2 = rng.uniform(0.0, 0.5, (n, r))
        z2 = rng.uniform(0.0, 0.5, (r, m))
        return y1 @ z1, y2 @ z1 + y1 @ z2

    def test_reconstruction_derivative(self, rng):
        w, w_dot = self._rank_r_pair(rng, 40, 15, 4)
        u, s, v = linalg.svd_full(w)
        d = calculus.diff_svd_truncated(w, w_dot, 4, (u, s, v))
        rec = (
            d.u_dot @ np.diag(s[:4]) @ v[:, :4].T
            + u[:, :4] @ np.diag(d.sigma_dot) @ v[:, :4].T
            + u[:, :4] @ np.diag(s[:4]) @ d.v_dot.T
        )
        assert np.linalg.norm(rec - w_dot) <= 1e-8 * np.linalg.norm(w_dot)

    def test_zero_direction(self, rng):
        w, _ = self._rank_r_pair(rng, 20, 10, 3)
        d = calculus.diff_svd_truncated(w, np.zeros_like(w), 3, linalg.svd_full(w))
        assert np.linalg.norm(d.u_dot) < 1e-12
        assert np.linalg.norm(d.v_dot) < 1e-12

    def test_full_rank_reduces_to_diff_svd(self, rng):
        y = rng.standard_normal((12, 5))
        y_dot = rng.standard_normal((12, 5))
        svd = linalg.svd_full(y)
        full = calculus.diff_svd(y, y_dot, svd)
        trunc = calculus.diff_svd_truncated(y, y_dot, 5, svd)
        assert np.array_equal(full.u_dot, trunc.u_dot)
        assert np.array_equal(full.sigma_dot, trunc.sigma_dot)
        assert np.array_equal(full.v_dot, trunc.v_dot)

    def test_matches_fd_oracle(self, rng):
        y1 = rng.uniform(0.0, 1.0, (30, 4))
        z1 = rng.uniform(0.0, 1.0, (4, 12))
        y2 = rng.uniform(0.0, 0.5, (30, 4))
        z2 = rng.uniform(0.0, 0.5, (4, 12))
        w = y1 @ z1
        w_dot = y2 @ z1 + y1 @ z2
        u, s, v = linalg.svd_full(w)
        d = calculus.diff_svd_truncated(w, w_dot, 4, (u, s, v))

        def factors(t):
            mat = (y1 + t * y2) @ (z1 + t * z2)
            uu, ss, vv = linalg.svd_full(mat)
            un, vn = calculus.svd_sign_normalize(uu[:, :4], vv[:, :4], u[:, :4])
            return un, ss[:4], vn

        h = 1e-6
        up, sp, vp = factors(h)
        um, sm, vm = factors(-h)
        assert np.linalg.norm(d.u_dot - (up - um) / (2 * h)) <= 1e-6 * np.linalg.norm(d.u_dot)
        assert np.linalg.norm(d.v_dot - (vp - vm) / (2 * h)) <= 1e-6 * np.linalg.norm(d.v_dot)
        assert np.linalg.norm(d.sigma_dot - (sp - sm) / (2 * h)) <= 1e-6 * np.linalg.norm(d.sigma_dot)


class TestSignNormalize:
    def test_identity(self, rng):
        u = linalg.qr_econ(rng.standard_normal((8, 3))).q
        v = linalg.qr_econ(rng.standard_normal((5, 3))).q
        un, vn = calculus.svd_sign_normalize(u, v, u)
        assert np.array_equal(un, u)
        assert np.array_equal(vn, v)

    def test_full_flip(self, rng):
        u = linalg.qr_econ(rng.standard_normal((8, 3))).q
        v = linalg.qr_econ(rng.standard_normal((5, 3))).q
        un, vn = calculus.svd_sign_normalize(-u, v, u)
        assert np.allclose(un, u)
        assert np.allclose(vn, -v)

    def test_all_sign_patterns(self, rng):
        u = linalg.qr_econ(rng.standard_normal((9, 3))).q
        v = linalg.qr_econ(rng.standard_normal((4, 3))).q
        for bits in range(8):
            signs = np.array([1.0 if bits & (1 << j) == 0 else -1.0 for j in range(3)])
            un, vn = calculus.svd_sign_normalize(u * signs, v * signs, u)
            assert np.allclose(un, u)
            assert np.allclose(vn, v)
            assert np.all(np.sum(un * u, axis=0) >= 0)

    def test_tie_rejected(self, rng):
        u = np.eye(4)[:, :2]
        u_t = np.eye(4)[:, 2:]  # orthogonal to u: diagonal entries exactly zero
        with pytest.raises(DomainError):
            calculus.svd_sign_normalize(u_t, u_t, u)


def expm_series(x, terms=60):
    out = np.eye(x.shape[0])
    term = np.eye(x.shape[0])
    for j in range(1, terms):
        term = term @ x / j
        out = out + term
    return out


class TestMathiasDexp:
    def test_zero_direction(self, rng):
        m = rng.standard_normal((6, 6))
        out = calculus.mathias_dexp(m, np.zeros_like(m))
        assert np.linalg.norm(out.dexp_block) < 1e-12
        assert np.linalg.norm(out.exp_m - linalg.expm(m)) < 1e-12

    def test_commuting_closed_form(self, rng):
        m = 0.6 * rng.standard_normal((5, 5))
        out = calculus.mathias_dexp(m, m)
        expected = expm_series(m) @ m
        assert np.linalg.norm(out.dexp_block - expected) < 1e-11

    def test_matches_fd_oracle_skew(self, rng):
        m = rng.standard_normal((8, 8))
        m = m - m.T
        m_dot = rng.standard_normal((8, 8))
        out = calculus.mathias_dexp(m, m_dot)
        h = 1e-5
        fd = (linalg.expm(m + h * m_dot) - linalg.expm(m - h * m_dot)) / (2 * h)
        assert np.linalg.norm(out.dexp_block - fd) <= 1e-7 * max(1.0, np.linalg.norm(fd))

    def test_linearity(self, rng):
        m = rng.standard_normal((6, 6))
        e1 = rng.standard_normal((6, 6))
        e2 = rng.standard_normal((6, 6))
        combo = calculus.mathias_dexp(m, 2.0 * e1 - 3.0 * e2).dexp_block
        parts = (
            2.0 * calculus.mathias_dexp(m, e1).dexp_block
            - 3.0 * calculus.mathias_dexp(m, e2).dexp_block
        )
        assert np.linalg.norm(combo - parts) <= 1e-12 * max(1.0, np.linalg.norm(parts))

    def test_block_structure(self, rng):
        m = rng.standard_normal((7, 7))
        m_dot = rng.standard_normal((7, 7))
        out = calculus.mathias_dexp(m, m_dot)
        assert np.linalg.norm(out.exp_m - out.exp_m_repeat) <= 1e-12 * np.linalg.norm(out.exp_m)


class TestDexpStiefel:
    def test_zero_base_velocity_is_identity(self, rng):
        u = stiefel.random_point(rng, 20, 4)
        v = stiefel.random_tangent(rng, u)
        zero = stiefel.TangentVector(u, np.zeros((20, 4)))
        assert np.array_equal(calculus.dexp_stiefel(zero, v), v.delta)

    def test_zero_direction(self, rng):
        u = stiefel.random_point(rng, 20, 4)
        xi = stiefel.random_tangent(rng, u)
        zero = stiefel.TangentVector(u, np.zeros((20, 4)))
        assert np.linalg.norm(calculus.dexp_stiefel(xi, zero)) < 1e-12

    def test_matches_fd_oracle(self, rng):
        u = stiefel.random_point(rng, 40, 4)
        xi = stiefel.random_tangent(rng, u, scale=0.8)
        v = stiefel.random_tangent(rng, u, scale=1.0)
        out = calculus.dexp_stiefel(xi, v)
        h = 1e-5
        fd = (stiefel.stiefel_exp(xi + h * v).u - stiefel.stiefel_exp(xi - h * v).u) / (2 * h)
        assert np.linalg.norm(out - fd) <= 1e-6 * np.linalg.norm(fd)

    def test_rank_deficient_rejected(self, rng):
        u = stiefel.random_point(rng, 15, 3)
        a = rng.standard_normal((3, 3))
        a = a - a.T
        vertical = stiefel.TangentVector(u, u.u @ a)  # zero normal component
        v = stiefel.random_tangent(rng, u)
        with pytest.raises(DomainError):
            calculus.dexp_stiefel(vertical, v)


class TestTransport:
    def test_same_point_recovers_velocity(self, rng):
        p = stiefel.random_point(rng, 20, 4)
        v = stiefel.random_tangent(rng, p, scale=0.9)
        out = calculus.transport_velocity(p, p, v, h=1e-4)
        assert np.linalg.norm(out.delta - v.delta) <= 1e-7

    def test_output_is_tangent_at_target(self, rng):
        p = stiefel.random_point(rng, 25, 4)
        q = stiefel.stiefel_exp(stiefel.random_tangent(rng, p, 0.5))
        v = stiefel.random_tangent(rng, p)
        out = calculus.transport_velocity(q, p, v)
        ud = q.u.T @ out.delta
        assert np.linalg.norm(ud + ud.T) < 1e-10
        assert np.array_equal(out.base.u, q.u)

    def test_curve_variants_agree(self, rng):
        p = stiefel.random_point(rng, 30, 4)
        q = stiefel.stiefel_exp(stiefel.random_tangent(rng, p, 0.4))
        v = stiefel.random_tangent(rng, p)
        h = 1e-4
        results = {
            c: calculus.transport_velocity(q, p, v, h=h, curve=c)
            for c in calculus.TRANSPORT_CURVES
        }
        base = results["geodesic"].delta
        for name in ("cayley", "polar_retraction", "qr_retraction"):
            assert np.linalg.norm(results[name].delta - base) < 100 * h**2

    def test_failure_names_side(self, rng):
        # target so far away the +h log cannot converge
        rng2 = np.random.default_rng(101)
        p = stiefel.random_point(rng2, 8, 6)
        q = stiefel.random_point(rng2, 8, 6)
        v = stiefel.random_tangent(rng2, p)
        with pytest.raises(VelocityTransportError) as info:
            calculus.transport_velocity(q, p, v, h=1e-4)
        assert info.value.side in ("+h", "-h")

    def test_bad_h_rejected(self, rng):
        p = stiefel.random_point(rng, 10, 2)
        v = stiefel.random_tangent(rng, p)
        with pytest.raises(PreconditionError):
            calculus.transport_velocity(p, p, v, h=0.0)

    def test_unknown_curve_rejected(self, rng):
        p = stiefel.random_point(rng, 10, 2)
        v = stiefel.random_tangent(rng, p)
        with pytest.raises(PreconditionError):
            calculus.transport_velocity(p, p, v, curve="parallel")


@pytest.fixture(scope="module")
def instance():
    rng = np.random.default_rng(3)
    p = stiefel.random_point(rng, 200, 6)
    q = stiefel.stiefel_exp(stiefel.random_tangent(rng, p, 0.8))
    v = stiefel.random_tangent(rng, p, 1.0)
    return q, p, v


class TestValidateTransport:
    def test_coarse_step(self, instance):
        q, p, v = instance
        err = calculus.validate_transport(q, p, v, h=1e-2)
        assert 1e-9 < err < 1e-5  # second-order error at coarse step

    def test_tuned_step(self, instance):
        q, p, v = instance
        assert calculus.validate_transport(q, p, v, h=1e-4) <= 1e-8

    def test_roundoff_regime(self, instance):
        q, p, v = instance
        fine = calculus.validate_transport(q, p, v, h=1e-7)
        tuned = calculus.validate_transport(q, p, v, h=1e-4)
        assert fine > tuned  # roundoff dominates below the sweet spot

    def test_v_shape(self, instance):
        q, p, v = instance
        errs = [
            calculus.validate_transport(q, p, v, h=h)
            for h in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7)
        ]
        best = int(np.argmin(errs))
        assert 0 < best < len(errs) - 1
