import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lio.geometry import (
    Pose,
    compose,
    interpolate,
    local_coordinates,
    quat_conj,
    quat_exp,
    quat_identity,
    quat_log,
    quat_mul,
    quat_to_rot,
    retract,
    rot_to_quat,
    rotation_angle,
    so3_left_jacobian_inv,
    so3_right_jacobian,
)


def random_quat(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def random_pose(rng, scale=1.0):
    return Pose(random_quat(rng), rng.normal(size=3) * scale)


def angle_between(qa, qb):
    return rotation_angle(quat_mul(qa, quat_conj(qb)))


class TestQuaternion:
    def test_identity_norm(self):
        assert abs(np.linalg.norm(quat_identity()) - 1.0) < 1e-12

    def test_mul_matches_matrix_product(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            a, b = random_quat(rng), random_quat(rng)
            Rq = quat_to_rot(quat_mul(a, b))
            Rm = quat_to_rot(a) @ quat_to_rot(b)
            assert np.max(np.abs(Rq - Rm)) < 1e-9

    def test_matrix_round_trip_1e4(self):
        rng = np.random.default_rng(1)
        worst = 0.0
        for _ in range(10_000):
            q = random_quat(rng)
            q2 = rot_to_quat(quat_to_rot(q))
            worst = max(worst, angle_between(q, q2))
        assert worst < 1e-9

    def test_exp_log_round_trip(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            theta = rng.normal(size=3)
            theta *= rng.uniform(0, np.pi * 0.99) / np.linalg.norm(theta)
            assert np.max(np.abs(quat_log(quat_exp(theta)) - theta)) < 1e-9

    def test_exp_small_angle(self):
        theta = np.array([1e-10, -2e-10, 5e-11])
        q = quat_exp(theta)
        assert np.max(np.abs(quat_log(q) - theta)) < 1e-15


class TestRetract:
    def test_yaw_quarter_turn(self):
        q = retract(quat_identity(), np.array([0.0, 0.0, np.pi / 2]))
        expected = np.array([0.0, 0.0, np.sin(np.pi / 4), np.cos(np.pi / 4)])
        assert np.max(np.abs(q - expected)) < 1e-12

    def test_zero_increment(self):
        rng = np.random.default_rng(3)
        q = random_quat(rng)
        assert np.max(np.abs(retract(q, np.zeros(3)) - q)) < 1e-12

    def test_round_trip_recovers_theta(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            q = random_quat(rng)
            theta = rng.normal(size=3)
            theta *= rng.uniform(0, np.pi / 2 * 0.99) / np.linalg.norm(theta)
            back = local_coordinates(q, retract(q, theta))
            assert np.max(np.abs(back - theta)) < 1e-10

    def test_first_order_angle_change(self):
        rng = np.random.default_rng(5)
        q = random_quat(rng)
        theta = np.array([3e-9, -4e-9, 1e-9])
        moved = retract(q, theta)
        assert abs(angle_between(moved, q) - np.linalg.norm(theta)) < 1e-12

    def test_second_order_composition_bound(self):
        # regression bound measured empirically: worst C over 2000 draws ~0.25
        rng = np.random.default_rng(6)
        worst = 0.0
        for _ in range(2000):
            q = random_quat(rng)
            t1, t2 = rng.normal(size=3), rng.normal(size=3)
            t1 *= rng.uniform(0, 0.05) / np.linalg.norm(t1)
            t2 *= rng.uniform(0, 0.05) / np.linalg.norm(t2)
            one_shot = retract(q, t1 + t2)
            two_step = retract(retract(q, t1), t2)
            err = angle_between(one_shot, two_step)
            denom = (np.linalg.norm(t1) + np.linalg.norm(t2)) ** 2
            if denom > 0:
                worst = max(worst, err / denom)
        assert worst < 0.5


class TestPose:
    def test_compose_identity(self):
        rng = np.random.default_rng(7)
        p = random_pose(rng)
        out = compose(Pose.identity(), p)
        assert np.max(np.abs(out.t - p.t)) < 1e-12
        assert angle_between(out.q, p.q) < 1e-12

    def test_compose_inverse_is_identity(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            p = random_pose(rng, scale=5.0)
            e = compose(p, p.inverse())
            assert rotation_angle(e.q) < 1e-9
            assert np.linalg.norm(e.t) < 1e-9

    def test_compose_matches_homogeneous_matrices(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            a, b = random_pose(rng, 3.0), random_pose(rng, 3.0)
            Tq = compose(a, b).matrix()
            Tm = a.matrix() @ b.matrix()
            assert np.max(np.abs(Tq - Tm)) < 1e-9

    def test_transform_applies_after(self):
        rng = np.random.default_rng(10)
        a, b = random_pose(rng), random_pose(rng)
        x = rng.normal(size=3)
        assert np.max(np.abs(compose(a, b).transform(x) - a.transform(b.transform(x)))) < 1e-9

    def test_batch_transform(self):
        rng = np.random.default_rng(11)
        p = random_pose(rng)
        pts = rng.normal(size=(17, 3))
        batch = p.transform(pts)
        for i in range(17):
            assert np.max(np.abs(batch[i] - p.transform(pts[i]))) < 1e-12


class TestInterpolate:
    def test_same_pose_any_s(self):
        rng = np.random.default_rng(12)
        p = random_pose(rng)
        for s in (0.0, 0.3, 1.0):
            out = interpolate(p, p, s)
            assert angle_between(out.q, p.q) < 1e-12
            assert np.max(np.abs(out.t - p.t)) < 1e-12

    def test_endpoints(self):
        rng = np.random.default_rng(13)
        a, b = random_pose(rng), random_pose(rng)
        assert angle_between(interpolate(a, b, 0.0).q, a.q) < 1e-12
        assert angle_between(interpolate(a, b, 1.0).q, b.q) < 1e-12

    def test_angle_fraction(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            a, b = random_pose(rng), random_pose(rng)
            total = angle_between(b.q, a.q)
            if total > np.pi * 0.95:
                continue
            s = rng.uniform(0, 1)
            partial = angle_between(interpolate(a, b, s).q, a.q)
            assert abs(partial - s * total) < 1e-9

    def test_out_of_range_raises(self):
        p = Pose.identity()
        with pytest.raises(ValueError):
            interpolate(p, p, -0.01)
        with pytest.raises(ValueError):
            interpolate(p, p, 1.01)

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_rotation_angle(self, s1, s2, seed):
        rng = np.random.default_rng(seed)
        a, b = random_pose(rng), random_pose(rng)
        if angle_between(b.q, a.q) > np.pi * 0.95:
            return
        lo, hi = min(s1, s2), max(s1, s2)
        ang_lo = angle_between(interpolate(a, b, lo).q, a.q)
        ang_hi = angle_between(interpolate(a, b, hi).q, a.q)
        assert ang_lo <= ang_hi + 1e-9


class TestSo3Jacobians:
    def test_right_jacobian_definition(self):
        rng = np.random.default_rng(15)
        for _ in range(50):
            phi = rng.normal(size=3)
            d = rng.normal(size=3) * 1e-6
            lhs = quat_exp(phi + so3_right_jacobian(phi) @ d)
            rhs = quat_mul(quat_exp(phi), quat_exp(d))
            assert angle_between(lhs, rhs) < 1e-10

    def test_left_jacobian_inv_definition(self):
        rng = np.random.default_rng(16)
        for _ in range(50):
            phi = rng.normal(size=3)
            if np.linalg.norm(phi) > np.pi * 0.9:
                continue
            d = rng.normal(size=3) * 1e-6
            lhs = quat_log(quat_mul(quat_exp(d), quat_exp(phi)))
            rhs = phi + so3_left_jacobian_inv(phi) @ d
            assert np.max(np.abs(lhs - rhs)) < 1e-10
