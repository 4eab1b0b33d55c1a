"""Rotation and rigid-transform algebra shared by every other module.

Conventions (used consistently across the package):

- Quaternions are Hamilton, stored as numpy arrays ``[x, y, z, w]``
  (vector part first, scalar last), matching the TUM trajectory
  serialization order ``qx qy qz qw``.
- ``quat_mul(a, b)`` is the Hamilton product a ⊗ b, so
  ``quat_to_rot(quat_mul(a, b)) == quat_to_rot(a) @ quat_to_rot(b)``.
- Orientation increments are applied on the left (world frame):
  ``retract(q, theta) = quat_exp(theta) ⊗ q``.  All state Jacobians in the
  estimator are taken with respect to this left increment unless a function
  docstring says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_QUAT_NORM_TOL = 1e-9


def quat_identity() -> np.ndarray:
    return np.array([0.0, 0.0, 0.0, 1.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(q)
    if n < 1e-12:
        raise ValueError("cannot normalize near-zero quaternion")
    return q / n


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a ⊗ b with [x, y, z, w] storage."""
    ax, ay, az, aw = a
    bx, by, bz, bw = b
    return np.array(
        [
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
            aw * bw - ax * bx - ay * by - az * bz,
        ]
    )


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([-q[0], -q[1], -q[2], q[3]])


def quat_exp(theta: np.ndarray) -> np.ndarray:
    """Axis-angle rotation vector to unit quaternion (full exponential map)."""
    theta = np.asarray(theta, dtype=float)
    angle = np.linalg.norm(theta)
    if angle < 1e-8:
        # Taylor of sin(a/2)/a keeps second-order accuracy near zero
        s = 0.5 - angle * angle / 48.0
        q = np.array([theta[0] * s, theta[1] * s, theta[2] * s, 1.0 - angle * angle / 8.0])
        return quat_normalize(q)
    half = 0.5 * angle
    s = np.sin(half) / angle
    return np.array([theta[0] * s, theta[1] * s, theta[2] * s, np.cos(half)])


def quat_log(q: np.ndarray) -> np.ndarray:
    """Rotation vector of q, shortest arc (angle in [0, pi])."""
    if q[3] < 0.0:
        q = -q
    vn = np.linalg.norm(q[:3])
    w = min(q[3], 1.0)
    if vn < 1e-10:
        # q ≈ identity: vector part is already half the rotation vector
        return 2.0 * q[:3]
    angle = 2.0 * np.arctan2(vn, w)
    return q[:3] * (angle / vn)


def quat_to_rot(q: np.ndarray) -> np.ndarray:
    x, y, z, w = q
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return np.array(
        [
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ]
    )


def rot_to_quat(R: np.ndarray) -> np.ndarray:
    """Rotation matrix to quaternion (Shepperd's branch selection)."""
    t = np.trace(R)
    if t > 0.0:
        s = np.sqrt(t + 1.0) * 2.0
        w = 0.25 * s
        x = (R[2, 1] - R[1, 2]) / s
        y = (R[0, 2] - R[2, 0]) / s
        z = (R[1, 0] - R[0, 1]) / s
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        w = (R[2, 1] - R[1, 2]) / s
        x = 0.25 * s
        y = (R[0, 1] + R[1, 0]) / s
        z = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] > R[2, 2]:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        w = (R[0, 2] - R[2, 0]) / s
        x = (R[0, 1] + R[1, 0]) / s
        y = 0.25 * s
        z = (R[1, 2] + R[2, 1]) / s
    else:
        s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        w = (R[1, 0] - R[0, 1]) / s
        x = (R[0, 2] + R[2, 0]) / s
        y = (R[1, 2] + R[2, 1]) / s
        z = 0.25 * s
    return quat_normalize(np.array([x, y, z, w]))


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    return quat_to_rot(q) @ v


def retract(q: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """World-frame (left) retraction: exp(theta) ⊗ q."""
    return quat_normalize(quat_mul(quat_exp(theta), q))


def local_coordinates(q_ref: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Inverse of retract: theta with q == retract(q_ref, theta)."""
    return quat_log(quat_mul(q, quat_conj(q_ref)))


def quat_slerp(q0: np.ndarray, q1: np.ndarray, s: float) -> np.ndarray:
    """Spherical interpolation along the shortest arc."""
    if np.dot(q0, q1) < 0.0:
        q1 = -q1
    rel = quat_mul(quat_conj(q0), q1)
    return quat_normalize(quat_mul(q0, quat_exp(s * quat_log(rel))))


def rotation_angle(q: np.ndarray) -> float:
    return float(np.linalg.norm(quat_log(q)))


def skew(v: np.ndarray) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def so3_right_jacobian(phi: np.ndarray) -> np.ndarray:
    """Jr with Exp(phi + Jr·d) ≈ Exp(phi) Exp(d) for small d."""
    angle = np.linalg.norm(phi)
    K = skew(phi)
    if angle < 1e-6:
        return np.eye(3) - 0.5 * K + K @ K / 6.0
    a2 = angle * angle
    return (
        np.eye(3)
        - (1.0 - np.cos(angle)) / a2 * K
        + (angle - np.sin(angle)) / (a2 * angle) * (K @ K)
    )


def so3_left_jacobian_inv(phi: np.ndarray) -> np.ndarray:
    """Jl⁻¹ with Log(Exp(d) Exp(phi)) ≈ phi + Jl⁻¹(phi)·d for small d."""
    angle = np.linalg.norm(phi)
    K = skew(phi)
    if angle < 1e-6:
        return np.eye(3) - 0.5 * K + K @ K / 12.0
    a2 = angle * angle
    cot_term = 1.0 / a2 - (1.0 + np.cos(angle)) / (2.0 * angle * np.sin(angle))
    return np.eye(3) - 0.5 * K + cot_term * (K @ K)


@dataclass
class Pose:
    """Rigid transform: x_out = R(q) @ x + t."""

    q: np.ndarray = field(default_factory=quat_identity)
    t: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.t = np.asarray(self.t, dtype=float)
        n = np.linalg.norm(self.q)
        if abs(n - 1.0) > _QUAT_NORM_TOL:
            if n < 1e-12:
                raise ValueError("pose quaternion has near-zero norm")
            self.q = self.q / n

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_rot(self.q)

    def compose(self, other: "Pose") -> "Pose":
        """self ∘ other: apply other first, then self."""
        return Pose(quat_mul(self.q, other.q), self.t + quat_rotate(self.q, other.t))

    def inverse(self) -> "Pose":
        qi = quat_conj(self.q)
        return Pose(qi, -quat_rotate(qi, self.t))

    def transform(self, points: np.ndarray) -> np.ndarray:
        """Apply to one (3,) point or an (N, 3) batch."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            return self.rotation @ pts + self.t
        return pts @ self.rotation.T + self.t

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.t
        return T

    @staticmethod
    def from_matrix(T: np.ndarray) -> "Pose":
        return Pose(rot_to_quat(np.asarray(T)[:3, :3]), np.asarray(T)[:3, 3].copy())

    def retract(self, delta: np.ndarray) -> "Pose":
        """6-dof update, layout (dp, dtheta), orientation on the left."""
        delta = np.asarray(delta, dtype=float)
        return Pose(retract(self.q, delta[3:6]), self.t + delta[0:3])

    def copy(self) -> "Pose":
        return Pose(self.q.copy(), self.t.copy())

    def __repr__(self):
        return f"Pose(q={np.array2string(self.q, precision=6)}, t={np.array2string(self.t, precision=6)})"


def compose(a: Pose, b: Pose) -> Pose:
    return a.compose(b)


def interpolate(p0: Pose, p1: Pose, s: float) -> Pose:
    """Blend two poses: translation linear, rotation slerp (shortest arc)."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"interpolation parameter must be in [0, 1], got {s}")
    return Pose(quat_slerp(p0.q, p1.q, s), (1.0 - s) * p0.t + s * p1.t)
