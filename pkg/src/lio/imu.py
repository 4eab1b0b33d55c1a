"""IMU state propagation, pre-integrated motion factors, and the IMU residual.

Integration uses the midpoint rule over each inter-sample interval: a stream
of n samples produces n-1 steps, each driven by the average of the two
bounding samples.  ``propagate`` and ``preintegrate`` share the scheme, so
propagating a state equals applying the pre-integrated deltas to it up to
float roundoff.

Pre-integrated deltas are gravity-free and expressed in the frame of the
first sample's body pose:

    q_j = q_i ⊗ dq
    v_j = v_i + g·dt + R_i @ dv
    p_j = p_i + v_i·dt + 0.5·g·dt² + R_i @ dp

The 15x15 covariance is ordered (dp, dv, dtheta, dba, dbg), with dtheta a
right (body-frame) increment on dq.  Noise densities are continuous-time;
each step injects variance sigma²·dt.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    quat_conj,
    quat_exp,
    quat_identity,
    quat_log,
    quat_mul,
    quat_normalize,
    quat_to_rot,
    skew,
    so3_left_jacobian_inv,
    so3_right_jacobian,
)


@dataclass
class ImuSample:
    """One accelerometer/gyro reading: specific force (m/s²), rate (rad/s)."""

    t: float
    accel: np.ndarray
    gyro: np.ndarray

    def __post_init__(self):
        self.accel = np.asarray(self.accel, dtype=float)
        self.gyro = np.asarray(self.gyro, dtype=float)


@dataclass
class ImuState:
    """Position, velocity, orientation and biases of the body frame."""

    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: np.ndarray = field(default_factory=quat_identity)
    ba: np.ndarray = field(default_factory=lambda: np.zeros(3))
    bg: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.q = quat_normalize(np.asarray(self.q, dtype=float))
        self.ba = np.asarray(self.ba, dtype=float)
        self.bg = np.asarray(self.bg, dtype=float)

    def copy(self) -> "ImuState":
        return ImuState(self.p.copy(), self.v.copy(), self.q.copy(), self.ba.copy(), self.bg.copy())

    def retract(self, delta: np.ndarray) -> "ImuState":
        """15-dof update, layout (dp, dv, dtheta, dba, dbg), left increment on q."""
        delta = np.asarray(delta, dtype=float)
        return ImuState(
            self.p + delta[0:3],
            self.v + delta[3:6],
            quat_normalize(quat_mul(quat_exp(delta[6:9]), self.q)),
            self.ba + delta[9:12],
            self.bg + delta[12:15],
        )


@dataclass
class ImuNoiseModel:
    """Continuous-time noise densities and the world gravity vector.

    sigma_a, sigma_g: white-noise densities (m/s²/√Hz, rad/s/√Hz).
    sigma_ba, sigma_bg: bias random-walk densities (m/s²·√Hz, rad/s·√Hz).
    """

    sigma_a: float = 8.0e-4
    sigma_g: float = 1.75e-4
    sigma_ba: float = 2.0e-4
    sigma_bg: float = 2.0e-5
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))

    def __post_init__(self):
        self.gravity = np.asarray(self.gravity, dtype=float)
        for name in ("sigma_a", "sigma_g", "sigma_ba", "sigma_bg"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        g = np.linalg.norm(self.gravity)
        if not 9.0 <= g <= 10.5:
            raise ValueError(f"gravity magnitude {g:.3f} outside [9.0, 10.5]")


@dataclass
class PreintegratedImu:
    """Gravity-free relative motion between two body timestamps.

    j_p_ba .. j_q_bg are the Jacobians of (dp, dv, dq) with respect to the
    bias linearization points ba_lin, bg_lin.
    """

    dp: np.ndarray
    dv: np.ndarray
    dq: np.ndarray
    dt: float
    cov: np.ndarray
    j_p_ba: np.ndarray
    j_p_bg: np.ndarray
    j_v_ba: np.ndarray
    j_v_bg: np.ndarray
    j_q_bg: np.ndarray
    ba_lin: np.ndarray
    bg_lin: np.ndarray


def _check_stream(samples) -> None:
    if len(samples) == 0:
        raise ValueError("IMU sample stream is empty")
    times = np.array([s.t for s in samples])
    if len(times) > 1 and np.any(np.diff(times) <= 0.0):
        raise ValueError("IMU timestamps must be strictly increasing")


def propagate(x_i: ImuState, samples, noise: ImuNoiseModel) -> ImuState:
    """Integrate the state forward across the stream (biases held constant)."""
    _check_stream(samples)
    g = noise.gravity
    p, v, q = x_i.p.copy(), x_i.v.copy(), x_i.q.copy()
    for k in range(len(samples) - 1):
        s0, s1 = samples[k], samples[k + 1]
        dt = s1.t - s0.t
        w_mid = 0.5 * (s0.gyro + s1.gyro) - x_i.bg
        R0 = quat_to_rot(q)
        q = quat_normalize(quat_mul(q, quat_exp(w_mid * dt)))
        R1 = quat_to_rot(q)
        a_w = 0.5 * (R0 @ (s0.accel - x_i.ba) + R1 @ (s1.accel - x_i.ba)) + g
        p = p + v * dt + 0.5 * a_w * dt * dt
        v = v + a_w * dt
    return ImuState(p, v, q, x_i.ba.copy(), x_i.bg.copy())


def preintegrate(samples, ba: np.ndarray, bg: np.ndarray, noise: ImuNoiseModel) -> PreintegratedImu:
    """Accumulate gravity-free deltas, covariance, and bias Jacobians."""
    _check_stream(samples)
    ba = np.asarray(ba, dtype=float)
    bg = np.asarray(bg, dtype=float)

    dp = np.zeros(3)
    dv = np.zeros(3)
    dq = quat_identity()
    cov = np.zeros((15, 15))
    # d(dp,dv,dtheta)/d(ba,bg), accumulated with the same step transition
    j_bias = np.zeros((9, 6))
    t_total = 0.0

    eye3 = np.eye(3)
    sig = np.array([noise.sigma_a, noise.sigma_g, noise.sigma_ba, noise.sigma_bg]) ** 2

    for k in range(len(samples) - 1):
        s0, s1 = samples[k], samples[k + 1]
        dt = s1.t - s0.t
        a0 = s0.accel - ba
        a1 = s1.accel - ba
        w_mid = 0.5 * (s0.gyro + s1.gyro) - bg

        R0 = quat_to_rot(dq)
        dq_step = quat_exp(w_mid * dt)
        dq_new = quat_normalize(quat_mul(dq, dq_step))
        R1 = quat_to_rot(dq_new)

        a_mid = 0.5 * (R0 @ a0 + R1 @ a1)
        dp_new = dp + dv * dt + 0.5 * a_mid * dt * dt
        dv_new = dv + a_mid * dt

        # error-state transition, order (dp, dv, dtheta, dba, dbg)
        A0 = R0 @ skew(a0)
        A1 = R1 @ skew(a1)
        W = skew(w_mid)
        f_vth = -0.5 * dt * (A0 + A1 @ (eye3 - W * dt))
        f_vba = -0.5 * dt * (R0 + R1)
        f_vbg = 0.5 * dt * dt * A1

        F = np.eye(15)
        F[0:3, 3:6] = eye3 * dt
        F[0:3, 6:9] = 0.5 * dt * f_vth
        F[0:3, 9:12] = 0.5 * dt * f_vba
        F[0:3, 12:15] = 0.5 * dt * f_vbg
        F[3:6, 6:9] = f_vth
        F[3:6, 9:12] = f_vba
        F[3:6, 12:15] = f_vbg
        F[6:9, 6:9] = quat_to_rot(dq_step).T
        F[6:9, 12:15] = -eye3 * dt

        # per-step noise (accel, gyro, ba walk, bg walk), variance sigma²·dt
        G = np.zeros((15, 12))
        G[0:3, 0:3] = -0.25 * dt * dt * (R0 + R1)
        G[0:3, 3:6] = 0.25 * dt * dt * dt * A1
        G[3:6, 0:3] = -0.5 * dt * (R0 + R1)
        G[3:6, 3:6] = 0.5 * dt * dt * A1
        G[6:9, 3:6] = -eye3 * dt
        G[9:12, 6:9] = eye3 * dt
        G[12:15, 9:12] = eye3 * dt

        q_noise = np.repeat(sig, 3) / dt
        cov = F @ cov @ F.T + (G * q_noise) @ G.T
        j_bias = F[0:9, 0:9] @ j_bias + F[0:9, 9:15]

        dp, dv, dq = dp_new, dv_new, dq_new
        t_total += dt

    return PreintegratedImu(
        dp=dp,
        dv=dv,
        dq=dq,
        dt=t_total,
        cov=cov,
        j_p_ba=j_bias[0:3, 0:3].copy(),
        j_p_bg=j_bias[0:3, 3:6].copy(),
        j_v_ba=j_bias[3:6, 0:3].copy(),
        j_v_bg=j_bias[3:6, 3:6].copy(),
        j_q_bg=j_bias[6:9, 3:6].copy(),
        ba_lin=ba.copy(),
        bg_lin=bg.copy(),
    )


def apply_preintegration(x_i: ImuState, z: PreintegratedImu, gravity: np.ndarray) -> ImuState:
    """Predict the end state from a start state and pre-integrated deltas."""
    R_i = quat_to_rot(x_i.q)
    dt = z.dt
    return ImuState(
        x_i.p + x_i.v * dt + 0.5 * gravity * dt * dt + R_i @ z.dp,
        x_i.v + gravity * dt + R_i @ z.dv,
        quat_normalize(quat_mul(x_i.q, z.dq)),
        x_i.ba.copy(),
        x_i.bg.copy(),
    )


def correct_bias(z: PreintegratedImu, ba_new: np.ndarray, bg_new: np.ndarray):
    """First-order delta correction for biases away from the linearization.

    Returns (dp, dv, dq); dq gets a right-multiplied body increment, the
    convention its bias Jacobian was accumulated in.
    """
    dba = np.asarray(ba_new, dtype=float) - z.ba_lin
    dbg = np.asarray(bg_new, dtype=float) - z.bg_lin
    dp = z.dp + z.j_p_ba @ dba + z.j_p_bg @ dbg
    dv = z.dv + z.j_v_ba @ dba + z.j_v_bg @ dbg
    dq = quat_normalize(quat_mul(z.dq, quat_exp(z.j_q_bg @ dbg)))
    return dp, dv, dq


def imu_residual(x_i: ImuState, x_j: ImuState, z: PreintegratedImu, gravity: np.ndarray):
    """15-vector residual (p, v, theta, ba, bg) and analytic Jacobians.

    Jacobians are with respect to the 15-dof state tangents of x_i and x_j
    (left orientation increments).  Zero when the states satisfy the
    pre-integrated motion with matching biases.
    """
    g = np.asarray(gravity, dtype=float)
    dt = z.dt
    R_i = quat_to_rot(x_i.q)
    R_iT = R_i.T

    dba = x_i.ba - z.ba_lin
    dbg = x_i.bg - z.bg_lin
    dp = z.dp + z.j_p_ba @ dba + z.j_p_bg @ dbg
    dv = z.dv + z.j_v_ba @ dba + z.j_v_bg @ dbg
    theta_c = z.j_q_bg @ dbg
    dq = quat_normalize(quat_mul(z.dq, quat_exp(theta_c)))

    u = x_j.p - x_i.p - x_i.v * dt - 0.5 * g * dt * dt
    w = x_j.v - x_i.v - g * dt

    r = np.zeros(15)
    r[0:3] = R_iT @ u - dp
    r[3:6] = R_iT @ w - dv
    e_q = quat_mul(quat_conj(dq), quat_mul(quat_conj(x_i.q), x_j.q))
    r[6:9] = quat_log(e_q)
    r[9:12] = x_j.ba - x_i.ba
    r[12:15] = x_j.bg - x_i.bg

    Jl_inv = so3_left_jacobian_inv(r[6:9])
    M = Jl_inv @ quat_to_rot(dq).T @ R_iT

    J_i = np.zeros((15, 15))
    J_i[0:3, 0:3] = -R_iT
    J_i[0:3, 3:6] = -R_iT * dt
    J_i[0:3, 6:9] = R_iT @ skew(u)
    J_i[0:3, 9:12] = -z.j_p_ba
    J_i[0:3, 12:15] = -z.j_p_bg
    J_i[3:6, 3:6] = -R_iT
    J_i[3:6, 6:9] = R_iT @ skew(w)
    J_i[3:6, 9:12] = -z.j_v_ba
    J_i[3:6, 12:15] = -z.j_v_bg
    J_i[6:9, 6:9] = -M
    J_i[6:9, 12:15] = -Jl_inv @ so3_right_jacobian(theta_c) @ z.j_q_bg
    J_i[9:12, 9:12] = -np.eye(3)
    J_i[12:15, 12:15] = -np.eye(3)

    J_j = np.zeros((15, 15))
    J_j[0:3, 0:3] = R_iT
    J_j[3:6, 3:6] = R_iT
    J_j[6:9, 6:9] = M
    J_j[9:12, 9:12] = np.eye(3)
    J_j[12:15, 12:15] = np.eye(3)

    return r, J_i, J_j
