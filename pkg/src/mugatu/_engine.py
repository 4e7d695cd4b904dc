"""Jitted numerical core of the walker simulator.

Everything here operates on flat float64 arrays so the hot loop compiles
under numba. Layouts:

  state y (15,): hip position p (world, 3), base quaternion q (wxyz, 4),
                 hip velocity v (world, 3), left-body angular velocity w
                 (world, 3), hip angle phi, hip rate phid
  bodies (2,13): mass, cg (3, body frame), inertia about cg (9, row-major)
  feet   (2,4):  foot sphere center (3, body frame), radius
  mat    (5,):   normal stiffness, normal damping, mu, spin patch radius,
                 slip regularization velocity
  servo  (4,):   kp, kd, torque limit, speed limit
  gait   (6,):   see gait.GaitCommand.packed
  misc   (6,):   g, hip viscous friction, power baseline, 1/efficiency,
                 fall height threshold, fall angle threshold

The left body is the floating base; the right body hangs off it through the
hip revolute (axis = left-body y). Equations of motion are assembled in the
7 generalized speeds (v, w, phid) Newton-Euler style and solved directly.
"""
import math

import numpy as np
from numba import njit

from .gait import _angle_vel, _servo_torque

N_COLUMNS = 17  # t x y z roll pitch yaw hip_cmd hip_act tau p_elec n_l n_r cg_x cg_y cg_z e_mech


@njit(cache=True)
def _quat_to_rot(q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    r = np.empty((3, 3))
    r[0, 0] = 1.0 - 2.0 * (y * y + z * z)
    r[0, 1] = 2.0 * (x * y - w * z)
    r[0, 2] = 2.0 * (x * z + w * y)
    r[1, 0] = 2.0 * (x * y + w * z)
    r[1, 1] = 1.0 - 2.0 * (x * x + z * z)
    r[1, 2] = 2.0 * (y * z - w * x)
    r[2, 0] = 2.0 * (x * z - w * y)
    r[2, 1] = 2.0 * (y * z + w * x)
    r[2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return r


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def _mat3vec(m, x):
    out = np.empty(3)
    for i in range(3):
        out[i] = m[i, 0] * x[0] + m[i, 1] * x[1] + m[i, 2] * x[2]
    return out


@njit(cache=True)
def _rot_inertia(r, i_body):
    """R I R^T for 3x3 matrices."""
    tmp = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            tmp[i, j] = r[i, 0] * i_body[0, j] + r[i, 1] * i_body[1, j] + r[i, 2] * i_body[2, j]
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            out[i, j] = tmp[i, 0] * r[j, 0] + tmp[i, 1] * r[j, 1] + tmp[i, 2] * r[j, 2]
    return out


@njit(cache=True)
def _contact(gap, vx, vy, vz, spin_rate, kn, cn, mu, rpatch, vreg):
    """Penalty normal + regularized Coulomb friction for one sphere-plane pair.

    Returns the world contact force (fx, fy, fz) and the torsional friction
    torque about the world vertical. Zero wrench when separated.
    """
    if gap >= 0.0:
        return 0.0, 0.0, 0.0, 0.0
    pen = -gap
    normal = kn * pen
    if vz < 0.0:
        normal += cn * (-vz)
    if normal < 0.0:
        normal = 0.0
    vt = math.hypot(vx, vy)
    fx = 0.0
    fy = 0.0
    if vt > 1e-14:
        scale = -mu * normal * math.tanh(vt / vreg) / vt
        fx = scale * vx
        fy = scale * vy
    spin_torque = -mu * normal * rpatch * math.tanh(spin_rate * rpatch / vreg)
    return fx, fy, normal, spin_torque


@njit(cache=True)
def _core(t, y, bodies, feet, mat, servo, gait, misc, tau_mode, tau_val):
    """Dynamics evaluation at one state.

    Returns (ydot, hip torque, left/right normal force, mechanical energy,
    cg x, cg y, cg z).
    """
    g = misc[0]
    hip_visc = misc[1]
    p = y[0:3]
    q = y[3:7]
    v = y[7:10]
    w = y[10:13]
    phi = y[13]
    phid = y[14]

    rl = _quat_to_rot(q)
    cphi = math.cos(phi)
    sphi = math.sin(phi)
    rr = np.empty((3, 3))
    for i in range(3):
        rr[i, 0] = rl[i, 0] * cphi - rl[i, 2] * sphi
        rr[i, 1] = rl[i, 1]
        rr[i, 2] = rl[i, 0] * sphi + rl[i, 2] * cphi
    axis = np.empty(3)
    for i in range(3):
        axis[i] = rl[i, 1]

    masses = np.empty(2)
    rcg = np.empty((2, 3))      # world vector hip -> body cg
    iner_w = np.empty((2, 3, 3))
    omega = np.empty((2, 3))
    for b in range(2):
        rot = rl if b == 0 else rr
        masses[b] = bodies[b, 0]
        cg = bodies[b, 1:4]
        for i in range(3):
            rcg[b, i] = rot[i, 0] * cg[0] + rot[i, 1] * cg[1] + rot[i, 2] * cg[2]
        ib = np.empty((3, 3))
        for i in range(3):
            for j in range(3):
                ib[i, j] = bodies[b, 4 + 3 * i + j]
        iner_w[b] = _rot_inertia(rot, ib)
    for i in range(3):
        omega[0, i] = w[i]
        omega[1, i] = w[i] + axis[i] * phid

    # contact wrenches
    kn, cn, mu, rpatch, vreg = mat[0], mat[1], mat[2], mat[3], mat[4]
    f_con = np.zeros((2, 3))
    t_con = np.zeros((2, 3))
    n_force = np.zeros(2)
    for b in range(2):
        rot = rl if b == 0 else rr
        fc = feet[b, 0:3]
        rad = feet[b, 3]
        cw = np.empty(3)
        for i in range(3):
            cw[i] = p[i] + rot[i, 0] * fc[0] + rot[i, 1] * fc[1] + rot[i, 2] * fc[2]
        gap = cw[2] - rad
        if gap < 0.0:
            pc = np.empty(3)
            pc[0] = cw[0]
            pc[1] = cw[1]
            pc[2] = gap
            rel = pc - p
            vpt = v + _cross(omega[b], rel)
            fx, fy, fz, taus = _contact(gap, vpt[0], vpt[1], vpt[2], omega[b, 2],
                                        kn, cn, mu, rpatch, vreg)
            f_con[b, 0] = fx
            f_con[b, 1] = fy
            f_con[b, 2] = fz
            n_force[b] = fz
            d = pc - (p + rcg[b])
            fvec = f_con[b]
            tq = _cross(d, fvec)
            tq[2] += taus
            t_con[b] = tq

    # hip torque
    if tau_mode == 1:
        tau = tau_val
    else:
        theta_cmd, thetad_cmd = _angle_vel(t, gait)
        tau = _servo_torque(phi, phid, theta_cmd, thetad_cmd,
                            servo[0], servo[1], servo[2], servo[3])

    # mass matrix
    mm = np.zeros((7, 7))
    u = _cross(axis, rcg[1])
    for b in range(2):
        mb = masses[b]
        rb = rcg[b]
        rr_dot = rb[0] * rb[0] + rb[1] * rb[1] + rb[2] * rb[2]
        for i in range(3):
            mm[i, i] += mb
            for j in range(3):
                # -m skew(r) in the translation/rotation coupling block
                mm[3 + i, 3 + j] += iner_w[b, i, j] + mb * ((rr_dot if i == j else 0.0) - rb[i] * rb[j])
        mm[0, 4] += -mb * (-rb[2])
        mm[0, 5] += -mb * rb[1]
        mm[1, 3] += -mb * rb[2]
        mm[1, 5] += -mb * (-rb[0])
        mm[2, 3] += -mb * (-rb[1])
        mm[2, 4] += -mb * rb[0]
    mb = masses[1]
    cru = _cross(rcg[1], u)
    iwa = _mat3vec(iner_w[1], axis)
    for i in range(3):
        mm[i, 6] += mb * u[i]
        mm[3 + i, 6] += mb * cru[i] + iwa[i]
    mm[6, 6] += mb * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]) \
        + axis[0] * iwa[0] + axis[1] * iwa[1] + axis[2] * iwa[2]
    for i in range(7):
        for j in range(i):
            mm[i, j] = mm[j, i]

    # generalized forces with velocity-product (bias) terms
    qf = np.zeros(7)
    abias = np.zeros((2, 3))
    albias = np.zeros((2, 3))
    abias[0] = _cross(w, _cross(w, rcg[0]))
    albias[1] = phid * _cross(w, axis)
    abias[1] = _cross(albias[1], rcg[1]) + _cross(omega[1], _cross(omega[1], rcg[1]))
    for b in range(2):
        feff = np.empty(3)
        for i in range(3):
            feff[i] = f_con[b, i] - masses[b] * abias[b, i]
        feff[2] -= masses[b] * g
        iw_om = _mat3vec(iner_w[b], omega[b])
        teff = t_con[b] - _mat3vec(iner_w[b], albias[b]) - _cross(omega[b], iw_om)
        rxf = _cross(rcg[b], feff)
        for i in range(3):
            qf[i] += feff[i]
            qf[3 + i] += rxf[i] + teff[i]
        if b == 1:
            qf[6] += u[0] * feff[0] + u[1] * feff[1] + u[2] * feff[2] \
                + axis[0] * teff[0] + axis[1] * teff[1] + axis[2] * teff[2]
    qf[6] += tau - hip_visc * phid

    acc = np.linalg.solve(mm, qf)

    ydot = np.empty(15)
    for i in range(3):
        ydot[i] = v[i]
    qw, qx, qy, qz = q[0], q[1], q[2], q[3]
    ydot[3] = -0.5 * (w[0] * qx + w[1] * qy + w[2] * qz)
    ydot[4] = 0.5 * (w[0] * qw + w[1] * qz - w[2] * qy)
    ydot[5] = 0.5 * (w[1] * qw + w[2] * qx - w[0] * qz)
    ydot[6] = 0.5 * (w[2] * qw + w[0] * qy - w[1] * qx)
    for i in range(3):
        ydot[7 + i] = acc[i]
        ydot[10 + i] = acc[3 + i]
    ydot[13] = phid
    ydot[14] = acc[6]

    # mechanical energy and whole-robot cg
    ke = 0.0
    pe = 0.0
    cgx = 0.0
    cgy = 0.0
    cgz = 0.0
    for b in range(2):
        vb = v + _cross(omega[b], rcg[b])
        iw_om = _mat3vec(iner_w[b], omega[b])
        ke += 0.5 * masses[b] * (vb[0] * vb[0] + vb[1] * vb[1] + vb[2] * vb[2])
        ke += 0.5 * (omega[b, 0] * iw_om[0] + omega[b, 1] * iw_om[1] + omega[b, 2] * iw_om[2])
        pe += masses[b] * g * (p[2] + rcg[b, 2])
        cgx += masses[b] * (p[0] + rcg[b, 0])
        cgy += masses[b] * (p[1] + rcg[b, 1])
        cgz += masses[b] * (p[2] + rcg[b, 2])
    mtot = masses[0] + masses[1]
    return ydot, tau, n_force[0], n_force[1], ke + pe, cgx / mtot, cgy / mtot, cgz / mtot


@njit(cache=True)
def _rk4_step(t, y, dt, bodies, feet, mat, servo, gait, misc, tau_mode, tau_val):
    """One classical RK4 step; torque re-evaluated at every stage; unit
    quaternion restored after the combine."""
    k1 = _core(t, y, bodies, feet, mat, servo, gait, misc, tau_mode, tau_val)[0]
    k2 = _core(t + 0.5 * dt, y + 0.5 * dt * k1, bodies, feet, mat, servo, gait, misc,
               tau_mode, tau_val)[0]
    k3 = _core(t + 0.5 * dt, y + 0.5 * dt * k2, bodies, feet, mat, servo, gait, misc,
               tau_mode, tau_val)[0]
    k4 = _core(t + dt, y + dt * k3, bodies, feet, mat, servo, gait, misc,
               tau_mode, tau_val)[0]
    yn = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    norm = math.sqrt(yn[3] * yn[3] + yn[4] * yn[4] + yn[5] * yn[5] + yn[6] * yn[6])
    for i in range(3, 7):
        yn[i] /= norm
    return yn


@njit(cache=True)
def _rpy(q):
    r = _quat_to_rot(q)
    s = -r[2, 0]
    if s > 1.0:
        s = 1.0
    elif s < -1.0:
        s = -1.0
    return math.atan2(r[2, 1], r[2, 2]), math.asin(s), math.atan2(r[1, 0], r[0, 0])


@njit(cache=True)
def _record(t, y, bodies, feet, mat, servo, gait, misc, out, row):
    _, tau, n_l, n_r, e_mech, cgx, cgy, cgz = _core(
        t, y, bodies, feet, mat, servo, gait, misc, 0, 0.0)
    roll, pitch, yaw = _rpy(y[3:7])
    theta_cmd, _ = _angle_vel(t, gait)
    p_elec = misc[2]
    mech = tau * y[14]
    if mech > 0.0:
        p_elec += mech * misc[3]
    out[row, 0] = t
    out[row, 1] = y[0]
    out[row, 2] = y[1]
    out[row, 3] = y[2]
    out[row, 4] = roll
    out[row, 5] = pitch
    out[row, 6] = yaw
    out[row, 7] = theta_cmd
    out[row, 8] = y[13]
    out[row, 9] = tau
    out[row, 10] = p_elec
    out[row, 11] = n_l
    out[row, 12] = n_r
    out[row, 13] = cgx
    out[row, 14] = cgy
    out[row, 15] = cgz
    out[row, 16] = e_mech


@njit(cache=True)
def _simulate(y0, dt, n_steps, stride, bodies, feet, mat, servo, gait, misc, out):
    """Fixed-step run with uniform sampling every ``stride`` steps.

    Returns (rows written, fell, fall time, diverged). Stops at the first
    sample that trips the fall detector or goes non-finite.
    """
    y = y0.copy()
    _record(0.0, y, bodies, feet, mat, servo, gait, misc, out, 0)
    rows = 1
    fell = False
    fall_time = -1.0
    diverged = False
    h_thresh = misc[4]
    ang_thresh = misc[5]
    for step in range(1, n_steps + 1):
        t0 = (step - 1) * dt
        y = _rk4_step(t0, y, dt, bodies, feet, mat, servo, gait, misc, 0, 0.0)
        if step % stride == 0:
            t = step * dt
            ok = True
            for i in range(15):
                if not math.isfinite(y[i]):
                    ok = False
            if not ok:
                diverged = True
                break
            _record(t, y, bodies, feet, mat, servo, gait, misc, out, rows)
            rows += 1
            roll = out[rows - 1, 4]
            pitch = out[rows - 1, 5]
            if abs(roll) > ang_thresh or abs(pitch) > ang_thresh or y[2] < h_thresh:
                fell = True
                fall_time = t
                break
    return rows, fell, fall_time, diverged
