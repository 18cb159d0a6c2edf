"""Compiled inner loops for episode integration.

The mechanical episode advances the sliding-translator state with
fixed-step RK4, evaluating the force law at every integrator stage.
Work integrals use the same stage weights as the state update, so the
energy ledger closes to integrator accuracy. Steps that could touch an
end stop are cut into fixed substeps; discrete-PTO switch-off inside a
step is located by linear interpolation of the velocity and the step is
redone in two pieces around the switch.

Everything here is numba-compiled and deterministic: no RNG, no
threading, no fastmath.
"""

import math

import numpy as np
from numba import njit

GRAVITY = 9.80665

# force-law codes for the kernel
PTO_OFF = 0
PTO_PASSIVE = 1
PTO_REACTIVE = 2
PTO_DISCRETE = 3

_FRICTION_V_SCALE = 1e-3  # tanh smoothing of Coulomb friction, m/s
_STOP_GUARD = 0.002  # m, switch to substepping this close to a stop
_N_SUB = 40
_N_SUB_SLOW = 6  # resting or creeping contact is quasi-static
_SUB_FAST_V = 0.05  # m/s, above this an approach counts as an impact


@njit(cache=True, nogil=True)
def _theta_at(theta, dt_theta, t):
    """Piecewise-linear tilt sample at time t (clamped at the ends)."""
    s = t / dt_theta
    i = int(s)
    if i < 0:
        return theta[0]
    if i >= theta.size - 1:
        return theta[theta.size - 1]
    w = s - i
    return (1.0 - w) * theta[i] + w * theta[i + 1]


@njit(cache=True, nogil=True)
def _pto_law(kind, x, v, on, c_pto, k_pto, f_max, p_max):
    """Saturated PTO force at one stage state."""
    if kind == PTO_OFF:
        return 0.0
    if kind == PTO_PASSIVE:
        f = -c_pto * v
    elif kind == PTO_REACTIVE:
        f = -k_pto * x - c_pto * v
    else:
        if on and v != 0.0:
            mag = p_max / abs(v)
            if mag > f_max:
                mag = f_max
            f = -mag if v > 0.0 else mag
        else:
            f = 0.0
    if f > f_max:
        f = f_max
    elif f < -f_max:
        f = -f_max
    if v != 0.0 and abs(f * v) > p_max:
        f = math.copysign(p_max / abs(v), f)
    return f


@njit(cache=True, nogil=True)
def _stop_force(x, v, half, k_end, c_end):
    """Penalty end-stop force; clamped so the stop never pulls inward."""
    if x > half:
        f = -k_end * (x - half) - c_end * v
        return f if f < 0.0 else 0.0
    if x < -half:
        f = -k_end * (x + half) - c_end * v
        return f if f > 0.0 else 0.0
    return 0.0


@njit(cache=True, nogil=True)
def _rk4(
    x, v, t, h, theta, dt_theta,
    mass, half, coulomb, k_end, c_end,
    kind, on, c_pto, k_pto, f_max, p_max,
):
    """One RK4 advance of (x, v) over h with stage-weighted work sums.

    Returns the new state plus the gravity (signed and absolute), PTO
    (net and positive part), friction, and end-stop work increments.
    """
    w_g = 0.0
    w_ga = 0.0
    w_pto = 0.0
    w_pos = 0.0
    w_fric = 0.0
    w_stop = 0.0
    kx1 = 0.0
    kv1 = 0.0
    kx_sum = 0.0
    kv_sum = 0.0
    for stage in range(4):
        if stage == 0:
            xs = x
            vs = v
            ts = t
            b = 1.0 / 6.0
        elif stage == 1:
            xs = x + 0.5 * h * kx1
            vs = v + 0.5 * h * kv1
            ts = t + 0.5 * h
            b = 1.0 / 3.0
        elif stage == 2:
            xs = x + 0.5 * h * kx1
            vs = v + 0.5 * h * kv1
            ts = t + 0.5 * h
            b = 1.0 / 3.0
        else:
            xs = x + h * kx1
            vs = v + h * kv1
            ts = t + h
            b = 1.0 / 6.0
        th = _theta_at(theta, dt_theta, ts)
        f_g = mass * GRAVITY * math.sin(th)
        f_p = _pto_law(kind, xs, vs, on, c_pto, k_pto, f_max, p_max)
        f_f = -coulomb * math.tanh(vs / _FRICTION_V_SCALE) if coulomb != 0.0 else 0.0
        f_s = _stop_force(xs, vs, half, k_end, c_end) if abs(xs) > half else 0.0
        kx1 = vs
        kv1 = (f_g + f_p + f_f + f_s) / mass
        kx_sum += b * kx1
        kv_sum += b * kv1
        w_g += b * f_g * vs
        w_ga += b * abs(f_g * vs)
        p = -f_p * vs
        w_pto += b * p
        if p > 0.0:
            w_pos += b * p
        w_fric += b * (-f_f * vs)
        w_stop += b * (-f_s * vs)
    return (
        x + h * kx_sum,
        v + h * kv_sum,
        h * w_g,
        h * w_ga,
        h * w_pto,
        h * w_pos,
        h * w_fric,
        h * w_stop,
    )


@njit(cache=True, nogil=True)
def _trigger(x, v, th, mass, half, f_max, safety):
    if v == 0.0:
        return False
    remaining = half - (x if v > 0.0 else -x)
    if remaining <= 0.0:
        return True
    avail = f_max - mass * GRAVITY * abs(math.sin(th))
    floor = 0.1 * f_max
    if avail < floor:
        avail = floor
    return safety * mass * v * v / (2.0 * avail) >= remaining


@njit(cache=True, nogil=True)
def mech_episode(
    theta, dt_theta, n_steps, dt,
    mass, stroke, coulomb, k_end, c_end,
    kind, c_pto, k_pto, f_max, p_max, v_stop, safety, on0,
    x0, v0, warmup, record_stride,
):
    """Integrate one mechanical episode of n_steps * dt seconds.

    Returns recorded series (empty when record_stride == 0) and a
    statistics vector:

    [0] net extracted power averaged after warmup, W
    [1] positive-part extracted power averaged after warmup, W
    [2] peak |F_pto| after warmup, N
    [3] peak extracted power after warmup, W
    [4] end-stop impact count (entire episode)
    [5] max end-stop penetration, m
    [6] gravity work over the episode, J
    [7] kinetic-energy change over the episode, J
    [8] net PTO-extracted energy, J
    [9] friction-dissipated energy, J
    [10] end-stop-absorbed energy, J
    [11] final discrete ON state (0/1)
    [12] final x, m
    [13] final v, m/s
    [14] integral of |gravity power| over the episode, J (drift scale)
    """
    half = 0.5 * stroke
    x = x0
    v = v0
    on = on0 != 0

    n_rec = n_steps // record_stride + 1 if record_stride > 0 else 0
    rec_x = np.empty(n_rec)
    rec_v = np.empty(n_rec)
    rec_f = np.empty(n_rec)
    rec_p = np.empty(n_rec)
    rec_th = np.empty(n_rec)
    i_rec = 0
    if record_stride > 0:
        th0 = _theta_at(theta, dt_theta, 0.0)
        f0 = _pto_law(kind, x, v, on, c_pto, k_pto, f_max, p_max)
        rec_x[0] = x
        rec_v[0] = v
        rec_f[0] = f0
        rec_p[0] = -f0 * v
        rec_th[0] = th0
        i_rec = 1

    w_g = 0.0
    w_g_abs = 0.0
    e_pto = 0.0
    e_fric = 0.0
    e_stop = 0.0
    ke0 = 0.5 * mass * v * v
    acc_net = 0.0
    acc_pos = 0.0
    peak_f = 0.0
    peak_p = 0.0
    impacts = 0
    max_pen = 0.0
    in_contact = abs(x) > half

    for step in range(n_steps):
        t_step = step * dt
        after_warmup = t_step >= warmup

        near = abs(x) + abs(v) * dt + _STOP_GUARD >= half
        if near:
            n_sub = _N_SUB if abs(v) >= _SUB_FAST_V else _N_SUB_SLOW
        else:
            n_sub = 1
        h = dt / n_sub
        for sub in range(n_sub):
            t = t_step + sub * h
            if kind == PTO_DISCRETE and on and abs(v) < v_stop:
                on = False
            x1, v1, dw_g, dw_ga, dw_pto, dw_pos, dw_fric, dw_stop = _rk4(
                x, v, t, h, theta, dt_theta,
                mass, half, coulomb, k_end, c_end,
                kind, on, c_pto, k_pto, f_max, p_max,
            )
            if (
                kind == PTO_DISCRETE
                and on
                and abs(v1) < v_stop
                and abs(v) > abs(v1)
            ):
                # locate the switch-off inside the step and redo around it
                tau = h * (abs(v) - v_stop) / (abs(v) - abs(v1))
                if tau < 0.0:
                    tau = 0.0
                elif tau > h:
                    tau = h
                x1, v1, dw_g, dw_ga, dw_pto, dw_pos, dw_fric, dw_stop = _rk4(
                    x, v, t, tau, theta, dt_theta,
                    mass, half, coulomb, k_end, c_end,
                    kind, on, c_pto, k_pto, f_max, p_max,
                )
                on = False
                x2, v2, g2, ga2, p2, q2, f2, s2 = _rk4(
                    x1, v1, t + tau, h - tau, theta, dt_theta,
                    mass, half, coulomb, k_end, c_end,
                    kind, on, c_pto, k_pto, f_max, p_max,
                )
                x1 = x2
                v1 = v2
                dw_g += g2
                dw_ga += ga2
                dw_pto += p2
                dw_pos += q2
                dw_fric += f2
                dw_stop += s2
            x = x1
            v = v1
            w_g += dw_g
            w_g_abs += dw_ga
            e_pto += dw_pto
            e_fric += dw_fric
            e_stop += dw_stop
            if after_warmup:
                acc_net += dw_pto
                acc_pos += dw_pos

            pen = abs(x) - half
            contact = pen > 0.0
            if contact:
                if not in_contact:
                    impacts += 1
                if pen > max_pen:
                    max_pen = pen
            in_contact = contact

            if kind == PTO_DISCRETE and not on and abs(v) >= v_stop:
                th = _theta_at(theta, dt_theta, t + h)
                if v * math.sin(th) < 0.0 or _trigger(
                    x, v, th, mass, half, f_max, safety
                ):
                    on = True

        f_now = _pto_law(kind, x, v, on, c_pto, k_pto, f_max, p_max)
        p_now = -f_now * v
        if after_warmup:
            if abs(f_now) > peak_f:
                peak_f = abs(f_now)
            if p_now > peak_p:
                peak_p = p_now
        if record_stride > 0 and (step + 1) % record_stride == 0:
            rec_x[i_rec] = x
            rec_v[i_rec] = v
            rec_f[i_rec] = f_now
            rec_p[i_rec] = p_now
            rec_th[i_rec] = _theta_at(theta, dt_theta, (step + 1) * dt)
            i_rec += 1

    window = n_steps * dt - warmup
    stats = np.empty(15)
    stats[0] = acc_net / window
    stats[1] = acc_pos / window
    stats[2] = peak_f
    stats[3] = peak_p
    stats[4] = impacts
    stats[5] = max_pen
    stats[6] = w_g
    stats[7] = 0.5 * mass * v * v - ke0
    stats[8] = e_pto
    stats[9] = e_fric
    stats[10] = e_stop
    stats[11] = 1.0 if on else 0.0
    stats[12] = x
    stats[13] = v
    stats[14] = w_g_abs
    return rec_x[:i_rec], rec_v[:i_rec], rec_f[:i_rec], rec_p[:i_rec], rec_th[:i_rec], stats


@njit(cache=True, nogil=True)
def bench_episode(
    ke_table, tau_p, mass, g_slope, coulomb,
    r_phase, r_load, l_phase,
    dt, stroke, t_max, hold_v, record_stride,
):
    """Gravity-driven slide of the generator translator on a tilted rail.

    The translator starts from rest at x = 0 and accelerates under the
    along-rail gravity component g_slope against Coulomb friction and
    the electromagnetic braking of the wye generator closed on a
    balanced per-phase resistive load. Phase currents follow
    l_phase * di/dt = e - (r_phase + r_load) * i with the EMF held
    constant across each step, which integrates exactly; with
    l_phase == 0 the currents are algebraic. ke_table holds the three
    phase coupling constants sampled uniformly over one coupling period
    2 * tau_p. hold_v > 0 pins the speed (no mechanics), for steady
    electrical checks.

    Returns recorded series (t, phase-A load voltage, phase-A current,
    instantaneous 3-phase load power) and a statistics vector:

    [0] peak line-to-neutral load voltage over the three phases, V
    [1] peak phase-current magnitude, A
    [2] peak instantaneous three-phase load power, W
    [3] time at which the translator reached the stroke end, s
        (t_max when it never did)
    [4] speed at the stroke end, m/s
    [5] copper-dissipated energy, J
    [6] load-delivered energy, J
    [7] electromagnetic braking work taken from the translator, J
    [8] final magnetic stored energy, J
    [9] friction-dissipated energy, J
    [10] final x, m
    """
    n_tab = ke_table.shape[0]
    period = 2.0 * tau_p
    cells = n_tab / period
    rt = r_phase + r_load
    decay = math.exp(-rt * dt / l_phase) if l_phase > 0.0 else 0.0

    x = 0.0
    v = hold_v if hold_v > 0.0 else 0.0
    ia = 0.0
    ib = 0.0
    ic = 0.0

    n_steps = int(math.ceil(t_max / dt))
    n_rec = n_steps // record_stride + 1 if record_stride > 0 else 0
    rec_t = np.empty(n_rec)
    rec_v = np.empty(n_rec)
    rec_i = np.empty(n_rec)
    rec_p = np.empty(n_rec)
    i_rec = 0
    if record_stride > 0:
        rec_t[0] = 0.0
        rec_v[0] = 0.0
        rec_i[0] = 0.0
        rec_p[0] = 0.0
        i_rec = 1

    v_pk = 0.0
    i_pk = 0.0
    p3_pk = 0.0
    e_cu = 0.0
    e_load = 0.0
    e_em = 0.0
    e_fric = 0.0
    t = 0.0
    t_end = t_max
    v_end = 0.0

    for k in range(n_steps):
        u = x - period * math.floor(x / period)
        s = u * cells
        j0 = int(s)
        if j0 >= n_tab:
            j0 = n_tab - 1
        w = s - j0
        j1 = j0 + 1
        if j1 == n_tab:
            j1 = 0
        ka = (1.0 - w) * ke_table[j0, 0] + w * ke_table[j1, 0]
        kb = (1.0 - w) * ke_table[j0, 1] + w * ke_table[j1, 1]
        kc = (1.0 - w) * ke_table[j0, 2] + w * ke_table[j1, 2]
        ea = ka * v
        eb = kb * v
        ec = kc * v

        if l_phase > 0.0:
            ia = ea / rt + (ia - ea / rt) * decay
            ib = eb / rt + (ib - eb / rt) * decay
            ic = ec / rt + (ic - ec / rt) * decay
        else:
            ia = ea / rt
            ib = eb / rt
            ic = ec / rt

        f_em = ka * ia + kb * ib + kc * ic
        ssq = ia * ia + ib * ib + ic * ic
        p_out = r_load * ssq
        e_cu += r_phase * ssq * dt
        e_load += p_out * dt

        va = abs(ia)
        if abs(ib) > va:
            va = abs(ib)
        if abs(ic) > va:
            va = abs(ic)
        if va > i_pk:
            i_pk = va
        if p_out > p3_pk:
            p3_pk = p_out

        if hold_v > 0.0:
            dx = v * dt
            x += dx
            e_em += f_em * dx
        else:
            fric = coulomb * math.tanh(v / _FRICTION_V_SCALE)
            a = g_slope - (f_em + fric) / mass
            v_new = v + a * dt
            dx = 0.5 * (v + v_new) * dt
            if x + dx >= stroke:
                dx_part = stroke - x
                e_em += f_em * dx_part
                e_fric += fric * dx_part
                frac = dx_part / dx if dx > 0.0 else 0.0
                t_end = t + frac * dt
                v_end = v + frac * a * dt
                x = stroke
                break
            x += dx
            e_em += f_em * dx
            e_fric += fric * dx
            v = v_new

        t += dt
        if record_stride > 0 and (k + 1) % record_stride == 0:
            rec_t[i_rec] = t
            rec_v[i_rec] = ia * r_load
            rec_i[i_rec] = ia
            rec_p[i_rec] = p_out
            i_rec += 1

    if hold_v > 0.0:
        v_end = hold_v
        t_end = t

    stats = np.empty(11)
    stats[0] = i_pk * r_load
    stats[1] = i_pk
    stats[2] = p3_pk
    stats[3] = t_end
    stats[4] = v_end
    stats[5] = e_cu
    stats[6] = e_load
    stats[7] = e_em
    stats[8] = 0.5 * l_phase * (ia * ia + ib * ib + ic * ic)
    stats[9] = e_fric
    stats[10] = x
    return rec_t[:i_rec], rec_v[:i_rec], rec_i[:i_rec], rec_p[:i_rec], stats
