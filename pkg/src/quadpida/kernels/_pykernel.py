"""Pure-Python closed-loop kernel.

Line-for-line twin of ``_ckernel.pyx``; used when the compiled extension is
not importable. Scalar ``math`` code is used instead of numpy because the
per-step arrays are tiny and numpy call overhead would dominate.
"""

from math import cos, sin, sqrt, tan

OK = 0
DIVERGED = 1
SINGULAR = 2

_HALF_PI = 1.5707963267948966
_EPS_SINGULAR = 1e-6
_LIMIT = 1e6


def _deriv(x, up, uq, ur, uT, dp, dq, dr, m, g, ixx, iyy, izz, out):
    phi = x[0]
    th = x[1]
    psi = x[2]
    p = x[3]
    q = x[4]
    r = x[5]
    u = x[6]
    v = x[7]
    w = x[8]
    sphi = sin(phi)
    cphi = cos(phi)
    sth = sin(th)
    cth = cos(th)
    tth = tan(th)
    spsi = sin(psi)
    cpsi = cos(psi)

    out[0] = p + sphi * tth * q + cphi * tth * r
    out[1] = cphi * q - sphi * r
    out[2] = (sphi * q + cphi * r) / cth
    out[3] = ((iyy - izz) * q * r + up + dp) / ixx
    out[4] = ((izz - ixx) * p * r + uq + dq) / iyy
    out[5] = ((ixx - iyy) * p * q + ur + dr) / izz
    out[6] = r * v - q * w - g * sth
    out[7] = p * w - r * u + g * sphi * cth
    out[8] = q * u - p * v + g * cth * cphi - uT / m
    out[9] = (
        cth * cpsi * u
        + (sphi * sth * cpsi - cphi * spsi) * v
        + (cphi * sth * cpsi + sphi * spsi) * w
    )
    out[10] = (
        cth * spsi * u
        + (sphi * sth * spsi + cphi * cpsi) * v
        + (cphi * sth * spsi - sphi * cpsi) * w
    )
    out[11] = -sth * u + sphi * cth * v + cphi * cth * w


def run_closed_loop(
    x0, ctrl, gains, params, refs, meas_noise, roll_dist, gyro_kf, control_enabled, dt, traj, controls
):
    """Integrate ``n = len(refs)`` control periods of the closed loop.

    ``traj`` (n+1, 12) and ``controls`` (n, 4) are filled in place, as is the
    per-channel controller state ``ctrl`` (4, 5) laid out as
    ``[integral, e_prev, f1, f2, primed]``. Returns ``(steps_done, status)``.
    """
    n = refs.shape[0]
    m, l, g, c, ixx, iyy, izz, im = (float(v) for v in params)
    hover = m * g

    x = [float(v) for v in x0]
    for i in range(12):
        traj[0, i] = x[i]

    st = [[float(ctrl[ch, j]) for j in range(5)] for ch in range(4)]
    gn = [[float(gains[ch, j]) for j in range(5)] for ch in range(4)]
    fa = [0.0] * 4
    fb = [0.0] * 4
    for ch in range(4):
        tf = gn[ch][4]
        fa[ch] = (2.0 * tf - dt) / (2.0 * tf + dt)
        fb[ch] = 2.0 / (2.0 * tf + dt)

    k1 = [0.0] * 12
    k2 = [0.0] * 12
    k3 = [0.0] * 12
    k4 = [0.0] * 12
    tmp = [0.0] * 12
    y = [0.0] * 4
    uc = [0.0] * 4
    h6 = dt / 6.0
    h2 = 0.5 * dt
    status = OK
    k = 0

    while k < n:
        if abs(x[1]) >= _HALF_PI - _EPS_SINGULAR:
            status = SINGULAR
            break

        # measured outputs: roll, pitch, yaw, altitude
        y[0] = x[0] + meas_noise[k, 0]
        y[1] = x[1] + meas_noise[k, 1]
        y[2] = x[2] + meas_noise[k, 2]
        y[3] = -x[11] + meas_noise[k, 3]

        if control_enabled:
            for ch in range(4):
                s = st[ch]
                kp, ki, kd, ka, _ = gn[ch]
                e = refs[k, ch] - y[ch]
                if s[4] == 0.0:
                    s[1] = e
                    s[4] = 1.0
                f1 = fa[ch] * s[2] + fb[ch] * (e - s[1])
                f2 = fa[ch] * s[3] + fb[ch] * (f1 - s[2])
                integ = s[0] + 0.5 * dt * (e + s[1])
                out = kp * e + ki * integ + kd * f1 + ka * f2
                if ch == 3 and hover + out < 0.0:
                    # conditional integration while thrust is clamped at zero
                    integ = s[0]
                    uc[3] = 0.0
                elif ch == 3:
                    uc[3] = hover + out
                else:
                    uc[ch] = out
                s[0] = integ
                s[1] = e
                s[2] = f1
                s[3] = f2
        else:
            uc[0] = 0.0
            uc[1] = 0.0
            uc[2] = 0.0
            uc[3] = hover

        for j in range(4):
            controls[k, j] = uc[j]

        dp = roll_dist[k]
        dq = 0.0
        if gyro_kf > 0.0:
            # rotor speeds from the clamped inverse mix, F = kf * Omega^2
            q4 = uc[3] / 4.0
            a1 = uc[1] / (2.0 * l)
            a0 = uc[0] / (2.0 * l)
            a2 = uc[2] / (4.0 * c)
            f_1 = q4 - a1 - a2
            f_2 = q4 + a0 + a2
            f_3 = q4 + a1 - a2
            f_4 = q4 - a0 + a2
            w1 = sqrt(f_1 / gyro_kf) if f_1 > 0.0 else 0.0
            w2 = sqrt(f_2 / gyro_kf) if f_2 > 0.0 else 0.0
            w3 = sqrt(f_3 / gyro_kf) if f_3 > 0.0 else 0.0
            w4 = sqrt(f_4 / gyro_kf) if f_4 > 0.0 else 0.0
            om_r = -w1 + w2 - w3 + w4
            dp += x[4] * im * om_r
            dq = -x[3] * im * om_r

        _deriv(x, uc[0], uc[1], uc[2], uc[3], dp, dq, 0.0, m, g, ixx, iyy, izz, k1)
        for i in range(12):
            tmp[i] = x[i] + h2 * k1[i]
        _deriv(tmp, uc[0], uc[1], uc[2], uc[3], dp, dq, 0.0, m, g, ixx, iyy, izz, k2)
        for i in range(12):
            tmp[i] = x[i] + h2 * k2[i]
        _deriv(tmp, uc[0], uc[1], uc[2], uc[3], dp, dq, 0.0, m, g, ixx, iyy, izz, k3)
        for i in range(12):
            tmp[i] = x[i] + dt * k3[i]
        _deriv(tmp, uc[0], uc[1], uc[2], uc[3], dp, dq, 0.0, m, g, ixx, iyy, izz, k4)

        bad = False
        for i in range(12):
            xi = x[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not (-_LIMIT <= xi <= _LIMIT):
                bad = True
            x[i] = xi
            traj[k + 1, i] = xi
        k += 1
        if bad:
            status = DIVERGED
            break

    for ch in range(4):
        for j in range(5):
            ctrl[ch, j] = st[ch][j]
    return k, status
