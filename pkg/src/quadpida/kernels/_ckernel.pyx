# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled closed-loop kernel (RK4 rigid body + four PIDA channels).

Same contract as ``_pykernel.run_closed_loop``; the loop runs without the GIL
so independent simulations can proceed on separate threads.
"""

from libc.math cimport cos, sin, sqrt, tan, fabs

cdef int OK = 0
cdef int DIVERGED = 1
cdef int SINGULAR = 2

cdef double _HALF_PI = 1.5707963267948966
cdef double _EPS_SINGULAR = 1e-6
cdef double _LIMIT = 1e6


cdef inline void _deriv(const double* x, double up, double uq, double ur, double uT,
                        double dp, double dq, double dr, double m, double g,
                        double ixx, double iyy, double izz, double* out) noexcept nogil:
    cdef double phi = x[0], th = x[1], psi = x[2]
    cdef double p = x[3], q = x[4], r = x[5]
    cdef double u = x[6], v = x[7], w = x[8]
    cdef double sphi = sin(phi), cphi = cos(phi)
    cdef double sth = sin(th), cth = cos(th), tth = tan(th)
    cdef double spsi = sin(psi), cpsi = cos(psi)

    out[0] = p + sphi * tth * q + cphi * tth * r
    out[1] = cphi * q - sphi * r
    out[2] = (sphi * q + cphi * r) / cth
    out[3] = ((iyy - izz) * q * r + up + dp) / ixx
    out[4] = ((izz - ixx) * p * r + uq + dq) / iyy
    out[5] = ((ixx - iyy) * p * q + ur + dr) / izz
    out[6] = r * v - q * w - g * sth
    out[7] = p * w - r * u + g * sphi * cth
    out[8] = q * u - p * v + g * cth * cphi - uT / m
    out[9] = (cth * cpsi * u
              + (sphi * sth * cpsi - cphi * spsi) * v
              + (cphi * sth * cpsi + sphi * spsi) * w)
    out[10] = (cth * spsi * u
               + (sphi * sth * spsi + cphi * cpsi) * v
               + (cphi * sth * spsi - sphi * cpsi) * w)
    out[11] = -sth * u + sphi * cth * v + cphi * cth * w


def run_closed_loop(const double[::1] x0, double[:, ::1] ctrl, const double[:, ::1] gains,
                    const double[::1] params, const double[:, ::1] refs,
                    const double[:, ::1] meas_noise, const double[::1] roll_dist,
                    double gyro_kf, bint control_enabled, double dt,
                    double[:, ::1] traj, double[:, ::1] controls):
    cdef Py_ssize_t n = refs.shape[0]
    cdef double m = params[0], l = params[1], g = params[2], c = params[3]
    cdef double ixx = params[4], iyy = params[5], izz = params[6], im = params[7]
    cdef double hover = m * g
    cdef double x[12]
    cdef double k1[12]
    cdef double k2[12]
    cdef double k3[12]
    cdef double k4[12]
    cdef double tmp[12]
    cdef double st[4][5]
    cdef double gn[4][5]
    cdef double fa[4]
    cdef double fb[4]
    cdef double y[4]
    cdef double uc[4]
    cdef double h6 = dt / 6.0, h2 = 0.5 * dt
    cdef double e, f1, f2, integ, out, tf, dp, dq, xi
    cdef double q4, a0, a1, a2, f_1, f_2, f_3, f_4, w1, w2, w3, w4, om_r
    cdef Py_ssize_t i, j, ch, k = 0
    cdef int status = OK
    cdef bint bad

    for i in range(12):
        x[i] = x0[i]
        traj[0, i] = x[i]
    for ch in range(4):
        for j in range(5):
            st[ch][j] = ctrl[ch, j]
            gn[ch][j] = gains[ch, j]
        tf = gn[ch][4]
        fa[ch] = (2.0 * tf - dt) / (2.0 * tf + dt)
        fb[ch] = 2.0 / (2.0 * tf + dt)

    with nogil:
        while k < n:
            if fabs(x[1]) >= _HALF_PI - _EPS_SINGULAR:
                status = SINGULAR
                break

            y[0] = x[0] + meas_noise[k, 0]
            y[1] = x[1] + meas_noise[k, 1]
            y[2] = x[2] + meas_noise[k, 2]
            y[3] = -x[11] + meas_noise[k, 3]

            if control_enabled:
                for ch in range(4):
                    e = refs[k, ch] - y[ch]
                    if st[ch][4] == 0.0:
                        st[ch][1] = e
                        st[ch][4] = 1.0
                    f1 = fa[ch] * st[ch][2] + fb[ch] * (e - st[ch][1])
                    f2 = fa[ch] * st[ch][3] + fb[ch] * (f1 - st[ch][2])
                    integ = st[ch][0] + 0.5 * dt * (e + st[ch][1])
                    out = gn[ch][0] * e + gn[ch][1] * integ + gn[ch][2] * f1 + gn[ch][3] * f2
                    if ch == 3 and hover + out < 0.0:
                        integ = st[ch][0]
                        uc[3] = 0.0
                    elif ch == 3:
                        uc[3] = hover + out
                    else:
                        uc[ch] = out
                    st[ch][0] = integ
                    st[ch][1] = e
                    st[ch][2] = f1
                    st[ch][3] = f2
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
                dp = dp + x[4] * im * om_r
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
