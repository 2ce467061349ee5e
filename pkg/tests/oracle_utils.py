"""High-precision closed-form oracles (mpmath, 50 digits).

Independent re-implementations of the model's constitutive expressions,
written directly from the closed forms with arbitrary-precision arithmetic.
They share nothing with the package implementation beyond the physical
constants, so agreement to 6+ significant digits is a real cross-check.
"""

import mpmath as mp

mp.mp.dps = 50

K_B = mp.mpf("1.380649e-23")
H = mp.mpf("6.62607015e-34")
Q = mp.mpf("1.602176634e-19")
EPS0 = mp.mpf("8.8541878128e-12")
M0 = mp.mpf("9.1093837015e-31")


def rates(e_fe, temperature, w_b_j, d_e, e_off):
    """(k_down, k_up) of the thermally activated switching process."""
    kt = K_B * mp.mpf(temperature)
    w_e = Q * (mp.mpf(e_fe) - mp.mpf(e_off)) * mp.mpf(d_e)
    nu = kt / H
    k_down = nu * mp.e ** ((-mp.mpf(w_b_j) + w_e) / kt)
    k_up = nu * mp.e ** ((-mp.mpf(w_b_j) - w_e) / kt)
    return k_down, k_up


def p_steady(e_fe, temperature, w_b_j, d_e, e_off):
    k_down, k_up = rates(e_fe, temperature, w_b_j, d_e, e_off)
    return k_down / (k_down + k_up)


def p_step(p0, k_down, k_up, dt):
    k_down, k_up, p0, dt = map(mp.mpf, (k_down, k_up, p0, dt))
    s = k_down + k_up
    p_eq = k_down / s
    return p_eq + (p0 - p_eq) * mp.e ** (-s * dt)


def polarization(p, p_s):
    return mp.mpf(p_s) * (2 * mp.mpf(p) - 1)


def c_layer(eps_r, t):
    return EPS0 * mp.mpf(eps_r) / mp.mpf(t)


def c_depl_branch(e_fe, eps_fe, eps_depl, n_depl, q_fix, sign):
    """One depletion branch, sign = +1 (down) or -1 (up); no floor."""
    denom = EPS0 * mp.mpf(eps_fe) * mp.mpf(e_fe) + sign * mp.mpf(q_fix)
    return EPS0 * mp.mpf(eps_depl) * Q * mp.mpf(n_depl) / abs(denom)


def c_depl(p, e_fe, eps_fe, eps_depl, n_dn, n_up, q_fix):
    c_dn = c_depl_branch(e_fe, eps_fe, eps_depl, n_dn, q_fix, +1)
    c_up = c_depl_branch(e_fe, eps_fe, eps_depl, n_up, q_fix, -1)
    return mp.mpf(p) * c_dn + (1 - mp.mpf(p)) * c_up


def phi_depl(p, v_fe, e_fe, eps_fe, eps_depl, n_dn, n_up, q_fix, p_s, t_fe):
    num = 2 * mp.mpf(p_s) * mp.mpf(p) - mp.mpf(p_s) + c_layer(eps_fe, t_fe) * mp.mpf(v_fe)
    return num / c_depl(p, e_fe, eps_fe, eps_depl, n_dn, n_up, q_fix)


def j_fn(e_int, phi_b, m_eff):
    e = abs(mp.mpf(e_int))
    if e == 0:
        return mp.mpf(0)
    pref = Q ** 3 / (8 * mp.pi * H * Q * mp.mpf(phi_b))
    expo = -8 * mp.pi * mp.sqrt(2 * M0 * mp.mpf(m_eff)) * (Q * mp.mpf(phi_b)) ** mp.mpf("1.5") \
        / (3 * H * Q * e)
    return mp.sign(mp.mpf(e_int)) * pref * e ** 2 * mp.e ** expo


def j_pf(e_leak, temperature, mu, n_fe, phi_tr, eps_fe):
    e = abs(mp.mpf(e_leak))
    if e == 0:
        return mp.mpf(0)
    kt = K_B * mp.mpf(temperature)
    root = mp.sqrt(Q * e / (mp.pi * EPS0 * mp.mpf(eps_fe)))
    expo = -Q * (mp.mpf(phi_tr) - root) / kt
    return mp.sign(mp.mpf(e_leak)) * Q * mp.mpf(mu) * mp.mpf(n_fe) * e * mp.e ** expo


def rk4_p(p0, k_down, k_up, dt, n_sub):
    """Brute-force RK4 integration of dp/dt = k_down(1-p) - k_up p (float64)."""
    import numpy as np

    p = np.asarray(p0, dtype=np.float64)
    k_down = np.asarray(k_down, dtype=np.float64)
    k_up = np.asarray(k_up, dtype=np.float64)
    h = dt / n_sub

    def f(x):
        return k_down * (1.0 - x) - k_up * x

    for _ in range(n_sub):
        k1 = f(p)
        k2 = f(p + 0.5 * h * k1)
        k3 = f(p + 0.5 * h * k2)
        k4 = f(p + h * k3)
        p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return p
