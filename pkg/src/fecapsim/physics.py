"""Constitutive equations of the FeCap compact model.

Every function is a pure map from state/field values and device parameters
to a physical quantity, SI units in and out. All functions broadcast over
numpy arrays, so a ``ParamsBatch`` and per-device state arrays evaluate the
whole batch in one call; scalars work the same way.

Numerical guards used throughout:
- exponentials are evaluated as ``exp(clip(arg, -700, 700))`` so extreme
  fields clamp to rates/currents beyond any resolvable timescale instead of
  overflowing (for the transition rates the prefactor is folded into the
  exponent before clamping, which keeps the result finite);
- the per-direction depletion-capacitance denominator is floored in
  magnitude at ``DENOM_MIN`` to avoid the singularity where the field term
  cancels the fixed charge.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .constants import EPS_0, H_PLANCK, K_B, M_0, Q_E

# Exponent clamp for all guarded exponentials.
EXP_CLAMP = 700.0
# Magnitude floor of the depletion-capacitance denominator, C/m^2
# (about 1% of the calibrated fixed charge).
DENOM_MIN = 1e-4


class TransitionRates(NamedTuple):
    """Polarization switching rates, 1/s.

    ``k_down`` is the rate driving the up-state probability toward 1 and
    ``k_up`` the rate out of the up state; the down/up subscripts follow the
    rate-equation convention dp/dt = k_down*(1-p) - k_up*p.
    """

    k_down: np.ndarray
    k_up: np.ndarray


def _guarded_exp(x):
    return np.exp(np.clip(x, -EXP_CLAMP, EXP_CLAMP))


def field_energy(e_fe, params):
    """Field-induced barrier modulation W_e in joules.

    W_e = q * (E_fe - E_off) * d_e; the q converts the volt-scale product
    into an energy comparable to the switching barrier.
    """
    return Q_E * (np.asarray(e_fe) - params.E_off) * params.d_e


def transition_rates(e_fe, params) -> TransitionRates:
    """Switching attempt rates at ferroelectric field *e_fe* (V/m).

    k_down/up = (k_B T / h) * exp((-W_b +/- W_e) / (k_B T)), with the
    prefactor folded into the clamped exponent so both rates stay finite.
    """
    e_fe = np.asarray(e_fe, dtype=np.float64)
    if not np.all(np.isfinite(e_fe)):
        raise ValueError("transition_rates: non-finite field")
    kt = K_B * params.temperature
    log_nu = np.log(kt / H_PLANCK)
    w_e = field_energy(e_fe, params)
    k_down = np.exp(np.clip(log_nu + (-params.W_b + w_e) / kt, -EXP_CLAMP, EXP_CLAMP))
    k_up = np.exp(np.clip(log_nu + (-params.W_b - w_e) / kt, -EXP_CLAMP, EXP_CLAMP))
    return TransitionRates(k_down, k_up)


def p_steady_state(e_fe, params):
    """Equilibrium up-state probability at a fixed field.

    Fixed point of the rate equation: k_down/(k_down+k_up), evaluated in
    log-space as a logistic of 2*W_e/(k_B T) so it never overflows.
    """
    w_e = field_energy(e_fe, params)
    z = 2.0 * w_e / (K_B * params.temperature)
    return 1.0 / (1.0 + _guarded_exp(-z))


def p_step(p, rates: TransitionRates, dt):
    """Advance the up-state probability by *dt* with frozen rates.

    Exact solution of dp/dt = k_down*(1-p) - k_up*p for constant rates:
    p_eq + (p - p_eq) * exp(-(k_down+k_up)*dt), clipped to [0, 1] against
    round-off.
    """
    if np.any(np.asarray(dt) < 0):
        raise ValueError("p_step: dt must be >= 0")
    k_down, k_up = rates
    s = k_down + k_up
    p = np.asarray(p, dtype=np.float64)
    p_eq = np.where(s > 0.0, k_down / np.where(s > 0.0, s, 1.0), p)
    decay = np.exp(-s * dt)
    return np.clip(p_eq + (p - p_eq) * decay, 0.0, 1.0)


def polarization(p, params):
    """Device polarization P = P_s * (2p - 1), C/m^2."""
    return params.P_s * (2.0 * np.asarray(p) - 1.0)


def c_layer(eps_r, t):
    """Parallel-plate capacitance per area of a dielectric layer, F/m^2."""
    eps_r = np.asarray(eps_r, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if np.any(t <= 0.0) or np.any(eps_r <= 0.0):
        raise ValueError("c_layer: eps_r and t must be > 0")
    return EPS_0 * eps_r / t


def c_depl_branches(e_fe, params):
    """Per-direction depletion capacitances (C_down, C_up), F/m^2.

    Polysilicon-depletion-style expression with both permittivities read as
    absolute: eps0*eps_depl*q*N / |eps0*eps_fe*E_fe +/- Q_fix|, "+" on the
    down branch. The denominator magnitude is floored at DENOM_MIN.
    """
    e_fe = np.asarray(e_fe, dtype=np.float64)
    field_term = EPS_0 * params.eps_fe * e_fe
    d_dn = np.maximum(np.abs(field_term + params.Q_fix_depl), DENOM_MIN)
    d_up = np.maximum(np.abs(field_term - params.Q_fix_depl), DENOM_MIN)
    k_dn = EPS_0 * params.eps_depl * Q_E * params.N_depl_dn
    k_up = EPS_0 * params.eps_depl * Q_E * params.N_depl_up
    return k_dn / d_dn, k_up / d_up


def c_depl(p, e_fe, params):
    """Depletion capacitance per area, blended over polarization state.

    C = p * C_down + (1-p) * C_up.
    """
    c_dn, c_up = c_depl_branches(e_fe, params)
    p = np.asarray(p)
    return p * c_dn + (1.0 - p) * c_up


def phi_depl(p, v_fe, params, e_fe_for_cdepl):
    """Depolarization potential across the depletion element, volts.

    (2*P_s*p - P_s + C_fe*V_fe) / C_depl with all quantities per unit area;
    C_depl is evaluated at (p, *e_fe_for_cdepl*).
    """
    c_fe = c_layer(params.eps_fe, params.t_fe)
    charge = params.P_s * (2.0 * np.asarray(p) - 1.0) + c_fe * np.asarray(v_fe)
    return charge / c_depl(p, e_fe_for_cdepl, params)


def j_fn(e_int, params):
    """Fowler-Nordheim tunneling current density through the interface, A/m^2.

    Evaluated on the field magnitude and returned with the sign of *e_int*;
    exactly zero at zero field.
    """
    e_int = np.asarray(e_int, dtype=np.float64)
    e_abs = np.abs(e_int)
    prefactor = Q_E * Q_E / (8.0 * np.pi * H_PLANCK * params.phi_b_int)
    b = (8.0 * np.pi * np.sqrt(2.0 * M_0 * params.m_eff_int)
         * (Q_E * params.phi_b_int) ** 1.5 / (3.0 * H_PLANCK * Q_E))
    expo = _guarded_exp(-b / np.maximum(e_abs, 1e-280))
    return np.sign(e_int) * prefactor * e_abs * e_abs * expo


def j_pf(e_leak, params):
    """Poole-Frenkel conduction current density in the ferroelectric, A/m^2.

    q*mu*N_fe*E * exp(-q*(phi_tr - sqrt(q*E/(pi*eps0*eps_fe))) / (k_B T)),
    evaluated on |E| and signed by *e_leak*; exactly zero at zero field.
    """
    e_leak = np.asarray(e_leak, dtype=np.float64)
    e_abs = np.abs(e_leak)
    kt = K_B * params.temperature
    barrier_drop = np.sqrt(Q_E * e_abs / (np.pi * EPS_0 * params.eps_fe))
    expo = _guarded_exp(-Q_E * (params.phi_tr_fe - barrier_drop) / kt)
    return np.sign(e_leak) * Q_E * params.mu_fe * params.N_fe * e_abs * expo
