"""Compiled numeric cores shared by the storage models, the per-hour
dispatch steps and the multi-year horizon simulator.

Every public step function and the horizon loops call the same jitted
scalar routines, so scalar and vectorised paths are bit-identical.
"""
from __future__ import annotations

import numpy as np
from numba import njit

HOURS_PER_YEAR = 8760

# Hydrogen mass flow per cell per ampere (Faraday's law, kg/(A*s)).
H2_KG_PER_AMP_SECOND = 1.05e-8
SECONDS_PER_HOUR = 3600.0

# Bisection convergence for the stack current solve (relative on current).
_SOLVE_REL_TOL = 1e-9

OFF_PEAK_CODE = 2  # must match profiles.BAND_CODE[RateBand.OFF_PEAK]

TRACE_COLUMNS = (
    "pv_to_load",
    "charge",
    "removal",
    "delivered",
    "grid_import",
    "curtailed",
    "level",
    "h2_produced",
    "h2_consumed",
)
_NCOL = len(TRACE_COLUMNS)


# ----------------------------------------------------------------------
# Battery cores
# ----------------------------------------------------------------------

@njit(cache=True, nogil=True, inline="always")
def bat_charge(energy, capacity, power_limit, surplus, dt):
    # accepted power bounded by surplus, the E/P power limit and headroom
    accepted = surplus
    if power_limit < accepted:
        accepted = power_limit
    headroom_rate = (capacity - energy) / dt
    if headroom_rate < accepted:
        accepted = headroom_rate
    if accepted < 0.0:
        accepted = 0.0
    return energy + accepted * dt, accepted


@njit(cache=True, nogil=True, inline="always")
def bat_discharge(energy, capacity, power_limit, efficiency, deficit, dt):
    # removal is the rate drawn from storage; delivery loses the efficiency
    removal = deficit / efficiency
    if power_limit < removal:
        removal = power_limit
    available_rate = energy / dt
    if available_rate < removal:
        removal = available_rate
    if removal < 0.0:
        removal = 0.0
    delivered = removal * efficiency
    return energy - removal * dt, removal, delivered


# ----------------------------------------------------------------------
# Stack (electrolyser / fuel cell) cores
# ----------------------------------------------------------------------

@njit(cache=True, nogil=True, inline="always")
def cell_voltage_at(cur_i, cur_v, cur_s, offset, floor_at_zero, current):
    """Piecewise-linear cell voltage at a current, plus the ageing offset.

    ``cur_s`` holds the precomputed per-segment slopes.
    """
    n = cur_i.shape[0]
    k = 0
    while k < n - 2 and current > cur_i[k + 1]:
        k += 1
    v = cur_v[k] + cur_s[k] * (current - cur_i[k]) + offset
    if floor_at_zero and v < 0.0:
        v = 0.0
    return v


@njit(cache=True, nogil=True, inline="always")
def _cell_power(cur_i, cur_v, cur_s, offset, floor_at_zero, current):
    return current * cell_voltage_at(cur_i, cur_v, cur_s, offset, floor_at_zero, current)


@njit(cache=True, nogil=True, inline="always")
def max_cell_power(cur_i, cur_v, cur_s, offset, floor_at_zero, current_limit):
    """Maximum of P(I) = I * V(I) on the curve up to ``current_limit``.

    Returns (max power in W, smallest current achieving it). Segments are
    quadratics in I, so endpoints plus any interior vertex are enough.
    """
    n = cur_i.shape[0]
    hi_all = cur_i[n - 1]
    if current_limit < hi_all:
        hi_all = current_limit
    best_i = cur_i[0]
    best_p = _cell_power(cur_i, cur_v, cur_s, offset, floor_at_zero, best_i)
    for k in range(n - 1):
        a = cur_i[k]
        b = cur_i[k + 1]
        if a >= hi_all:
            break
        if b > hi_all:
            b = hi_all
        slope = cur_s[k]
        intercept = cur_v[k] + offset - slope * cur_i[k]
        # candidates: segment upper end and the interior parabola vertex
        p = b * (intercept + slope * b)
        if floor_at_zero and intercept + slope * b < 0.0:
            p = 0.0
        if p > best_p:
            best_p = p
            best_i = b
        if slope < 0.0:
            vertex = -intercept / (2.0 * slope)
            if a < vertex < b:
                p = vertex * (intercept + slope * vertex)
                if p > best_p:
                    best_p = p
                    best_i = vertex
    return best_p, best_i


@njit(cache=True, nogil=True, inline="always")
def _piece_power(slope, intercept, floor_at_zero, current):
    v = intercept + slope * current
    if floor_at_zero and v < 0.0:
        v = 0.0
    return current * v


@njit(cache=True, nogil=True, inline="always")
def _bisect_piece(slope, intercept, floor_at_zero, lo, hi, p_lo, p_hi, target):
    increasing = p_hi >= p_lo
    for _ in range(200):
        width = hi - lo
        ref = abs(hi)
        if ref < 1e-12:
            ref = 1e-12
        if width <= _SOLVE_REL_TOL * ref:
            break
        mid = 0.5 * (lo + hi)
        pm = _piece_power(slope, intercept, floor_at_zero, mid)
        if increasing:
            if pm < target:
                lo = mid
            else:
                hi = mid
        else:
            if pm > target:
                lo = mid
            else:
                hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True, nogil=True, inline="always")
def _piece_root(slope, intercept, floor_at_zero, x0, x1, p0, p1, target):
    """Root of I * V(I) = target on one monotone quadratic piece.

    An analytic candidate (stable quadratic form, exact for the linear case)
    seeds a tight bracket that bisection then refines to the solve
    tolerance; if the candidate falls outside the piece the whole piece is
    bisected instead.
    """
    disc = intercept * intercept + 4.0 * slope * target
    if disc >= 0.0 and intercept + np.sqrt(disc) > 0.0:
        cand = 2.0 * target / (intercept + np.sqrt(disc))
        if x0 <= cand <= x1:
            delta = 4.0 * _SOLVE_REL_TOL * cand + 1e-12
            lo = cand - delta
            hi = cand + delta
            if lo < x0:
                lo = x0
            if hi > x1:
                hi = x1
            pa = _piece_power(slope, intercept, floor_at_zero, lo)
            pb = _piece_power(slope, intercept, floor_at_zero, hi)
            if (pa - target) * (pb - target) <= 0.0:
                return _bisect_piece(slope, intercept, floor_at_zero, lo, hi, pa, pb, target)
    return _bisect_piece(slope, intercept, floor_at_zero, x0, x1, p0, p1, target)


@njit(cache=True, nogil=True, inline="always")
def solve_stack_current(cur_i, cur_v, cur_s, offset, floor_at_zero, n_cells, power_kw):
    """Smallest per-cell current at which the stack converts ``power_kw``.

    Bisection per monotone quadratic piece to 1e-9 relative tolerance on the
    current; requests beyond the stack maximum saturate at the max-power
    current instead of failing.
    """
    if n_cells <= 0:
        return 0.0
    target = power_kw * 1000.0 / n_cells  # W per cell
    i0 = cur_i[0]
    p0 = _cell_power(cur_i, cur_v, cur_s, offset, floor_at_zero, i0)
    if target <= p0:
        return i0
    p_max, i_pmax = max_cell_power(cur_i, cur_v, cur_s, offset, floor_at_zero, cur_i[-1])
    if target >= p_max:
        return i_pmax
    n = cur_i.shape[0]
    prev_i = i0
    prev_p = p0
    for k in range(n - 1):
        seg_hi = cur_i[k + 1]
        if seg_hi > i_pmax:
            seg_hi = i_pmax
        if seg_hi <= prev_i:
            continue
        slope = cur_s[k]
        intercept = cur_v[k] + offset - slope * cur_i[k]
        # split the segment at its vertex so every piece is monotone
        split = seg_hi
        if slope < 0.0:
            vertex = -intercept / (2.0 * slope)
            if prev_i < vertex < seg_hi:
                split = vertex
        for piece in range(2):
            x0 = prev_i
            x1 = split if piece == 0 else seg_hi
            if x1 <= x0:
                continue
            pa = prev_p
            pb = _piece_power(slope, intercept, floor_at_zero, x1)
            if (pa - target) * (pb - target) <= 0.0:
                return _piece_root(
                    slope, intercept, floor_at_zero, x0, x1, pa, pb, target
                )
            prev_i = x1
            prev_p = pb
        if prev_i >= i_pmax:
            break
    return i_pmax


@njit(cache=True, nogil=True)
def stack_soh(cur_i, cur_v, cur_s, drift, floor_at_zero, op_hours, is_electrolyser):
    """State of health from fresh vs aged maximum cell power."""
    p_fresh, _ = max_cell_power(cur_i, cur_v, cur_s, 0.0, floor_at_zero, cur_i[-1])
    p_aged, _ = max_cell_power(cur_i, cur_v, cur_s, drift * op_hours, floor_at_zero, cur_i[-1])
    if is_electrolyser:
        return p_fresh / p_aged if p_aged > 0.0 else 0.0
    return p_aged / p_fresh if p_fresh > 0.0 else 0.0


@njit(cache=True, nogil=True, inline="always")
def el_step(cur_i, cur_v, cur_s, offset, n_cells, mass, tank_cap, surplus_kw, dt):
    """One electrolyser interval: absorb surplus DC power into tank mass.

    Returns (new mass, consumed kW, produced kg).
    """
    if surplus_kw <= 0.0 or n_cells <= 0:
        return mass, 0.0, 0.0
    headroom = tank_cap - mass
    if headroom <= 0.0:
        return mass, 0.0, 0.0
    # electrolyser voltage is non-decreasing, so cell power peaks at the
    # last curve point
    i_pmax = cur_i[-1]
    v_last = cur_v[-1] + offset
    p_max_cell = i_pmax * v_last
    stack_max_kw = n_cells * p_max_cell / 1000.0
    if stack_max_kw <= 0.0:
        return mass, 0.0, 0.0
    if surplus_kw >= stack_max_kw:
        power = stack_max_kw
        current = i_pmax
    else:
        power = surplus_kw
        current = solve_stack_current(cur_i, cur_v, cur_s, offset, False, n_cells, power)
    flow = H2_KG_PER_AMP_SECOND * current * n_cells * SECONDS_PER_HOUR * dt
    if flow > headroom:
        flow = headroom
        current = headroom / (H2_KG_PER_AMP_SECOND * n_cells * SECONDS_PER_HOUR * dt)
        volts = cell_voltage_at(cur_i, cur_v, cur_s, offset, False, current)
        power = n_cells * current * volts / 1000.0
    if power <= 0.0 or flow <= 0.0:
        return mass, 0.0, 0.0
    return mass + flow, power, flow


@njit(cache=True, nogil=True, inline="always")
def fc_step(cur_i, cur_v, cur_s, offset, n_cells, mass, deficit_kw, dt):
    """One fuel-cell interval: serve a DC deficit from tank mass.

    Returns (new mass, delivered kW, consumed kg).
    """
    if deficit_kw <= 0.0 or n_cells <= 0 or mass <= 0.0:
        return mass, 0.0, 0.0
    i_mass = mass / (H2_KG_PER_AMP_SECOND * n_cells * SECONDS_PER_HOUR * dt)
    i_cap = cur_i[-1]
    if i_mass < i_cap:
        i_cap = i_mass
    p_max_cell, i_pm = max_cell_power(cur_i, cur_v, cur_s, offset, True, i_cap)
    deliverable = n_cells * p_max_cell / 1000.0
    if deliverable <= 0.0:
        return mass, 0.0, 0.0
    if deficit_kw >= deliverable:
        delivered = deliverable
        current = i_pm
    else:
        delivered = deficit_kw
        current = solve_stack_current(cur_i, cur_v, cur_s, offset, True, n_cells, delivered)
    consumed = H2_KG_PER_AMP_SECOND * current * n_cells * SECONDS_PER_HOUR * dt
    if consumed > mass:
        consumed = mass
    return mass - consumed, delivered, consumed


# ----------------------------------------------------------------------
# Hour dispatch cores
# ----------------------------------------------------------------------

@njit(cache=True, nogil=True, inline="always")
def battery_hour(pv, load, eta_inv, energy, capacity, power_limit, efficiency, dt):
    """One conventional-strategy hour for a battery system.

    Returns (energy, pv_to_load, charge, removal, delivered, grid_import,
    curtailed).
    """
    load_dc = load / eta_inv
    pv_to_load = pv if pv < load_dc else load_dc
    charge = 0.0
    removal = 0.0
    delivered = 0.0
    curtailed = 0.0
    surplus = pv - load_dc
    if surplus > 0.0:
        energy, charge = bat_charge(energy, capacity, power_limit, surplus, dt)
        curtailed = surplus - charge
    elif surplus < 0.0:
        energy, removal, delivered = bat_discharge(
            energy, capacity, power_limit, efficiency, -surplus, dt
        )
    grid_import = load - eta_inv * (pv_to_load + delivered)
    if grid_import < 0.0:
        grid_import = 0.0
    return energy, pv_to_load, charge, removal, delivered, grid_import, curtailed


@njit(cache=True, nogil=True, inline="always")
def hess_hour(
    pv,
    load,
    eta_inv,
    el_i,
    el_v,
    el_s,
    el_offset,
    el_n,
    fc_i,
    fc_v,
    fc_s,
    fc_offset,
    fc_n,
    mass,
    tank_cap,
    allow_discharge,
    dt,
):
    """One hour for a hydrogen system; charging is unconditional, discharge
    may be suppressed by the long-duration strategy.

    Returns (mass, pv_to_load, consumed, delivered, grid_import, curtailed,
    h2_produced, h2_consumed).
    """
    load_dc = load / eta_inv
    pv_to_load = pv if pv < load_dc else load_dc
    consumed = 0.0
    delivered = 0.0
    curtailed = 0.0
    h2_in = 0.0
    h2_out = 0.0
    surplus = pv - load_dc
    if surplus > 0.0:
        mass, consumed, h2_in = el_step(
            el_i, el_v, el_s, el_offset, el_n, mass, tank_cap, surplus, dt
        )
        curtailed = surplus - consumed
    elif surplus < 0.0 and allow_discharge:
        mass, delivered, h2_out = fc_step(
            fc_i, fc_v, fc_s, fc_offset, fc_n, mass, -surplus, dt
        )
    grid_import = load - eta_inv * (pv_to_load + delivered)
    if grid_import < 0.0:
        grid_import = 0.0
    return mass, pv_to_load, consumed, delivered, grid_import, curtailed, h2_in, h2_out


# ----------------------------------------------------------------------
# Horizon loops
# ----------------------------------------------------------------------

@njit(cache=True, nogil=True)
def battery_horizon(
    pv,
    load,
    band,
    eta_inv,
    years,
    capacity,
    power_limit,
    efficiency0,
    annual_fade,
    lifetime,
    energy0,
    collect,
):
    """Multi-year battery simulation.

    Returns (import kWh by year and band, curtailed kWh, efficiency in effect
    per year, final stored energy, trace matrix).
    """
    n_hours = years * HOURS_PER_YEAR
    n_trace = n_hours if collect else 0
    trace = np.zeros((n_trace, _NCOL))
    imp_band = np.zeros((years, 3))
    curtailed_total = 0.0
    eff_by_year = np.zeros(years)
    energy = energy0
    eff = efficiency0
    t = 0
    for y in range(years):
        eff_by_year[y] = eff
        for _ in range(HOURS_PER_YEAR):
            energy, ptl, charge, removal, delivered, imp, curt = battery_hour(
                pv[t], load[t], eta_inv, energy, capacity, power_limit, eff, 1.0
            )
            imp_band[y, band[t]] += imp
            curtailed_total += curt
            if collect:
                trace[t, 0] = ptl
                trace[t, 1] = charge
                trace[t, 2] = removal
                trace[t, 3] = delivered
                trace[t, 4] = imp
                trace[t, 5] = curt
                trace[t, 6] = energy
            t += 1
        eff = eff * (1.0 - annual_fade)
        if lifetime > 0 and (y + 1) % lifetime == 0 and (y + 1) < years:
            eff = efficiency0
    return imp_band, curtailed_total, eff_by_year, energy, trace


@njit(cache=True, nogil=True)
def hess_horizon(
    pv,
    load,
    band,
    eta_inv,
    years,
    el_i,
    el_v,
    el_s,
    el_drift,
    el_n,
    fc_i,
    fc_v,
    fc_s,
    fc_drift,
    fc_n,
    tank_cap,
    mass0,
    limit_frac,
    el_reset,
    fc_reset,
    collect,
):
    """Multi-year hydrogen-system simulation.

    ``limit_frac`` holds the active tank-level limit per hour-of-year (zeros
    reproduce the conventional strategy exactly); ``el_reset``/``fc_reset``
    flag the years after which stack operating hours reset to zero.

    Returns (import kWh by year and band, curtailed kWh, electrolyser and
    fuel-cell health samples per year boundary, operating-hour totals, final
    tank mass, trace matrix).
    """
    n_hours = years * HOURS_PER_YEAR
    n_trace = n_hours if collect else 0
    trace = np.zeros((n_trace, _NCOL))
    imp_band = np.zeros((years, 3))
    curtailed_total = 0.0
    soh_el = np.ones(years + 1)
    soh_fc = np.ones(years + 1)
    el_oph = 0.0
    fc_oph = 0.0
    el_oph_total = 0.0
    fc_oph_total = 0.0
    mass = mass0
    t = 0
    for y in range(years):
        for h in range(HOURS_PER_YEAR):
            allow = (mass >= limit_frac[h] * tank_cap) or (band[t] != OFF_PEAK_CODE)
            mass, ptl, consumed, delivered, imp, curt, h2i, h2o = hess_hour(
                pv[t],
                load[t],
                eta_inv,
                el_i,
                el_v,
                el_s,
                el_drift * el_oph,
                el_n,
                fc_i,
                fc_v,
                fc_s,
                fc_drift * fc_oph,
                fc_n,
                mass,
                tank_cap,
                allow,
                1.0,
            )
            if consumed > 0.0:
                el_oph += 1.0
                el_oph_total += 1.0
            if delivered > 0.0:
                fc_oph += 1.0
                fc_oph_total += 1.0
            imp_band[y, band[t]] += imp
            curtailed_total += curt
            if collect:
                trace[t, 0] = ptl
                trace[t, 1] = consumed
                trace[t, 2] = delivered
                trace[t, 3] = delivered
                trace[t, 4] = imp
                trace[t, 5] = curt
                trace[t, 6] = mass
                trace[t, 7] = h2i
                trace[t, 8] = h2o
            t += 1
        yr = y + 1
        if el_reset[yr]:
            el_oph = 0.0
        if fc_reset[yr]:
            fc_oph = 0.0
        soh_el[yr] = stack_soh(el_i, el_v, el_s, el_drift, False, el_oph, True) if el_n > 0 else 1.0
        soh_fc[yr] = stack_soh(fc_i, fc_v, fc_s, fc_drift, True, fc_oph, False) if fc_n > 0 else 1.0
    return (
        imp_band,
        curtailed_total,
        soh_el,
        soh_fc,
        el_oph_total,
        fc_oph_total,
        mass,
        trace,
    )
