"""Hot numeric loops, numba-compiled when available.

Every public binding in this module has two implementations: a plain-Python
loop version that ``@jitted`` compiles with numba, and a vectorized NumPy
fallback used when ``MFLAB_NO_NUMBA=1`` is set (or numba is missing). The
fallbacks are algorithmically independent where that is cheap, which makes
them useful cross-checks; ``benchmarks/bench_kernels.py`` times the two
paths against each other.

Conventions shared with the rest of the package:

* piecewise-affine activations are passed as ``(knots, seg_a, seg_b)``
  arrays, piece ``j`` covering ``(knots[j-1], knots[j])``;
* ensemble reductions that feed gradients use exact (order-independent)
  summation so particle permutation commutes with integration bit-for-bit;
* step schedules are ``(kind, param, floor)`` with kind 0 a constant and
  kind 1 the power law ``xi(t) = max(t, floor) ** param``.
"""

from __future__ import annotations

import math

import numpy as np

from ._compat import NUMBA_ENABLED, jitted

_INV_SQRT2 = 0.7071067811865476
_INV_SQRT2PI = 0.3989422804014327


@jitted
def _ndtr(x):
    return 0.5 * (1.0 + math.erf(x * _INV_SQRT2))


@jitted
def _npdf(x):
    return math.exp(-0.5 * x * x) * _INV_SQRT2PI


@jitted
def _seg_index(knots, x):
    """Number of knots <= x; the right-continuous piece index."""
    lo = 0
    hi = knots.size
    while lo < hi:
        mid = (lo + hi) // 2
        if knots[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


@jitted
def _pw_eval(knots, seg_a, seg_b, x):
    j = _seg_index(knots, x)
    return seg_a[j] + seg_b[j] * x


@jitted
def _pw_slope(knots, seg_b, x):
    return seg_b[_seg_index(knots, x)]


@jitted
def _exact_sum(arr):
    """Order-independent float sum (Shewchuk partials, correctly rounded)."""
    partials = np.empty(64)
    m = 0
    for k in range(arr.size):
        x = arr[k]
        i = 0
        for j in range(m):
            y = partials[j]
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo != 0.0:
                partials[i] = lo
                i += 1
            x = hi
        partials[i] = x
        m = i + 1
    total = 0.0
    for j in range(m):
        total += partials[j]
    return total


@jitted
def _xi(t, kind, param, floor):
    if kind == 0:
        return param
    tt = t if t > floor else floor
    return tt ** param


# ---------------------------------------------------------------------------
# composite q kernel: q(t1, t2) = E sigma2(t2 * sigma1(t1 * G))
# ---------------------------------------------------------------------------

@jitted
def _q_composite(k1, a1, b1, k2, a2, b2, t1, t2):
    """Exact ``(q, dq/dt1, dq/dt2)`` for piecewise-affine sigma1, sigma2."""
    K1 = k1.size
    K2 = k2.size
    if t1 == 0.0:
        s1v = _pw_eval(k1, a1, b1, 0.0)
        u = t2 * s1v
        qv = _pw_eval(k2, a2, b2, u)
        so = _pw_slope(k2, b2, u)
        return qv, 0.0, so * s1v

    bps = np.empty(K1 + (K1 + 1) * K2 + 1)
    nb = 0
    for i in range(K1):
        bps[nb] = k1[i] / t1
        nb += 1
    if t2 != 0.0:
        for j in range(K1 + 1):
            B = t2 * b1[j] * t1
            if B == 0.0:
                continue
            A = t2 * a1[j]
            if j == 0:
                lo_u = -np.inf
            else:
                lo_u = k1[j - 1]
            if j == K1:
                hi_u = np.inf
            else:
                hi_u = k1[j]
            glo = lo_u / t1
            ghi = hi_u / t1
            if glo > ghi:
                glo, ghi = ghi, glo
            for l in range(K2):
                gstar = (k2[l] - A) / B
                if glo < gstar < ghi:
                    bps[nb] = gstar
                    nb += 1
    # insertion sort + in-place dedupe (nb is tiny)
    for i in range(1, nb):
        key = bps[i]
        j = i - 1
        while j >= 0 and bps[j] > key:
            bps[j + 1] = bps[j]
            j -= 1
        bps[j + 1] = key
    clean = bps
    nc = 0
    for i in range(nb):
        if nc == 0:
            clean[nc] = bps[i]
            nc += 1
        else:
            tolr = 1e-14 * (1.0 if abs(bps[i]) < 1.0 else abs(bps[i]))
            if bps[i] - clean[nc - 1] > tolr:
                clean[nc] = bps[i]
                nc += 1

    qv = 0.0
    d1 = 0.0
    d2 = 0.0
    for seg in range(nc + 1):
        if nc == 0:
            lo, hi, p = -np.inf, np.inf, 0.0
        elif seg == 0:
            lo, hi = -np.inf, clean[0]
            p = clean[0] - 1.0
        elif seg == nc:
            lo, hi = clean[nc - 1], np.inf
            p = clean[nc - 1] + 1.0
        else:
            lo, hi = clean[seg - 1], clean[seg]
            p = 0.5 * (lo + hi)
        u1 = t1 * p
        s1v = _pw_eval(k1, a1, b1, u1)
        s1s = _pw_slope(k1, b1, u1)
        m = t2 * s1v
        so = _pw_slope(k2, b2, m)
        val = _pw_eval(k2, a2, b2, m)
        slope = so * t2 * s1s * t1
        av = val - slope * p
        b2c = so * s1s * t1
        a2c = so * s1v - b2c * p
        b1c = so * t2 * s1s
        if lo == -np.inf:
            c_lo, p_lo = 0.0, 0.0
        else:
            c_lo, p_lo = _ndtr(lo), _npdf(lo)
        if hi == np.inf:
            c_hi, p_hi = 1.0, 0.0
        else:
            c_hi, p_hi = _ndtr(hi), _npdf(hi)
        M0 = c_hi - c_lo
        M1 = p_lo - p_hi
        qv += av * M0 + slope * M1
        d2 += a2c * M0 + b2c * M1
        d1 += b1c * M1
    return qv, d1, d2


# ---------------------------------------------------------------------------
# particle-flow Euler chunks (one per ensemble kind)
# ---------------------------------------------------------------------------

@jitted
def euler_pw2_chunk(r, k1, a1, b1, tau_p, tau_m, t0, dt, nsteps,
                    xi_kind, xi_param, xi_floor, grad_mode, fd_h):
    """Radial two-layer flow: q_pm(r) = E sigma(tau_pm * r * G).

    Advances ``r`` in place by ``nsteps`` forward-Euler steps starting at
    time ``t0``. Returns ``(risks, clamped, bad_index)`` with ``risks`` the
    ensemble risk at each step start plus the final state (length
    ``nsteps + 1``); ``bad_index >= 0`` flags a non-finite gradient.
    """
    J = r.size
    kid = np.empty(0)
    id_a = np.zeros(1)
    id_b = np.ones(1)
    risks = np.empty(nsteps + 1)
    lamp = np.empty(nsteps + 1)
    lamm = np.empty(nsteps + 1)
    qp = np.empty(J)
    qm = np.empty(J)
    dqp = np.empty(J)
    dqm = np.empty(J)
    clamped = 0
    for step in range(nsteps + 1):
        for i in range(J):
            if grad_mode == 0:
                qv, g1, _ = _q_composite(kid, id_a, id_b,
                                         k1, a1, b1, tau_p * r[i], 1.0)
                qp[i] = qv
                dqp[i] = tau_p * g1
                qv, g1, _ = _q_composite(kid, id_a, id_b,
                                         k1, a1, b1, tau_m * r[i], 1.0)
                qm[i] = qv
                dqm[i] = tau_m * g1
            else:
                qpp, _, _ = _q_composite(kid, id_a, id_b,
                                         k1, a1, b1, tau_p * (r[i] + fd_h), 1.0)
                qpm, _, _ = _q_composite(kid, id_a, id_b,
                                         k1, a1, b1, tau_p * (r[i] - fd_h), 1.0)
                qv, _, _ = _q_composite(kid, id_a, id_b,
                                        k1, a1, b1, tau_p * r[i], 1.0)
                qp[i] = qv
                dqp[i] = (qpp - qpm) / (2.0 * fd_h)
                qpp, _, _ = _q_composite(kid, id_a, id_b,
                                         k1, a1, b1, tau_m * (r[i] + fd_h), 1.0)
                qpm, _, _ = _q_composite(kid, id_a, id_b,
                                         k1, a1, b1, tau_m * (r[i] - fd_h), 1.0)
                qv, _, _ = _q_composite(kid, id_a, id_b,
                                        k1, a1, b1, tau_m * r[i], 1.0)
                qm[i] = qv
                dqm[i] = (qpp - qpm) / (2.0 * fd_h)
        sp = _exact_sum(qp) / J
        sm = _exact_sum(qm) / J
        risks[step] = 0.5 * (1.0 - sp) ** 2 + 0.5 * (1.0 + sm) ** 2
        lamp[step] = 0.5 * (sp - 1.0)
        lamm[step] = 0.5 * (sm + 1.0)
        if step == nsteps:
            break
        scale = _xi(t0 + step * dt, xi_kind, xi_param, xi_floor) * dt
        for i in range(J):
            g = (-(1.0 - sp) * dqp[i] + (1.0 + sm) * dqm[i])
            if not math.isfinite(g):
                return risks, lamp, lamm, clamped, i
            r[i] -= scale * g
            if r[i] < 0.0:
                r[i] = 0.0
                clamped += 1
    return risks, lamp, lamm, clamped, -1


@jitted
def euler_relu2_chunk(a, b, r1, r2, delta, t0, dt, nsteps,
                      xi_kind, xi_param, xi_floor, grad_mode, fd_h):
    """Four-parameter ReLU flow; closed-form Phi/phi gradients."""
    J = a.size
    tau_p = 1.0 + delta
    tau_m = 1.0 - delta
    risks = np.empty(nsteps + 1)
    lamp = np.empty(nsteps + 1)
    lamm = np.empty(nsteps + 1)
    qp = np.empty(J)
    qm = np.empty(J)
    grads = np.empty((J, 4, 2))
    clamped = 0
    for step in range(nsteps + 1):
        for i in range(J):
            for sgn in range(2):
                tau = tau_p if sgn == 0 else tau_m
                s = math.hypot(tau * r1[i], r2[i])
                if s == 0.0:
                    qv = b[i] if b[i] > 0.0 else 0.0
                    db = 1.0 if b[i] > 0.0 else 0.0
                    dr1 = 0.0
                    dr2 = 0.0
                else:
                    z = b[i] / s
                    cz = _ndtr(z)
                    pz = _npdf(z)
                    qv = b[i] * cz + s * pz
                    db = cz
                    dr1 = pz * tau * tau * r1[i] / s
                    dr2 = pz * r2[i] / s
                if grad_mode == 1:
                    # finite differences of the scalar kernel, same structure
                    db = (_relu_q(tau, r1[i], r2[i], b[i] + fd_h)
                          - _relu_q(tau, r1[i], r2[i], b[i] - fd_h)) / (2.0 * fd_h)
                    dr1 = (_relu_q(tau, r1[i] + fd_h, r2[i], b[i])
                           - _relu_q(tau, r1[i] - fd_h, r2[i], b[i])) / (2.0 * fd_h)
                    dr2 = (_relu_q(tau, r1[i], r2[i] + fd_h, b[i])
                           - _relu_q(tau, r1[i], r2[i] - fd_h, b[i])) / (2.0 * fd_h)
                if sgn == 0:
                    qp[i] = a[i] * qv
                else:
                    qm[i] = a[i] * qv
                grads[i, 0, sgn] = qv
                grads[i, 1, sgn] = a[i] * db
                grads[i, 2, sgn] = a[i] * dr1
                grads[i, 3, sgn] = a[i] * dr2
        sp = _exact_sum(qp) / J
        sm = _exact_sum(qm) / J
        risks[step] = 0.5 * (1.0 - sp) ** 2 + 0.5 * (1.0 + sm) ** 2
        lamp[step] = 0.5 * (sp - 1.0)
        lamm[step] = 0.5 * (sm + 1.0)
        if step == nsteps:
            break
        scale = _xi(t0 + step * dt, xi_kind, xi_param, xi_floor) * dt
        for i in range(J):
            ga = -(1.0 - sp) * grads[i, 0, 0] + (1.0 + sm) * grads[i, 0, 1]
            gb = -(1.0 - sp) * grads[i, 1, 0] + (1.0 + sm) * grads[i, 1, 1]
            g1 = -(1.0 - sp) * grads[i, 2, 0] + (1.0 + sm) * grads[i, 2, 1]
            g2 = -(1.0 - sp) * grads[i, 3, 0] + (1.0 + sm) * grads[i, 3, 1]
            if not (math.isfinite(ga) and math.isfinite(gb)
                    and math.isfinite(g1) and math.isfinite(g2)):
                return risks, lamp, lamm, clamped, i
            a[i] -= scale * ga
            b[i] -= scale * gb
            r1[i] -= scale * g1
            r2[i] -= scale * g2
            if r1[i] < 0.0:
                r1[i] = 0.0
                clamped += 1
            if r2[i] < 0.0:
                r2[i] = 0.0
                clamped += 1
    return risks, lamp, lamm, clamped, -1


@jitted
def _relu_q(tau, r1, r2, b):
    s = math.hypot(tau * r1, r2)
    if s == 0.0:
        return b if b > 0.0 else 0.0
    z = b / s
    return b * _ndtr(z) + s * _npdf(z)


@jitted
def euler_joint3_chunk(r1, r2, k1, a1, b1, k2, a2, b2, tau_p, tau_m,
                       t0, dt, nsteps, xi_kind, xi_param, xi_floor,
                       grad_mode, fd_h):
    """Coupled two-block radial flow with the composite q kernel.

    Also returns per-step ``lambda_+``/``lambda_-`` diagnostics derived from
    the same bracket means that drive the gradient.
    """
    J = r1.size
    risks = np.empty(nsteps + 1)
    lamp = np.empty(nsteps + 1)
    lamm = np.empty(nsteps + 1)
    qp = np.empty(J)
    qm = np.empty(J)
    gp1 = np.empty(J)
    gp2 = np.empty(J)
    gm1 = np.empty(J)
    gm2 = np.empty(J)
    clamped = 0
    for step in range(nsteps + 1):
        for i in range(J):
            if grad_mode == 0:
                qv, d1, d2 = _q_composite(k1, a1, b1, k2, a2, b2,
                                          tau_p * r1[i], tau_p * r2[i])
                qp[i] = qv
                gp1[i] = tau_p * d1
                gp2[i] = tau_p * d2
                qv, d1, d2 = _q_composite(k1, a1, b1, k2, a2, b2,
                                          tau_p * r1[i], tau_m * r2[i])
                qm[i] = qv
                gm1[i] = tau_p * d1
                gm2[i] = tau_m * d2
            else:
                qv, _, _ = _q_composite(k1, a1, b1, k2, a2, b2,
                                        tau_p * r1[i], tau_p * r2[i])
                qp[i] = qv
                qv, _, _ = _q_composite(k1, a1, b1, k2, a2, b2,
                                        tau_p * r1[i], tau_m * r2[i])
                qm[i] = qv
                pp, _, _ = _q_composite(k1, a1, b1, k2, a2, b2,
                                        tau_p * (r1[i] + fd_h), tau_p * r2[i])
                pm, _, _ = _q_composite(k1, a1, b1, k2, a2, b2,
                                        tau_p * (r1[i] - fd_h), tau_p * r2[i])
                gp1[i] = (pp - pm) / (2.0 * fd_h)
                pp, _, _ = _q_composite(k1, a1, b1, k2, a2, b2,
                                        tau_p * r1[i], tau_p * (r2[i] + fd_h))
                pm, _, _ = _q_composite(k1, a1, b1, k2, a2, b2,
                                        tau_p * r1[i], tau_p * (r2[i] - fd_h))
                gp2[i] = (pp - pm) / (2.0 * fd_h)
                pp, _, _ = _q_composite(k1, a1, b1, k2, a2, b2,
                                        tau_p * (r1[i] + fd_h), tau_m * r2[i])
                pm, _, _ = _q_composite(k1, a1, b1, k2, a2, b2,
                                        tau_p * (r1[i] - fd_h), tau_m * r2[i])
                gm1[i] = (pp - pm) / (2.0 * fd_h)
                pp, _, _ = _q_composite(k1, a1, b1, k2, a2, b2,
                                        tau_p * r1[i], tau_m * (r2[i] + fd_h))
                pm, _, _ = _q_composite(k1, a1, b1, k2, a2, b2,
                                        tau_p * r1[i], tau_m * (r2[i] - fd_h))
                gm2[i] = (pp - pm) / (2.0 * fd_h)
        sp = _exact_sum(qp) / J
        sm = _exact_sum(qm) / J
        risks[step] = 0.5 * (1.0 - sp) ** 2 + 0.5 * (1.0 + sm) ** 2
        lamp[step] = 0.5 * (sp - 1.0)
        lamm[step] = 0.5 * (sm + 1.0)
        if step == nsteps:
            break
        scale = _xi(t0 + step * dt, xi_kind, xi_param, xi_floor) * dt
        for i in range(J):
            g1 = -(1.0 - sp) * gp1[i] + (1.0 + sm) * gm1[i]
            g2 = -(1.0 - sp) * gp2[i] + (1.0 + sm) * gm2[i]
            if not (math.isfinite(g1) and math.isfinite(g2)):
                return risks, lamp, lamm, clamped, i
            r1[i] -= scale * g1
            r2[i] -= scale * g2
            if r1[i] < 0.0:
                r1[i] = 0.0
                clamped += 1
            if r2[i] < 0.0:
                r2[i] = 0.0
                clamped += 1
    return risks, lamp, lamm, clamped, -1


# ---------------------------------------------------------------------------
# one-pass SGD chunks
# ---------------------------------------------------------------------------

@jitted
def sgd_two_layer_chunk(W, av, bv, has_ab, k1, a1, b1, X, y, k0,
                        eps, xi_kind, xi_param, xi_floor):
    """One SGD step per row of ``X`` on a single-hidden-layer network;
    parameters updated in place. Unit i computes ``a_i * sigma(<w_i, x> + b_i)``
    (plain ``sigma(<w_i, x>)`` when ``has_ab`` is 0); the prediction is the
    unit mean. Update directions follow the width-scaled convention: no 1/N
    factor on the per-unit gradients."""
    N, d = W.shape
    m = X.shape[0]
    pre = np.empty(N)
    h = np.empty(N)
    for s in range(m):
        k = k0 + s
        x = X[s]
        tot = 0.0
        for i in range(N):
            acc = 0.0
            for jj in range(d):
                acc += W[i, jj] * x[jj]
            if has_ab == 1:
                acc += bv[i]
            pre[i] = acc
            h[i] = _pw_eval(k1, a1, b1, acc)
            tot += av[i] * h[i] if has_ab == 1 else h[i]
        yhat = tot / N
        coef = 2.0 * eps * _xi(k * eps, xi_kind, xi_param, xi_floor) * (y[s] - yhat)
        for i in range(N):
            ds = _pw_slope_conv(k1, b1, pre[i])
            if has_ab == 1:
                a_old = av[i]
                av[i] += coef * h[i]
                bv[i] += coef * a_old * ds
                cw = coef * a_old * ds
            else:
                cw = coef * ds
            if cw != 0.0:
                for jj in range(d):
                    W[i, jj] += cw * x[jj]
    return 0


@jitted
def _pw_slope_conv(knots, seg_b, x):
    """Slope with the saturation convention: exactly at a knot, prefer the
    adjacent piece with the larger-magnitude slope (right derivative at the
    lower kink, left at the upper; derivative 1 at the ReLU corner)."""
    j = _seg_index(knots, x)
    if j > 0 and knots[j - 1] == x:
        left = seg_b[j - 1]
        if abs(left) > abs(seg_b[j]):
            return left
    return seg_b[j]


@jitted
def sgd_three_layer_chunk(W1, a1v, b1v, W2, a2v, b2v, has_ab1, has_ab2,
                          k1, a1, b1, k2, a2, b2, mf_scale, mode,
                          X, y, k0, eps, xi_kind, xi_param, xi_floor):
    """One SGD step per row of ``X`` on a two-hidden-layer network.

    ``mode`` 0 updates first-layer units through their own activation
    gradient only (no chain factor through the second layer); ``mode`` 1 is
    full backpropagation. All forward quantities and the chain vector are
    computed before any parameter moves, matching the simultaneous-update
    iteration.
    """
    N1, d = W1.shape
    N2 = W2.shape[0]
    m = X.shape[0]
    pre1 = np.empty(N1)
    h1 = np.empty(N1)
    z = np.empty(N1)
    pre2 = np.empty(N2)
    h2 = np.empty(N2)
    chain = np.empty(N1)
    for s in range(m):
        k = k0 + s
        x = X[s]
        for i in range(N1):
            acc = 0.0
            for jj in range(d):
                acc += W1[i, jj] * x[jj]
            if has_ab1 == 1:
                acc += b1v[i]
            pre1[i] = acc
            h1[i] = _pw_eval(k1, a1, b1, acc)
            z[i] = a1v[i] * h1[i] if has_ab1 == 1 else h1[i]
            if mf_scale == 1:
                z[i] /= N1
        tot = 0.0
        for mm in range(N2):
            acc = 0.0
            for i in range(N1):
                acc += W2[mm, i] * z[i]
            if has_ab2 == 1:
                acc += b2v[mm]
            pre2[mm] = acc
            h2[mm] = _pw_eval(k2, a2, b2, acc)
            tot += a2v[mm] * h2[mm] if has_ab2 == 1 else h2[mm]
        yhat = tot / N2
        coef = 2.0 * eps * _xi(k * eps, xi_kind, xi_param, xi_floor) * (y[s] - yhat)
        if mode == 1:
            for i in range(N1):
                acc = 0.0
                for mm in range(N2):
                    ds2 = _pw_slope_conv(k2, b2, pre2[mm])
                    amm = a2v[mm] if has_ab2 == 1 else 1.0
                    acc += amm * ds2 * W2[mm, i]
                if mf_scale == 1:
                    acc /= N1
                chain[i] = acc
        # second layer
        for mm in range(N2):
            ds2 = _pw_slope_conv(k2, b2, pre2[mm])
            if has_ab2 == 1:
                a_old = a2v[mm]
                a2v[mm] += coef * h2[mm]
                b2v[mm] += coef * a_old * ds2
                cw = coef * a_old * ds2
            else:
                cw = coef * ds2
            if cw != 0.0:
                for i in range(N1):
                    W2[mm, i] += cw * z[i]
        # first layer
        for i in range(N1):
            ds1 = _pw_slope_conv(k1, b1, pre1[i])
            c = chain[i] if mode == 1 else 1.0
            if has_ab1 == 1:
                a_old = a1v[i]
                a1v[i] += coef * c * h1[i]
                b1v[i] += coef * c * a_old * ds1
                cw = coef * c * a_old * ds1
            else:
                cw = coef * c * ds1
            if cw != 0.0:
                for jj in range(d):
                    W1[i, jj] += cw * x[jj]
    return 0


# ---------------------------------------------------------------------------
# rank-count kernels for the independence statistic
# ---------------------------------------------------------------------------

@jitted
def _c_counts_bit(group_starts, yr, m):
    """Joint dominance counts ``#{beta : X_beta <= X_alpha and
    Y_beta <= Y_alpha}`` for points given in X-sorted order with tie groups.

    ``group_starts`` holds the start index of each equal-X run plus the
    sentinel ``n``; ``yr`` are dense Y ranks in ``1..m``. A Fenwick tree
    over Y ranks gives O(n log n): each tie group is inserted wholesale
    before its members are queried, so mutual ties count in both directions.
    """
    n = yr.size
    tree = np.zeros(m + 1, dtype=np.int64)
    out = np.empty(n, dtype=np.int64)
    for g in range(group_starts.size - 1):
        lo = group_starts[g]
        hi = group_starts[g + 1]
        for p in range(lo, hi):
            j = yr[p]
            while j <= m:
                tree[j] += 1
                j += j & (-j)
        for p in range(lo, hi):
            j = yr[p]
            acc = 0
            while j > 0:
                acc += tree[j]
                j -= j & (-j)
            out[p] = acc
    return out


def _c_counts_numpy(group_starts, yr, m):
    """O(n^2) broadcast fallback for the joint dominance counts."""
    n = yr.size
    gs = np.asarray(group_starts)
    group_of = np.searchsorted(gs, np.arange(n), side="right") - 1
    x_dom = group_of[None, :] <= group_of[:, None]  # X_beta <= X_alpha
    out = np.empty(n, dtype=np.int64)
    chunk = max(1, 2_000_000 // max(n, 1))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        y_dom = yr[None, :] <= yr[lo:hi, None]
        out[lo:hi] = np.sum(x_dom[lo:hi] & y_dom, axis=1)
    return out


c_counts = _c_counts_bit if NUMBA_ENABLED else _c_counts_numpy


@jitted
def _d_stats_perm_bit(a_cnt, b_of_rank, group_starts, yr_rows, m):
    """D statistic for each row of permuted Y ranks (rows in X-sorted order).

    ``a_cnt[p] - 1`` is the a count at position p (fixed across rows),
    ``b_of_rank[r] - 1`` the b count of Y rank r. A, B, C accumulate in
    float64; fine for p-value comparisons at any n.
    """
    P, n = yr_rows.shape
    out = np.empty(P)
    tree = np.zeros(m + 1, dtype=np.int64)
    denom = (float(n) * (n - 1.0) * (n - 2.0) * (n - 3.0) * (n - 4.0))
    for row in range(P):
        for j in range(m + 1):
            tree[j] = 0
        A = 0.0
        B = 0.0
        C = 0.0
        for g in range(group_starts.size - 1):
            lo = group_starts[g]
            hi = group_starts[g + 1]
            for p in range(lo, hi):
                j = yr_rows[row, p]
                while j <= m:
                    tree[j] += 1
                    j += j & (-j)
            for p in range(lo, hi):
                j = yr_rows[row, p]
                acc = 0
                while j > 0:
                    acc += tree[j]
                    j -= j & (-j)
                ca = float(acc - 1)
                aa = float(a_cnt[p] - 1)
                ba = float(b_of_rank[yr_rows[row, p]] - 1)
                A += aa * (aa - 1.0) * ba * (ba - 1.0)
                B += (aa - 1.0) * (ba - 1.0) * ca
                C += ca * (ca - 1.0)
        out[row] = (A - 2.0 * (n - 2.0) * B + (n - 2.0) * (n - 3.0) * C) / denom
    return out


def _d_stats_perm_numpy(a_cnt, b_of_rank, group_starts, yr_rows, m):
    P, n = yr_rows.shape
    out = np.empty(P)
    denom = float(n) * (n - 1.0) * (n - 2.0) * (n - 3.0) * (n - 4.0)
    aa = (a_cnt - 1).astype(float)
    for row in range(P):
        yr = yr_rows[row]
        ca = (_c_counts_numpy(group_starts, yr, m) - 1).astype(float)
        ba = (b_of_rank[yr] - 1).astype(float)
        A = float(np.sum(aa * (aa - 1.0) * ba * (ba - 1.0)))
        B = float(np.sum((aa - 1.0) * (ba - 1.0) * ca))
        C = float(np.sum(ca * (ca - 1.0)))
        out[row] = (A - 2.0 * (n - 2.0) * B + (n - 2.0) * (n - 3.0) * C) / denom
    return out


d_stats_perm = _d_stats_perm_bit if NUMBA_ENABLED else _d_stats_perm_numpy
