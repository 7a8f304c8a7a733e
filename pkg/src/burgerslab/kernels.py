"""Hot path-propagation kernels.

``propagate`` advances a batch of paths in place by exponential Euler steps
and accumulates the path functionals used by the estimators. Two
implementations share one contract:

* ``propagate_loops`` -- numba ``@njit`` loop over paths, then steps;
* ``propagate_vectorized`` -- pure numpy, vectorized over paths.

``propagate`` is bound to one of them by ``BURGERSLAB_BACKEND``. Results agree
to round-off (transcendental functions may differ in the last ulp).

Accumulator columns (see ``ACC_*``), all trapezoid in time on grid
quadratures, so each one is the exact derivative partner of the others:

* ``FK``    int |X|_{L4}^4 ds
* ``L483``  int |X|_{L4}^{8/3} ds
* ``ITO``   sum_n <(dt/gamma) eta_{n+1}, xi_n>, the discrete stochastic
  integral int <eta, dW> that makes the BEL weight exact for this scheme
* ``CUBE``  int <X^3, eta> ds
* ``CUBE_MOMENT``  int s <X^3, eta> ds  (absolute time ``s``)
"""

import numpy as np

from . import rng
from ._accel import USE_NUMBA, njit
from .spectral import BLOWUP_LIMIT

ACC_FK, ACC_L483, ACC_ITO, ACC_CUBE, ACC_CUBE_MOMENT = range(5)
N_ACC = 5
_TWO_THIRDS = 2.0 / 3.0


@njit
def propagate_loops(x, eta, keys, step0, n_steps, dt, t0,
                    decay, drift, noise_std, bel_w,
                    synth, deriv, wq,
                    with_b, with_noise, with_tangent, with_grid,
                    acc, failed, fail_time,
                    rec_start, rec_every, rec_x, rec_eta, rec_acc):
    m, n = x.shape
    g = synth.shape[0]
    n_rec = rec_x.shape[1]
    xi = np.zeros(n)
    u = np.empty(g)
    v = np.zeros(g)
    w = np.empty(g)
    bx = np.zeros(n)
    be = np.zeros(n)
    xn = np.empty(n)
    en = np.zeros(n)
    half = 0.5 * dt
    for p in range(m):
        if failed[p]:
            continue
        key = keys[p]
        q4 = 0.0
        c3 = 0.0
        if with_grid:
            for j in range(g):
                s = 0.0
                for k in range(n):
                    s += synth[j, k] * x[p, k]
                u[j] = s
            if with_tangent:
                for j in range(g):
                    s = 0.0
                    for k in range(n):
                        s += synth[j, k] * eta[p, k]
                    v[j] = s
            for j in range(g):
                u2 = u[j] * u[j]
                q4 += u2 * u2
                c3 += u2 * u[j] * v[j]
            q4 *= wq
            c3 *= wq
        slot = 0
        for i in range(n_steps + 1):
            if i >= rec_start and rec_every > 0 and (i - rec_start) % rec_every == 0 and slot < n_rec:
                for k in range(n):
                    rec_x[p, slot, k] = x[p, k]
                    if with_tangent:
                        rec_eta[p, slot, k] = eta[p, k]
                for a in range(N_ACC):
                    rec_acc[p, slot, a] = acc[p, a]
                slot += 1
            if i == n_steps:
                break
            if with_noise:
                rng.fill_normals(key, step0 + i, xi)
            if with_b:
                for j in range(g):
                    w[j] = u[j] * u[j]
                for k in range(n):
                    s = 0.0
                    for j in range(g):
                        s += deriv[k, j] * w[j]
                    bx[k] = s
                if with_tangent:
                    for j in range(g):
                        w[j] = 2.0 * u[j] * v[j]
                    for k in range(n):
                        s = 0.0
                        for j in range(g):
                            s += deriv[k, j] * w[j]
                        be[k] = s
            bad = False
            ito = 0.0
            for k in range(n):
                val = decay[k] * x[p, k] + drift[k] * bx[k] + noise_std[k] * xi[k]
                xn[k] = val
                if not (abs(val) <= BLOWUP_LIMIT):
                    bad = True
                if with_tangent:
                    ev = decay[k] * eta[p, k] + drift[k] * be[k]
                    en[k] = ev
                    ito += bel_w[k] * ev * xi[k]
                    if not (abs(ev) <= BLOWUP_LIMIT):
                        bad = True
            if bad:
                failed[p] = True
                fail_time[p] = t0 + (i + 1) * dt
                break
            for k in range(n):
                x[p, k] = xn[k]
                if with_tangent:
                    eta[p, k] = en[k]
            if with_tangent:
                acc[p, ACC_ITO] += ito
            if not with_grid:
                continue
            for j in range(g):
                s = 0.0
                for k in range(n):
                    s += synth[j, k] * xn[k]
                u[j] = s
            if with_tangent:
                for j in range(g):
                    s = 0.0
                    for k in range(n):
                        s += synth[j, k] * en[k]
                    v[j] = s
            q4n = 0.0
            c3n = 0.0
            for j in range(g):
                u2 = u[j] * u[j]
                q4n += u2 * u2
                c3n += u2 * u[j] * v[j]
            q4n *= wq
            c3n *= wq
            ta = t0 + i * dt
            tb = t0 + (i + 1) * dt
            acc[p, ACC_FK] += half * (q4 + q4n)
            acc[p, ACC_L483] += half * (q4**_TWO_THIRDS + q4n**_TWO_THIRDS)
            if with_tangent:
                acc[p, ACC_CUBE] += half * (c3 + c3n)
                acc[p, ACC_CUBE_MOMENT] += half * (ta * c3 + tb * c3n)
            q4 = q4n
            c3 = c3n


def propagate_vectorized(x, eta, keys, step0, n_steps, dt, t0,
                         decay, drift, noise_std, bel_w,
                         synth, deriv, wq,
                         with_b, with_noise, with_tangent, with_grid,
                         acc, failed, fail_time,
                         rec_start, rec_every, rec_x, rec_eta, rec_acc):
    m, n = x.shape
    n_rec = rec_x.shape[1]
    live = np.flatnonzero(~failed)
    xl = x[live]
    el = eta[live] if with_tangent else None
    kl = keys[live]
    al = acc[live]
    alive = np.ones(live.size, dtype=bool)
    half = 0.5 * dt

    def quantities(xs, es):
        if not with_grid:
            return None, 0.0, 0.0
        u = xs @ synth.T
        u2 = u * u
        q4 = wq * np.sum(u2 * u2, axis=1)
        c3 = wq * np.sum(u2 * u * (es @ synth.T), axis=1) if with_tangent else None
        return u, q4, c3

    u, q4, c3 = quantities(xl, el)
    slot = 0
    for i in range(n_steps + 1):
        if i >= rec_start and rec_every > 0 and (i - rec_start) % rec_every == 0 and slot < n_rec:
            idx = live[alive]
            rec_x[idx, slot] = xl[alive]
            if with_tangent:
                rec_eta[idx, slot] = el[alive]
            rec_acc[idx, slot] = al[alive]
            slot += 1
        if i == n_steps:
            break
        xi = rng.normals_batch(kl, step0 + i, n) if with_noise else 0.0
        if with_b:
            bx = (u * u) @ deriv.T
            xn = decay * xl + drift * bx + noise_std * xi
        else:
            xn = decay * xl + noise_std * xi
        bad = ~np.all(np.abs(xn) <= BLOWUP_LIMIT, axis=1)
        if with_tangent:
            if with_b:
                be = (2.0 * u * (el @ synth.T)) @ deriv.T
                en = decay * el + drift * be
            else:
                en = decay * el
            ito = np.sum(bel_w * en * xi, axis=1)
            bad |= ~np.all(np.abs(en) <= BLOWUP_LIMIT, axis=1)
        newly = bad & alive
        if np.any(newly):
            failed[live[newly]] = True
            fail_time[live[newly]] = t0 + (i + 1) * dt
            alive &= ~bad
        keep = alive[:, None]
        xl = np.where(keep, xn, xl)
        if with_tangent:
            el = np.where(keep, en, el)
        u, q4n, c3n = quantities(xl, el)
        ta = t0 + i * dt
        tb = t0 + (i + 1) * dt
        step = np.zeros_like(al)
        if with_grid:
            step[:, ACC_FK] = half * (q4 + q4n)
            step[:, ACC_L483] = half * (q4**_TWO_THIRDS + q4n**_TWO_THIRDS)
        if with_tangent:
            step[:, ACC_ITO] = ito
            if with_grid:
                step[:, ACC_CUBE] = half * (c3 + c3n)
                step[:, ACC_CUBE_MOMENT] = half * (ta * c3 + tb * c3n)
        al = al + np.where(keep, step, 0.0)
        q4, c3 = q4n, c3n
    x[live] = xl
    if with_tangent:
        eta[live] = el
    acc[live] = al


propagate = propagate_loops if USE_NUMBA else propagate_vectorized
