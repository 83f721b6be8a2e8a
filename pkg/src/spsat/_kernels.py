"""Compiled inner loops for message passing and population dynamics.

Layout conventions shared by every kernel:

* directed edge ``e`` pairs variable ``edge_var[e]`` with clause ``e // K``
  at slot ``e % K``; there are E = K*M edges;
* surveys are (E, 3) rows ``(frozen_true, unfrozen, frozen_false)``,
  beliefs are (E, 2) rows ``(p_true, p_false)``;
* ``negs[e]`` is 1 when the literal is negated;
* ``var_ptr``/``var_edges`` is the CSR edge list grouped by variable.

A clause-to-variable survey warning with forcing weight w is
``(w, 1-w, 0)`` toward the satisfying side of the receiving literal, where
w is the product over the K-1 sender slots of the sender's probability of
being frozen at its clause-violating value.  Folding warnings at a
variable multiplies, per warning, the three accumulators

    a: true-side mass   (1   if the warning points true, else 1-w)
    b: unfrozen mass    (1-w always)
    c: false-side mass  (1-w if the warning points true, else 1)

and reads off the fold as ``(a-b, b, c-b)``, which equals the three-vector
product rule with mixed true/false mass dropped.  Norms are accumulated as
``b + ((a-b) + (c-b))`` so that swapping the true/false components leaves
the float result bit-identical (gauge-flip exactness).

Belief warnings use q, the product of the senders' probabilities of taking
their violating value: ``paper`` mode weights the satisfying/other side
(1+q)/2 vs (1-q)/2, ``uniform`` mode weights them 1 vs 1-q (sum-product
for the uniform measure over satisfying assignments; the normalization
constant cancels in the edge fold).
"""

from __future__ import annotations

import numpy as np
from numba import njit

MODE_PAPER = 0
MODE_UNIFORM = 1


# ---------------------------------------------------------------------------
# Survey propagation sweeps
# ---------------------------------------------------------------------------

@njit(cache=True)
def sp_sweep_seq(s, negs, edge_var, var_ptr, var_edges, order, arity, damping):
    """One in-place pass over ``order``; returns (max L1 change, bad edge)."""
    res = 0.0
    for n in range(order.shape[0]):
        e = order[n]
        i = edge_var[e]
        c = e // arity
        pa = 1.0
        pb = 1.0
        pc = 1.0
        for t in range(var_ptr[i], var_ptr[i + 1]):
            e2 = var_edges[t]
            c2 = e2 // arity
            if c2 == c:
                continue
            base = c2 * arity
            w = 1.0
            for k in range(arity):
                ee = base + k
                if ee == e2:
                    continue
                w *= s[ee, 2 - 2 * negs[ee]]
            nf = float(negs[e2])
            pb *= 1.0 - w
            pa *= 1.0 - nf * w
            pc *= 1.0 - (1.0 - nf) * w
        st = pa - pb
        sf = pc - pb
        si = pb
        norm = si + (st + sf)
        if norm <= 0.0:
            return res, e
        st /= norm
        si /= norm
        sf /= norm
        if damping > 0.0:
            st = damping * s[e, 0] + (1.0 - damping) * st
            si = damping * s[e, 1] + (1.0 - damping) * si
            sf = damping * s[e, 2] + (1.0 - damping) * sf
        d = abs(st - s[e, 0]) + abs(si - s[e, 1]) + abs(sf - s[e, 2])
        if d > res:
            res = d
        s[e, 0] = st
        s[e, 1] = si
        s[e, 2] = sf
    return res, np.int64(-1)


@njit(cache=True)
def sp_clause_pass(s, negs, arity, w_edge):
    """Forcing weight w of the warning along every edge (cavity product)."""
    m = s.shape[0] // arity
    for c in range(m):
        base = c * arity
        run = 1.0
        for k in range(arity):
            e = base + k
            w_edge[e] = run
            run *= s[e, 2 - 2 * negs[e]]
        run = 1.0
        for k in range(arity - 1, -1, -1):
            e = base + k
            w_edge[e] *= run
            run *= s[e, 2 - 2 * negs[e]]


@njit(cache=True)
def sp_var_pass(s, s_new, w_edge, negs, var_ptr, var_edges,
                pref_a, pref_b, pref_c, damping):
    """Cavity folds for all edges from precomputed warning weights."""
    n_vars = var_ptr.shape[0] - 1
    res = 0.0
    for i in range(n_vars):
        lo = var_ptr[i]
        hi = var_ptr[i + 1]
        ra = 1.0
        rb = 1.0
        rc = 1.0
        for t in range(lo, hi):
            e = var_edges[t]
            pref_a[t] = ra
            pref_b[t] = rb
            pref_c[t] = rc
            w = w_edge[e]
            nf = float(negs[e])
            rb *= 1.0 - w
            ra *= 1.0 - nf * w
            rc *= 1.0 - (1.0 - nf) * w
        ra = 1.0
        rb = 1.0
        rc = 1.0
        for t in range(hi - 1, lo - 1, -1):
            e = var_edges[t]
            pa = pref_a[t] * ra
            pb = pref_b[t] * rb
            pc = pref_c[t] * rc
            w = w_edge[e]
            nf = float(negs[e])
            rb *= 1.0 - w
            ra *= 1.0 - nf * w
            rc *= 1.0 - (1.0 - nf) * w
            st = pa - pb
            sf = pc - pb
            si = pb
            norm = si + (st + sf)
            if norm <= 0.0:
                return 2.0, e
            st /= norm
            si /= norm
            sf /= norm
            if damping > 0.0:
                st = damping * s[e, 0] + (1.0 - damping) * st
                si = damping * s[e, 1] + (1.0 - damping) * si
                sf = damping * s[e, 2] + (1.0 - damping) * sf
            d = abs(st - s[e, 0]) + abs(si - s[e, 1]) + abs(sf - s[e, 2])
            if d > res:
                res = d
            s_new[e, 0] = st
            s_new[e, 1] = si
            s_new[e, 2] = sf
    return res, np.int64(-1)


@njit(cache=True)
def sp_site_norms(s, negs, edge_var, var_ptr, var_edges, arity, w_edge, out):
    """Norm of the full (no-exclusion) warning fold at every variable.

    Variables with no clauses get norm 1 (empty fold is the neutral
    all-unfrozen element).
    """
    sp_clause_pass(s, negs, arity, w_edge)
    n_vars = var_ptr.shape[0] - 1
    bad = np.int64(-1)
    for i in range(n_vars):
        pa = 1.0
        pb = 1.0
        pc = 1.0
        for t in range(var_ptr[i], var_ptr[i + 1]):
            e = var_edges[t]
            w = w_edge[e]
            nf = float(negs[e])
            pb *= 1.0 - w
            pa *= 1.0 - nf * w
            pc *= 1.0 - (1.0 - nf) * w
        norm = pb + ((pa - pb) + (pc - pb))
        out[i] = norm
        if norm <= 0.0 and bad < 0:
            bad = i
    return bad


# ---------------------------------------------------------------------------
# Belief propagation sweeps
# ---------------------------------------------------------------------------

@njit(cache=True)
def bp_sweep_seq(p, negs, edge_var, var_ptr, var_edges, order, arity, mode, damping):
    res = 0.0
    for n in range(order.shape[0]):
        e = order[n]
        i = edge_var[e]
        c = e // arity
        pt = 1.0
        pf = 1.0
        for t in range(var_ptr[i], var_ptr[i + 1]):
            e2 = var_edges[t]
            c2 = e2 // arity
            if c2 == c:
                continue
            base = c2 * arity
            q = 1.0
            for k in range(arity):
                ee = base + k
                if ee == e2:
                    continue
                if negs[ee]:
                    q *= p[ee, 0]
                else:
                    q *= p[ee, 1]
            if mode == MODE_PAPER:
                hi = 0.5 * (1.0 + q)
                lo = 0.5 * (1.0 - q)
            else:
                hi = 1.0
                lo = 1.0 - q
            if negs[e2]:
                pt *= lo
                pf *= hi
            else:
                pt *= hi
                pf *= lo
        norm = pt + pf
        if norm <= 0.0:
            return res, e
        pt /= norm
        pf /= norm
        if damping > 0.0:
            pt = damping * p[e, 0] + (1.0 - damping) * pt
            pf = damping * p[e, 1] + (1.0 - damping) * pf
        d = abs(pt - p[e, 0])
        df = abs(pf - p[e, 1])
        if df > d:
            d = df
        if d > res:
            res = d
        p[e, 0] = pt
        p[e, 1] = pf
    return res, np.int64(-1)


@njit(cache=True)
def bp_clause_pass(p, negs, arity, q_edge):
    """Cavity violating-product q for the warning along every edge."""
    m = p.shape[0] // arity
    for c in range(m):
        base = c * arity
        run = 1.0
        for k in range(arity):
            e = base + k
            q_edge[e] = run
            if negs[e]:
                run *= p[e, 0]
            else:
                run *= p[e, 1]
        run = 1.0
        for k in range(arity - 1, -1, -1):
            e = base + k
            q_edge[e] *= run
            if negs[e]:
                run *= p[e, 0]
            else:
                run *= p[e, 1]


@njit(cache=True)
def bp_var_pass(p, p_new, q_edge, negs, var_ptr, var_edges,
                pref_t, pref_f, mode, damping):
    n_vars = var_ptr.shape[0] - 1
    res = 0.0
    for i in range(n_vars):
        lo_t = var_ptr[i]
        hi_t = var_ptr[i + 1]
        rt = 1.0
        rf = 1.0
        for t in range(lo_t, hi_t):
            e = var_edges[t]
            pref_t[t] = rt
            pref_f[t] = rf
            q = q_edge[e]
            if mode == MODE_PAPER:
                hi = 0.5 * (1.0 + q)
                lo = 0.5 * (1.0 - q)
            else:
                hi = 1.0
                lo = 1.0 - q
            if negs[e]:
                rt *= lo
                rf *= hi
            else:
                rt *= hi
                rf *= lo
        rt = 1.0
        rf = 1.0
        for t in range(hi_t - 1, lo_t - 1, -1):
            e = var_edges[t]
            pt = pref_t[t] * rt
            pf = pref_f[t] * rf
            q = q_edge[e]
            if mode == MODE_PAPER:
                hi = 0.5 * (1.0 + q)
                lo = 0.5 * (1.0 - q)
            else:
                hi = 1.0
                lo = 1.0 - q
            if negs[e]:
                rt *= lo
                rf *= hi
            else:
                rt *= hi
                rf *= lo
            norm = pt + pf
            if norm <= 0.0:
                return 1.0, e
            pt /= norm
            pf /= norm
            if damping > 0.0:
                pt = damping * p[e, 0] + (1.0 - damping) * pt
                pf = damping * p[e, 1] + (1.0 - damping) * pf
            d = abs(pt - p[e, 0])
            df = abs(pf - p[e, 1])
            if df > d:
                d = df
            if d > res:
                res = d
            p_new[e, 0] = pt
            p_new[e, 1] = pf
    return res, np.int64(-1)


# ---------------------------------------------------------------------------
# Population dynamics
# ---------------------------------------------------------------------------

@njit(cache=True)
def fold_surveys(pool, ptr, u_idx, signs, out, out_norm, bad):
    """Fold pre-drawn clause warnings into new cavity surveys.

    Member ``m`` consumes tape rows ``ptr[m]:ptr[m+1]``.  Row t encodes one
    clause: ``signs[t, 0]`` is the receiving literal's negation flag,
    ``signs[t, 1:]`` the senders', and ``u_idx[t, j]`` is a uniform float
    mapped to sender index ``floor(u * pool_size)``.  ``out[m]`` gets the
    normalized fold, ``out_norm[m]`` the pre-normalization norm, and
    ``bad[m]`` flags a zero-norm contradiction (out is left all-unfrozen).
    Returns the number of contradictions.
    """
    pool_size = pool.shape[0]
    n_senders = u_idx.shape[1]
    n_bad = 0
    for m in range(out.shape[0]):
        pa = 1.0
        pb = 1.0
        pc = 1.0
        for t in range(ptr[m], ptr[m + 1]):
            w = 1.0
            for j in range(n_senders):
                src = np.int64(u_idx[t, j] * pool_size)
                if src >= pool_size:
                    src = pool_size - 1
                w *= pool[src, 2 - 2 * signs[t, j + 1]]
            nf = float(signs[t, 0])
            pb *= 1.0 - w
            pa *= 1.0 - nf * w
            pc *= 1.0 - (1.0 - nf) * w
        st = pa - pb
        sf = pc - pb
        si = pb
        norm = si + (st + sf)
        out_norm[m] = norm
        if norm <= 0.0:
            bad[m] = 1
            n_bad += 1
            out[m, 0] = 0.0
            out[m, 1] = 1.0
            out[m, 2] = 0.0
        else:
            bad[m] = 0
            out[m, 0] = st / norm
            out[m, 1] = si / norm
            out[m, 2] = sf / norm
    return n_bad


@njit(cache=True)
def edge_fold_norms(pool, u_idx, signs, s_idx, out_norm):
    """Norm of survey_product(s, u) for pre-drawn edge samples.

    With the warning pointing to the receiver's satisfying side, the norm
    reduces to 1 - w * s_opposite where s_opposite is the receiver's frozen
    weight on the violating side.
    """
    pool_size = pool.shape[0]
    n_senders = u_idx.shape[1]
    for m in range(out_norm.shape[0]):
        w = 1.0
        for j in range(n_senders):
            src = np.int64(u_idx[m, j] * pool_size)
            if src >= pool_size:
                src = pool_size - 1
            if signs[m, j + 1]:
                w *= pool[src, 0]
            else:
                w *= pool[src, 2]
        src = np.int64(s_idx[m] * pool_size)
        if src >= pool_size:
            src = pool_size - 1
        if signs[m, 0]:
            out_norm[m] = 1.0 - w * pool[src, 0]
        else:
            out_norm[m] = 1.0 - w * pool[src, 2]
