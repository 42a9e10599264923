"""Compiled depth-first search behind the reducibility search.

Same pruning rules as the Python ordered search in ``reduce``; the state is
kept in flat buffers so the whole search runs without leaving the kernel.
"""

import numpy as np
from numba import njit

DEP_TOL = 1e-9


@njit(cache=True)
def _row(D, N, l, k):
    g = D[l].copy()
    if k > 0:
        g[N - 2 + k] += 1.0
    return g


@njit(cache=True)
def _leaf(D, tau, N, m, tol, q, src, tgt):
    """Least-squares check of a full assignment; returns (ok, residual)."""
    L, n = D.shape
    G = np.zeros((L, n))
    used = 0
    for l in range(L):
        G[l] = _row(D, N, l, q[l])
        if q[l] > used:
            used = q[l]
    sol = np.linalg.lstsq(G, tau)[0]
    sol = sol + np.linalg.lstsq(G, tau - G @ sol)[0]
    eta = np.zeros(N)
    for j in range(1, N):
        eta[j] = sol[j - 1]
    for k in range(1, used + 1):
        acc = 0.0
        cnt = 0
        for l in range(L):
            if q[l] == k:
                acc += tau[l] - eta[tgt[l]] + eta[src[l]]
                cnt += 1
        sol[N - 2 + k] = acc / cnt
    res = 0.0
    for l in range(L):
        r = abs(G[l] @ sol - tau[l])
        if r > res:
            res = r
    if res > tol:
        return False, res
    for k in range(1, used + 1):
        if sol[N - 2 + k] <= 0.0:
            return False, res
        for k2 in range(1, k):
            if abs(sol[N - 2 + k] - sol[N - 2 + k2]) <= 1e-9:
                return False, res
    return True, res


@njit(cache=True)
def _theta_cut(Q, M, r, v, N, used, tol, cut):
    """Bound (>0) when the fixed rows force a bad theta, else -1."""
    if used == 0 or r == 0:
        return -1.0
    base = N - 1
    for k in range(used):
        nn = 0.0
        for i in range(r):
            nn += Q[i, base + k] ** 2
        if abs(1.0 - nn) < 1e-9:
            c1 = 0.0
            for jj in range(r):
                acc = 0.0
                for i in range(jj, r):
                    acc += Q[i, base + k] * M[i, jj]
                c1 += abs(acc)
            if v[base + k] + cut * c1 <= 0.0:
                return -v[base + k] / c1 if c1 > 0 else np.inf
    for a in range(used):
        for b in range(a + 1, used):
            nn = 0.0
            for i in range(r):
                nn += (Q[i, base + a] - Q[i, base + b]) ** 2
            if abs(2.0 - nn) < 1e-9:
                c1 = 0.0
                for jj in range(r):
                    acc = 0.0
                    for i in range(jj, r):
                        acc += (Q[i, base + a] - Q[i, base + b]) * M[i, jj]
                    c1 += abs(acc)
                if abs(v[base + a] - v[base + b]) + tol * c1 <= 1e-9:
                    # same branch as the merged labelling, which is searched anyway
                    return np.inf
    return -1.0


@njit(cache=True)
def _sparse(N, src, tgt, l, k, idx, coef):
    """Nonzeros of row (l, k) into ``idx``/``coef``; returns their count."""
    cnt = 0
    t, s = tgt[l], src[l]
    if t != s:
        if t > 0:
            idx[cnt] = t - 1
            coef[cnt] = 1.0
            cnt += 1
        if s > 0:
            idx[cnt] = s - 1
            coef[cnt] = -1.0
            cnt += 1
    if k > 0:
        idx[cnt] = N - 2 + k
        coef[cnt] = 1.0
        cnt += 1
    return cnt


@njit(cache=True)
def _classify(tau, N, src, tgt, Q, M, r, v, l, k, idx, coef, gq):
    """(dependent, bound, signed_defect, c1, nr) for row (l, k).

    Leaves the projection coefficients in ``gq[:r]``.
    """
    cnt = _sparse(N, src, tgt, l, k, idx, coef)
    gg = 0.0
    signed = tau[l]
    for a in range(cnt):
        gg += coef[a] * coef[a]
        signed -= coef[a] * v[idx[a]]
    qq = 0.0
    for i in range(r):
        acc = 0.0
        for a in range(cnt):
            acc += coef[a] * Q[i, idx[a]]
        gq[i] = acc
        qq += acc * acc
    nr2 = gg - qq
    if nr2 > 1e-8:
        return False, 0.0, signed, 0.0, np.sqrt(nr2)
    # close to the span: recompute the distance without cancellation
    n = Q.shape[1]
    w2 = 0.0
    for c in range(n):
        x = 0.0
        for a in range(cnt):
            if idx[a] == c:
                x += coef[a]
        for i in range(r):
            x -= gq[i] * Q[i, c]
        w2 += x * x
    nr = np.sqrt(w2)
    if nr > DEP_TOL:
        return False, 0.0, signed, 0.0, nr
    c1 = 0.0
    for jj in range(r):
        acc = 0.0
        for i in range(jj, r):
            acc += gq[i] * M[i, jj]
        c1 += abs(acc)
    return True, abs(signed) / (1.0 + c1), signed, c1, nr


@njit(cache=True)
def _coincident(D, tau, N, q, src, tgt):
    """True if a full assignment fits but two of its theta values agree."""
    L, n = D.shape
    G = np.zeros((L, n))
    for l in range(L):
        G[l] = _row(D, N, l, q[l])
    sol = np.linalg.lstsq(G, tau)[0]
    for a in range(N - 1, n):
        for b in range(N - 1, a):
            if abs(sol[a] - sol[b]) <= 1e-9:
                return True
    return False


@njit(cache=True)
def refute(D, tau, N, m, tol, cut, src, tgt, max_nodes):
    """Most-constrained-first search.

    Branches are dropped once a certified distance bound exceeds ``cut``;
    below that they are followed to the leaves, so ``best`` is sharp there.
    Returns ``(status, best, nodes, q)`` with status 1 = feasible
    assignment in ``q``, 0 = exhausted, -1 = node budget hit.  Unless
    feasible, ``q`` is the closest leaf seen (all -1 if none was reached).
    """
    L, n = D.shape
    Q = np.zeros((n + 1, n))
    M = np.zeros((n + 1, n + 1))
    vs = np.zeros((L + 1, n))
    q = -np.ones(L, np.int64)
    r_at = np.zeros(L + 1, np.int64)
    used_at = np.zeros(L + 1, np.int64)
    edge_at = np.zeros(L + 1, np.int64)
    nopt = np.zeros(L + 1, np.int64)
    ptr = np.zeros(L + 1, np.int64)
    optk = np.zeros((L + 1, m + 2), np.int64)
    best = np.inf
    nodes = 0
    depth = 0
    entering = True
    kopts = np.zeros(m + 2, np.int64)
    idx = np.zeros(3, np.int64)
    coef = np.zeros(3)
    gq = np.zeros(n + 1)
    path = np.zeros(L + 1)
    bestq = -np.ones(L, np.int64)
    while True:
        if entering:
            nodes += 1
            if nodes > max_nodes:
                return -1, best, nodes, bestq
            r = r_at[depth]
            used = used_at[depth]
            v = vs[depth]
            entering = False
            nopt[depth] = 0
            ptr[depth] = 0
            if depth == L:
                ok, res = _leaf(D, tau, N, m, tol, q, src, tgt)
                if ok:
                    return 1, best, nodes, q
                if res > tol or not _coincident(D, tau, N, q, src, tgt):
                    if path[L] < best:
                        best = path[L]
                        bestq[:] = q
            else:
                tc = _theta_cut(Q, M, r, v, N, used, tol, cut)
                if tc > 0:
                    if tc < best:
                        best = tc
                else:
                    best_edge = -1
                    best_count = m + 3
                    dead_bound = -1.0
                    for l in range(L):
                        if q[l] >= 0:
                            continue
                        count = 0
                        minb = np.inf
                        negative = False
                        for k in range(used + 1):
                            dep, bound, signed, c1, nr = _classify(tau, N, src, tgt, Q, M, r, v, l, k, idx, coef, gq)
                            if k == 0 and dep and signed + cut * (1.0 + c1) < 0.0:
                                negative = True
                                minb = -signed / (1.0 + c1)
                                break
                            if dep and bound > cut:
                                if bound < minb:
                                    minb = bound
                            else:
                                kopts[count] = k
                                count += 1
                        if negative:
                            count = 0
                        elif used < m:
                            kopts[count] = used + 1
                            count += 1
                        if count == 0:
                            if minb > dead_bound:
                                dead_bound = minb
                        elif count < best_count:
                            best_count = count
                            best_edge = l
                            for i in range(count):
                                optk[depth, i] = kopts[i]
                    if dead_bound >= 0.0:
                        if dead_bound < best:
                            best = dead_bound
                    else:
                        edge_at[depth] = best_edge
                        nopt[depth] = best_count
                        # bounds of the branch edge's pruned labels
                        for k in range(used + 1):
                            present = False
                            for i in range(best_count):
                                if optk[depth, i] == k:
                                    present = True
                            if not present:
                                dep, bound, signed, c1, nr = _classify(
                                    tau, N, src, tgt, Q, M, r, v, best_edge, k, idx, coef, gq)
                                if bound < best:
                                    best = bound
        # advance to the next option at this depth, backtracking as needed
        while True:
            if depth < L and ptr[depth] < nopt[depth]:
                l = edge_at[depth]
                k = optk[depth, ptr[depth]]
                ptr[depth] += 1
                r = r_at[depth]
                v = vs[depth]
                dep, bound, signed, c1, nr = _classify(tau, N, src, tgt, Q, M, r, v, l, k, idx, coef, gq)
                q[l] = k
                used_next = used_at[depth] if k <= used_at[depth] else k
                path[depth + 1] = path[depth]
                if dep:
                    vs[depth + 1] = v
                    r_at[depth + 1] = r
                    if bound > path[depth + 1]:
                        path[depth + 1] = bound
                else:
                    cnt = _sparse(N, src, tgt, l, k, idx, coef)
                    for c in range(n):
                        Q[r, c] = 0.0
                    for a in range(cnt):
                        Q[r, idx[a]] += coef[a]
                    for i in range(r):
                        for c in range(n):
                            Q[r, c] -= gq[i] * Q[i, c]
                    for c in range(n):
                        Q[r, c] /= nr
                    for jj in range(r):
                        acc = 0.0
                        for i in range(jj, r):
                            acc += gq[i] * M[i, jj]
                        M[r, jj] = -acc / nr
                    M[r, r] = 1.0 / nr
                    vs[depth + 1] = v + signed * Q[r] / nr
                    r_at[depth + 1] = r + 1
                used_at[depth + 1] = used_next
                depth += 1
                entering = True
                break
            if depth == 0:
                return 0, best, nodes, bestq
            depth -= 1
            q[edge_at[depth]] = -1
        continue
