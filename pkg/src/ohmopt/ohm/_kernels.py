"""Hot kernels of one OHM iteration.

``propose`` picks a solution, a level and an organization and returns the
candidate position; ``commit`` inserts the evaluated candidate, culls the
worst member, prunes emptied organizations and refreshes the touched centers.
Both exist as numba loop kernels (``*_nb``) and vectorised numpy functions
(``*_np``) with the same signature and the same consumption of the uniform
row ``u``:

    u[0] solution pick      u[3] entailing/excluding coin
    u[1] level pick         u[4] random-target test
    u[2] organization pick  u[5] scalar step draw
    u[6:6+d] random point in the region, u[6+d:6+2d] per-dimension step draws
"""
import math

import numpy as np

from .._backend import njit, pick

SOL_FITNESS = 0
SOL_UNIFORM = 1

ORG_MIN = 0
ORG_MIN_RWS = 1
ORG_MEAN = 2
ORG_MEAN_RWS = 3
ORG_ENT = 4
ORG_EXCL = 5
ORG_EXCL_RWS = 6
ORG_ENT_EXCL = 7
ORG_ENT_EXCL_RWS = 8

CTR_MIN = 0
CTR_WMEAN_SOL = 1
CTR_MEAN_SUB = 2
CTR_WMEAN_SUB = 3
CTR_REGION = 4

MODE_MOVE = 0  # the source itself moves to the new position
MODE_GREEDY = 1  # the source moves only if the new position is better
MODE_OFFSPRING = 2  # the new position is a child competing with the worst member


def u_width(dim):
    return 6 + 2 * dim


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------


@njit
def roulette_nb(w, n, u):
    total = 0.0
    for i in range(n):
        total += w[i]
    if not total > 0.0:
        k = int(u * n)
        return k if k < n else n - 1
    target = u * total
    acc = 0.0
    last = -1
    for i in range(n):
        if w[i] > 0.0:
            acc += w[i]
            last = i
            if acc > target:
                return i
    return last


@njit
def fitness_nb(c, n, out):
    worst = -np.inf
    found = False
    for i in range(n):
        if math.isfinite(c[i]):
            found = True
            if c[i] > worst:
                worst = c[i]
    if not found:
        for i in range(n):
            out[i] = 1.0
        return
    eps = 1e-12 * max(1.0, abs(worst))
    for i in range(n):
        out[i] = worst - c[i] + eps if math.isfinite(c[i]) else 0.0


@njit
def _contains_nb(lo, hi, x):
    for i in range(x.shape[0]):
        if x[i] < lo[i] or x[i] > hi[i]:
            return False
    return True


@njit
def center_nb(level, j, pos, cost, alive, tag, fan, org_off, org_alive, org_lo, org_hi, org_center, metric, out):
    """Write the center of organization ``j`` at ``level`` into ``out``; False if empty."""
    M, d = pos.shape
    L = tag.shape[1]
    g = org_off[level] + j
    if metric == CTR_REGION:
        for i in range(d):
            out[i] = 0.5 * (org_lo[g, i] + org_hi[g, i])
        return True
    idx = np.empty(M, np.int64)
    n = 0
    for s in range(M):
        if alive[s] and tag[s, level] == j:
            idx[n] = s
            n += 1
    if n == 0:
        return False
    deepest = level == L - 1
    if metric == CTR_MIN:
        b = idx[0]
        for k in range(1, n):
            if cost[idx[k]] < cost[b]:
                b = idx[k]
        for i in range(d):
            out[i] = pos[b, i]
        return True
    if metric == CTR_WMEAN_SOL or (metric == CTR_WMEAN_SUB and deepest):
        c = np.empty(n)
        for k in range(n):
            c[k] = cost[idx[k]]
        w = np.empty(n)
        fitness_nb(c, n, w)
        tot = 0.0
        for k in range(n):
            tot += w[k]
        for i in range(d):
            acc = 0.0
            for k in range(n):
                acc += w[k] * pos[idx[k], i]
            out[i] = acc / tot
        return True
    if metric == CTR_MEAN_SUB and deepest:
        for i in range(d):
            acc = 0.0
            for k in range(n):
                acc += pos[idx[k], i]
            out[i] = acc / n
        return True
    # sub-organization metrics above the deepest level
    f = fan[level]
    first = j * f
    coff = org_off[level + 1]
    best = np.full(f, np.inf)
    has = np.zeros(f, np.bool_)
    for k in range(n):
        s = idx[k]
        ch = tag[s, level + 1] - first
        has[ch] = True
        if cost[s] < best[ch]:
            best[ch] = cost[s]
    w = np.zeros(f)
    if metric == CTR_WMEAN_SUB:
        fitness_nb(best, f, w)
        for ch in range(f):
            if not (has[ch] and org_alive[coff + first + ch]):
                w[ch] = 0.0
    else:
        for ch in range(f):
            if has[ch] and org_alive[coff + first + ch]:
                w[ch] = 1.0
    tot = 0.0
    for ch in range(f):
        tot += w[ch]
    if not tot > 0.0:
        for ch in range(f):
            w[ch] = 1.0 if has[ch] else 0.0
        tot = 0.0
        for ch in range(f):
            tot += w[ch]
    for i in range(d):
        acc = 0.0
        for ch in range(f):
            if w[ch] > 0.0:
                acc += w[ch] * org_center[coff + first + ch, i]
        out[i] = acc / tot
    return True


@njit
def select_org_nb(level, src, pos, cost, alive, tag, org_off, org_alive, sel, coin_p, u_pick, u_coin):
    """Return ``(org index at level, fell_back)``."""
    M = cost.shape[0]
    n_org = org_off[level + 1] - org_off[level]
    own = tag[src, level]
    if sel == ORG_ENT:
        return own, False
    if sel == ORG_ENT_EXCL or sel == ORG_ENT_EXCL_RWS:
        if u_coin < coin_p:
            return own, False
        sel = ORG_EXCL if sel == ORG_ENT_EXCL else ORG_EXCL_RWS
    best = np.full(n_org, np.inf)
    tot = np.zeros(n_org)
    cnt = np.zeros(n_org, np.int64)
    for s in range(M):
        if alive[s]:
            j = tag[s, level]
            cnt[j] += 1
            tot[j] += cost[s]
            if cost[s] < best[j]:
                best[j] = cost[s]
    exclude = sel == ORG_EXCL or sel == ORG_EXCL_RWS
    cand = np.empty(n_org, np.int64)
    val = np.empty(n_org)
    m = 0
    for j in range(n_org):
        if cnt[j] > 0 and org_alive[org_off[level] + j] and not (exclude and j == own):
            cand[m] = j
            val[m] = tot[j] / cnt[j] if (sel == ORG_MEAN or sel == ORG_MEAN_RWS) else best[j]
            m += 1
    if m == 0:
        return own, True
    if sel == ORG_MIN_RWS or sel == ORG_MEAN_RWS or sel == ORG_EXCL_RWS:
        w = np.empty(m)
        fitness_nb(val, m, w)
        return cand[roulette_nb(w, m, u_pick)], False
    b = 0
    for k in range(1, m):
        if val[k] < val[b]:
            b = k
    return cand[b], False


@njit
def propose_nb(pos, cost, alive, tag, fan, org_off, org_alive, org_lo, org_hi, org_center,
               lower, upper, eff, sol_sel, org_sel, coin_p, rand_thr, beta, per_dim, u):
    M, d = pos.shape
    L = tag.shape[1]
    idx = np.empty(M, np.int64)
    c = np.empty(M)
    n = 0
    for s in range(M):
        if alive[s]:
            idx[n] = s
            c[n] = cost[s]
            n += 1
    w = np.empty(n)
    if sol_sel == SOL_FITNESS:
        fitness_nb(c, n, w)
    else:
        for k in range(n):
            w[k] = 1.0
    src = idx[roulette_nb(w, n, u[0])]
    level = roulette_nb(eff, L, u[1])
    j, fell_back = select_org_nb(level, src, pos, cost, alive, tag, org_off, org_alive,
                                 org_sel, coin_p, u[2], u[3])
    g = org_off[level] + j
    rnd = u[4] < rand_thr
    child = np.empty(d)
    for i in range(d):
        if rnd:
            t = org_lo[g, i] + u[6 + i] * (org_hi[g, i] - org_lo[g, i])
        else:
            t = org_center[g, i]
        step = u[6 + d + i] if per_dim else u[5]
        x = pos[src, i] + beta * step * (t - pos[src, i])
        child[i] = min(max(x, lower[i]), upper[i])
    return src, level, j, fell_back, rnd, child


@njit
def _org_has_members_nb(level, j, alive, tag):
    for s in range(alive.shape[0]):
        if alive[s] and tag[s, level] == j:
            return True
    return False


@njit
def _refresh_tags_nb(chain, pos, cost, alive, tag, fan, org_off, org_alive, org_lo, org_hi, org_center, metric):
    """Recompute the centers along one tag chain, deepest level first."""
    out = np.empty(pos.shape[1])
    for level in range(chain.shape[0] - 1, -1, -1):
        j = chain[level]
        g = org_off[level] + j
        if org_alive[g]:
            if center_nb(level, j, pos, cost, alive, tag, fan, org_off, org_alive, org_lo, org_hi,
                         org_center, metric, out):
                org_center[g, :] = out


@njit
def _prune_nb(j, alive, tag, fan, org_off, org_alive):
    """Kill deepest organization ``j`` if it is empty and propagate upward."""
    level = tag.shape[1] - 1
    if _org_has_members_nb(level, j, alive, tag):
        return 0
    org_alive[org_off[level] + j] = False
    n = 1
    while level > 0:
        f = fan[level - 1]
        p = j // f
        for ch in range(p * f, p * f + f):
            if org_alive[org_off[level] + ch]:
                return n
        level -= 1
        j = p
        org_alive[org_off[level] + j] = False
        n += 1
    return n


@njit
def _place_nb(child, own, fan, org_off, org_alive, org_lo, org_hi):
    """Deepest organization for ``child``: ``own`` if it contains it, else the
    first live one that does, else ``own`` with its region chain grown."""
    D = fan.shape[0] - 1
    g = org_off[D] + own
    if org_alive[g] and _contains_nb(org_lo[g], org_hi[g], child):
        return own, False
    for j in range(org_off[D + 1] - org_off[D]):
        g = org_off[D] + j
        if org_alive[g] and _contains_nb(org_lo[g], org_hi[g], child):
            return j, False
    j = own
    for level in range(D, -1, -1):
        g = org_off[level] + j
        for i in range(child.shape[0]):
            if child[i] < org_lo[g, i]:
                org_lo[g, i] = child[i]
            if child[i] > org_hi[g, i]:
                org_hi[g, i] = child[i]
        if level > 0:
            j = j // fan[level - 1]
    return own, True


@njit
def cull_worst_nb(pos, cost, alive, tag, fan, org_off, org_alive, org_lo, org_hi, org_center, metric):
    """Remove the highest-cost live solution; returns ``(victim, n_pruned)``."""
    worst = -1
    for s in range(alive.shape[0]):
        if alive[s] and (worst < 0 or cost[s] >= cost[worst]):
            worst = s
    alive[worst] = False
    n = _prune_nb(tag[worst, tag.shape[1] - 1], alive, tag, fan, org_off, org_alive)
    _refresh_tags_nb(tag[worst], pos, cost, alive, tag, fan, org_off, org_alive, org_lo, org_hi,
                     org_center, metric)
    return worst, n


@njit
def commit_nb(child, child_cost, src, pos, cost, alive, tag, fan, org_off, org_alive,
              org_lo, org_hi, org_center, metric, cap, mode):
    """Apply an evaluated move; returns ``(slot, victim, n_pruned, expanded)``, slot -1 if rejected."""
    M, d = pos.shape
    L = tag.shape[1]
    D = L - 1
    worst = -1
    cull = False
    if mode == MODE_OFFSPRING:
        n_alive = 0
        slot = -1
        for s in range(M):
            if alive[s]:
                n_alive += 1
                if worst < 0 or cost[s] >= cost[worst]:
                    worst = s
            elif slot < 0:
                slot = s
        cull = n_alive + 1 > cap
        if cull and not child_cost < cost[worst]:
            return -1, -1, 0, False
    else:
        if mode == MODE_GREEDY and not child_cost < cost[src]:
            return -1, -1, 0, False
        slot = src
    old = tag[src].copy()
    chosen, expanded = _place_nb(child, old[D], fan, org_off, org_alive, org_lo, org_hi)
    for i in range(d):
        pos[slot, i] = child[i]
    cost[slot] = child_cost
    alive[slot] = True
    j = chosen
    for level in range(D, -1, -1):
        tag[slot, level] = j
        if level > 0:
            j = j // fan[level - 1]
    victim = -1
    n_pruned = 0
    if cull:
        victim = worst
        alive[victim] = False
        n_pruned = _prune_nb(tag[victim, D], alive, tag, fan, org_off, org_alive)
        _refresh_tags_nb(tag[victim], pos, cost, alive, tag, fan, org_off, org_alive, org_lo, org_hi,
                         org_center, metric)
    elif mode != MODE_OFFSPRING and old[D] != chosen:
        n_pruned = _prune_nb(old[D], alive, tag, fan, org_off, org_alive)
        _refresh_tags_nb(old, pos, cost, alive, tag, fan, org_off, org_alive, org_lo, org_hi,
                         org_center, metric)
    _refresh_tags_nb(tag[slot], pos, cost, alive, tag, fan, org_off, org_alive, org_lo, org_hi,
                     org_center, metric)
    return slot, victim, n_pruned, expanded


# ---------------------------------------------------------------------------
# numpy twins
# ---------------------------------------------------------------------------


def roulette_np(w, n, u):
    w = np.asarray(w[:n], dtype=np.float64)
    cum = np.cumsum(w)
    total = cum[-1] if n else 0.0
    if not total > 0.0:
        return min(int(u * n), n - 1)
    i = int(np.searchsorted(cum, u * total, side="right"))
    pos = np.flatnonzero(w > 0.0)
    return min(i, int(pos[-1]))


def fitness_np(c):
    c = np.asarray(c, dtype=np.float64)
    fin = np.isfinite(c)
    if not fin.any():
        return np.ones_like(c)
    worst = c[fin].max()
    eps = 1e-12 * max(1.0, abs(worst))
    return np.where(fin, worst - np.where(fin, c, 0.0) + eps, 0.0)


def center_np(level, j, pos, cost, alive, tag, fan, org_off, org_alive, org_lo, org_hi, org_center, metric, out):
    L = tag.shape[1]
    g = org_off[level] + j
    if metric == CTR_REGION:
        out[:] = 0.5 * (org_lo[g] + org_hi[g])
        return True
    members = np.flatnonzero(alive & (tag[:, level] == j))
    if members.size == 0:
        return False
    deepest = level == L - 1
    if metric == CTR_MIN:
        out[:] = pos[members[np.argmin(cost[members])]]
        return True
    if metric == CTR_WMEAN_SOL or (metric == CTR_WMEAN_SUB and deepest):
        w = fitness_np(cost[members])
        out[:] = w @ pos[members] / w.sum()
        return True
    if metric == CTR_MEAN_SUB and deepest:
        out[:] = pos[members].mean(axis=0)
        return True
    f = fan[level]
    first = j * f
    coff = org_off[level + 1]
    ch = tag[members, level + 1] - first
    best = np.full(f, np.inf)
    np.minimum.at(best, ch, cost[members])
    has = np.zeros(f, bool)
    has[ch] = True
    live = has & org_alive[coff + first: coff + first + f]
    if metric == CTR_WMEAN_SUB:
        w = np.where(live, fitness_np(best), 0.0)
    else:
        w = live.astype(np.float64)
    if not w.sum() > 0.0:
        w = has.astype(np.float64)
    keep = w > 0.0
    out[:] = w[keep] @ org_center[coff + first: coff + first + f][keep] / w.sum()
    return True


def select_org_np(level, src, pos, cost, alive, tag, org_off, org_alive, sel, coin_p, u_pick, u_coin):
    own = int(tag[src, level])
    if sel == ORG_ENT:
        return own, False
    if sel in (ORG_ENT_EXCL, ORG_ENT_EXCL_RWS):
        if u_coin < coin_p:
            return own, False
        sel = ORG_EXCL if sel == ORG_ENT_EXCL else ORG_EXCL_RWS
    n_org = org_off[level + 1] - org_off[level]
    t = tag[alive, level]
    c = cost[alive]
    cnt = np.bincount(t, minlength=n_org)
    if sel in (ORG_MEAN, ORG_MEAN_RWS):
        with np.errstate(invalid="ignore"):
            val = np.bincount(t, weights=c, minlength=n_org) / np.maximum(cnt, 1)
    else:
        val = np.full(n_org, np.inf)
        np.minimum.at(val, t, c)
    ok = (cnt > 0) & org_alive[org_off[level]: org_off[level + 1]]
    if sel in (ORG_EXCL, ORG_EXCL_RWS):
        ok[own] = False
    cand = np.flatnonzero(ok)
    if cand.size == 0:
        return own, True
    if sel in (ORG_MIN_RWS, ORG_MEAN_RWS, ORG_EXCL_RWS):
        w = fitness_np(val[cand])
        return int(cand[roulette_np(w, cand.size, u_pick)]), False
    return int(cand[np.argmin(val[cand])]), False


def propose_np(pos, cost, alive, tag, fan, org_off, org_alive, org_lo, org_hi, org_center,
               lower, upper, eff, sol_sel, org_sel, coin_p, rand_thr, beta, per_dim, u):
    d = pos.shape[1]
    idx = np.flatnonzero(alive)
    w = fitness_np(cost[idx]) if sol_sel == SOL_FITNESS else np.ones(idx.size)
    src = int(idx[roulette_np(w, idx.size, u[0])])
    level = roulette_np(eff, eff.shape[0], u[1])
    j, fell_back = select_org_np(level, src, pos, cost, alive, tag, org_off, org_alive,
                                 org_sel, coin_p, u[2], u[3])
    g = org_off[level] + j
    rnd = bool(u[4] < rand_thr)
    if rnd:
        target = org_lo[g] + u[6:6 + d] * (org_hi[g] - org_lo[g])
    else:
        target = org_center[g]
    step = u[6 + d: 6 + 2 * d] if per_dim else u[5]
    child = np.minimum(np.maximum(pos[src] + beta * step * (target - pos[src]), lower), upper)
    return src, level, j, fell_back, rnd, child


def _refresh_tags_np(chain, pos, cost, alive, tag, fan, org_off, org_alive, org_lo, org_hi, org_center, metric):
    out = np.empty(pos.shape[1])
    for level in range(chain.shape[0] - 1, -1, -1):
        j = chain[level]
        g = org_off[level] + j
        if org_alive[g] and center_np(level, j, pos, cost, alive, tag, fan, org_off, org_alive,
                                      org_lo, org_hi, org_center, metric, out):
            org_center[g] = out


def _prune_np(j, alive, tag, fan, org_off, org_alive):
    level = tag.shape[1] - 1
    if np.any(alive & (tag[:, level] == j)):
        return 0
    org_alive[org_off[level] + j] = False
    n = 1
    while level > 0:
        f = fan[level - 1]
        p = j // f
        if org_alive[org_off[level] + p * f: org_off[level] + p * f + f].any():
            break
        level -= 1
        j = p
        org_alive[org_off[level] + j] = False
        n += 1
    return n


def _place_np(child, own, fan, org_off, org_alive, org_lo, org_hi):
    D = fan.shape[0] - 1
    a, b = org_off[D], org_off[D + 1]
    inside = org_alive[a:b] & np.all((child >= org_lo[a:b]) & (child <= org_hi[a:b]), axis=1)
    if inside[own]:
        return own, False
    if inside.any():
        return int(np.argmax(inside)), False
    j = own
    for level in range(D, -1, -1):
        g = org_off[level] + j
        np.minimum(org_lo[g], child, out=org_lo[g])
        np.maximum(org_hi[g], child, out=org_hi[g])
        if level > 0:
            j //= fan[level - 1]
    return own, True


def cull_worst_np(pos, cost, alive, tag, fan, org_off, org_alive, org_lo, org_hi, org_center, metric):
    live = np.flatnonzero(alive)
    lc = cost[live]
    worst = int(live[np.flatnonzero(lc == lc.max())[-1]])
    alive[worst] = False
    n = _prune_np(int(tag[worst, tag.shape[1] - 1]), alive, tag, fan, org_off, org_alive)
    _refresh_tags_np(tag[worst], pos, cost, alive, tag, fan, org_off, org_alive, org_lo, org_hi,
                     org_center, metric)
    return worst, n


def commit_np(child, child_cost, src, pos, cost, alive, tag, fan, org_off, org_alive,
              org_lo, org_hi, org_center, metric, cap, mode):
    D = tag.shape[1] - 1
    cull = False
    worst = -1
    if mode == MODE_OFFSPRING:
        live = np.flatnonzero(alive)
        cull = live.size + 1 > cap
        if live.size:
            lc = cost[live]
            worst = int(live[np.flatnonzero(lc == lc.max())[-1]])
        if cull and not child_cost < cost[worst]:
            return -1, -1, 0, False
        slot = int(np.argmin(alive))
    else:
        if mode == MODE_GREEDY and not child_cost < cost[src]:
            return -1, -1, 0, False
        slot = int(src)
    old = tag[src].copy()
    chosen, expanded = _place_np(child, int(old[D]), fan, org_off, org_alive, org_lo, org_hi)
    pos[slot] = child
    cost[slot] = child_cost
    alive[slot] = True
    j = chosen
    for level in range(D, -1, -1):
        tag[slot, level] = j
        if level > 0:
            j //= fan[level - 1]
    victim = -1
    n_pruned = 0
    args = (pos, cost, alive, tag, fan, org_off, org_alive, org_lo, org_hi, org_center, metric)
    if cull:
        victim = worst
        alive[victim] = False
        n_pruned = _prune_np(int(tag[victim, D]), alive, tag, fan, org_off, org_alive)
        _refresh_tags_np(tag[victim], *args)
    elif mode != MODE_OFFSPRING and old[D] != chosen:
        n_pruned = _prune_np(int(old[D]), alive, tag, fan, org_off, org_alive)
        _refresh_tags_np(old, *args)
    _refresh_tags_np(tag[slot], *args)
    return slot, victim, n_pruned, expanded


roulette = pick(roulette_nb, roulette_np)
center = pick(center_nb, center_np)
select_org = pick(select_org_nb, select_org_np)
propose = pick(propose_nb, propose_np)
commit = pick(commit_nb, commit_np)
cull_worst = pick(cull_worst_nb, cull_worst_np)
