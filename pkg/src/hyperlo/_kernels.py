"""Compiled inner loops for the exact and fast run engines.

Everything here works on plain integer codes and numpy arrays so numba can
compile it in nopython mode. The public wrappers live in :mod:`hyperlo.engine`.

Each run receives its own ``numpy.random.Generator``. Integer draws use
``floor(u * n)`` on a 53-bit uniform, which is several times faster than
``Generator.integers`` inside compiled code; the bias is below ``n / 2**53``.
"""

import math

import numpy as np
from numba import njit

# operator families
BITFLIP = 0
RLS = 1
SBM = 2

# mechanisms (random gradient runs as GRG with tau = 1)
SIMPLE = 0
PERMUTATION = 1
GREEDY = 2
GRG = 3

# fast-engine probability models
MODEL_FORMULA = 0
MODEL_TABLE = 1


@njit(cache=True, nogil=True)
def _scan(bits, start, n):
    lo = start
    while lo < n and bits[lo] == 1:
        lo += 1
    return lo


@njit(cache=True, nogil=True)
def _sbm_tail(rng, rate, n, i, bufs, h):
    """Complete a standard bit mutation whose first flip is at ``i``.

    Later flip positions follow by geometric gaps. Returns the flip count.
    """
    q = math.log1p(-rate)
    pos = i
    bufs[h, 0] = pos
    cnt = 1
    while True:
        g = math.floor(math.log1p(-rng.random()) / q)
        pos += 1 + int(min(g, n))
        if pos >= n:
            break
        bufs[h, cnt] = pos
        cnt += 1
    return cnt


@njit(cache=True, nogil=True)
def _floyd(rng, m, n, bufs, h):
    """m distinct positions, uniform over m-subsets (Floyd's algorithm)."""
    cnt = 0
    for j in range(n - m, n):
        t = int(rng.random() * (j + 1))
        seen = False
        for b in range(cnt):
            if bufs[h, b] == t:
                seen = True
                break
        bufs[h, cnt] = j if seen else t
        cnt += 1
    return cnt


@njit(cache=True, nogil=True)
def _improves(bufs, h, cnt, i):
    """True iff toggling the positions in row ``h`` raises LeadingOnes above ``i``.

    The parent has ones on ``[0, i)`` and a zero at ``i``: the child is fitter
    iff ``i`` is toggled an odd number of times and every prefix position an
    even number of times.
    """
    if cnt == 1:
        return bufs[h, 0] == i
    odd = 0
    for a in range(cnt):
        pa = bufs[h, a]
        if pa == i:
            odd ^= 1
        elif pa < i:
            c = 0
            for b in range(cnt):
                if bufs[h, b] == pa:
                    c += 1
            if c & 1:
                return False
    return odd == 1


@njit(cache=True, nogil=True)
def _toggle(bits, bufs, h, cnt):
    for a in range(cnt):
        bits[bufs[h, a]] ^= 1


@njit(cache=True, nogil=True)
def _set_thresholds(thr, fam, rates, lo):
    for h in range(fam.shape[0]):
        if fam[h] == SBM:
            q = math.log1p(-rates[h])
            thr[h, 0] = math.exp(lo * q)
            thr[h, 1] = math.exp((lo + 1) * q)


@njit(cache=True, nogil=True)
def _record(lo, evals, targets, hits, t):
    while t < targets.shape[0] and lo >= targets[t]:
        hits[t] = evals
        t += 1
    return t


@njit(cache=True, nogil=True)
def exact_run(rng, n, fam, ms, rates, cumw, mech, tau, targets, max_evals, hits):
    """Simulate one run on a concrete bit string. Returns total evaluations, or -1 past ``max_evals``.

    The per-evaluation path is written inline on purpose: calling compiled
    helpers from it measured several times slower than the inline version.
    Helpers run only when a child may be fitter.
    """
    k = fam.shape[0]
    width = n
    for h in range(k):
        width = max(width, ms[h])
    bits = np.empty(n, np.uint8)
    bufs = np.empty((k, width), np.int64)
    cnts = np.zeros(k, np.int64)
    thr = np.zeros((k, 2))

    for p in range(n):
        bits[p] = 1 if rng.random() < 0.5 else 0
    lo = _scan(bits, 0, n)
    evals = 0
    t = _record(lo, evals, targets, hits, 0)
    _set_thresholds(thr, fam, rates, lo)

    perm = np.arange(k)
    if mech == PERMUTATION:
        for a in range(k - 1, 0, -1):
            b = int(rng.random() * (a + 1))
            perm[a], perm[b] = perm[b], perm[a]
    cursor = 0
    cur = -1
    fails = 0
    steps = k if mech == GREEDY else 1

    while lo < n:
        if evals >= max_evals:
            return -1
        best = lo
        ties = 0
        chosen = -1
        for s in range(steps):
            if mech == GREEDY:
                h = s
            elif mech == SIMPLE:
                h = 0
                if k > 1:
                    u = rng.random()
                    while h < k - 1 and u >= cumw[h]:
                        h += 1
            elif mech == PERMUTATION:
                h = perm[cursor]
                cursor += 1
                if cursor == k:
                    cursor = 0
            else:
                if cur < 0 or fails >= tau:
                    cur = int(rng.random() * k)
                    fails = 0
                h = cur

            # draw the mutation; ``cand`` is set iff a flip hits the first zero
            fh = fam[h]
            m = ms[h]
            cand = False
            cnt = 0
            if fh == SBM:
                v = 1.0 - rng.random()
                cand = thr[h, 1] < v <= thr[h, 0]
            elif fh == RLS and 2 * m > n:
                cnt = _floyd(rng, m, n, bufs, h)
                for a in range(cnt):
                    if bufs[h, a] == lo:
                        cand = True
            else:
                for a in range(m):
                    pos = int(rng.random() * n)
                    if fh == RLS:
                        # rejection keeps positions distinct
                        b = 0
                        while b < a:
                            if bufs[h, b] == pos:
                                pos = int(rng.random() * n)
                                b = 0
                            else:
                                b += 1
                    bufs[h, a] = pos
                    if pos == lo:
                        cand = True
                cnt = m
            evals += 1

            improved = False
            if cand:
                if fh == SBM:
                    cnt = _sbm_tail(rng, rates[h], n, lo, bufs, h)
                    improved = True
                else:
                    improved = cnt == 1 or _improves(bufs, h, cnt, lo)

            if mech == GREEDY:
                if improved:
                    cnts[h] = cnt
                    _toggle(bits, bufs, h, cnt)
                    child = _scan(bits, lo + 1, n)
                    _toggle(bits, bufs, h, cnt)
                    if child > best:
                        best = child
                        ties = 1
                        chosen = h
                    elif child == best:
                        # uniform tie-break by reservoir sampling
                        ties += 1
                        if int(rng.random() * ties) == 0:
                            chosen = h
            elif improved:
                _toggle(bits, bufs, h, cnt)
                lo = _scan(bits, lo + 1, n)
                t = _record(lo, evals, targets, hits, t)
                _set_thresholds(thr, fam, rates, lo)
                fails = 0
            else:
                fails += 1

        if chosen >= 0:
            _toggle(bits, bufs, chosen, cnts[chosen])
            lo = best
            t = _record(lo, evals, targets, hits, t)
            _set_thresholds(thr, fam, rates, lo)
    return evals


@njit(cache=True, nogil=True)
def improve_prob(fam, m, i, n):
    """Per-state improvement probability used by the fast engine."""
    if fam == BITFLIP:
        r = (n - i - 1) / n
        return m / n * r ** (m - 1)
    p = m / n
    for s in range(1, m):
        num = n - i - s
        if num <= 0:
            return 0.0
        p *= num / (n - s)
    return p


@njit(cache=True, nogil=True)
def waiting_time(p, u):
    if p >= 1.0:
        return 1
    w = math.ceil(math.log1p(-u) / math.log1p(-p))
    return max(int(w), 1)


@njit(cache=True, nogil=True)
def fast_run(rng, n, fam, ms, weights, mech, tau, model, table, targets, hits):
    """Fitness-level simulation with geometric waiting times. Returns evaluations, -1 if stuck."""
    k = fam.shape[0]
    lo = 0
    while lo < n and rng.random() < 0.5:
        lo += 1
    evals = 0
    t = _record(lo, evals, targets, hits, 0)
    if mech == SIMPLE:
        while lo < n:
            p = 0.0
            for h in range(k):
                if model == MODEL_TABLE:
                    ph = table[h, lo]
                else:
                    ph = improve_prob(fam[h], ms[h], lo, n)
                p += weights[h] * ph
            if p <= 0.0:
                return -1
            evals += waiting_time(p, rng.random())
            lo += 1
            while lo < n and rng.random() < 0.5:
                lo += 1
            t = _record(lo, evals, targets, hits, t)
        return evals

    cur = int(rng.random() * k)
    while lo < n:
        if model == MODEL_TABLE:
            p = table[cur, lo]
        else:
            p = improve_prob(fam[cur], ms[cur], lo, n)
        if p > 0.0:
            wt = waiting_time(p, rng.random())
            if wt <= tau:
                evals += wt
                lo += 1
                while lo < n and rng.random() < 0.5:
                    lo += 1
                t = _record(lo, evals, targets, hits, t)
                continue
        else:
            # stuck if no operator can improve the current level
            alive = False
            for h in range(k):
                q = table[h, lo] if model == MODEL_TABLE else improve_prob(fam[h], ms[h], lo, n)
                if q > 0.0:
                    alive = True
                    break
            if not alive:
                return -1
        evals += tau
        cur = int(rng.random() * k)
    return evals
