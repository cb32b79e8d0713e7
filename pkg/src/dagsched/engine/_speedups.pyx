# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot kernels.

The simulation event loop and the forced-order evaluator mirror their pure
Python counterparts statement for statement (see dagsched.simulate and
dagsched.oracle), so both lanes produce bit-identical results.
"""

from libc.math cimport INFINITY
from libc.stdlib cimport free, malloc


cdef inline unsigned long long _mix(unsigned long long* state):
    cdef unsigned long long z
    state[0] = state[0] + <unsigned long long>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <unsigned long long>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <unsigned long long>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline bint _event_before(double t1, long k1, long i1,
                               double t2, long k2, long i2):
    if t1 != t2:
        return t1 < t2
    if k1 != k2:
        return k1 < k2
    return i1 < i2


cdef void _heap_push(double* ht, long* hk, long* hi, long* size,
                     double t, long kind, long ident):
    cdef long pos = size[0]
    cdef long parent
    size[0] += 1
    while pos > 0:
        parent = (pos - 1) >> 1
        if _event_before(t, kind, ident, ht[parent], hk[parent], hi[parent]):
            ht[pos] = ht[parent]
            hk[pos] = hk[parent]
            hi[pos] = hi[parent]
            pos = parent
        else:
            break
    ht[pos] = t
    hk[pos] = kind
    hi[pos] = ident


cdef void _heap_pop(double* ht, long* hk, long* hi, long* size):
    cdef long last = size[0] - 1
    cdef double t
    cdef long kind, ident, pos, child
    size[0] = last
    if last == 0:
        return
    t = ht[last]
    kind = hk[last]
    ident = hi[last]
    pos = 0
    while True:
        child = 2 * pos + 1
        if child >= last:
            break
        if child + 1 < last and _event_before(ht[child + 1], hk[child + 1],
                                              hi[child + 1], ht[child],
                                              hk[child], hi[child]):
            child += 1
        if _event_before(ht[child], hk[child], hi[child], t, kind, ident):
            ht[pos] = ht[child]
            hk[pos] = hk[child]
            hi[pos] = hi[child]
            pos = child
        else:
            break
    ht[pos] = t
    hk[pos] = kind
    hi[pos] = ident


cdef long _pick(long policy, long dev, long n, long* queue, long qlen,
                double* ready_time, double[::1] pct,
                long long[::1] out_ptr, long long[::1] edge_dst,
                long long[::1] part, long long[::1] indegree, char* busy,
                double alpha, double beta, double gamma, double delta,
                unsigned long long* rng, long* tied):
    cdef long i, j, v, w, best, count
    cdef double best_key, value, score
    if qlen == 0:
        return -1
    if policy == 0:
        best_key = INFINITY
        for i in range(qlen):
            value = ready_time[queue[i]]
            if value < best_key:
                best_key = value
        count = 0
        for i in range(qlen):
            v = queue[i]
            if ready_time[v] == best_key:
                tied[count] = v
                count += 1
        for i in range(1, count):
            v = tied[i]
            j = i - 1
            while j >= 0 and tied[j] > v:
                tied[j + 1] = tied[j]
                j -= 1
            tied[j + 1] = v
        if count == 1:
            return tied[0]
        return tied[<long>(_mix(rng) % <unsigned long long>count)]
    if policy == 1:
        best = -1
        best_key = 0
        for i in range(qlen):
            v = queue[i]
            if best < 0 or pct[v] > best_key or (pct[v] == best_key
                                                 and v < best):
                best = v
                best_key = pct[v]
        return best
    best = -1
    best_key = 0
    for i in range(qlen):
        v = queue[i]
        score = 0
        for j in range(out_ptr[v], out_ptr[v + 1]):
            w = edge_dst[j]
            score += alpha
            if part[w] != dev:
                score += beta
            if indegree[w] == 1:
                score += gamma
                if busy[part[w]] == 0:
                    score += delta
        if best < 0 or score > best_key or (score == best_key and v < best):
            best = v
            best_key = score
    return best


cdef void _attempt(long d, double now, long policy, long n, long* qbuf,
                   long* qlen, double* ready_time, double[::1] pct,
                   long long[::1] out_ptr, long long[::1] edge_dst,
                   long long[::1] part, long long[::1] indegree, char* busy,
                   double alpha, double beta, double gamma, double delta,
                   unsigned long long* rng, long* tied, double[::1] exec_t,
                   double[::1] start, double[::1] finish, long long[::1] order,
                   long* order_count, double* ht, long* hk, long* hi,
                   long* heap_size):
    cdef long v, i
    if busy[d]:
        return
    v = _pick(policy, d, n, qbuf + d * n, qlen[d], ready_time, pct, out_ptr,
              edge_dst, part, indegree, busy, alpha, beta, gamma, delta, rng,
              tied)
    if v < 0:
        return
    for i in range(qlen[d]):
        if qbuf[d * n + i] == v:
            qbuf[d * n + i] = qbuf[d * n + qlen[d] - 1]
            qlen[d] -= 1
            break
    busy[d] = 1
    start[v] = now
    finish[v] = now + exec_t[v]
    order[order_count[0]] = v
    order_count[0] += 1
    _heap_push(ht, hk, hi, heap_size, finish[v], 1, v)


def simulate_kernel(long long[::1] edge_src, long long[::1] edge_dst,
                    long long[::1] out_ptr, long long[::1] indegree,
                    long long[::1] part, double[::1] exec_t,
                    double[::1] trans_t, long policy, double[::1] pct,
                    double alpha, double beta, double gamma, double delta,
                    unsigned long long seed, long k, double[::1] start,
                    double[::1] finish, double[::1] tstart, double[::1] tend,
                    long long[::1] order):
    """Event loop twin of the reference simulator; returns the event count
    or -1 if the run stalls."""
    cdef long n = part.shape[0]
    cdef long m = edge_src.shape[0]
    cdef long cap = n + m + 2
    cdef double* ht = <double*>malloc(cap * sizeof(double))
    cdef long* hk = <long*>malloc(cap * sizeof(long))
    cdef long* hi = <long*>malloc(cap * sizeof(long))
    cdef long* qbuf = <long*>malloc((k * n + 1) * sizeof(long))
    cdef long* qlen = <long*>malloc((k + 1) * sizeof(long))
    cdef long* pending = <long*>malloc((n + 1) * sizeof(long))
    cdef double* ready_time = <double*>malloc((n + 1) * sizeof(double))
    cdef char* busy = <char*>malloc(k + 1)
    cdef long* tied = <long*>malloc((n + 1) * sizeof(long))
    cdef long heap_size = 0
    cdef long order_count = 0
    cdef long events = 0
    cdef unsigned long long rng = seed
    cdef long v, w, d, j, kind, ident
    cdef double t, tt

    if (ht == NULL or hk == NULL or hi == NULL or qbuf == NULL
            or qlen == NULL or pending == NULL or ready_time == NULL
            or busy == NULL or tied == NULL):
        free(ht); free(hk); free(hi); free(qbuf); free(qlen)
        free(pending); free(ready_time); free(busy); free(tied)
        raise MemoryError()

    for d in range(k):
        qlen[d] = 0
        busy[d] = 0
    for v in range(n):
        pending[v] = indegree[v]
        ready_time[v] = 0.0
    for v in range(n):
        if pending[v] == 0:
            d = part[v]
            qbuf[d * n + qlen[d]] = v
            qlen[d] += 1
    for d in range(k):
        _attempt(d, 0.0, policy, n, qbuf, qlen, ready_time, pct, out_ptr,
                 edge_dst, part, indegree, busy, alpha, beta, gamma, delta,
                 &rng, tied, exec_t, start, finish, order, &order_count,
                 ht, hk, hi, &heap_size)

    while heap_size > 0:
        t = ht[0]
        kind = hk[0]
        ident = hi[0]
        _heap_pop(ht, hk, hi, &heap_size)
        events += 1
        if kind == 0:
            w = edge_dst[ident]
            pending[w] -= 1
            if pending[w] == 0:
                ready_time[w] = t
                d = part[w]
                qbuf[d * n + qlen[d]] = w
                qlen[d] += 1
            d = part[w]
        else:
            v = ident
            d = part[v]
            busy[d] = 0
            for j in range(out_ptr[v], out_ptr[v + 1]):
                w = edge_dst[j]
                tt = trans_t[j]
                tstart[j] = t
                tend[j] = t + tt
                if part[w] == d:
                    pending[w] -= 1
                    if pending[w] == 0:
                        ready_time[w] = t
                        qbuf[d * n + qlen[d]] = w
                        qlen[d] += 1
                else:
                    _heap_push(ht, hk, hi, &heap_size, t + tt, 0, j)
        _attempt(d, t, policy, n, qbuf, qlen, ready_time, pct, out_ptr,
                 edge_dst, part, indegree, busy, alpha, beta, gamma, delta,
                 &rng, tied, exec_t, start, finish, order, &order_count,
                 ht, hk, hi, &heap_size)

    free(ht); free(hk); free(hi); free(qbuf); free(qlen)
    free(pending); free(ready_time); free(busy); free(tied)
    if order_count != n:
        return -1
    return events


def forced_order_kernel(long long[::1] seq, long long[::1] seq_ptr,
                        double[::1] exec_t, long long[::1] in_ptr,
                        long long[::1] in_src, double[::1] in_tt,
                        long n, long k):
    """Makespan of fixed per-device orders; INFINITY when they deadlock."""
    cdef long* position = <long*>malloc((k + 1) * sizeof(long))
    cdef double* available = <double*>malloc((k + 1) * sizeof(double))
    cdef double* fin = <double*>malloc((n + 1) * sizeof(double))
    cdef char* done = <char*>malloc(n + 1)
    cdef long placed = 0
    cdef long d, v, u, j, length
    cdef bint progress, startable
    cdef double ready, arrival, begin, makespan

    if (position == NULL or available == NULL or fin == NULL or done == NULL):
        free(position); free(available); free(fin); free(done)
        raise MemoryError()

    for d in range(k):
        position[d] = 0
        available[d] = 0.0
    for v in range(n):
        done[v] = 0

    while placed < n:
        progress = False
        for d in range(k):
            length = seq_ptr[d + 1] - seq_ptr[d]
            while position[d] < length:
                v = seq[seq_ptr[d] + position[d]]
                ready = 0.0
                startable = True
                for j in range(in_ptr[v], in_ptr[v + 1]):
                    u = in_src[j]
                    if not done[u]:
                        startable = False
                        break
                    arrival = fin[u] + in_tt[j]
                    if arrival > ready:
                        ready = arrival
                if not startable:
                    break
                begin = available[d] if available[d] > ready else ready
                fin[v] = begin + exec_t[v]
                done[v] = 1
                available[d] = fin[v]
                position[d] += 1
                placed += 1
                progress = True
        if not progress:
            free(position); free(available); free(fin); free(done)
            return INFINITY
    makespan = 0.0
    for v in range(n):
        if done[v] and fin[v] > makespan:
            makespan = fin[v]
    free(position); free(available); free(fin); free(done)
    return makespan
