"""Numeric inner loops.

Each kernel is plain Python over numpy arrays and is compiled with numba when
available (see :mod:`lfmo_repair._accel`).  Vectorised numpy counterparts are
kept next to the kernels that have a natural array formulation.
"""

from __future__ import annotations

import numpy as np

from ._accel import maybe_njit

# ---------------------------------------------------------------------------
# two-terminal connectivity


@maybe_njit
def two_terminal_eval(masks, offsets, inc_edge, inc_node, n_nodes, source, target):
    """1 where ``source`` reaches ``target`` through working edges of ``mask``.

    Edges incident to node ``v`` are ``inc_edge[offsets[v]:offsets[v+1]]`` with
    far endpoints ``inc_node[...]``; bit ``e`` of a mask is edge ``e`` working.
    """
    out = np.zeros(masks.shape[0], dtype=np.uint8)
    stack = np.empty(n_nodes, dtype=np.int64)
    seen = np.zeros(n_nodes, dtype=np.uint8)
    for idx in range(masks.shape[0]):
        mask = masks[idx]
        for v in range(n_nodes):
            seen[v] = 0
        top = 0
        stack[0] = source
        seen[source] = 1
        top = 1
        found = 0
        while top > 0:
            top -= 1
            v = stack[top]
            if v == target:
                found = 1
                break
            for p in range(offsets[v], offsets[v + 1]):
                if (mask >> inc_edge[p]) & 1:
                    w = inc_node[p]
                    if seen[w] == 0:
                        seen[w] = 1
                        stack[top] = w
                        top += 1
        out[idx] = found
    return out


def two_terminal_eval_numpy(masks, edge_u, edge_v, source, target):
    """Vectorised reachability by repeated relaxation over the edge list."""
    masks = np.asarray(masks, dtype=np.int64)
    reach = np.full(masks.shape, np.int64(1) << source, dtype=np.int64)
    while True:
        before = reach.copy()
        for e in range(len(edge_u)):
            u, v = int(edge_u[e]), int(edge_v[e])
            both = np.int64((1 << u) | (1 << v))
            working = ((masks >> e) & 1).astype(bool)
            touches = ((reach >> u) & 1).astype(bool) | ((reach >> v) & 1).astype(bool)
            reach |= np.where(working & touches, both, np.int64(0))
        if np.array_equal(before, reach):
            break
    return ((reach >> target) & 1).astype(np.uint8)


# ---------------------------------------------------------------------------
# renewal-cycle simulation


@maybe_njit
def simulate_replication(
    uniforms,
    n,
    psi,
    cum_rows,
    phi_table,
    r,
    c_cmp,
    c_sys,
    horizons,
    out_stats,
    out_hist,
):
    """Run one replication of the repair process up to ``horizons[-1]``.

    Consumes ``uniforms`` in a fixed order (sojourn, batch size, one draw per
    newly failed component).  Writes, for each horizon ``h``, the row
    ``[repairs, system_failures, last_failure_time, component_failures, cost]``
    into ``out_stats[h]`` and adds per-cycle failed counts into ``out_hist``.
    Returns the number of uniforms used, or -1 when the buffer ran out.
    """
    n_h = horizons.shape[0]
    alive = np.arange(n)
    working_mask = (1 << n) - 1
    n_failed = 0
    t = 0.0
    pos = 0
    m = uniforms.shape[0]
    repairs = 0.0
    sys_fail = 0.0
    last_fail = 0.0
    comp_fail = 0.0
    cost = 0.0
    h = 0
    while True:
        if pos + 2 + n > m:
            return -1
        n_alive = n - n_failed
        t += -np.log1p(-uniforms[pos]) / psi[n_alive - 1]
        pos += 1
        while h < n_h and t > horizons[h]:
            out_stats[h, 0] = repairs
            out_stats[h, 1] = sys_fail
            out_stats[h, 2] = last_fail
            out_stats[h, 3] = comp_fail
            out_stats[h, 4] = cost
            h += 1
        if h == n_h:
            return pos
        u = uniforms[pos]
        pos += 1
        j = n_failed + 1
        while j < n and cum_rows[n_failed, j] <= u:
            j += 1
        batch = j - n_failed
        # partial Fisher-Yates: failing components are swapped to the tail of
        # the alive prefix, which then shrinks to alive[0:n_alive - batch]
        for b in range(batch):
            span = n_alive - b
            pick = int(uniforms[pos] * span)
            if pick >= span:
                pick = span - 1
            pos += 1
            tmp = alive[span - 1]
            alive[span - 1] = alive[pick]
            alive[pick] = tmp
            working_mask &= ~(1 << alive[span - 1])
        n_failed = j
        comp_fail += batch
        system_down = phi_table[working_mask] == 0
        if n_failed >= r or system_down:
            repairs += 1.0
            cost += c_cmp[n_failed - 1]
            if system_down:
                sys_fail += 1.0
                cost += c_sys
                last_fail = t
            out_hist[n_failed] += 1
            n_failed = 0
            working_mask = (1 << n) - 1
            for i in range(n):
                alive[i] = i
