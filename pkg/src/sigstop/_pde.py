"""Compiled wavefront kernels for batches of Goursat problems.

Batches are laid out as ``(P, Q, B)`` with the batch axis innermost so the
innermost loop runs over contiguous memory.
"""

import numba as nb
import numpy as np

SCHEMES = {"explicit": 0, "averaged": 1, "taylor": 2}


@nb.njit(cache=True, fastmath=False)
def _solve_block(inc, refine, scheme, full, out_full, out_term):
    P, Q, B = inc.shape
    R = refine
    qf = Q * R
    h = 1.0 / (R * R)
    prev = np.ones((qf + 1, B))
    cur = np.empty((qf + 1, B))
    if full:
        for q in range(Q + 1):
            for k in range(B):
                out_full[0, q, k] = 1.0
    for p in range(P):
        for a in range(R):
            for k in range(B):
                cur[0, k] = 1.0
            for q in range(Q):
                for b in range(R):
                    c = q * R + b
                    if scheme == 0:
                        for k in range(B):
                            m = inc[p, q, k] * h
                            u00 = prev[c, k]
                            cur[c + 1, k] = cur[c, k] + prev[c + 1, k] - u00 + m * u00
                    elif scheme == 1:
                        for k in range(B):
                            m = inc[p, q, k] * h
                            s = cur[c, k] + prev[c + 1, k]
                            cur[c + 1, k] = s - prev[c, k] + 0.5 * m * s
                    else:
                        for k in range(B):
                            m = inc[p, q, k] * h
                            m2 = m * m / 12.0
                            s = cur[c, k] + prev[c + 1, k]
                            cur[c + 1, k] = s * (1.0 + 0.5 * m + m2) - prev[c, k] * (1.0 - m2)
            tmp = prev
            prev = cur
            cur = tmp
        if full:
            for q in range(Q + 1):
                for k in range(B):
                    out_full[p + 1, q, k] = prev[q * R, k]
    for k in range(B):
        out_term[k] = prev[qf, k]


def solve_batch(inc: np.ndarray, refine: int, scheme: str, full: bool, chunk: int = 2048):
    """Solve ``B`` Goursat problems given increments of shape ``(P, Q, B)``.

    Returns ``(P + 1, Q + 1, B)`` node values when ``full`` else the ``(B,)``
    terminal values.  Results do not depend on ``chunk``.
    """
    inc = np.ascontiguousarray(inc, dtype=np.float64)
    P, Q, B = inc.shape
    code = SCHEMES[scheme]
    term = np.empty(B)
    out = np.empty((P + 1, Q + 1, B)) if full else np.empty((1, 1, 1))
    for start in range(0, B, chunk):
        stop = min(start + chunk, B)
        blk = np.ascontiguousarray(inc[:, :, start:stop])
        if full:
            part = np.empty((P + 1, Q + 1, stop - start))
            _solve_block(blk, refine, code, True, part, term[start:stop])
            out[:, :, start:stop] = part
        else:
            _solve_block(blk, refine, code, False, out, term[start:stop])
    return out if full else term
