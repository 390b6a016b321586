"""Numpy implementation of the hot kernels.

Used when the compiled ``_ckernels`` extension is unavailable, and as the
reference the compiled path is checked against.  Both modules expose the
same three functions with identical semantics.
"""

import numpy as np


def discretize(x, d):
    """Three-state coarse graining of ``x`` at threshold ``d``.

    Branches are tested in order: decrease (``x <= -d/2``), intermediate,
    increase (``x >= d/2``).  With ``d == 0`` a zero return is a decrease.
    """
    x = np.asarray(x, dtype=np.float64)
    half = 0.5 * d
    out = np.full(x.shape, 2, dtype=np.int8)
    out[x < half] = 1
    out[x <= -half] = 0
    return out


def _history_codes(s, depth, alphabet, start, stop):
    # code of (s[t], s[t-1], ..., s[t-depth+1]) read most-significant first
    code = np.zeros(stop - start, dtype=np.int64)
    for m in range(depth):
        code = code * alphabet + s[start - m:stop - m]
    return code


def count_transitions(target, source, k, l, a_target, a_source):
    """Dense transition counts indexed ``[next, target_history, source_history]``.

    One count per ``t`` in ``[max(k, l) - 1, L - 2]``.
    """
    target = np.asarray(target, dtype=np.int64)
    source = np.asarray(source, dtype=np.int64)
    n = target.shape[0]
    m = max(k, l)
    start, stop = m - 1, n - 1
    n_ih = a_target ** k
    n_jh = a_source ** l
    nxt = target[start + 1:stop + 1]
    ih = _history_codes(target, k, a_target, start, stop)
    jh = _history_codes(source, l, a_source, start, stop)
    flat = (nxt * n_ih + ih) * n_jh + jh
    counts = np.bincount(flat, minlength=a_target * n_ih * n_jh)
    return counts.astype(np.int64).reshape(a_target, n_ih, n_jh)


def entropies(counts):
    """Return ``(te, h_target, h_joint)`` in bits from a dense count table.

    ``te`` is evaluated term by term from the log-ratio of conditionals, so it
    is exactly zero whenever the source history adds no information.
    """
    c3 = np.asarray(counts, dtype=np.float64)
    total = c3.sum()
    c_ij = c3.sum(axis=0)  # (ih, jh)
    c_ni = c3.sum(axis=2)  # (next, ih)
    c_i = c_ni.sum(axis=0)  # (ih,)

    nz = c3 > 0
    nn, ii, jj = np.nonzero(nz)
    c = c3[nz]
    num = c * c_i[ii]
    den = c_ij[ii, jj] * c_ni[nn, ii]
    te = float(np.sum(c * np.log2(num / den)) / total)
    h_joint = float(-np.sum(c * np.log2(c / c_ij[ii, jj])) / total)

    nz2 = c_ni > 0
    n2, i2 = np.nonzero(nz2)
    c2 = c_ni[nz2]
    h_target = float(-np.sum(c2 * np.log2(c2 / c_i[i2])) / total)
    return te, h_target, h_joint
