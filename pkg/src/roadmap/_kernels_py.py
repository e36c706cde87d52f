"""Pure-numpy rank-surrogate kernels.

Same call signatures as the compiled ``_kernels`` extension; used when the
extension is unavailable or ``ROADMAP_PURE_PYTHON`` is set.
"""

import numpy as np

SUPAP = 0
SMOOTHAP = 1


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid_prime(x):
    # computed from exp(-|x|) so deep tails keep their tiny magnitude instead of rounding to 0
    e = np.exp(-np.abs(np.asarray(x, dtype=np.float64)))
    return e / (1.0 + e) ** 2


def h_minus_array(t, tau, rho, delta):
    t = np.asarray(t, dtype=np.float64)
    sig = sigmoid(t / tau)
    top = rho * (t - delta) + float(sigmoid(delta / tau)) + 0.5
    return np.where(t < 0.0, sig, np.where(t <= delta, sig + 0.5, top))


def h_minus_grad_array(t, tau, rho, delta):
    t = np.asarray(t, dtype=np.float64)
    return np.where(t > delta, rho, sigmoid_prime(t / tau) / tau)


def supap_kernel(pos, neg, tau, rho, delta):
    """Return ``(value, grad_pos, grad_neg)`` for one query."""
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    neg = np.ascontiguousarray(neg, dtype=np.float64)
    n_pos = pos.shape[0]
    # rank+ keeps the true step: ties count, self included as the leading 1
    rank_plus = (pos[None, :] >= pos[:, None]).sum(axis=1).astype(np.float64)
    diff = neg[None, :] - pos[:, None]
    rank_minus = h_minus_array(diff, tau, rho, delta).sum(axis=1)
    denom = rank_plus + rank_minus
    value = 1.0 - np.sum(rank_plus / denom) / n_pos
    coef = rank_plus / (denom * denom) / n_pos
    hg = h_minus_grad_array(diff, tau, rho, delta)
    grad_neg = (coef[:, None] * hg).sum(axis=0)
    grad_pos = -coef * hg.sum(axis=1)
    return float(value), grad_pos, grad_neg


def smoothap_kernel(pos, neg, tau):
    """Return ``(value, grad_pos, grad_neg)`` for one query."""
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    neg = np.ascontiguousarray(neg, dtype=np.float64)
    n_pos = pos.shape[0]
    dp = (pos[None, :] - pos[:, None]) / tau
    sp = sigmoid(dp)
    np.fill_diagonal(sp, 0.0)
    spg = sigmoid_prime(dp) / tau
    np.fill_diagonal(spg, 0.0)
    dn = (neg[None, :] - pos[:, None]) / tau
    rank_plus = 1.0 + sp.sum(axis=1)
    rank_minus = sigmoid(dn).sum(axis=1)
    sng = sigmoid_prime(dn) / tau
    denom = rank_plus + rank_minus
    value = 1.0 - np.sum(rank_plus / denom) / n_pos
    d_plus = -rank_minus / (denom * denom) / n_pos
    d_minus = rank_plus / (denom * denom) / n_pos
    grad_pos = (d_plus[:, None] * spg).sum(axis=0) - d_plus * spg.sum(axis=1) - d_minus * sng.sum(axis=1)
    grad_neg = (d_minus[:, None] * sng).sum(axis=0)
    return float(value), grad_pos, grad_neg


def batch_kernel(sim, labels, kind, tau, rho, delta):
    """In-batch loss: every row queries the others.

    Returns ``(summed value, grad wrt sim, number of valid queries)``. Queries
    without an in-batch positive contribute nothing.
    """
    sim = np.asarray(sim, dtype=np.float64)
    labels = np.asarray(labels)
    b = sim.shape[0]
    grad = np.zeros((b, b))
    total = 0.0
    valid = 0
    idx = np.arange(b)
    for i in range(b):
        same = labels == labels[i]
        pos_idx = idx[same & (idx != i)]
        if pos_idx.size == 0:
            continue
        neg_idx = idx[~same]
        row = sim[i]
        if kind == SUPAP:
            v, gp, gn = supap_kernel(row[pos_idx], row[neg_idx], tau, rho, delta)
        else:
            v, gp, gn = smoothap_kernel(row[pos_idx], row[neg_idx], tau)
        total += v
        grad[i, pos_idx] = gp
        grad[i, neg_idx] = gn
        valid += 1
    return total, grad, valid
