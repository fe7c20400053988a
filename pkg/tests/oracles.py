"""Independent reference computations used to check the package.

Nothing here imports parkfactors math; the loss and its finite-difference
gradient are written directly from the model definition in extended
precision.
"""

import math

import numpy as np

LD = np.longdouble


def sigmoid_ld(z):
    return LD(1) / (LD(1) + np.exp(-np.asarray(z, dtype=LD)))


def squared_loss_ld(b, d, r, bat, dfn, park, x):
    p = sigmoid_ld(np.asarray(b, LD)[bat] - np.asarray(d, LD)[dfn] - np.asarray(r, LD)[park])
    return np.sum((p - np.asarray(x, LD)) ** 2)


def central_difference(b, d, r, bat, dfn, park, x, h=1e-6):
    """Finite-difference gradient, one coordinate at a time, over only the PAs it touches."""
    b, d, r = (np.asarray(v, LD) for v in (b, d, r))
    out = []
    for name, vec, index in (("b", b, bat), ("d", d, dfn), ("r", r, park)):
        grad = np.zeros(vec.size, dtype=LD)
        for k in range(vec.size):
            rows = index == k
            if not rows.any():
                continue
            args = [bat[rows], dfn[rows], park[rows], x[rows]]
            hi, lo = vec.copy(), vec.copy()
            hi[k] += LD(h)
            lo[k] -= LD(h)
            params_hi = {"b": b, "d": d, "r": r, name: hi}
            params_lo = {"b": b, "d": d, "r": r, name: lo}
            f_hi = squared_loss_ld(params_hi["b"], params_hi["d"], params_hi["r"], *args)
            f_lo = squared_loss_ld(params_lo["b"], params_lo["d"], params_lo["r"], *args)
            grad[k] = (f_hi - f_lo) / (LD(2) * LD(h))
        out.append(grad.astype(np.float64))
    return tuple(out)


def sigmoid(z):
    return 1.0 / (1.0 + math.exp(-z))


def mean_log2_loss(p, n_events, n_total):
    """Log-loss of a constant prediction ``p`` on aggregate counts."""
    return -(n_events * math.log2(p) + (n_total - n_events) * math.log2(1 - p)) / n_total


def pf_ratio(base, r_k, r_mean):
    return sigmoid(base - r_k) / sigmoid(base - r_mean)
