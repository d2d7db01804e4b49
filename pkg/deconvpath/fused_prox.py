"""Linear-time exact solver for the 1-D fused-lasso proximal problem.

    minimize_a  0.5 * ||a - z||^2 + lam * sum_i |a[i+1] - a[i]|

Forward pass: the derivative of the running message is piecewise linear;
its knots live in a buffer that grows outward from the middle in both
directions, so every knot is pushed and popped at most once. Two knots
per step (where the derivative crosses -lam and +lam) are the back
pointers used by the backward pass.
"""
import numpy as np

from deconvpath.errors import ProxError


def fused_prox(z, lam):
    """Return the unique minimizer of 0.5||a - z||^2 + lam * ||Delta^(1) a||_1."""
    z = np.asarray(z, dtype=float).ravel()
    if z.size == 0 or not np.all(np.isfinite(z)):
        raise ProxError("invalid target")
    if not lam >= 0 or not np.isfinite(lam):
        raise ProxError("penalty weight must be a finite nonnegative number")
    n = z.size
    if n == 1 or lam == 0:
        return z.copy()

    y = z.tolist()
    lam = float(lam)
    # knot positions and the slope/intercept increments of the derivative
    x = [0.0] * (2 * n)
    a = [0.0] * (2 * n)
    b = [0.0] * (2 * n)
    tm = [0.0] * (n - 1)
    tp = [0.0] * (n - 1)

    tm[0] = -lam + y[0]
    tp[0] = lam + y[0]
    left = n - 1
    right = n
    x[left] = tm[0]
    x[right] = tp[0]
    a[left] = 1.0
    b[left] = -y[0] + lam
    a[right] = -1.0
    b[right] = y[0] + lam
    a_first, b_first = 1.0, -lam - y[1]
    a_last, b_last = -1.0, -lam + y[1]

    for k in range(1, n - 1):
        a_lo, b_lo = a_first, b_first
        lo = left
        while lo <= right:
            if a_lo * x[lo] + b_lo > -lam:
                break
            a_lo += a[lo]
            b_lo += b[lo]
            lo += 1

        a_hi, b_hi = a_last, b_last
        hi = right
        while hi >= lo:
            if -a_hi * x[hi] - b_hi < lam:
                break
            a_hi += a[hi]
            b_hi += b[hi]
            hi -= 1

        tm[k] = (-lam - b_lo) / a_lo
        left = lo - 1
        x[left] = tm[k]
        tp[k] = (lam + b_hi) / (-a_hi)
        right = hi + 1
        x[right] = tp[k]

        a[left] = a_lo
        b[left] = b_lo + lam
        a[right] = a_hi
        b[right] = b_hi + lam
        a_first, b_first = 1.0, -lam - y[k + 1]
        a_last, b_last = -1.0, -lam + y[k + 1]

    # last coefficient: zero of the final derivative
    a_lo, b_lo = a_first, b_first
    lo = left
    while lo <= right:
        if a_lo * x[lo] + b_lo > 0:
            break
        a_lo += a[lo]
        b_lo += b[lo]
        lo += 1

    out = [0.0] * n
    out[n - 1] = -b_lo / a_lo
    for k in range(n - 2, -1, -1):
        nxt = out[k + 1]
        if nxt > tp[k]:
            out[k] = tp[k]
        elif nxt < tm[k]:
            out[k] = tm[k]
        else:
            out[k] = nxt
    return np.array(out)


def prox_objective(alpha, z, lam):
    """0.5 * ||alpha - z||^2 + lam * total variation of alpha."""
    alpha = np.asarray(alpha, dtype=float)
    return 0.5 * float(np.sum((alpha - z) ** 2)) + lam * float(np.sum(np.abs(np.diff(alpha))))
