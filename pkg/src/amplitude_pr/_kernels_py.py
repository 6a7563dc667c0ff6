"""Pure numpy versions of the inner-loop kernels.

These define the reference semantics; the Cython module ``_kernels`` must
agree with them to rounding.
"""
import numpy as np


def amplitude_loss(B, b, x):
    """Return sum_j (|(Bx)_j| - b_j)^2."""
    r = np.abs(B @ x) - b
    return float(r @ r)


def amplitude_gradient(B, b, x, threshold=0.0):
    """Loss and Wirtinger (sub)gradient of the amplitude least-squares loss.

    Rows of ``B`` are the conjugated measurement vectors, so ``B @ x`` holds
    the inner products <a_j, x>. The gradient is taken with respect to
    conj(x) and uses phase(0) = 0. Terms with |<a_j, x>| < threshold are
    left out of the gradient (the loss is always the full sum).
    """
    z = B @ x
    absz = np.abs(z)
    r = absz - b
    loss = float(r @ r)
    w = np.zeros_like(z)
    keep = absz > 0
    if threshold > 0:
        keep &= absz >= threshold
    w[keep] = r[keep] * (z[keep] / absz[keep])
    grad = B.conj().T @ w
    return loss, grad


def lifted_forward(BS, u1, u2, lam1, lam2):
    """Entries lam1 |<a_j, u1>|^2 + lam2 |<a_j, u2>|^2 for the rows of BS."""
    z1 = BS @ u1
    z2 = BS @ u2
    return lam1 * (z1.real**2 + z1.imag**2) + lam2 * (z2.real**2 + z2.imag**2)
