import numpy as np


def central_difference(f, x, h=1e-6):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step.flat[i] = h
        grad.flat[i] = (f(x + step) - f(x - step)) / (2.0 * h)
    return grad


def distinct_scores(rng, m, spread=3.0):
    """Random scores with no ties and no near-ties."""
    y = rng.permutation(m).astype(np.float64) * spread / max(m, 1)
    return y + rng.uniform(0.0, 0.1 * spread / max(m, 1), size=m)
