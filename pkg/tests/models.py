"""Random Kalman models shared by the test modules."""

import numpy as np

from stabcert.kalman import KalmanModel


def random_model(rng, n, spread=(0.5, 1.5)):
    """A with singular values in ``spread``; F and C of unit scale.

    Keeping |A| near 1 keeps length-16 generator words well conditioned; with
    |A| ~ 3 the float64 product matrix alone carries errors near 1e-5.
    """
    q1, _ = np.linalg.qr(rng.normal(size=(n, n)))
    q2, _ = np.linalg.qr(rng.normal(size=(n, n)))
    A = q1 @ np.diag(rng.uniform(*spread, size=n)) @ q2
    m = int(rng.integers(1, n + 1))
    F = rng.normal(size=(n, n)) / np.sqrt(n)
    C = rng.normal(size=(m, n)) / np.sqrt(n)
    return KalmanModel(A, F, C)
