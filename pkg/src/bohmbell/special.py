"""Inverse error function."""
from __future__ import annotations

import numpy as np
from scipy.special import erf, erfc

__all__ = ["inverse_erf"]

_TWO_OVER_SQRT_PI = 2.0 / np.sqrt(np.pi)

# single-precision polynomial fits of erfinv(x)/x in w = -log(1 - x^2)  (M. Giles, 2010)
_CENTRAL = [
    2.81022636e-08, 3.43273939e-07, -3.5233877e-06, -4.39150654e-06, 0.00021858087,
    -0.00125372503, -0.00417768164, 0.246640727, 1.50140941,
]
_TAIL = [
    -0.000200214257, 0.000100950558, 0.00134934322, -0.00367342844, 0.00573950773,
    -0.0076224613, 0.00943887047, 1.00167406, 2.83297682,
]


def _initial_guess(x):
    w = -np.log1p(-x * x)
    central = w < 5.0
    wc = np.where(central, w - 2.5, np.sqrt(w) - 3.0)
    pc = np.polyval(_CENTRAL, wc)
    pt = np.polyval(_TAIL, wc)
    return np.where(central, pc, pt) * x


def inverse_erf(x, max_iter: int = 8):
    """``y`` with ``erf(y) == x`` for ``|x| < 1``.

    Newton steps on ``erf`` refine the polynomial start.  For ``|x| > 0.5`` the
    iteration runs on ``log erfc(y) = log(1 - |x|)`` instead, which avoids the
    cancellation near the ends and converges fast far into the tail.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(np.abs(x) >= 1):
        raise ValueError("inverse_erf needs |x| < 1")
    a = np.abs(x)
    y = _initial_guess(a)
    tail = a > 0.5
    log_one_minus = np.log(np.where(tail, 1.0 - a, 1.0))  # 1 - a is exact for a >= 0.5
    for _ in range(max_iter):
        slope = _TWO_OVER_SQRT_PI * np.exp(-y * y)
        with np.errstate(divide="ignore", invalid="ignore"):
            ec = erfc(y)
            tail_step = (np.log(ec) - log_one_minus) * ec / -slope
        step = np.where(tail, tail_step, (erf(y) - a) / slope)
        y = y - step
        if np.all(np.abs(step) <= 1e-16 * np.maximum(np.abs(y), 1e-300)):
            break
    y = np.copysign(y, x)
    return y if y.ndim else float(y)
