"""Block-processing kernel for the float cascade.

The jitted and pure-Python variants perform the identical sequence of IEEE
double operations as the scalar section update in core.step_section, so all
three paths produce bit-identical outputs.
"""

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None
    HAVE_NUMBA = False


def _cascade_block_py(samples, a0, c0, r, h, g, w1, w2, out):
    n_samples = samples.shape[0]
    n_sections = a0.shape[0]
    for t in range(n_samples):
        x = samples[t]
        for k in range(n_sections):
            w1k = w1[k]
            w2k = w2[k]
            w1n = r[k] * (a0[k] * w1k - c0[k] * w2k) + x
            w2n = r[k] * (c0[k] * w1k + a0[k] * w2k)
            x = g[k] * (x + h[k] * w2n)
            w1[k] = w1n
            w2[k] = w2n
            out[t, k] = x


if HAVE_NUMBA:
    cascade_block = njit(cache=True, fastmath=False)(_cascade_block_py)
else:  # pragma: no cover
    cascade_block = _cascade_block_py

cascade_block_py = _cascade_block_py
