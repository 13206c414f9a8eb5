"""Chain quality diagnostics."""

from __future__ import annotations

import numpy as np


def effective_sample_size(x: np.ndarray) -> float:
    """ESS of a scalar chain via Geyer's initial monotone positive sequence.

    Autocovariances come from one FFT pass; adjacent-lag pairs are summed,
    truncated at the first negative pair, and enforced non-increasing
    before entering the usual n / (1 + 2 sum rho) formula.  A constant
    chain has no information and reports an ESS of 0.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 2:
        return 0.0
    x = x - x.mean()
    var = np.dot(x, x) / n
    if var == 0:
        return 0.0
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n] / n
    rho = acov / acov[0]

    pair_sums = []
    for k in range(0, n - 1, 2):
        s = rho[k] + (rho[k + 1] if k + 1 < n else 0.0)
        if s <= 0:
            break
        pair_sums.append(s)
    if not pair_sums:
        return float(n)
    pair_sums = np.minimum.accumulate(pair_sums)
    tau = 2.0 * pair_sums.sum() - 1.0
    tau = max(tau, 1.0)
    return float(n / tau)
