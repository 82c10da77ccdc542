"""Pure-Python kernels.

Reference implementations of the two hot loops. The compiled module
``optopro._kernels`` exposes the same functions and must agree bit for bit:
keep the floating-point operation order identical in both files.
"""
import math

import numpy as np


def lif_euler(flashes, c, r, v_th, v_reset, height, bin_ms, substeps):
    """Forward-Euler LIF integration over binned box stimulus.

    Returns ``(spikes, final_v, crossing_times_ms, peak_v)``. A threshold
    crossing at the end of global substep ``k`` is stamped at time
    ``(k + 1) * dt`` and binned by ``floor(time / bin_ms)``.
    """
    fl = [int(x) for x in flashes]
    n = len(fl)
    spikes = np.zeros(n, dtype=np.int8)
    crossings = []
    dt = bin_ms / substeps
    v = v_reset
    peak = v_reset
    last = substeps - 1
    for b in range(n):
        cur = height if fl[b] else 0.0
        if cur == 0.0 and v == 0.0:
            # fixed point of the update: v + dt * (0 - 0 / r) / c == 0
            continue
        for j in range(substeps):
            v = v + dt * (cur - v / r) / c
            if v > peak:
                peak = v
            if v >= v_th:
                k = b * substeps + j
                crossings.append((k + 1) * dt)
                sb = b + 1 if j == last else b
                if sb < n:
                    spikes[sb] = 1
                v = v_reset
    return spikes, v, np.asarray(crossings, dtype=np.float64), peak


def history_features(flashes, spikes, strict_ddagger=False):
    """PF, CF, SF for every bin of one sweep in a single pass.

    Returns ``(pf, cf, sf, valid)``; entries where any history marker is
    undefined hold NaN and ``valid == 0``.
    """
    fl = [int(x) for x in flashes]
    sp = [int(x) for x in spikes]
    n = len(fl)
    nan = math.nan
    pf = np.full(n, nan)
    cf = np.full(n, nan)
    sf = np.full(n, nan)
    valid = np.zeros(n, dtype=np.uint8)

    last_flash = -1      # t-dagger candidate: last flash <= t
    have_spike = False   # t-star defined
    count = 0            # flashes in [t*, t]
    chain_ok = False     # t-ddagger defined
    chain_last = -1      # latest flash of F_t seen so far
    gap_sq = 0           # squared gaps inside the chain, excluding (t - chain_last)

    for t in range(n):
        prev_flash = last_flash
        if fl[t]:
            last_flash = t
        if have_spike:
            count += fl[t]
        if have_spike and chain_ok and last_flash >= 0:
            d = t - chain_last
            s = gap_sq + d * d
            pf[t] = math.log(1 + t - last_flash)
            cf[t] = math.log(1 + count)
            sf[t] = math.log(math.log(1 + s))
            valid[t] = 1
        if fl[t] and chain_ok:
            d = t - chain_last
            gap_sq += d * d
            chain_last = t
        if sp[t]:
            have_spike = True
            count = fl[t]
            anchor = prev_flash if strict_ddagger else last_flash
            if anchor < 0:
                chain_ok = False
            else:
                chain_ok = True
                if strict_ddagger and fl[t]:
                    d = t - anchor
                    gap_sq = d * d
                    chain_last = t
                else:
                    gap_sq = 0
                    chain_last = anchor
    return pf, cf, sf, valid
