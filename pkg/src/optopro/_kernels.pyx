# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``optopro._fallback``.

Operation order mirrors the Python code exactly so both backends produce
identical floats.
"""
from libc.math cimport log, NAN

import numpy as np


def lif_euler(flashes, double c, double r, double v_th, double v_reset,
              double height, double bin_ms, int substeps):
    cdef const unsigned char[::1] fl = np.ascontiguousarray(flashes, dtype=np.uint8)
    cdef Py_ssize_t n = fl.shape[0]
    spikes_arr = np.zeros(n, dtype=np.int8)
    cdef signed char[::1] spikes = spikes_arr
    crossings = []
    cdef double dt = bin_ms / substeps
    cdef double v = v_reset
    cdef double peak = v_reset
    cdef double cur
    cdef Py_ssize_t b, sb, k
    cdef int j
    cdef int last = substeps - 1
    for b in range(n):
        cur = height if fl[b] else 0.0
        if cur == 0.0 and v == 0.0:
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
    return spikes_arr, v, np.asarray(crossings, dtype=np.float64), peak


def history_features(flashes, spikes, bint strict_ddagger=False):
    cdef const unsigned char[::1] fl = np.ascontiguousarray(flashes, dtype=np.uint8)
    cdef const unsigned char[::1] sp = np.ascontiguousarray(spikes, dtype=np.uint8)
    cdef Py_ssize_t n = fl.shape[0]
    pf_arr = np.full(n, np.nan)
    cf_arr = np.full(n, np.nan)
    sf_arr = np.full(n, np.nan)
    valid_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] pf = pf_arr
    cdef double[::1] cf = cf_arr
    cdef double[::1] sf = sf_arr
    cdef unsigned char[::1] valid = valid_arr

    cdef long long last_flash = -1, prev_flash, anchor
    cdef bint have_spike = False, chain_ok = False
    cdef long long count = 0, chain_last = -1, gap_sq = 0, d, s
    cdef Py_ssize_t t
    for t in range(n):
        prev_flash = last_flash
        if fl[t]:
            last_flash = t
        if have_spike:
            count += fl[t]
        if have_spike and chain_ok and last_flash >= 0:
            d = t - chain_last
            s = gap_sq + d * d
            pf[t] = log(<double>(1 + t - last_flash))
            cf[t] = log(<double>(1 + count))
            sf[t] = log(log(<double>(1 + s)))
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
    return pf_arr, cf_arr, sf_arr, valid_arr
