"""Leaky integrate-and-fire neuron driven by binned box-shaped flashes.

The membrane obeys ``C dV/dt + V/R = I(t)`` with ``I`` equal to
``stimulus_height`` over every flash bin and 0 elsewhere. It is integrated
by forward Euler with ``substeps_per_bin`` steps per bin, starting from
``v_reset``. When V reaches ``v_th`` at the end of a substep the crossing
time is that substep's end, the spike goes to the bin containing that time
(``floor(time / bin_ms)``) and V is reset.

Randomness: every generator is ``numpy.random.Generator(PCG64(seed))``.
Replication seeds are derived with :func:`derive_seed`.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import DomainError
from .pointproc import BIN_MS, Dataset, Sweep

RNG_ALGORITHM = "numpy PCG64 (numpy.random.Generator), SeedSequence mixing"


@dataclass(frozen=True)
class LifParams:
    C: float = 7.0
    R: float = 3.0
    v_th: float = 1.0
    v_reset: float = 0.0
    substeps_per_bin: int = 100
    bin_ms: float = BIN_MS
    stimulus_height: float = 1.0

    def __post_init__(self):
        if not self.C > 0 or not self.R > 0:
            raise DomainError("C and R must be positive")
        if not self.v_reset < self.v_th:
            raise DomainError("v_reset must be below v_th")
        if int(self.substeps_per_bin) != self.substeps_per_bin or self.substeps_per_bin < 1:
            raise DomainError("substeps_per_bin must be a positive integer")
        if not self.bin_ms > 0:
            raise DomainError("bin_ms must be positive")

    @property
    def tau_ms(self):
        return self.R * self.C

    @property
    def dt_ms(self):
        return self.bin_ms / self.substeps_per_bin

    def scaled(self, which: str, multiplier: float) -> "LifParams":
        if which not in ("C", "R"):
            raise DomainError(f"can only scale C or R, not {which!r}")
        return replace(self, **{which: getattr(self, which) * multiplier})


@dataclass(frozen=True)
class LifTrace:
    flashes: np.ndarray
    spikes: np.ndarray
    final_potential: float
    spike_count: int
    crossing_times_ms: np.ndarray
    peak_potential: float


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_seed(base_seed: int, index: int) -> int:
    """64-bit seed for replication ``index``.

    ``SeedSequence(base_seed, spawn_key=(index,)).generate_state(1, uint64)``.
    """
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def gen_stimulus(n_bins: int, p: float = 0.14, rng=0) -> np.ndarray:
    """iid Bernoulli(p) flash indicators, one uniform draw per bin."""
    if n_bins < 1:
        raise DomainError("n_bins must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"flash probability {p} outside [0, 1]")
    u = make_rng(rng).random(int(n_bins))
    return (u < p).astype(np.uint8)


def simulate_lif(params: LifParams, flashes) -> LifTrace:
    fl = np.ascontiguousarray(flashes, dtype=np.uint8)
    if fl.ndim != 1 or fl.size < 1:
        raise DomainError("flashes must be a non-empty 1-d sequence")
    spikes, v, crossings, peak = kernels.lif_euler(
        fl, float(params.C), float(params.R), float(params.v_th), float(params.v_reset),
        float(params.stimulus_height), float(params.bin_ms), int(params.substeps_per_bin))
    spikes = np.asarray(spikes, dtype=np.uint8)
    return LifTrace(fl, spikes, float(v), int(spikes.sum()), crossings, float(peak))


def potential_trace(params: LifParams, flashes):
    """Membrane potential after every substep, before any reset, plus spike flags.

    Slow reference used for checking the integrator; returns ``(v, fired)``
    arrays of length ``len(flashes) * substeps_per_bin``.
    """
    fl = np.asarray(flashes, dtype=np.uint8)
    sub = params.substeps_per_bin
    dt = params.bin_ms / sub
    v = params.v_reset
    out = np.empty(fl.size * sub)
    fired = np.zeros(fl.size * sub, dtype=bool)
    for k in range(fl.size * sub):
        cur = params.stimulus_height if fl[k // sub] else 0.0
        v = v + dt * (cur - v / params.R) / params.C
        out[k] = v
        if v >= params.v_th:
            fired[k] = True
            v = params.v_reset
    return out, fired


def simulate_dataset(params: LifParams, n_bins: int, p: float = 0.14, seed=0,
                     sweep_id: int = 0) -> Dataset:
    flashes = gen_stimulus(n_bins, p, make_rng(seed))
    trace = simulate_lif(params, flashes)
    return Dataset((Sweep(sweep_id, trace.flashes, trace.spikes, params.bin_ms),))
