"""Binned flash/spike data and the PF, CF, SF response functions.

Bins are indexed from 0 within a sweep and history never crosses sweep
boundaries. For a bin ``t`` the three history markers are

* ``t_star``     last spike strictly before ``t``
* ``t_dagger``   last flash at or before ``t``
* ``t_ddagger``  last flash at or before ``t_star`` (strictly before when
  ``strict_ddagger=True``)

and the response functions are

* PF = log(1 + t - t_dagger)
* CF = log(1 + number of flashes in [t_star, t])
* SF = log(log(1 + sum of squared gaps)), the gaps running backwards from
  ``t`` through the flashes of [t_ddagger, t - 1].

The functions ``history_markers`` and ``response_*`` evaluate these
definitions literally, one bin at a time. ``build_design`` uses the single
pass kernel in :mod:`optopro.kernels`; the two routes are tested against
each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Iterator, Optional, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, MarkerUndefinedError, SchemaError

BIN_MS = 5.0
FEATURES = ("PF", "CF", "SF")
PRO_TERMS = ("PF", "CF", "SF", "CF:SF")


def _binary_array(values, name):
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{name} must contain only 0 and 1")
    arr = arr.astype(np.uint8)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Sweep:
    """One trial: aligned binary flash and spike sequences."""

    id: int
    flashes: np.ndarray
    spikes: np.ndarray
    bin_ms: float = BIN_MS

    def __post_init__(self):
        if int(self.id) < 0:
            raise ValueError("sweep id must be non-negative")
        if not self.bin_ms > 0:
            raise ValueError("bin_ms must be positive")
        fl = _binary_array(self.flashes, "flashes")
        sp = _binary_array(self.spikes, "spikes")
        if fl.shape != sp.shape:
            raise ValueError("flashes and spikes must have the same length")
        if fl.size < 1:
            raise ValueError("a sweep needs at least one bin")
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "flashes", fl)
        object.__setattr__(self, "spikes", sp)

    def __len__(self):
        return int(self.flashes.size)

    def __eq__(self, other):
        if not isinstance(other, Sweep):
            return NotImplemented
        return (self.id == other.id and self.bin_ms == other.bin_ms
                and np.array_equal(self.flashes, other.flashes)
                and np.array_equal(self.spikes, other.spikes))

    __hash__ = None


@dataclass(frozen=True)
class Dataset:
    sweeps: tuple = ()

    def __post_init__(self):
        sweeps = tuple(self.sweeps)
        ids = [s.id for s in sweeps]
        if len(set(ids)) != len(ids):
            raise ValueError("sweep ids must be unique")
        if len({s.bin_ms for s in sweeps}) > 1:
            raise ValueError("all sweeps must share bin_ms")
        object.__setattr__(self, "sweeps", sweeps)

    def __len__(self):
        return len(self.sweeps)

    def __iter__(self):
        return iter(self.sweeps)

    @property
    def ids(self):
        return [s.id for s in self.sweeps]

    @property
    def n_bins(self):
        return sum(len(s) for s in self.sweeps)

    def select(self, ids: Sequence[int]) -> "Dataset":
        wanted = set(int(i) for i in ids)
        missing = wanted - set(self.ids)
        if missing:
            raise KeyError(f"unknown sweep ids: {sorted(missing)}")
        return Dataset(tuple(s for s in self.sweeps if s.id in wanted))


@dataclass(frozen=True)
class HistoryMarkers:
    t_star: Optional[int] = None
    t_dagger: Optional[int] = None
    t_ddagger: Optional[int] = None

    @property
    def complete(self):
        return None not in (self.t_star, self.t_dagger, self.t_ddagger)


def _last_index(seq, stop):
    """Largest index i <= stop with seq[i] == 1, else None."""
    if stop < 0:
        return None
    hits = np.flatnonzero(seq[: stop + 1])
    return int(hits[-1]) if hits.size else None


def history_markers(sweep: Sweep, t: int, strict_ddagger: bool = False) -> HistoryMarkers:
    if not 0 <= t < len(sweep):
        raise IndexError(f"bin {t} outside sweep of length {len(sweep)}")
    t_star = _last_index(sweep.spikes, t - 1)
    t_dagger = _last_index(sweep.flashes, t)
    t_ddagger = None
    if t_star is not None:
        t_ddagger = _last_index(sweep.flashes, t_star - 1 if strict_ddagger else t_star)
    return HistoryMarkers(t_star, t_dagger, t_ddagger)


def response_pf(sweep: Sweep, t: int) -> float:
    m = history_markers(sweep, t)
    if m.t_dagger is None:
        raise MarkerUndefinedError(f"no flash at or before bin {t}")
    return math.log(1 + t - m.t_dagger)


def response_cf(sweep: Sweep, t: int) -> float:
    m = history_markers(sweep, t)
    if m.t_star is None:
        raise MarkerUndefinedError(f"no spike before bin {t}")
    return math.log(1 + int(sweep.flashes[m.t_star: t + 1].sum()))


def flash_gap_sum(sweep: Sweep, t: int, strict_ddagger: bool = False) -> int:
    """Sum of squared gaps t - t(1), t(1) - t(2), ... over flashes in [t_ddagger, t-1]."""
    m = history_markers(sweep, t, strict_ddagger)
    if m.t_ddagger is None:
        raise MarkerUndefinedError(f"no flash before the last spike at bin {t}")
    times = [t] + sorted(
        (int(tau) for tau in np.flatnonzero(sweep.flashes[: t]) if tau >= m.t_ddagger),
        reverse=True,
    )
    return sum((a - b) ** 2 for a, b in zip(times, times[1:]))


def response_sf(sweep: Sweep, t: int, strict_ddagger: bool = False) -> float:
    return math.log(math.log(1 + flash_gap_sum(sweep, t, strict_ddagger)))


# -- model terms ------------------------------------------------------------

def term_label(exponents: Sequence[int]) -> str:
    parts = []
    for name, k in zip(FEATURES, exponents):
        if k == 1:
            parts.append(name)
        elif k > 1:
            parts.append(f"{name}^{k}")
    return ":".join(parts)


def parse_term(label: str) -> tuple:
    """``"CF:SF"`` -> ``(0, 1, 1)``; accepts ``:`` or ``*`` and ``^k`` powers."""
    exps = [0, 0, 0]
    factors = label.replace("*", ":").split(":")
    for factor in factors:
        factor = factor.strip().upper()
        name, _, power = factor.partition("^")
        if name not in FEATURES:
            raise SchemaError(f"unknown term {label!r}")
        try:
            k = int(power) if power else 1
        except ValueError:
            raise SchemaError(f"bad exponent in term {label!r}") from None
        if k < 1:
            raise SchemaError(f"bad exponent in term {label!r}")
        exps[FEATURES.index(name)] += k
    return tuple(exps)


def all_monomials(max_degree: int = 3) -> list:
    """Labels of every monomial in PF, CF, SF with total degree 1..max_degree."""
    out = []
    for degree in range(1, max_degree + 1):
        for combo in combinations_with_replacement(range(3), degree):
            exps = [0, 0, 0]
            for i in combo:
                exps[i] += 1
            out.append(term_label(exps))
    return out


def canonical_terms(terms: Sequence[str]) -> tuple:
    labels = tuple(term_label(parse_term(t)) for t in terms)
    if len(set(labels)) != len(labels):
        raise SchemaError(f"duplicate terms in {list(terms)}")
    return labels


# -- design matrix ----------------------------------------------------------

@dataclass(frozen=True)
class FeatureRow:
    sweep_id: int
    t: int
    pf: float
    cf: float
    sf: float
    response: int


@dataclass(frozen=True)
class DesignMatrix:
    """Model matrix for the valid bins of a dataset.

    ``X`` has an intercept in column 0 followed by one column per term.
    """

    X: np.ndarray
    term_names: tuple
    responses: np.ndarray
    sweep_ids: np.ndarray
    bins: np.ndarray
    features: np.ndarray = field(repr=False)
    n_excluded: int = 0

    @property
    def n_rows(self):
        return int(self.X.shape[0])

    @property
    def n_total(self):
        return self.n_rows + self.n_excluded

    def feature_rows(self) -> Iterator[FeatureRow]:
        for i in range(self.n_rows):
            pf, cf, sf = self.features[i]
            yield FeatureRow(int(self.sweep_ids[i]), int(self.bins[i]),
                             float(pf), float(cf), float(sf), int(self.responses[i]))

    def with_terms(self, terms: Sequence[str]) -> "DesignMatrix":
        """Same rows, different term list (features are kept)."""
        terms = canonical_terms(terms)
        return DesignMatrix(_expand(self.features, terms), terms, self.responses,
                            self.sweep_ids, self.bins, self.features, self.n_excluded)

    def take(self, idx) -> "DesignMatrix":
        idx = np.asarray(idx)
        return DesignMatrix(self.X[idx], self.term_names, self.responses[idx],
                            self.sweep_ids[idx], self.bins[idx], self.features[idx], 0)


def sweep_features(sweep: Sweep, strict_ddagger: bool = False):
    """``(pf, cf, sf, valid)`` arrays for every bin of ``sweep``."""
    return kernels.history_features(sweep.flashes, sweep.spikes, strict_ddagger)


def _expand(features: np.ndarray, terms: Sequence[str]) -> np.ndarray:
    n = features.shape[0]
    X = np.empty((n, len(terms) + 1))
    X[:, 0] = 1.0
    for j, label in enumerate(terms, start=1):
        col = np.ones(n)
        for i, k in enumerate(parse_term(label)):
            for _ in range(k):
                col = col * features[:, i]
        X[:, j] = col
    return X


def build_design(data: Dataset, terms: Sequence[str] = PRO_TERMS,
                 strict_ddagger: bool = False) -> DesignMatrix:
    terms = canonical_terms(terms)
    for label in terms:
        if sum(parse_term(label)) < 1:
            raise SchemaError(f"term {label!r} has degree 0")
    feats, ys, sids, bins = [], [], [], []
    excluded = 0
    for sweep in data:
        pf, cf, sf, valid = sweep_features(sweep, strict_ddagger)
        ok = valid.astype(bool)
        excluded += int((~ok).sum())
        feats.append(np.column_stack([pf[ok], cf[ok], sf[ok]]))
        ys.append(sweep.spikes[ok].astype(np.float64))
        idx = np.flatnonzero(ok)
        bins.append(idx)
        sids.append(np.full(idx.size, sweep.id, dtype=np.int64))
    if feats:
        features = np.vstack(feats)
        responses = np.concatenate(ys)
        sweep_ids = np.concatenate(sids)
        bin_idx = np.concatenate(bins).astype(np.int64)
    else:
        features = np.empty((0, 3))
        responses = np.empty(0)
        sweep_ids = np.empty(0, dtype=np.int64)
        bin_idx = np.empty(0, dtype=np.int64)
    return DesignMatrix(_expand(features, terms), terms, responses, sweep_ids,
                        bin_idx, features, excluded)


# -- SF extrema -------------------------------------------------------------

@dataclass(frozen=True)
class SfExtremum:
    """Extremes of the squared-gap sum for K gaps totalling M bins.

    ``argmax``/``argmin`` are one canonical composition (sorted descending);
    every permutation of them attains the same value.
    """

    M: int
    K: int
    max_value: int
    min_value: int
    argmax: tuple
    argmin: tuple


def sf_extrema(M: int, K: int) -> SfExtremum:
    if K < 1 or M < 1 or K > M:
        raise DomainError(f"need M >= K >= 1, got M={M}, K={K}")
    q, r = divmod(M, K)
    argmin = (q + 1,) * r + (q,) * (K - r)
    argmax = (M,) + (0,) * (K - 1)
    return SfExtremum(M, K, M * M, sum(a * a for a in argmin), argmax, argmin)
