"""History stacks with minimum-eigenvalue-maximizing replacement and purging.

A stack stores records together with their regressor block ``B`` (r x k);
its information matrix is ``sum_i B_i^T B_i``. For parameter estimation the
block is the row ``S_i^T``; for IRL it is the (1 + m) rows a record
contributes to the stacked regressor.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from typing import Callable, Generic, Iterable, TypeVar

import numpy as np
from scipy.linalg import lapack

R = TypeVar("R")

_VERSIONS = itertools.count()


@dataclass(frozen=True, eq=False)
class PeRecord:
    X: np.ndarray
    F: np.ndarray
    S: np.ndarray
    D_hat: np.ndarray
    recorded_at: float


@dataclass(frozen=True, eq=False)
class IrlRecord:
    x: np.ndarray
    u: np.ndarray
    theta_hat_snapshot: np.ndarray
    recorded_at: float
    # regressor rows and right-hand side, filled in by IrlModel.record
    block: np.ndarray | None = None
    rhs: np.ndarray | None = None


def pe_regressor(record: PeRecord) -> np.ndarray:
    return record.S[None, :]


def pe_cross(record: PeRecord) -> np.ndarray:
    """S_i (X_i - F_i - D_hat_i)^T, the data term of the parameter update."""
    return np.outer(record.S, record.X - record.F - record.D_hat)


def _lam_min(G: np.ndarray) -> float:
    w, _, info = lapack.dsyev(G, compute_v=0)
    if info != 0:
        return float(np.linalg.eigvalsh(G)[0])
    return float(w[0])


def _is_pd(G: np.ndarray) -> bool:
    return lapack.dpotrf(G)[1] == 0


def gram(blocks: Iterable[np.ndarray], dim: int) -> np.ndarray:
    G = np.zeros((dim, dim))
    for B in blocks:
        G += B.T @ B
    return G


def lambda_min_gram(stack: Iterable, regressor: Callable) -> float:
    """Smallest eigenvalue of the stack's information matrix (0 when empty)."""
    blocks = [np.atleast_2d(regressor(r)) for r in stack]
    if not blocks:
        return 0.0
    return max(0.0, _lam_min(gram(blocks, blocks[0].shape[1])))


class HistoryStack(Generic[R]):
    """Fixed-capacity record set with singular-value-maximizing admission.

    ``cross`` optionally maps a record to an array whose running sum over the
    stack is kept alongside the information matrix (``cross_sum``).
    """

    def __init__(self, capacity: int, regressor: Callable[[R], np.ndarray], psi: float = 0.01,
                 cross: Callable[[R], np.ndarray] | None = None):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        if psi <= 0:
            raise ValueError("psi must be positive")
        self.capacity = capacity
        self.regressor = regressor
        self.psi = psi
        self.cross = cross
        self.clear()

    def clear(self):
        self.records: list[R] = []
        self._outer: np.ndarray | None = None  # (capacity, k, k) per-record B^T B
        self._blocks: np.ndarray | None = None  # (capacity, r, k)
        self._cross: np.ndarray | None = None
        self.gram: np.ndarray | None = None
        self.cross_sum: np.ndarray | None = None
        self._lam = 0.0
        self.version = next(_VERSIONS)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def full(self) -> bool:
        return len(self.records) >= self.capacity

    @property
    def lambda_min(self) -> float:
        return max(0.0, self._lam)

    def _refresh(self):
        size = len(self.records)
        self.gram = self._outer[:size].sum(axis=0)
        if self._cross is not None:
            self.cross_sum = self._cross[:size].sum(axis=0)
        self._lam = _lam_min(self.gram)
        self.version = next(_VERSIONS)

    def _store(self, slot: int, candidate, B, C):
        if self._outer is None:
            k = C.shape[0]
            self._outer = np.zeros((self.capacity, k, k))
            self._blocks = np.zeros((self.capacity,) + B.shape)
        self._outer[slot] = C
        self._blocks[slot] = B
        if self.cross is not None:
            c = np.asarray(self.cross(candidate), dtype=float)
            if self._cross is None:
                self._cross = np.zeros((self.capacity,) + c.shape)
            self._cross[slot] = c

    def offer(self, candidate: R, block: np.ndarray | None = None) -> bool:
        """Insert ``candidate`` if there is room or if it raises lambda_min.

        When full, the slot whose replacement gives the largest lambda_min is
        overwritten, provided that value exceeds (1 + psi) times the current
        lambda_min; otherwise the candidate is discarded.
        """
        B = np.atleast_2d(self.regressor(candidate) if block is None else block)
        C = B.T @ B
        size = len(self.records)
        if size < self.capacity:
            self.records.append(candidate)
            self._store(size, candidate, B, C)
            self._refresh()
            return True
        threshold = (1.0 + self.psi) * self._lam
        # G_j <= G + C for every j: if G + C - threshold*I is not positive
        # definite no single replacement can pass the test.
        shifted = self.gram + C
        shifted.flat[::shifted.shape[0] + 1] -= threshold
        if not _is_pd(shifted):
            return False
        j = self._best_slot(shifted, C, threshold)
        if j is None:
            return False
        self.records[j] = candidate
        self._store(j, candidate, B, C)
        self._refresh()
        return True

    def _best_slot(self, shifted, C, threshold) -> int | None:
        """Slot maximizing lambda_min(G - B_j^T B_j + C) if that beats ``threshold``.

        With v the weakest eigenvector of G + C, each slot's value lies in
        [lam - ||B_j||_F^2, lam - ||B_j v||^2] (Weyl / Rayleigh). Only slots
        whose upper bound beats both the threshold and the best lower bound
        are solved exactly.
        """
        plus = shifted
        plus.flat[::plus.shape[0] + 1] += threshold
        w, V, info = lapack.dsyevd(plus)
        if info != 0:
            w, V = np.linalg.eigh(plus)
        lam, v = w[0], V[:, 0]
        proj = np.einsum("jrk,k->jr", self._blocks, v)
        upper = lam - np.einsum("jr,jr->j", proj, proj)
        lower = lam - np.einsum("jrk,jrk->j", self._blocks, self._blocks)
        cand = upper > threshold
        if not cand.any():
            return None
        cand &= upper >= lower[cand].max()
        idx = np.flatnonzero(cand)
        trial = self.gram[None, :, :] - self._outer[idx] + C[None, :, :]
        lams = np.linalg.eigvalsh(trial)[:, 0]
        best = int(np.argmax(lams))
        if lams[best] <= threshold:
            return None
        return int(idx[best])

    def to_csv(self, path) -> None:
        """Write ``recorded_at`` and the flattened regressor block of each record."""
        rows = [np.ravel(np.atleast_2d(self.regressor(r))) for r in self.records]
        width = rows[0].size if rows else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["recorded_at"] + [f"r{i + 1}" for i in range(width)])
            for rec, row in zip(self.records, rows):
                w.writerow([f"{rec.recorded_at:.9g}"] + [f"{v:.9g}" for v in row])


def sv_max_insert(stack: list, candidate, regressor: Callable, psi: float,
                  capacity: int) -> tuple[list, bool]:
    """Functional form of :meth:`HistoryStack.offer`; returns a new list."""
    hs = HistoryStack(capacity, regressor, psi)
    for r in stack:
        hs.offer(r)
    accepted = hs.offer(candidate)
    return list(hs.records), accepted


class DualStack(Generic[R]):
    """Main and transient stacks with dwell-time-gated purging.

    A purge replaces the main stack with the transient one and empties the
    transient stack.
    """

    def __init__(self, capacity: int, regressor: Callable[[R], np.ndarray], psi: float = 0.01,
                 dwell_time: float = 5.0, t0: float = 0.0, min_lambda: float = 0.0,
                 cross: Callable[[R], np.ndarray] | None = None):
        if dwell_time <= 0:
            raise ValueError("dwell time must be positive")
        self.main: HistoryStack[R] = HistoryStack(capacity, regressor, psi, cross)
        self.transient: HistoryStack[R] = HistoryStack(capacity, regressor, psi, cross)
        self.dwell_time = dwell_time
        self.last_purge_at = t0
        self.min_lambda = min_lambda
        self.purge_times: list[float] = []

    @property
    def regressor(self):
        return self.main.regressor

    @property
    def purges(self) -> int:
        return len(self.purge_times)

    def offer(self, candidate: R, block: np.ndarray | None = None) -> tuple[bool, bool]:
        """Offer to the main stack, and to the transient stack once main is full.

        Holding the transient stack back until the main stack has filled keeps
        its contents strictly newer than the data it will replace.
        """
        if block is None:
            block = np.atleast_2d(self.main.regressor(candidate))
        main_full = self.main.full
        in_main = self.main.offer(candidate, block)
        in_transient = self.transient.offer(candidate, block) if main_full else False
        return in_main, in_transient

    def purge_due(self, now: float) -> bool:
        return (self.transient.full and now - self.last_purge_at >= self.dwell_time
                and self.transient.lambda_min >= self.min_lambda)

    def try_purge(self, now: float, allow=True) -> bool:
        """Purge iff the transient stack is full, rank-ready and the dwell time has elapsed.

        ``allow`` lets the caller veto a purge with an additional criterion;
        a callable is only evaluated once the purge is otherwise due.
        """
        if not self.purge_due(now):
            return False
        if not (allow(self) if callable(allow) else allow):
            return False
        self.main, self.transient = self.transient, self.main
        self.transient.clear()
        self.main.version = next(_VERSIONS)
        self.last_purge_at = now
        self.purge_times.append(now)
        return True
