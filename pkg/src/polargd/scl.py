"""SC/SCL decoding with codebook-probability tracking.

The decoder works in the LLR domain with exact path metrics
``pm = -ln Q(u^i | y)``. Whenever list pruning discards a child ``a^i`` at an
information position, its mass ``2^-f Q(a^i | y)`` is added to an
accumulator, ``f`` being the number of frozen positions after ``i``. The
approximated codebook probability is the accumulator plus the mass of the
surviving leaves; dividing a candidate's probability by it estimates the
probability that the candidate is the transmitted word.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ._backend import get_kernel
from .construction import CodeSpec, polar_transform


def check_combine(a: float, b: float) -> float:
    """``2 atanh(tanh(a/2) tanh(b/2))`` in a form that does not overflow."""
    return get_kernel("python").check_combine(float(a), float(b))


def bit_combine(a: float, b: float, s: int) -> float:
    return b + (1 - 2 * s) * a


def pm_update(pm: float, lam: float, u: int) -> float:
    """Path metric after deciding ``u`` on a bit with decision LLR ``lam``."""
    return get_kernel("python").pm_step(float(pm), float(lam), int(u))


@dataclass(frozen=True)
class DecodeResult:
    """Surviving candidates of one decode, ascending path metric."""

    u: np.ndarray
    pm: np.ndarray
    log_q_star: float
    spec: CodeSpec

    @property
    def candidates(self) -> list[tuple[np.ndarray, float]]:
        return list(zip(self.u, self.pm.tolist()))

    @property
    def codewords(self) -> np.ndarray:
        return polar_transform(self.u)

    @property
    def best(self) -> np.ndarray:
        return self.u[0]

    def log_gamma_star(self, index: int = 0) -> float:
        if not 0 <= index < len(self.pm):
            raise IndexError(f"candidate {index} out of range ({len(self.pm)} candidates)")
        return min(0.0, -float(self.pm[index]) - self.log_q_star)


def gamma_star(result: DecodeResult, candidate_index: int = 0) -> float:
    """Estimated probability that the candidate is the transmitted word."""
    return math.exp(result.log_gamma_star(candidate_index))


def gamma_list(result: DecodeResult) -> float:
    """Estimated probability that the list holds the transmitted word."""
    return math.exp(min(0.0, float(logsumexp(-result.pm)) - result.log_q_star))


def gamma_forney_list(result: DecodeResult, candidate_index: int = 0) -> float:
    """Candidate mass normalized by the list mass only."""
    if not 0 <= candidate_index < len(result.pm):
        raise IndexError(f"candidate {candidate_index} out of range")
    return math.exp(-float(result.pm[candidate_index]) - float(logsumexp(-result.pm)))


@dataclass(frozen=True)
class BatchDecodeResult:
    """Decodes of a batch of frames; padding slots carry ``pm = inf``."""

    u: np.ndarray  # (B, L, N)
    pm: np.ndarray  # (B, L)
    log_q_star: np.ndarray  # (B,)
    n_cand: np.ndarray  # (B,)
    spec: CodeSpec

    def __len__(self) -> int:
        return len(self.log_q_star)

    def __getitem__(self, b: int) -> DecodeResult:
        k = int(self.n_cand[b])
        return DecodeResult(self.u[b, :k], self.pm[b, :k], float(self.log_q_star[b]), self.spec)

    @property
    def list_log_mass(self) -> np.ndarray:
        return logsumexp(-self.pm, axis=1)

    def log_gamma_star(self) -> np.ndarray:
        return np.minimum(0.0, -self.pm[:, 0] - self.log_q_star)

    def one_minus_gamma_star(self) -> np.ndarray:
        return -np.expm1(self.log_gamma_star())

    def log_gamma_list(self) -> np.ndarray:
        return np.minimum(0.0, self.list_log_mass - self.log_q_star)

    def one_minus_gamma_list(self) -> np.ndarray:
        return -np.expm1(self.log_gamma_list())

    def log_gamma_forney(self) -> np.ndarray:
        return -self.pm[:, 0] - self.list_log_mass

    def one_minus_gamma_forney(self) -> np.ndarray:
        return -np.expm1(self.log_gamma_forney())

    def log_unvisited_mass(self) -> np.ndarray:
        """log of Q* minus the surviving-leaf mass (``-inf`` when nothing was pruned)."""
        with np.errstate(divide="ignore"):
            return self.log_q_star + np.log(-np.expm1(np.minimum(0.0, self.list_log_mass - self.log_q_star)))


def decode_scl_batch(llrs, spec: CodeSpec, L: int, backend: str | None = None) -> BatchDecodeResult:
    """SCL-decode a (B, N) array of channel LLRs."""
    llrs = np.ascontiguousarray(np.atleast_2d(llrs), dtype=np.float64)
    if llrs.shape[1] != spec.N:
        raise ValueError(f"LLR length {llrs.shape[1]} does not match N={spec.N}")
    if L < 1:
        raise ValueError("list size must be >= 1")
    ptr, idx = spec.rule_arrays
    ffc = np.ascontiguousarray(spec.future_frozen_count[1:], dtype=np.int32)
    kernel = get_kernel(backend)
    u, pm, logq, nc = kernel.decode_batch(llrs, spec.frozen_mask, ptr, idx, ffc, int(L))
    return BatchDecodeResult(u, pm, logq, nc, spec)


def decode_scl(llrs, spec: CodeSpec, L: int, backend: str | None = None) -> DecodeResult:
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.ndim != 1:
        raise ValueError("decode_scl takes one frame; use decode_scl_batch for batches")
    return decode_scl_batch(llrs[None, :], spec, L, backend)[0]


def leaf_metric(llrs, codewords) -> np.ndarray:
    """``-ln Q(c | y)`` of full codewords computed directly on the channel."""
    llrs = np.asarray(llrs, dtype=np.float64)
    signed = (1.0 - 2.0 * np.asarray(codewords, dtype=np.float64)) * llrs
    return np.logaddexp(0.0, -signed).sum(axis=-1)
