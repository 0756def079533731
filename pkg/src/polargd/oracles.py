"""Exact reference computations for small codes.

Two independent routes: brute-force enumeration of the codebook, and
forward-backward over the syndrome trellis of a parity-check matrix. The
decoder's approximations are tested against these.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_expit, logsumexp

from .channel import LLR_MAX
from .construction import CodeSpec

ENUMERATION_MAX_K = 24
APP_ENUMERATION_MAX_K = 20
TRELLIS_MAX_REDUNDANCY = 16
_CHUNK = 1 << 14


class OracleLimitError(ValueError):
    """The code is too large for exhaustive computation."""


def _message_chunks(K: int):
    """Yield all 2^K messages (as {0,1} rows) in chunks."""
    total = 1 << K
    bits = np.arange(K, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        yield ((idx[:, None] >> bits[::-1]) & 1).astype(np.uint8)


def _codeword_chunks(spec: CodeSpec):
    G = spec.generator.astype(np.int64)
    if spec.K == 0:
        yield np.zeros((1, spec.N), dtype=np.uint8)
        return
    for msgs in _message_chunks(spec.K):
        yield ((msgs.astype(np.int64) @ G) & 1).astype(np.uint8)


def enumerate_codebook_prob(llrs, spec: CodeSpec) -> float:
    """log of the total uniform-input probability of the valid input vectors."""
    if spec.K > ENUMERATION_MAX_K:
        raise OracleLimitError(f"K={spec.K} exceeds the enumeration limit {ENUMERATION_MAX_K}")
    llrs = np.asarray(llrs, dtype=np.float64)
    base = log_expit(llrs).sum()
    parts = [logsumexp(base - C @ llrs) for C in _codeword_chunks(spec)]
    return float(logsumexp(parts))


def exact_bitwise_app(llrs, priors, spec: CodeSpec) -> np.ndarray:
    """Bitwise APP LLRs by summing over the whole codebook."""
    if spec.K > APP_ENUMERATION_MAX_K:
        raise OracleLimitError(f"K={spec.K} exceeds the APP enumeration limit {APP_ENUMERATION_MAX_K}")
    lam = np.asarray(llrs, dtype=np.float64) + (0.0 if priors is None else np.asarray(priors, dtype=np.float64))
    zero = np.full(spec.N, -np.inf)
    one = np.full(spec.N, -np.inf)
    for C in _codeword_chunks(spec):
        w = (-(C @ lam))[:, None]
        zero = np.logaddexp(zero, logsumexp(np.where(C == 0, w, -np.inf), axis=0))
        one = np.logaddexp(one, logsumexp(np.where(C == 1, w, -np.inf), axis=0))
    with np.errstate(invalid="ignore"):
        app = zero - one
    return np.clip(app, -LLR_MAX, LLR_MAX)


@dataclass(frozen=True)
class SyndromeTrellis:
    """Trellis whose state is the running syndrome of a parity-check matrix.

    ``columns[i]`` is column ``i`` of H packed into an integer; a code bit 1
    at position ``i`` moves state ``s`` to ``s ^ columns[i]``.
    """

    columns: np.ndarray
    n_states: int

    @classmethod
    def from_parity_checks(cls, H) -> "SyndromeTrellis":
        H = np.atleast_2d(np.asarray(H, dtype=np.uint8))
        r = H.shape[0]
        if r > TRELLIS_MAX_REDUNDANCY:
            raise OracleLimitError(f"{r} parity checks exceed the trellis limit {TRELLIS_MAX_REDUNDANCY}")
        weights = (1 << np.arange(r, dtype=np.int64))
        columns = (H.astype(np.int64) * weights[:, None]).sum(axis=0) if r else np.zeros(H.shape[1], dtype=np.int64)
        return cls(columns.astype(np.int64), 1 << r)


def bcjr_app_batch(llrs, priors, H) -> np.ndarray:
    """Log-domain BCJR over the syndrome trellis for a (B, N) batch."""
    lam = np.atleast_2d(np.asarray(llrs, dtype=np.float64))
    if priors is not None:
        lam = lam + np.atleast_2d(np.asarray(priors, dtype=np.float64))
    B, N = lam.shape
    H = np.asarray(H, dtype=np.uint8).reshape(-1, N)
    trellis = SyndromeTrellis.from_parity_checks(H)
    S = trellis.n_states
    states = np.arange(S, dtype=np.int64)
    g0 = log_expit(lam)
    g1 = log_expit(-lam)

    alpha = np.empty((N + 1, B, S))
    alpha[0] = -np.inf
    alpha[0, :, 0] = 0.0
    for i in range(N):
        flip = states ^ trellis.columns[i]
        alpha[i + 1] = np.logaddexp(alpha[i] + g0[:, i:i + 1], alpha[i][:, flip] + g1[:, i:i + 1])

    beta = np.full((B, S), -np.inf)
    beta[:, 0] = 0.0
    app = np.empty((B, N))
    for i in range(N - 1, -1, -1):
        flip = states ^ trellis.columns[i]
        a = alpha[i]
        zero = logsumexp(a + beta, axis=1) + g0[:, i]
        one = logsumexp(a + beta[:, flip], axis=1) + g1[:, i]
        app[:, i] = zero - one
        beta = np.logaddexp(beta + g0[:, i:i + 1], beta[:, flip] + g1[:, i:i + 1])
    return np.clip(app, -LLR_MAX, LLR_MAX)


def bcjr_app(llrs, priors, H) -> np.ndarray:
    """Exact bitwise APP LLRs of the code with parity-check matrix ``H``."""
    llrs = np.asarray(llrs, dtype=np.float64)
    pri = None if priors is None else np.asarray(priors, dtype=np.float64)[None, :]
    return bcjr_app_batch(llrs[None, :], pri, H)[0]
