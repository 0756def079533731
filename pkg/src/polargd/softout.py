"""Bitwise APP and extrinsic LLRs from SCL candidate lists.

Two extractors are provided: the codebook-probability blend, where the mass
not covered by the list is shared out according to each bit's own channel
posterior, and Pyndiah's max-log rule with a saturation constant for bits on
which the list agrees. Priors are expected to have been added to the channel
LLRs before decoding, so path metrics already include them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_expit, logsumexp

from .channel import LLR_MAX
from .construction import CodeSpec, polar_transform
from .scl import BatchDecodeResult, DecodeResult


@dataclass(frozen=True)
class SoftBitOutput:
    app: np.ndarray
    extrinsic: np.ndarray


def _fixed_bits(spec: CodeSpec) -> np.ndarray:
    """Positions where every codeword carries a 0."""
    return ~spec.generator.any(axis=0)


def _as_batch(result: DecodeResult) -> BatchDecodeResult:
    return BatchDecodeResult(result.u[None], np.asarray(result.pm, dtype=np.float64)[None],
                             np.array([result.log_q_star]), np.array([len(result.pm)]), result.spec)


def _inputs(result: BatchDecodeResult, channel_llrs, priors):
    ch = np.atleast_2d(np.asarray(channel_llrs, dtype=np.float64))
    pri = np.zeros_like(ch) if priors is None else np.atleast_2d(np.asarray(priors, dtype=np.float64))
    if ch.shape != (len(result), result.spec.N) or pri.shape != ch.shape:
        raise ValueError("channel LLRs and priors must be (B, N) matching the decode")
    valid = np.arange(result.pm.shape[1])[None, :] < result.n_cand[:, None]
    score = np.where(valid, -result.pm, -np.inf)  # log Q of each candidate
    C = polar_transform(result.u)
    return ch, pri, score, C


def _label_scores(score: np.ndarray, C: np.ndarray, reduce):
    s = score[:, :, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        zero = reduce(np.where(C == 0, s, -np.inf), axis=1)
        one = reduce(np.where(C == 1, s, -np.inf), axis=1)
    return zero, one


def _finish(app, ch, pri) -> SoftBitOutput:
    app = np.clip(app, -LLR_MAX, LLR_MAX)
    ext = np.clip(app - pri - ch, -LLR_MAX, LLR_MAX)
    return SoftBitOutput(app, ext)


def soscl_soft_output_batch(result: BatchDecodeResult, channel_llrs, priors=None) -> SoftBitOutput:
    ch, pri, score, C = _inputs(result, channel_llrs, priors)
    lam = ch + pri
    zero, one = _label_scores(score, C, logsumexp)
    with np.errstate(divide="ignore"):
        log_w = result.log_unvisited_mass()[:, None]
    zero = np.logaddexp(zero, log_w + log_expit(lam))
    one = np.logaddexp(one, log_w + log_expit(-lam))
    with np.errstate(invalid="ignore"):
        app = zero - one
    app = np.where(_fixed_bits(result.spec)[None, :], LLR_MAX, app)
    return _finish(app, ch, pri)


def soscl_soft_output(result: DecodeResult, channel_llrs, priors=None) -> SoftBitOutput:
    """APP/extrinsic LLRs from list mass plus the channel-weighted unvisited mass."""
    out = soscl_soft_output_batch(_as_batch(result), channel_llrs, priors)
    return SoftBitOutput(out.app[0], out.extrinsic[0])


def pyndiah_soft_output_batch(result: BatchDecodeResult, channel_llrs, priors=None, beta: float = 1.0) -> SoftBitOutput:
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    ch, pri, score, C = _inputs(result, channel_llrs, priors)
    zero, one = _label_scores(score, C, np.max)
    only0 = np.isneginf(one)
    only1 = np.isneginf(zero)
    with np.errstate(invalid="ignore"):
        app = np.where(only0, LLR_MAX, np.where(only1, -LLR_MAX, zero - one))
    out = _finish(app, ch, pri)
    ext = np.where(only0, beta, np.where(only1, -beta, out.extrinsic))
    return SoftBitOutput(out.app, ext)


def pyndiah_soft_output(result: DecodeResult, channel_llrs, priors=None, beta: float = 1.0) -> SoftBitOutput:
    """Max-log APP over the list; bits the list agrees on get extrinsic ``+-beta``."""
    out = pyndiah_soft_output_batch(_as_batch(result), channel_llrs, priors, beta)
    return SoftBitOutput(out.app[0], out.extrinsic[0])


def app_hard_decision(app) -> np.ndarray:
    """0 where the APP LLR is non-negative, else 1."""
    return (np.asarray(app) < 0).astype(np.uint8)
