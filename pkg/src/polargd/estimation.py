"""Pilot-free estimation of a real channel gain.

The gain is picked on a grid as the value whose LLRs make the received word
look most like a codeword, i.e. the maximizer of the approximated codebook
probability returned by the list decoder.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import llr_from_observation
from .construction import CodeSpec
from .scl import decode_scl_batch


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class GainEstimate:
    h_hat: float
    log_q_star_at_h_hat: float
    grid: np.ndarray
    log_q_star: np.ndarray


def gain_grid(h_min: float, h_max: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise EstimationError("the grid is empty")
    if steps == 1:
        return np.array([float(h_min)])
    if not h_min < h_max:
        raise EstimationError("h_min must be below h_max")
    return np.linspace(h_min, h_max, steps)


def codebook_objective(y, spec: CodeSpec, noise_sigma: float, grid, L: int) -> np.ndarray:
    """log Q* for every (frame, grid point); shape (B, G)."""
    if spec.K == spec.N:
        raise EstimationError("a code without frozen bits gives a flat objective")
    if noise_sigma <= 0:
        raise EstimationError("noise_sigma must be positive")
    Y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise EstimationError("the grid is empty")
    llrs = llr_from_observation(Y[:, None, :] * grid[None, :, None], noise_sigma)
    res = decode_scl_batch(llrs.reshape(-1, spec.N), spec, L)
    return res.log_q_star.reshape(Y.shape[0], grid.size)


def estimate_gain_batch(y, spec: CodeSpec, noise_sigma: float, grid=(0.5, 2.0, 61), L: int = 4):
    """Grid-search gain estimates for a (B, N) batch; returns (h_hat, log Q* at h_hat)."""
    h = gain_grid(*grid)
    obj = codebook_objective(y, spec, noise_sigma, h, L)
    best = np.argmax(obj, axis=1)  # first maximum, i.e. the smaller gain on ties
    return h[best], obj[np.arange(len(best)), best]


def estimate_gain(y, spec: CodeSpec, noise_sigma: float, grid=(0.5, 2.0, 61), L: int = 4) -> GainEstimate:
    """Estimate the gain of one received word.

    Parameters
    ----------
    y : array_like
        Received samples ``h x + noise`` of one BPSK codeword.
    grid : tuple
        ``(h_min, h_max, steps)``, evaluated on an inclusive linear grid.
    """
    h = gain_grid(*grid)
    obj = codebook_objective(y, spec, noise_sigma, h, L)[0]
    k = int(np.argmax(obj))
    return GainEstimate(float(h[k]), float(obj[k]), h, obj)
