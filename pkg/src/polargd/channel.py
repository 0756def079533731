"""BPSK over the binary-input AWGN channel, Eb/N0 bookkeeping and LLRs."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LLR_MAX = 40.0


def noise_sigma(ebn0_db: float, rate: float) -> float:
    """Noise std per real dimension for unit-energy BPSK at the given Eb/N0."""
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"rate must be in (0, 1], got {rate}")
    return math.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0)))


@dataclass(frozen=True)
class ChannelParams:
    ebn0_db: float
    rate: float
    gain: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.rate <= 1.0:
            raise ValueError(f"rate must be in (0, 1], got {self.rate}")

    @property
    def sigma(self) -> float:
        return noise_sigma(self.ebn0_db, self.rate)

    @property
    def sigma2(self) -> float:
        return self.sigma ** 2


def modulate(c) -> np.ndarray:
    """Map bit 0 to +1 and bit 1 to -1."""
    return 1.0 - 2.0 * np.asarray(c, dtype=np.float64)


def transmit(x, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return params.gain * x + params.sigma * rng.standard_normal(x.shape)


def llr_from_observation(y, sigma: float, gain: float = 1.0) -> np.ndarray:
    """``2 h y / sigma^2`` clamped to +-LLR_MAX."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return np.clip(2.0 * gain * np.asarray(y, dtype=np.float64) / sigma ** 2, -LLR_MAX, LLR_MAX)


def channel_llrs(y, params: ChannelParams) -> np.ndarray:
    return llr_from_observation(y, params.sigma, params.gain)


def parse_sweep(text) -> list[float]:
    """``"3"`` or ``"1:0.5:4.5"`` (start:step:stop, inclusive)."""
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    parts = str(text).split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ValueError(f"sweep must be 'value' or 'start:step:stop', got {text!r}")
    start, step, stop = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError(f"bad sweep {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 10) for k in range(count)]


def stream(master_seed: int, *keys: int) -> np.random.Generator:
    """Counter-based random stream keyed by the master seed and integer keys.

    The same keys always give the same stream, whichever worker draws it.
    """
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(seq))
