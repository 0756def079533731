"""Accept/reject rules, outcome classification and error-rate statistics."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .construction import CrcPoly, crc_check, crc_generator_matrix

N_BINS = 10
OVERFLOW = -1


class DecisionOutcome(enum.Enum):
    ACCEPTED_CORRECT = "accepted_correct"
    UNDETECTED_ERROR = "undetected_error"
    DETECTED_ERROR = "detected_error"


def threshold_accept(gamma_star_value: float, epsilon: float) -> bool:
    """Accept iff the estimated correctness probability exceeds ``1 - epsilon``."""
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must be in [0, 1), got {epsilon}")
    return gamma_star_value > 1.0 - epsilon


def forney_log_threshold(T: float, N: int) -> float:
    """log of 2^{NT} / (1 + 2^{NT})."""
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    return -math.log1p(math.exp(-N * T * math.log(2.0))) if math.isfinite(T) else 0.0


def forney_threshold(candidate_log_prob: float, total_log_prob: float, T: float, N: int) -> bool:
    return candidate_log_prob - total_log_prob >= forney_log_threshold(T, N)


def crc_select(candidates, message_len: int, crc_poly: CrcPoly):
    """Index of the first candidate payload (ascending metric) passing the CRC, else None."""
    for k, payload in enumerate(candidates):
        payload = np.asarray(payload, dtype=np.uint8)
        if len(payload) != message_len + crc_poly.degree:
            raise ValueError("payload length must be message_len + CRC degree")
        if crc_check(payload, crc_poly):
            return k
    return None


def crc_select_batch(payloads: np.ndarray, n_cand: np.ndarray, message_len: int, crc_poly: CrcPoly) -> np.ndarray:
    """Vectorized :func:`crc_select` over (B, L, K) payloads; -1 where none passes."""
    P = crc_generator_matrix(message_len, crc_poly).astype(np.int64)
    msg = payloads[..., :message_len].astype(np.int64)
    ok = np.all(((msg @ P) & 1) == payloads[..., message_len:], axis=-1)
    ok &= np.arange(payloads.shape[1])[None, :] < n_cand[:, None]
    first = np.argmax(ok, axis=1)
    return np.where(ok.any(axis=1), first, -1)


def classify_outcome(accepted: bool, decided_info_bits, true_info_bits) -> DecisionOutcome:
    decided = np.asarray(decided_info_bits)
    truth = np.asarray(true_info_bits)
    if decided.shape != truth.shape:
        raise ValueError("decided and true information bits differ in length")
    if not accepted:
        return DecisionOutcome.DETECTED_ERROR
    if np.array_equal(decided, truth):
        return DecisionOutcome.ACCEPTED_CORRECT
    return DecisionOutcome.UNDETECTED_ERROR


def calibration_bin(one_minus_gamma: float) -> int:
    """Bin k holds (10^-(k+1)/2, 10^-k/2]; below 10^-5 is OVERFLOW."""
    if not 0.0 <= one_minus_gamma <= 1.0:
        raise ValueError(f"value must lie in [0, 1], got {one_minus_gamma}")
    return int(calibration_bins(np.array([one_minus_gamma]))[0])


def calibration_bins(values) -> np.ndarray:
    x = np.asarray(values, dtype=np.float64)
    with np.errstate(divide="ignore"):
        k = np.floor(-2.0 * np.log10(x))
    k = np.where(x >= 1.0, 0, k)
    return np.where((x > 0) & (k < N_BINS), k, OVERFLOW).astype(np.int64)


def bin_edges(k: int) -> tuple[float, float]:
    return 10.0 ** (-(k + 1) / 2), 10.0 ** (-k / 2)


@dataclass
class CalibrationBins:
    """Per-bin block counts, errors and summed predicted error probability."""

    count: np.ndarray = field(default_factory=lambda: np.zeros(N_BINS, dtype=np.int64))
    errors: np.ndarray = field(default_factory=lambda: np.zeros(N_BINS, dtype=np.int64))
    predicted: np.ndarray = field(default_factory=lambda: np.zeros(N_BINS))

    def add(self, one_minus_gamma, is_error) -> None:
        x = np.asarray(one_minus_gamma, dtype=np.float64)
        err = np.asarray(is_error, dtype=bool)
        k = calibration_bins(x)
        keep = k != OVERFLOW
        self.count += np.bincount(k[keep], minlength=N_BINS)
        self.errors += np.bincount(k[keep], weights=err[keep], minlength=N_BINS).astype(np.int64)
        # math.fsum keeps bin sums independent of chunking
        for b in np.unique(k[keep]):
            self.predicted[b] = math.fsum([self.predicted[b], *x[k == b].tolist()])

    def merge(self, other: "CalibrationBins") -> None:
        self.count += other.count
        self.errors += other.errors
        self.predicted = np.array([math.fsum(p) for p in zip(self.predicted, other.predicted)])

    def rows(self):
        """(bin, lo, hi, count, errors, mean predicted, measured) for non-empty bins."""
        for k in range(N_BINS):
            if self.count[k]:
                lo, hi = bin_edges(k)
                yield (k, lo, hi, int(self.count[k]), int(self.errors[k]),
                       float(self.predicted[k] / self.count[k]), float(self.errors[k] / self.count[k]))


@dataclass
class MetricsAccumulator:
    trials: int = 0
    errors: int = 0
    undetected: int = 0
    list_misses: int = 0
    bins: dict = field(default_factory=dict)

    def record(self, outcome: DecisionOutcome, list_miss: bool = False) -> None:
        self.trials += 1
        if outcome is not DecisionOutcome.ACCEPTED_CORRECT:
            self.errors += 1
        if outcome is DecisionOutcome.UNDETECTED_ERROR:
            self.undetected += 1
        self.list_misses += bool(list_miss)

    def record_batch(self, accepted, correct, list_miss=None) -> None:
        accepted = np.asarray(accepted, dtype=bool)
        correct = np.asarray(correct, dtype=bool)
        self.trials += int(accepted.size)
        self.errors += int(np.count_nonzero(~(accepted & correct)))
        self.undetected += int(np.count_nonzero(accepted & ~correct))
        if list_miss is not None:
            self.list_misses += int(np.count_nonzero(list_miss))

    def calibration(self, name: str) -> CalibrationBins:
        return self.bins.setdefault(name, CalibrationBins())

    def merge(self, other: "MetricsAccumulator") -> "MetricsAccumulator":
        self.trials += other.trials
        self.errors += other.errors
        self.undetected += other.undetected
        self.list_misses += other.list_misses
        for name, b in other.bins.items():
            self.calibration(name).merge(b)
        return self


def metrics(acc: MetricsAccumulator) -> dict:
    """BLER counts every trial not accepted-and-correct; MDR is UER / BLER."""
    if acc.trials == 0:
        raise ValueError("no trials recorded")
    bler = acc.errors / acc.trials
    uer = acc.undetected / acc.trials
    return {
        "bler": bler,
        "uer": uer,
        "mdr": uer / bler if bler > 0 else 0.0,
        "ler": acc.list_misses / acc.trials,
    }


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)
