"""Product codes and block turbo decoding with list-based SISO component decoders.

All arrays may carry leading batch axes, so several product blocks can be
decoded together; each block stops as soon as its own decision is valid.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .construction import CodeSpec, encode, is_codeword
from .scl import decode_scl_batch
from .softout import app_hard_decision, pyndiah_soft_output_batch, soscl_soft_output_batch

PYNDIAH_ALPHA = (0.2, 0.3, 0.5, 0.7, 0.9, 1.0)
PYNDIAH_BETA = (0.2, 0.4, 0.6, 0.8, 1.0)


class Siso(enum.Enum):
    PROPOSED = "proposed"
    PYNDIAH = "pyndiah"


class Axis(enum.Enum):
    ROWS = 0
    COLUMNS = 1


class Status(enum.Enum):
    RUNNING = "running"
    SUCCESS = "success"
    FAILURE = "failure"


@dataclass(frozen=True)
class TurboConfig:
    """Component code, SISO backend and per-half-iteration schedules.

    Schedules shorter than the run are extended with their last entry. When
    ``alpha`` is omitted the proposed SISO uses a constant 0.5 and Pyndiah's
    uses the classic ramp.
    """

    spec: CodeSpec
    siso: Siso = Siso.PROPOSED
    L: int = 4
    imax: int = 20
    alpha: tuple[float, ...] | None = None
    beta: tuple[float, ...] = PYNDIAH_BETA

    def __post_init__(self):
        object.__setattr__(self, "siso", Siso(self.siso))
        if self.imax < 1:
            raise ValueError("imax must be >= 1")
        if self.L < 1:
            raise ValueError("list size must be >= 1")
        if self.alpha is None:
            object.__setattr__(self, "alpha", (0.5,) if self.siso is Siso.PROPOSED else PYNDIAH_ALPHA)
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if not self.alpha or not self.beta:
            raise ValueError("schedules must not be empty")

    def alpha_at(self, t: int) -> float:
        return self.alpha[min(t, len(self.alpha) - 1)]

    def beta_at(self, t: int) -> float:
        return self.beta[min(t, len(self.beta) - 1)]


def product_encode(msg, spec: CodeSpec) -> np.ndarray:
    """Encode the rows of a K x K message, then the columns."""
    msg = np.asarray(msg, dtype=np.uint8)
    if msg.shape[-2:] != (spec.K, spec.K):
        raise ValueError(f"message must be {spec.K} x {spec.K}")
    rows = encode(msg, spec)
    return np.swapaxes(encode(np.swapaxes(rows, -1, -2), spec), -1, -2)


def is_product_codeword(bits, spec: CodeSpec) -> np.ndarray:
    """Per block: every row and every column is a component codeword."""
    bits = np.asarray(bits, dtype=np.uint8)
    N = spec.N
    lead = bits.shape[:-2]
    rows = np.asarray(is_codeword(bits.reshape(-1, N), spec)).reshape(*lead, N)
    cols = np.asarray(is_codeword(np.swapaxes(bits, -1, -2).reshape(-1, N), spec)).reshape(*lead, N)
    return rows.all(axis=-1) & cols.all(axis=-1)


@dataclass
class ProductState:
    L_ch: np.ndarray
    L_a: np.ndarray = None
    L_app: np.ndarray = None
    L_e: np.ndarray = None
    half_iterations: int = 0
    status: Status = Status.RUNNING

    def __post_init__(self):
        self.L_ch = np.asarray(self.L_ch, dtype=np.float64)
        for name in ("L_a", "L_app", "L_e"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros_like(self.L_ch))

    @property
    def iterations(self) -> float:
        return self.half_iterations / 2


def _siso(lch: np.ndarray, la: np.ndarray, config: TurboConfig, t: int):
    res = decode_scl_batch(lch + la, config.spec, config.L)
    if config.siso is Siso.PROPOSED:
        out = soscl_soft_output_batch(res, lch, la)
    else:
        out = pyndiah_soft_output_batch(res, lch, la, config.beta_at(t))
    return out.app, out.extrinsic


def half_iteration(state: ProductState, axis: Axis, config: TurboConfig, active=None) -> ProductState:
    """Decode every row (or column) of the selected blocks, then rescale the extrinsics.

    ``active`` is a boolean mask over the leading batch axes; unselected
    blocks are left untouched.
    """
    N = config.spec.N
    t = state.half_iterations
    view = (lambda a: a) if Axis(axis) is Axis.ROWS else (lambda a: np.swapaxes(a, -1, -2))
    lch, la = view(state.L_ch), view(state.L_a)
    sel = np.ones(lch.shape[:-2], dtype=bool) if active is None else np.asarray(active, dtype=bool)
    app, ext = _siso(lch[sel].reshape(-1, N), la[sel].reshape(-1, N), config, t)
    shape = lch[sel].shape
    # the views write through to the state arrays
    view(state.L_app)[sel] = app.reshape(shape)
    view(state.L_e)[sel] = ext.reshape(shape)
    state.L_a[sel] = config.alpha_at(t) * state.L_e[sel]
    state.half_iterations = t + 1
    return state


def turbo_decode_batch(L_ch, config: TurboConfig):
    """Decode a (B, N, N) batch of channel LLR matrices.

    Returns hard decisions (B, N, N), a success flag per block and the
    number of full iterations used (half-iterations count 0.5).
    """
    L_ch = np.asarray(L_ch, dtype=np.float64)
    B, N = L_ch.shape[0], config.spec.N
    if L_ch.shape[1:] != (N, N):
        raise ValueError(f"channel LLRs must be (B, {N}, {N})")
    state = ProductState(L_ch)
    bits = np.zeros(L_ch.shape, dtype=np.uint8)
    done = np.zeros(B, dtype=bool)
    used = np.zeros(B, dtype=np.int64)
    for t in range(2 * config.imax):
        active = ~done
        state.half_iterations = t
        half_iteration(state, Axis.ROWS if t % 2 == 0 else Axis.COLUMNS, config, active)
        decision = app_hard_decision(state.L_app[active])
        bits[active] = decision
        used[active] = t + 1
        ok = np.zeros(B, dtype=bool)
        ok[active] = is_product_codeword(decision, config.spec)
        done |= ok
        if done.all():
            break
    return bits, done, used / 2


def turbo_decode(L_ch, config: TurboConfig) -> dict:
    """Decode one N x N block; returns ``bits``, ``status`` and ``iterations``."""
    bits, ok, iters = turbo_decode_batch(np.asarray(L_ch, dtype=np.float64)[None], config)
    return {
        "bits": bits[0],
        "status": Status.SUCCESS if ok[0] else Status.FAILURE,
        "iterations": float(iters[0]),
    }
