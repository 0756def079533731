"""Polar-like code definition, encoding, membership and CRC machinery.

Index sets (information set, frozen rules) use 1-based positions, as in the
usual polar-code notation. Bit vectors are plain 0-based numpy arrays of
``uint8``. The conversion happens in :class:`CodeSpec`, which also keeps
0-based array views for the decoder kernels.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Iterable, Mapping

import numpy as np

from ._nr5g_sequence import RELIABILITY_SEQUENCE

CONVOLUTIONAL_TAPS = (2, 3, 5, 6)


class CodeError(ValueError):
    """Invalid code parameters or malformed code description."""


def _log2_exact(N: int) -> int:
    if N < 2 or N & (N - 1):
        raise CodeError(f"block length must be a power of two >= 2, got {N}")
    return N.bit_length() - 1


@dataclass(frozen=True)
class CodeSpec:
    """A binary polar-like code.

    Parameters
    ----------
    n : int
        log2 of the block length.
    info_set : iterable of int
        1-based information positions.
    frozen_rules : mapping
        For every frozen position ``i`` the set of earlier positions whose
        XOR defines ``u_i``. Missing frozen positions default to static zero.
    """

    n: int
    info_set: tuple[int, ...]
    frozen_rules: Mapping[int, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise CodeError("n must be >= 1")
        N = 1 << self.n
        info = tuple(sorted(int(i) for i in self.info_set))
        if len(set(info)) != len(info) or any(not 1 <= i <= N for i in info):
            raise CodeError("information set must hold distinct indices in [1, N]")
        info_lookup = set(info)
        rules = {}
        for i in range(1, N + 1):
            if i in info_lookup:
                continue
            taps = tuple(sorted({int(j) for j in self.frozen_rules.get(i, ())}))
            if any(not 1 <= j < i for j in taps):
                raise CodeError(f"rule for u_{i} references a non-prior index")
            rules[i] = taps
        extra = set(self.frozen_rules) - set(rules)
        if extra:
            raise CodeError(f"frozen rules given for information positions {sorted(extra)}")
        object.__setattr__(self, "info_set", info)
        object.__setattr__(self, "frozen_rules", rules)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def K(self) -> int:
        return len(self.info_set)

    @property
    def frozen_set(self) -> tuple[int, ...]:
        return tuple(self.frozen_rules)

    @property
    def is_static(self) -> bool:
        return not any(self.frozen_rules.values())

    @cached_property
    def future_frozen_count(self) -> np.ndarray:
        """Entry ``i`` (0..N) counts frozen positions strictly after ``i``."""
        frozen = np.zeros(self.N + 1, dtype=np.int32)
        frozen[list(self.frozen_rules)] = 1
        total = frozen.sum()
        return (total - np.cumsum(frozen)).astype(np.int32)

    # 0-based kernel views -------------------------------------------------

    @cached_property
    def info_index(self) -> np.ndarray:
        return np.asarray(self.info_set, dtype=np.intp) - 1

    @cached_property
    def frozen_mask(self) -> np.ndarray:
        mask = np.ones(self.N, dtype=np.uint8)
        mask[self.info_index] = 0
        return mask

    @cached_property
    def rule_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR layout of the frozen rules: ``(ptr, idx)`` over 0-based positions."""
        ptr = np.zeros(self.N + 1, dtype=np.int32)
        idx = []
        for i0 in range(self.N):
            taps = self.frozen_rules.get(i0 + 1, ())
            idx.extend(j - 1 for j in taps)
            ptr[i0 + 1] = len(idx)
        return ptr, np.asarray(idx, dtype=np.int32)

    @cached_property
    def generator(self) -> np.ndarray:
        """K x N generator matrix; row k is the codeword of the k-th unit message."""
        return encode(np.eye(self.K, dtype=np.uint8), self)

    # serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "info_set": list(self.info_set),
            "rules": {str(i): list(s) for i, s in self.frozen_rules.items() if s},
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CodeSpec":
        rules = {int(i): tuple(s) for i, s in doc.get("rules", {}).items()}
        return cls(int(doc["n"]), tuple(doc["info_set"]), rules)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "CodeSpec":
        return cls.from_dict(json.loads(text))


def rm_info_set(m: int, r: int) -> tuple[int, ...]:
    """Information set of the Reed-Muller code RM(r, m) in polar ordering."""
    if not 0 <= r <= m or m < 1:
        raise CodeError(f"need 0 <= r <= m and m >= 1, got m={m}, r={r}")
    info = tuple(i + 1 for i in range(1 << m) if bin(i).count("1") >= m - r)
    assert len(info) == sum(comb(m, w) for w in range(r + 1))
    return info


def nr5g_info_set(N: int, K: int) -> tuple[int, ...]:
    """The K most reliable positions of the 5G NR polar sequence restricted to [N]."""
    _log2_exact(N)
    if N > len(RELIABILITY_SEQUENCE):
        raise CodeError(f"the 5G sequence covers N <= 1024, got {N}")
    if not 1 <= K <= N:
        raise CodeError(f"need 1 <= K <= N, got K={K}")
    ordered = [q for q in RELIABILITY_SEQUENCE if q < N]
    return tuple(sorted(q + 1 for q in ordered[N - K:]))


def make_frozen_rules(info_set: Iterable[int], N: int, kind: str = "static") -> dict[int, tuple[int, ...]]:
    """Frozen rules for the static or the convolutional dynamic construction.

    The convolutional rule ``u_i = u_{i-2} + u_{i-3} + u_{i-5} + u_{i-6}``
    only applies for ``i > 6``; earlier frozen bits stay static zero.
    """
    info = set(info_set)
    frozen = [i for i in range(1, N + 1) if i not in info]
    if kind == "static":
        return {i: () for i in frozen}
    if kind == "convolutional":
        return {i: tuple(sorted(i - t for t in CONVOLUTIONAL_TAPS)) if i > 6 else () for i in frozen}
    raise CodeError(f"unknown frozen kind {kind!r}")


def make_code(descriptor: str, kind: str = "static") -> CodeSpec:
    """Build a code from a ``rm:m,r`` or ``nr5g:N,K`` descriptor."""
    try:
        family, args = descriptor.split(":")
        a, b = (int(v) for v in args.split(","))
    except ValueError as exc:
        raise CodeError(f"malformed code descriptor {descriptor!r}") from exc
    if family == "rm":
        info, N = rm_info_set(a, b), 1 << a
    elif family == "nr5g":
        info, N = nr5g_info_set(a, b), a
    else:
        raise CodeError(f"unknown code family {family!r}")
    return CodeSpec(_log2_exact(N), info, make_frozen_rules(info, N, kind))


def polar_transform(x) -> np.ndarray:
    """Multiply by the n-fold Kronecker power of [[1, 0], [1, 1]] over GF(2).

    Works on the last axis, so a batch of vectors can be transformed at once.
    """
    x = np.array(x, dtype=np.uint8, copy=True)
    N = x.shape[-1]
    if N > 1:
        _log2_exact(N)
    lead = x.shape[:-1]
    half = N // 2
    while half >= 1:
        v = x.reshape(*lead, N // (2 * half), 2, half)
        v[..., 0, :] ^= v[..., 1, :]
        half //= 2
    return x


def build_u(message, spec: CodeSpec) -> np.ndarray:
    """Place the message on the information set and evaluate the frozen rules."""
    msg = np.asarray(message, dtype=np.uint8)
    if msg.shape[-1] != spec.K:
        raise CodeError(f"message length {msg.shape[-1]} != K={spec.K}")
    u = np.zeros(msg.shape[:-1] + (spec.N,), dtype=np.uint8)
    u[..., spec.info_index] = msg
    for i, taps in spec.frozen_rules.items():
        for j in taps:
            u[..., i - 1] ^= u[..., j - 1]
    return u


def encode(message, spec: CodeSpec) -> np.ndarray:
    return polar_transform(build_u(message, spec))


def frozen_violations(u, spec: CodeSpec) -> np.ndarray:
    """Boolean per vector: does ``u`` break any frozen constraint."""
    u = np.asarray(u, dtype=np.uint8)
    bad = np.zeros(u.shape[:-1], dtype=bool)
    for i, taps in spec.frozen_rules.items():
        val = u[..., i - 1].copy()
        for j in taps:
            val ^= u[..., j - 1]
        bad |= val.astype(bool)
    return bad


def is_codeword(c, spec: CodeSpec):
    c = np.asarray(c, dtype=np.uint8)
    if c.shape[-1] != spec.N:
        raise CodeError(f"expected length {spec.N}, got {c.shape[-1]}")
    ok = ~frozen_violations(polar_transform(c), spec)
    return bool(ok) if ok.ndim == 0 else ok


def parity_checks(spec: CodeSpec) -> np.ndarray:
    """(N-K) x N parity-check matrix, one row per frozen constraint."""
    N = spec.N
    # u = c G with G the transform matrix, so u_i is column i of G applied to c
    G = polar_transform(np.eye(N, dtype=np.uint8))
    H = np.zeros((N - spec.K, N), dtype=np.uint8)
    for row, (i, taps) in enumerate(spec.frozen_rules.items()):
        sel = np.zeros(N, dtype=np.uint8)
        sel[i - 1] = 1
        sel[[j - 1 for j in taps]] ^= 1
        H[row] = (G @ sel) % 2
    return H


# CRC -----------------------------------------------------------------------


@dataclass(frozen=True)
class CrcPoly:
    """CRC generator in Koopman notation (x^r..x^1 coefficients, +1 implicit)."""

    koopman_word: int
    degree: int | None = None

    def __post_init__(self):
        if self.koopman_word <= 0:
            raise CodeError("Koopman word must be positive")
        width = self.koopman_word.bit_length()
        if self.degree is None:
            object.__setattr__(self, "degree", width)
        elif self.degree != width:
            raise CodeError(f"Koopman word {self.koopman_word:#x} does not have degree {self.degree}")

    @classmethod
    def parse(cls, text: str) -> "CrcPoly":
        return cls(int(text, 16))

    @property
    def generator(self) -> int:
        """Full polynomial as an integer, bit k = coefficient of x^k."""
        return (self.koopman_word << 1) | 1

    def coefficients(self) -> np.ndarray:
        """Coefficients from x^r down to x^0."""
        g = self.generator
        return np.array([(g >> k) & 1 for k in range(self.degree, -1, -1)], dtype=np.uint8)


def crc_compute(data, poly: CrcPoly) -> np.ndarray:
    """Remainder of data(x) x^r mod g(x); MSB-first, zero init, no reflection."""
    r = poly.degree
    g = poly.generator
    top = 1 << r
    reg = 0
    for bit in np.asarray(data, dtype=np.uint8).ravel():
        reg = (reg << 1) | int(bit)
        if reg & top:
            reg ^= g
    for _ in range(r):
        reg <<= 1
        if reg & top:
            reg ^= g
    return np.array([(reg >> k) & 1 for k in range(r - 1, -1, -1)], dtype=np.uint8)


def crc_check(block, poly: CrcPoly) -> bool:
    """True if the trailing ``degree`` bits are the CRC of the leading bits."""
    block = np.asarray(block, dtype=np.uint8)
    r = poly.degree
    return bool(np.array_equal(crc_compute(block[:-r], poly), block[-r:]))


def crc_generator_matrix(message_len: int, poly: CrcPoly) -> np.ndarray:
    """``message_len`` x r matrix P with crc(m) = m P over GF(2) (the CRC is linear)."""
    eye = np.eye(message_len, dtype=np.uint8)
    return np.array([crc_compute(row, poly) for row in eye], dtype=np.uint8).reshape(message_len, poly.degree)
