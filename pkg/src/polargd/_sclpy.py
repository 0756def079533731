"""Pure-Python SCL kernel.

Same algorithm, tie-breaking and output layout as the compiled
``_sclcore`` extension. Used when the extension is not built, and as an
independent replay in the test suite.
"""
from __future__ import annotations

import math

import numpy as np

LN2 = math.log(2.0)


def softplus(x: float) -> float:
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


def check_combine(a: float, b: float) -> float:
    # m + log1p(e^-(2m+d)) - log1p(e^-d), m = min(|a|,|b|), d = ||a|-|b||;
    # terms below e^-37 vanish against 1 in double precision
    aa, bb = abs(a), abs(b)
    m, d = min(aa, bb), abs(aa - bb)
    if d > 37.0:
        r = m
    elif 2.0 * m > 37.0:
        r = m - math.log1p(math.exp(-d))
    else:
        ed = math.exp(-d)
        r = m + math.log((1.0 + ed * math.exp(-2.0 * m)) / (1.0 + ed))
    return -r if (a < 0.0) != (b < 0.0) else r


def _check_vec(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aa, bb = np.abs(a), np.abs(b)
    m, d = np.minimum(aa, bb), np.abs(aa - bb)
    ed = np.exp(-np.minimum(d, 37.0))
    em = np.exp(-np.minimum(2.0 * m, 37.0))
    r = np.where(
        d > 37.0,
        m,
        np.where(2.0 * m > 37.0, m - np.log1p(ed), m + np.log((1.0 + ed * em) / (1.0 + ed))),
    )
    return np.where((a < 0.0) != (b < 0.0), -r, r)


def pm_step(pm: float, lam: float, u: int) -> float:
    return pm + (softplus(lam) if u else softplus(-lam))


class _Path:
    __slots__ = ("layers", "sums", "u", "pm")

    def __init__(self, n: int, N: int):
        self.layers = [np.zeros(1 << s) for s in range(n)]
        self.sums = [np.zeros(1 << s, dtype=np.uint8) for s in range(n)]
        self.u = np.zeros(N, dtype=np.uint8)
        self.pm = 0.0

    def clone(self) -> "_Path":
        other = _Path.__new__(_Path)
        other.layers = [a.copy() for a in self.layers]
        other.sums = [a.copy() for a in self.sums]
        other.u = self.u.copy()
        other.pm = self.pm
        return other


def _ctz(x: int) -> int:
    return (x & -x).bit_length() - 1


def _compute_llr(path: _Path, i: int, chan: np.ndarray, n: int) -> float:
    start = n if i == 0 else _ctz(i) + 1
    for s in range(start, 0, -1):
        half = 1 << (s - 1)
        src = chan if s == n else path.layers[s]
        if (i >> (s - 1)) & 1:
            left = path.sums[s - 1]
            path.layers[s - 1][:] = np.where(left == 1, src[half:] - src[:half], src[half:] + src[:half])
        else:
            path.layers[s - 1][:] = _check_vec(src[:half], src[half:])
    return float(path.layers[0][0])


def _update_sums(path: _Path, i: int, bit: int, n: int) -> None:
    t = np.array([bit], dtype=np.uint8)
    s = 0
    while s < n and (i >> s) & 1:
        t = np.concatenate([t ^ path.sums[s], t])
        s += 1
    if s < n:
        path.sums[s][:] = t


def _prefix_key(path: _Path, upto: int, bit: int) -> tuple:
    return tuple(path.u[:upto].tolist()) + (bit,)


def _decode_frame(chan, frozen, rule_ptr, rule_idx, ffc, L, n):
    N = 1 << n
    paths = [_Path(n, N)]
    acc = -math.inf
    for i in range(N):
        lams = [_compute_llr(p, i, chan, n) for p in paths]
        if frozen[i]:
            taps = rule_idx[rule_ptr[i]:rule_ptr[i + 1]]
            for p, lam in zip(paths, lams):
                ub = int(np.bitwise_xor.reduce(p.u[taps])) if len(taps) else 0
                p.pm += softplus(lam) if ub else softplus(-lam)
                p.u[i] = ub
                _update_sums(p, i, ub, n)
            continue
        children = []
        for a, (p, lam) in enumerate(zip(paths, lams)):
            children.append((p.pm + softplus(-lam), a, 0))
            children.append((p.pm + softplus(lam), a, 1))
        if len(children) > L:
            children.sort(key=lambda c: (c[0], _prefix_key(paths[c[1]], i, c[2])))
            for pm, _, _ in children[L:]:
                acc = logaddexp(acc, -pm - ffc[i] * LN2)
            children = children[:L]
        kept = {}
        for pm, a, b in children:
            kept.setdefault(a, []).append((b, pm))
        survivors = []
        for a, p in enumerate(paths):
            if a not in kept:
                continue
            branches = sorted(kept[a])
            for k, (b, pm) in enumerate(branches):
                q = p if k == len(branches) - 1 else p.clone()
                q.u[i] = b
                q.pm = pm
                _update_sums(q, i, b, n)
                survivors.append(q)
        paths = survivors
    paths.sort(key=lambda p: (p.pm, tuple(p.u.tolist())))
    for p in paths:
        acc = logaddexp(acc, -p.pm)
    return paths, acc


def decode_batch(llr, frozen, rule_ptr, rule_idx, ffc, L):
    llr = np.ascontiguousarray(llr, dtype=np.float64)
    B, N = llr.shape
    n = N.bit_length() - 1
    if N < 2 or (1 << n) != N:
        raise ValueError("frame length must be a power of two >= 2")
    if L < 1:
        raise ValueError("list size must be >= 1")
    u_out = np.zeros((B, L, N), dtype=np.uint8)
    pm_out = np.full((B, L), np.inf)
    logq = np.empty(B)
    ncand = np.empty(B, dtype=np.int32)
    for b in range(B):
        paths, acc = _decode_frame(llr[b], frozen, rule_ptr, rule_idx, ffc, L, n)
        logq[b] = acc
        ncand[b] = len(paths)
        for a, p in enumerate(paths):
            u_out[b, a] = p.u
            pm_out[b, a] = p.pm
    return u_out, pm_out, logq, ncand
