"""Monte Carlo experiment driver.

Every SNR point is split into fixed-size chunks of trials. Chunk ``j`` of
point ``p`` draws from its own counter-based stream keyed by
``(seed, p, j)``, results are merged in chunk order, and the early-stop test
runs after each merged chunk. The output therefore depends only on the
configuration, never on how many worker processes shared the chunks.
"""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache

import numpy as np

from .channel import ChannelParams, channel_llrs, modulate, parse_sweep, stream, transmit
from .construction import CodeError, CrcPoly, build_u, crc_generator_matrix, make_code, parity_checks, polar_transform
from .decision import MetricsAccumulator, crc_select_batch, forney_log_threshold, metrics, wilson_interval
from .estimation import estimate_gain_batch, codebook_objective, gain_grid
from .oracles import bcjr_app_batch
from .scl import decode_scl_batch
from .softout import app_hard_decision, pyndiah_soft_output_batch, soscl_soft_output_batch
from .turbo import Siso, TurboConfig, product_encode, turbo_decode_batch

RULES = ("threshold", "forney", "crc")
STOP_NOTE = (
    "trials per point stop at the budget or once target_errors is reached; "
    "ratio estimates under error-count stopping carry the usual sequential-stopping bias"
)
DEFAULT_CHUNK = {"simulate": 2000, "calibrate": 2000, "softout": 2000, "turbo": 25, "estimate": 1000}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """One experiment; every field is also a JSON key and a CLI flag.

    ``rule`` picks the accept/reject test of ``simulate``: a threshold on
    the estimated correctness probability (``epsilon``), Forney's test on
    the list mass (``forney_t``), or a CRC check (``crc``, Koopman hex).
    ``forney_list`` is the list size of the Forney-style metric reported by
    ``calibrate`` (default ``2 * list_size``).
    """

    code: str = "rm:6,3"
    frozen: str = "convolutional"
    list_size: int = 4
    rule: str = "threshold"
    epsilon: float = 0.1
    forney_t: float = 0.0
    crc: str | None = None
    forney_list: int | None = None
    ebn0_db: object = "3.0"
    trials: int = 100_000
    target_errors: int | None = None
    seed: int = 0
    chunk_size: int | None = None
    workers: int = 1
    out: str | None = None
    softout_lists: list = field(default_factory=lambda: [1, 2])
    beta: float = 5.0
    siso: str = "proposed"
    alpha: list | None = None
    beta_schedule: list | None = None
    imax: int = 20
    gain: float | None = None
    grid: list = field(default_factory=lambda: [0.5, 2.0, 61])

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | None, overrides: dict | None = None) -> "ExperimentConfig":
        data = {}
        if path:
            with open(path) as fh:
                data = json.load(fh)
        data.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def sweep(self) -> list[float]:
        return parse_sweep(self.ebn0_db)

    def validate(self, kind: str = "simulate") -> "ExperimentConfig":
        try:
            _spec(self.code, self.frozen)
        except CodeError as exc:
            raise ConfigError(str(exc)) from exc
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.list_size < 1:
            raise ConfigError("list_size must be >= 1")
        if self.target_errors is not None and self.target_errors < 1:
            raise ConfigError("target_errors must be >= 1")
        if self.chunk_size is not None and self.chunk_size < 1:
            raise ConfigError("chunk_size must be >= 1")
        if kind == "simulate":
            if self.rule not in RULES:
                raise ConfigError(f"rule must be one of {RULES}")
            if self.rule == "threshold" and not 0.0 <= self.epsilon < 1.0:
                raise ConfigError("epsilon must be in [0, 1)")
            if self.rule == "forney" and self.forney_t < 0:
                raise ConfigError("forney_t must be >= 0")
            if self.rule == "crc":
                if not self.crc:
                    raise ConfigError("the crc rule needs a CRC polynomial")
                if CrcPoly.parse(self.crc).degree >= _spec(self.code, self.frozen).K:
                    raise ConfigError("CRC degree must be below K")
            elif self.crc:
                raise ConfigError(f"a CRC polynomial was given but the rule is {self.rule!r}")
        if kind == "turbo":
            Siso(self.siso)
        if kind == "estimate":
            gain_grid(*self.grid)
        self.sweep
        return self


@lru_cache(maxsize=None)
def _spec(code: str, frozen: str):
    return make_code(code, frozen)


@lru_cache(maxsize=None)
def _crc_matrix(message_len: int, poly: str) -> np.ndarray:
    return crc_generator_matrix(message_len, CrcPoly.parse(poly)).astype(np.int64)


@lru_cache(maxsize=None)
def _checks(code: str, frozen: str) -> np.ndarray:
    return parity_checks(_spec(code, frozen))


def _in_list(res, u) -> np.ndarray:
    valid = np.arange(res.u.shape[1])[None, :] < res.n_cand[:, None]
    return ((res.u == u[:, None, :]).all(axis=2) & valid).any(axis=1)


def _transmit_code(cfg: ExperimentConfig, ebn0: float, rng, n: int):
    spec = _spec(cfg.code, cfg.frozen)
    r = CrcPoly.parse(cfg.crc).degree if cfg.crc else 0
    kmsg = spec.K - r
    msg = rng.integers(0, 2, (n, kmsg), dtype=np.uint8)
    info = msg
    if r:
        info = np.concatenate([msg, ((msg.astype(np.int64) @ _crc_matrix(kmsg, cfg.crc)) & 1).astype(np.uint8)], axis=1)
    u = build_u(info, spec)
    params = ChannelParams(ebn0, kmsg / spec.N)
    llr = channel_llrs(transmit(modulate(polar_transform(u)), params, rng), params)
    return spec, kmsg, info, u, llr


def _bler_chunk(cfg: ExperimentConfig, ebn0: float, rng, n: int) -> MetricsAccumulator:
    spec, kmsg, info, u, llr = _transmit_code(cfg, ebn0, rng, n)
    res = decode_scl_batch(llr, spec, cfg.list_size)
    payload = res.u[..., spec.info_index]
    chosen = payload[:, 0]
    if cfg.rule == "crc":
        pick = crc_select_batch(payload, res.n_cand, kmsg, CrcPoly.parse(cfg.crc))
        accepted = pick >= 0
        chosen = payload[np.arange(n), np.maximum(pick, 0)]
    elif cfg.rule == "threshold":
        accepted = res.log_gamma_star() > math.log1p(-cfg.epsilon)
    else:
        accepted = res.log_gamma_forney() >= forney_log_threshold(cfg.forney_t, spec.N)
    acc = MetricsAccumulator()
    acc.record_batch(accepted, (chosen == info).all(axis=1), ~_in_list(res, u))
    return acc


def _calibration_chunk(cfg: ExperimentConfig, ebn0: float, rng, n: int) -> MetricsAccumulator:
    spec, _, info, u, llr = _transmit_code(cfg, ebn0, rng, n)
    res = decode_scl_batch(llr, spec, cfg.list_size)
    wrong = ~(res.u[:, 0, spec.info_index] == info).all(axis=1)
    miss = ~_in_list(res, u)
    acc = MetricsAccumulator()
    acc.record_batch(np.ones(n, dtype=bool), ~wrong, miss)
    acc.calibration("proposed").add(res.one_minus_gamma_star(), wrong)
    acc.calibration("list").add(res.one_minus_gamma_list(), miss)
    res_f = decode_scl_batch(llr, spec, cfg.forney_list or 2 * cfg.list_size)
    wrong_f = ~(res_f.u[:, 0, spec.info_index] == info).all(axis=1)
    acc.calibration("forney").add(res_f.one_minus_gamma_forney(), wrong_f)
    return acc


@dataclass
class BitTally:
    bits: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def add(self, name: str, bits: int, errors: int) -> None:
        self.bits[name] = self.bits.get(name, 0) + bits
        self.errors[name] = self.errors.get(name, 0) + errors

    def merge(self, other: "BitTally") -> "BitTally":
        for name in other.bits:
            self.add(name, other.bits[name], other.errors[name])
        return self


def softout_methods(cfg: ExperimentConfig) -> list[str]:
    lists = [int(v) for v in cfg.softout_lists]
    return ["bcjr"] + [f"proposed_L{L}" for L in lists] + [f"pyndiah_L{L}" for L in lists]


def _softout_chunk(cfg: ExperimentConfig, ebn0: float, rng, n: int) -> BitTally:
    spec, _, _, u, llr = _transmit_code(cfg, ebn0, rng, n)
    c = polar_transform(u)
    tally = BitTally()

    def count(name, app):
        tally.add(name, c.size, int(np.count_nonzero(app_hard_decision(app) != c)))

    count("bcjr", bcjr_app_batch(llr, None, _checks(cfg.code, cfg.frozen)))
    for L in (int(v) for v in cfg.softout_lists):
        res = decode_scl_batch(llr, spec, L)
        count(f"proposed_L{L}", soscl_soft_output_batch(res, llr).app)
        count(f"pyndiah_L{L}", pyndiah_soft_output_batch(res, llr, None, cfg.beta).app)
    return tally


@dataclass
class BlockTally:
    blocks: int = 0
    errors: int = 0
    failures: int = 0
    half_iterations: int = 0

    def merge(self, other: "BlockTally") -> "BlockTally":
        self.blocks += other.blocks
        self.errors += other.errors
        self.failures += other.failures
        self.half_iterations += other.half_iterations
        return self


def turbo_config(cfg: ExperimentConfig) -> TurboConfig:
    schedule = {} if cfg.beta_schedule is None else {"beta": tuple(cfg.beta_schedule)}
    return TurboConfig(_spec(cfg.code, cfg.frozen), Siso(cfg.siso), cfg.list_size, cfg.imax,
                       None if cfg.alpha is None else tuple(cfg.alpha), **schedule)


def _turbo_chunk(cfg: ExperimentConfig, ebn0: float, rng, n: int) -> BlockTally:
    spec = _spec(cfg.code, cfg.frozen)
    msg = rng.integers(0, 2, (n, spec.K, spec.K), dtype=np.uint8)
    c = product_encode(msg, spec)
    params = ChannelParams(ebn0, (spec.K / spec.N) ** 2)
    llr = channel_llrs(transmit(modulate(c), params, rng), params)
    bits, ok, iters = turbo_decode_batch(llr, turbo_config(cfg))
    return BlockTally(n, int(np.count_nonzero((bits != c).any(axis=(1, 2)))),
                      int(np.count_nonzero(~ok)), int(round(2 * iters.sum())))


CHUNK_FUNCTIONS = {
    "simulate": (_bler_chunk, lambda t: t.errors),
    "calibrate": (_calibration_chunk, lambda t: t.errors),
    "softout": (_softout_chunk, lambda t: t.errors.get("bcjr", 0)),
    "turbo": (_turbo_chunk, lambda t: t.errors),
}


def _run_chunk(args):
    kind, cfg_dict, point, ebn0, chunk, n = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    return CHUNK_FUNCTIONS[kind][0](cfg, ebn0, stream(cfg.seed, point, chunk), n)


def _simulate_point(kind: str, cfg: ExperimentConfig, point: int, ebn0: float, executor):
    chunk = cfg.chunk_size or DEFAULT_CHUNK[kind]
    n_chunks = -(-cfg.trials // chunk)
    stop_count = CHUNK_FUNCTIONS[kind][1]
    wave = 2 * max(1, cfg.workers)
    cfg_dict = cfg.to_dict()
    total = None
    for start in range(0, n_chunks, wave):
        tasks = [(kind, cfg_dict, point, ebn0, j, min(chunk, cfg.trials - j * chunk))
                 for j in range(start, min(n_chunks, start + wave))]
        results = executor.map(_run_chunk, tasks) if executor else map(_run_chunk, tasks)
        for res in results:
            total = res if total is None else total.merge(res)
            if cfg.target_errors and stop_count(total) >= cfg.target_errors:
                return total
    return total


def _run(kind: str, cfg: ExperimentConfig):
    cfg.validate(kind)
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            return [(e, _simulate_point(kind, cfg, p, e, ex)) for p, e in enumerate(cfg.sweep)]
    return [(e, _simulate_point(kind, cfg, p, e, None)) for p, e in enumerate(cfg.sweep)]


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".10g")
    return v


def format_csv(rows: list[dict], cfg: ExperimentConfig, notes=()) -> str:
    shown = {k: v for k, v in cfg.to_dict().items() if k not in ("workers", "out")}
    buf = io.StringIO()
    buf.write(f"# {STOP_NOTE}\n")
    buf.write(f"# config: {json.dumps(shown, sort_keys=True)}\n")
    for note in notes:
        buf.write(f"# {note}\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
    return buf.getvalue()


def emit(rows: list[dict], cfg: ExperimentConfig, notes=()) -> str:
    text = format_csv(rows, cfg, notes)
    if cfg.out in (None, "-"):
        if cfg.out == "-":
            sys.stdout.write(text)
    else:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    return text


def _rate_columns(name: str, k: int, n: int) -> dict:
    lo, hi = wilson_interval(k, n)
    return {name: k / n, f"{name}_lo": lo, f"{name}_hi": hi}


def run_bler_experiment(cfg: ExperimentConfig) -> list[dict]:
    """Columns: ebn0_db, trials, errors, undetected, bler (+Wilson bounds), uer (+bounds), mdr, ler."""
    rows = []
    for ebn0, acc in _run("simulate", cfg):
        m = metrics(acc)
        rows.append({"ebn0_db": ebn0, "trials": acc.trials, "errors": acc.errors, "undetected": acc.undetected,
                     **_rate_columns("bler", acc.errors, acc.trials),
                     **_rate_columns("uer", acc.undetected, acc.trials),
                     "mdr": m["mdr"], "ler": m["ler"]})
    emit(rows, cfg)
    return rows


def run_calibration(cfg: ExperimentConfig) -> list[dict]:
    """Columns: ebn0_db, metric (proposed | list | forney), bin, lo, hi, count, errors, predicted, measured."""
    rows = []
    for ebn0, acc in _run("calibrate", cfg):
        for name in ("proposed", "list", "forney"):
            for k, lo, hi, count, errors, predicted, measured in acc.calibration(name).rows():
                rows.append({"ebn0_db": ebn0, "metric": name, "bin": k, "lo": lo, "hi": hi, "count": count,
                             "errors": errors, "predicted": predicted, "measured": measured})
    emit(rows, cfg, [f"trials per point: {cfg.trials}"])
    return rows


def run_softout_compare(cfg: ExperimentConfig) -> list[dict]:
    """Columns: ebn0_db, method, bits, bit_errors, ber (+Wilson bounds). ``trials`` counts frames."""
    rows = []
    for ebn0, tally in _run("softout", cfg):
        for name in softout_methods(cfg):
            rows.append({"ebn0_db": ebn0, "method": name, "bits": tally.bits[name], "bit_errors": tally.errors[name],
                         **_rate_columns("ber", tally.errors[name], tally.bits[name])})
    emit(rows, cfg)
    return rows


def run_turbo(cfg: ExperimentConfig) -> list[dict]:
    """Columns: ebn0_db, blocks, errors, failures, bler (+Wilson bounds), avg_iterations. ``trials`` counts blocks."""
    rows = []
    for ebn0, t in _run("turbo", cfg):
        rows.append({"ebn0_db": ebn0, "blocks": t.blocks, "errors": t.errors, "failures": t.failures,
                     **_rate_columns("bler", t.errors, t.blocks), "avg_iterations": t.half_iterations / (2 * t.blocks)})
    emit(rows, cfg)
    return rows


def estimate_points(cfg: ExperimentConfig) -> list[dict]:
    """Per SNR point: the grid objective of the first word and gain estimates of all ``trials`` words.

    The true gain is ``gain``, or uniform over the grid range when unset.
    """
    cfg.validate("estimate")
    spec = _spec(cfg.code, cfg.frozen)
    h_min, h_max, steps = cfg.grid
    grid = gain_grid(h_min, h_max, int(steps))
    chunk = cfg.chunk_size or DEFAULT_CHUNK["estimate"]
    out = []
    for point, ebn0 in enumerate(cfg.sweep):
        params = ChannelParams(ebn0, spec.K / spec.N)
        rng = stream(cfg.seed, point, 0)
        h = np.full(cfg.trials, float(cfg.gain)) if cfg.gain is not None else rng.uniform(h_min, h_max, cfg.trials)
        msg = rng.integers(0, 2, (cfg.trials, spec.K), dtype=np.uint8)
        x = modulate(polar_transform(build_u(msg, spec)))
        y = h[:, None] * x + params.sigma * rng.standard_normal(x.shape)
        obj = codebook_objective(y[:1], spec, params.sigma, grid, cfg.list_size)[0]
        h_hat = np.concatenate([
            estimate_gain_batch(y[s:s + chunk], spec, params.sigma, (h_min, h_max, int(steps)), cfg.list_size)[0]
            for s in range(0, cfg.trials, chunk)
        ])
        out.append({"ebn0_db": ebn0, "grid": grid, "objective": obj, "h_true": h, "h_hat": h_hat,
                    "rmse": float(np.sqrt(np.mean((h_hat - h) ** 2)))})
    return out


def run_estimate(cfg: ExperimentConfig) -> list[dict]:
    """Columns: ebn0_db, h, log_q_star, is_argmax; RMSE over all trials goes in a header comment."""
    rows, notes = [], []
    for pt in estimate_points(cfg):
        best = int(np.argmax(pt["objective"]))
        rows += [{"ebn0_db": pt["ebn0_db"], "h": float(g), "log_q_star": float(v), "is_argmax": int(k == best)}
                 for k, (g, v) in enumerate(zip(pt["grid"], pt["objective"]))]
        notes.append(f"ebn0_db={pt['ebn0_db']:g} h_true={pt['h_true'][0]:.10g} "
                     f"h_hat={pt['grid'][best]:.10g} rmse={pt['rmse']:.10g} trials={cfg.trials}")
    emit(rows, cfg, notes)
    return rows
