"""Acceptance gate: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the summary)
or ``python tests/test_acceptance.py``. The Monte Carlo criteria take a few
minutes each on one core.
"""
import math
import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import random_code  # noqa: E402
from polargd.channel import ChannelParams, channel_llrs, modulate, transmit  # noqa: E402
from polargd.construction import make_code  # noqa: E402
from polargd.harness import (  # noqa: E402
    ExperimentConfig,
    estimate_points,
    format_csv,
    run_bler_experiment,
    run_calibration,
    run_softout_compare,
    run_turbo,
)
from polargd.oracles import enumerate_codebook_prob  # noqa: E402
from polargd.scl import decode_scl, decode_scl_batch, leaf_metric  # noqa: E402
from polargd.turbo import TurboConfig, is_product_codeword, product_encode, turbo_decode_batch  # noqa: E402

RESULTS: list[str] = []
slow = pytest.mark.slow


def report(criterion: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} [{criterion}] {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def within(x: float, target: float, tol: float) -> bool:
    return abs(x - target) <= tol * target


def test_1_oracle_equivalence():
    rng = np.random.default_rng(1)
    t0 = time.time()
    worst = 0.0
    for _ in range(50):
        n = int(rng.choice([3, 4]))
        K = int(rng.integers(1, min(10, (1 << n) - 1) + 1))
        spec = random_code(rng, n, K, p_dynamic=0.8)
        llrs = rng.normal(0.5, 2.0, spec.N)
        got = decode_scl(llrs, spec, 1 << K).log_q_star
        worst = max(worst, abs(got - enumerate_codebook_prob(llrs, spec)))
    elapsed = time.time() - t0
    report("1 oracle equivalence", worst <= 1e-9 and elapsed < 60,
           f"max |log Q* - log Q_U| = {worst:.2e} (<= 1e-9) over 50 codes in {elapsed:.1f}s (< 60s)")


def test_2_leaf_metric_identity():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 8))
        spec = random_code(rng, n, int(rng.integers(0, (1 << n) + 1)))
        llrs = rng.normal(0.8, 2.5, spec.N)
        r = decode_scl(llrs, spec, int(rng.integers(1, 9)))
        ref = leaf_metric(llrs, r.codewords)
        worst = max(worst, float(np.max(np.abs(r.pm - ref) / np.maximum(ref, 1e-300))))
    report("2 leaf-metric identity", worst <= 1e-9, f"max relative deviation {worst:.2e} (<= 1e-9) over 1000 decodes")


@slow
def test_3_calibration_diagonal():
    cfg = ExperimentConfig(code="rm:6,3", frozen="convolutional", list_size=2, forney_list=4,
                           ebn0_db=3.0, trials=2_000_000, seed=3, chunk_size=5000)
    rows = run_calibration(cfg)
    diag = [r for r in rows if r["metric"] == "proposed" and r["predicted"] >= 1e-3 and r["errors"] >= 100]
    ratios = [r["measured"] / r["predicted"] for r in diag]
    ok_diag = bool(diag) and all(0.8 <= q <= 1.25 for q in ratios)
    forney = [r for r in rows if r["metric"] == "forney" and 0.01 < r["predicted"] < 0.0316]
    f_ratio = forney[0]["measured"] / forney[0]["predicted"] if forney else float("nan")
    detail = ", ".join(f"bin{r['bin']} {r['measured']:.4g}/{r['predicted']:.4g}={q:.3f}" for r, q in zip(diag, ratios))
    report("3a calibration: proposed bins", ok_diag, f"{detail} (each in [0.8, 1.25])")
    report("3b calibration: Forney-style off-diagonal", f_ratio >= 3,
           f"bin at predicted {forney[0]['predicted']:.4f} measures {forney[0]['measured']:.4f}, "
           f"ratio {f_ratio:.2f} (>= 3)")


@lru_cache(maxsize=None)
def threshold_points():
    base = dict(code="rm:6,3", frozen="convolutional", list_size=4, rule="threshold", epsilon=0.1, seed=4)
    main = run_bler_experiment(ExperimentConfig(ebn0_db=3.0, trials=500_000, **base))[0]
    sweep = run_bler_experiment(ExperimentConfig(ebn0_db="1.0:0.5:4.5", trials=1_000_000, target_errors=1000, **base))
    return main, sweep


@slow
def test_4_threshold_rule_point():
    main, sweep = threshold_points()
    report("4a threshold-rule BLER at 3 dB", within(main["bler"], 0.0378, 0.15),
           f"BLER {main['bler']:.5f} vs 0.0378 +-15% ({main['trials']} trials)")
    report("4b threshold-rule UER at 3 dB", within(main["uer"], 0.00194, 0.30),
           f"UER {main['uer']:.6f} vs 0.00194 +-30%")
    worst = max(sweep, key=lambda r: r["mdr"])
    mdrs = ", ".join(f"{r['ebn0_db']:g}dB:{r['mdr']:.3f}" for r in sweep)
    report("4c MDR <= 0.1 over 1.0-4.5 dB", all(r["mdr"] <= 0.1 for r in sweep) and main["mdr"] <= 0.1,
           f"{mdrs}, 3dB(main):{main['mdr']:.3f}; worst {worst['mdr']:.3f}")


@slow
def test_5_crc_baseline():
    cfg = ExperimentConfig(code="nr5g:64,48", frozen="static", list_size=4, rule="crc", crc="0x30",
                           ebn0_db=3.0, trials=300_000, seed=5)
    crc = run_bler_experiment(cfg)[0]
    report("5a CRC-6 BLER at 3 dB", within(crc["bler"], 0.0592, 0.15), f"BLER {crc['bler']:.5f} vs 0.0592 +-15%")
    report("5b CRC-6 UER at 3 dB", within(crc["uer"], 0.0039, 0.30), f"UER {crc['uer']:.6f} vs 0.0039 +-30%")
    main, _ = threshold_points()
    report("5c proposed beats CRC baseline", main["bler"] < crc["bler"] and main["uer"] < crc["uer"],
           f"BLER {main['bler']:.5f} < {crc['bler']:.5f}, UER {main['uer']:.6f} < {crc['uer']:.6f}")


@slow
def test_6_soft_output_ber():
    cfg = ExperimentConfig(code="rm:5,3", frozen="static", ebn0_db=4.0, trials=62_500, seed=6, softout_lists=[1, 2])
    rows = {r["method"]: r for r in run_softout_compare(cfg)}
    bcjr, prop, pyn = rows["bcjr"]["ber"], rows["proposed_L2"]["ber"], rows["pyndiah_L1"]["ber"]
    bits = rows["bcjr"]["bits"]
    report("6a BCJR BER at 4 dB", within(bcjr, 0.00269, 0.15), f"BER {bcjr:.5f} vs 0.00269 +-15% ({bits} bits)")
    report("6b proposed L=2 near BCJR", within(prop, bcjr, 0.10), f"BER {prop:.5f}, {prop / bcjr:.3f}x BCJR (within 10%)")
    report("6c Pyndiah L=1 worse", pyn >= 1.7 * bcjr, f"BER {pyn:.5f}, {pyn / bcjr:.3f}x BCJR (>= 1.7x)")


@slow
def test_7_turbo_product():
    base = dict(code="rm:5,3", frozen="static", list_size=4, imax=20, ebn0_db=2.0, trials=2000, seed=7)
    prop = run_turbo(ExperimentConfig(siso="proposed", alpha=[0.5], **base))[0]
    pyn = run_turbo(ExperimentConfig(siso="pyndiah", **base))[0]
    report("7a turbo SO-SCL BLER at 2 dB", within(prop["bler"], 0.0485, 0.30),
           f"BLER {prop['bler']:.4f} vs 0.0485 +-30% ({prop['blocks']} blocks, {prop['avg_iterations']:.2f} it)")
    report("7b turbo Pyndiah worse", pyn["bler"] > prop["bler"],
           f"Pyndiah BLER {pyn['bler']:.4f} > {prop['bler']:.4f} ({pyn['avg_iterations']:.2f} it)")


def test_8a_rate_one():
    rng = np.random.default_rng(81)
    worst = max(abs(decode_scl(rng.normal(0, 3, 1 << n), make_code(f"rm:{n},{n}"), L).log_q_star)
                for n in range(1, 8) for L in (1, 2, 4))
    report("8a rate-1 Q* = 1", worst < 1e-12, f"max |log Q*| = {worst:.1e}")


def test_8b_uniform_channel():
    rng = np.random.default_rng(82)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 8))
        spec = random_code(rng, n, int(rng.integers(0, (1 << n) + 1)))
        r = decode_scl(np.zeros(spec.N), spec, int(rng.integers(1, 9)))
        worst = max(worst, abs(r.log_q_star + (spec.N - spec.K) * math.log(2)))
    report("8b all-zero LLRs give Q* = 2^-(N-K)", worst < 1e-9, f"max deviation {worst:.1e} in log domain")


def _random_batch(seed):
    rng = np.random.default_rng(seed)
    spec = make_code("rm:6,3", "convolutional")
    llrs = rng.normal(0.8, 2.0, (2000, 64))
    return spec, decode_scl_batch(llrs, spec, 4)


def test_8c_gamma_range():
    _, res = _random_batch(83)
    raw = -res.pm[:, 0] - res.log_q_star  # before the rounding clamp
    g = np.exp(res.log_gamma_star())
    ok = bool(np.all(g > 0) and np.all(raw <= 1e-12))
    report("8c Gamma* in (0, 1]", ok, f"min {g.min():.3e}, max unclamped log Gamma* {raw.max():.2e}")


def test_8d_accumulator_nonnegative():
    _, res = _random_batch(84)
    gap = res.log_q_star - res.list_log_mass
    report("8d unvisited mass >= 0", bool(np.all(gap >= -1e-12)), f"min log(Q*/list mass) = {gap.min():.2e}")


def test_8e_turbo_success_valid():
    rng = np.random.default_rng(85)
    spec = make_code("rm:5,3")
    c = product_encode(rng.integers(0, 2, (100, 26, 26), dtype=np.uint8), spec)
    p = ChannelParams(2.0, (26 / 32) ** 2)
    bits, ok, _ = turbo_decode_batch(channel_llrs(transmit(modulate(c), p, rng), p), TurboConfig(spec, L=4, imax=5))
    valid = is_product_codeword(bits, spec)
    report("8e turbo SUCCESS is a product codeword", bool(ok.any() and np.all(valid[ok])),
           f"{int(ok.sum())}/100 successes, all valid: {bool(np.all(valid[ok]))}")


@slow
def test_8f_estimation_rmse():
    cfg = ExperimentConfig(code="rm:6,3", frozen="convolutional", list_size=4, ebn0_db=6.0,
                           trials=1000, seed=86, grid=[0.5, 2.0, 61])
    pt = estimate_points(cfg)[0]
    step = (2.0 - 0.5) / 60
    report("8f channel-estimation RMSE", pt["rmse"] <= 2 * step,
           f"RMSE {pt['rmse']:.4f} vs 2 grid steps = {2 * step:.3f} ({np.mean(pt['h_hat'] == 2.0):.0%} at h_max)")


def test_8g_csv_reproducible():
    texts = []
    for workers in (1, 2, 3):
        cfg = ExperimentConfig(code="rm:5,3", list_size=2, trials=4000, chunk_size=500, target_errors=150,
                               ebn0_db="2:1:3", seed=87, workers=workers)
        texts.append(format_csv(run_bler_experiment(cfg), cfg))
    report("8g CSV identical across worker counts", len(set(texts)) == 1, "workers 1, 2, 3")


if __name__ == "__main__":
    fns = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for fn in fns:
        try:
            fn()
        except AssertionError:
            pass
    print(f"\n{sum(l.startswith('PASS') for l in RESULTS)}/{len(RESULTS)} checks passed")
