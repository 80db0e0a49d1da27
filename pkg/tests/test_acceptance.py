"""End-to-end acceptance checks.

Each test prints a single PASS/FAIL line (to the real stdout, so the
verdicts are visible even under pytest capture) and then asserts.  The
training-based checks (criteria 5 and 6) are desk-scale trend analogues:
small datasets and a short epoch budget, not full-scale reproductions.
"""
import csv
import time
from pathlib import Path

import numpy as np
import pytest

import conftest
from conftest import finite_diff_grads, instrumented_forward
from pktdetect import cli, cnn, dataset, flops, nn, streams
from pktdetect.channel import ChannelConfig, apply_channel
from pktdetect.cnn import CnnDetectorConfig
from pktdetect.corrsync import autocorr, timing_metric
from pktdetect.preamble import (BASE_RATE_HZ, PREAMBLE_LEN, ComplexSignal,
                                build_preamble)

# pinned desk-scale training recipe shared by criteria 5 and 6
DATASET_SEED = 42
N_BLOCKS = 10_000                  # 0.8 split -> 8 000 training blocks
SPLIT = (0.80, 0.05, 0.15)
EPOCHS = 60
BATCH_SIZE = 80
NORMALIZE = "rms"
MODEL_SEED = 15
SHUFFLE_SEED = 0


def _report(criterion: int, ok: bool, detail: str) -> None:
    verdict = "PASS" if ok else "FAIL"
    line = f"CRITERION {criterion}: {verdict} — {detail}"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)


def _train_for_block_len(block_len: int):
    spec = dataset.DatasetSpec(block_len=block_len, n_blocks=N_BLOCKS,
                               seed=DATASET_SEED, split=SPLIT)
    blocks = dataset.generate(spec)
    train_blocks, _, test_blocks = dataset.split(blocks, SPLIT, DATASET_SEED)
    cfg = CnnDetectorConfig(block_len=block_len, normalize=NORMALIZE)
    model = cnn.build_model(cfg, seed=MODEL_SEED)
    cnn.train_detector(model, train_blocks, None,
                       nn.TrainConfig(batch_size=BATCH_SIZE, epochs=EPOCHS,
                                      seed=SHUFFLE_SEED))
    return model, test_blocks


@pytest.fixture(scope="module")
def trained_160():
    return _train_for_block_len(160)


@pytest.fixture(scope="module")
def trained_40():
    return _train_for_block_len(40)


def _forced_decision_mae(model, blocks) -> float:
    """MAE over start blocks when every block is treated as detected.

    This is the untrained-model baseline: a freshly initialized network
    flags nothing, so its regression quality is measured by forcing the
    decision and clamping the score into the valid start range.
    """
    amps = np.stack([b.amplitudes for b in blocks]).astype(np.float64)
    labels = np.array([b.label for b in blocks])
    scores = cnn.predict(model, amps)
    starts = np.rint(np.clip(scores, 0.0, model.cfg.block_len - 1))
    mask = labels >= 0
    return float(np.mean(np.abs(starts[mask] - labels[mask])))


def test_criterion_1_waveform_structure(preamble):
    t0 = time.monotonic()
    s = build_preamble().samples
    elapsed = time.monotonic() - t0
    period_err = float(np.max(np.abs(s[:144] - s[16:160])))
    ok = (len(s) == PREAMBLE_LEN and preamble.sample_rate_hz == 1e6
          and period_err < 1e-9 and elapsed < 1.0)
    _report(1, ok, f"len={len(s)}, STF period-16 err={period_err:.2e}, "
                   f"built in {elapsed:.3f}s")
    assert ok


def test_criterion_2_metric_invariants():
    worst_scale = 0.0
    worst_cfo = 0.0
    for i in range(1_000):
        rng = np.random.default_rng(i)
        y = ComplexSignal(rng.standard_normal(176) + 1j * rng.standard_normal(176),
                          BASE_RATE_HZ)
        tau = int(rng.integers(0, 16))
        m0 = timing_metric(y, tau, 80)
        for c in (1e-3, 1.0, 1e3):
            scaled = ComplexSignal(c * y.samples, BASE_RATE_HZ)
            worst_scale = max(worst_scale,
                              abs(timing_metric(scaled, tau, 80) - m0))
        cfo = float(rng.uniform(-40_000, 40_000))
        rotated = apply_channel(y, ChannelConfig(cfo_hz=cfo))
        a0 = abs(autocorr(y, tau, 80))
        a1 = abs(autocorr(rotated, tau, 80))
        worst_cfo = max(worst_cfo, abs(a1 - a0) / max(a0, 1.0))
    ok = worst_scale < 1e-12 and worst_cfo < 1e-10
    _report(2, ok, f"scale err={worst_scale:.2e} (<1e-12), "
                   f"|corr| CFO err={worst_cfo:.2e} (<1e-10), 1000 signals")
    assert ok


def test_criterion_3_conventional_awgn():
    trial_cfg = streams.StreamTrialConfig(snr_db=20.0)
    packet_trials = streams.evaluate_conventional(trial_cfg, 1_000, seed=101,
                                                  packet_fraction=1.0)
    within2 = np.mean([o.detected and abs(o.fine_start - o.true_start) <= 2
                       for o in packet_trials])
    mixed = streams.evaluate_conventional(trial_cfg, 2_000, seed=202,
                                          packet_fraction=0.5)
    s = streams.summarize(mixed)
    ok = (within2 >= 0.99 and s["miss_rate"] < 0.01
          and s["false_alarm_rate"] < 0.01)
    _report(3, ok, f"within±2={within2:.3f} (≥0.99), miss={s['miss_rate']:.4f}"
                   f" (<0.01), false alarm={s['false_alarm_rate']:.4f} (<0.01)")
    assert ok


def test_criterion_4_gradients_and_adam():
    worst = 0.0
    rng_shapes = np.random.default_rng(7)
    checked = 0
    while checked < 50:
        kind = checked % 2
        r = np.random.default_rng(1_000 + checked)
        if kind == 0:
            ci = int(rng_shapes.integers(1, 4))
            co = int(rng_shapes.integers(1, 4))
            f = int(rng_shapes.integers(1, 5))
            t = f + int(rng_shapes.integers(0, 5))
            layer = nn.Conv1d(ci, co, f, r)
            x = r.standard_normal((2, ci, t))
        else:
            n_in = int(rng_shapes.integers(1, 8))
            n_out = int(rng_shapes.integers(1, 8))
            layer = nn.Dense(n_in, n_out, rng=r)
            x = r.standard_normal((3, n_in))
        readout = r.standard_normal(layer.forward(x).shape)
        layer.backward(readout)
        fd = finite_diff_grads(lambda: float(np.sum(layer.forward(x) * readout)),
                               layer.params)
        for g, ref in zip(layer.grads, fd):
            denom = max(np.max(np.abs(ref)), 1e-8)
            worst = max(worst, float(np.max(np.abs(g - ref)) / denom))
        checked += 1

    p = np.zeros(4)
    opt = nn.Adam([p], alpha=0.001)
    opt.step([np.full(4, 2.5)])
    adam_err = float(np.max(np.abs(np.abs(p) - 0.001)))
    ok = worst < 1e-4 and adam_err < 1e-6
    _report(4, ok, f"50 shapes, worst grad rel err={worst:.2e} (<1e-4), "
                   f"Adam first-step err={adam_err:.2e} (<1e-6)")
    assert ok


def test_criterion_5_desk_scale_training(trained_160):
    model, test_blocks = trained_160
    metrics = cnn.evaluate(model, test_blocks)
    untrained = cnn.build_model(model.cfg, seed=MODEL_SEED)
    baseline = _forced_decision_mae(untrained, test_blocks)
    gain = baseline / metrics.mae if metrics.mae else np.inf
    low = metrics.per_snr[0][2]
    high = metrics.per_snr[-1][2]
    ratio = low / high if (low and high) else np.inf
    ok = gain >= 5.0 and ratio < 3.0
    _report(5, ok, f"MAE={metrics.mae:.2f} vs untrained {baseline:.2f} "
                   f"({gain:.1f}×, ≥5×); SNR-bin MAE [0,5]dB={low:.2f} / "
                   f"[20,25]dB={high:.2f} (ratio {ratio:.2f}, <3)")
    assert ok


def test_criterion_6_miss_false_trend(trained_160, trained_40):
    m160 = cnn.evaluate(*trained_160)
    m40 = cnn.evaluate(*trained_40)
    ok = (m160.miss_rate < 0.2 and m160.false_alarm_rate < 0.2
          and m40.miss_rate < 0.2 and m40.false_alarm_rate < 0.2
          and m160.false_alarm_rate <= m40.false_alarm_rate)
    _report(6, ok, f"B160 miss={m160.miss_rate:.3f} fa={m160.false_alarm_rate:.3f}; "
                   f"B40 miss={m40.miss_rate:.3f} fa={m40.false_alarm_rate:.3f}; "
                   f"fa(160)≤fa(40): {m160.false_alarm_rate:.3f}≤"
                   f"{m40.false_alarm_rate:.3f}")
    assert ok


def test_criterion_7_flops_model(tmp_path):
    formula_ok = True
    for b in cnn.BLOCK_LENGTHS:
        cfg = CnnDetectorConfig(block_len=b)
        model = cnn.build_model(cfg, seed=0)
        x = np.abs(np.random.default_rng(b).standard_normal((1, b)))
        inputs = cnn.prepare_inputs(x, cfg)
        _, muls = instrumented_forward(model.net, inputs)
        if muls != flops.model_flops(cfg).total_muls:
            formula_ok = False
    conv_report = flops.conventional_flops()
    conv_ok = (conv_report.total_per_block == 1041
               and conv_report.mflops == pytest.approx(1041.0))
    out = tmp_path / "flops.csv"
    assert cli.main(["flops", "--all", "--out", str(out)]) == 0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    mflops = {r["detector"]: float(r["mflops"]) for r in rows}
    csv_ok = all(mflops[f"cnn-B{b}"] < mflops["conventional"]
                 for b in (40, 80, 160))
    ok = formula_ok and conv_ok and csv_ok
    _report(7, ok, f"instrumented==formula for {len(cnn.BLOCK_LENGTHS)} block "
                   f"lengths: {formula_ok}; conventional={conv_report.mflops:.0f}"
                   f" MFLOPS (=1041); CNN below conventional for small B: {csv_ok}")
    assert ok


def test_criterion_8_pipeline_reproducibility(tmp_path):
    spec = dataset.DatasetSpec(block_len=40, n_blocks=200, seed=3,
                               channel=dataset.ChannelTemplate(
                                   multipath=False, cfo_max_hz=0.0))
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(spec.to_json())

    def run(tag: str) -> Path:
        root = tmp_path / tag
        data = root / "data"
        assert cli.main(["gen", "--spec", str(spec_path),
                         "--out", str(data)]) == 0
        assert cli.main(["train", "--data", str(data), "--block-len", "40",
                         "--epochs", "2", "--seed", "1",
                         "--out", str(root / "model.ckpt")]) == 0
        assert cli.main(["eval", "--model", str(root / "model.ckpt"),
                         "--data", str(data), "--block-len", "40",
                         "--out", str(root / "eval.csv")]) == 0
        return root

    a, b = run("a"), run("b")
    compared = []
    for rel in ("data/blocks40.blocks.bin", "model.ckpt", "model_loss.csv",
                "eval.csv", "eval_summary.csv"):
        compared.append((rel, (a / rel).read_bytes() == (b / rel).read_bytes()))
    ok = all(same for _, same in compared)
    _report(8, ok, "byte-identical re-run: "
            + ", ".join(f"{rel}={'yes' if same else 'NO'}"
                        for rel, same in compared))
    assert ok
