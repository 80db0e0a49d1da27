"""1D-CNN packet-start detector.

Fixed architecture for every supported block length: two ReLU convolution
layers (9 filters of length 8, then 5 filters of length 3), a 3-neuron ReLU
dense layer and a linear scalar output.  A B-sample amplitude block is
framed into 4 input channels; the scalar regression output is turned into a
presence decision by thresholding against the midpoint between the
no-packet label (-1) and the smallest start label (0).
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import nn
from .corrsync import DetectionResult

BLOCK_LENGTHS = (40, 80, 160, 320, 800, 1600)

_MAGIC = b"PKTCNN1\0"
_CKPT_VERSION = 1


@dataclass(frozen=True)
class CnnDetectorConfig:
    block_len: int = 160
    in_channels: int = 4
    conv1_filters: int = 9
    conv1_filter_len: int = 8  # half of the short-training-symbol length
    conv2_filters: int = 5
    conv2_filter_len: int = 3
    fc_neurons: int = 3
    no_packet_label: float = -1.0
    detect_threshold: float = -0.5
    normalize: str = "raw"  # "raw" or "rms"

    def __post_init__(self):
        if self.block_len % self.in_channels != 0:
            raise ValueError("block_len must be divisible by in_channels")
        if self.normalize not in ("rms", "raw"):
            raise ValueError("normalize must be 'rms' or 'raw'")

    @property
    def time_steps(self) -> int:
        return self.block_len // self.in_channels

    def layer_widths(self) -> dict:
        """Valid-convolution width arithmetic (K = T - F + 1) per layer."""
        t = self.time_steps
        k1 = t - self.conv1_filter_len + 1
        k2 = k1 - self.conv2_filter_len + 1
        return {"T": t, "K1": k1, "K2": k2, "flatten": self.conv2_filters * k2}


@dataclass
class CnnModel:
    cfg: CnnDetectorConfig
    net: nn.Sequential


def block_to_channels(block: np.ndarray, in_channels: int) -> np.ndarray:
    """Frame-of-N reshape: channel c at step t holds block[N*t + c]."""
    block = np.asarray(block)
    if block.shape[-1] % in_channels != 0:
        raise ValueError("block length must be divisible by in_channels")
    # works on [B] or batched [n, B] inputs
    shape = block.shape[:-1] + (block.shape[-1] // in_channels, in_channels)
    return np.swapaxes(block.reshape(shape), -1, -2)


def channels_to_block(channels: np.ndarray) -> np.ndarray:
    """Inverse of block_to_channels."""
    swapped = np.swapaxes(channels, -1, -2)
    return swapped.reshape(swapped.shape[:-2] + (-1,))


def build_model(cfg: CnnDetectorConfig, seed: int = 0) -> CnnModel:
    """The fixed detection network with seeded initialization.

    The output bias starts at the no-packet label, so an untrained model
    predicts "no packet" for every block and the false-alarm rate starts at
    zero rather than one.
    """
    widths = cfg.layer_widths()
    if widths["K2"] < 1:
        raise ValueError(
            f"block_len {cfg.block_len} is too short for both convolutions")
    rng = np.random.default_rng(seed)
    net = nn.Sequential([
        nn.Conv1d(cfg.in_channels, cfg.conv1_filters, cfg.conv1_filter_len, rng),
        nn.Relu(),
        nn.Conv1d(cfg.conv1_filters, cfg.conv2_filters, cfg.conv2_filter_len, rng),
        nn.Relu(),
        nn.Flatten(),
        nn.Dense(widths["flatten"], cfg.fc_neurons, "he", rng),
        nn.Relu(),
        nn.Dense(cfg.fc_neurons, 1, "xavier", rng),
    ])
    net.layers[-1].b[...] = cfg.no_packet_label
    return CnnModel(cfg, net)


def prepare_inputs(blocks: np.ndarray, cfg: CnnDetectorConfig) -> np.ndarray:
    """Amplitude blocks [n, B] -> network inputs [n, C, T].

    In "rms" mode each block is scaled to unit RMS first; "raw" mode keeps
    the amplitudes (and hence the received-power cue) intact.
    """
    x = np.asarray(blocks, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != cfg.block_len:
        raise ValueError(f"blocks must have length {cfg.block_len}")
    if cfg.normalize == "rms":
        rms = np.sqrt(np.mean(x ** 2, axis=1, keepdims=True))
        x = np.divide(x, rms, out=x.copy(), where=rms > 0)
    return block_to_channels(x, cfg.in_channels)


def predict(model: CnnModel, blocks: np.ndarray) -> np.ndarray:
    """Raw scalar scores for a batch of amplitude blocks."""
    return model.net.forward(prepare_inputs(blocks, model.cfg))[:, 0]


def detect(model: CnnModel, block: np.ndarray,
           cfg: CnnDetectorConfig | None = None) -> DetectionResult:
    """Presence decision + start estimate for one amplitude block."""
    cfg = cfg or model.cfg
    score = float(predict(model, np.asarray(block)[None, :])[0])
    if score >= cfg.detect_threshold:
        start = int(round(min(max(score, 0.0), cfg.block_len - 1)))
        return DetectionResult(True, start, score)
    return DetectionResult(False, -1, score)


SNR_BIN_EDGES = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)


@dataclass(frozen=True)
class EvalMetrics:
    mae: float | None
    miss_rate: float
    false_alarm_rate: float
    per_snr: tuple  # rows of (bin_lo, bin_hi, mae_or_None, n)


def evaluate(model: CnnModel, blocks, cfg: CnnDetectorConfig | None = None) -> EvalMetrics:
    """Miss/false-alarm rates and true-positive MAE, binned by SNR tag."""
    if len(blocks) == 0:
        raise ValueError("block list must be non-empty")
    cfg = cfg or model.cfg
    amps = np.stack([b.amplitudes for b in blocks]).astype(np.float64)
    labels = np.array([b.label for b in blocks])
    snrs = np.array([b.snr_db for b in blocks])
    scores = predict(model, amps)
    detected = scores >= cfg.detect_threshold
    starts = np.rint(np.clip(scores, 0.0, cfg.block_len - 1))

    has_start = labels >= 0
    miss = float(np.mean(~detected[has_start])) if has_start.any() else 0.0
    false_alarm = float(np.mean(detected[~has_start])) if (~has_start).any() else 0.0

    tp = has_start & detected
    err = np.abs(starts - labels)
    mae = float(np.mean(err[tp])) if tp.any() else None

    rows = []
    for lo, hi in zip(SNR_BIN_EDGES[:-1], SNR_BIN_EDGES[1:]):
        in_bin = tp & (snrs >= lo) & ((snrs < hi) if hi < SNR_BIN_EDGES[-1] else (snrs <= hi))
        n = int(in_bin.sum())
        rows.append((lo, hi, float(np.mean(err[in_bin])) if n else None, n))
    return EvalMetrics(mae, miss, false_alarm, tuple(rows))


def train_detector(model: CnnModel, train_blocks, val_blocks=None,
                   train_cfg: nn.TrainConfig | None = None) -> dict:
    """Train on labeled blocks (raw sample-unit labels, -1 for no packet)."""
    train_cfg = train_cfg or nn.TrainConfig()
    x = prepare_inputs(np.stack([b.amplitudes for b in train_blocks]), model.cfg)
    t = np.array([b.label for b in train_blocks], dtype=np.float64)
    val = None
    if val_blocks:
        vx = prepare_inputs(np.stack([b.amplitudes for b in val_blocks]), model.cfg)
        vt = np.array([b.label for b in val_blocks], dtype=np.float64)
        val = (vx, vt)
    return nn.train(model.net, x, t, train_cfg, val)


# -- checkpoint format ------------------------------------------------------
# binary: magic (8 bytes), u32 version, 8 x u32 hyperparameters, then the
# parameter arrays as little-endian float64 blobs in network order
# (conv1.w, conv1.b, conv2.w, conv2.b, fc.w, fc.b, out.w, out.b).
# A JSON manifest of shapes is written alongside (<path>.json).


class CheckpointError(Exception):
    pass


def save_model(model: CnnModel, path: str | Path) -> None:
    path = Path(path)
    cfg = model.cfg
    header = _MAGIC + struct.pack(
        "<9I", _CKPT_VERSION, cfg.block_len, cfg.in_channels,
        cfg.conv1_filters, cfg.conv1_filter_len, cfg.conv2_filters,
        cfg.conv2_filter_len, cfg.fc_neurons, 1 if cfg.normalize == "rms" else 0)
    blobs = b"".join(np.ascontiguousarray(p, dtype="<f8").tobytes()
                     for p in model.net.params)
    path.write_bytes(header + blobs)
    manifest = {
        "format_version": _CKPT_VERSION,
        "config": {k: getattr(cfg, k) for k in (
            "block_len", "in_channels", "conv1_filters", "conv1_filter_len",
            "conv2_filters", "conv2_filter_len", "fc_neurons",
            "no_packet_label", "detect_threshold", "normalize")},
        "param_shapes": [list(p.shape) for p in model.net.params],
        "sha256": hashlib.sha256(blobs).hexdigest(),
    }
    Path(str(path) + ".json").write_text(json.dumps(manifest, indent=1))


def load_model(path: str | Path) -> CnnModel:
    data = Path(path).read_bytes()
    if len(data) < len(_MAGIC) + 36 or data[:len(_MAGIC)] != _MAGIC:
        raise CheckpointError("not a model checkpoint")
    fields = struct.unpack_from("<9I", data, len(_MAGIC))
    if fields[0] != _CKPT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {fields[0]}")
    cfg = CnnDetectorConfig(
        block_len=fields[1], in_channels=fields[2], conv1_filters=fields[3],
        conv1_filter_len=fields[4], conv2_filters=fields[5],
        conv2_filter_len=fields[6], fc_neurons=fields[7],
        normalize="rms" if fields[8] else "raw")
    model = build_model(cfg)
    offset = len(_MAGIC) + 36
    for p in model.net.params:
        nbytes = p.size * 8
        if offset + nbytes > len(data):
            raise CheckpointError("checkpoint truncated")
        p[...] = np.frombuffer(data, dtype="<f8", count=p.size,
                               offset=offset).reshape(p.shape)
        offset += nbytes
    if offset != len(data):
        raise CheckpointError("checkpoint has trailing bytes")
    return model
