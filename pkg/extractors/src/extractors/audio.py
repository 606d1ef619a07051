"""Audio clips to 128-dimensional acoustic embeddings.

The processing chain per clip: decode WAV, resample to 16 kHz mono,
split into non-overlapping 960 ms segments, compute a 96x64 log-mel
spectrogram per segment, project it to 128 dimensions with a fixed
featurizer, and average the segment vectors to clip level (the same
mean rule the training toolkit uses).

The default featurizer is a seeded random projection selected by the
model id ``logmel-meanproj-128/v1`` — deterministic and
dependency-free.  Passing a path to an ``.npz`` file with a
``projection`` array (and optional ``bias``) substitutes a real
pretrained readout without changing any other part of the chain.
"""

from __future__ import annotations

import functools
import logging
import wave
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

from zsaudio import (
    EmbeddingTable, ValidationError, aggregate_clip_embedding,
    write_embedding_table,
)

from .jobs import ExtractionJob, fingerprint, seed_from, write_output_manifest

log = logging.getLogger("extractors")

TARGET_RATE = 16_000
SEGMENT_SAMPLES = 15_360        # 960 ms at 16 kHz
FRAME_LENGTH = 400              # 25 ms window
FRAME_HOP = 160                 # 10 ms hop
N_FRAMES = 96                   # frames per segment
N_MELS = 64
N_FFT = 512
MEL_FMIN, MEL_FMAX = 125.0, 7500.0
AUDIO_DIM = 128
BUILTIN_AUDIO_MODEL = "logmel-meanproj-128/v1"

_PCM_SCALE = {1: 127.5, 2: 32768.0, 4: 2147483648.0}


def read_wav(path) -> tuple[np.ndarray, int]:
    """Decode a PCM WAV file to a mono float array in [-1, 1]."""
    try:
        with wave.open(str(path), "rb") as fh:
            width = fh.getsampwidth()
            channels = fh.getnchannels()
            rate = fh.getframerate()
            raw = fh.readframes(fh.getnframes())
    except (wave.Error, EOFError) as exc:
        raise ValidationError(f"cannot decode audio: {exc}", path=path) from exc
    if width not in _PCM_SCALE:
        raise ValidationError(
            f"unsupported sample width {width} bytes", path=path)
    if width == 1:  # 8-bit WAV is unsigned
        samples = np.frombuffer(raw, dtype=np.uint8).astype(np.float64)
        samples = (samples - 127.5) / _PCM_SCALE[width]
    else:
        dtype = np.int16 if width == 2 else np.int32
        samples = np.frombuffer(raw, dtype=dtype).astype(np.float64)
        samples /= _PCM_SCALE[width]
    if channels > 1:
        samples = samples.reshape(-1, channels).mean(axis=1)
    return samples, rate


def resample_to_target(signal: np.ndarray, rate: int) -> np.ndarray:
    """Polyphase resampling to the 16 kHz working rate."""
    if rate == TARGET_RATE:
        return signal
    if rate <= 0:
        raise ValidationError(f"invalid sample rate {rate}")
    g = np.gcd(rate, TARGET_RATE)
    return resample_poly(signal, TARGET_RATE // g, rate // g)


def split_segments(signal: np.ndarray, clip_id: str = "?") -> np.ndarray:
    """Non-overlapping 960 ms segments; a too-short clip becomes one
    zero-padded segment (with a warning) rather than an error."""
    n = signal.size // SEGMENT_SAMPLES
    if n == 0:
        log.warning("clip %s is shorter than one 960 ms segment; zero-padding",
                    clip_id)
        padded = np.zeros(SEGMENT_SAMPLES)
        padded[:signal.size] = signal
        return padded[np.newaxis, :]
    return signal[:n * SEGMENT_SAMPLES].reshape(n, SEGMENT_SAMPLES)


@functools.lru_cache(maxsize=1)
def _mel_filterbank() -> np.ndarray:
    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)

    corners = mel_to_hz(np.linspace(hz_to_mel(MEL_FMIN), hz_to_mel(MEL_FMAX),
                                    N_MELS + 2))
    bins = np.fft.rfftfreq(N_FFT, 1.0 / TARGET_RATE)
    bank = np.zeros((N_MELS, bins.size))
    for m in range(N_MELS):
        lo, mid, hi = corners[m], corners[m + 1], corners[m + 2]
        rising = (bins - lo) / (mid - lo)
        falling = (hi - bins) / (hi - mid)
        bank[m] = np.maximum(0.0, np.minimum(rising, falling))
    return bank


def log_mel(segment: np.ndarray) -> np.ndarray:
    """96x64 log-mel spectrogram of one 960 ms segment."""
    if segment.size != SEGMENT_SAMPLES:
        raise ValidationError(
            f"segment must have {SEGMENT_SAMPLES} samples, got {segment.size}")
    # pad so that FRAME_LENGTH + (N_FRAMES-1)*FRAME_HOP samples are available
    needed = FRAME_LENGTH + (N_FRAMES - 1) * FRAME_HOP
    padded = np.zeros(needed)
    padded[:segment.size] = segment
    frames = np.lib.stride_tricks.sliding_window_view(
        padded, FRAME_LENGTH)[::FRAME_HOP][:N_FRAMES]
    window = np.hanning(FRAME_LENGTH)
    spectrum = np.abs(np.fft.rfft(frames * window, n=N_FFT)) ** 2
    mel = spectrum @ _mel_filterbank().T
    return np.log(mel + 0.01)


def _resolve_projection(model: str) -> tuple[np.ndarray, np.ndarray, str]:
    """Featurizer lookup: builtin id or a .npz weights file."""
    in_dim = N_FRAMES * N_MELS
    if model == BUILTIN_AUDIO_MODEL:
        rng = np.random.default_rng(seed_from(model))
        projection = rng.standard_normal((in_dim, AUDIO_DIM)) / np.sqrt(in_dim)
        return projection, np.zeros(AUDIO_DIM), "seeded random projection"
    if model.endswith(".npz") and Path(model).exists():
        with np.load(model) as data:
            if "projection" not in data:
                raise ValidationError(
                    "featurizer file must contain a 'projection' array",
                    path=model)
            projection = np.asarray(data["projection"], dtype=np.float64)
            bias = (np.asarray(data["bias"], dtype=np.float64)
                    if "bias" in data else np.zeros(projection.shape[1]))
        if projection.shape[0] != in_dim:
            raise ValidationError(
                f"projection must map {in_dim} log-mel values, got shape "
                f"{projection.shape}", path=model)
        if bias.shape != (projection.shape[1],):
            raise ValidationError(
                f"bias shape {bias.shape} does not match projection "
                f"output {projection.shape[1]}", path=model)
        return projection, bias, "weights file"
    raise ValidationError(
        f"unknown audio featurizer {model!r}; use {BUILTIN_AUDIO_MODEL!r} "
        "or a path to an .npz weights file")


def extract_audio_embeddings(job: ExtractionJob) -> EmbeddingTable:
    """Run an audio-clip job: one 128-d mean-of-segments vector per clip."""
    if job.kind != "audio-clip":
        raise ValidationError(f"expected an audio-clip job, got {job.kind!r}")
    projection, bias, model_note = _resolve_projection(job.model)
    out_dim = projection.shape[1]

    entries, inputs, segment_counts = [], {}, {}
    for clip_id, source in job.manifest:
        signal, rate = read_wav(source)
        signal = resample_to_target(signal, rate)
        segments = split_segments(signal, clip_id)
        vectors = [log_mel(seg).ravel() @ projection + bias
                   for seg in segments]
        entries.append((clip_id, aggregate_clip_embedding(vectors)))
        inputs[clip_id] = fingerprint(source)
        segment_counts[clip_id] = len(vectors)

    table = EmbeddingTable(out_dim, entries, kind="acoustic")
    write_embedding_table(table, job.out)
    write_output_manifest(job.out, {
        "kind": job.kind,
        "model": job.model,
        "model_note": model_note,
        "dim": out_dim,
        "segmentation": "non-overlapping 960 ms at 16 kHz mono; short clips "
                        "zero-padded to one segment",
        "frontend": f"{N_FRAMES}x{N_MELS} log-mel "
                    f"({MEL_FMIN:.0f}-{MEL_FMAX:.0f} Hz)",
        "pooling": "componentwise mean over segment embeddings",
        "segments": segment_counts,
        "inputs": inputs,
    })
    return table
