import wave

import numpy as np


def write_wav(path, signal, rate, channels=1, width=2):
    """Write a PCM WAV file from a float signal in [-1, 1]."""
    signal = np.asarray(signal, dtype=np.float64)
    if channels == 2 and signal.ndim == 1:
        signal = np.stack([signal, signal], axis=1)
    clipped = np.clip(signal, -1.0, 1.0)
    if width == 1:
        data = (clipped * 127.0 + 127.5).astype(np.uint8).tobytes()
    elif width == 2:
        data = (clipped * 32767.0).astype("<i2").tobytes()
    elif width == 4:
        data = (clipped * (2**31 - 1)).astype("<i4").tobytes()
    else:
        raise ValueError(f"unsupported width {width}")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(channels)
        fh.setsampwidth(width)
        fh.setframerate(rate)
        fh.writeframes(data)


def sine(duration, rate, freq, amplitude=0.5):
    t = np.arange(int(duration * rate)) / rate
    return amplitude * np.sin(2.0 * np.pi * freq * t)
