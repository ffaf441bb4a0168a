"""Sensor dataset handling: CSV ingestion, synthetic traces, sphering.

A dataset is a plain float64 array of shape (T, N): one row per time
instant, one column per sensor.  Sphering maps a raw frame into [-1, 1]
by removing its own mean and scaling by three dataset standard
deviations; desphering is the affine inverse.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CsvFormatError",
    "NoiseSpec",
    "SpheredFrame",
    "load_csv",
    "write_csv",
    "generate_synthetic",
    "synthetic_field",
    "sphere",
    "sphere_rows",
    "desphere",
    "desphere_rows",
    "dataset_std",
]

# Samples per simulated day in the synthetic generator (2-minute sampling).
DIURNAL_PERIOD = 720.0


class CsvFormatError(ValueError):
    """Raised when a dataset file cannot be parsed."""


@dataclass(frozen=True)
class NoiseSpec:
    """Additive i.i.d. zero-mean Gaussian sensor noise."""

    variance: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError(f"noise variance must be >= 0, got {self.variance}")


@dataclass(frozen=True)
class SpheredFrame:
    """A frame scaled into [-1, 1] plus the mean that was removed from it."""

    d: np.ndarray
    mean: float


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(source) -> np.ndarray:
    """Read a (T, N) dataset from a path, file object, or text.

    Accepts an optional header row (a first row whose fields are all
    non-numeric).  Raises CsvFormatError naming the offending row/column
    for ragged rows, non-numeric cells, and empty files.
    """
    if hasattr(source, "read"):
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw
    else:
        with open(source, "rb") as fh:
            text = fh.read().decode("utf-8")

    rows = [
        (lineno, row)
        for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1)
        if row
    ]
    if not rows:
        raise CsvFormatError("empty CSV: no data rows")

    # A header is a first row with no numeric field at all; anything else
    # is data and a stray label in it is a parse error, not a header.
    if not any(_is_number(cell) for cell in rows[0][1]):
        rows = rows[1:]
        if not rows:
            raise CsvFormatError("CSV contains only a header, no data rows")

    width = len(rows[0][1])
    out = np.empty((len(rows), width), dtype=np.float64)
    for i, (lineno, row) in enumerate(rows):
        if len(row) != width:
            raise CsvFormatError(
                f"row {lineno}: expected {width} fields, found {len(row)}"
            )
        for j, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise CsvFormatError(
                    f"row {lineno}, column {j + 1}: not a number: {cell!r}"
                ) from None
            if not math.isfinite(value):
                raise CsvFormatError(
                    f"row {lineno}, column {j + 1}: non-finite value {cell!r}"
                )
            out[i, j] = value
    return out


def write_csv(matrix: np.ndarray, sink, header: list[str] | None = None) -> None:
    """Write a (T, N) dataset as CSV at full double precision.

    Values are printed with 17 significant digits so load_csv(write_csv(X))
    reproduces X bit-exactly.
    """
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    lines = []
    if header is not None:
        if len(header) != X.shape[1]:
            raise ValueError("header length does not match column count")
        lines.append(",".join(header))
    for row in X:
        lines.append(",".join(f"{v:.17g}" for v in row))
    text = "\n".join(lines) + "\n"
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _spawn_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    # Separate streams so the noiseless field is reproducible regardless of
    # whether noise is added on top.
    field_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(field_ss), np.random.default_rng(noise_ss)


def _ar1(rng: np.random.Generator, n: int, smoothing: float, std: float) -> np.ndarray:
    """Stationary AR(1) series: low-pass random walk with the given std."""
    eps = rng.normal(size=n)
    out = np.empty(n)
    out[0] = eps[0]
    scale = math.sqrt(1.0 - smoothing * smoothing)
    for t in range(1, n):
        out[t] = smoothing * out[t - 1] + scale * eps[t]
    return std * out


def synthetic_field(
    n_sensors: int,
    n_samples: int,
    correlation_length: float = 4.0,
    base_signal_amplitude: float = 3.0,
    seed: int = 0,
) -> np.ndarray:
    """Noiseless correlated field sampled by a line of sensors.

    Sensors sit at positions 1..N.  Each frame is a shared diurnal level
    plus a warm spot of spatial width ``correlation_length`` whose centre
    sweeps the array sinusoidally, perturbed by a low-pass random walk.
    Covariance between two sensors decays with their distance over the
    correlation length; correlation_length = inf makes all columns equal.
    """
    if n_sensors < 2:
        raise ValueError("need at least 2 sensors for a spatially correlated field")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not correlation_length > 0:
        raise ValueError("correlation_length must be positive")

    rng, _ = _spawn_rngs(seed)
    amp = float(base_signal_amplitude)
    pos = np.arange(1.0, n_sensors + 1.0)
    t = np.arange(n_samples, dtype=np.float64)
    phase = 2.0 * np.pi * t / DIURNAL_PERIOD

    phi0 = rng.uniform(0.0, 2.0 * np.pi)
    psi0 = rng.uniform(0.0, 2.0 * np.pi)
    wander = _ar1(rng, n_samples, smoothing=0.995, std=0.8)
    level_walk = _ar1(rng, n_samples, smoothing=0.997, std=amp)

    # Shared scalar level: identical for every sensor at each instant.  Its
    # swing dominates the pooled scale, as day/night cycles do for real
    # surface temperatures.
    level = 20.0 + amp * np.sin(phase + phi0) + level_walk

    # Hot-spot centre sweeps the array; 0.37 keeps it incommensurate with
    # the diurnal level so frames do not repeat.
    mid = 0.5 * (1.0 + n_sensors)
    half_span = 0.5 * (n_sensors - 1.0)
    centre = mid + half_span * np.sin(0.37 * phase + psi0 + wander)

    spread = (pos[None, :] - centre[:, None]) / correlation_length
    bump = amp * np.exp(-0.5 * spread * spread)
    return level[:, None] + bump


def generate_synthetic(
    n_sensors: int,
    n_samples: int,
    correlation_length: float = 4.0,
    base_signal_amplitude: float = 3.0,
    noise: NoiseSpec = NoiseSpec(),
) -> np.ndarray:
    """Synthetic readings: the noiseless field plus i.i.d. Gaussian noise.

    Deterministic given its arguments; the field itself depends only on
    noise.seed, never on noise.variance.
    """
    field = synthetic_field(
        n_sensors,
        n_samples,
        correlation_length=correlation_length,
        base_signal_amplitude=base_signal_amplitude,
        seed=noise.seed,
    )
    if noise.variance == 0.0:
        return field
    _, noise_rng = _spawn_rngs(noise.seed)
    z = noise_rng.normal(0.0, math.sqrt(noise.variance), size=field.shape)
    return field + z


def sphere(x: np.ndarray, sigma: float) -> SpheredFrame:
    """Normalize one frame: remove its mean, clip at 3*sigma, scale to [-1, 1]."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D frame, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("frame contains non-finite values")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    mean = float(x.mean())
    d = np.clip(x - mean, -3.0 * sigma, 3.0 * sigma) / (3.0 * sigma)
    return SpheredFrame(d=d, mean=mean)


def sphere_rows(X: np.ndarray, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Sphere every row of (T, N); returns (D, per-row means)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("matrix contains non-finite values")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    means = X.mean(axis=1)
    D = np.clip(X - means[:, None], -3.0 * sigma, 3.0 * sigma) / (3.0 * sigma)
    return D, means


def desphere(d_hat: np.ndarray, mean: float, sigma: float) -> np.ndarray:
    """Inverse of sphere: x_hat = 3*sigma*d_hat + mean."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return 3.0 * sigma * np.asarray(d_hat, dtype=np.float64) + mean


def desphere_rows(D_hat: np.ndarray, means: np.ndarray, sigma: float) -> np.ndarray:
    """Row-wise desphere with one mean per row."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    D_hat = np.asarray(D_hat, dtype=np.float64)
    return 3.0 * sigma * D_hat + np.asarray(means, dtype=np.float64)[:, None]


def dataset_std(X: np.ndarray) -> float:
    """Population standard deviation pooled over all entries of (T, N).

    This is the single scale constant baked into a trained model; a
    constant matrix has no scale and is rejected.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.size < 2:
        raise ValueError("need at least 2 entries to measure spread")
    if not np.isfinite(X).all():
        raise ValueError("matrix contains non-finite values")
    s = float(X.std())
    if s == 0.0:
        raise ValueError("constant matrix: standard deviation is zero")
    return s
