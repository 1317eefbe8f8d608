"""Monte Carlo codeword-error-rate simulation over Rayleigh-fading channels.

Each trial draws an i.i.d. complex Gaussian channel, transmits a uniformly
random codeword from the (possibly side-information-restricted) codebook,
and decodes by exhaustive minimisation of ||Y - HX'||^2 over that same
codebook.  Trials are driven by counter-based random streams keyed on
(master seed, SNR-point index) with a fixed word budget per trial, so the
result is bit-identical for any worker count.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import CodebookTooLarge, TargetNotBracketed
from .lstic import LsticCode, SideInfoConfig
from .stbc import Codebook

DEFAULT_ML_CAP = 100_000
ROUND_TRIALS = 20_000

# GEMM tiling: codebook rows per tile and trials per scoring batch.
_TILE_ROWS = 32_768
_TRIAL_BATCH = 128


@dataclass(frozen=True)
class SimConfig:
    """One simulation campaign: a codebook against an SNR grid.

    ``snr_db`` uses SNR = n_t / sigma^2 per receive antenna.  ``trials`` is
    the per-point maximum; with ``stop_errors`` set, a point stops at the
    first 20k-trial round boundary where the error count reaches it.
    Codebooks larger than ``ml_cap`` are refused (exhaustive decoding cost
    grows linearly in the codebook size); raise the cap explicitly to
    accept the cost.
    """

    code: LsticCode
    snr_db: tuple[float, ...]
    trials: int
    seed: int = 0
    side_info: SideInfoConfig | None = None
    n_rx: int = 2
    stop_errors: int | None = None
    ml_cap: int = DEFAULT_ML_CAP
    workers: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.snr_db:
            raise ValueError("SNR grid is empty")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ValueError("SNR grid must be strictly increasing")
        if self.n_rx < 1:
            raise ValueError("n_rx must be at least 1")
        if self.stop_errors is not None and self.stop_errors < 1:
            raise ValueError("stop_errors must be at least 1 when set")


@dataclass(frozen=True)
class CerPoint:
    snr_db: float
    trials: int
    errors: int
    cer: float
    stderr: float


@dataclass(frozen=True)
class CerCurve:
    points: tuple[CerPoint, ...] = field(default_factory=tuple)


def _worker_count(cfg: SimConfig) -> int:
    if cfg.workers is not None:
        return max(1, cfg.workers)
    return max(1, int(os.environ.get("LSTIC_WORKERS", "1")))


def _stride(n_rx: int, n: int) -> int:
    # One word for the message draw, two per complex Gaussian (channel and
    # noise), rounded up to a power of two so per-trial counter blocks are
    # disjoint and aligned.
    words = 2 * n_rx * n + 2 * n_rx * n + 8
    return 1 << (words - 1).bit_length()


def _codebook_matrices(code: LsticCode, side_info: SideInfoConfig | None) -> np.ndarray:
    """Unit-power codeword arrays; a subcode keeps the parent's scaling."""
    t = code.tower
    full = Codebook(t, code.layer_symbols())
    scale = Fraction(t.n * t.n) / full.mean_energy()
    symbols = code.layer_symbols() if side_info is None else code.subcode(side_info).layer_symbols()
    return Codebook(t, symbols, norm_scale_sq=scale).matrix_array()


def _score_rows(x: np.ndarray) -> np.ndarray:
    """Per-codeword scoring rows: [X X^H flattened, -2 conj(X) flattened].

    With c = [(H^H H)^T flattened, H^H Y flattened] per trial,
    Re(rows @ c) equals ||H X||^2 - 2 Re tr(Y^H H X), whose argmin over the
    codebook is the exhaustive ML decision.
    """
    m = x.shape[0]
    gram = np.matmul(x, x.conj().transpose(0, 2, 1)).reshape(m, -1)
    rows = np.concatenate([gram, -2.0 * x.conj().reshape(m, -1)], axis=1)
    return np.ascontiguousarray(rows.astype(np.complex64))


def _complex_gaussians(cols: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Unit-variance complex Gaussians from pairs of uniform words."""
    u1 = cols[:, 0::2]
    u2 = cols[:, 1::2]
    r = np.sqrt(-np.log1p(-u1))
    phase = 2.0 * np.pi * u2
    return (r * np.cos(phase) + 1j * r * np.sin(phase)).reshape(shape)


def _argmin_scores(rows: np.ndarray, c: np.ndarray) -> np.ndarray:
    batch = c.shape[1]
    best = np.full(batch, np.inf, dtype=np.float32)
    best_idx = np.zeros(batch, dtype=np.int64)
    cols = np.arange(batch)
    for r0 in range(0, rows.shape[0], _TILE_ROWS):
        scores = (rows[r0 : r0 + _TILE_ROWS] @ c).real
        j = np.argmin(scores, axis=0)
        v = scores[j, cols]
        upd = v < best
        best_idx[upd] = j[upd] + r0
        best[upd] = v[upd]
    return best_idx


def _run_range(
    rows: np.ndarray,
    x: np.ndarray,
    n_rx: int,
    sigma2: float,
    key: np.ndarray,
    start: int,
    count: int,
    stride: int,
) -> int:
    m, n, _ = x.shape
    bits = np.random.Philox(key=key)
    bits.advance(start * stride // 4)
    raw = bits.random_raw(count * stride).reshape(count, stride)
    u = (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53

    msg = np.minimum((u[:, 0] * m).astype(np.int64), m - 1)
    nh = 2 * n_rx * n
    h = _complex_gaussians(u[:, 1 : 1 + nh], (count, n_rx, n))
    w = _complex_gaussians(u[:, 1 + nh : 1 + 2 * nh], (count, n_rx, n))
    w *= math.sqrt(sigma2)

    errors = 0
    for b0 in range(0, count, _TRIAL_BATCH):
        sl = slice(b0, b0 + _TRIAL_BATCH)
        mb = msg[sl]
        hb = h[sl]
        y = hb @ x[mb] + w[sl]
        hh = hb.conj().transpose(0, 2, 1)
        gram = (hh @ hb).transpose(0, 2, 1).reshape(len(mb), -1)
        proj = (hh @ y).reshape(len(mb), -1)
        c = np.ascontiguousarray(
            np.concatenate([gram, proj], axis=1).T.astype(np.complex64)
        )
        decided = _argmin_scores(rows, c)
        errors += int(np.count_nonzero(decided != mb))
    return errors


def _round_splits(done: int, count: int, workers: int) -> list[tuple[int, int]]:
    base, rem = divmod(count, workers)
    splits = []
    start = done
    for k in range(workers):
        size = base + (1 if k < rem else 0)
        if size:
            splits.append((start, size))
        start += size
    return splits


def simulate_cer(cfg: SimConfig) -> CerCurve:
    """Simulate the codeword error rate at every grid point."""
    t = cfg.code.tower
    x = _codebook_matrices(cfg.code, cfg.side_info)
    if x.shape[0] > cfg.ml_cap:
        raise CodebookTooLarge(
            f"codebook has {x.shape[0]} entries, cap is {cfg.ml_cap}; "
            "pass ml_cap explicitly to accept the decoding cost"
        )
    rows = _score_rows(x)
    stride = _stride(cfg.n_rx, t.n)
    workers = _worker_count(cfg)
    points = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for index, snr_db in enumerate(cfg.snr_db):
            sigma2 = t.n / 10.0 ** (snr_db / 10.0)
            key = np.array([cfg.seed, index], dtype=np.uint64)
            errors = 0
            done = 0
            while done < cfg.trials:
                round_n = min(ROUND_TRIALS, cfg.trials - done)
                futures = [
                    pool.submit(_run_range, rows, x, cfg.n_rx, sigma2, key, s, c, stride)
                    for s, c in _round_splits(done, round_n, workers)
                ]
                errors += sum(f.result() for f in futures)
                done += round_n
                if cfg.stop_errors is not None and errors >= cfg.stop_errors:
                    break
            cer = errors / done
            stderr = math.sqrt(cer * (1.0 - cer) / done)
            points.append(CerPoint(snr_db, done, errors, cer, stderr))
    return CerCurve(tuple(points))


def _snr_at(curve: CerCurve, target: float) -> float:
    """SNR where the curve crosses the target, linear in log10(CER)."""
    y_t = math.log10(target)
    usable = [(p.snr_db, math.log10(p.cer)) for p in curve.points if p.cer > 0]
    for (s1, y1), (s2, y2) in zip(usable, usable[1:]):
        if y1 >= y_t >= y2:
            if y1 == y2:
                return s1
            return s1 + (s2 - s1) * (y_t - y1) / (y2 - y1)
    raise TargetNotBracketed(
        f"no adjacent grid points bracket CER {target:g}; extend the SNR grid"
    )


def measure_gain(a: CerCurve, b: CerCurve, target: float) -> float:
    """SNR(a) - SNR(b) at the target CER, in dB."""
    return _snr_at(a, target) - _snr_at(b, target)


def write_csv(curve: CerCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["snr_db", "trials", "errors", "cer", "stderr"])
        for p in curve.points:
            writer.writerow(
                [f"{p.snr_db:g}", p.trials, p.errors, f"{p.cer:.12e}", f"{p.stderr:.12e}"]
            )


def read_csv(path) -> CerCurve:
    points = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            points.append(
                CerPoint(
                    snr_db=float(row["snr_db"]),
                    trials=int(row["trials"]),
                    errors=int(row["errors"]),
                    cer=float(row["cer"]),
                    stderr=float(row["stderr"]),
                )
            )
    return CerCurve(tuple(points))
