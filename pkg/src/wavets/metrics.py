"""Forecast evaluation metrics and naive reference forecasters.

MSE and MAE average over every horizon step and channel. SMAPE and MASE
follow the displayed short-term formulas: SMAPE counts 0/0 terms as 0,
and the MASE denominator is the in-window seasonal difference, so a
constant truth vector has no defined MASE (returned as None).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError


def _check_same_shape(truth: np.ndarray, pred: np.ndarray) -> None:
    if truth.shape != pred.shape:
        raise DataError(f"shape mismatch: truth {truth.shape} vs pred {pred.shape}")


def mse(truth: np.ndarray, pred: np.ndarray) -> float:
    truth = np.asarray(truth, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    _check_same_shape(truth, pred)
    return float(np.mean((truth - pred) ** 2))


def mae(truth: np.ndarray, pred: np.ndarray) -> float:
    truth = np.asarray(truth, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    _check_same_shape(truth, pred)
    return float(np.mean(np.abs(truth - pred)))


def smape(truth: np.ndarray, pred: np.ndarray) -> float:
    """(200/H) * sum |x - xhat| / (|x| + |xhat|), 0/0 terms count as 0."""
    truth = np.asarray(truth, dtype=np.float64).ravel()
    pred = np.asarray(pred, dtype=np.float64).ravel()
    _check_same_shape(truth, pred)
    num = np.abs(truth - pred)
    den = np.abs(truth) + np.abs(pred)
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(200.0 * terms.mean())


def mase(truth: np.ndarray, pred: np.ndarray, period: int) -> float | None:
    """Mean |error| over the in-window seasonal-difference mean.

    Denominator: (1/(H-m)) * sum_{j=m+1..H} |x_j - x_{j-m}|. Returns None
    when the denominator is zero (e.g. constant or perfectly periodic
    truth), since the ratio is undefined there.
    """
    truth = np.asarray(truth, dtype=np.float64).ravel()
    pred = np.asarray(pred, dtype=np.float64).ravel()
    _check_same_shape(truth, pred)
    h = truth.shape[0]
    if not 1 <= period < h:
        raise ConfigError(f"seasonal period {period} must satisfy 1 <= m < H={h}")
    denom = float(np.mean(np.abs(truth[period:] - truth[:-period])))
    if denom == 0.0:
        return None
    return float(np.mean(np.abs(truth - pred)) / denom)


def owa(model: tuple[float, float], ref: tuple[float, float]) -> float:
    """0.5 * (smape/smape_ref + mase/mase_ref)."""
    model_smape, model_mase = model
    ref_smape, ref_mase = ref
    if ref_smape <= 0 or ref_mase <= 0:
        raise DataError(
            f"reference metrics must be positive, got ({ref_smape}, {ref_mase})"
        )
    return float(0.5 * (model_smape / ref_smape + model_mase / ref_mase))


def naive_repeat_last(window: np.ndarray, horizon: int) -> np.ndarray:
    """Forecast by repeating the last observed row."""
    window = np.asarray(window, dtype=np.float64)
    if window.shape[0] < 1:
        raise DataError("empty lookback window")
    return np.tile(window[-1:], (horizon, 1) if window.ndim == 2 else horizon)


def naive_seasonal(window: np.ndarray, horizon: int, period: int) -> np.ndarray:
    """Copy the last observed seasonal cycle forward; m=1 is repeat-last."""
    window = np.asarray(window, dtype=np.float64)
    length = window.shape[0]
    if period < 1 or period > length:
        raise ConfigError(
            f"seasonal period {period} exceeds window length {length}"
        )
    idx = [length - period + (i % period) for i in range(horizon)]
    return window[idx]


@dataclass
class MetricsReport:
    """Flat metric bundle; short-term fields stay None in long-term mode."""

    mse: float
    mae: float
    horizon: int
    channels: int
    smape: float | None = None
    mase: float | None = None
    owa: float | None = None
    period: int | None = None

    def to_text(self) -> str:
        """key=value lines, one metric per line; None serialized as a word."""
        rows = [
            f"mse={self.mse!r}",
            f"mae={self.mae!r}",
            f"horizon={self.horizon}",
            f"channels={self.channels}",
        ]
        if self.period is not None:
            rows.append(f"period={self.period}")
            for key in ("smape", "mase", "owa"):
                val = getattr(self, key)
                rows.append(f"{key}={'undefined' if val is None else repr(val)}")
        return "\n".join(rows) + "\n"


def aggregate_report(
    windows_x: np.ndarray,
    truths: np.ndarray,
    preds: np.ndarray,
    mode: str = "long",
    period: int = 1,
) -> "MetricsReport":
    """Metrics over a whole forecast set.

    windows_x is (W, L, C), truths/preds are (W, H, C). MSE/MAE average
    over every entry. In short mode, SMAPE and MASE are computed per
    (window, channel) series and averaged, skipping undefined MASE terms;
    OWA compares the aggregates against the seasonal-naive reference
    built from each window's tail.
    """
    truths = np.asarray(truths, dtype=np.float64)
    preds = np.asarray(preds, dtype=np.float64)
    if truths.shape != preds.shape:
        raise DataError(
            f"shape mismatch: truths {truths.shape} vs preds {preds.shape}"
        )
    w, h, c = truths.shape
    report = MetricsReport(
        mse=mse(truths, preds), mae=mae(truths, preds), horizon=h, channels=c
    )
    if mode == "long":
        return report
    if mode != "short":
        raise ConfigError(f"metric mode must be 'long' or 'short', got {mode!r}")
    windows_x = np.asarray(windows_x, dtype=np.float64)
    refs = np.stack([naive_seasonal(x, h, period) for x in windows_x])

    def mean_metrics(pred_set: np.ndarray) -> tuple[float, float | None]:
        smapes = []
        mases = []
        for i in range(w):
            for ch in range(c):
                smapes.append(smape(truths[i, :, ch], pred_set[i, :, ch]))
                if h > period:
                    m_val = mase(truths[i, :, ch], pred_set[i, :, ch], period)
                    if m_val is not None:
                        mases.append(m_val)
        mean_mase = float(np.mean(mases)) if mases else None
        return float(np.mean(smapes)), mean_mase

    report.period = period
    report.smape, report.mase = mean_metrics(preds)
    ref_smape, ref_mase = mean_metrics(refs)
    if (
        report.mase is not None
        and ref_mase is not None
        and ref_smape > 0
        and ref_mase > 0
    ):
        report.owa = owa((report.smape, report.mase), (ref_smape, ref_mase))
    return report
