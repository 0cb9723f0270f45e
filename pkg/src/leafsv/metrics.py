"""Attribution quality metrics: relative absolute error and sign-aware
top/bottom ranking agreement."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError

__all__ = ["r_ae", "tpr", "MetricReport"]


def r_ae(phi_true, phi_est, tol: float = 1e-12):
    """Mean of |phi_est - phi_true| / |phi_true| over players with a
    non-negligible true attribution.

    Returns ``(value, n_excluded)``; players with |phi_true| < tol are left
    out of the average rather than dividing by ~0.  If every player is
    excluded the value is ``nan``.
    """
    t = np.asarray(phi_true, dtype=float)
    e = np.asarray(phi_est, dtype=float)
    if t.shape != e.shape:
        raise ConfigError("phi_true and phi_est have different shapes")
    keep = np.abs(t) >= tol
    n_excluded = int(np.sum(~keep))
    if not keep.any():
        return float("nan"), n_excluded
    return float(np.mean(np.abs(e[keep] - t[keep]) / np.abs(t[keep]))), n_excluded


def _top_bottom(phi, k: int, by_abs: bool):
    v = np.asarray(phi, dtype=float)
    order = np.argsort(-np.abs(v) if by_abs else -v, kind="stable")
    return set(order[:k].tolist()), set(order[-k:].tolist())


def tpr(phi_true, phi_est, k: int, by_abs: bool = False) -> float:
    """Fraction of the true top-k and bottom-k players recovered.

    With ``by_abs`` false the ranking is by signed value, so the bottom-k
    are the most negative attributions.  Score is
    (|top overlap| + |bottom overlap|) / (2k).
    """
    t = np.asarray(phi_true, dtype=float)
    e = np.asarray(phi_est, dtype=float)
    if t.shape != e.shape:
        raise ConfigError("phi_true and phi_est have different shapes")
    if not (1 <= k <= t.shape[0]):
        raise ConfigError(f"k must be in [1, {t.shape[0]}], got {k}")
    top_t, bot_t = _top_bottom(t, k, by_abs)
    top_e, bot_e = _top_bottom(e, k, by_abs)
    return (len(top_t & top_e) + len(bot_t & bot_e)) / (2 * k)


@dataclass
class MetricReport:
    """Per-instance metric rows plus aggregates, serializable to JSON/CSV."""

    estimator: str
    rows: list[dict] = field(default_factory=list)

    def add(self, instance: int, **metrics) -> None:
        self.rows.append({"instance": instance, **metrics})

    def aggregate(self, key: str, how: str = "median") -> float:
        vals = np.array([r[key] for r in self.rows if np.isfinite(r[key])])
        if vals.size == 0:
            return float("nan")
        return float(np.median(vals) if how == "median" else np.mean(vals))

    def to_json(self) -> str:
        keys = sorted({k for r in self.rows for k in r} - {"instance"})
        summary = {k: {"median": self.aggregate(k, "median"),
                       "mean": self.aggregate(k, "mean")} for k in keys}
        return json.dumps(
            {"estimator": self.estimator, "rows": self.rows, "summary": summary},
            sort_keys=True,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        keys = ["instance"] + sorted({k for r in self.rows for k in r} - {"instance"})
        writer = csv.DictWriter(buf, fieldnames=keys)
        writer.writeheader()
        for r in self.rows:
            writer.writerow(r)
        return buf.getvalue()
