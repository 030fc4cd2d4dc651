"""Online estimation of the value range of sequentially detected outliers.

Two update rules are available:

``extrema`` (default)
    Keep the running minimum ``m`` and maximum ``M`` of all observed values
    and report ``(m - I/n, M + I/n)``.  The initial guess is only reported
    while no outlier has been seen.

``literal``
    Fold the previous reported bound into the min/max:
    ``lb <- min(lb, z) - I/(n+1)``, ``ub <- max(ub, z) + I/(n+1)``.  The
    bounds widen by a harmonic series and never move inward; kept for
    side-by-side comparison.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Tuple

from .noise import ParameterError

MODES = ("extrema", "literal")


@dataclass
class OutlierRangeEstimator:
    lb0: float = 0.0
    ub0: float = 70.0
    I: float = 20.0
    mode: str = "extrema"
    n: int = 0
    lo: Optional[float] = None  # running extrema of observed values
    hi: Optional[float] = None
    _lb: float = field(default=math.nan, repr=False)  # literal-mode bounds
    _ub: float = field(default=math.nan, repr=False)

    def __post_init__(self):
        if not self.lb0 < self.ub0:
            raise ParameterError(f"initial bounds need lb0 < ub0, got ({self.lb0}, {self.ub0})")
        if not self.I > 0:
            raise ParameterError(f"uncertainty parameter I must be > 0, got {self.I}")
        if self.mode not in MODES:
            raise ParameterError(f"unknown ORE mode {self.mode!r}; expected one of {MODES}")
        if math.isnan(self._lb):
            self._lb, self._ub = self.lb0, self.ub0

    @property
    def margin(self) -> float:
        return self.I / self.n if self.n else math.inf

    def bounds(self) -> Tuple[float, float]:
        """Currently reported (lower, upper) outlier bounds."""
        if self.mode == "literal":
            return self._lb, self._ub
        if self.n == 0:
            return self.lb0, self.ub0
        return self.lo - self.I / self.n, self.hi + self.I / self.n

    current_bounds = bounds

    def observe(self, z: float) -> "OutlierRangeEstimator":
        if self.mode == "literal":
            return self.observe_literal(z)
        z = _check_finite(z)
        self.n += 1
        self.lo = z if self.lo is None else min(self.lo, z)
        self.hi = z if self.hi is None else max(self.hi, z)
        return self

    def observe_literal(self, z: float) -> "OutlierRangeEstimator":
        z = _check_finite(z)
        step = self.I / (self.n + 1)
        self._lb = min(self._lb, z) - step
        self._ub = max(self._ub, z) + step
        self.n += 1
        self.lo = z if self.lo is None else min(self.lo, z)
        self.hi = z if self.hi is None else max(self.hi, z)
        return self

    def copy(self) -> "OutlierRangeEstimator":
        return OutlierRangeEstimator(self.lb0, self.ub0, self.I, self.mode, self.n,
                                     self.lo, self.hi, self._lb, self._ub)

    # warm-start records ---------------------------------------------------

    def to_record(self) -> dict:
        lb, ub = self.bounds()
        return {"lb_hat": lb, "ub_hat": ub, "n": self.n}

    @classmethod
    def from_record(cls, record: Mapping, I: float = 20.0, mode: str = "extrema") -> "OutlierRangeEstimator":
        """Rebuild an estimator from a ``{lb_hat, ub_hat, n}`` record.

        In extrema mode the running extrema are recovered by removing the
        ``I/n`` margin, so ``I`` must match the run that wrote the record.
        """
        lb, ub, n = float(record["lb_hat"]), float(record["ub_hat"]), int(record["n"])
        if n == 0:
            return cls(lb, ub, I, mode)
        est = cls(lb, ub, I, mode, n=n)
        if mode == "literal":
            est._lb, est._ub = lb, ub
        else:
            est.lo, est.hi = lb + I / n, ub - I / n
        return est


def _check_finite(z) -> float:
    z = float(z)
    if not math.isfinite(z):
        raise ValueError(f"outlier value must be finite, got {z}")
    return z


def format_record(record: Mapping) -> str:
    return "".join(f"{key}={record[key]!r}\n" for key in ("lb_hat", "ub_hat", "n"))


def parse_record(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    missing = {"lb_hat", "ub_hat", "n"} - set(out)
    if missing:
        raise ValueError(f"warm-start record is missing {sorted(missing)}")
    return {"lb_hat": float(out["lb_hat"]), "ub_hat": float(out["ub_hat"]), "n": int(out["n"])}


def run_sequence(values, lb0: float = 20.0, ub0: float = 70.0, I: float = 20.0,
                 mode: str = "extrema") -> List[Tuple[int, float, float, float]]:
    """Feed ``values`` one at a time; return rows ``(n, z, lb_hat, ub_hat)``."""
    est = OutlierRangeEstimator(lb0, ub0, I, mode)
    rows = []
    for z in values:
        est.observe(z)
        lb, ub = est.bounds()
        rows.append((est.n, float(z), lb, ub))
    return rows


def write_trace(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "z", "lb_hat", "ub_hat"])
        for n, z, lb, ub in rows:
            writer.writerow([n, repr(z), repr(lb), repr(ub)])
