"""Scaling benchmark: chains of Church-numeral successor declarations."""

from __future__ import annotations

import gc
import time
from dataclasses import dataclass

import numpy as np

from .driver import check_source, load_prelude, with_deep_stack

DEFAULT_SIZES = (40, 80, 120, 160, 240, 320, 400, 480, 560, 640)


def church_chain(n: int) -> str:
    """``n`` declarations, each the successor of the previous numeral."""
    lines = ["val n0 = zero"]
    lines += [f"val n{k + 1} = succ n{k}" for k in range(n)]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Fit:
    coeffs: tuple[float, float, float]  # highest degree first
    r2: float
    slope: float  # log-log slope over the measured range

    def __call__(self, n):
        return np.polyval(self.coeffs, n)


def time_check(n: int, repeat: int = 3) -> float:
    """Best-of-``repeat`` wall time for checking a chain of length ``n``."""
    src = church_chain(n)
    best = float("inf")
    for _ in range(repeat):
        gc.collect()
        t0 = time.perf_counter()
        checked = with_deep_stack(check_source, src)
        dt = time.perf_counter() - t0
        if not checked.ok:
            raise RuntimeError(f"benchmark program of size {n} failed to check")
        best = min(best, dt)
    return best


def run(sizes=DEFAULT_SIZES, repeat: int = 3) -> list[tuple[int, float]]:
    load_prelude()
    time_check(sizes[0], 1)  # warm caches
    return [(n, time_check(n, repeat)) for n in sizes]


def quadratic_fit(points) -> Fit:
    n = np.array([p[0] for p in points], dtype=float)
    t = np.array([p[1] for p in points], dtype=float)
    coeffs = np.polyfit(n, t, 2)
    resid = t - np.polyval(coeffs, n)
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    slope = float(np.polyfit(np.log(n), np.log(t), 1)[0])
    return Fit(tuple(float(c) for c in coeffs), r2, slope)


def plot(points, fit: Fit, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n = np.array([p[0] for p in points], dtype=float)
    t = np.array([p[1] for p in points], dtype=float)
    xs = np.linspace(0, n.max() * 1.05, 200)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(n, t, "o", label="measured")
    ax.plot(xs, fit(xs), "-", label=f"quadratic fit, R² = {fit.r2:.4f}")
    ax.set_xlabel("declarations in chain")
    ax.set_ylabel("checking time (s)")
    ax.set_title("Church numeral chain")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
