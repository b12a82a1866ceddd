"""Adaptive composite Simpson quadrature with forced split points.

The recursion is run breadth-first: all intervals still refining at a given
depth are evaluated with one vectorised integrand call.  Each accepted
interval contributes its Richardson-extrapolated estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

__all__ = ["QuadratureSettings", "QuadratureError", "adaptive_simpson"]

# Initial panels per forced segment before adaptivity starts.
_INITIAL_PANELS = 16
_MIN_LEVEL = 2


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_depth: int = 40

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


class QuadratureError(ArithmeticError):
    """Raised when refinement hits ``max_depth`` without meeting tolerance."""

    def __init__(self, estimate: float, error_bound: float, message: str | None = None):
        self.estimate = estimate
        self.error_bound = error_bound
        super().__init__(
            message
            or f"adaptive Simpson did not converge: estimate={estimate!r}, error bound={error_bound!r}"
        )


def _simpson(fa, fm, fb, width):
    return width * (fa + 4.0 * fm + fb) / 6.0


def adaptive_simpson(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    settings: QuadratureSettings = QuadratureSettings(),
    splits: Iterable[float] = (),
) -> tuple[float, float]:
    """Integrate vectorised ``f`` over ``[a, b]``.

    Returns ``(value, error_estimate)``.  ``splits`` are points inside
    ``(a, b)`` where the integrand may have a kink.
    """
    if b <= a:
        return 0.0, 0.0
    cuts = sorted({float(s) for s in splits if a < s < b})
    edges = np.array([a] + cuts + [b], dtype=float)
    # Uniform refinement of each forced segment.
    fine = np.concatenate(
        [np.linspace(lo, hi, _INITIAL_PANELS + 1)[:-1] for lo, hi in zip(edges, edges[1:])] + [[b]]
    )
    lo, hi = fine[:-1], fine[1:]
    mid = 0.5 * (lo + hi)
    values = f(np.concatenate((lo, mid, [b])))
    n = lo.size
    f_lo, f_mid = values[:n], values[n : 2 * n]
    f_hi = np.concatenate((f_lo[1:], values[2 * n :]))
    whole = _simpson(f_lo, f_mid, f_hi, hi - lo)

    total_estimate = float(np.sum(whole))
    tol = max(settings.abs_tol, settings.rel_tol * abs(total_estimate))
    eps = np.full(n, tol / n)

    accepted = 0.0
    error = 0.0
    pieces: list[np.ndarray] = []
    min_level = min(_MIN_LEVEL, settings.max_depth - 1)
    for level in range(settings.max_depth):
        width = hi - lo
        q1 = lo + 0.25 * width
        q3 = lo + 0.75 * width
        fq = f(np.concatenate((q1, q3)))
        f_q1, f_q3 = fq[: lo.size], fq[lo.size :]
        left = _simpson(f_lo, f_q1, f_mid, 0.5 * width)
        right = _simpson(f_mid, f_q3, f_hi, 0.5 * width)
        delta = left + right - whole
        # Coarse panels can pass by accidental cancellation; refine them first.
        done = (np.abs(delta) <= 15.0 * eps) & (level >= min_level)
        if np.any(done):
            pieces.append((left + right + delta / 15.0)[done])
            error += float(np.sum(np.abs(delta[done]))) / 15.0
        keep = ~done
        if not np.any(keep):
            accepted = float(np.sum(np.concatenate(pieces))) if pieces else 0.0
            return accepted, error
        pending_err = float(np.sum(np.abs(delta[keep])))
        lo_k, mid_k, hi_k = lo[keep], mid[keep], hi[keep]
        lo = np.concatenate((lo_k, mid_k))
        hi = np.concatenate((mid_k, hi_k))
        mid = np.concatenate((q1[keep], q3[keep]))
        f_lo_new = np.concatenate((f_lo[keep], f_mid[keep]))
        f_hi_new = np.concatenate((f_mid[keep], f_hi[keep]))
        f_mid = np.concatenate((f_q1[keep], f_q3[keep]))
        f_lo, f_hi = f_lo_new, f_hi_new
        whole = np.concatenate((left[keep], right[keep]))
        eps = np.concatenate((eps[keep], eps[keep])) * 0.5

    pending = float(np.sum(whole))
    accepted = float(np.sum(np.concatenate(pieces))) if pieces else 0.0
    bound = error + pending_err
    raise QuadratureError(accepted + pending, bound)
