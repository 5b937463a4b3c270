"""Cyclical learning-rate schedule.

The rate climbs linearly from lr_min to lr_max over the first half of each
period and descends back to lr_min over the second half, repeating forever.
The period is expressed in optimizer steps.
"""

from __future__ import annotations

from ..errors import ConfigurationError


def triangular_lr(step: int, lr_min: float, lr_max: float, period: int) -> float:
    if period < 1:
        raise ConfigurationError(f"period must be >= 1, got {period}")
    if not lr_min < lr_max:
        raise ConfigurationError(f"need lr_min < lr_max, got {lr_min} >= {lr_max}")
    if step < 0:
        raise ConfigurationError(f"step must be >= 0, got {step}")
    pos = step % period
    half = period / 2.0
    frac = pos / half if pos <= half else (period - pos) / half
    return lr_min + (lr_max - lr_min) * frac
