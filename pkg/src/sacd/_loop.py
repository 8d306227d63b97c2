"""Iteration driver shared by the Lasso and SVM solvers."""

from typing import NamedTuple

from .errors import ConfigurationError


class SolveResult(NamedTuple):
    x: object
    records: list
    stats: object
    state: object


def drive(H, s, draw, step, epoch, after):
    """Run ``H`` iterations one at a time (``s is None``) or in epochs of ``s``.

    ``step(sel)`` performs one iteration; ``epoch(sels, h0, after)`` performs
    ``len(sels)`` iterations and calls ``after(h)`` after each one.  The final
    epoch is truncated when ``s`` does not divide ``H``.
    """
    if H < 1:
        raise ConfigurationError(f"iteration count must be >= 1, got {H}")
    if s is not None and s < 1:
        raise ConfigurationError(f"unroll depth must be >= 1, got {s}")
    h = 0
    if s is None:
        while h < H:
            step(draw())
            h += 1
            after(h)
    else:
        while h < H:
            sels = [draw() for _ in range(min(s, H - h))]
            epoch(sels, h, after)
            h += len(sels)
