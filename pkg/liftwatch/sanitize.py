"""Apply a release channel to a stream of X symbols."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import UnknownSymbol


def sanitize_stream(
    channel: np.ndarray,
    labels: Sequence[str],
    symbols: Sequence[str],
    seed: int,
) -> list[str]:
    """Draw one Y label per input symbol from p(y | x).

    Sampling is inverse-CDF on the symbol's channel row with one uniform draw
    per symbol from a PCG64 generator seeded by ``seed``. One-hot rows always
    return their own symbol.

    Args:
        channel: Row-stochastic |X| x |X| matrix
        labels: Alphabet shared by X and Y, in channel order
        symbols: Input stream of X labels
        seed: Sampling seed

    Raises:
        UnknownSymbol: A stream symbol is not in ``labels``
    """
    index = {label: i for i, label in enumerate(labels)}
    rows = np.empty(len(symbols), dtype=int)
    for position, symbol in enumerate(symbols):
        if symbol not in index:
            raise UnknownSymbol(f"symbol {symbol!r} at position {position} is not in the alphabet")
        rows[position] = index[symbol]

    cumulative = np.cumsum(channel, axis=1)
    cumulative /= cumulative[:, -1:]
    draws = np.random.Generator(np.random.PCG64(seed)).random(len(symbols))
    # Number of cumulative masses <= u is the bin holding u; empty bins never win.
    outputs = (cumulative[rows] <= draws[:, None]).sum(axis=1)
    outputs = np.minimum(outputs, len(labels) - 1)
    return [labels[y] for y in outputs]
