"""The q-ary symmetric channel: capacity, error sampling, OTM error rate.

A symbol is a BitVector of lgq bits (q = 2**lgq); lgq may be large, so
symbols are never assumed to fit a machine word.  The channel keeps each
symbol with probability 1 - pe and otherwise replaces it with a uniformly
random *different* symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gf2 import BitVector


@dataclass(frozen=True)
class ChannelParams:
    """Channel description: lgq bits per symbol, error probability pe."""

    lgq: int
    pe: float

    def __post_init__(self):
        if self.lgq < 1:
            raise ValueError("lgq must be at least 1")
        if not 0.0 <= self.pe < 1.0:
            raise ValueError("pe must lie in [0, 1)")

    @property
    def q(self) -> int:
        return 1 << self.lgq


def capacity(params: ChannelParams) -> float:
    """Channel capacity in q-ary symbols per channel use.

    Computes 1 + (1-pe) log_q(1-pe) + pe log_q(pe) - pe log_q(q-1), with the
    convention 0 log 0 = 0; exactly 1.0 for a noiseless channel.
    """
    pe = params.pe
    if pe == 0.0:
        return 1.0
    c = float(params.lgq)
    q_minus_1 = (1 << params.lgq) - 1
    out = 1.0
    if pe < 1.0:
        out += (1.0 - pe) * math.log2(1.0 - pe) / c
    out += pe * math.log2(pe) / c
    out -= pe * math.log2(q_minus_1) / c
    return out


def otm_error_probability(lgq: int) -> float:
    """Honest-readout symbol error rate 1/2 - 1/(2q) for q = 2**lgq."""
    if lgq < 1:
        raise ValueError("lgq must be at least 1")
    return 0.5 - 0.5 / float(1 << lgq)


def corrupt(symbol: BitVector, rng: np.random.Generator) -> BitVector:
    """The channel's error branch: XOR with a uniform nonzero offset."""
    lgq = symbol.n
    if lgq <= 62:
        r = int(rng.integers(1, 1 << lgq))
    else:
        nbytes = (lgq + 7) // 8
        mask = (1 << lgq) - 1
        r = 0
        while r == 0:
            r = int.from_bytes(rng.bytes(nbytes), "little") & mask
    return BitVector(lgq, symbol.bits ^ r)


def transmit(
    params: ChannelParams, blocks, rng: np.random.Generator
) -> list[BitVector]:
    """Send symbols through the channel; block count and width are preserved."""
    out = []
    for i, blk in enumerate(blocks):
        if blk.n != params.lgq:
            raise ValueError(
                f"block {i} has width {blk.n}, expected lgq={params.lgq}"
            )
        if params.pe > 0.0 and rng.random() < params.pe:
            out.append(corrupt(blk, rng))
        else:
            out.append(blk)
    return out
