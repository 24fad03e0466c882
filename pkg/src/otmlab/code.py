"""Capacity-approaching concatenated code for the q-ary symmetric channel.

The outer code applies a uniformly random full-row-rank matrix G0; the inner
code expands each lg(q0)-bit block to lg(q) bits with a fixed full-rank G1
and serves purely as error *detection*: blocks whose inner decode fails are
treated as erasures and the outer message is recovered by solving the GF(2)
linear system on the surviving blocks.

A GenericLinearCode escape hatch admits tiny hand-built codes so exhaustive
analyses can drive the OTM at brute-force scale.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import gf2
from .gf2 import BitMatrix, BitVector


@dataclass(frozen=True)
class CodeParams:
    """Derived parameter tuple; c = lg q and c0 = lg q0."""

    k: int
    pe: float
    eps: float
    delta: float
    theta: float
    n: int
    c: int
    c0: int


def derive_params(k: int, pe: float, eps: float, delta: float, theta: float) -> CodeParams:
    """Derive (n, c, c0) from the design constants.

    n = floor(k / (1-pe-theta)); the shared ceil term is
    ceil(eps*n + lg(n*pe)); c = floor(2/delta) * term and
    c0 = ceil(2/delta - 2) * term.  Integer parts of exact ratios are taken
    in exact rational arithmetic so boundary cases do not depend on float
    rounding of the division.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if not 0.0 < pe < 1.0:
        raise ValueError("pe must lie in (0, 1)")
    if eps <= 0.0 or theta <= 0.0:
        raise ValueError("eps and theta must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    denom = 1 - Fraction(pe) - Fraction(theta)
    if denom <= 0:
        raise ValueError("need 1 - pe - theta > 0")
    n = int(Fraction(k) / denom)
    if Fraction(n) * Fraction(pe) < 1:
        raise ValueError(f"n*pe = {n * pe:.4g} < 1; lg(n*pe) would be negative")
    term = math.ceil(eps * n + math.log2(n * pe))
    c = int(Fraction(2) / Fraction(delta)) * term
    c0 = math.ceil(Fraction(2) / Fraction(delta) - 2) * term
    if c0 < 1:
        raise ValueError("derived c0 < 1; shrink delta")
    return CodeParams(k=k, pe=pe, eps=eps, delta=delta, theta=theta, n=n, c=c, c0=c0)


def rate(params: CodeParams) -> float:
    """Code rate k*c0 / (n*c) in message bits per codeword bit."""
    return params.k * params.c0 / (params.n * params.c)


@dataclass(frozen=True)
class DecodeResult:
    """Decoder output; message is None when the decoder aborts.

    ambiguous marks an underdetermined system solved canonically (free
    variables zero); erased_blocks counts inner detection failures.
    """

    message: BitVector | None
    ambiguous: bool = False
    erased_blocks: int = 0

    @property
    def ok(self) -> bool:
        return self.message is not None


class _InnerDecoder:
    """Membership test and inversion for an arbitrary full-rank inner G1.

    Row-reducing [G1 | I] gives R = U G1 with pivot columns P.  A word z is
    a codeword iff w R == z where w_j = z_{P_j}; the message is then w U.
    """

    def __init__(self, G1: BitMatrix):
        aug = G1.hstack(BitMatrix.identity(G1.rows))
        reduced, pivots = gf2._int_rref(aug._data, G1.cols)
        if len(pivots) != G1.rows:
            raise ValueError("inner generator must have full row rank")
        self.c0 = G1.rows
        self.c = G1.cols
        mask = (1 << G1.cols) - 1
        self.R = BitMatrix(G1.rows, G1.cols, [r & mask for r in reduced])
        self.U = BitMatrix(
            G1.rows, G1.rows, [r >> G1.cols for r in reduced]
        )
        self.pivots = pivots

    def invert(self, z: BitVector) -> BitVector | None:
        """Return v with v G1 == z, or None when z is not a codeword."""
        w = 0
        for j, col in enumerate(self.pivots):
            if (z.bits >> col) & 1:
                w |= 1 << j
        wv = BitVector(self.c0, w)
        if gf2.vec_mat_mul(wv, self.R) != z:
            return None
        return gf2.vec_mat_mul(wv, self.U)


class ConcatenatedCode:
    """The outer-random / inner-detection code built by build_code."""

    def __init__(self, params: CodeParams, G0: BitMatrix, G1: BitMatrix, seed=None):
        if G0.rows != params.k * params.c0 or G0.cols != params.n * params.c0:
            raise ValueError("G0 has wrong shape for the parameters")
        if G1.rows != params.c0 or G1.cols != params.c:
            raise ValueError("G1 has wrong shape for the parameters")
        self.params = params
        self.G0 = G0
        self.G1 = G1
        self.seed = seed
        self.ell = params.k * params.c0
        self.n = params.n
        self.lgq = params.c
        self._inner = _InnerDecoder(G1)
        # rows of G0^T are the per-coordinate equations; pre-packed into
        # words with a spare RHS column so decode can slice them directly
        G0T = G0.transpose()
        self._eqs = gf2.pack_rows(G0T._data, self.ell + 1)
        self._generator = None

    def encode(self, s: BitVector) -> BitVector:
        if s.n != self.ell:
            raise ValueError(f"message has {s.n} bits, expected {self.ell}")
        v = gf2.vec_mat_mul(s, self.G0)
        c0, c = self.params.c0, self.params.c
        acc = 0
        for i in range(self.n):
            inner = gf2.vec_mat_mul(v.block(i, c0), self.G1)
            acc |= inner.bits << (i * c)
        return BitVector(self.n * c, acc)

    def decode(self, z: BitVector) -> DecodeResult:
        """Inner-detect each block, then erasure-solve the outer system."""
        if z.n != self.n * self.lgq:
            raise ValueError(f"word has {z.n} bits, expected {self.n * self.lgq}")
        c0 = self.params.c0
        surviving_rows: list[int] = []
        rhs_bits = 0
        rhs_len = 0
        erased = 0
        for i in range(self.n):
            v = self._inner.invert(z.block(i, self.lgq))
            if v is None:
                erased += 1
                continue
            surviving_rows.extend(range(i * c0, (i + 1) * c0))
            rhs_bits |= v.bits << rhs_len
            rhs_len += c0
        M = self._eqs[surviving_rows]
        if rhs_len:
            rhs = BitVector(rhs_len, rhs_bits).to_u8().astype(np.uint64)
            wi, sh = self.ell >> 6, np.uint64(self.ell & 63)
            M[:, wi] |= rhs << sh
        result = gf2._solve_words(M, self.ell)
        if result.tag == "inconsistent":
            return DecodeResult(message=None, erased_blocks=erased)
        return DecodeResult(
            message=result.solution,
            ambiguous=result.tag == "multiple",
            erased_blocks=erased,
        )

    def generator_matrix(self) -> BitMatrix:
        """Full generator of the composed map, one row per message bit."""
        if self._generator is None:
            rows = [
                self.encode(BitVector(self.ell, 1 << i)).bits
                for i in range(self.ell)
            ]
            self._generator = BitMatrix(self.ell, self.n * self.lgq, rows)
        return self._generator


def build_code(
    params: CodeParams,
    rng: np.random.Generator,
    seed=None,
    max_attempts: int = 64,
) -> ConcatenatedCode:
    """Sample G0 until it has full row rank; G1 is systematic [I | 0].

    Detection statistics depend only on injectivity of the inner map, so the
    systematic choice is as good as any full-rank G1 and makes membership a
    trailing-bits-zero test.  seed is recorded in the bundle manifest only.
    """
    ell = params.k * params.c0
    G1 = BitMatrix(
        params.c0, params.c, [1 << i for i in range(params.c0)]
    )
    for _ in range(max_attempts):
        G0 = gf2.random_matrix(ell, params.n * params.c0, rng)
        if gf2.rank(G0) == ell:
            return ConcatenatedCode(params, G0, G1, seed=seed)
    raise RuntimeError(f"no full-rank G0 found in {max_attempts} attempts")


class GenericLinearCode:
    """Any full-row-rank GF(2) code with a pluggable decoder.

    The decoder maps an (n*lgq)-bit word to a DecodeResult; the default
    exact-match decoder recognizes noiseless codewords only, which is all
    the brute-force analyses need.
    """

    def __init__(self, G: BitMatrix, n: int, lgq: int, decoder=None):
        if G.cols != n * lgq:
            raise ValueError("generator width must equal n*lgq")
        if gf2.rank(G) != G.rows:
            raise ValueError("generator must have full row rank")
        self.G = G
        self.ell = G.rows
        self.n = n
        self.lgq = lgq
        self._decoder = decoder if decoder is not None else self._exact_match

    def encode(self, s: BitVector) -> BitVector:
        if s.n != self.ell:
            raise ValueError(f"message has {s.n} bits, expected {self.ell}")
        return gf2.vec_mat_mul(s, self.G)

    def decode(self, z: BitVector) -> DecodeResult:
        if z.n != self.n * self.lgq:
            raise ValueError(f"word has {z.n} bits, expected {self.n * self.lgq}")
        return self._decoder(z)

    def generator_matrix(self) -> BitMatrix:
        return self.G

    def _exact_match(self, z: BitVector) -> DecodeResult:
        if self.ell > 20:
            raise ValueError("exact-match decoding is exponential; message too long")
        for m in range(1 << self.ell):
            s = BitVector(self.ell, m)
            if gf2.vec_mat_mul(s, self.G) == z:
                return DecodeResult(message=s)
        return DecodeResult(message=None)


def save_bundle(code: ConcatenatedCode, directory) -> None:
    """Write manifest.json plus G0/G1 in the matrix file format."""
    os.makedirs(directory, exist_ok=True)
    p = code.params
    manifest = {
        "schema": 1,
        "k": p.k,
        "pe": p.pe,
        "eps": p.eps,
        "delta": p.delta,
        "theta": p.theta,
        "n": p.n,
        "c": p.c,
        "c0": p.c0,
        "seed": code.seed,
    }
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    gf2.save_matrix(code.G0, os.path.join(directory, "G0.gf2"))
    gf2.save_matrix(code.G1, os.path.join(directory, "G1.gf2"))


def load_bundle(directory) -> ConcatenatedCode:
    with open(os.path.join(directory, "manifest.json")) as fh:
        m = json.load(fh)
    params = CodeParams(
        k=m["k"], pe=m["pe"], eps=m["eps"], delta=m["delta"], theta=m["theta"],
        n=m["n"], c=m["c"], c0=m["c0"],
    )
    G0 = gf2.load_matrix(os.path.join(directory, "G0.gf2"))
    G1 = gf2.load_matrix(os.path.join(directory, "G1.gf2"))
    code = ConcatenatedCode(params, G0, G1, seed=m.get("seed"))
    return code
