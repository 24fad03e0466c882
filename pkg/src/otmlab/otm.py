"""The one-time memory device: conjugate-coding programming and readout.

A device holds n blocks of lgq qubits.  A fair coin gamma_i picks, per
block, whether the block carries the first codeword in the standard basis
or the second codeword in the Hadamard basis.  Honest readout measures
every qubit in one basis and decodes; reading is destructive.
"""

from __future__ import annotations

import enum
import json
import math

import numpy as np

from . import gf2, qsim
from .code import DecodeResult
from .gf2 import BitVector
from .qsim import ProductState


class ReadoutChoice(enum.Enum):
    FIRST = "first"
    SECOND = "second"


# rho lookup indexed by [basis, bit]
_PREP = np.empty((2, 2, 2, 2), dtype=complex)
_PREP[0, 0] = [[1, 0], [0, 0]]
_PREP[0, 1] = [[0, 0], [0, 1]]
_PREP[1, 0] = [[0.5, 0.5], [0.5, 0.5]]
_PREP[1, 1] = [[0.5, -0.5], [-0.5, 0.5]]


def select(x: BitVector, y: BitVector, gamma: BitVector) -> BitVector:
    """Blockwise multiplexer: block i of the output comes from x when
    gamma_i = 0 and from y when gamma_i = 1."""
    if x.n != y.n:
        raise ValueError(f"length mismatch: {x.n} vs {y.n}")
    if gamma.n == 0 or x.n % gamma.n != 0:
        raise ValueError("input length must be a multiple of the coin count")
    lgq = x.n // gamma.n
    block_ones = (1 << lgq) - 1
    mask = 0
    g = gamma.bits
    while g:
        i = (g & -g).bit_length() - 1
        mask |= block_ones << (i * lgq)
        g &= g - 1
    return BitVector(x.n, (x.bits & ~mask) | (y.bits & mask))


class OtmDevice:
    """A programmed one-time memory.

    Reads mutate the quantum state; a device is single-owner and consumed.
    The programmed messages and codewords are retained sealed for test
    oracles only and are not part of any adversary-facing surface.
    """

    def __init__(self, code, gamma: BitVector, state: ProductState, s, t, cs, ct):
        self.code = code
        self.gamma = gamma
        self.state = state
        self._s_ref = s
        self._t_ref = t
        self._cs = cs
        self._ct = ct

    @property
    def n(self) -> int:
        return self.code.n

    @property
    def lgq(self) -> int:
        return self.code.lgq

    @property
    def n_qubits(self) -> int:
        return self.code.n * self.code.lgq


def _prepared_state(bits: BitVector, bases: np.ndarray) -> ProductState:
    bit_arr = bits.to_u8()
    return ProductState(_PREP[bases.astype(np.intp), bit_arr.astype(np.intp)].copy())


def program(
    code,
    s: BitVector,
    t: BitVector,
    rng: np.random.Generator,
    gamma: BitVector | None = None,
) -> OtmDevice:
    """Toss the basis coins and prepare the register.

    gamma may be forced for tests; it is sampled fair and independent
    otherwise.
    """
    if s.n != code.ell or t.n != code.ell:
        raise ValueError(f"messages must have {code.ell} bits")
    if gamma is None:
        gamma = gf2.random_vector(code.n, rng)
    elif gamma.n != code.n:
        raise ValueError(f"gamma must have {code.n} coins")
    cs = code.encode(s)
    ct = code.encode(t)
    chosen = select(cs, ct, gamma)
    bases = np.repeat(gamma.to_u8(), code.lgq)
    state = _prepared_state(chosen, bases)
    return OtmDevice(code, gamma, state, s, t, cs, ct)


def _read_basis(choice: ReadoutChoice) -> tuple[int, float]:
    if choice == ReadoutChoice.FIRST:
        return 0, 0.0
    if choice == ReadoutChoice.SECOND:
        return 1, math.pi / 4.0
    raise ValueError(f"unknown readout choice {choice!r}")


def honest_read(
    device: OtmDevice, choice: ReadoutChoice, rng: np.random.Generator
) -> DecodeResult:
    """Measure every qubit in the chosen basis (index order) and decode.

    Decoder failure propagates as a failed DecodeResult; the device state
    is collapsed either way.
    """
    _, angle = _read_basis(choice)
    instrument = qsim.basis_instrument(angle)
    labels, new_state = qsim.measure_all(device.state, instrument, rng)
    device.state = new_state
    z = BitVector.from_u8(np.asarray(labels, dtype=np.uint8))
    return device.code.decode(z)


def fast_honest_read(
    device: OtmDevice, choice: ReadoutChoice, rng: np.random.Generator
) -> DecodeResult:
    """Classical shortcut with the same readout distribution as honest_read.

    Matched blocks yield the exact codeword block; mismatched blocks yield
    independent uniform bits.  The state collapses to the read basis so the
    one-time semantics are preserved on this path too.
    """
    basis, _ = _read_basis(choice)
    u = gf2.random_vector(device.n_qubits, rng)
    if basis == 0:
        z = select(device._cs, u, device.gamma)
    else:
        z = select(u, device._ct, device.gamma)
    bases = np.full(device.n_qubits, basis, dtype=np.uint8)
    device.state = _prepared_state(z, bases)
    return device.code.decode(z)


def snapshot(device: OtmDevice) -> str:
    """Debug-only JSON snapshot: gamma plus every density matrix.

    Each qubit is 8 reals (row-major, re/im interleaved) at 17 significant
    digits, which round-trips doubles exactly.
    """
    rows = []
    for i in range(device.n_qubits):
        rho = device.state.rhos[i]
        vals = []
        for r in range(2):
            for c in range(2):
                vals.append(f"{rho[r, c].real:.17g}")
                vals.append(f"{rho[r, c].imag:.17g}")
        rows.append("[" + ", ".join(vals) + "]")
    qubits = "[\n    " + ",\n    ".join(rows) + "\n  ]"
    return (
        "{\n"
        f'  "gamma": {json.dumps(device.gamma.to01())},\n'
        f'  "qubits": {qubits}\n'
        "}"
    )


def load_snapshot(text: str) -> tuple[BitVector, ProductState]:
    """Parse a snapshot back into (gamma, state)."""
    obj = json.loads(text)
    gamma = BitVector.from01(obj["gamma"])
    rhos = []
    for vals in obj["qubits"]:
        flat = [complex(vals[2 * i], vals[2 * i + 1]) for i in range(4)]
        rhos.append(np.array(flat, dtype=complex).reshape(2, 2))
    return gamma, ProductState(np.stack(rhos))
