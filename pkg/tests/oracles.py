"""Independent brute-force oracles for the test suite.

None of these touch the library's density-matrix simulator, enumeration
machinery, or entropy code: states are amplitude 2-vectors built from the
four conjugate-coding states, and probabilities come from plain dict math.
Strategy policies are shared with the code under test (they are the object
being analyzed), but every probability here is recomputed from scratch.
"""

from __future__ import annotations

import math

import numpy as np

from otmlab.adversary import DeviceView, Record, Transcript
from otmlab.gf2 import BitVector

_SQ = 1.0 / math.sqrt(2.0)
# amplitude vectors indexed by (basis, bit)
_KETS = {
    (0, 0): np.array([1.0, 0.0], dtype=complex),
    (0, 1): np.array([0.0, 1.0], dtype=complex),
    (1, 0): np.array([_SQ, _SQ], dtype=complex),
    (1, 1): np.array([_SQ, -_SQ], dtype=complex),
}


def strategy_distribution(code, strategy, max_steps=None):
    """Exact joint law {(s, t, z): p} by walking amplitude vectors.

    Kraus branches keep pure states pure, so a per-qubit 2-vector with
    p = ||K psi||^2 and psi' = K psi / sqrt(p) reproduces any instrument.
    """
    ell, n, lgq = code.ell, code.n, code.lgq
    n_qubits = n * lgq
    if max_steps is None:
        max_steps = 4 * n_qubits
    view = DeviceView(n=n, lgq=lgq)
    dist: dict = {}
    cell_prior = 4.0 ** (-ell) * 2.0 ** (-n)
    for s_bits in range(1 << ell):
        cs = code.encode(BitVector(ell, s_bits))
        for t_bits in range(1 << ell):
            ct = code.encode(BitVector(ell, t_bits))
            for g_bits in range(1 << n):
                g = BitVector(n, g_bits)
                kets = []
                for q in range(n_qubits):
                    basis = g.bit(q // lgq)
                    bit = ct.bit(q) if basis else cs.bit(q)
                    kets.append(_KETS[(basis, bit)])

                def walk(states, records, prob):
                    transcript = Transcript(list(records))
                    action = None
                    if len(records) < max_steps:
                        action = strategy.next_action(view, transcript)
                    if action is None:
                        z = tuple(r.outcome for r in records)
                        key = (s_bits, t_bits, z)
                        dist[key] = dist.get(key, 0.0) + cell_prior * prob
                        return
                    psi = states[action.qubit_index]
                    for label, K in zip(
                        action.instrument.labels, action.instrument.kraus
                    ):
                        phi = K @ psi
                        p = float(np.vdot(phi, phi).real)
                        if p <= 1e-14:
                            continue
                        new_states = list(states)
                        new_states[action.qubit_index] = phi / math.sqrt(p)
                        rec = Record(
                            len(records) + 1, action.qubit_index, "oracle", label
                        )
                        walk(new_states, records + [rec], prob * p)

                walk(kets, [], 1.0)
    return dist


def conditional_min_entropy(dist: dict) -> float:
    """-lg max_z max_{s,t} P(s,t|z) from a raw {(s,t,z): p} table."""
    pz: dict = {}
    for (_, _, z), p in dist.items():
        pz[z] = pz.get(z, 0.0) + p
    best = max(p / pz[z] for (_, _, z), p in dist.items())
    return -math.log2(best)


def honest_readout_law(code, message: BitVector, choice_second: bool) -> dict:
    """Exact law of the raw readout string for one programmed message.

    Matched blocks reproduce the codeword block; mismatched blocks are
    uniform; the other message never reaches the read basis.  Returns
    {word_bits: p} over all (n*lgq)-bit words.
    """
    n, lgq = code.n, code.lgq
    cw = code.encode(message)
    q = 1 << lgq
    dist: dict = {}
    for w_bits in range(1 << (n * lgq)):
        p = 1.0
        for i in range(n):
            want = (cw.bits >> (i * lgq)) & (q - 1)
            got = (w_bits >> (i * lgq)) & (q - 1)
            if got == want:
                p *= 0.5 + 0.5 / q
            else:
                p *= 0.5 / q
        dist[w_bits] = p
    return dist


def qsc_channel_law(code, message: BitVector, pe: float) -> dict:
    """Exact law of transmit(encode(message)): per block keep with 1 - pe,
    else uniform over the q - 1 alternatives."""
    n, lgq = code.n, code.lgq
    cw = code.encode(message)
    q = 1 << lgq
    dist: dict = {}
    for w_bits in range(1 << (n * lgq)):
        p = 1.0
        for i in range(n):
            want = (cw.bits >> (i * lgq)) & (q - 1)
            got = (w_bits >> (i * lgq)) & (q - 1)
            p *= (1.0 - pe) if got == want else pe / (q - 1)
        dist[w_bits] = p
    return dist


def total_variation(a: dict, b: dict) -> float:
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)
