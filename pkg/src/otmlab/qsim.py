"""Exact simulation of qubit product states under single-qubit measurements.

States never entangle in the isolated-qubits setting, so a register is just
an ordered collection of 2x2 density matrices.  Measurements are Kraus
instruments {K_m}: outcome m occurs with probability Tr(K_m rho K_m+) and
updates the measured qubit to K_m rho K_m+ / p.  Arbitrary POVMs (weak
measurements included) are admitted via principal square roots.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-12
TRACE_TOL = 1e-12
COMPLETENESS_TOL = 1e-10
IMPOSSIBLE_BRANCH = 1e-14

STANDARD = "standard"
HADAMARD = "hadamard"

HADAMARD_GATE = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)


def _check_density_matrix(rho: np.ndarray) -> None:
    if rho.shape != (2, 2):
        raise ValueError("qubit state must be a 2x2 matrix")
    if np.abs(rho - rho.conj().T).max() > HERMITICITY_TOL:
        raise ValueError("state is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > TRACE_TOL or abs(np.trace(rho).imag) > TRACE_TOL:
        raise ValueError("state trace is not 1")
    if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
        raise ValueError("state is not positive semidefinite")


@dataclass(frozen=True)
class Qubit:
    """A single-qubit density matrix, validated on construction."""

    rho: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=complex))
        _check_density_matrix(self.rho)


class Instrument:
    """A generalized measurement as a list of (label, Kraus operator) pairs."""

    def __init__(self, outcomes):
        outcomes = [(label, np.asarray(K, dtype=complex)) for label, K in outcomes]
        if not outcomes:
            raise ValueError("instrument needs at least one outcome")
        for _, K in outcomes:
            if K.shape != (2, 2):
                raise ValueError("Kraus operators must be 2x2")
        total = sum(K.conj().T @ K for _, K in outcomes)
        if np.abs(total - np.eye(2)).max() > COMPLETENESS_TOL:
            raise ValueError("Kraus operators do not resolve the identity")
        self.labels = [label for label, _ in outcomes]
        self.kraus = np.stack([K for _, K in outcomes])
        # POVM elements K+K, used for outcome probabilities
        self.effects = np.einsum("mji,mjk->mik", self.kraus.conj(), self.kraus)

    @property
    def outcomes(self):
        return list(zip(self.labels, self.kraus))

    @classmethod
    def from_povm(cls, elements) -> "Instrument":
        """Admit a bare POVM {M_m} by taking principal square roots."""
        outs = []
        for label, M in elements:
            M = np.asarray(M, dtype=complex)
            w, V = np.linalg.eigh(M)
            if w.min() < -PSD_TOL:
                raise ValueError(f"POVM element {label!r} is not PSD")
            K = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T
            outs.append((label, K))
        return cls(outs)

    def content_id(self) -> str:
        """Stable identifier: hash of labels and Kraus entries at 1e-12."""
        h = hashlib.sha256()
        for label, K in zip(self.labels, self.kraus):
            h.update(repr(label).encode())
            h.update(np.round(K, 12).tobytes())
        return h.hexdigest()[:16]

    def __len__(self) -> int:
        return len(self.labels)


class ProductState:
    """An ordered register of qubits, stored as an (N, 2, 2) complex array."""

    __slots__ = ("rhos",)

    def __init__(self, rhos: np.ndarray):
        rhos = np.asarray(rhos, dtype=complex)
        if rhos.ndim != 3 or rhos.shape[1:] != (2, 2):
            raise ValueError("expected an (N, 2, 2) array")
        self.rhos = rhos

    @classmethod
    def from_qubits(cls, qubits) -> "ProductState":
        return cls(np.stack([q.rho for q in qubits]))

    @property
    def n_qubits(self) -> int:
        return self.rhos.shape[0]

    def qubit(self, i: int) -> Qubit:
        return Qubit(rho=self.rhos[i].copy())

    def copy(self) -> "ProductState":
        return ProductState(self.rhos.copy())

    def validate(self) -> None:
        """Re-check every qubit invariant (used by invariant sweeps)."""
        for i in range(self.n_qubits):
            _check_density_matrix(self.rhos[i])

    def __len__(self) -> int:
        return self.n_qubits


def prepare_conjugate(bit: int, basis: str) -> Qubit:
    """Pure state |b><b| in the standard basis or H|b><b|H in the Hadamard one."""
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    ket = np.zeros(2, dtype=complex)
    ket[bit] = 1.0
    if basis == HADAMARD:
        ket = HADAMARD_GATE @ ket
    elif basis != STANDARD:
        raise ValueError(f"unknown basis {basis!r}")
    return Qubit(rho=np.outer(ket, ket.conj()))


def basis_instrument(angle: float) -> Instrument:
    """Projective measurement onto cos(a)|0>+sin(a)|1> and its orthocomplement.

    angle 0 is the standard basis, pi/4 the Hadamard basis, pi/8 the
    Breidbart basis.
    """
    c, s = math.cos(angle), math.sin(angle)
    v0 = np.array([c, s], dtype=complex)
    v1 = np.array([-s, c], dtype=complex)
    return Instrument([(0, np.outer(v0, v0.conj())), (1, np.outer(v1, v1.conj()))])


def outcome_probabilities(
    state: ProductState, qubit_index: int, instrument: Instrument
) -> list[tuple[object, float]]:
    """Per-outcome probabilities Tr(K rho K+) for one qubit."""
    if not 0 <= qubit_index < state.n_qubits:
        raise IndexError(f"qubit index {qubit_index} out of range")
    rho = state.rhos[qubit_index]
    probs = np.einsum("mij,ji->m", instrument.effects, rho).real
    total = probs.sum()
    if abs(total - 1.0) > COMPLETENESS_TOL:
        raise ValueError(f"outcome probabilities sum to {total}, not 1")
    if probs.min() < -HERMITICITY_TOL:
        raise ValueError("negative outcome probability")
    return list(zip(instrument.labels, probs.tolist()))


def apply_outcome(
    state: ProductState,
    qubit_index: int,
    instrument: Instrument,
    outcome_index: int,
    in_place: bool = False,
) -> tuple[float, ProductState]:
    """Force a specific outcome branch; returns its probability and the state."""
    rho = state.rhos[qubit_index]
    K = instrument.kraus[outcome_index]
    post = K @ rho @ K.conj().T
    p = np.trace(post).real
    if p <= IMPOSSIBLE_BRANCH:
        raise ValueError(
            f"outcome {instrument.labels[outcome_index]!r} has probability {p:.3e}"
        )
    new = state if in_place else state.copy()
    new.rhos[qubit_index] = post / p
    return p, new


def measure(
    state: ProductState,
    qubit_index: int,
    instrument: Instrument,
    rng: np.random.Generator,
    in_place: bool = False,
) -> tuple[object, ProductState]:
    """Sample one measurement; only the measured qubit changes."""
    pairs = outcome_probabilities(state, qubit_index, instrument)
    r = rng.random()
    acc = 0.0
    for m, (_, p) in enumerate(pairs):
        acc += max(p, 0.0)
        if r < acc:
            chosen = m
            break
    else:
        # cumulative sum fell short of r by rounding; take the likeliest branch
        chosen = max(range(len(pairs)), key=lambda m: pairs[m][1])
    _, new = apply_outcome(state, qubit_index, instrument, chosen, in_place=in_place)
    return pairs[chosen][0], new


def measure_all(
    state: ProductState, instrument: Instrument, rng: np.random.Generator
) -> tuple[list, ProductState]:
    """Measure every qubit once with the same instrument, in index order.

    Vectorized over qubits; single-qubit measurements commute, so the joint
    outcome distribution equals sequential measure() calls.
    """
    rhos = state.rhos
    probs = np.einsum("mij,nji->nm", instrument.effects, rhos).real
    totals = probs.sum(axis=1)
    if np.abs(totals - 1.0).max() > COMPLETENESS_TOL:
        raise ValueError("outcome probabilities do not sum to 1")
    cum = np.cumsum(np.clip(probs, 0.0, None), axis=1)
    u = rng.random(state.n_qubits)
    idx = (u[:, None] >= cum).sum(axis=1)
    short = idx >= len(instrument)
    if short.any():
        idx[short] = probs[short].argmax(axis=1)
    chosen_p = np.take_along_axis(probs, idx[:, None], axis=1)[:, 0]
    if chosen_p.min() <= IMPOSSIBLE_BRANCH:
        raise ValueError("sampled a numerically impossible branch")
    K = instrument.kraus[idx]
    post = np.einsum("nij,njk,nlk->nil", K, rhos, K.conj())
    post /= chosen_p[:, None, None]
    labels = [instrument.labels[m] for m in idx.tolist()]
    return labels, ProductState(post)
