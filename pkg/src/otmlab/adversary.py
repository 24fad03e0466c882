"""Adaptive single-qubit adversaries and the attack harness.

A strategy is a policy over single-qubit instruments: given the transcript
so far (and nothing else -- the harness passes only public geometry), it
either measures some qubit or stops.  Builtin strategies are concrete
attack instances against which min-entropy is measured.  Separable POVM
elements, given as per-qubit factors, feed the fictional-adversary checks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import qsim
from .gf2 import BitVector
from .qsim import Instrument


@dataclass(frozen=True)
class Record:
    """One transcript entry; qubit_index is None for synthetic records."""

    step: int
    qubit_index: int | None
    instrument_id: str
    outcome: object


@dataclass
class Transcript:
    records: list[Record] = field(default_factory=list)
    truncated: bool = False

    def outcomes(self) -> list:
        return [r.outcome for r in self.records]

    def to_jsonl(self) -> str:
        lines = []
        for r in self.records:
            lines.append(
                json.dumps(
                    {
                        "step": r.step,
                        "qubit": r.qubit_index,
                        "instrument": r.instrument_id,
                        "outcome": r.outcome,
                    },
                    sort_keys=True,
                )
            )
        return "\n".join(lines)

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class Action:
    qubit_index: int
    instrument: Instrument


@dataclass(frozen=True)
class DeviceView:
    """Public device geometry; the only device information strategies see."""

    n: int
    lgq: int

    @property
    def n_qubits(self) -> int:
        return self.n * self.lgq


class Strategy:
    """Policy interface; implementations must be pure functions of the
    transcript and their own construction-time parameters, so exact
    enumeration can replay them branch by branch."""

    def next_action(self, view: DeviceView, transcript: Transcript) -> Action | None:
        raise NotImplementedError

    def final_note(self, view: DeviceView, transcript: Transcript):
        """Optional compact guess appended as a synthetic record."""
        return None


def run(
    strategy: Strategy,
    device,
    max_steps: int | None = None,
    rng: np.random.Generator | None = None,
) -> Transcript:
    """Alternate policy queries and measurements until Stop or max_steps.

    The transcript is the adversary's entire classical output.
    """
    if max_steps is None:
        max_steps = 4 * device.n * device.lgq
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    if rng is None:
        rng = np.random.default_rng(0)
    view = DeviceView(n=device.n, lgq=device.lgq)
    transcript = Transcript()
    stopped = False
    for step in range(1, max_steps + 1):
        action = strategy.next_action(view, transcript)
        if action is None:
            stopped = True
            break
        if not isinstance(action.instrument, Instrument):
            raise TypeError("strategy returned an invalid instrument")
        if not 0 <= action.qubit_index < view.n_qubits:
            raise ValueError(f"strategy chose qubit {action.qubit_index} out of range")
        label, _ = qsim.measure(
            device.state, action.qubit_index, action.instrument, rng, in_place=True
        )
        transcript.records.append(
            Record(step, action.qubit_index, action.instrument.content_id(), label)
        )
    if not stopped and strategy.next_action(view, transcript) is not None:
        transcript.truncated = True
    note = strategy.final_note(view, transcript)
    if note is not None:
        ident, outcome = note
        transcript.records.append(
            Record(len(transcript.records) + 1, None, ident, outcome)
        )
    return transcript


# ---------------------------------------------------------------------------
# builtin strategies
# ---------------------------------------------------------------------------

_BASIS_ANGLES = {qsim.STANDARD: 0.0, qsim.HADAMARD: math.pi / 4.0}


def _as_angle(basis) -> float:
    if isinstance(basis, str):
        try:
            return _BASIS_ANGLES[basis]
        except KeyError:
            raise ValueError(f"unknown basis {basis!r}") from None
    return float(basis)


class _SweepStrategy(Strategy):
    """Measure qubits 0..N-1 once each; subclasses pick the instrument."""

    def next_action(self, view, transcript):
        step = len(transcript.records)
        if step >= view.n_qubits:
            return None
        return Action(step, self._instrument_for(view, step))

    def _instrument_for(self, view, qubit_index) -> Instrument:
        raise NotImplementedError


class MeasureAll(_SweepStrategy):
    """Every qubit in one fixed basis; standard/hadamard are the honest reads."""

    def __init__(self, basis):
        self.angle = _as_angle(basis)
        self._inst = qsim.basis_instrument(self.angle)

    def _instrument_for(self, view, qubit_index):
        return self._inst


class Breidbart(_SweepStrategy):
    """Every qubit at the intermediate angle pi/8, the single-qubit optimum
    for guessing a conjugate-coded bit across both preparation bases."""

    def __init__(self):
        self._inst = qsim.basis_instrument(math.pi / 8.0)

    def _instrument_for(self, view, qubit_index):
        return self._inst


class PerBlockRandomBasis(_SweepStrategy):
    """An independent fair basis coin per block, drawn from a private seed."""

    def __init__(self, seed: int):
        self.seed = seed
        self._std = qsim.basis_instrument(0.0)
        self._had = qsim.basis_instrument(math.pi / 4.0)

    def coins(self, n: int) -> np.ndarray:
        return np.random.default_rng(self.seed).integers(0, 2, size=n, dtype=np.uint8)

    def _instrument_for(self, view, qubit_index):
        block = qubit_index // view.lgq
        return self._had if self.coins(view.n)[block] else self._std


class GreedyBasisGuess(Strategy):
    """Probe a few qubits per block at pi/8, guess each block's basis by
    outcome likelihood, then measure the rest in the guessed basis.

    Under a uniform message prior both preparation bases average to I/2, so
    single-qubit probes leave the likelihoods tied; ties fall back to a
    seeded coin per block.
    """

    def __init__(self, probe_count: int, seed: int = 0):
        if probe_count < 1:
            raise ValueError("probe_count must be at least 1")
        self.probe_count = probe_count
        self.seed = seed
        self._probe = qsim.basis_instrument(math.pi / 8.0)
        self._bases = (
            qsim.basis_instrument(0.0),
            qsim.basis_instrument(math.pi / 4.0),
        )

    def _probes_per_block(self, view) -> int:
        return min(self.probe_count, view.lgq)

    def _probe_plan(self, view) -> list[int]:
        ppb = self._probes_per_block(view)
        return [i * view.lgq + j for i in range(view.n) for j in range(ppb)]

    def _guesses(self, view, transcript) -> list[int]:
        ppb = self._probes_per_block(view)
        guesses = []
        for i in range(view.n):
            log_like = [0.0, 0.0]
            for j in range(ppb):
                outcome = transcript.records[i * ppb + j].outcome
                effect = self._probe.effects[outcome]
                for basis in (0, 1):
                    marginal = 0.5 * sum(
                        np.trace(
                            effect @ qsim.prepare_conjugate(
                                bit, qsim.HADAMARD if basis else qsim.STANDARD
                            ).rho
                        ).real
                        for bit in (0, 1)
                    )
                    log_like[basis] += math.log(max(marginal, 1e-300))
            if abs(log_like[0] - log_like[1]) > 1e-9:
                guesses.append(int(log_like[1] > log_like[0]))
            else:
                coin = np.random.default_rng(
                    np.random.SeedSequence(self.seed, spawn_key=(i,))
                )
                guesses.append(int(coin.integers(0, 2)))
        return guesses

    def next_action(self, view, transcript):
        plan = self._probe_plan(view)
        step = len(transcript.records)
        if step < len(plan):
            return Action(plan[step], self._probe)
        remaining = [q for q in range(view.n_qubits) if q not in set(plan)]
        pos = step - len(plan)
        if pos >= len(remaining):
            return None
        qubit = remaining[pos]
        guess = self._guesses(view, transcript)[qubit // view.lgq]
        return Action(qubit, self._bases[guess])

    def final_note(self, view, transcript):
        guesses = self._guesses(view, transcript)
        return "gamma-guess", "".join(str(g) for g in guesses)


def measure_all(basis) -> Strategy:
    return MeasureAll(basis)


def per_block_random_basis(seed: int) -> Strategy:
    return PerBlockRandomBasis(seed)


def breidbart() -> Strategy:
    return Breidbart()


def greedy_basis_guess(probe_count: int, seed: int = 0) -> Strategy:
    return GreedyBasisGuess(probe_count, seed)


class StopImmediately(Strategy):
    def next_action(self, view, transcript):
        return None


# ---------------------------------------------------------------------------
# separable POVM elements and the fictional adversary
# ---------------------------------------------------------------------------


class SeparablePovmElement:
    """A POVM element written as weight * (tensor product of per-qubit
    factors); every factor is PSD with unit trace."""

    def __init__(self, factors, weight: float = 1.0):
        mats = []
        for i, R in enumerate(factors):
            R = np.asarray(R, dtype=complex)
            if R.shape != (2, 2):
                raise ValueError(f"factor {i} is not 2x2")
            if np.abs(R - R.conj().T).max() > qsim.HERMITICITY_TOL:
                raise ValueError(f"factor {i} is not Hermitian")
            if np.linalg.eigvalsh(R).min() < -qsim.PSD_TOL:
                raise ValueError(f"factor {i} is not PSD")
            if abs(np.trace(R).real - 1.0) > qsim.TRACE_TOL:
                raise ValueError(f"factor {i} does not have unit trace")
            mats.append(R)
        self.factors = mats
        self.weight = float(weight)

    def __len__(self) -> int:
        return len(self.factors)


@dataclass(frozen=True)
class FictionalAdversaryResult:
    """Exact statistics of the all-zero outcome of per-qubit binary POVMs."""

    all_zero_probability: float
    message_conditional: dict
    gamma_conditional: dict


def fictional_adversary(
    code,
    element: SeparablePovmElement,
    subset=None,
    gamma: BitVector | None = None,
    messages=None,
    budget: int = 10**8,
) -> FictionalAdversaryResult:
    """Apply {R_q, I-R_q} to each qubit in subset and condition on all zeros.

    Enumerates messages and coins exactly (uniform priors unless pinned by
    gamma/messages), so it is restricted to tiny instances by the budget.
    """
    n, lgq, ell = code.n, code.lgq, code.ell
    n_qubits = n * lgq
    if len(element) != n_qubits:
        raise ValueError(f"element has {len(element)} factors, device has {n_qubits}")
    if subset is None:
        subset = list(range(n_qubits))
    subset = list(subset)
    n_messages = 1 if messages is not None else 1 << (2 * ell)
    n_gammas = 1 if gamma is not None else 1 << n
    if n_messages * n_gammas * max(len(subset), 1) > budget:
        raise ValueError(
            f"enumeration of {n_messages} message pairs x {n_gammas} coin "
            f"strings exceeds the budget of {budget}"
        )
    # tab[q][basis][bit] = Tr(R_q rho(bit, basis))
    tab = {}
    for q in subset:
        R = element.factors[q]
        tab[q] = [
            [
                np.trace(
                    R
                    @ qsim.prepare_conjugate(
                        bit, qsim.HADAMARD if basis else qsim.STANDARD
                    ).rho
                ).real
                for bit in (0, 1)
            ]
            for basis in (0, 1)
        ]
    if messages is not None:
        pairs = [messages]
    else:
        pairs = [
            (BitVector(ell, a), BitVector(ell, b))
            for a in range(1 << ell)
            for b in range(1 << ell)
        ]
    gammas = [gamma] if gamma is not None else [
        BitVector(n, g) for g in range(1 << n)
    ]
    message_prior = 1.0 / len(pairs)
    gamma_prior = 1.0 / len(gammas)
    codewords = {}
    for s, _ in pairs:
        if s.bits not in codewords:
            codewords[s.bits] = code.encode(s)
    for _, t in pairs:
        if t.bits not in codewords:
            codewords[t.bits] = code.encode(t)
    total = 0.0
    msg_cond: dict = {}
    gam_cond: dict = {}
    for s, t in pairs:
        cs, ct = codewords[s.bits], codewords[t.bits]
        for g in gammas:
            w = message_prior * gamma_prior
            for q in subset:
                basis = g.bit(q // lgq)
                bit = ct.bit(q) if basis else cs.bit(q)
                w *= tab[q][basis][bit]
                if w == 0.0:
                    break
            if w == 0.0:
                continue
            total += w
            key = (s.bits, t.bits)
            msg_cond[key] = msg_cond.get(key, 0.0) + w
            gam_cond[g.bits] = gam_cond.get(g.bits, 0.0) + w
    if total > 0.0:
        msg_cond = {k: v / total for k, v in msg_cond.items()}
        gam_cond = {k: v / total for k, v in gam_cond.items()}
    return FictionalAdversaryResult(
        all_zero_probability=total,
        message_conditional=msg_cond,
        gamma_conditional=gam_cond,
    )
