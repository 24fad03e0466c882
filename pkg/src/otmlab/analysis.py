"""Exact joint distributions, (smoothed) min-entropy, and security bounds.

Everything here is exact at tiny scale: the joint law of (messages,
transcript) is obtained by enumerating message pairs and basis coins and
walking every measurement-outcome path with its probability.  Entropies are
in bits throughout.

The smoothed min-entropy of a classical distribution is computed by the
threshold construction: the optimal smoothing event caps every conditional
atom at a common level t, and the removed mass is piecewise linear in t, so
the smallest admissible cap is solved for exactly segment by segment.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import gf2, otm, qsim
from .adversary import (
    DeviceView,
    Record,
    SeparablePovmElement,
    Transcript,
    fictional_adversary,
)
from .gf2 import BitVector


# ---------------------------------------------------------------------------
# exact joint distribution over (s, t, z)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnumerationLimits:
    """Hard cap on weighted path count; exceeding it is an error, never a
    sampling fallback."""

    budget: int = 10**8


def z_digest(z) -> str:
    """Stable short hash of a transcript-outcome tuple."""
    return hashlib.sha1(repr(z).encode()).hexdigest()[:12]


@dataclass
class JointDistribution:
    """Exact probability table over (s, t, z).

    Keys are (s_bits, t_bits, z) where z is the tuple of outcome labels in
    measurement order; ell and n_qubits record the instance geometry.
    """

    entries: dict
    ell: int
    n_qubits: int

    def total(self) -> float:
        return sum(self.entries.values())

    def marginal_messages(self) -> dict:
        out: dict = {}
        for (s, t, _), p in self.entries.items():
            out[(s, t)] = out.get((s, t), 0.0) + p
        return out

    def marginal_s(self) -> dict:
        out: dict = {}
        for (s, _, _), p in self.entries.items():
            out[s] = out.get(s, 0.0) + p
        return out

    def marginal_t(self) -> dict:
        out: dict = {}
        for (_, t, _), p in self.entries.items():
            out[t] = out.get(t, 0.0) + p
        return out

    def z_marginal(self) -> dict:
        out: dict = {}
        for (_, _, z), p in self.entries.items():
            out[z] = out.get(z, 0.0) + p
        return out

    def xy_pairs(self) -> dict:
        """Reshape to {((s, t), z): p} for the generic entropy helpers."""
        return {((s, t), z): p for (s, t, z), p in self.entries.items()}

    def to_csv(self, path) -> None:
        rows = sorted(
            (
                BitVector(self.ell, s).to01(),
                BitVector(self.ell, t).to01(),
                z_digest(z),
                p,
            )
            for (s, t, z), p in self.entries.items()
        )
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["s", "t", "z_hash", "probability"])
            for row in rows:
                writer.writerow([row[0], row[1], row[2], repr(row[3])])


def exact_joint_distribution(
    code,
    strategy,
    limits: EnumerationLimits | None = None,
    max_steps: int | None = None,
) -> JointDistribution:
    """Enumerate messages, coins, and every measurement-outcome path.

    Parameters
    ----------
    code : ConcatenatedCode or GenericLinearCode
        Must be tiny: 4**ell * 2**n cells (times outcome-tree leaves) have
        to fit the budget.
    strategy : Strategy
        A pure policy; it is replayed along every branch.
    limits : EnumerationLimits
        Weighted-path budget; exceeding it raises, naming the cardinality.
    max_steps : int
        Path truncation depth, defaulting to 4 * n * lgq as in run().

    Returns
    -------
    JointDistribution
        Exact probabilities; the total mass is 1 up to float rounding.
    """
    if limits is None:
        limits = EnumerationLimits()
    ell, n, lgq = code.ell, code.n, code.lgq
    if max_steps is None:
        max_steps = 4 * n * lgq
    cells = (1 << (2 * ell)) * (1 << n)
    if cells > limits.budget:
        raise ValueError(
            f"{1 << (2 * ell)} message pairs x {1 << n} coin strings = "
            f"{cells} cells exceed the budget of {limits.budget}"
        )
    view = DeviceView(n=n, lgq=lgq)
    dummy_rng = np.random.default_rng(0)
    prior = 1.0 / cells
    entries: dict = {}
    leaves = 0
    for s_bits in range(1 << ell):
        s = BitVector(ell, s_bits)
        for t_bits in range(1 << ell):
            t = BitVector(ell, t_bits)
            for g_bits in range(1 << n):
                device = otm.program(
                    code, s, t, dummy_rng, gamma=BitVector(n, g_bits)
                )
                records: list[Record] = []
                transcript = Transcript(records)
                # iterative DFS; a "pop" frame undoes one transcript record
                # once its whole subtree has been visited
                stack: list = [("visit", device.state, 1.0, None)]
                while stack:
                    frame = stack.pop()
                    if frame == "pop":
                        records.pop()
                        continue
                    _, state, prob, rec = frame
                    if rec is not None:
                        records.append(rec)
                    action = None
                    if len(records) < max_steps:
                        action = strategy.next_action(view, transcript)
                    if action is None:
                        # the deferred "pop" frame below us removes rec
                        z = tuple(r.outcome for r in records)
                        key = (s_bits, t_bits, z)
                        entries[key] = entries.get(key, 0.0) + prior * prob
                        leaves += 1
                        if leaves > limits.budget:
                            raise ValueError(
                                f"outcome-tree leaves exceeded the budget of "
                                f"{limits.budget}"
                            )
                        continue
                    pairs = qsim.outcome_probabilities(
                        state, action.qubit_index, action.instrument
                    )
                    ident = action.instrument.content_id()
                    step = len(records) + 1
                    branches = []
                    for m, (label, p) in enumerate(pairs):
                        if p <= qsim.IMPOSSIBLE_BRANCH:
                            continue
                        _, branch_state = qsim.apply_outcome(
                            state, action.qubit_index, action.instrument, m
                        )
                        branches.append((label, p, branch_state))
                    for label, p, branch_state in reversed(branches):
                        stack.append("pop")
                        stack.append(
                            (
                                "visit",
                                branch_state,
                                prob * p,
                                Record(step, action.qubit_index, ident, label),
                            )
                        )
    return JointDistribution(entries=entries, ell=ell, n_qubits=n * lgq)


# ---------------------------------------------------------------------------
# min-entropy and smoothing
# ---------------------------------------------------------------------------


def _as_xy(dist) -> dict:
    if isinstance(dist, JointDistribution):
        return dist.xy_pairs()
    return dict(dist)


def _conditional_atoms(xy: dict) -> list[tuple[float, float]]:
    """Atoms (c, w): conditional probability and conditioning weight."""
    py: dict = {}
    for (_, y), p in xy.items():
        py[y] = py.get(y, 0.0) + p
    return [(p / py[y], py[y]) for (_, y), p in xy.items() if py[y] > 0.0]


def _waterfill_cap(atoms: list[tuple[float, float]], eps: float) -> float:
    """Smallest cap t with removed mass sum(w * max(0, c - t)) <= eps."""
    total = sum(c * w for c, w in atoms)
    if eps >= total:
        raise ValueError(f"eps = {eps} >= total mass {total}")
    if eps <= 0.0:
        return max(c for c, _ in atoms)
    srt = sorted(atoms, key=lambda cw: -cw[0])
    running_cw = 0.0
    running_w = 0.0
    for j, (c, w) in enumerate(srt):
        running_cw += c * w
        running_w += w
        nxt = srt[j + 1][0] if j + 1 < len(srt) else 0.0
        t = (running_cw - eps) / running_w
        if t >= nxt - 1e-18:
            return max(t, 0.0)
    return 0.0


def min_entropy(
    dist: JointDistribution,
    conditioned_on_z: bool = True,
    negligible_delta: float | None = None,
) -> float:
    """Worst-case conditional min-entropy -lg max P(s,t | z) in bits.

    Conditioning ranges over every z in the support; negligible_delta, when
    set, restricts to outcomes with P(z) >= delta * 2**(-n_qubits),
    mirroring the negligible-outcome cutoff of the security analysis.  With
    conditioned_on_z False the z marginalization is skipped and the plain
    min-entropy of (s, t) is returned.
    """
    if not dist.entries:
        raise ValueError("empty distribution")
    if not conditioned_on_z:
        best = max(dist.marginal_messages().values())
        return -math.log2(best)
    pz = dist.z_marginal()
    threshold = None
    if negligible_delta is not None:
        threshold = negligible_delta * 2.0 ** (-dist.n_qubits)
    best = 0.0
    kept = 0
    for (s, t, z), p in dist.entries.items():
        if threshold is not None and pz[z] < threshold:
            continue
        kept += 1
        best = max(best, p / pz[z])
    if kept == 0:
        raise ValueError("negligible-outcome cutoff removed the entire support")
    return -math.log2(best)


def smooth_min_entropy(
    dist: JointDistribution, eps: float, conditioned_on_z: bool = True
) -> float:
    """Smoothed conditional min-entropy at smoothing parameter eps.

    eps = 0 reduces to min_entropy exactly; the result is nondecreasing in
    eps because larger smoothing mass can only lower the admissible cap.
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    if eps == 0.0:
        return min_entropy(dist, conditioned_on_z=conditioned_on_z)
    if conditioned_on_z:
        atoms = _conditional_atoms(dist.xy_pairs())
    else:
        atoms = [(p, 1.0) for p in dist.marginal_messages().values()]
    return -math.log2(_waterfill_cap(atoms, eps))


def _smooth_conditional_xy(xy: dict, eps: float) -> float:
    if eps == 0.0:
        return -math.log2(max(c for c, _ in _conditional_atoms(xy)))
    return -math.log2(_waterfill_cap(_conditional_atoms(xy), eps))


def _smooth_joint_xy(xy: dict, eps: float) -> float:
    atoms = [(p, 1.0) for p in xy.values()]
    if eps == 0.0:
        return -math.log2(max(p for p, _ in atoms))
    return -math.log2(_waterfill_cap(atoms, eps))


def chain_rule_check(dist, eps: float, eps_prime: float) -> bool:
    """Verify the smoothed min-entropy chain rule on a distribution.

    Checks H_inf^{eps+eps'}(X|Y) > H_inf^eps(X,Y) - H_0(Y) - lg(1/eps')
    where H_0(Y) counts the support of Y; accepts a JointDistribution
    (X = (s,t), Y = z) or any mapping {(x, y): p}.
    """
    if eps <= 0.0 or eps_prime <= 0.0 or eps + eps_prime >= 1.0:
        raise ValueError("need eps, eps' > 0 and eps + eps' < 1")
    xy = _as_xy(dist)
    lhs = _smooth_conditional_xy(xy, eps + eps_prime)
    h_joint = _smooth_joint_xy(xy, eps)
    support_y = {y for (_, y) in xy.keys()}
    rhs = h_joint - math.log2(len(support_y)) - math.log2(1.0 / eps_prime)
    return lhs > rhs - 1e-12


# ---------------------------------------------------------------------------
# bound calculators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UncertaintyBoundParams:
    """Per-subsystem inputs of the min-entropy uncertainty relation.

    h[i] is the average-entropy floor of subsystem i, lam[i] its slack in
    (0, 1/2), basis_sizes[i] the number of bases, dims[i] the Hilbert-space
    dimension; tau > 0 trades bound strength against failure probability.
    """

    h: tuple
    lam: tuple
    basis_sizes: tuple
    dims: tuple
    tau: float

    def __post_init__(self):
        m = len(self.h)
        if m == 0 or not (len(self.lam) == len(self.basis_sizes) == len(self.dims) == m):
            raise ValueError("per-subsystem lists must be nonempty and equal length")
        if any(not 0.0 < l < 0.5 for l in self.lam):
            raise ValueError("each lambda must lie in (0, 1/2)")
        if any(b < 1 for b in self.basis_sizes) or any(d < 2 for d in self.dims):
            raise ValueError("need basis_sizes >= 1 and dims >= 2")
        if self.tau <= 0.0:
            raise ValueError("tau must be positive")


@dataclass(frozen=True)
class UncertaintyBoundResult:
    bound_bits: float
    eps: float
    c: float


def uncertainty_relation_bound(p: UncertaintyBoundParams) -> UncertaintyBoundResult:
    """Min-entropy floor for measuring many subsystems in random bases.

    bound = -tau + sum_i (h_i - lambda_i); the failure probability is
    eps = exp(-2 tau^2 / c) with c = sum_i 16 lg(|B_i| d_i / lambda_i)^2.
    """
    bound = -p.tau + sum(h - l for h, l in zip(p.h, p.lam))
    c = sum(
        16.0 * math.log2(b * d / l) ** 2
        for b, d, l in zip(p.basis_sizes, p.dims, p.lam)
    )
    eps = math.exp(-2.0 * p.tau**2 / c)
    return UncertaintyBoundResult(bound_bits=bound, eps=eps, c=c)


@dataclass(frozen=True)
class SecurityBoundParams:
    """Inputs of the device security bound: message length ell, symbol width
    lgq, code rate alpha, and the slack constants lam, tau0, delta."""

    ell: int
    lgq: int
    alpha: float
    lam: float
    tau0: float
    delta: float

    def __post_init__(self):
        if self.ell < 1 or self.lgq < 1:
            raise ValueError("ell and lgq must be positive")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0.0 < self.lam < 0.5:
            raise ValueError("lam must lie in (0, 1/2)")
        if self.tau0 <= 0.0:
            raise ValueError("tau0 must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class SecurityBoundResult:
    bound_bits: float
    eps: float
    vacuous: bool


def otm_security_bound(p: SecurityBoundParams) -> SecurityBoundResult:
    """Smoothed min-entropy floor H(S,T|Z) for separable adversaries.

    bound = ((1/2 - lam) - 4 tau0 (1 + (1 + lg(1/lam)) / sqrt(lgq))
             + (2 - 1/alpha)) * ell - lg(1/delta)
    and eps = exp(-2 tau0^2 ell / lgq).  The raw value is reported even
    when negative; vacuous flags that case.
    """
    coeff = (
        (0.5 - p.lam)
        - 4.0 * p.tau0 * (1.0 + (1.0 + math.log2(1.0 / p.lam)) / math.sqrt(p.lgq))
        + (2.0 - 1.0 / p.alpha)
    )
    bound = coeff * p.ell - math.log2(1.0 / p.delta)
    eps = math.exp(-2.0 * p.tau0**2 * p.ell / p.lgq)
    return SecurityBoundResult(bound_bits=bound, eps=eps, vacuous=bound <= 0.0)


# ---------------------------------------------------------------------------
# identity checks
# ---------------------------------------------------------------------------


def _shannon_bits(probs: np.ndarray) -> float:
    probs = np.clip(probs, 0.0, None)
    nz = probs[probs > 0.0]
    return float(-(nz * np.log2(nz)).sum())


def maassen_uffink_check(rho, ell: int) -> tuple[float, bool]:
    """Average standard/Hadamard measurement entropy against the ell/2 floor.

    rho is a density matrix on ell qubits (ell <= 3 keeps the dense
    arithmetic tiny); returns (average entropy, floor satisfied).
    """
    if not 1 <= ell <= 3:
        raise ValueError("ell must be 1, 2 or 3")
    d = 1 << ell
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise ValueError(f"state must be {d}x{d} for ell={ell}")
    if np.abs(rho - rho.conj().T).max() > 1e-10:
        raise ValueError("state is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-10:
        raise ValueError("state trace is not 1")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("state is not positive semidefinite")
    had = np.array([[1.0]], dtype=complex)
    for _ in range(ell):
        had = np.kron(had, qsim.HADAMARD_GATE)
    p_std = np.diag(rho).real
    p_had = np.diag(had @ rho @ had).real
    avg = 0.5 * (_shannon_bits(p_std) + _shannon_bits(p_had))
    return avg, avg >= ell / 2.0 - 1e-9


def _dense_product(mats) -> np.ndarray:
    out = np.array([[1.0]], dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def fictional_equivalence_check(
    code, element: SeparablePovmElement, limits: EnumerationLimits | None = None
) -> float:
    """Max deviation between the real and fictional conditional message laws.

    The real side conditions on the separable outcome z, computed from dense
    tensor products; the fictional side conditions on the all-zero outcome
    of the per-qubit binary POVMs {R, I-R}.  The two must agree.
    """
    if limits is None:
        limits = EnumerationLimits()
    ell, n, lgq = code.ell, code.n, code.lgq
    n_qubits = n * lgq
    cost = (1 << (2 * ell)) * (1 << n) * (1 << n_qubits) ** 2
    if cost > limits.budget:
        raise ValueError(
            f"dense check cost {cost} exceeds the budget of {limits.budget}"
        )
    M = _dense_product(element.factors)
    joint: dict = {}
    prior = 4.0 ** (-ell) * 2.0 ** (-n)
    for s_bits in range(1 << ell):
        s = BitVector(ell, s_bits)
        cs = code.encode(s)
        for t_bits in range(1 << ell):
            t = BitVector(ell, t_bits)
            ct = code.encode(t)
            acc = 0.0
            for g_bits in range(1 << n):
                g = BitVector(n, g_bits)
                mats = []
                for q in range(n_qubits):
                    basis = g.bit(q // lgq)
                    bit = ct.bit(q) if basis else cs.bit(q)
                    mats.append(
                        qsim.prepare_conjugate(
                            bit, qsim.HADAMARD if basis else qsim.STANDARD
                        ).rho
                    )
                rho = _dense_product(mats)
                acc += np.trace(M @ rho).real
            joint[(s_bits, t_bits)] = prior * acc
    total = sum(joint.values())
    real_cond = {k: v / total for k, v in joint.items()}
    fict = fictional_adversary(code, element, budget=limits.budget)
    keys = set(real_cond) | set(fict.message_conditional)
    return max(
        abs(real_cond.get(k, 0.0) - fict.message_conditional.get(k, 0.0))
        for k in keys
    )


def gamma_uniformity_deviation(code, element: SeparablePovmElement) -> float:
    """Max |P(gamma | all-pass on the independent subset) - 2^-n|.

    The subset is the greedy independent column subset of the generator, so
    the probed codeword bits are uniform and the coins stay uniform."""
    subset = gf2.independent_column_subset(code.generator_matrix())
    res = fictional_adversary(code, element, subset=subset)
    uniform = 2.0 ** (-code.n)
    return max(
        abs(res.gamma_conditional.get(g, 0.0) - uniform)
        for g in range(1 << code.n)
    )


def all_zero_probability_deviation(code, element: SeparablePovmElement) -> float:
    """|Pr[all-pass on the independent subset] - 2^-ell|."""
    subset = gf2.independent_column_subset(code.generator_matrix())
    res = fictional_adversary(code, element, subset=subset)
    return abs(res.all_zero_probability - 2.0 ** (-code.ell))
