import json

import numpy as np
import pytest

from otmlab import gf2, otm, qsim
from otmlab.code import GenericLinearCode
from otmlab.gf2 import BitMatrix, BitVector
from otmlab.otm import ReadoutChoice
from otmlab.seeding import trial_rng

from oracles import honest_readout_law, total_variation


def tiny_code(ell=2, n=2, lgq=1):
    """Full-rank generator whose columns cycle through the unit vectors."""
    cols = n * lgq
    rows = []
    for i in range(ell):
        rows.append(sum(1 << j for j in range(i, cols, ell)))
    return GenericLinearCode(BitMatrix(ell, cols, rows), n, lgq)


def qsim_readout_law(code, s, t, choice, gamma_count=None):
    """Enumerate the raw measurement-string law through the qsim path."""
    angle = 0.0 if choice is ReadoutChoice.FIRST else np.pi / 4
    inst = qsim.basis_instrument(angle)
    rng = np.random.default_rng(0)
    n_qubits = code.n * code.lgq
    dist: dict = {}
    for g_bits in range(1 << code.n):
        device = otm.program(code, s, t, rng, gamma=BitVector(code.n, g_bits))
        frontier = [(device.state, 0, 1.0)]
        for q in range(n_qubits):
            new = []
            for state, word, prob in frontier:
                for m, (label, p) in enumerate(
                    qsim.outcome_probabilities(state, q, inst)
                ):
                    if p <= 1e-14:
                        continue
                    _, nxt = qsim.apply_outcome(state, q, inst, m)
                    new.append((nxt, word | (label << q), prob * p))
            frontier = new
        for _, word, prob in frontier:
            dist[word] = dist.get(word, 0.0) + prob * 2.0 ** (-code.n)
    return dist


class TestSelect:
    def test_all_zero_coins(self):
        x, y = BitVector.from01("1011"), BitVector.from01("0100")
        assert otm.select(x, y, BitVector.zeros(2)) == x

    def test_all_one_coins(self):
        x, y = BitVector.from01("1011"), BitVector.from01("0100")
        assert otm.select(x, y, BitVector(2, 0b11)) == y

    def test_hand_case(self):
        x = BitVector.from01("1100")
        y = BitVector.from01("0011")
        gamma = BitVector.from01("01")
        assert otm.select(x, y, gamma).to01() == "1111"

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            otm.select(BitVector.zeros(4), BitVector.zeros(2), BitVector.zeros(2))


class TestProgram:
    def test_deterministic(self):
        code = tiny_code()
        s, t = BitVector.from01("10"), BitVector.from01("01")
        a = otm.program(code, s, t, np.random.default_rng(3))
        b = otm.program(code, s, t, np.random.default_rng(3))
        assert a.gamma == b.gamma
        assert np.array_equal(a.state.rhos, b.state.rhos)

    def test_forced_all_zero_gamma_is_standard_basis(self):
        code = tiny_code(ell=2, n=4, lgq=2)
        rng = np.random.default_rng(4)
        s = gf2.random_vector(2, rng)
        t = gf2.random_vector(2, rng)
        device = otm.program(code, s, t, rng, gamma=BitVector.zeros(4))
        cw = code.encode(s)
        for q in range(8):
            want = qsim.prepare_conjugate(cw.bit(q), qsim.STANDARD).rho
            assert np.array_equal(device.state.rhos[q], want)

    def test_gamma_bias(self):
        code = tiny_code(ell=2, n=4, lgq=1)
        rng = np.random.default_rng(5)
        s, t = BitVector.zeros(2), BitVector.zeros(2)
        counts = np.zeros(4)
        trials = 10_000
        for _ in range(trials):
            counts += otm.program(code, s, t, rng).gamma.to_u8()
        means = counts / trials
        assert means.min() >= 0.48 and means.max() <= 0.52

    def test_length_mismatch(self):
        code = tiny_code()
        rng = np.random.default_rng(6)
        with pytest.raises(ValueError):
            otm.program(code, BitVector.zeros(3), BitVector.zeros(2), rng)


class TestHonestRead:
    def test_all_matched_recovers_exactly(self):
        code = tiny_code()
        rng = np.random.default_rng(7)
        for _ in range(50):
            s = gf2.random_vector(2, rng)
            t = gf2.random_vector(2, rng)
            device = otm.program(code, s, t, rng, gamma=BitVector.zeros(2))
            res = otm.honest_read(device, ReadoutChoice.FIRST, rng)
            assert res.ok and res.message == s
            device = otm.program(code, s, t, rng, gamma=BitVector(2, 0b11))
            res = otm.honest_read(device, ReadoutChoice.SECOND, rng)
            assert res.ok and res.message == t

    def test_mismatched_blocks_uniform_chi_square(self):
        # gamma forced 0, read in the Hadamard basis: every block uniform
        code = tiny_code(ell=2, n=50, lgq=2)
        rng = np.random.default_rng(8)
        counts = np.zeros(4)
        for _ in range(200):
            s = gf2.random_vector(2, rng)
            t = gf2.random_vector(2, rng)
            device = otm.program(code, s, t, rng, gamma=BitVector.zeros(50))
            inst = qsim.basis_instrument(np.pi / 4)
            labels, _ = qsim.measure_all(device.state, inst, rng)
            word = BitVector.from_u8(np.asarray(labels, dtype=np.uint8))
            for i in range(50):
                counts[word.block(i, 2).bits] += 1
        total = counts.sum()
        expected = total / 4.0
        chi2 = ((counts - expected) ** 2 / expected).sum()
        assert chi2 < 16.266  # df=3 critical value at significance 0.001

    def test_second_read_after_destructive_first_fails(self):
        from otmlab import code as code_mod

        params = code_mod.derive_params(16, 0.5, 0.1, 0.5, 0.2)
        code = code_mod.build_code(params, np.random.default_rng(9))
        second_failures = 0
        trials = 30
        for trial in range(trials):
            rng = trial_rng(201, trial)
            s = gf2.random_vector(code.ell, rng)
            t = gf2.random_vector(code.ell, rng)
            device = otm.program(code, s, t, rng)
            first = otm.honest_read(device, ReadoutChoice.FIRST, rng)
            assert first.ok and first.message == s
            second = otm.honest_read(device, ReadoutChoice.SECOND, rng)
            if not second.ok or second.message != t:
                second_failures += 1
        assert second_failures / trials >= 0.5


class TestFastHonestRead:
    def test_all_matched_identical_to_honest(self):
        code = tiny_code()
        rng = np.random.default_rng(10)
        for _ in range(30):
            s = gf2.random_vector(2, rng)
            t = gf2.random_vector(2, rng)
            device = otm.program(code, s, t, rng, gamma=BitVector.zeros(2))
            res = otm.fast_honest_read(device, ReadoutChoice.FIRST, rng)
            assert res.ok and res.message == s

    def test_exact_distribution_equals_qsim_path(self):
        code = tiny_code(ell=2, n=2, lgq=1)
        rng = np.random.default_rng(11)
        s = gf2.random_vector(2, rng)
        t = gf2.random_vector(2, rng)
        got = qsim_readout_law(code, s, t, ReadoutChoice.FIRST)
        want = honest_readout_law(code, s, choice_second=False)
        assert total_variation(got, want) < 1e-12
        got2 = qsim_readout_law(code, s, t, ReadoutChoice.SECOND)
        want2 = honest_readout_law(code, t, choice_second=True)
        assert total_variation(got2, want2) < 1e-12

    def test_collapses_device_state(self):
        code = tiny_code()
        rng = np.random.default_rng(12)
        s = gf2.random_vector(2, rng)
        t = gf2.random_vector(2, rng)
        device = otm.program(code, s, t, rng)
        otm.fast_honest_read(device, ReadoutChoice.FIRST, rng)
        for q in range(device.n_qubits):
            rho = device.state.rhos[q]
            # post-read state is a standard-basis projector
            assert abs(rho[0, 1]) < 1e-12 and abs(rho[1, 0]) < 1e-12


class TestSnapshot:
    def test_round_trip(self):
        code = tiny_code()
        rng = np.random.default_rng(13)
        device = otm.program(
            code, gf2.random_vector(2, rng), gf2.random_vector(2, rng), rng
        )
        text = otm.snapshot(device)
        gamma, state = otm.load_snapshot(text)
        assert gamma == device.gamma
        assert np.array_equal(state.rhos, device.state.rhos)

    def test_format_fields(self):
        code = tiny_code()
        rng = np.random.default_rng(14)
        device = otm.program(
            code, gf2.random_vector(2, rng), gf2.random_vector(2, rng), rng
        )
        obj = json.loads(otm.snapshot(device))
        assert set(obj.keys()) == {"gamma", "qubits"}
        assert len(obj["gamma"]) == 2
        assert len(obj["qubits"]) == 2
        assert all(len(row) == 8 for row in obj["qubits"])
