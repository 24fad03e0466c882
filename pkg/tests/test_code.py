import math
from fractions import Fraction

import numpy as np
import pytest

from otmlab import channel, code, gf2
from otmlab.channel import ChannelParams
from otmlab.code import ConcatenatedCode, GenericLinearCode
from otmlab.gf2 import BitMatrix, BitVector
from otmlab.seeding import trial_rng

DESK = dict(k=16, pe=0.5, eps=0.1, delta=0.5, theta=0.2)


@pytest.fixture(scope="module")
def desk_code():
    params = code.derive_params(**DESK)
    return code.build_code(params, np.random.default_rng(20260809))


class TestDeriveParams:
    def test_desk_hand_values(self):
        p = code.derive_params(**DESK)
        # n = floor(16/0.3) = 53; ceil(0.1*53 + lg 26.5) = ceil(10.03) = 11
        assert (p.n, p.c, p.c0) == (53, 44, 22)
        assert abs(code.rate(p) - 352 / 2332) < 1e-15

    def test_tiny_hand_values(self):
        p = code.derive_params(2, 0.5, 0.1, 0.5, 0.2)
        # n = floor(2/0.3) = 6; ceil(0.6 + lg 3) = 3
        assert (p.n, p.c, p.c0) == (6, 12, 6)

    def test_errors(self):
        with pytest.raises(ValueError):
            code.derive_params(16, 0.5, 0.1, 0.5, 0.5)  # 1 - pe - theta = 0
        with pytest.raises(ValueError):
            code.derive_params(2, 0.05, 0.1, 0.5, 0.05)  # n*pe < 1
        with pytest.raises(ValueError):
            code.derive_params(1, 0.5, 0.1, 0.5, 0.2)
        with pytest.raises(ValueError):
            code.derive_params(16, 0.5, 0.1, 1.5, 0.2)

    def grid(self):
        tuples = []
        for k in (4, 8, 16, 24):
            for pe in (0.3, 0.5):
                for delta, theta in ((0.5, 0.2), (0.4, 0.1), (0.3, 0.15)):
                    tuples.append((k, pe, 0.1, delta, theta))
        return tuples

    def test_rate_bound_on_grid(self):
        checked = 0
        for k, pe, eps, delta, theta in self.grid():
            p = code.derive_params(k, pe, eps, delta, theta)
            rate = Fraction(p.k * p.c0, p.n * p.c)
            bound = (1 - Fraction(pe) - Fraction(theta)) * (1 - Fraction(delta))
            assert rate >= bound
            assert p.c0 < p.c
            assert code.rate(p) < channel.capacity(ChannelParams(lgq=p.c, pe=pe))
            checked += 1
        assert checked >= 20


class TestBuildCode:
    def test_deterministic(self):
        p = code.derive_params(2, 0.5, 0.1, 0.5, 0.2)
        a = code.build_code(p, np.random.default_rng(5))
        b = code.build_code(p, np.random.default_rng(5))
        assert a.G0 == b.G0 and a.G1 == b.G1

    def test_constructed_ranks(self, desk_code):
        p = desk_code.params
        assert gf2.rank(desk_code.G0) == p.k * p.c0
        assert gf2.rank(desk_code.G1) == p.c0

    def test_noiseless_round_trip(self):
        p = code.derive_params(2, 0.5, 0.1, 0.5, 0.2)
        c = code.build_code(p, np.random.default_rng(6))
        rng = np.random.default_rng(7)
        for _ in range(100):
            s = gf2.random_vector(c.ell, rng)
            res = c.decode(c.encode(s))
            assert res.ok and not res.ambiguous and res.message == s


class TestEncode:
    def test_zero_message(self):
        p = code.derive_params(2, 0.5, 0.1, 0.5, 0.2)
        c = code.build_code(p, np.random.default_rng(8))
        assert c.encode(BitVector.zeros(c.ell)).bits == 0

    def test_linearity(self):
        p = code.derive_params(2, 0.5, 0.1, 0.5, 0.2)
        c = code.build_code(p, np.random.default_rng(9))
        rng = np.random.default_rng(10)
        for _ in range(30):
            a = gf2.random_vector(c.ell, rng)
            b = gf2.random_vector(c.ell, rng)
            assert c.encode(a ^ b) == c.encode(a) ^ c.encode(b)

    def test_matches_naive_product(self):
        p = code.derive_params(2, 0.5, 0.1, 0.5, 0.2)
        c = code.build_code(p, np.random.default_rng(11))
        rng = np.random.default_rng(12)
        for _ in range(10):
            s = gf2.random_vector(c.ell, rng)
            v = gf2.vec_mat_mul(s, c.G0)
            want = 0
            for i in range(p.n):
                blk = gf2.vec_mat_mul(v.block(i, p.c0), c.G1)
                want |= blk.bits << (i * p.c)
            assert c.encode(s) == BitVector(p.n * p.c, want)

    def test_length_mismatch(self):
        p = code.derive_params(2, 0.5, 0.1, 0.5, 0.2)
        c = code.build_code(p, np.random.default_rng(13))
        with pytest.raises(ValueError):
            c.encode(BitVector.zeros(c.ell + 1))


class TestDecode:
    def test_all_blocks_erased_is_ambiguous(self):
        p = code.derive_params(2, 0.5, 0.1, 0.5, 0.2)
        c = code.build_code(p, np.random.default_rng(14))
        # with the systematic inner code, all-ones blocks fail membership
        z = BitVector(p.n * p.c, (1 << (p.n * p.c)) - 1)
        res = c.decode(z)
        assert res.erased_blocks == p.n
        assert res.ambiguous
        assert res.message == BitVector.zeros(c.ell)

    def test_detection_is_trailing_bits_zero(self):
        p = code.derive_params(2, 0.5, 0.1, 0.5, 0.2)
        c = code.build_code(p, np.random.default_rng(15))
        rng = np.random.default_rng(16)
        for _ in range(200):
            word = gf2.random_vector(p.c, rng)
            decoded = c._inner.invert(word)
            passes = word.bits >> p.c0 == 0
            assert (decoded is not None) == passes
            if passes:
                assert decoded == BitVector(p.c0, word.bits)

    def test_desk_monte_carlo_through_channel(self, desk_code):
        """Failure rate, undetected errors, and error-count concentration."""
        c = desk_code
        p = c.params
        ch = ChannelParams(lgq=p.c, pe=p.pe)
        trials = 500
        failures = 0
        undetected = 0
        stray = 0.0
        lim = 4.0 * math.sqrt(p.n * p.pe * (1 - p.pe))
        for trial in range(trials):
            rng = trial_rng(101, trial)
            s = gf2.random_vector(c.ell, rng)
            cw = c.encode(s)
            blocks = [cw.block(i, p.c) for i in range(p.n)]
            received = channel.transmit(ch, blocks, rng)
            corrupted = sum(a != b for a, b in zip(blocks, received))
            stray += abs(corrupted - p.n * p.pe) > lim
            v_true = gf2.vec_mat_mul(s, c.G0)
            for i, (a, b) in enumerate(zip(blocks, received)):
                if a == b:
                    continue
                got = c._inner.invert(b)
                if got is not None and got != v_true.block(i, p.c0):
                    undetected += 1
            z = BitVector.zeros(0)
            for b in received:
                z = z.concat(b)
            res = c.decode(z)
            if not res.ok or res.message != s:
                failures += 1
        assert failures / trials <= 0.02
        assert undetected == 0
        assert stray / trials <= 0.001

    def test_failure_rate_decreases_with_theta(self):
        rates = []
        for theta in (0.05, 0.2, 0.35):
            p = code.derive_params(8, 0.5, 0.1, 0.5, theta)
            c = code.build_code(p, np.random.default_rng(17))
            ch = ChannelParams(lgq=p.c, pe=0.5)
            fails = 0
            trials = 150
            for trial in range(trials):
                rng = trial_rng(103, int(theta * 100), trial)
                s = gf2.random_vector(c.ell, rng)
                cw = c.encode(s)
                blocks = [cw.block(i, p.c) for i in range(p.n)]
                z = BitVector.zeros(0)
                for b in channel.transmit(ch, blocks, rng):
                    z = z.concat(b)
                res = c.decode(z)
                fails += not (res.ok and res.message == s)
            rates.append(fails / trials)
        assert rates[0] > rates[2] + 0.1
        assert rates[0] >= rates[1] - 0.03 >= rates[2] - 0.06

    def test_word_length_mismatch(self, desk_code):
        with pytest.raises(ValueError):
            desk_code.decode(BitVector.zeros(5))


class TestGenericLinearCode:
    def test_requires_full_rank(self):
        with pytest.raises(ValueError):
            GenericLinearCode(BitMatrix.zeros(2, 4), 2, 2)

    def test_exact_match_round_trip(self):
        G = BitMatrix.from_rows(["1010", "0101"])
        c = GenericLinearCode(G, 2, 2)
        for m in range(4):
            s = BitVector(2, m)
            res = c.decode(c.encode(s))
            assert res.ok and res.message == s

    def test_exact_match_rejects_noncodeword(self):
        c = GenericLinearCode(BitMatrix.identity(2), 2, 1)
        # the identity code covers all 2-bit words; use a 2->4 bit code
        c2 = GenericLinearCode(BitMatrix.from_rows(["1100", "0011"]), 2, 2)
        assert not c2.decode(BitVector.from01("1000")).ok
        assert c.decode(BitVector.from01("10")).ok

    def test_custom_decoder(self):
        calls = []

        def dec(z):
            calls.append(z)
            return code.DecodeResult(message=BitVector(1, z.bit(0)))

        c = GenericLinearCode(BitMatrix.from_rows(["11"]), 2, 1, decoder=dec)
        res = c.decode(BitVector.from01("10"))
        assert res.message == BitVector(1, 1)
        assert len(calls) == 1


class TestBundle:
    def test_round_trip(self, tmp_path, desk_code):
        code.save_bundle(desk_code, tmp_path / "bundle")
        loaded = code.load_bundle(tmp_path / "bundle")
        assert loaded.params == desk_code.params
        assert loaded.G0 == desk_code.G0
        assert loaded.G1 == desk_code.G1
        rng = np.random.default_rng(18)
        s = gf2.random_vector(loaded.ell, rng)
        assert loaded.encode(s) == desk_code.encode(s)
        assert loaded.decode(loaded.encode(s)).message == s
