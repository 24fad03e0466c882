import math

import numpy as np
import pytest

from otmlab import channel, gf2
from otmlab.channel import ChannelParams
from otmlab.gf2 import BitVector


def h2(p):
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


class TestCapacity:
    def test_noiseless_is_exactly_one(self):
        for lgq in (1, 2, 8, 100):
            assert channel.capacity(ChannelParams(lgq=lgq, pe=0.0)) == 1.0

    def test_hand_value_lgq2(self):
        # independent evaluation via the binary-entropy form
        expected = 1.0 - h2(0.5) / 2.0 - 0.5 * math.log2(3) / 2.0
        got = channel.capacity(ChannelParams(lgq=2, pe=0.5))
        assert abs(got - expected) < 1e-6

    def test_displayed_lower_bound(self):
        for lgq in (1, 2, 4, 16, 64, 2048):
            for pe in (0.01, 0.1, 0.3, 0.5, 0.7):
                params = ChannelParams(lgq=lgq, pe=pe)
                assert channel.capacity(params) >= 1.0 - 1.0 / lgq - pe - 1e-12

    def test_strictly_decreasing_in_pe(self):
        for lgq in (1, 3, 8):
            top = 1.0 - 1.0 / (1 << lgq)
            grid = np.linspace(0.01, top - 0.01, 25)
            vals = [channel.capacity(ChannelParams(lgq=lgq, pe=float(p))) for p in grid]
            assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_huge_symbol_width(self):
        # lg q in the thousands must not overflow anything
        got = channel.capacity(ChannelParams(lgq=4000, pe=0.5))
        assert 1.0 - 1.0 / 4000 - 0.5 - 1e-12 <= got < 0.5 + 1e-9

    def test_validation(self):
        with pytest.raises(ValueError):
            ChannelParams(lgq=0, pe=0.1)
        with pytest.raises(ValueError):
            ChannelParams(lgq=2, pe=1.0)


class TestOtmErrorProbability:
    def test_small_q_values(self):
        assert channel.otm_error_probability(1) == 0.25
        assert channel.otm_error_probability(2) == 0.375

    def test_monotone_to_half(self):
        # strictly increasing while 2^-lgq is resolvable in double precision
        vals = [channel.otm_error_probability(lgq) for lgq in range(1, 51)]
        assert all(a < b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 0.5
        assert channel.otm_error_probability(200) == 0.5  # saturates


class TestTransmit:
    def test_noiseless_identity(self):
        rng = np.random.default_rng(1)
        blocks = [gf2.random_vector(3, rng) for _ in range(50)]
        out = channel.transmit(ChannelParams(lgq=3, pe=0.0), blocks, rng)
        assert out == blocks

    def test_preserves_count_and_width(self):
        rng = np.random.default_rng(2)
        blocks = [gf2.random_vector(5, rng) for _ in range(40)]
        out = channel.transmit(ChannelParams(lgq=5, pe=0.8), blocks, rng)
        assert len(out) == 40
        assert all(b.n == 5 for b in out)

    def test_malformed_width_errors(self):
        rng = np.random.default_rng(3)
        with pytest.raises(ValueError):
            channel.transmit(
                ChannelParams(lgq=3, pe=0.1), [BitVector.from01("10")], rng
            )

    def test_deterministic_for_fixed_seed(self):
        blocks = [BitVector.from01("10"), BitVector.from01("01")] * 20
        params = ChannelParams(lgq=2, pe=0.5)
        a = channel.transmit(params, blocks, np.random.default_rng(7))
        b = channel.transmit(params, blocks, np.random.default_rng(7))
        assert a == b

    def test_flip_rate_binary(self):
        rng = np.random.default_rng(4)
        n = 100_000
        zeros = [BitVector.zeros(1)] * n
        out = channel.transmit(ChannelParams(lgq=1, pe=0.3), zeros, rng)
        flips = sum(b.bits for b in out)
        assert 0.29 <= flips / n <= 0.31

    def test_corruption_uniform_over_alternatives(self):
        rng = np.random.default_rng(5)
        n = 170_000
        sent = BitVector.from01("10")
        out = channel.transmit(ChannelParams(lgq=2, pe=0.6), [sent] * n, rng)
        wrong = [b.bits for b in out if b != sent]
        assert len(wrong) >= 100_000
        counts = {v: 0 for v in range(4) if v != sent.bits}
        for v in wrong:
            counts[v] += 1
        for v, cnt in counts.items():
            assert abs(cnt / len(wrong) - 1.0 / 3.0) < 0.02

    def test_corrupt_never_returns_input(self):
        rng = np.random.default_rng(6)
        for lgq in (1, 2, 7, 70):
            x = gf2.random_vector(lgq, rng)
            for _ in range(200):
                assert channel.corrupt(x, rng) != x
