"""Array propagation channel tests.

The keystone check ties the sampled simulation to the closed form: a pure
tone at baseband offset df, propagated and phase-aligned, must combine to
exactly the analytic space factor at carrier fraction 1 + df.
"""

import numpy as np
import pytest

from squintsim import (
    ArrayConfig,
    ComplexSignal,
    SignalSpec,
    add_noise,
    element_delay_samples,
    fractional_delay,
    phase_align,
    propagate,
    space_factor_at_steer,
    sync_mean_delay,
)
from squintsim.errors import InsufficientGuard

DEG = np.pi / 180.0


def guarded_burst(rng, length, guard, rate=8.0):
    x = np.zeros(length, dtype=complex)
    x[guard:-guard] = rng.standard_normal(length - 2 * guard) + 1j * rng.standard_normal(
        length - 2 * guard
    )
    return ComplexSignal(x, sample_rate=rate)


def integer_bin_tone(cfg, spec, length, bin_index):
    """Pure tone on an exact FFT bin and its baseband offset as a carrier
    fraction. Circular delay treats integer-bin tones exactly, so no guard
    is needed."""
    tone = np.exp(2j * np.pi * bin_index * np.arange(length) / length)
    # bin k advances k/length cycles per sample; one sample spans
    # 1/(oversample * bw) carrier cycles
    df = (bin_index / length) * spec.oversample * spec.fractional_bandwidth
    return ComplexSignal(tone, sample_rate=float(spec.oversample)), df


class TestPropagate:
    def test_broadside_all_streams_identical(self):
        rng = np.random.default_rng(0)
        cfg = ArrayConfig(4, 0.0)
        spec = SignalSpec(0.1, seed=1)
        tx = guarded_burst(rng, 512, 16)
        streams = propagate(tx, cfg, spec)
        for n in range(4):
            assert np.array_equal(streams.streams[n], tx.samples)

    def test_element_zero_is_exactly_tx(self):
        rng = np.random.default_rng(1)
        cfg = ArrayConfig(8, 30 * DEG)
        spec = SignalSpec(0.1, seed=1)
        tx = guarded_burst(rng, 1024, 32)
        streams = propagate(tx, cfg, spec)
        assert np.array_equal(streams.streams[0], tx.samples)

    def test_two_element_delay_and_rotation(self):
        # d/lambda = 0.5, 30 degrees, BW 10 percent, 8x oversampling:
        # second element lags 0.2 samples and rotates by -pi/2
        rng = np.random.default_rng(2)
        cfg = ArrayConfig(2, 30 * DEG)
        spec = SignalSpec(0.1, oversample=8, seed=1)
        tx = guarded_burst(rng, 2048, 64)
        assert element_delay_samples(cfg, spec, 8.0) == pytest.approx(0.2)
        streams = propagate(tx, cfg, spec)
        oracle = fractional_delay(tx, 0.2).samples * np.exp(-1j * np.pi / 2)
        assert np.max(np.abs(streams.streams[1] - oracle)) < 1e-10

    def test_total_spread_matches_analytic(self):
        from squintsim import max_delay_spread

        cfg = ArrayConfig(8, 30 * DEG)
        spec = SignalSpec(0.25, oversample=8, seed=1)
        per_el = element_delay_samples(cfg, spec, 8.0)
        # spread in carrier cycles: samples back to cycles via rate * bw
        spread_cycles = cfg.n_elements * per_el / (8.0 * 0.25)
        assert spread_cycles == pytest.approx(max_delay_spread(cfg))

    def test_energy_preserved_per_stream(self):
        rng = np.random.default_rng(3)
        cfg = ArrayConfig(6, 45 * DEG)
        spec = SignalSpec(0.2, seed=1)
        tx = guarded_burst(rng, 1024, 48)
        streams = propagate(tx, cfg, spec)
        for n in range(6):
            p = np.mean(np.abs(streams.streams[n]) ** 2)
            assert p == pytest.approx(tx.power, rel=1e-10)

    def test_insufficient_guard_raises(self):
        rng = np.random.default_rng(4)
        cfg = ArrayConfig(16, 60 * DEG)
        spec = SignalSpec(0.25, oversample=8, seed=1)
        x = rng.standard_normal(512) + 0j  # no zero guards at all
        with pytest.raises(InsufficientGuard):
            propagate(ComplexSignal(x, sample_rate=8.0), cfg, spec)


class TestPhaseAlign:
    def test_broadside_identity(self):
        rng = np.random.default_rng(5)
        cfg = ArrayConfig(4, 0.0)
        spec = SignalSpec(0.1, seed=1)
        streams = propagate(guarded_burst(rng, 512, 16), cfg, spec)
        aligned = phase_align(streams)
        assert np.allclose(aligned.streams, streams.streams)

    def test_zero_bandwidth_tone_fully_coherent(self):
        cfg = ArrayConfig(8, 30 * DEG)
        spec = SignalSpec(0.1, oversample=8, seed=1)
        tx = ComplexSignal(np.ones(256, dtype=complex), sample_rate=8.0)
        aligned = phase_align(propagate(tx, cfg, spec, check_guard=False))
        combined = aligned.streams.mean(axis=0)
        assert np.max(np.abs(combined - 1.0)) < 1e-9

    def test_keystone_tone_matches_space_factor(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            n = int(rng.integers(2, 65))
            theta = float(rng.uniform(5, 75)) * DEG
            bw = float(rng.uniform(0.02, 0.3))
            cfg = ArrayConfig(n, theta)
            spec = SignalSpec(bw, oversample=8, seed=1)
            length = 4096
            k = int(rng.integers(-length // 8, length // 8))
            tx, df = integer_bin_tone(cfg, spec, length, k)
            aligned = phase_align(propagate(tx, cfg, spec, check_guard=False))
            magnitude = np.abs(aligned.streams.mean(axis=0)[0])
            expected = space_factor_at_steer(cfg, 1.0 + df)
            assert magnitude == pytest.approx(expected, abs=1e-6)

    def test_residual_group_delay_survives_alignment(self):
        # cross-correlation oracle: after alignment element n still lags
        # element 0 by n delay steps
        rng = np.random.default_rng(7)
        cfg = ArrayConfig(8, 30 * DEG)
        spec = SignalSpec(0.2, oversample=8, seed=1)
        tx = guarded_burst(rng, 4096, 64)
        aligned = phase_align(propagate(tx, cfg, spec))
        dtau = element_delay_samples(cfg, spec, 8.0)
        for n in (1, 4, 7):
            lags = np.linspace(n * dtau - 1.0, n * dtau + 1.0, 81)
            scores = [
                abs(np.vdot(fractional_delay(tx, lag).samples, aligned.streams[n]))
                for lag in lags
            ]
            best = lags[int(np.argmax(scores))]
            assert best == pytest.approx(n * dtau, abs=0.05)


class TestAddNoise:
    def test_noiseless_sentinel_identity(self):
        rng = np.random.default_rng(8)
        cfg = ArrayConfig(4, 20 * DEG)
        spec = SignalSpec(0.1, seed=1)
        streams = propagate(guarded_burst(rng, 512, 16), cfg, spec)
        out = add_noise(streams, np.inf, seed=3)
        assert np.array_equal(out.streams, streams.streams)

    def test_snr_gain_from_coherent_sum(self):
        # identical narrowband streams with independent noise: combining
        # 8 elements buys 10 log10(8) = 9.03 dB of SNR
        cfg = ArrayConfig(8, 0.0)
        spec = SignalSpec(0.1, seed=1)
        n_samp = 200_000
        tx = ComplexSignal(np.ones(n_samp, dtype=complex), sample_rate=8.0)
        noisy = add_noise(propagate(tx, cfg, spec), 10.0, seed=4)
        combined = noisy.streams.mean(axis=0)
        noise = combined - 1.0
        snr_out = 10 * np.log10(1.0 / np.mean(np.abs(noise) ** 2))
        assert snr_out == pytest.approx(10.0 + 9.03, abs=0.2)

    def test_per_element_noise_uncorrelated(self):
        cfg = ArrayConfig(4, 0.0)
        spec = SignalSpec(0.1, seed=1)
        tx = ComplexSignal(np.ones(100_000, dtype=complex), sample_rate=8.0)
        noisy = add_noise(propagate(tx, cfg, spec), 0.0, seed=5)
        noise = noisy.streams - 1.0
        for a in range(4):
            for b in range(a + 1, 4):
                rho = np.vdot(noise[a], noise[b]) / np.sqrt(
                    np.vdot(noise[a], noise[a]).real * np.vdot(noise[b], noise[b]).real
                )
                assert abs(rho) < 0.01

    def test_deterministic_per_element_seeding(self):
        rng = np.random.default_rng(9)
        cfg = ArrayConfig(3, 10 * DEG)
        spec = SignalSpec(0.1, seed=1)
        streams = propagate(guarded_burst(rng, 512, 16), cfg, spec)
        a = add_noise(streams, 5.0, seed=7)
        b = add_noise(streams, 5.0, seed=7)
        assert np.array_equal(a.streams, b.streams)


class TestSyncMeanDelay:
    def test_centres_the_delay_spread(self):
        rng = np.random.default_rng(10)
        cfg = ArrayConfig(5, 30 * DEG)
        spec = SignalSpec(0.2, oversample=8, seed=1)
        tx = guarded_burst(rng, 2048, 64)
        synced = sync_mean_delay(phase_align(propagate(tx, cfg, spec)))
        dtau = element_delay_samples(cfg, spec, 8.0)
        # middle element of an odd array lands back on the tx timing
        mid = 2
        assert np.max(np.abs(synced.streams[mid] - tx.samples)) < 1e-9

    def test_broadside_noop(self):
        rng = np.random.default_rng(11)
        cfg = ArrayConfig(4, 0.0)
        spec = SignalSpec(0.1, seed=1)
        streams = propagate(guarded_burst(rng, 256, 8), cfg, spec)
        assert sync_mean_delay(streams) is streams
