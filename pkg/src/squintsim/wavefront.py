"""The array propagation channel.

Splits a transmitted baseband signal into per-element received streams
carrying the progressive group delay and carrier phase of a plane wave
arriving from the steering direction, then models the phase-shifter
correction and per-element receiver noise.

Per-element processing is independent (noise uses a per-element derived
seed), so elements may be processed in parallel with results identical to
sequential execution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic import ArrayConfig
from .dsp import ComplexSignal, SignalSpec, awgn, _fractional_delay_array
from .errors import InsufficientGuard


@dataclass(eq=False)
class ElementStreams:
    """Per-element received streams of equal length.

    ``streams`` is an (N, L) complex array, row n holding element n.
    ``sample_rate`` is samples per symbol period, inherited from the
    transmitted signal.
    """

    streams: np.ndarray
    cfg: ArrayConfig
    spec: SignalSpec
    sample_rate: float

    def __post_init__(self):
        self.streams = np.asarray(self.streams, dtype=np.complex128)
        if self.streams.ndim != 2:
            raise ValueError("streams must be a 2-D (element, sample) array")
        if self.streams.shape[0] != self.cfg.n_elements:
            raise ValueError("stream count must equal the element count")

    @property
    def n_elements(self) -> int:
        return self.streams.shape[0]

    def element(self, n: int) -> ComplexSignal:
        return ComplexSignal(self.streams[n], sample_rate=self.sample_rate)


def element_delay_samples(cfg: ArrayConfig, spec: SignalSpec, sample_rate: float) -> float:
    """Per-element-step group delay converted to samples.

    The delay is (d/lambda) sin(theta0) carrier cycles; one symbol period
    spans 1/BW cycles and ``sample_rate`` samples.
    """
    return cfg.delay_per_element_cycles * spec.fractional_bandwidth * sample_rate


def total_delay_spread_samples(cfg: ArrayConfig, spec: SignalSpec, sample_rate: float) -> float:
    """Group-delay spread between the first and last element, in samples."""
    return (cfg.n_elements - 1) * element_delay_samples(cfg, spec, sample_rate)


def _carrier_phases(cfg: ArrayConfig) -> np.ndarray:
    # passband delay at the carrier appears at baseband as this rotation
    n = np.arange(cfg.n_elements)
    return 2.0 * np.pi * n * cfg.delay_per_element_cycles


def propagate(
    tx: ComplexSignal, cfg: ArrayConfig, spec: SignalSpec, check_guard: bool = True
) -> ElementStreams:
    """Receive ``tx`` on every element of the array.

    Element n (0-based) sees the signal delayed by n steps of the
    progressive group delay and rotated by the matching carrier phase.
    Element 0 equals ``tx`` exactly; at broadside every element does.
    Delays are circular, so the signal must carry zero guards at both ends
    at least as long as the total delay spread; anything else raises
    :class:`InsufficientGuard`. Pass ``check_guard=False`` only for
    signals that are circularly consistent by construction (exact-bin
    tones).
    """
    x = tx.samples
    n_el = cfg.n_elements
    dtau = element_delay_samples(cfg, spec, tx.sample_rate)
    if dtau == 0.0:
        streams = np.tile(x, (n_el, 1))
        return ElementStreams(streams, cfg, spec, tx.sample_rate)
    need = int(np.ceil((n_el - 1) * abs(dtau))) + 1
    if check_guard and len(x):
        if need >= len(x) // 4:
            raise InsufficientGuard("signal too short for the array's delay spread")
        if np.any(x[:need] != 0) or np.any(x[-need:] != 0):
            raise InsufficientGuard(
                f"leading and trailing {need} samples must be zero guards"
            )
    streams = np.empty((n_el, len(x)), dtype=np.complex128)
    streams[0] = x
    spectrum = np.fft.fft(x)
    freqs = np.fft.fftfreq(len(x))
    rot = np.exp(-1j * _carrier_phases(cfg))
    for n in range(1, n_el):
        ramp = np.exp(-2j * np.pi * freqs * (n * dtau))
        streams[n] = rot[n] * np.fft.ifft(spectrum * ramp)
    return ElementStreams(streams, cfg, spec, tx.sample_rate)


def phase_align(streams: ElementStreams) -> ElementStreams:
    """Undo the per-element carrier phase, leaving group delays untouched.

    This is the phase-shifter correction: after it, a zero-bandwidth tone
    combines fully coherently while wideband content still carries the
    progressive delay.
    """
    rot = np.exp(1j * _carrier_phases(streams.cfg))
    return ElementStreams(
        streams.streams * rot[:, None], streams.cfg, streams.spec, streams.sample_rate
    )


def add_noise(streams: ElementStreams, snr_db: float, seed) -> ElementStreams:
    """Independent per-element AWGN at the given per-sample SNR.

    Each element draws from its own generator seeded by (seed, element
    index), so results do not depend on processing order. ``snr_db = inf``
    returns the streams unchanged.
    """
    if np.isinf(snr_db):
        return ElementStreams(
            streams.streams.copy(), streams.cfg, streams.spec, streams.sample_rate
        )
    out = np.empty_like(streams.streams)
    for n in range(streams.n_elements):
        out[n] = awgn(
            ComplexSignal(streams.streams[n], streams.sample_rate), snr_db, (seed, n)
        ).samples
    return ElementStreams(out, streams.cfg, streams.spec, streams.sample_rate)


def sync_mean_delay(streams: ElementStreams) -> ElementStreams:
    """Receiver timing recovery: advance every stream by the array's mean
    group delay, centring the residual delay spread on zero.

    This models a synchronizer locked to the combined signal. Circular,
    like :func:`propagate`, and covered by the same guard requirement.
    """
    dtau = element_delay_samples(streams.cfg, streams.spec, streams.sample_rate)
    tau_mean = (streams.n_elements - 1) / 2.0 * dtau
    if tau_mean == 0.0:
        return streams
    out = np.empty_like(streams.streams)
    for n in range(streams.n_elements):
        out[n] = _fractional_delay_array(streams.streams[n], -tau_mean)
    return ElementStreams(out, streams.cfg, streams.spec, streams.sample_rate)
