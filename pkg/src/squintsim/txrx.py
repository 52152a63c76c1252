"""End-to-end receive chains: single-carrier QAM and OFDM.

Both chains share the receiver conventions:

* ``snr_db`` is the per-channel symbol-level (in-band) SNR, so a single
  element receives with EVM = -snr_db and an N-element broadside array
  with EVM = -(snr_db + 10 log10 N). The white per-sample SNR handed to
  the channel is adjusted by the oversampling factor accordingly.
* Symbol timing locks to the centroid of the array's systematic delay
  spread (what a synchronizer tracking the combined signal converges to);
  OFDM DFT windows then sit at the conventional cyclic-prefix end.
* The self-interference ratio (SSIR) of a run is the modulation error
  ratio of a paired noiseless re-run with identical data and seeds.

Runs are pure functions of (configs, seed); sweep points may execute
concurrently when every point derives its own seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .analytic import AnalyticReport, ArrayConfig
from .combine import (
    FULL_IDFT,
    PHASE_SUM,
    REDUCED_IDFT,
    CombinerSpec,
    full_idft_weights,
    reduced_idft_weights,
)
from .dsp import (
    ComplexSignal,
    EvmReport,
    SignalSpec,
    derive_seed,
    measure_evm,
    qam_map,
    rrc_taps,
    _evm_fit,
)
from .errors import CombinerRequiresOfdm, DimensionMismatch, IndivisibleSizing
from .ofdm_spec import OfdmSpec
from .wavefront import (
    ElementStreams,
    add_noise,
    element_delay_samples,
    phase_align,
    propagate,
    sync_mean_delay,
)

_CONSTELLATION_CAP = 4096


@dataclass
class ToneMetrics:
    """Per-subcarrier quality of an OFDM run."""

    tone_index: int
    evm_db: float
    ssir_db: float


@dataclass
class SimReport:
    """Outcome of one simulated link.

    ``constellation`` holds fitted received symbols next to their
    references, shape (K, 2) complex. ``analytic`` echoes the closed-form
    predictions for the same configuration; ``config`` echoes the resolved
    run parameters.
    """

    overall_evm_db: float
    overall_ssir_db: float
    per_tone: list[ToneMetrics] | None
    constellation: np.ndarray
    analytic: AnalyticReport
    config: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# OFDM modulation
# ---------------------------------------------------------------------------

def _tone_bins(ofdm: OfdmSpec, oversample: int) -> np.ndarray:
    # tone m occupies the signed FFT bin (m - m0) of the oversampled symbol
    length = ofdm.m_carriers * oversample
    return (np.arange(ofdm.m_carriers) - ofdm.center_tone) % length


def ofdm_modulate(grid: np.ndarray, ofdm: OfdmSpec, oversample: int = 1) -> ComplexSignal:
    """Serialize a (symbols x tones) grid into a cyclic-prefixed frame.

    Tone m rides the complex exponential of signed frequency
    (m - center_tone) subcarrier spacings; the transform is unitary so the
    grid and frame carry equal energy. ``oversample`` multiplies the
    critical sampling rate (the returned ``sample_rate`` equals it).
    """
    grid = np.asarray(grid, dtype=np.complex128)
    if grid.ndim != 2 or grid.shape[1] != ofdm.m_carriers:
        raise DimensionMismatch(
            f"grid must be (n_symbols, {ofdm.m_carriers}), got {grid.shape}"
        )
    m, q = ofdm.m_carriers, oversample
    spec = np.zeros((grid.shape[0], m * q), dtype=np.complex128)
    spec[:, _tone_bins(ofdm, q)] = grid
    core = np.fft.ifft(spec, axis=1) * math.sqrt(m * q)
    cp = core[:, m * q - ofdm.cp_ratio_num * q:]
    blocks = np.concatenate([cp, core], axis=1)
    return ComplexSignal(blocks.ravel(), sample_rate=float(q))


def ofdm_demodulate(signal: ComplexSignal, ofdm: OfdmSpec, oversample: int = 1) -> np.ndarray:
    """Recover the tone grid from a frame produced by :func:`ofdm_modulate`.

    DFT windows start right after each cyclic prefix, so a circular delay
    of up to the prefix length appears as a pure per-tone phase ramp
    ``exp(-j 2 pi (m - m0) d / M)`` with no inter-carrier interference.
    """
    x = signal.samples
    m, q = ofdm.m_carriers, oversample
    block = (m + ofdm.cp_ratio_num) * q
    if len(x) % block:
        raise DimensionMismatch(
            f"frame length {len(x)} is not a whole number of {block}-sample blocks"
        )
    blocks = x.reshape(-1, block)
    cores = blocks[:, ofdm.cp_ratio_num * q:]
    spec = np.fft.fft(cores, axis=1) / math.sqrt(m * q)
    return spec[:, _tone_bins(ofdm, q)]


def _demod_grids(streams: ElementStreams, ofdm: OfdmSpec, oversample: int,
                 guard: int, n_sym: int) -> np.ndarray:
    """Per-element demodulated grids, shape (N, n_sym, M)."""
    m, q = ofdm.m_carriers, oversample
    block = (m + ofdm.cp_ratio_num) * q
    x = streams.streams[:, guard:guard + n_sym * block]
    cores = x.reshape(streams.n_elements, n_sym, block)[:, :, ofdm.cp_ratio_num * q:]
    spec = np.fft.fft(cores, axis=2) / math.sqrt(m * q)
    return spec[:, :, _tone_bins(ofdm, q)]


# ---------------------------------------------------------------------------
# Shared chain pieces
# ---------------------------------------------------------------------------

def _per_sample_snr(snr_db: float, oversample: int) -> float:
    # white noise fills the oversampled band; only 1/oversample of it lands
    # in the signal band, so the per-sample request is lowered to match
    if np.isinf(snr_db):
        return snr_db
    return snr_db - 10.0 * math.log10(oversample)


def _prepared_streams(tx: ComplexSignal, cfg: ArrayConfig, spec: SignalSpec,
                      snr_db: float, noise_seed) -> ElementStreams:
    streams = propagate(tx, cfg, spec)
    streams = add_noise(streams, _per_sample_snr(snr_db, tx.sample_rate), noise_seed)
    return sync_mean_delay(phase_align(streams))


def _fitted_constellation(rx: np.ndarray, ref: np.ndarray) -> np.ndarray:
    c, _ = _evm_fit(rx, ref)
    k = min(len(rx), _CONSTELLATION_CAP)
    out = np.empty((k, 2), dtype=np.complex128)
    out[:, 0] = (c * rx)[:k]
    out[:, 1] = ref[:k]
    return out


def _rms_db(values_db: np.ndarray) -> float:
    return 10.0 * math.log10(np.mean(10.0 ** (np.asarray(values_db) / 10.0)))


# ---------------------------------------------------------------------------
# Single-carrier chain
# ---------------------------------------------------------------------------

def _sc_transmit(spec: SignalSpec, cfg: ArrayConfig) -> tuple[ComplexSignal, np.ndarray, int, np.ndarray]:
    rng = np.random.default_rng(spec.seed)
    indices = rng.integers(0, spec.modulation_order, spec.n_symbols)
    symbols = qam_map(indices, spec.modulation_order).samples
    os = spec.oversample
    spread = (cfg.n_elements - 1) * element_delay_samples(cfg, spec, os)
    guard_syms = int(np.ceil(spread / os)) + spec.rrc_span + 4
    up = np.zeros((spec.n_symbols + 2 * guard_syms) * os, dtype=np.complex128)
    up[guard_syms * os::os][: spec.n_symbols] = symbols
    taps = rrc_taps(spec.rrc_rolloff, spec.rrc_span, os)
    shaped = np.convolve(up, taps)
    tx = ComplexSignal(shaped, sample_rate=float(os))
    # symbol k peaks at this index after TX shaping plus matched filtering
    sample_idx = guard_syms * os + (len(taps) - 1) + np.arange(spec.n_symbols) * os
    return tx, symbols, guard_syms, sample_idx


def _sc_receive(streams: ElementStreams, spec: SignalSpec, sample_idx: np.ndarray) -> np.ndarray:
    combined = streams.streams.mean(axis=0)
    taps = rrc_taps(spec.rrc_rolloff, spec.rrc_span, spec.oversample)
    matched = np.convolve(combined, taps)
    return matched[sample_idx]


def run_single_carrier(
    cfg: ArrayConfig,
    spec: SignalSpec,
    snr_db: float,
    combiner: CombinerSpec = CombinerSpec.phase_shifter_sum(),
) -> SimReport:
    """Simulate the single-carrier link of an N-element phased receiver.

    Chain: QAM mapping, root-raised-cosine shaping, plane-wave reception
    with progressive delays, per-element noise, phase-shifter alignment,
    sum over elements, matched filtering and centroid-timed symbol
    sampling, then EVM against the transmitted symbols.
    """
    if combiner.kind != PHASE_SUM:
        raise CombinerRequiresOfdm("IDFT combining requires the OFDM chain")
    tx, symbols, _, sample_idx = _sc_transmit(spec, cfg)
    noise_seed = derive_seed(spec.seed, 1)

    def one_pass(snr: float) -> np.ndarray:
        streams = _prepared_streams(tx, cfg, spec, snr, noise_seed)
        return _sc_receive(streams, spec, sample_idx)

    rx_clean = one_pass(np.inf)
    ssir_db = measure_evm(rx_clean, symbols).mer_db
    if np.isinf(snr_db):
        rx = rx_clean
        evm_db = -ssir_db
    else:
        rx = one_pass(snr_db)
        evm_db = measure_evm(rx, symbols).evm_db
    return SimReport(
        overall_evm_db=evm_db,
        overall_ssir_db=ssir_db,
        per_tone=None,
        constellation=_fitted_constellation(rx, symbols),
        analytic=analytic.report(cfg, spec.fractional_bandwidth),
        config={},
    )


# ---------------------------------------------------------------------------
# OFDM chain
# ---------------------------------------------------------------------------

def _ofdm_transmit(spec: SignalSpec, ofdm: OfdmSpec, cfg: ArrayConfig):
    rng = np.random.default_rng(spec.seed)
    shape = (ofdm.n_ofdm_symbols, ofdm.m_carriers)
    indices = rng.integers(0, spec.modulation_order, shape)
    grid = qam_map(indices.ravel(), spec.modulation_order).samples.reshape(shape)
    q = spec.oversample
    frame = ofdm_modulate(grid, ofdm, q).samples
    spread = (cfg.n_elements - 1) * element_delay_samples(cfg, spec, q)
    guard = int(np.ceil(spread)) + 16
    padded = np.concatenate(
        [np.zeros(guard, np.complex128), frame, np.zeros(guard, np.complex128)]
    )
    return ComplexSignal(padded, sample_rate=float(q)), grid, guard


def _combine_grids(grids: np.ndarray, streams: ElementStreams, ofdm: OfdmSpec,
                   combiner: CombinerSpec) -> np.ndarray:
    """Apply a combiner in the tone domain.

    The DFT is linear, so demodulating each element and weighting tones is
    exactly the per-stream time-domain combining of
    :mod:`squintsim.combine`, kept in this form for memory efficiency.
    """
    n = streams.n_elements
    if combiner.kind == PHASE_SUM:
        return grids.mean(axis=0)
    if combiner.kind == FULL_IDFT:
        w = full_idft_weights(streams.cfg, streams.spec, ofdm)
        return np.einsum("mn,njm->jm", w.matrix, grids) / n
    n_sub, m_group = combiner.resolve_sizing(
        streams.cfg, ofdm, streams.spec.fractional_bandwidth
    )
    if n % n_sub or ofdm.m_carriers % m_group:
        raise IndivisibleSizing(
            f"sizing ({n_sub}, {m_group}) does not divide (N={n}, M={ofdm.m_carriers})"
        )
    branch = grids.reshape(n // n_sub, n_sub, *grids.shape[1:]).sum(axis=1)
    w = reduced_idft_weights(streams.cfg, streams.spec, ofdm, n_sub, m_group)
    out = np.empty(grids.shape[1:], dtype=np.complex128)
    for g in range(w.matrix.shape[0]):
        tones = slice(g * m_group, (g + 1) * m_group)
        out[:, tones] = np.einsum("r,rjm->jm", w.matrix[g], branch[:, :, tones]) / n
    return out


def _per_tone_evm(rx_grid: np.ndarray, ref_grid: np.ndarray) -> np.ndarray:
    return np.array(
        [measure_evm(rx_grid[:, m], ref_grid[:, m]).evm_db for m in range(rx_grid.shape[1])]
    )


def run_ofdm(
    cfg: ArrayConfig,
    spec: SignalSpec,
    ofdm: OfdmSpec,
    snr_db: float,
    combiner: CombinerSpec = CombinerSpec.phase_shifter_sum(),
) -> SimReport:
    """Simulate the OFDM link with the selected spatial combiner.

    Chain: per-tone QAM grid, oversampled inverse transform with cyclic
    prefix, plane-wave reception, per-element noise, phase alignment,
    centroid timing, combining, prefix-stripped DFT windows, then per-tone
    EVM against the transmitted grid. The overall figure is the RMS across
    all tones and symbols; SSIR comes from the paired noiseless pass.
    """
    tx, ref_grid, guard = _ofdm_transmit(spec, ofdm, cfg)
    noise_seed = derive_seed(spec.seed, 1)
    q = spec.oversample

    def one_pass(snr: float) -> np.ndarray:
        streams = _prepared_streams(tx, cfg, spec, snr, noise_seed)
        grids = _demod_grids(streams, ofdm, q, guard, ofdm.n_ofdm_symbols)
        return _combine_grids(grids, streams, ofdm, combiner)

    rx_clean = one_pass(np.inf)
    ssir_tones = -_per_tone_evm(rx_clean, ref_grid)
    if np.isinf(snr_db):
        rx = rx_clean
        evm_tones = -ssir_tones
    else:
        rx = one_pass(snr_db)
        evm_tones = _per_tone_evm(rx, ref_grid)
    per_tone = [
        ToneMetrics(m, float(evm_tones[m]), float(ssir_tones[m]))
        for m in range(ofdm.m_carriers)
    ]
    # constellation from per-tone fitted symbols, subsampled evenly
    fitted = np.empty_like(rx)
    for m in range(ofdm.m_carriers):
        c, _ = _evm_fit(rx[:, m], ref_grid[:, m])
        fitted[:, m] = c * rx[:, m]
    flat_rx, flat_ref = fitted.ravel(), ref_grid.ravel()
    stride = max(1, len(flat_rx) // _CONSTELLATION_CAP)
    constellation = np.stack([flat_rx[::stride], flat_ref[::stride]], axis=1)
    return SimReport(
        overall_evm_db=float(_rms_db(evm_tones)),
        overall_ssir_db=float(-_rms_db(-ssir_tones)),
        per_tone=per_tone,
        constellation=constellation,
        analytic=analytic.report(cfg, spec.fractional_bandwidth, ofdm.m_carriers),
        config={},
    )
