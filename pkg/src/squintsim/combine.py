"""Spatial combiners: phase-shifter sum, full IDFT, and reduced IDFT.

The IDFT combiners weight element n for tone m (centre tone m0) by
``exp(+j 2 pi n (d/lambda) sin(theta0) (BW/M) (m - m0))``, which exactly
cancels the residual per-tone group-delay phase left after carrier
alignment and restores full coherence for every subcarrier. The reduced
form first sums contiguous sub-arrays of ``n_sub`` elements and serves
contiguous groups of ``m_group`` tones per output, trading a bounded EVM
ripple for an IDFT matrix shrunk to M_r x N_r.

Weight generation and per-output combining are independent per output row;
combining uses fixed-order numpy reductions so parallel callers reproduce
sequential results exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .analytic import ArrayConfig, reduced_sizing
from .dsp import ComplexSignal, SignalSpec
from .errors import IndivisibleSizing
from .ofdm_spec import OfdmSpec
from .wavefront import ElementStreams

PHASE_SUM = "ps"
FULL_IDFT = "idft"
REDUCED_IDFT = "reduced"
_KINDS = (PHASE_SUM, FULL_IDFT, REDUCED_IDFT)


@dataclass(frozen=True)
class CombinerSpec:
    """Which spatial combiner a simulation run uses.

    For the reduced IDFT, ``n_sub`` (elements per pre-combined sub-array)
    and ``m_group`` (tones per IDFT output) may be left None to take the
    automatic sizing from :func:`squintsim.analytic.reduced_sizing`.
    """

    kind: str = PHASE_SUM
    n_sub: int | None = None
    m_group: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}")
        if self.kind != REDUCED_IDFT and (self.n_sub or self.m_group):
            raise ValueError("sub-array sizing only applies to the reduced IDFT")

    @classmethod
    def phase_shifter_sum(cls) -> "CombinerSpec":
        return cls(PHASE_SUM)

    @classmethod
    def full_idft(cls) -> "CombinerSpec":
        return cls(FULL_IDFT)

    @classmethod
    def reduced_idft(cls, n_sub: int | None = None, m_group: int | None = None) -> "CombinerSpec":
        return cls(REDUCED_IDFT, n_sub=n_sub, m_group=m_group)

    def resolve_sizing(self, cfg: ArrayConfig, ofdm: OfdmSpec, bw_sig: float) -> tuple[int, int]:
        """Concrete (n_sub, m_group), applying auto sizing where needed."""
        n_sub, m_group = self.n_sub, self.m_group
        if n_sub is None or m_group is None:
            auto = reduced_sizing(cfg, ofdm.m_carriers, bw_sig)
            n_sub = n_sub if n_sub is not None else auto.n_sub
            m_group = m_group if m_group is not None else auto.m_group
        return n_sub, m_group


@dataclass(eq=False)
class IdftWeights:
    """Unit-modulus combining weights, one row per output stream.

    ``matrix[r, n]`` weights element (or sub-array) n for output r;
    ``tone_offsets[r]`` is the centre-tone offset the row corrects for.
    """

    matrix: np.ndarray
    tone_offsets: np.ndarray

    def __post_init__(self):
        assert np.allclose(np.abs(self.matrix), 1.0, atol=1e-12)


def _tone_phase_step(cfg: ArrayConfig, spec: SignalSpec, ofdm: OfdmSpec) -> float:
    # per-element, per-tone-offset phase in turns: delay times subcarrier spacing
    return cfg.delay_per_element_cycles * spec.fractional_bandwidth / ofdm.m_carriers


def full_idft_weights(cfg: ArrayConfig, spec: SignalSpec, ofdm: OfdmSpec) -> IdftWeights:
    """Weight matrix of the full combiner, M rows by N columns."""
    step = _tone_phase_step(cfg, spec, ofdm)
    offsets = np.arange(ofdm.m_carriers) - ofdm.center_tone
    n = np.arange(cfg.n_elements)
    matrix = np.exp(2j * np.pi * step * np.outer(offsets, n))
    return IdftWeights(matrix, offsets.astype(float))


def reduced_idft_weights(
    cfg: ArrayConfig, spec: SignalSpec, ofdm: OfdmSpec, n_sub: int, m_group: int
) -> IdftWeights:
    """Weight matrix of the reduced combiner, M_r rows by N_r columns.

    Row g corrects for the midpoint tone of group g (tones
    [g*m_group, (g+1)*m_group)) using the sub-array stride delay.
    """
    _check_divisible(cfg, ofdm, n_sub, m_group)
    m_r = ofdm.m_carriers // m_group
    n_r = cfg.n_elements // n_sub
    step = _tone_phase_step(cfg, spec, ofdm)
    centers = np.arange(m_r) * m_group + (m_group - 1) / 2.0 - ofdm.center_tone
    strides = np.arange(n_r) * n_sub
    matrix = np.exp(2j * np.pi * step * np.outer(centers, strides))
    return IdftWeights(matrix, centers)


def _check_divisible(cfg: ArrayConfig, ofdm: OfdmSpec, n_sub: int, m_group: int):
    if n_sub < 1 or cfg.n_elements % n_sub:
        raise IndivisibleSizing(f"n_sub = {n_sub} must divide N = {cfg.n_elements}")
    if m_group < 1 or ofdm.m_carriers % m_group:
        raise IndivisibleSizing(f"m_group = {m_group} must divide M = {ofdm.m_carriers}")


def phase_sum(streams: ElementStreams) -> ComplexSignal:
    """Elementwise sum over the array divided by N, so a coherent
    narrowband broadside signal combines with unit gain."""
    return ComplexSignal(streams.streams.mean(axis=0), sample_rate=streams.sample_rate)


def full_idft_combine(streams: ElementStreams, ofdm: OfdmSpec) -> list[ComplexSignal]:
    """Produce the M output streams of the full combiner.

    Output m is meaningful only at tone m; the OFDM demodulator keeps just
    that tone from each stream. Row m0 has all-ones weights and equals the
    plain phase-shifter sum.
    """
    w = full_idft_weights(streams.cfg, streams.spec, ofdm)
    out = w.matrix @ streams.streams / streams.n_elements
    return [ComplexSignal(row, sample_rate=streams.sample_rate) for row in out]


def presum_subarrays(streams: ElementStreams, n_sub: int) -> np.ndarray:
    """Stage one of the reduced combiner: sum contiguous blocks of
    ``n_sub`` elements into N_r branch streams (no normalization)."""
    if streams.n_elements % n_sub:
        raise IndivisibleSizing(f"n_sub = {n_sub} must divide N = {streams.n_elements}")
    n_r = streams.n_elements // n_sub
    return streams.streams.reshape(n_r, n_sub, -1).sum(axis=1)


def reduced_idft_combine(
    streams: ElementStreams, ofdm: OfdmSpec, n_sub: int, m_group: int
) -> tuple[list[ComplexSignal], list[range]]:
    """Two-stage reduced combiner.

    Returns the M_r output streams and the contiguous tone ranges each one
    demodulates. Degenerate sizings recover the other combiners exactly:
    (n_sub=N, m_group=M) is the phase-shifter sum, (1, 1) the full IDFT.
    """
    _check_divisible(streams.cfg, ofdm, n_sub, m_group)
    branches = presum_subarrays(streams, n_sub)
    w = reduced_idft_weights(streams.cfg, streams.spec, ofdm, n_sub, m_group)
    out = w.matrix @ branches / streams.n_elements
    groups = [range(g * m_group, (g + 1) * m_group) for g in range(out.shape[0])]
    return (
        [ComplexSignal(row, sample_rate=streams.sample_rate) for row in out],
        groups,
    )


def write_weights_csv(weights: IdftWeights, path) -> None:
    """Export weight phases in radians, one row per output stream."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        n_cols = weights.matrix.shape[1]
        writer.writerow(["output"] + [f"el{n}" for n in range(n_cols)])
        for r, row in enumerate(np.angle(weights.matrix)):
            writer.writerow([r] + [f"{p:.9f}" for p in row])
