"""Optical building blocks and canonical states of the time-bin source.

Beam-splitter convention (used everywhere): for a coupler with inputs
``(a, b)`` and outputs ``(c, d)`` and transmission ratio ``eta``::

    a^dag -> sqrt(eta) c^dag + i sqrt(1 - eta) d^dag
    b^dag -> i sqrt(1 - eta) c^dag + sqrt(eta) d^dag

Time bins are integers in units of the base delay. Element factories act on
a window of bins (default: every allowed bin), so they can be applied to any
state whose photons fall inside that window.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from . import fock
from .errors import ConfigError, check_int, check_range
from .fock import Band, Element, FockState, MixedState, Mode

BELL_LABELS = ("psi+", "psi-", "phi+", "phi-")


@dataclass(frozen=True)
class SourceConfig:
    eta: float = 0.5
    phi: float = 0.0
    delay_bins: int = 1
    mu: float = 1.0
    g: float = 0.1

    def __post_init__(self):
        check_range("eta", self.eta, 0.0, 1.0)
        check_range("phi", self.phi, -math.inf, math.inf)
        check_int("delay_bins", self.delay_bins, 1, fock.MAX_TIMEBIN // 2)
        check_range("mu", self.mu, 0.0, 1.0)
        check_range("g", self.g, 0.0, 1.0, lo_open=True)

    @property
    def amplitudes(self) -> tuple[complex, complex]:
        """Short/long amplitudes of the prepared pump state."""
        return math.sqrt(1 - self.eta), math.sqrt(self.eta) * cmath.exp(1j * self.phi)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class AnalyzerConfig:
    phase: float = 0.0
    delay_bins: int = 1
    switch: bool = False

    def __post_init__(self):
        check_range("phase", self.phase, -math.inf, math.inf)
        check_int("delay_bins", self.delay_bins, 1, fock.MAX_TIMEBIN // 2)
        if not isinstance(self.switch, bool):
            raise ConfigError("switch", f"expected true/false, got {self.switch!r}")

    def to_dict(self):
        return asdict(self)


def _window(shift: int = 0) -> range:
    return range(0, fock.MAX_TIMEBIN - shift + 1)


def coupler(a: str, b: str, c: str, d: str, eta: float = 0.5, bins: Iterable[int] | None = None,
            band: Band = Band.DOWN) -> Element:
    """Fiber coupler acting independently in every time bin of ``bins``."""
    bins = list(_window() if bins is None else bins)
    t, r = math.sqrt(eta), 1j * math.sqrt(1 - eta)
    block = np.array([[t, r], [r, t]])
    ins, outs = [], []
    for k in bins:
        ins += [Mode(a, k, band), Mode(b, k, band)]
        outs += [Mode(c, k, band), Mode(d, k, band)]
    mat = np.kron(np.eye(len(bins)), block)
    return Element(ins, outs, mat, f"coupler({a},{b})")


def phase_shift(channel: str, phi: float, bins: Iterable[int] | None = None, band: Band = Band.DOWN,
                out_channel: str | None = None) -> Element:
    bins = list(_window() if bins is None else bins)
    out = channel if out_channel is None else out_channel
    ins = [Mode(channel, k, band) for k in bins]
    outs = [Mode(out, k, band) for k in bins]
    return Element(ins, outs, cmath.exp(1j * phi) * np.eye(len(bins)), f"phase({channel})")


def delay_line(channel: str, delay: int, out_channel: str, bins: Iterable[int] | None = None,
               band: Band = Band.DOWN) -> Element:
    """Shift every photon on ``channel`` by ``delay`` bins onto ``out_channel``."""
    bins = list(_window(delay) if bins is None else bins)
    ins = [Mode(channel, k, band) for k in bins]
    outs = [Mode(out_channel, k + delay, band) for k in bins]
    return Element(ins, outs, np.eye(len(bins)), f"delay({channel},{delay})")


def route_switch(channel: str, out_a: str, out_b: str, to_b: Iterable[int], bins: Iterable[int] | None = None,
                 band: Band = Band.DOWN) -> Element:
    """Ideal time-synchronized switch: bins in ``to_b`` go to ``out_b``, the rest to ``out_a``."""
    bins = list(_window() if bins is None else bins)
    to_b = set(to_b)
    ins = [Mode(channel, k, band) for k in bins]
    outs = [Mode(o, k, band) for k in bins for o in (out_a, out_b)]
    mat = np.zeros((len(outs), len(ins)))
    for i, k in enumerate(bins):
        mat[2 * i + (1 if k in to_b else 0), i] = 1.0
    return Element(ins, outs, mat, f"switch({channel})")


def merge_switch(in_a: str, in_b: str, out: str, dump: str, take_b: Iterable[int],
                 bins: Iterable[int] | None = None, band: Band = Band.DOWN) -> Element:
    """Ideal switch joining two channels: ``in_b`` is passed in bins ``take_b``, ``in_a`` otherwise."""
    bins = list(_window() if bins is None else bins)
    take_b = set(take_b)
    ins, outs = [], []
    for k in bins:
        ins += [Mode(in_a, k, band), Mode(in_b, k, band)]
        outs += [Mode(out, k, band), Mode(dump, k, band)]
    mat = np.zeros((len(outs), len(ins)))
    for i, k in enumerate(bins):
        if k in take_b:
            mat[2 * i, 2 * i + 1] = mat[2 * i + 1, 2 * i] = 1.0
        else:
            mat[2 * i, 2 * i] = mat[2 * i + 1, 2 * i + 1] = 1.0
    return Element(ins, outs, mat, f"merge({in_a},{in_b})")


def preparation_device(cfg: SourceConfig, in_channel: str, out_channel: str, band: Band = Band.PUMP,
                       lossless: bool = True) -> list[Element]:
    """Unbalanced Mach-Zehnder that prepares alpha|short> + beta|long>.

    The coupler's cross port feeds the short arm, so ``|alpha|^2/|beta|^2 =
    (1 - eta)/eta``. The phase shifter carries a fixed offset that cancels the
    coupler quadrature, so the emitted relative phase is exactly ``cfg.phi``.
    With ``lossless=False`` the switch is replaced by a 50/50 coupler and half
    the light leaves through ``<out>.lost``.
    """
    d = cfg.delay_bins
    short, long_, long_d = f"{out_channel}.short", f"{out_channel}.long", f"{out_channel}.long_d"
    offset = math.pi / 2 if lossless else 0.0
    elems = [
        coupler(in_channel, f"{in_channel}.aux", long_, short, cfg.eta, band=band),
        delay_line(long_, d, long_d, band=band),
        phase_shift(long_d, cfg.phi + offset, band=band),
    ]
    if lossless:
        elems.append(merge_switch(short, long_d, out_channel, f"{out_channel}.dump",
                                  take_b=range(d, fock.MAX_TIMEBIN + 1), band=band))
    else:
        elems.append(coupler(short, long_d, out_channel, f"{out_channel}.lost", 0.5, band=band))
    return elems


def analyzer_device(cfg: AnalyzerConfig, in_channel: str, out_transmit: str, out_reflect: str,
                    band: Band = Band.DOWN, reference_bin: int = 0) -> list[Element]:
    """Unbalanced interferometer used as a time-bin analyzer.

    The long arm imposes ``exp(-i * cfg.phase)``; a photon in
    ``(|t> + exp(i x)|t+d>)/sqrt(2)`` interferes constructively at
    ``out_reflect`` in the middle bin when ``cfg.phase == -x``.

    Without the switch, input bin ``t`` leaves in bins ``t`` and ``t + d`` of
    both ports, so a two-bin qubit yields three arrival times. With the switch
    the early pulse (bins before ``reference_bin + d``) is routed through the
    long arm, everything else through the short arm, and all light exits in
    the middle bin.
    """
    d = cfg.delay_bins
    short, long_, long_d = f"{in_channel}.short", f"{in_channel}.long", f"{in_channel}.long_d"
    if cfg.switch:
        first = route_switch(in_channel, short, long_, to_b=range(0, reference_bin + d), band=band)
        offset = math.pi / 2
    else:
        first = coupler(in_channel, f"{in_channel}.aux", short, long_, 0.5, band=band)
        offset = 0.0
    return [
        first,
        delay_line(long_, d, long_d, band=band),
        phase_shift(long_d, offset - cfg.phase, band=band),
        coupler(short, long_d, out_transmit, out_reflect, 0.5, band=band),
    ]


def _pair_operator(pump: FockState, pump_channel: str, signal: str, idler: str,
                   state: FockState, cutoff: int) -> FockState:
    """Apply sum_t c_t s_t^dag i_t^dag, with c_t read from a one-photon pump state."""
    parts = []
    start = state.with_cutoff(cutoff)
    for key, amp in pump:
        ((mode, _),) = key
        s = fock.create(fock.create(start, Mode(signal, mode.timebin)), Mode(idler, mode.timebin))
        parts.append((amp, s))
    return fock.superpose(parts).with_cutoff(cutoff)


def spdc_convert(state: FockState, pump_channel: str, signal: str, idler: str, order: int = 1,
                 g: float = 0.1) -> FockState:
    """Downconvert pump photons into signal/idler pairs, post-selected on conversion.

    Order 1 maps each pump photon at bin ``t`` to a signal and an idler photon
    at bin ``t``. Order 2 takes a one-photon pump state with pair operator
    ``P`` and returns ``P|0> + (g/2) P^2 |0>``, renormalized.
    """
    for key, _ in state:
        for m, _n in key:
            if m.band == Band.PUMP and m.channel != pump_channel:
                raise fock.FockError(f"pump photon on unexpected channel {m!r}")
    if order == 1:
        out: dict = {}
        cutoff = state.cutoff
        for key, amp in state:
            pumps = [(m, n) for m, n in key if m.band == Band.PUMP]
            if not pumps:
                continue
            rest = [(m, n) for m, n in key if m.band != Band.PUMP]
            monomial = []
            norm = 1.0
            for m, n in pumps:
                norm *= math.factorial(n)
                monomial += [Mode(signal, m.timebin), Mode(idler, m.timebin)] * n
            new_key = fock.make_key(rest + [(m, 1) for m in monomial])
            cutoff = max(cutoff, fock.key_photons(new_key))
            factor = 1.0
            for _, n in new_key:
                factor *= math.factorial(n)
            for _, n in rest:
                factor /= math.factorial(n)
            out[new_key] = out.get(new_key, 0) + amp * math.sqrt(factor / norm)
        result = FockState(out, cutoff)
    elif order == 2:
        if any(fock.key_photons(k) != 1 or k[0][0].band != Band.PUMP for k, _ in state):
            raise fock.FockError("order-2 conversion needs a one-photon pump state")
        cutoff = max(state.cutoff, 4)
        one = _pair_operator(state, pump_channel, signal, idler, fock.vacuum(cutoff), cutoff)
        two = _pair_operator(state, pump_channel, signal, idler, one, cutoff)
        result = one + two.scaled(g / 2)
    else:
        raise ValueError(f"order must be 1 or 2, got {order}")
    if any(m.band == Band.PUMP for k, _ in result for m, _ in k):
        raise fock.FockError("pump photons remain after conversion")
    return result.normalized()


def pump_state(cfg: SourceConfig, pump_channel: str = "pump") -> FockState:
    """Single pump photon after the preparation device."""
    start = fock.create(fock.vacuum(), Mode(f"{pump_channel}.in", 0, Band.PUMP))
    out = fock.apply_elements(start, preparation_device(cfg, f"{pump_channel}.in", pump_channel))
    # the switch sends nothing to the dump port for a pulse at bin 0
    return FockState({k: a for k, a in out if k[0][0].channel == pump_channel}, out.cutoff)


def twin_photon_source(cfg: SourceConfig, signal: str, idler: str, pump_channel: str = "pump",
                       order: int = 1) -> MixedState:
    """Pump preparation, downconversion and mode-mismatch dephasing, in that order."""
    pair = spdc_convert(pump_state(cfg, pump_channel), pump_channel, signal, idler, order, cfg.g)
    return fock.dephase_timebins(pair, cfg.mu, {signal, idler})


def bell_state(which: str, channel_a: str, channel_b: str, delay: int = 1) -> FockState:
    """Normalized time-bin Bell state; the first slot of each ket is ``channel_a``."""
    s, l = 0, delay
    r = 1 / math.sqrt(2)
    pairs = {
        "psi+": ((s, l), (l, s), 1), "psi-": ((s, l), (l, s), -1),
        "phi+": ((s, s), (l, l), 1), "phi-": ((s, s), (l, l), -1),
    }
    try:
        (a1, b1), (a2, b2), sign = pairs[which]
    except KeyError:
        raise ValueError(f"unknown Bell state {which!r}; expected one of {BELL_LABELS}") from None
    first = fock.product_state([Mode(channel_a, a1), Mode(channel_b, b1)])
    second = fock.product_state([Mode(channel_a, a2), Mode(channel_b, b2)])
    return fock.superpose([(r, first), (sign * r, second)])


def ghz_target(channels: Sequence[str], delay_1: int, delay_2: int, relative_phase: float = 0.0) -> FockState:
    """(|short, long_1, long_1> + e^{i theta} |long_2, long_2, short>)/sqrt(2) on three channels."""
    c1, c2, c3 = channels
    first = fock.product_state([Mode(c1, 0), Mode(c2, delay_1), Mode(c3, delay_1)])
    second = fock.product_state([Mode(c1, delay_2), Mode(c2, delay_2), Mode(c3, 0)])
    r = 1 / math.sqrt(2)
    return fock.superpose([(r, first), (r * cmath.exp(1j * relative_phase), second)])


def prepare_qudit_superposition(amplitudes: Sequence[complex], channel: str, band: Band = Band.DOWN,
                                spacing: int = 1) -> FockState:
    """One photon in sum_k a_k |bin k * spacing>."""
    amps = np.asarray(amplitudes, dtype=complex)
    if abs(np.vdot(amps, amps).real - 1.0) > 1e-10:
        raise ValueError("qudit amplitudes must be normalized")
    if (len(amps) - 1) * spacing > fock.MAX_TIMEBIN:
        raise ValueError(f"{len(amps)} bins exceed the time-bin bound {fock.MAX_TIMEBIN}")
    return FockState({((Mode(channel, k * spacing, band), 1),): a for k, a in enumerate(amps)})
