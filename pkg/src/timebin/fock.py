"""Multi-photon Fock states over (channel x time-bin) modes.

States are sparse maps from canonical occupation keys to complex amplitudes.
Linear optical elements act by substituting each input creation operator with
a linear combination of output creation operators and re-expanding.
Mixed states are finite ensembles of pure states; there is no density-matrix
algebra in this module.

Key convention: an occupation key is a tuple ``((mode, count), ...)`` with
``count >= 1`` and modes strictly increasing in canonical order. A term with
key ``k`` and amplitude ``c`` stands for ``c * prod_m (a_m^dag)^n_m / sqrt(n_m!) |0>``.
"""

from __future__ import annotations

import cmath
import math
from collections import defaultdict
from dataclasses import dataclass
from enum import IntEnum
from functools import total_ordering
from types import MappingProxyType
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Sequence, Union

import numpy as np

PRUNE = 1e-12
NORM_TOL = 1e-10
DEFAULT_CUTOFF = 4
MAX_TIMEBIN = 16

OccKey = tuple  # tuple[tuple[Mode, int], ...]


class FockError(ValueError):
    """Raised when an operation would leave the supported state space."""


class Band(IntEnum):
    PUMP = 0
    DOWN = 1


@total_ordering
@dataclass(frozen=True, eq=True)
class Mode:
    """A single-photon slot: channel name, integer time bin, frequency band."""

    channel: str
    timebin: int = 0
    band: Band = Band.DOWN

    def __post_init__(self):
        if not isinstance(self.timebin, (int, np.integer)):
            raise TypeError(f"timebin must be an integer, got {self.timebin!r}")
        if abs(self.timebin) > MAX_TIMEBIN:
            raise FockError(
                f"timebin {self.timebin} on channel {self.channel!r} exceeds bound {MAX_TIMEBIN}"
            )
        object.__setattr__(self, "timebin", int(self.timebin))
        object.__setattr__(self, "band", Band(self.band))

    def sort_key(self):
        return (int(self.band), self.channel, self.timebin)

    def __lt__(self, other):
        if not isinstance(other, Mode):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def shifted(self, bins: int, channel: str | None = None) -> "Mode":
        return Mode(self.channel if channel is None else channel, self.timebin + bins, self.band)

    def __repr__(self):
        tag = "p" if self.band == Band.PUMP else ""
        return f"{self.channel}{tag}@{self.timebin}"


def make_key(counts: Mapping[Mode, int] | Iterable[tuple[Mode, int]]) -> OccKey:
    """Normalize a mode->count mapping (or pairs, repeats summed) into an OccKey."""
    acc: dict[Mode, int] = defaultdict(int)
    items = counts.items() if isinstance(counts, Mapping) else counts
    for mode, n in items:
        if n < 0:
            raise FockError(f"negative occupation {n} for {mode!r}")
        acc[mode] += int(n)
    return tuple(sorted((m, n) for m, n in acc.items() if n > 0))


def key_photons(key: OccKey) -> int:
    return sum(n for _, n in key)


def key_restrict(key: OccKey, keep: Callable[[Mode], bool]) -> OccKey:
    return tuple((m, n) for m, n in key if keep(m))


def _key_factorial(key: OccKey) -> float:
    out = 1.0
    for _, n in key:
        out *= math.factorial(n)
    return out


class FockState:
    """Sparse superposition of occupation-number basis states.

    Instances are immutable. Amplitudes below ``PRUNE`` are dropped, and the
    squared norm is computed once and cached in ``norm2``.
    """

    __slots__ = ("_terms", "cutoff", "norm2")

    def __init__(self, terms: Mapping[OccKey, complex] | None = None, cutoff: int = DEFAULT_CUTOFF):
        clean: dict[OccKey, complex] = {}
        for key, amp in (terms or {}).items():
            amp = complex(amp)
            if abs(amp) < PRUNE:
                continue
            n = key_photons(key)
            if n > cutoff:
                raise FockError(f"term {key!r} has {n} photons, above cutoff {cutoff}")
            clean[key] = amp
        self._terms = dict(sorted(clean.items()))
        self.cutoff = cutoff
        self.norm2 = float(sum(abs(a) ** 2 for a in self._terms.values()))

    @property
    def terms(self) -> Mapping[OccKey, complex]:
        return MappingProxyType(self._terms)

    def __len__(self):
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[OccKey, complex]]:
        return iter(self._terms.items())

    def __repr__(self):
        body = " + ".join(f"({a:.4g}){list(k)}" for k, a in list(self._terms.items())[:6])
        more = " + ..." if len(self._terms) > 6 else ""
        return f"FockState({body or '0'}{more})"

    def amplitude(self, key: OccKey) -> complex:
        return self._terms.get(key, 0j)

    def modes(self) -> set[Mode]:
        return {m for key in self._terms for m, _ in key}

    def photon_numbers(self) -> set[int]:
        return {key_photons(k) for k in self._terms}

    def scaled(self, factor: complex) -> "FockState":
        return FockState({k: a * factor for k, a in self._terms.items()}, self.cutoff)

    def normalized(self) -> "FockState":
        if self.norm2 < PRUNE**2:
            raise FockError("cannot normalize a zero state")
        return self.scaled(1.0 / math.sqrt(self.norm2))

    def with_cutoff(self, cutoff: int) -> "FockState":
        return FockState(self._terms, cutoff)

    def __add__(self, other: "FockState") -> "FockState":
        acc = defaultdict(complex, self._terms)
        for k, a in other._terms.items():
            acc[k] += a
        return FockState(acc, max(self.cutoff, other.cutoff))

    def __mul__(self, factor: complex) -> "FockState":
        return self.scaled(factor)

    __rmul__ = __mul__

    def allclose(self, other: "FockState", atol: float = 1e-10) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.amplitude(k) - other.amplitude(k)) <= atol for k in keys)


def vacuum(cutoff: int = DEFAULT_CUTOFF) -> FockState:
    return FockState({(): 1.0}, cutoff)


def create(state: FockState, mode: Mode) -> FockState:
    """Apply the creation operator for ``mode`` to every term."""
    out: dict[OccKey, complex] = {}
    for key, amp in state:
        counts = dict(key)
        n = counts.get(mode, 0)
        if key_photons(key) + 1 > state.cutoff:
            raise FockError(
                f"creating a photon in {mode!r} on term {list(key)} exceeds cutoff {state.cutoff}"
            )
        counts[mode] = n + 1
        out[make_key(counts)] = amp * math.sqrt(n + 1)
    return FockState(out, state.cutoff)


def product_state(modes: Iterable[Mode], amplitude: complex = 1.0, cutoff: int = DEFAULT_CUTOFF) -> FockState:
    """Normalized basis state with one photon per listed mode (repeats allowed)."""
    return FockState({make_key((m, 1) for m in modes): amplitude}, cutoff)


def superpose(parts: Iterable[tuple[complex, FockState]]) -> FockState:
    acc: dict[OccKey, complex] = defaultdict(complex)
    cutoff = DEFAULT_CUTOFF
    for coeff, st in parts:
        cutoff = max(cutoff, st.cutoff)
        for k, a in st:
            acc[k] += coeff * a
    return FockState(acc, cutoff)


class Element:
    """Linear optical map from input modes to output modes.

    ``matrix[j, i]`` is the amplitude with which the creation operator of
    ``input_modes[i]`` is substituted by that of ``output_modes[j]``. Columns
    must be orthonormal. Modes not listed as inputs pass unchanged.
    """

    __slots__ = ("input_modes", "output_modes", "matrix", "label", "_columns", "_outputs")

    def __init__(self, input_modes: Sequence[Mode], output_modes: Sequence[Mode], matrix, label: str = ""):
        self.input_modes = tuple(input_modes)
        self.output_modes = tuple(output_modes)
        mat = np.asarray(matrix, dtype=complex)
        if mat.shape != (len(self.output_modes), len(self.input_modes)):
            raise FockError(
                f"{label or 'element'}: matrix shape {mat.shape} does not match "
                f"{len(self.output_modes)} outputs x {len(self.input_modes)} inputs"
            )
        if len(set(self.input_modes)) != len(self.input_modes) or len(set(self.output_modes)) != len(self.output_modes):
            raise FockError(f"{label or 'element'}: duplicate modes")
        gram = mat.conj().T @ mat
        if not np.allclose(gram, np.eye(len(self.input_modes)), atol=NORM_TOL, rtol=0):
            raise FockError(f"{label or 'element'}: matrix is not an isometry")
        mat.setflags(write=False)
        self.matrix = mat
        self.label = label
        self._columns = {
            m: tuple((self.output_modes[j], complex(mat[j, i])) for j in np.flatnonzero(np.abs(mat[:, i]) > PRUNE))
            for i, m in enumerate(self.input_modes)
        }
        self._outputs = frozenset(self.output_modes)

    def column(self, mode: Mode):
        return self._columns.get(mode)

    def is_unitary(self) -> bool:
        return set(self.input_modes) == self._outputs

    def adjoint(self) -> "Element":
        if not self.is_unitary():
            raise FockError("adjoint is defined only for elements acting on a closed mode set")
        return Element(self.output_modes, self.input_modes, self.matrix.conj().T, self.label + "^dag")

    def __repr__(self):
        return f"Element({self.label!r}, {len(self.input_modes)} modes)"


def _expand(monomials: dict[tuple, complex], column) -> dict[tuple, complex]:
    out: dict[tuple, complex] = defaultdict(complex)
    for mono, c in monomials.items():
        for mode, a in column:
            out[tuple(sorted(mono + (mode,)))] += c * a
    return out


def apply_element(state: FockState, elem: Element) -> FockState:
    """Evolve ``state`` through ``elem`` with bosonic normalization."""
    result: dict[OccKey, complex] = defaultdict(complex)
    for key, amp in state:
        monomials: dict[tuple, complex] = {(): amp / math.sqrt(_key_factorial(key))}
        untouched = []
        for mode, n in key:
            col = elem.column(mode)
            if col is None:
                if mode in elem._outputs:
                    raise FockError(
                        f"{elem.label or 'element'}: occupied mode {mode!r} collides with an output mode"
                    )
                untouched.append((mode, n))
                continue
            for _ in range(n):
                monomials = _expand(monomials, col)
        for mono, c in monomials.items():
            out_key = make_key(list(untouched) + [(m, 1) for m in mono])
            result[out_key] += c * math.sqrt(_key_factorial(out_key))
    return FockState(result, state.cutoff)


def apply_elements(state, elements: Iterable[Element]):
    """Apply a sequence of elements to a FockState or every branch of a MixedState."""
    for elem in elements:
        if isinstance(state, MixedState):
            state = state.map(lambda s, e=elem: apply_element(s, e))
        else:
            state = apply_element(state, elem)
    return state


def inner(a: FockState, b: FockState) -> complex:
    """Hermitian inner product <a|b>."""
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for key in small.terms:
        total += a.amplitude(key).conjugate() * b.amplitude(key)
    return total


class MixedState:
    """Weighted ensemble of unit-norm pure states."""

    __slots__ = ("ensemble",)

    def __init__(self, ensemble: Iterable[tuple[float, FockState]]):
        items = [(float(w), s) for w, s in ensemble if w > 0]
        if not items:
            raise FockError("empty ensemble")
        total = sum(w for w, _ in items)
        if abs(total - 1.0) > NORM_TOL:
            raise FockError(f"ensemble weights sum to {total}, expected 1")
        for _, s in items:
            if abs(s.norm2 - 1.0) > 1e-9:
                raise FockError(f"ensemble branch has squared norm {s.norm2}, expected 1")
        self.ensemble = tuple(items)

    @classmethod
    def pure(cls, state: FockState) -> "MixedState":
        return cls([(1.0, state)])

    def __iter__(self):
        return iter(self.ensemble)

    def __len__(self):
        return len(self.ensemble)

    def __repr__(self):
        return f"MixedState({len(self.ensemble)} branches)"

    def map(self, fn: Callable[[FockState], FockState]) -> "MixedState":
        return MixedState([(w, fn(s)) for w, s in self.ensemble])

    def modes(self) -> set[Mode]:
        return set().union(*(s.modes() for _, s in self.ensemble))


StateLike = Union[FockState, MixedState]


def as_mixed(state: StateLike) -> MixedState:
    return state if isinstance(state, MixedState) else MixedState.pure(state)


def mixture(parts: Iterable[tuple[float, StateLike]]) -> MixedState:
    """Convex combination of (weight, state) pairs; weights must add to 1."""
    branches = []
    for w, st in parts:
        for w2, s in as_mixed(st):
            branches.append((w * w2, s))
    return MixedState(branches)


def outcome_distribution(state: StateLike, modes: Iterable[Mode]) -> dict[OccKey, float]:
    """Ideal photon-number measurement of ``modes``.

    ``modes`` must cover every occupied mode. The result maps each occupation
    pattern to its probability, aggregated over the ensemble.
    """
    cover = set(modes)
    probs: dict[OccKey, float] = defaultdict(float)
    for w, s in as_mixed(state):
        for key, amp in s:
            for m, _ in key:
                if m not in cover:
                    raise FockError(f"occupied mode {m!r} is not measured")
            probs[key] += w * abs(amp) ** 2
    return dict(sorted(probs.items()))


class Branch(NamedTuple):
    pattern: OccKey
    probability: float
    state: MixedState | None


def partition(state: StateLike, modes: Iterable[Mode], cutoff: int | None = None) -> list[Branch]:
    """Projective photon-number measurement of ``modes``: all outcomes.

    Returns one branch per observed pattern (restricted to ``modes``) with its
    probability and the normalized post-measurement state of the remaining modes.
    """
    measured = set(modes)
    groups: dict[OccKey, list[tuple[float, FockState]]] = defaultdict(list)
    for w, s in as_mixed(state):
        split: dict[OccKey, dict[OccKey, complex]] = defaultdict(dict)
        for key, amp in s:
            seen = key_restrict(key, measured.__contains__)
            rest = key_restrict(key, lambda m: m not in measured)
            split[seen][rest] = amp
        for seen, terms in split.items():
            part = FockState(terms, s.cutoff if cutoff is None else cutoff)
            if part.norm2 > 0:
                groups[seen].append((w * part.norm2, part.normalized()))
    out = []
    for seen in sorted(groups):
        items = groups[seen]
        p = sum(w for w, _ in items)
        out.append(Branch(seen, p, MixedState([(w / p, s) for w, s in items])))
    return out


IMPOSSIBLE_TOL = 1e-14


class Conditioned(NamedTuple):
    state: MixedState | None
    probability: float

    @property
    def possible(self) -> bool:
        return self.state is not None


def condition_on(state: StateLike, pattern: Mapping[Mode, int], modes: Iterable[Mode] | None = None) -> Conditioned:
    """Post-select on a photon-number pattern over ``modes``.

    ``modes`` defaults to the keys of ``pattern``; modes listed but absent from
    ``pattern`` are required to be empty. A zero-probability pattern gives
    ``Conditioned(None, 0.0)``.
    """
    measured = set(pattern) if modes is None else set(modes)
    if not set(pattern) <= measured:
        raise FockError("pattern refers to modes outside the measured set")
    want = make_key(pattern)
    for br in partition(state, measured):
        if br.pattern == want and br.probability > IMPOSSIBLE_TOL:
            return Conditioned(br.state, br.probability)
    return Conditioned(None, 0.0)


def project(state: StateLike, keep: Callable[[OccKey], bool]) -> Conditioned:
    """Apply a projector diagonal in the occupation basis; renormalize."""
    branches = []
    for w, s in as_mixed(state):
        part = FockState({k: a for k, a in s if keep(k)}, s.cutoff)
        if part.norm2 > 0:
            branches.append((w * part.norm2, part.normalized()))
    p = sum(w for w, _ in branches)
    if p <= IMPOSSIBLE_TOL:
        return Conditioned(None, 0.0)
    return Conditioned(MixedState([(w / p, s) for w, s in branches]), p)


def dephase_timebins(state: StateLike, mu: float, channels: Iterable[str]) -> MixedState:
    """Mix ``state`` with its time-bin-dephased copy: mu * state + (1 - mu) * dephased.

    Dephasing removes coherence between terms whose occupation patterns on
    ``channels`` differ, so every interference term involving those channels
    is scaled by exactly ``mu``.
    """
    if not 0.0 <= mu <= 1.0:
        raise FockError(f"mu must lie in [0, 1], got {mu}")
    mixed = as_mixed(state)
    if mu == 1.0:
        return mixed
    chans = set(channels)
    branches = []
    for w, s in mixed:
        if mu > 0:
            branches.append((w * mu, s))
        groups: dict[OccKey, dict[OccKey, complex]] = defaultdict(dict)
        for key, amp in s:
            groups[key_restrict(key, lambda m: m.channel in chans)][key] = amp
        for g in sorted(groups):
            part = FockState(groups[g], s.cutoff)
            branches.append((w * (1 - mu) * part.norm2, part.normalized()))
    return MixedState(branches)


def fidelity(state: StateLike, target: FockState) -> float:
    """Ensemble-averaged overlap sum_i w_i |<target|psi_i>|^2."""
    if abs(target.norm2 - 1.0) > 1e-9:
        raise FockError("target must be normalized")
    return float(sum(w * abs(inner(target, s)) ** 2 for w, s in as_mixed(state)))


def global_phase(state: FockState, theta: float) -> FockState:
    return state.scaled(cmath.exp(1j * theta))


def tensor(a: FockState, b: FockState) -> FockState:
    """Product of states living on disjoint mode sets."""
    overlap = a.modes() & b.modes()
    if overlap:
        raise FockError(f"tensor factors share modes {sorted(overlap)}")
    out = {}
    for ka, xa in a:
        for kb, xb in b:
            out[make_key(ka + kb)] = xa * xb
    return FockState(out, a.cutoff + b.cutoff)


def tensor_mixed(a: StateLike, b: StateLike) -> MixedState:
    return MixedState([(wa * wb, tensor(sa, sb)) for wa, sa in as_mixed(a) for wb, sb in as_mixed(b)])
