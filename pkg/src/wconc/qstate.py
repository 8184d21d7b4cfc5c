"""Sparse state vectors for polarization-encoded photons in named spatial modes.

A :class:`PureState` is a superposition of :class:`BasisTerm` objects. Each
term records which polarizations sit in which spatial mode, so a term maps
one-to-one onto a product ket such as ``|V>_a1 |H>_a2 |H>_a3``. States are
immutable and always kept in canonical form: equal occupancies are merged and
terms are sorted lexicographically by occupancy.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

ATOL = 1e-12
MAX_PHOTONS_PER_MODE = 2


class StateError(ValueError):
    """Raised for malformed states or incompatible state operations."""


class CoefficientError(ValueError):
    """Raised for invalid W-state coefficient vectors."""


class Polarization(str, Enum):
    H = "H"
    V = "V"


H = Polarization.H
V = Polarization.V

Photons = tuple[Polarization, ...]
Occupancy = tuple[Photons, ...]


@dataclass(frozen=True)
class BasisTerm:
    """One product ket with its amplitude.

    ``occupancy[i]`` is the sorted multiset of polarizations in mode ``i`` of
    the owning state's registry.
    """

    amplitude: complex
    occupancy: Occupancy

    @property
    def photon_count(self) -> int:
        return sum(len(p) for p in self.occupancy)


_CANONICAL: dict[tuple, Photons] = {}


def _canonical_photons(photons: Iterable[Polarization | str]) -> Photons:
    photons = tuple(photons)
    try:
        return _CANONICAL[photons]
    except KeyError:
        pass
    canon = tuple(sorted(Polarization(p) for p in photons))
    _CANONICAL[photons] = canon
    return canon


@dataclass(frozen=True)
class PureState:
    """Immutable sparse superposition over a registry of spatial modes.

    Construction canonicalizes the term list: amplitudes of identical
    occupancies are summed, exact zeros are dropped and terms are sorted. A
    state with no terms is the empty marker returned by failed projections.
    """

    modes: tuple[str, ...]
    terms: tuple[BasisTerm, ...] = ()

    def __post_init__(self) -> None:
        modes = tuple(self.modes)
        if any(not isinstance(m, str) or not m for m in modes):
            raise StateError(f"mode names must be nonempty strings: {modes!r}")
        if len(set(modes)) != len(modes):
            raise StateError(f"duplicate mode names in registry: {modes!r}")

        merged: dict[Occupancy, complex] = {}
        for term in self.terms:
            if len(term.occupancy) != len(modes):
                raise StateError("term occupancy does not match the mode registry")
            occ = tuple(_canonical_photons(p) for p in term.occupancy)
            if any(len(p) > MAX_PHOTONS_PER_MODE for p in occ):
                raise StateError("more than two photons in one mode")
            merged[occ] = merged.get(occ, 0j) + complex(term.amplitude)

        terms = tuple(
            BasisTerm(amp, occ)
            for occ, amp in sorted(merged.items(), key=lambda kv: kv[0])
            if amp != 0
        )
        counts = {t.photon_count for t in terms}
        if len(counts) > 1:
            raise StateError(f"terms carry different photon numbers: {sorted(counts)}")

        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_occupancies(
        cls,
        modes: Sequence[str],
        entries: Iterable[tuple[complex, Mapping[str, Iterable[Polarization | str]]]],
    ) -> PureState:
        """Build a state from ``(amplitude, {mode: polarizations})`` pairs.

        Modes missing from a mapping are empty in that term.
        """
        modes = tuple(modes)
        index = {m: i for i, m in enumerate(modes)}
        terms = []
        for amp, occ in entries:
            unknown = set(occ) - set(index)
            if unknown:
                raise StateError(f"unknown modes {sorted(unknown)}")
            slots = [()] * len(modes)
            for mode, photons in occ.items():
                slots[index[mode]] = tuple(photons)
            terms.append(BasisTerm(amp, tuple(slots)))
        return cls(modes, tuple(terms))

    @classmethod
    def empty(cls, modes: Sequence[str]) -> PureState:
        return cls(tuple(modes), ())

    @property
    def is_empty(self) -> bool:
        return not self.terms

    @property
    def photon_count(self) -> int | None:
        return self.terms[0].photon_count if self.terms else None

    @property
    def norm(self) -> float:
        return math.sqrt(sum(abs(t.amplitude) ** 2 for t in self.terms))

    def index(self, mode: str) -> int:
        try:
            return self.modes.index(mode)
        except ValueError:
            raise StateError(f"mode {mode!r} not in registry {self.modes!r}") from None

    def occupancy(self, term: BasisTerm) -> dict[str, Photons]:
        """Return the term's occupancy keyed by mode name."""
        return dict(zip(self.modes, term.occupancy))

    def amplitude(self, occ: Mapping[str, Iterable[Polarization | str]]) -> complex:
        """Amplitude of the term with the given occupancy (0 if absent)."""
        slots = [()] * len(self.modes)
        for mode, photons in occ.items():
            slots[self.index(mode)] = _canonical_photons(photons)
        key = tuple(slots)
        for term in self.terms:
            if term.occupancy == key:
                return term.amplitude
        return 0j

    def scaled(self, factor: complex) -> PureState:
        return PureState(self.modes, tuple(BasisTerm(t.amplitude * factor, t.occupancy) for t in self.terms))

    def relabel(self, mapping: Mapping[str, str]) -> PureState:
        """Rename modes; names not in ``mapping`` are kept."""
        return PureState(tuple(mapping.get(m, m) for m in self.modes), self.terms)

    def reordered(self, modes: Sequence[str]) -> PureState:
        """Same state with the registry permuted into ``modes`` order."""
        modes = tuple(modes)
        if sorted(modes) != sorted(self.modes):
            raise StateError(f"registry mismatch: {self.modes!r} vs {modes!r}")
        perm = [self.index(m) for m in modes]
        terms = tuple(BasisTerm(t.amplitude, tuple(t.occupancy[i] for i in perm)) for t in self.terms)
        return PureState(modes, terms)

    def to_dict(self) -> dict:
        return {
            "modes": list(self.modes),
            "terms": [
                {
                    "amp": [t.amplitude.real, t.amplitude.imag],
                    "occ": {m: [p.value for p in ph] for m, ph in zip(self.modes, t.occupancy) if ph},
                }
                for t in self.terms
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: Mapping) -> PureState:
        return cls.from_occupancies(
            data["modes"],
            ((complex(t["amp"][0], t["amp"][1]), t["occ"]) for t in data["terms"]),
        )

    @classmethod
    def from_json(cls, text: str) -> PureState:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class WCoefficients:
    """Coefficients ``(alpha_1, ..., alpha_N)`` of a less-entangled W state.

    Photon labels are 1-based throughout the package, so ``coeffs[1]`` is
    the first coefficient.
    """

    alphas: tuple[complex, ...]
    atol: float = field(default=ATOL, compare=False, repr=False)

    def __post_init__(self) -> None:
        alphas = tuple(complex(a) for a in self.alphas)
        if len(alphas) < 2:
            raise CoefficientError(f"need at least 2 coefficients, got {len(alphas)}")
        if any(not (cmath.isfinite(a)) for a in alphas):
            raise CoefficientError("coefficients must be finite")
        if any(abs(a) == 0 for a in alphas):
            raise CoefficientError("zero coefficient: every |alpha_i| must be > 0")
        total = sum(abs(a) ** 2 for a in alphas)
        if abs(total - 1.0) > self.atol:
            raise CoefficientError(f"sum of |alpha_i|^2 is {total!r}, expected 1")
        object.__setattr__(self, "alphas", alphas)

    @classmethod
    def normalized(cls, values: Iterable[complex], atol: float = ATOL) -> WCoefficients:
        """Rescale arbitrary nonzero values to unit norm."""
        values = [complex(v) for v in values]
        scale = math.sqrt(sum(abs(v) ** 2 for v in values))
        if scale == 0:
            raise CoefficientError("all coefficients are zero")
        return cls(tuple(v / scale for v in values), atol)

    @property
    def n(self) -> int:
        return len(self.alphas)

    @property
    def alphas2(self) -> tuple[float, ...]:
        """Squared moduli ``|alpha_i|^2``."""
        return tuple(abs(a) ** 2 for a in self.alphas)

    @property
    def is_real(self) -> bool:
        return all(a.imag == 0 for a in self.alphas)

    def __getitem__(self, k: int) -> complex:
        if not 1 <= k <= self.n:
            raise IndexError(f"photon index {k} outside 1..{self.n}")
        return self.alphas[k - 1]


def photon_modes(n: int, prefix: str = "a") -> list[str]:
    """Default protocol mode names ``a1 .. aN``."""
    return [f"{prefix}{i}" for i in range(1, n + 1)]


def w_state(coeffs: WCoefficients, modes: Sequence[str] | None = None) -> PureState:
    """The W state with ``coeffs[i]`` on the term where photon ``i`` is V."""
    modes = photon_modes(coeffs.n) if modes is None else list(modes)
    if len(modes) != coeffs.n:
        raise StateError(f"{len(modes)} modes given for {coeffs.n} coefficients")
    entries = []
    for i, amp in enumerate(coeffs.alphas):
        entries.append((amp, {m: (V if j == i else H,) for j, m in enumerate(modes)}))
    return PureState.from_occupancies(modes, entries)


def max_w_state(modes: Sequence[str]) -> PureState:
    n = len(modes)
    return w_state(WCoefficients(tuple([1 / math.sqrt(n)] * n)), modes)


def tensor(a: PureState, b: PureState) -> PureState:
    overlap = set(a.modes) & set(b.modes)
    if overlap:
        raise StateError(f"overlapping modes in tensor product: {sorted(overlap)}")
    terms = tuple(
        BasisTerm(ta.amplitude * tb.amplitude, ta.occupancy + tb.occupancy)
        for ta in a.terms
        for tb in b.terms
    )
    return PureState(a.modes + b.modes, terms)


def normalize(s: PureState) -> tuple[PureState, float]:
    """Return the unit-norm state and the norm it was divided by."""
    norm = s.norm
    if norm == 0:
        raise StateError("cannot normalize the zero state")
    return s.scaled(1 / norm), norm


def project(
    s: PureState, keep: Callable[[dict[str, Photons]], bool]
) -> tuple[PureState, float]:
    """Keep the terms whose occupancy satisfies ``keep``.

    Returns the renormalized kept component and its Born weight relative to
    ``s``. An empty projection gives ``(PureState.empty(...), 0.0)``.
    """
    total = s.norm ** 2
    if total == 0:
        raise StateError("cannot project the zero state")
    kept = PureState(s.modes, tuple(t for t in s.terms if keep(s.occupancy(t))))
    weight = kept.norm ** 2
    if weight == 0:
        return PureState.empty(s.modes), 0.0
    return kept.scaled(1 / math.sqrt(weight)), min(weight / total, 1.0)


def inner_product(a: PureState, b: PureState) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    if sorted(a.modes) != sorted(b.modes):
        raise StateError(f"registry mismatch: {a.modes!r} vs {b.modes!r}")
    if a.terms and b.terms and a.photon_count != b.photon_count:
        raise StateError("states carry different photon numbers")
    b = b.reordered(a.modes)
    lookup = {t.occupancy: t.amplitude for t in b.terms}
    return sum((t.amplitude.conjugate() * lookup.get(t.occupancy, 0j) for t in a.terms), 0j)


def max_w_fidelity(s: PureState, w_modes: Sequence[str] | None = None) -> float:
    """``|<W_max|s>|^2`` where ``W_max`` has equal amplitudes ``1/sqrt(N)``."""
    w_modes = list(s.modes) if w_modes is None else list(w_modes)
    if sorted(w_modes) != sorted(s.modes):
        raise StateError(f"state modes {s.modes!r} differ from W modes {w_modes!r}")
    if s.photon_count is not None and s.photon_count != len(w_modes):
        raise StateError(f"state has {s.photon_count} photons, W state needs {len(w_modes)}")
    fid = abs(inner_product(max_w_state(w_modes), s)) ** 2
    return min(fid, 1.0)


def states_close(a: PureState, b: PureState, atol: float = ATOL, up_to_phase: bool = False) -> bool:
    """Amplitude-wise comparison; optionally ignoring a global phase."""
    if sorted(a.modes) != sorted(b.modes):
        return False
    b = b.reordered(a.modes)
    if up_to_phase:
        ov = inner_product(b, a)
        if abs(ov) > 0:
            b = b.scaled(ov / abs(ov))
    amps_a = {t.occupancy: t.amplitude for t in a.terms}
    amps_b = {t.occupancy: t.amplitude for t in b.terms}
    return all(abs(amps_a.get(k, 0j) - amps_b.get(k, 0j)) <= atol for k in amps_a.keys() | amps_b.keys())
