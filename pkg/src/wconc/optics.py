"""Optical primitives: PBS routing, partial and complete parity checks,
diagonal-basis measurement and the V phase flip.

The complete parity check (cross-Kerr QND gate) is modeled as an ideal
two-outcome parity projection. The probe phase ``theta`` never enters an
amplitude, so :class:`CpcModel` only carries it for bookkeeping. The two odd
phase shifts ``+2theta`` and ``-2theta`` are not resolved by the homodyne
measurement and are reported as a single odd outcome.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .qstate import (
    ATOL,
    BasisTerm,
    Photons,
    Polarization,
    PureState,
    StateError,
    project,
)

H = Polarization.H
V = Polarization.V

_SQRT_HALF = 1 / math.sqrt(2)


class ParityOutcome(str, Enum):
    EVEN = "even"
    ODD = "odd"

    @property
    def probe_shift(self) -> str:
        """Nominal probe phase tag; the odd sign is unresolvable."""
        return "0" if self is ParityOutcome.EVEN else "+-2theta"


class PmOutcome(str, Enum):
    PLUS = "+"
    MINUS = "-"

    @property
    def sign(self) -> int:
        return 1 if self is PmOutcome.PLUS else -1


@dataclass(frozen=True)
class CpcModel:
    """Cross-Kerr parity gate; ``theta`` is informational only."""

    theta: float = 0.1

    def __post_init__(self) -> None:
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta!r}")


def single_photon(c_h: complex, c_v: complex, mode: str, atol: float = ATOL) -> PureState:
    """One photon ``c_h|H> + c_v|V>`` in ``mode``."""
    weight = abs(c_h) ** 2 + abs(c_v) ** 2
    if abs(weight - 1.0) > atol:
        raise StateError(f"|c_h|^2 + |c_v|^2 = {weight!r}, expected 1")
    return PureState.from_occupancies([mode], [(c_h, {mode: (H,)}), (c_v, {mode: (V,)})])


def pbs(s: PureState, in1: str, in2: str, out1: str, out2: str) -> PureState:
    """Polarizing beam splitter: H is transmitted, V is reflected.

    H in ``in1`` and V in ``in2`` leave through ``out1``; V in ``in1`` and H
    in ``in2`` leave through ``out2``. Calling it again with the output ports
    as inputs and the inputs as outputs undoes it.
    """
    i1, i2 = s.index(in1), s.index(in2)
    if in1 == in2 or out1 == out2:
        raise StateError("PBS ports must be distinct")
    for out in (out1, out2):
        if out in s.modes and out not in (in1, in2):
            raise StateError(f"output mode {out!r} already holds another photon register")

    modes = list(s.modes)
    modes[i1], modes[i2] = out1, out2
    terms = []
    for t in s.terms:
        a, b = t.occupancy[i1], t.occupancy[i2]
        to1 = [p for p in a if p is H] + [p for p in b if p is V]
        to2 = [p for p in a if p is V] + [p for p in b if p is H]
        occ = list(t.occupancy)
        occ[i1], occ[i2] = tuple(to1), tuple(to2)
        terms.append(BasisTerm(t.amplitude, tuple(occ)))
    return PureState(tuple(modes), tuple(terms))


def ppc_postselect(s: PureState, out1: str, out2: str) -> tuple[PureState, float]:
    """Coincidence post-selection behind a PBS: one photon in each output.

    Only the even-parity part survives; the odd part is lost with the
    detected photons, so no odd branch is returned.
    """
    s.index(out1), s.index(out2)
    return project(s, lambda occ: len(occ[out1]) == 1 and len(occ[out2]) == 1)


def _parity(occ: dict[str, Photons], m1: str, m2: str) -> ParityOutcome:
    a, b = occ[m1], occ[m2]
    if len(a) != 1 or len(b) != 1:
        raise StateError(f"parity check needs exactly one photon in {m1!r} and {m2!r}")
    return ParityOutcome.EVEN if a[0] is b[0] else ParityOutcome.ODD


def cpc_measure(
    s: PureState, m1: str, m2: str, model: CpcModel | None = None
) -> dict[ParityOutcome, tuple[PureState, float]]:
    """QND parity measurement of modes ``m1`` and ``m2``.

    Both branches keep all photons. Each is returned renormalized with its
    Born probability; an impossible branch comes back as an empty state with
    probability 0.
    """
    s.index(m1), s.index(m2)
    for t in s.terms:
        _parity(s.occupancy(t), m1, m2)
    return {
        outcome: project(s, lambda occ, o=outcome: _parity(occ, m1, m2) is o)
        for outcome in ParityOutcome
    }


def measure_pm(s: PureState, mode: str) -> dict[PmOutcome, tuple[PureState, float]]:
    """Measure the photon in ``mode`` in the ``|+->`` basis and remove it."""
    idx = s.index(mode)
    for t in s.terms:
        if len(t.occupancy[idx]) != 1:
            raise StateError(f"mode {mode!r} must hold exactly one photon in every term")
    total = s.norm ** 2
    if total == 0:
        raise StateError("cannot measure the zero state")

    modes = s.modes[:idx] + s.modes[idx + 1 :]
    branches = {}
    for outcome in PmOutcome:
        terms = []
        for t in s.terms:
            (pol,) = t.occupancy[idx]
            overlap = _SQRT_HALF if pol is H else outcome.sign * _SQRT_HALF
            rest = t.occupancy[:idx] + t.occupancy[idx + 1 :]
            terms.append(BasisTerm(t.amplitude * overlap, rest))
        branch = PureState(modes, tuple(terms))
        weight = branch.norm ** 2
        if weight == 0:
            branches[outcome] = (PureState.empty(modes), 0.0)
        else:
            branches[outcome] = (branch.scaled(1 / math.sqrt(weight)), min(weight / total, 1.0))
    return branches


def phase_flip_v(s: PureState, mode: str) -> PureState:
    """Apply the sign -1 once per V photon in ``mode``."""
    idx = s.index(mode)
    terms = tuple(
        BasisTerm(t.amplitude * (-1) ** t.occupancy[idx].count(V), t.occupancy)
        for t in s.terms
    )
    return PureState(s.modes, terms)
