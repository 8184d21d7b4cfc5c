"""Step-by-step W-state concentration with partial or complete parity checks.

Photon ``k`` lives in mode ``a{k}``; the ancilla prepared for its step lives
in ``b{k}``. With the linear-optics gate the pair goes through a PBS into
``c{k}``/``d{k}``, coincidences are post-selected, ``d{k}`` is measured in the
``|+->`` basis and ``c{k}`` takes over the role of ``a{k}``. With the QND gate
the parity of ``a{k}``/``b{k}`` is measured directly and the ancilla ``b{k}``
is measured in the ``|+->`` basis afterwards, in either parity branch. A
``-`` result is undone by flipping the sign of V in ``a{k}``.

An odd QND outcome leaves a W state whose photon-``k`` coefficient is squared
relative to the pivot, so the retry ancilla is built from the coefficients
read off the actual state, which makes its exponents double each iteration.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

from .analytic import step_order
from .optics import (
    ParityOutcome,
    PmOutcome,
    cpc_measure,
    measure_pm,
    pbs,
    phase_flip_v,
    ppc_postselect,
    single_photon,
)
from .qstate import (
    ATOL,
    Polarization,
    PureState,
    StateError,
    WCoefficients,
    max_w_fidelity,
    photon_modes,
    states_close,
    tensor,
    w_state,
)

EVEN, ODD = ParityOutcome.EVEN, ParityOutcome.ODD
PLUS, MINUS = PmOutcome.PLUS, PmOutcome.MINUS


class GateKind(str, Enum):
    PPC = "ppc"
    CPC = "cpc"


class UniformSource(Protocol):
    def random(self) -> float: ...


@dataclass(frozen=True)
class AncillaSpec:
    """Which ancilla to prepare: photon ``step_k``, retry ``iteration_m``."""

    step_k: int
    iteration_m: int = 1
    pivot: int = 2

    def __post_init__(self) -> None:
        if self.step_k == self.pivot:
            raise ValueError(f"step {self.step_k} is the pivot photon and is never concentrated")
        if self.step_k < 1 or self.pivot < 1:
            raise ValueError("photon labels are 1-based")
        if self.iteration_m < 1:
            raise ValueError(f"iteration must be >= 1, got {self.iteration_m}")


@dataclass(frozen=True)
class StepRecord:
    """One branch of one parity-check round.

    ``post_state`` is the corrected N-photon state, or ``None`` when the
    photons were destroyed by a failed coincidence post-selection.
    ``terminal`` marks a branch after which the run has failed.
    """

    step_k: int
    iteration_m: int
    parity: ParityOutcome
    p_parity: float
    pm: PmOutcome | None
    p_pm: float
    corrected: bool
    post_state: PureState | None
    cumulative_p: float
    terminal: bool = False

    @property
    def p_branch(self) -> float:
        return self.p_parity * self.p_pm

    def to_dict(self) -> dict:
        return {
            "step_k": self.step_k,
            "iteration_m": self.iteration_m,
            "parity": self.parity.value,
            "probe_shift": self.parity.probe_shift,
            "p_parity": self.p_parity,
            "pm": None if self.pm is None else self.pm.value,
            "p_pm": self.p_pm,
            "corrected": self.corrected,
            "cumulative_p": self.cumulative_p,
            "terminal": self.terminal,
            "post_state": None if self.post_state is None else self.post_state.to_dict(),
        }


@dataclass(frozen=True)
class ConcentrationReport:
    coeffs: WCoefficients
    gate: GateKind
    pivot: int
    max_m: int
    step_table: dict[tuple[int, int], float]
    final_fidelity: float
    trace: list[StepRecord] = field(repr=False)
    per_step_p: dict[int, float] = field(init=False)
    total_p: float = field(init=False)

    def __post_init__(self) -> None:
        sums: dict[int, float] = {}
        for (k, _m), p in sorted(self.step_table.items()):
            sums[k] = sums.get(k, 0.0) + p
        object.__setattr__(self, "per_step_p", sums)
        object.__setattr__(self, "total_p", math.prod(sums.values()))

    def to_dict(self, include_trace: bool = True) -> dict:
        steps = sorted(self.per_step_p)
        data = {
            "coefficients": [[a.real, a.imag] for a in self.coeffs.alphas],
            "gate": self.gate.value,
            "pivot": self.pivot,
            "max_m": self.max_m,
            "steps": steps,
            "table": [
                [self.step_table.get((k, m), 0.0) for m in range(1, self.max_m + 1)] for k in steps
            ],
            "per_step_p": {str(k): self.per_step_p[k] for k in steps},
            "total_p": self.total_p,
            "final_fidelity": self.final_fidelity,
        }
        if include_trace:
            data["trace"] = [r.to_dict() for r in self.trace]
        return data

    def to_json(self, include_trace: bool = True) -> str:
        return json.dumps(self.to_dict(include_trace), indent=2)


def _powered_pair(x: complex, y: complex, e: int) -> tuple[complex, complex]:
    """Normalized ``(x**e, y**e)``, computed in log space."""
    lx, ly = math.log(abs(x)), math.log(abs(y))
    t = e * (lx - ly)
    # magnitudes of (1, exp(-t)) or (exp(t), 1), normalized
    if t >= 0:
        mx, my = 1.0, math.exp(-t)
    else:
        mx, my = math.exp(t), 1.0
    scale = math.hypot(mx, my)
    px = cmath.exp(1j * ((e * cmath.phase(x)) % (2 * math.pi)))
    py = cmath.exp(1j * ((e * cmath.phase(y)) % (2 * math.pi)))
    return mx / scale * px, my / scale * py


def ancilla_coeffs(
    coeffs: WCoefficients, step_k: int, iteration_m: int = 1, pivot: int = 2
) -> tuple[complex, complex]:
    """``(c_h, c_v)`` of the ancilla for photon ``step_k`` at retry ``iteration_m``.

    ``c_h : c_v = alpha_k**(2**(m-1)) : alpha_pivot**(2**(m-1))``. Real for
    real coefficients.
    """
    spec = AncillaSpec(step_k, iteration_m, pivot)
    if spec.step_k > coeffs.n or spec.pivot > coeffs.n:
        raise ValueError(f"photon label outside 1..{coeffs.n}")
    c_h, c_v = _powered_pair(coeffs[step_k], coeffs[pivot], 2 ** (iteration_m - 1))
    if coeffs.is_real:
        return complex(c_h.real, 0.0), complex(c_v.real, 0.0)
    return c_h, c_v


def _w_term(modes: tuple[str, ...], v_mode: str) -> dict[str, tuple[Polarization, ...]]:
    return {m: (Polarization.V if m == v_mode else Polarization.H,) for m in modes}


def _check_w_type(state: PureState) -> int:
    n = len(state.modes)
    if tuple(state.modes) != tuple(photon_modes(n)):
        raise StateError(f"expected modes {photon_modes(n)}, got {list(state.modes)}")
    if state.is_empty:
        raise StateError("cannot run a step on the empty state")
    for t in state.terms:
        if any(len(p) != 1 for p in t.occupancy):
            raise StateError("every protocol mode must hold exactly one photon")
    return n


def state_coefficients(state: PureState) -> list[complex]:
    """Amplitudes of the single-V terms, photon 1 first."""
    return [state.amplitude(_w_term(state.modes, m)) for m in state.modes]


def run_step(
    state: PureState,
    step_k: int,
    iteration_m: int,
    gate: GateKind,
    pivot: int = 2,
    *,
    rng: UniformSource | None = None,
    prior_p: float = 1.0,
    max_m: int | None = None,
) -> list[StepRecord]:
    """One concentration attempt on photon ``step_k``.

    Without ``rng`` every branch is returned (parity outcome times ``+-``
    outcome, impossible branches omitted). With ``rng`` one branch is drawn
    by the Born rule: one uniform for the parity, one for ``+-``.

    ``max_m`` marks an odd QND outcome at that iteration as terminal; the
    residual state is kept in the record either way.
    """
    gate = GateKind(gate)
    n = _check_w_type(state)
    AncillaSpec(step_k, iteration_m, pivot)
    if step_k > n or pivot > n:
        raise ValueError(f"photon label outside 1..{n}")
    if gate is GateKind.PPC and iteration_m != 1:
        raise ValueError("the post-selected gate destroys the photons; no retries")

    a_mode, b_mode = f"a{step_k}", f"b{step_k}"
    amp_k = state.amplitude(_w_term(state.modes, a_mode))
    amp_p = state.amplitude(_w_term(state.modes, f"a{pivot}"))
    if amp_k == 0 or amp_p == 0:
        raise StateError(f"photon {step_k} or pivot {pivot} has a vanishing coefficient")
    scale = math.hypot(abs(amp_k), abs(amp_p))
    joint = tensor(state, single_photon(amp_k / scale, amp_p / scale, b_mode))

    if gate is GateKind.PPC:
        c_mode, d_mode = f"c{step_k}", f"d{step_k}"
        even, p_even = ppc_postselect(pbs(joint, a_mode, b_mode, c_mode, d_mode), c_mode, d_mode)
        parity_branches = {EVEN: (even, p_even, d_mode, {c_mode: a_mode}), ODD: (None, 1.0 - p_even, None, None)}
    else:
        measured = cpc_measure(joint, a_mode, b_mode)
        parity_branches = {o: (st, p, b_mode, {}) for o, (st, p) in measured.items()}

    records: list[StepRecord] = []
    for parity, (branch, p_parity, ancilla_mode, rename) in parity_branches.items():
        if p_parity <= 0:
            continue
        terminal = parity is ODD and (gate is GateKind.PPC or (max_m is not None and iteration_m >= max_m))
        if branch is None:
            records.append(
                StepRecord(step_k, iteration_m, parity, p_parity, None, 1.0, False, None,
                           prior_p * p_parity, terminal=True)
            )
            continue
        for pm, (st, p_pm) in measure_pm(branch, ancilla_mode).items():
            if p_pm <= 0:
                continue
            st = st.relabel(rename).reordered(state.modes)
            if pm is MINUS:
                st = phase_flip_v(st, a_mode)
            records.append(
                StepRecord(step_k, iteration_m, parity, p_parity, pm, p_pm, pm is MINUS, st,
                           prior_p * p_parity, terminal=terminal)
            )

    if rng is None:
        return records
    p_even = next((r.p_parity for r in records if r.parity is EVEN), 0.0)
    parity = EVEN if rng.random() < p_even else ODD
    chosen = [r for r in records if r.parity is parity]
    u = rng.random()
    if len(chosen) == 1:
        return chosen
    return [chosen[0] if u < chosen[0].p_pm else chosen[1]]


def _merge(records: list[StepRecord], atol: float = 1e-10) -> PureState:
    """The common post-measurement state of the ``+`` and ``-`` branches."""
    states = [r.post_state for r in records if r.post_state is not None]
    first = states[0]
    for other in states[1:]:
        if not states_close(first, other, atol=atol, up_to_phase=True):
            raise RuntimeError("+ and - branches disagree after correction")
    return first


def _concentrate(coeffs: WCoefficients, gate: GateKind, max_m: int, pivot: int) -> ConcentrationReport:
    if not 1 <= pivot <= coeffs.n:
        raise ValueError(f"pivot {pivot} outside 1..{coeffs.n}")
    if max_m < 1:
        raise ValueError(f"max_m must be >= 1, got {max_m}")
    state = w_state(coeffs)
    trace: list[StepRecord] = []
    table: dict[tuple[int, int], float] = {}
    success_fidelities: list[float] = []
    cumulative = 1.0

    steps = step_order(coeffs.n, pivot)
    for k in steps:
        current, reach = state, 1.0
        winners: list[PureState] = []
        for m in range(1, max_m + 1):
            records = run_step(current, k, m, gate, pivot, prior_p=cumulative * reach, max_m=max_m)
            trace.extend(records)
            even = [r for r in records if r.parity is EVEN]
            odd = [r for r in records if r.parity is ODD]
            table[(k, m)] = reach * (even[0].p_parity if even else 0.0)
            if even:
                winners.append(_merge(even))
            if not odd or odd[0].terminal:
                break
            current = _merge(odd)
            reach *= odd[0].p_parity
        if not winners:
            raise RuntimeError(f"step {k} can never succeed")
        for w in winners[1:]:
            if not states_close(winners[0], w, atol=1e-10, up_to_phase=True):
                raise RuntimeError(f"step {k}: success state depends on the iteration")
        if k == steps[-1]:
            success_fidelities = [max_w_fidelity(w) for w in winners]
        cumulative *= sum(table[(k, m)] for m in range(1, max_m + 1) if (k, m) in table)
        state = winners[0]

    return ConcentrationReport(
        coeffs=coeffs,
        gate=gate,
        pivot=pivot,
        max_m=max_m,
        step_table=table,
        final_fidelity=min(success_fidelities),
        trace=trace,
    )


def ppc_run(coeffs: WCoefficients, pivot: int = 2) -> ConcentrationReport:
    """Exhaustive single-shot run with the post-selected linear-optics gate."""
    return _concentrate(coeffs, GateKind.PPC, 1, pivot)


def cpc_run(coeffs: WCoefficients, max_m: int, pivot: int = 2) -> ConcentrationReport:
    """Exhaustive run with QND parity checks and up to ``max_m`` tries per photon."""
    return _concentrate(coeffs, GateKind.CPC, max_m, pivot)


def concentrate(coeffs: WCoefficients, gate: GateKind | str, max_m: int = 1, pivot: int = 2) -> ConcentrationReport:
    gate = GateKind(gate)
    if gate is GateKind.PPC:
        return ppc_run(coeffs, pivot)
    return cpc_run(coeffs, max_m, pivot)


def select_pivot(coeffs: WCoefficients) -> int:
    """Label of the smallest ``|alpha_i|``, lowest label on ties."""
    mods = [abs(a) for a in coeffs.alphas]
    return mods.index(min(mods)) + 1


def apply_pivot(coeffs: WCoefficients, pivot: int) -> WCoefficients:
    """Swap coefficient ``pivot`` into the second slot."""
    if not 1 <= pivot <= coeffs.n:
        raise ValueError(f"pivot {pivot} outside 1..{coeffs.n}")
    alphas = list(coeffs.alphas)
    alphas[1], alphas[pivot - 1] = alphas[pivot - 1], alphas[1]
    return WCoefficients(tuple(alphas), coeffs.atol)


def success_fidelities(
    coeffs: WCoefficients, gate: GateKind | str, max_m: int = 1, pivot: int = 2
) -> list[tuple[tuple[StepRecord, ...], float]]:
    """Walk the full branch tree and return every success path with its fidelity.

    No branches are merged, so the number of paths grows quickly; meant for
    small instances.
    """
    gate = GateKind(gate)
    if gate is GateKind.PPC:
        max_m = 1
    steps = step_order(coeffs.n, pivot)
    out: list[tuple[tuple[StepRecord, ...], float]] = []

    def walk(state: PureState, idx: int, m: int, path: tuple[StepRecord, ...]) -> None:
        if idx == len(steps):
            out.append((path, max_w_fidelity(state)))
            return
        for r in run_step(state, steps[idx], m, gate, pivot, max_m=max_m):
            if r.terminal or r.post_state is None:
                continue
            if r.parity is EVEN:
                walk(r.post_state, idx + 1, 1, path + (r,))
            else:
                walk(r.post_state, idx, m + 1, path + (r,))

    walk(w_state(coeffs), 0, 1, ())
    return out
