"""Born-rule trajectory sampling of whole concentration runs.

Random numbers come from a counter-based generator: uniform number ``j`` of
trial ``t`` is a pure hash of ``(seed, t, j)`` (SplitMix64 finalizer). Every
trial therefore sees the same numbers no matter how trials are batched or
parallelized. Draw positions are fixed by the attempt being made: attempt
``m`` on the ``s``-th concentrated photon uses draw ``2*(s*max_m + m - 1)``
for the parity and the next one for the ``+-`` outcome.

:func:`sample_run` pushes a single trajectory through the state simulator.
:func:`estimate` reuses the parity probabilities produced by the same
simulator (one exhaustive pass) and draws all trials vectorized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import step_order
from .optics import ParityOutcome
from .protocol import GateKind, _merge, run_step
from .qstate import WCoefficients, max_w_fidelity, w_state

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1
CHUNK = 1 << 17


def _mix(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def trial_keys(seed: int, trials: np.ndarray) -> np.ndarray:
    """Per-trial stream keys: ``mix(mix(seed) xor t)``."""
    base = _mix(np.array([seed & _MASK64], dtype=np.uint64))
    return _mix(base ^ trials.astype(np.uint64))


def uniforms(keys: np.ndarray, position: int) -> np.ndarray:
    """Uniform doubles in [0, 1) at draw ``position`` of each stream."""
    pos = _mix(np.array([position], dtype=np.uint64))
    bits = _mix(keys ^ pos)
    return (bits >> np.uint64(11)).astype(np.float64) * 2.0**-53


class TrialStream:
    """Scalar view of one trial's stream, with an explicit draw cursor."""

    def __init__(self, key: int) -> None:
        self._key = np.array([key], dtype=np.uint64)
        self.position = 0

    def seek(self, position: int) -> None:
        self.position = position

    def random(self) -> float:
        u = float(uniforms(self._key, self.position)[0])
        self.position += 1
        return u


@dataclass(frozen=True)
class TrialResult:
    success: bool
    iterations_used: dict[int, int]
    fidelity: float | None
    attempts: int


@dataclass(frozen=True)
class Estimate:
    p_hat: float
    stderr: float
    trials: int
    seed: int
    successes: int


def _draw_position(step_index: int, m: int, max_m: int) -> int:
    return 2 * (step_index * max_m + m - 1)


def _check(gate: GateKind, max_m: int) -> int:
    if max_m < 1:
        raise ValueError(f"max_m must be >= 1, got {max_m}")
    return 1 if gate is GateKind.PPC else max_m


def sample_run(
    coeffs: WCoefficients,
    gate: GateKind | str,
    max_m: int = 1,
    pivot: int = 2,
    seed: int = 0,
    *,
    trial: int = 0,
) -> TrialResult:
    """One stochastic trajectory, identical to trial ``trial`` of :func:`estimate`."""
    gate = GateKind(gate)
    max_m = _check(gate, max_m)
    stream = TrialStream(int(trial_keys(seed, np.array([trial]))[0]))
    state = w_state(coeffs)
    used: dict[int, int] = {}
    attempts = 0
    for s, k in enumerate(step_order(coeffs.n, pivot)):
        m = 1
        while True:
            stream.seek(_draw_position(s, m, max_m))
            (rec,) = run_step(state, k, m, gate, pivot, rng=stream, max_m=max_m)
            attempts += 1
            if rec.parity is ParityOutcome.EVEN:
                used[k] = m
                state = rec.post_state
                break
            if rec.terminal:
                return TrialResult(False, used, None, attempts)
            state = rec.post_state
            m += 1
    return TrialResult(True, used, max_w_fidelity(state), attempts)


def parity_table(coeffs: WCoefficients, gate: GateKind | str, max_m: int = 1, pivot: int = 2) -> np.ndarray:
    """Conditional even-parity probability for every (step, attempt).

    Row ``s`` is the ``s``-th concentrated photon, column ``m - 1`` the
    ``m``-th attempt on it; computed with :func:`run_step`.
    """
    gate = GateKind(gate)
    max_m = _check(gate, max_m)
    steps = step_order(coeffs.n, pivot)
    table = np.zeros((len(steps), max_m))
    state = w_state(coeffs)
    for s, k in enumerate(steps):
        current, winner = state, None
        for m in range(1, max_m + 1):
            records = run_step(current, k, m, gate, pivot, max_m=max_m)
            even = [r for r in records if r.parity is ParityOutcome.EVEN]
            odd = [r for r in records if r.parity is ParityOutcome.ODD and r.post_state is not None]
            if even:
                table[s, m - 1] = even[0].p_parity
                winner = winner or _merge(even)
            if not odd or m == max_m:
                break
            current = _merge(odd)
        state = winner
    return table


def estimate(
    coeffs: WCoefficients,
    gate: GateKind | str,
    max_m: int = 1,
    pivot: int = 2,
    trials: int = 100_000,
    seed: int = 0,
) -> Estimate:
    """Fraction of successful trajectories over ``trials`` runs."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    gate = GateKind(gate)
    max_m = _check(gate, max_m)
    table = parity_table(coeffs, gate, max_m, pivot)
    successes = 0
    for start in range(0, trials, CHUNK):
        idx = np.arange(start, min(start + CHUNK, trials), dtype=np.uint64)
        keys = trial_keys(seed, idx)
        alive = np.ones(idx.size, dtype=bool)
        for s in range(table.shape[0]):
            done = np.zeros(idx.size, dtype=bool)
            for m in range(1, max_m + 1):
                u = uniforms(keys, _draw_position(s, m, max_m))
                done |= ~done & (u < table[s, m - 1])
            alive &= done
        successes += int(alive.sum())
    p_hat = successes / trials
    return Estimate(p_hat, math.sqrt(p_hat * (1 - p_hat) / trials), trials, seed, successes)
