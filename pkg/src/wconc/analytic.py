"""Closed-form success probabilities of the W-state concentration protocol.

Everything here works on squared moduli ``|alpha_i|^2`` and never touches the
state simulator. Photon labels are 1-based. Steps visit every photon except
the pivot, in ascending label order; with the default pivot 2 that is the
order 1, 3, 4, ..., N.

For a step on photon ``k`` let ``c`` be the number of slots already carrying
the pivot coefficient (the pivot itself plus the photons done before ``k``),
``R`` the weight of photons still waiting after ``k`` and
``D = c*a_p + a_k + R`` the weight of the current state in units of the
original one. The chance that photon ``k`` succeeds exactly at retry ``m``
(``e = 2**(m-1)``) is::

    ((c+1) a_p^e a_k^e + a_k^e a_p^(e-1) R) / (D * prod_{j<=m} (a_p^(2^(j-1)) + a_k^(2^(j-1))))

With pivot 2 the count ``c + 1`` equals the photon label ``K`` for K >= 3 and
2 for K = 1. ``m = 1`` is the single-shot (linear optics) probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .qstate import ATOL


@dataclass(frozen=True)
class ProbabilityTable:
    """Per-step, per-iteration success probabilities and their aggregates."""

    pivot: int
    max_m: int
    per_step_per_m: dict[tuple[int, int], float]
    per_step_sum: dict[int, float] = field(init=False)
    total: float = field(init=False)

    def __post_init__(self) -> None:
        sums: dict[int, float] = {}
        for (k, _m), p in sorted(self.per_step_per_m.items()):
            sums[k] = sums.get(k, 0.0) + p
        object.__setattr__(self, "per_step_sum", sums)
        object.__setattr__(self, "total", math.prod(sums.values()))

    @property
    def steps(self) -> list[int]:
        return sorted(self.per_step_sum)


def _validate(alphas2: Sequence[float], pivot: int, atol: float = ATOL) -> list[float]:
    a = [float(x) for x in alphas2]
    if len(a) < 2:
        raise ValueError("need at least two coefficients")
    if any(not x > 0 for x in a):
        raise ValueError("every |alpha_i|^2 must be positive")
    if abs(sum(a) - 1.0) > atol:
        raise ValueError(f"squared moduli sum to {sum(a)!r}, expected 1")
    if not 1 <= pivot <= len(a):
        raise ValueError(f"pivot {pivot} outside 1..{len(a)}")
    return a


def step_order(n: int, pivot: int = 2) -> list[int]:
    """Photon labels in the order they are concentrated."""
    return [k for k in range(1, n + 1) if k != pivot]


def _step_context(a: list[float], k: int, pivot: int) -> tuple[int, float, float]:
    order = step_order(len(a), pivot)
    if k not in order:
        raise ValueError(f"step {k} is the pivot or out of range 1..{len(a)}")
    pos = order.index(k)
    c = 1 + pos
    rest = sum(a[j - 1] for j in order[pos + 1 :])
    d = c * a[pivot - 1] + a[k - 1] + rest
    return c, rest, d


def p_step_ppc(alphas2: Sequence[float], k: int, pivot: int = 2) -> float:
    """Conditional single-shot success probability of step ``k``."""
    a = _validate(alphas2, pivot)
    c, rest, d = _step_context(a, k, pivot)
    ak, ap = a[k - 1], a[pivot - 1]
    return ak * ((c + 1) * ap + rest) / (d * (ap + ak))


def p_total_ppc(alphas2: Sequence[float], pivot: int = 2) -> float:
    """``N * prod(a_i) / prod_{k != pivot}(a_p + a_k)``."""
    a = _validate(alphas2, pivot)
    ap = a[pivot - 1]
    num = len(a) * math.prod(a)
    den = math.prod(ap + a[k - 1] for k in step_order(len(a), pivot))
    return num / den


def _log_pair_sum(ap: float, ak: float, e: int) -> float:
    """``log(ap**e + ak**e)`` without overflow or underflow."""
    hi, lo = max(ap, ak), min(ap, ak)
    return e * math.log(hi) + math.log1p((lo / hi) ** e)


def p_step_cpc(
    alphas2: Sequence[float], k: int, m: int, pivot: int = 2, literal_form: bool = False
) -> float:
    """Probability that step ``k`` first succeeds at iteration ``m``.

    Conditioned on all earlier steps having succeeded. Evaluated in log space,
    so very deep iterations underflow to 0.0 instead of failing.

    ``literal_form=True`` evaluates the label-based variant of the formula, with
    the photon label ``K`` as the leading numerator factor and the sums over
    labels greater than ``K``. It only exists for pivot 2 and is kept to show
    that it coincides with the general form there.
    """
    if m < 1:
        raise ValueError(f"iteration must be >= 1, got {m}")
    a = _validate(alphas2, pivot)
    if literal_form:
        return _p_step_cpc_verbatim(a, k, m, pivot)
    c, rest, d = _step_context(a, k, pivot)
    ak, ap = a[k - 1], a[pivot - 1]
    e = 2 ** (m - 1)
    log_num = e * math.log(ak) + (e - 1) * math.log(ap) + math.log((c + 1) * ap + rest)
    log_den = math.log(d) + sum(_log_pair_sum(ap, ak, 2 ** (j - 1)) for j in range(1, m + 1))
    return math.exp(log_num - log_den)


def _p_step_cpc_verbatim(a: list[float], k: int, m: int, pivot: int) -> float:
    if pivot != 2:
        raise ValueError("the literal form fixes the pivot at photon 2")
    n = len(a)
    if not 1 <= k <= n or k == 2:
        raise ValueError(f"invalid step {k}")
    a2, ak = a[1], a[k - 1]
    big = 2**m
    tail = sum(a[j - 1] for j in range(k + 1, n + 1))
    # alpha^(2^M) == (alpha^2)^(2^(M-1))
    num = k * a2 ** (big // 2) * ak ** (big // 2) + ak ** (big // 2) * a2 ** (big // 2 - 1) * tail
    bracket = (k - 1) * a2 + ak + tail
    den = bracket * math.prod(a2 ** (2 ** (j - 1)) + ak ** (2 ** (j - 1)) for j in range(1, m + 1))
    return num / den if den > 0 else 0.0


def p_total_cpc(alphas2: Sequence[float], max_m: int, pivot: int = 2) -> ProbabilityTable:
    """Table of ``p_step_cpc`` for every step and ``m <= max_m``."""
    if max_m < 1:
        raise ValueError(f"max_m must be >= 1, got {max_m}")
    a = _validate(alphas2, pivot)
    table = {
        (k, m): p_step_cpc(a, k, m, pivot)
        for k in step_order(len(a), pivot)
        for m in range(1, max_m + 1)
    }
    return ProbabilityTable(pivot=pivot, max_m=max_m, per_step_per_m=table)
