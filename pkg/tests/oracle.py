"""Dense brute-force reference for the concentration protocol.

Photons are plain qubits (bit 0 = H, bit 1 = V) in a 2**n amplitude array;
no mode registry, no PBS, no sparse terms. Shares nothing with the package
except the physics it is meant to check.
"""

import numpy as np


def dense_w(alphas):
    n = len(alphas)
    psi = np.zeros(2**n, dtype=complex)
    for i, a in enumerate(alphas):
        psi[1 << (n - 1 - i)] = a
    return psi


def _bit(index, q, n):
    return (index >> (n - 1 - q)) & 1


def dense_attempt(psi, n, q, pivot_q):
    """One parity check on qubit ``q`` with an ancilla matched to the state.

    Returns ``{parity: (probability, corrected_state_or_None)}`` where the
    states are unnormalized, so probabilities multiply along a path.
    """
    amp_k = psi[1 << (n - 1 - q)]
    amp_p = psi[1 << (n - 1 - pivot_q)]
    s = np.sqrt(abs(amp_k) ** 2 + abs(amp_p) ** 2)
    anc = np.array([amp_k / s, amp_p / s])
    joint = np.kron(psi, anc).reshape(2**n, 2)
    bits = np.array([_bit(i, q, n) for i in range(2**n)])

    out = {}
    for parity, keep in (("even", lambda b, a: b == a), ("odd", lambda b, a: b != a)):
        proj = joint.copy()
        for a in (0, 1):
            proj[~keep(bits, a), a] = 0
        prob = float(np.sum(abs(proj) ** 2))
        # ancilla onto |+>; the |-> branch equals it after the V flip on q
        plus = (proj[:, 0] + proj[:, 1]) / np.sqrt(2)
        minus = (proj[:, 0] - proj[:, 1]) / np.sqrt(2)
        minus = np.where(bits == 1, -minus, minus)
        out[parity] = (prob, plus * np.sqrt(2), minus * np.sqrt(2))
    return out


def dense_table(alphas, max_m, pivot=2):
    """``{(k, m): P}`` for the retry protocol, 1-based labels."""
    n = len(alphas)
    psi = dense_w(np.asarray(alphas, dtype=complex))
    table = {}
    for k in [j for j in range(1, n + 1) if j != pivot]:
        current, reach = psi / np.linalg.norm(psi), 1.0
        winner = None
        for m in range(1, max_m + 1):
            branches = dense_attempt(current, n, k - 1, pivot - 1)
            p_even, plus, _ = branches["even"]
            table[k, m] = reach * p_even
            if winner is None and p_even > 0:
                winner = plus / np.linalg.norm(plus)
            p_odd, odd_plus, _ = branches["odd"]
            if p_odd == 0:
                break
            current = odd_plus / np.linalg.norm(odd_plus)
            reach *= p_odd
        psi = winner
    return table, psi


def dense_fidelity(psi):
    n = int(np.log2(psi.size))
    w = dense_w(np.full(n, 1 / np.sqrt(n)))
    return abs(np.vdot(w, psi)) ** 2
