"""Dense IQP circuits and their linear-depth nearest-neighbor schedule.

An IQP circuit here is a commuting set of e^{i theta X} and e^{i theta XX}
gates with angles restricted to multiples of pi/8 (stored as integers k,
angle = k * pi/8, exact modulo 16). Normalization sums angles on identical
supports, leaving at most one gate per qubit and per pair.

The scheduler is an odd-even transposition network: n rounds of disjoint
adjacent transpositions. When two logical qubits become adjacent their pair
gate (if any) is applied just before the SWAP; every qubit idles at a line
boundary at least once, where its single-qubit gate is placed. After n
rounds the line order is exactly reversed and every pair has met exactly
once, so the whole circuit fits in depth at most 2n + 2 (gate plus SWAP
sub-layers per round).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

ANGLE_UNIT = math.pi / 8
ANGLE_MOD = 16
VERIFY_LIMIT = 10


@dataclass(frozen=True)
class IQPCircuit:
    """X-type commuting circuit: angles in units of pi/8 keyed by support."""

    n: int
    singles: dict[int, int]
    pairs: dict[tuple[int, int], int]

    def gate_count(self) -> int:
        return len(self.singles) + len(self.pairs)


@dataclass(frozen=True)
class Round:
    """One transposition round: adjacent pairs (pos, pos+1) and idle singles.

    ``swaps`` holds (pos, angle_k_or_None): the IQP gate on that pair (when
    present) followed by a SWAP. ``singles`` holds (pos, angle_k) gates on
    resting positions.
    """

    swaps: tuple[tuple[int, int | None], ...]
    singles: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class Schedule:
    n: int
    rounds: tuple[Round, ...]
    depth: int
    final_order: tuple[int, ...] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "qubits": self.n,
            "depth": self.depth,
            "rounds": [
                {
                    "swaps": [
                        {"pos": p, "angle_units": k} for (p, k) in rnd.swaps
                    ],
                    "singles": [
                        {"pos": p, "angle_units": k} for (p, k) in rnd.singles
                    ],
                }
                for rnd in self.rounds
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def random_iqp(n: int, rng) -> IQPCircuit:
    """Dense random instance: every qubit and pair slot gets a uniform angle
    from {0, ..., 7} * pi/8."""
    if n < 1:
        raise ValueError("need at least one qubit")
    gen = rng.generator
    singles = {i: int(k) for i, k in enumerate(gen.integers(0, 8, size=n))}
    pairs = {}
    for u in range(n):
        for v in range(u + 1, n):
            pairs[(u, v)] = int(gen.integers(0, 8))
    return IQPCircuit(n=n, singles=singles, pairs=pairs)


def normalize(circuit: IQPCircuit) -> IQPCircuit:
    """Sum angles on identical supports modulo 2 pi and drop zero gates."""
    singles: dict[int, int] = {}
    for site, k in circuit.singles.items():
        singles[site] = (singles.get(site, 0) + k) % ANGLE_MOD
    pairs: dict[tuple[int, int], int] = {}
    for (u, v), k in circuit.pairs.items():
        key = (min(u, v), max(u, v))
        pairs[key] = (pairs.get(key, 0) + k) % ANGLE_MOD
    return IQPCircuit(
        n=circuit.n,
        singles={s: k for s, k in singles.items() if k % ANGLE_MOD != 0},
        pairs={p: k for p, k in pairs.items() if k % ANGLE_MOD != 0},
    )


def is_normalized(circuit: IQPCircuit) -> bool:
    if any(k % ANGLE_MOD == 0 for k in circuit.singles.values()):
        return False
    for (u, v), k in circuit.pairs.items():
        if u >= v or k % ANGLE_MOD == 0:
            return False
    return True


def _round_pairs(n: int, t: int) -> list[int]:
    """Left positions of the adjacent pairs in round t (1-based)."""
    start = 0 if t % 2 == 1 else 1
    return list(range(start, n - 1, 2))


def schedule_linear(circuit: IQPCircuit) -> Schedule:
    """Odd-even transposition schedule; requires a normalized circuit.

    Emits every pair gate at the unique round where its qubits are adjacent,
    single-qubit gates at the first boundary rest of their qubit, and ends
    with the line order reversed.
    """
    if not is_normalized(circuit):
        raise ValueError("schedule_linear expects a normalized circuit")
    n = circuit.n
    order = list(range(n))  # order[pos] = logical qubit
    pending_singles = dict(circuit.singles)
    pending_pairs = dict(circuit.pairs)
    rounds: list[Round] = []
    depth = 0
    total_rounds = max(n, 1)
    for t in range(1, total_rounds + 1):
        lefts = _round_pairs(n, t)
        busy = set()
        swaps = []
        for p in lefts:
            u, v = order[p], order[p + 1]
            key = (min(u, v), max(u, v))
            swaps.append((p, pending_pairs.pop(key, None)))
            busy.update((p, p + 1))
            order[p], order[p + 1] = order[p + 1], order[p]
        singles = []
        for p in range(n):
            if p not in busy:
                q = order[p]
                if q in pending_singles:
                    singles.append((p, pending_singles.pop(q)))
        if swaps:
            depth += 2 if any(k is not None for _, k in swaps) else 1
            if singles and all(k is None for _, k in swaps):
                depth = depth  # singles share the swap round's single layer
        elif singles:
            depth += 1
        rounds.append(Round(swaps=tuple(swaps), singles=tuple(singles)))
    if pending_pairs or pending_singles:
        raise AssertionError("transposition network failed to place all gates")
    return Schedule(n=n, rounds=tuple(rounds), depth=depth, final_order=tuple(order))


def replay_meetings(schedule: Schedule) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """(met pairs in order, final order, rest counts per logical qubit)."""
    n = schedule.n
    order = list(range(n))
    met = []
    rests = [0] * n
    for rnd in schedule.rounds:
        busy = set()
        for p, _ in rnd.swaps:
            u, v = order[p], order[p + 1]
            met.append((min(u, v), max(u, v)))
            busy.update((p, p + 1))
            order[p], order[p + 1] = order[p + 1], order[p]
        for p in range(n):
            if p not in busy:
                rests[order[p]] += 1
    return met, order, rests


def _x_gate(k: int) -> np.ndarray:
    theta = k * ANGLE_UNIT
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 1j * s], [1j * s, c]], dtype=np.complex128)


def _xx_gate(k: int) -> np.ndarray:
    theta = k * ANGLE_UNIT
    eye = np.eye(4, dtype=np.complex128)
    xx = np.zeros((4, 4), dtype=np.complex128)
    xx[0, 3] = xx[1, 2] = xx[2, 1] = xx[3, 0] = 1.0
    return math.cos(theta) * eye + 1j * math.sin(theta) * xx


def _apply_rows(u: np.ndarray, sites: tuple[int, ...], gate: np.ndarray, n: int) -> np.ndarray:
    """Left-multiply `gate` acting on the given row bits of operator `u`."""
    cols = u.shape[1]
    tensor = u.reshape([2] * n + [cols])
    axes = [n - 1 - s for s in sites]
    g = gate.reshape([2] * (2 * len(sites)))
    moved = np.tensordot(g, tensor, axes=(list(range(len(sites), 2 * len(sites))), axes))
    return np.moveaxis(moved, list(range(len(sites))), axes).reshape(u.shape)


def circuit_unitary(circuit: IQPCircuit) -> np.ndarray:
    """Dense unitary from the X-basis diagonal closed form."""
    n = circuit.n
    if n > VERIFY_LIMIT:
        raise ValueError(f"dense unitaries supported up to n={VERIFY_LIMIT}")
    idx = np.arange(1 << n, dtype=np.int64)
    sign = [1.0 - 2.0 * ((idx >> q) & 1) for q in range(n)]
    phase = np.zeros(1 << n)
    for q, k in circuit.singles.items():
        phase += (k * ANGLE_UNIT) * sign[q]
    for (u, v), k in circuit.pairs.items():
        phase += (k * ANGLE_UNIT) * sign[u] * sign[v]
    had = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    h_full = had
    for _ in range(n - 1):
        h_full = np.kron(h_full, had)
    return (h_full * np.exp(1j * phase)) @ h_full


def schedule_unitary(schedule: Schedule) -> np.ndarray:
    """Dense unitary of the schedule replayed gate by gate (no permutation fix)."""
    n = schedule.n
    if n > VERIFY_LIMIT:
        raise ValueError(f"dense unitaries supported up to n={VERIFY_LIMIT}")
    u = np.eye(1 << n, dtype=np.complex128)
    swap = np.zeros((4, 4), dtype=np.complex128)
    swap[0, 0] = swap[1, 2] = swap[2, 1] = swap[3, 3] = 1.0
    for rnd in schedule.rounds:
        for p, k in rnd.swaps:
            if k is not None:
                u = _apply_rows(u, (p, p + 1), _xx_gate(k), n)
        for p, k in rnd.singles:
            u = _apply_rows(u, (p,), _x_gate(k), n)
        for p, _ in rnd.swaps:
            u = _apply_rows(u, (p, p + 1), swap, n)
    return u


def _bit_reversal(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    rev = np.zeros_like(idx)
    for k in range(n):
        rev |= ((idx >> k) & 1) << (n - 1 - k)
    return rev


def phase_aligned_deviation(a: np.ndarray, b: np.ndarray) -> float:
    """Operator-norm distance after the optimal global-phase alignment of b."""
    overlap = np.trace(b.conj().T @ a)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-12 else 1.0
    return float(np.linalg.norm(a - phase * b, ord=2))


def verify_schedule(circuit: IQPCircuit, schedule: Schedule) -> float:
    """Operator-norm deviation between the circuit and the schedule composed
    with the final line reversal, after global-phase alignment."""
    target = circuit_unitary(normalize(circuit))
    replayed = schedule_unitary(schedule)
    reversed_rows = replayed[_bit_reversal(schedule.n), :]
    return phase_aligned_deviation(target, reversed_rows)
