"""Exact dense simulation of the quench and the fixed-basis readout.

Basis convention: bit k of the amplitude-array index is the state of site k,
so index z represents the computational state |z_{N-1} ... z_1 z_0> with
z_k = (z >> k) & 1. The quench is diagonal and applies phases e^{+i H(z)};
with the fields of :mod:`quenchsim.lattice` this sign enacts CZ on bright
edges and CT = diag(1, 1, 1, e^{i pi/4}) on dark edges, which is the
convention under which outcome probabilities reproduce the random-Ising
partition-function correspondence checked in :mod:`quenchsim.ising`.

Readout measures primitive sites in the X basis (a Hadamard on each primitive
site before reading computational-basis probabilities) and dangling sites
directly in Z. After that rotation, bit k of a table index *is* the recorded
outcome of site k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import IsingCouplings, Lattice
from .rng import RandomStream

DENSE_TABLE_LIMIT = 24  # beyond this, amplitude arrays stop being practical


@dataclass
class StateVector:
    """Normalized amplitudes over the 2^N computational basis states."""

    n_qubits: int
    amps: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amps.copy())


def plus_state(n_qubits: int) -> StateVector:
    amps = np.full(2**n_qubits, 2.0 ** (-n_qubits / 2), dtype=np.complex128)
    return StateVector(n_qubits, amps)


def basis_bits(n_qubits: int, site: int) -> np.ndarray:
    """Bit `site` of every basis index, as an int8 array of length 2^N."""
    idx = np.arange(2**n_qubits, dtype=np.int64)
    return ((idx >> site) & 1).astype(np.int8)


def diagonal_energy(couplings: IsingCouplings, lattice: Lattice) -> np.ndarray:
    """Classical energy H(z) of every basis state (spin s = 1 - 2*bit)."""
    n = lattice.n_sites
    energy = np.zeros(2**n)
    spins = [1.0 - 2.0 * basis_bits(n, s) for s in range(n)]
    for (u, v, _), j in zip(lattice.edges, couplings.edge_coupling):
        energy += j * spins[u] * spins[v]
    for s in range(n):
        energy -= couplings.h[s] * spins[s]
    return energy


def evolve_diagonal(
    state: StateVector, couplings: IsingCouplings, lattice: Lattice
) -> StateVector:
    """Apply the quench: multiply amplitude z by e^{+i H(z)}. Norm-preserving."""
    if state.n_qubits != lattice.n_sites:
        raise ValueError(
            f"state has {state.n_qubits} qubits, lattice has {lattice.n_sites} sites"
        )
    phases = np.exp(1j * diagonal_energy(couplings, lattice))
    return StateVector(state.n_qubits, state.amps * phases)


def apply_hadamard(amps: np.ndarray, sites: list[int], n_qubits: int) -> np.ndarray:
    """Hadamard on each listed site (single normalization at the end)."""
    out = amps.copy()
    for s in sites:
        view = out.reshape(-1, 2, 2**s)
        a = view[:, 0, :].copy()
        b = view[:, 1, :]
        view[:, 0, :] = a + b
        view[:, 1, :] = a - b
    out *= 2.0 ** (-len(sites) / 2)
    return out


@dataclass(frozen=True)
class OutcomeRecord:
    """One readout: bits `a` over X-measured sites, `b` over Z-measured ones."""

    a: tuple[int, ...]
    b: tuple[int, ...]

    def bitstring(self) -> str:
        return "".join(str(x) for x in self.a) + "".join(str(x) for x in self.b)


def outcome_from_index(z: int, lattice: Lattice) -> OutcomeRecord:
    np_, nd = lattice.n_primitive, lattice.n_dangling
    a = tuple((z >> k) & 1 for k in range(np_))
    b = tuple((z >> (np_ + k)) & 1 for k in range(nd))
    return OutcomeRecord(a=a, b=b)


def index_from_outcome(rec: OutcomeRecord, lattice: Lattice) -> int:
    z = 0
    for k, bit in enumerate(rec.a):
        z |= int(bit) << k
    for k, bit in enumerate(rec.b):
        z |= int(bit) << (lattice.n_primitive + k)
    return z


def measurement_distribution(state: StateVector, lattice: Lattice) -> np.ndarray:
    """Dense probability table over outcomes (a, b).

    Entry z holds prob(a, b) where bit k of z is the outcome of site k
    (primitive sites X-rotated, dangling sites read in Z).
    """
    if state.n_qubits > DENSE_TABLE_LIMIT:
        raise ValueError(f"dense tables supported up to N={DENSE_TABLE_LIMIT}")
    rotated = apply_hadamard(state.amps, list(range(lattice.n_primitive)), state.n_qubits)
    return np.abs(rotated) ** 2


def sample_shots(
    state: StateVector, lattice: Lattice, shots: int, rng: RandomStream
) -> list[OutcomeRecord]:
    """i.i.d. single-shot readouts of the evolved state."""
    if shots < 1:
        raise ValueError("shots must be a positive integer")
    table = measurement_distribution(state, lattice)
    cdf = np.cumsum(table)
    cdf[-1] = 1.0
    draws = rng.generator.random(shots)
    indices = np.searchsorted(cdf, draws, side="right")
    return [outcome_from_index(int(z), lattice) for z in indices]


def _gather_indices(y: np.ndarray, lattice: Lattice) -> np.ndarray:
    """Table indices of all (x, y) outcomes for fixed non-output bits y."""
    nonout = lattice.nonoutput_sites()
    if len(y) != len(nonout):
        raise ValueError(f"y must have {len(nonout)} bits, got {len(y)}")
    base = 0
    for site, bit in zip(nonout, y):
        base |= int(bit) << site
    out_sites = lattice.output_sites()
    n = len(out_sites)
    idx = np.full(2**n, base, dtype=np.int64)
    x = np.arange(2**n, dtype=np.int64)
    for r, site in enumerate(out_sites):
        idx |= ((x >> r) & 1) << site
    return idx


def conditional_distribution(
    full_table: np.ndarray, y, lattice: Lattice
) -> np.ndarray:
    """q(x | y) over the n output sites, given non-output outcome bits y.

    Uses the exact marginal q(y) = 1 / 2^(N-n), so the conditional is the
    joint slice scaled by 2^(N-n). Entry index x has bit r = outcome of the
    output site in row r.
    """
    y = np.asarray(y, dtype=np.int64)
    joint = full_table[_gather_indices(y, lattice)]
    if joint.sum() < 1e-15:
        raise ValueError("conditioning event has vanishing probability")
    return joint * 2.0 ** (lattice.n_sites - lattice.n)


def marginal_nonoutput(full_table: np.ndarray, lattice: Lattice) -> np.ndarray:
    """Marginal over the non-output sites; uniform at 1/2^(N-n) for any quench."""
    n_non = lattice.n_sites - lattice.n
    probs = np.empty(2**n_non)
    nonout = lattice.nonoutput_sites()
    for i in range(2**n_non):
        y = [(i >> k) & 1 for k in range(n_non)]
        probs[i] = full_table[_gather_indices(np.array(y), lattice)].sum()
    return probs


def distribution_to_bytes(table: np.ndarray) -> bytes:
    """Raw little-endian float64 dump for offline analysis."""
    return np.asarray(table, dtype="<f8").tobytes()
