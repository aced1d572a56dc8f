"""Encoded logical circuit families and their output statistics.

A lattice run with preparation beta and non-output outcomes y drives an
n-qubit logical circuit built column by column: a diagonal phase layer
diag(1, e^{i beta}) per qubit, a byproduct layer Z^a (absent on the last
column), a CZ chain on neighboring qubits, and a Hadamard layer. The family
generated by disordered angles in {0, pi/4} is called here the DO family
(architectures I and III; for III the angle bits are the dangling-bond
outcomes) and by column-constant angles in {0, pi/8} the column family
(architecture II).

The conditional output distribution q(x | y, beta) of the lattice equals the
output distribution of this circuit exactly; the cross-check against
:mod:`quenchsim.statevec` pins the byproduct wiring.

Anti-concentration statistics: gamma is the fraction of output probabilities
at least 2^-n; an ideal Porter-Thomas (exponential) ensemble has mean gamma
1/e. The total-variation diagnostic bins all 2^n probabilities into
equal-mass intervals of the exponential distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import Architecture, Lattice
from .prep import BetaConfig, beta_from_bits
from .rng import RandomStream

SIMULATION_LIMIT = 20

Layer = tuple


@dataclass(frozen=True)
class LogicalCircuit:
    """Gate layers of one encoded instance, in application order."""

    n: int
    m: int
    layers: tuple[Layer, ...]

    def column_blocks(self) -> int:
        return sum(1 for layer in self.layers if layer[0] == "hadamard")


def _byproduct_bit(y: np.ndarray, n: int, m: int, row: int, col: int) -> int:
    # non-output primitive sites in ascending site order: row*(m-1) + col
    return int(y[row * (m - 1) + col])


def _dangling_bit(y: np.ndarray, n: int, m: int, row: int, col: int) -> int:
    return int(y[n * (m - 1) + row * m + col])


def expected_y_length(arch: Architecture, n: int, m: int) -> int:
    mu = arch.qubits_per_cell
    return mu * n * m - n


def build_circuit(
    arch: Architecture | str,
    n: int,
    m: int,
    beta: BetaConfig | None,
    y,
    rng: RandomStream | None = None,
) -> LogicalCircuit:
    """Assemble the logical circuit for one realization (beta, y).

    ``y`` supplies the byproduct bits for columns before the last and, for
    architecture III, the dangling outcomes: outcome s teleports an extra
    phase of s * pi/4 onto its grid site, on top of the site's preparation
    angle. With ``beta=None`` (zero preparation angle) this reduces to
    angles s * pi/4, the disordered family's canonical form. Pass ``y=None``
    to sample it uniformly from ``rng``.
    """
    arch = Architecture.parse(arch)
    if y is None:
        if rng is None:
            raise ValueError("y=None requires an rng to sample outcomes")
        y = rng.bits(expected_y_length(arch, n, m))
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (expected_y_length(arch, n, m),):
        raise ValueError(
            f"y must have {expected_y_length(arch, n, m)} bits, got {y.shape}"
        )
    if beta is None and arch is not Architecture.III:
        raise ValueError("architectures I and II take their angles from beta")
    if beta is not None and (beta.n, beta.m) != (n, m):
        raise ValueError("beta dimensions do not match the circuit")

    layers: list[Layer] = []
    for col in range(m):
        if arch is Architecture.III:
            angles = np.array(
                [
                    (0.0 if beta is None else beta.angle(r, col))
                    + (math.pi / 4) * _dangling_bit(y, n, m, r, col)
                    for r in range(n)
                ]
            )
        else:
            angles = np.array([beta.angle(r, col) for r in range(n)])
        layers.append(("phase", angles))
        if col < m - 1:
            bits = np.array([_byproduct_bit(y, n, m, r, col) for r in range(n)])
            layers.append(("byproduct", bits))
        layers.append(("cz_chain",))
        layers.append(("hadamard",))
    return LogicalCircuit(n=n, m=m, layers=tuple(layers))


_BITS_CACHE: dict[int, np.ndarray] = {}


def _bits_matrix(n: int) -> np.ndarray:
    if n not in _BITS_CACHE:
        idx = np.arange(1 << n, dtype=np.int64)
        _BITS_CACHE[n] = np.stack([((idx >> r) & 1) for r in range(n)], axis=1).astype(float)
    return _BITS_CACHE[n]


def _cz_chain_signs(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    pairs = idx & (idx >> 1)
    parity = np.zeros(1 << n, dtype=np.int64)
    while pairs.any():
        parity ^= pairs & 1
        pairs >>= 1
    return 1.0 - 2.0 * parity


def simulate_circuit(circuit: LogicalCircuit) -> np.ndarray:
    """Exact output distribution |<x| C |+>^n|^2; entry index bit r = qubit r."""
    n = circuit.n
    if n > SIMULATION_LIMIT:
        raise ValueError(f"dense simulation supported up to n={SIMULATION_LIMIT}")
    amps = np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128)
    bits = _bits_matrix(n)
    cz = _cz_chain_signs(n)
    for layer in circuit.layers:
        kind = layer[0]
        if kind == "phase":
            amps = amps * np.exp(1j * (bits @ layer[1]))
        elif kind == "byproduct":
            amps = amps * (1.0 - 2.0 * ((bits @ layer[1]).astype(np.int64) & 1))
        elif kind == "cz_chain":
            amps = amps * cz
        elif kind == "hadamard":
            for r in range(n):
                view = amps.reshape(-1, 2, 1 << r)
                lo = view[:, 0, :].copy()
                hi = view[:, 1, :]
                view[:, 0, :] = lo + hi
                view[:, 1, :] = lo - hi
            amps *= 2.0 ** (-n / 2)
        else:
            raise ValueError(f"unknown layer kind {kind!r}")
    return np.abs(amps) ** 2


def gamma_of_table(table: np.ndarray) -> float:
    """Fraction of output probabilities at least 1/2^n."""
    size = len(table)
    return float(np.count_nonzero(table >= 1.0 / size) / size)


@dataclass(frozen=True)
class OutputStats:
    """Per-instance anti-concentration summary."""

    instance: int
    n: int
    gamma: float
    tv_pt: float


def anti_concentration_stats(tables: list[np.ndarray]):
    """Per-instance gamma values, their mean, and the fraction alpha >= 1/e."""
    if not tables:
        raise ValueError("need at least one probability table")
    sizes = {len(t) for t in tables}
    if len(sizes) != 1:
        raise ValueError("tables must share a common qubit count")
    gammas = np.array([gamma_of_table(t) for t in tables])
    alpha = float(np.mean(gammas >= 1.0 / math.e))
    return gammas, float(gammas.mean()), alpha


def pt_bin_count(n: int) -> int:
    return min(math.ceil(2**n / 5), 100)


def pt_bin_edges(n: int) -> np.ndarray:
    """Equal-mass bin edges of the exponential distribution 2^n e^{-2^n p}.

    Closed-form quantiles p_i = -ln(1 - i/bins) / 2^n; the final (infinite)
    edge is clipped to 1.
    """
    bins = pt_bin_count(n)
    i = np.arange(bins + 1, dtype=float)
    with np.errstate(divide="ignore"):
        edges = -np.log1p(-i / bins) / 2**n
    edges[-1] = 1.0
    return edges


def pt_tv_distance(table: np.ndarray, n: int) -> float:
    """Total-variation distance of the binned probabilities to Porter-Thomas.

    All 2^n exact probabilities act as the sample set; empirical bin masses
    are compared against the uniform 1/bins target.
    """
    if len(table) != 2**n:
        raise ValueError(f"table must have 2^{n} entries")
    edges = pt_bin_edges(n)
    counts, _ = np.histogram(table, bins=edges)
    masses = counts / 2**n
    return float(0.5 * np.abs(masses - 1.0 / len(counts)).sum())


def sample_instance(
    arch: Architecture | str, n: int, m: int, rng: RandomStream
) -> LogicalCircuit:
    """Draw one (beta, y) realization of the family and build its circuit."""
    arch = Architecture.parse(arch)
    y = rng.bits(expected_y_length(arch, n, m))
    if arch is Architecture.III:
        return build_circuit(arch, n, m, None, y)
    if arch is Architecture.I:
        beta = beta_from_bits(arch, n, m, rng.bits(n * m))
    else:
        col_bits = rng.bits(m)
        beta = beta_from_bits(arch, n, m, np.tile(col_bits, (n, 1)).reshape(n * m))
    return build_circuit(arch, n, m, beta, y)


def lattice_y_to_circuit(lattice: Lattice, beta: BetaConfig, y) -> LogicalCircuit:
    """Circuit for an explicit lattice realization (used by the bridge checks)."""
    return build_circuit(lattice.arch, lattice.n, lattice.m, beta, y)
