"""Random Ising models whose partition functions give outcome probabilities.

For every readout (a, b) of a quench experiment there is a classical Ising
model on the n x m grid with coupling pi/4 on every grid edge and per-site
fields

    hhat_i = (pi/4) * bright_degree(i) - (alpha_i + theta_i) / 2,
    alpha_i = pi * a_i,   theta_i = beta_i + (pi/4) * b_i,

whose complex partition function Z = sum_s exp(-i H(s)) over spins
s in {+1, -1} satisfies

    prob(a, b | beta) = |Z|^2 / 2^(2 N_X + N_Z).

The base field is the bright-edge share only: the dark-edge share of the
quench field merges with the projected dark coupling into the (pi/4) b_i
outcome offset. The denominator 2^(2 N_X + N_Z) is the one that makes the
probabilities sum to one (checked exhaustively in the tests).

Spin convention: bit 0 maps to spin +1.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .lattice import Architecture, BRIGHT_COUPLING, IsingCouplings, Lattice, grid_field
from .prep import BetaConfig
from .statevec import StateVector, evolve_diagonal, measurement_distribution

BRUTE_FORCE_LIMIT = 24
TRANSFER_ROW_LIMIT = 26


@dataclass(frozen=True)
class IsingFieldConfig:
    """Effective fields of one outcome-resolved random Ising model."""

    n: int
    m: int
    hhat: np.ndarray  # length n*m, row-major
    n_x: int
    n_z: int


@dataclass(frozen=True)
class PartitionValue:
    """Complex partition value as mantissa * exp(log_scale).

    Long lattices overflow a float; the transfer sweep therefore keeps a
    running log-magnitude and a bounded mantissa.
    """

    mantissa: complex
    log_scale: float
    n_x: int
    n_z: int

    @property
    def value(self) -> complex:
        return self.mantissa * cmath.exp(self.log_scale)

    def log_abs2(self) -> float:
        if self.mantissa == 0:
            return -math.inf
        return 2.0 * (math.log(abs(self.mantissa)) + self.log_scale)

    def probability(self) -> float:
        """|Z|^2 / 2^(2 N_X + N_Z), evaluated in logs."""
        log_p = self.log_abs2() - (2 * self.n_x + self.n_z) * math.log(2.0)
        return math.exp(log_p) if log_p > -745 else 0.0


def field_config(a, b, beta: BetaConfig, couplings: IsingCouplings) -> IsingFieldConfig:
    """Effective fields hhat for outcome bits (a, b) and preparation beta."""
    lattice = couplings.lattice
    n_p = lattice.n_primitive
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != (n_p,):
        raise ValueError(f"a must have {n_p} bits, got {a.shape}")
    if b.shape != (lattice.n_dangling,):
        raise ValueError(f"b must have {lattice.n_dangling} bits, got {b.shape}")
    alpha = math.pi * a
    theta = np.asarray(beta.angles, dtype=float).copy()
    if lattice.n_dangling:
        theta = theta + (math.pi / 4) * b  # dangling k pairs with primitive k
    hhat = grid_field(lattice) - (alpha + theta) / 2.0
    hhat.setflags(write=False)
    return IsingFieldConfig(n=lattice.n, m=lattice.m, hhat=hhat, n_x=n_p, n_z=lattice.n_dangling)


def _grid_edges(n: int, m: int) -> list[tuple[int, int]]:
    edges = []
    for r in range(n):
        for c in range(m):
            s = r * m + c
            if c + 1 < m:
                edges.append((s, s + 1))
            if r + 1 < n:
                edges.append((s, s + m))
    return edges


def z_bruteforce(config: IsingFieldConfig) -> PartitionValue:
    """Z = sum over all 2^(N_X) spin assignments of exp(-i H(s)).

    H(s) = (pi/4) * sum_edges s_u s_v - sum_i hhat_i s_i. Exponential cost;
    guarded at N_X <= 24 and evaluated in chunks.
    """
    n_spins = config.n * config.m
    if n_spins > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force supported up to {BRUTE_FORCE_LIMIT} spins")
    edges = _grid_edges(config.n, config.m)
    total = 0.0 + 0.0j
    chunk = 1 << min(n_spins, 20)
    for start in range(0, 1 << n_spins, chunk):
        idx = np.arange(start, start + chunk, dtype=np.int64)
        spins = [1.0 - 2.0 * ((idx >> k) & 1) for k in range(n_spins)]
        energy = np.zeros(len(idx))
        for u, v in edges:
            energy += BRIGHT_COUPLING * spins[u] * spins[v]
        for k in range(n_spins):
            energy -= config.hhat[k] * spins[k]
        total += np.exp(-1j * energy).sum()
    return PartitionValue(mantissa=total, log_scale=0.0, n_x=config.n_x, n_z=config.n_z)


def z_transfer(config: IsingFieldConfig) -> PartitionValue:
    """Same value as :func:`z_bruteforce` via a column sweep in O(m n 2^n).

    The inter-column coupling factorizes over rows, so the 2^n x 2^n transfer
    step is n rank-2 butterfly passes. Each column renormalizes the running
    vector by its max modulus into a separate log scale, so arbitrarily long
    lattices stay finite.
    """
    n, m = config.n, config.m
    if n > TRANSFER_ROW_LIMIT:
        raise ValueError(f"transfer sweep supported up to {TRANSFER_ROW_LIMIT} rows")
    hh = np.asarray(config.hhat).reshape(n, m)
    idx = np.arange(1 << n, dtype=np.int64)
    spins = np.stack([1.0 - 2.0 * ((idx >> r) & 1) for r in range(n)])  # (n, 2^n)

    def column_phase(c: int) -> np.ndarray:
        energy = np.zeros(1 << n)
        for r in range(n - 1):
            energy += BRIGHT_COUPLING * spins[r] * spins[r + 1]
        for r in range(n):
            energy -= hh[r, c] * spins[r]
        return np.exp(-1j * energy)

    # M[bit, bit'] = exp(-i pi/4 s s'): equal bits -> e^{-i pi/4}, else e^{+i pi/4}
    eq = cmath.exp(-1j * BRIGHT_COUPLING)
    ne = cmath.exp(1j * BRIGHT_COUPLING)

    v = column_phase(0)
    log_scale = 0.0
    for c in range(1, m):
        for r in range(n):
            view = v.reshape(-1, 2, 1 << r)
            lo = view[:, 0, :].copy()
            hi = view[:, 1, :]
            view[:, 0, :] = eq * lo + ne * hi
            view[:, 1, :] = ne * lo + eq * hi
        v *= column_phase(c)
        peak = np.abs(v).max()
        if peak > 0:
            v /= peak
            log_scale += math.log(peak)
    return PartitionValue(mantissa=complex(v.sum()), log_scale=log_scale, n_x=config.n_x, n_z=config.n_z)


def identity_residuals(
    arch: Architecture | str,
    lattice: Lattice,
    couplings: IsingCouplings,
    beta: BetaConfig,
    evaluator=z_bruteforce,
) -> np.ndarray:
    """Per-outcome |prob(a,b) - |Z|^2 / 2^(2N_X+N_Z)| for one preparation."""
    from .prep import product_state

    state = product_state(beta, lattice)
    evolved = evolve_diagonal(state, couplings, lattice)
    table = measurement_distribution(evolved, lattice)
    n_p, n_d = lattice.n_primitive, lattice.n_dangling
    residuals = np.empty(table.shape)
    for z in range(len(table)):
        a = [(z >> k) & 1 for k in range(n_p)]
        b = [(z >> (n_p + k)) & 1 for k in range(n_d)]
        cfg = field_config(a, b, beta, couplings)
        residuals[z] = abs(table[z] - evaluator(cfg).probability())
    return residuals


def check_identity(
    arch: Architecture | str,
    n: int,
    m: int,
    beta: BetaConfig,
    evaluator=z_bruteforce,
) -> float:
    """Maximum residual of the probability identity over all outcomes."""
    from .lattice import build_lattice, ising_couplings

    arch = Architecture.parse(arch)
    lattice = build_lattice(arch, n, m)
    couplings = ising_couplings(lattice)
    return float(identity_residuals(arch, lattice, couplings, beta, evaluator).max())
