"""Preparation-angle configurations and the product input state.

Each architecture fixes a rotation step theta and a symmetry class for the
per-site angles beta_i in {0, theta}:

* I:   theta = pi/4, angles i.i.d. uniform per site (disordered, "DO")
* II:  theta = pi/8, angles constant within each column, independent and
       uniform across columns (TI along the column direction)
* III: theta = pi/4, one fixed angle on every site (fully translation
       invariant). The common value is a configuration choice, pi/4 by
       default; only the symmetry class is dictated.

The input state has amplitude 2^(-N/2) * exp(i * beta . x) on basis state x,
i.e. every site starts in |0> + e^{i beta_i} |1> (normalized). For
architecture III the dangling sites carry the same uniform angle as the
primitive sites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import Architecture, Lattice
from .rng import RandomStream
from .statevec import StateVector

THETA = {Architecture.I: math.pi / 4, Architecture.II: math.pi / 8, Architecture.III: math.pi / 4}
SYMMETRY_TAG = {Architecture.I: "DO", Architecture.II: "TI_(1,inf)", Architecture.III: "TI_(1,1)"}


@dataclass(frozen=True)
class BetaConfig:
    """Per-primitive-site preparation angles with an architecture symmetry tag.

    ``angles`` is a flat row-major array over the n*m primitive sites; every
    entry is 0 or ``theta``.
    """

    arch: Architecture
    n: int
    m: int
    theta: float
    angles: np.ndarray

    @property
    def symmetry(self) -> str:
        return SYMMETRY_TAG[self.arch]

    def angle(self, row: int, col: int) -> float:
        return float(self.angles[row * self.m + col])

    def bits(self) -> np.ndarray:
        """Angle bits b_i = beta_i / theta (0 where beta_i = 0)."""
        if self.theta == 0:
            return np.zeros(self.n * self.m, dtype=np.int8)
        return (np.abs(self.angles) > 1e-12).astype(np.int8)

    def independent_bits(self) -> int:
        """Number of free bits in the symmetry class; |Gamma| = 2**this."""
        if self.arch is Architecture.I:
            return self.n * self.m
        if self.arch is Architecture.II:
            return self.m
        return 0

    def describe(self) -> dict:
        return {
            "arch": self.arch.value,
            "symmetry": self.symmetry,
            "theta": self.theta,
            "bits": "".join(str(b) for b in self.bits()),
        }


def beta_from_bits(arch: Architecture, n: int, m: int, bits, theta: float | None = None) -> BetaConfig:
    """BetaConfig from explicit angle bits (no symmetry restriction applied)."""
    arch = Architecture.parse(arch)
    theta = THETA[arch] if theta is None else float(theta)
    bits = np.asarray(bits, dtype=np.int8).reshape(n * m)
    angles = bits * theta
    angles.setflags(write=False)
    return BetaConfig(arch=arch, n=n, m=m, theta=theta, angles=angles)


def sample_beta(
    arch: Architecture | str,
    lattice: Lattice,
    rng: RandomStream,
    uniform_angle: float = math.pi / 4,
) -> BetaConfig:
    """Draw a preparation uniformly from the architecture's symmetry class.

    For architecture III the class has a single element: the constant
    configuration at ``uniform_angle`` (the paper fixes only the symmetry, so
    the value is configurable).
    """
    arch = Architecture.parse(arch)
    if arch is not lattice.arch:
        raise ValueError(f"lattice was built for {lattice.arch}, not {arch}")
    n, m = lattice.n, lattice.m
    if arch is Architecture.I:
        bits = rng.bits(n * m)
        return beta_from_bits(arch, n, m, bits)
    if arch is Architecture.II:
        col_bits = rng.bits(m)
        bits = np.tile(col_bits, (n, 1)).reshape(n * m)
        return beta_from_bits(arch, n, m, bits)
    angles = np.full(n * m, float(uniform_angle))
    angles.setflags(write=False)
    return BetaConfig(arch=arch, n=n, m=m, theta=float(uniform_angle), angles=angles)


def site_angles(beta: BetaConfig, lattice: Lattice) -> np.ndarray:
    """Angles over all lattice sites; dangling sites copy their partner column's
    uniform value (architecture III prepares every qubit identically)."""
    if lattice.arch.has_dangling:
        return np.concatenate([beta.angles, beta.angles])
    return np.asarray(beta.angles)


def product_state(beta: BetaConfig, lattice: Lattice) -> StateVector:
    """The input state with amplitude 2^(-N/2) e^{i beta . x} on basis x."""
    if (beta.n, beta.m) != (lattice.n, lattice.m) or beta.arch is not lattice.arch:
        raise ValueError("beta configuration does not match the lattice")
    angles = site_angles(beta, lattice)
    n = lattice.n_sites
    phase = np.zeros(2**n)
    idx = np.arange(2**n, dtype=np.int64)
    for site in range(n):
        if angles[site] != 0.0:
            phase += angles[site] * ((idx >> site) & 1)
    amps = np.exp(1j * phase) * 2.0 ** (-n / 2)
    return StateVector(n, amps)
