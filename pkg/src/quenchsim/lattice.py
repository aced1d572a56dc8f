"""Lattice geometry and quench couplings for the three architectures.

Architecture I and II place one qubit per site of an open n x m square grid;
architecture III attaches one extra "dangling" qubit to every grid site.
Grid edges are "bright" (coupling pi/4) and dangling edges are "dark"
(coupling pi/16). The on-site field is pi/4 per bright edge plus pi/16 per
dark edge, so each edge block of the quench Hamiltonian

    H = sum_edges J_uv Z_u Z_v - sum_sites h_i Z_i

exponentiates on its own to a controlled-phase gate: e^{iH} enacts CZ on
every bright edge and CT = diag(1, 1, 1, e^{i pi/4}) on every dark edge, up
to a global phase per edge.

Site indexing is row-major over the grid, site(r, c) = r*m + c, and the
dangling partner of grid site p has index n*m + p. Lattices are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

BRIGHT_COUPLING = math.pi / 4
DARK_COUPLING = math.pi / 16


class Architecture(enum.Enum):
    """The three preparation/geometry schemes."""

    I = "I"
    II = "II"
    III = "III"

    @property
    def has_dangling(self) -> bool:
        return self is Architecture.III

    @property
    def qubits_per_cell(self) -> int:
        return 2 if self.has_dangling else 1

    @classmethod
    def parse(cls, value: "Architecture | str") -> "Architecture":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown architecture {value!r}; expected I, II or III")


@dataclass(frozen=True)
class Lattice:
    """Open-boundary square lattice, optionally with dangling-bond qubits.

    ``edges`` holds (u, v, kind) with u < v and kind in {"bright", "dark"}.
    ``adjacency[s]`` lists (neighbor, kind) pairs of site s.
    """

    arch: Architecture
    n: int
    m: int
    edges: tuple[tuple[int, int, str], ...]
    adjacency: tuple[tuple[tuple[int, str], ...], ...] = field(repr=False)

    @property
    def n_primitive(self) -> int:
        return self.n * self.m

    @property
    def n_dangling(self) -> int:
        return self.n * self.m if self.arch.has_dangling else 0

    @property
    def n_sites(self) -> int:
        return self.n_primitive + self.n_dangling

    def site(self, row: int, col: int) -> int:
        return row * self.m + col

    def position(self, site: int) -> tuple[int, int]:
        """(row, col) of a primitive site."""
        if site >= self.n_primitive:
            raise ValueError(f"site {site} is not primitive")
        return divmod(site, self.m)

    def is_dangling(self, site: int) -> bool:
        return site >= self.n_primitive

    def dangling_partner(self, primitive: int) -> int:
        if not self.arch.has_dangling:
            raise ValueError("architecture has no dangling qubits")
        return self.n_primitive + primitive

    def bright_degree(self, site: int) -> int:
        return sum(1 for _, kind in self.adjacency[site] if kind == "bright")

    def dark_degree(self, site: int) -> int:
        return sum(1 for _, kind in self.adjacency[site] if kind == "dark")

    def bright_edges(self) -> list[tuple[int, int]]:
        return [(u, v) for (u, v, kind) in self.edges if kind == "bright"]

    def dark_edges(self) -> list[tuple[int, int]]:
        return [(u, v) for (u, v, kind) in self.edges if kind == "dark"]

    def output_sites(self) -> list[int]:
        """The n right-most-column primitive sites, top to bottom."""
        return [self.site(r, self.m - 1) for r in range(self.n)]

    def nonoutput_sites(self) -> list[int]:
        """All sites except the output column, in ascending index order."""
        out = set(self.output_sites())
        return [s for s in range(self.n_sites) if s not in out]

    def to_dict(self) -> dict:
        return {
            "arch": self.arch.value,
            "rows": self.n,
            "cols": self.m,
            "sites": [
                {"index": s, "kind": "dangling" if self.is_dangling(s) else "primitive"}
                for s in range(self.n_sites)
            ],
            "edges": [{"u": u, "v": v, "kind": kind} for (u, v, kind) in self.edges],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


@dataclass(frozen=True)
class IsingCouplings:
    """Edge couplings and on-site fields of the quench Hamiltonian (radians).

    h[i] = pi/4 * bright_degree(i) + pi/16 * dark_degree(i).
    """

    lattice: Lattice
    edge_coupling: tuple[float, ...]
    h: np.ndarray

    def coupling_of(self, kind: str) -> float:
        return BRIGHT_COUPLING if kind == "bright" else DARK_COUPLING


def build_lattice(arch: Architecture | str, n: int, m: int) -> Lattice:
    """Construct the lattice for `arch` with n rows and m columns."""
    arch = Architecture.parse(arch)
    if not (isinstance(n, (int, np.integer)) and isinstance(m, (int, np.integer))):
        raise TypeError("rows and cols must be integers")
    if n < 1 or m < 1:
        raise ValueError(f"rows and cols must be positive, got {n}x{m}")
    n, m = int(n), int(m)

    edges: list[tuple[int, int, str]] = []
    for r in range(n):
        for c in range(m):
            s = r * m + c
            if c + 1 < m:
                edges.append((s, s + 1, "bright"))
            if r + 1 < n:
                edges.append((s, s + m, "bright"))
    if arch.has_dangling:
        for p in range(n * m):
            edges.append((p, n * m + p, "dark"))

    n_sites = n * m * arch.qubits_per_cell
    adj: list[list[tuple[int, str]]] = [[] for _ in range(n_sites)]
    for u, v, kind in edges:
        adj[u].append((v, kind))
        adj[v].append((u, kind))

    return Lattice(
        arch=arch,
        n=n,
        m=m,
        edges=tuple(edges),
        adjacency=tuple(tuple(nbrs) for nbrs in adj),
    )


def ising_couplings(lattice: Lattice) -> IsingCouplings:
    """Edge couplings and per-site fields realizing CZ/CT on every edge."""
    h = np.zeros(lattice.n_sites)
    coupling = []
    for u, v, kind in lattice.edges:
        j = BRIGHT_COUPLING if kind == "bright" else DARK_COUPLING
        coupling.append(j)
        h[u] += j
        h[v] += j
    h.setflags(write=False)
    return IsingCouplings(lattice=lattice, edge_coupling=tuple(coupling), h=h)


def grid_field(lattice: Lattice) -> np.ndarray:
    """Bright-edge field share (pi/4 * bright_degree) over primitive sites.

    This is the base field of the outcome-resolved random Ising model: the
    dark-edge share of the quench field merges with the projected dark
    coupling into the dangling-outcome offset and never appears there.
    """
    return np.array(
        [BRIGHT_COUPLING * lattice.bright_degree(s) for s in range(lattice.n_primitive)]
    )
