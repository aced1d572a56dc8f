"""Certification stack: parent Hamiltonians, measurement scheduling, and the
weak-membership protocol.

The evolved state is stabilized by one term per site. Conjugating the X
stabilizers of |+>^N through the preparation rotation and the quench gives

* architectures I/II, site i:  X_{beta_i} at i times Z on every neighbor
  (5-local in the bulk, 4- or 3-local at the boundary);
* architecture III, grid site i with dangling partner k:
  X_{beta_i + pi/8} at i times e^{-i pi/8 Z_i Z_k} times Z on the bright
  neighbors (a two-body center factor replaces the bare rotated X);
* architecture III, dangling site k: X_{beta_k + pi/8} at k times
  e^{-i pi/8 Z_k Z_i}.

With the projector convention h_t = (1 - S_t)/2 the parent Hamiltonian has
ground energy 0, gap 1, and term strength J = 1, and the fidelity witness
F >= 1 - <H>/Delta follows.

Measurement scheduling uses a checkerboard two-coloring. For I/II each part
is measured by on-site settings (rotated X on the part's centers, Z
elsewhere): kappa = 2, tau = 1. For III the pair (i, k) carries two commuting
two-body factors, jointly measurable in their common eigenbasis: the
two-body variant has kappa = 2, tau = 2. Expanding the pair factors in an
on-site product operator basis instead gives the purely on-site variant with
kappa = 2 * 16 = 32 subparts mapped onto the same two vertex classes.

Sample complexity: m >= [alpha^2 kappa^2 J^2 / (2 Delta^2 eps^2)]
* ln[(kappa+1) / (-ln(1 - p_err))] * N^2 rounds per part suffice for the
energy estimate to be eps-accurate with confidence 1 - p_err (the
success-probability variant of the bound is reconciled by p_bar = 1 - p_err).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import Architecture, Lattice
from .prep import BetaConfig, site_angles
from .rng import RandomStream
from .statevec import StateVector

DARK_HALF_ANGLE = math.pi / 8  # conjugated dark-edge phase e^{-i pi/8 ZZ}

_PAULI = {
    0: np.eye(2, dtype=np.complex128),
    1: np.array([[0, 1], [1, 0]], dtype=np.complex128),
    2: np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    3: np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def x_rotated(theta: float) -> np.ndarray:
    """X_theta = e^{-i theta Z / 2} X e^{+i theta Z / 2}."""
    return np.array(
        [[0.0, np.exp(-1j * theta)], [np.exp(1j * theta), 0.0]], dtype=np.complex128
    )


# ---------------------------------------------------------------------------
# parent Hamiltonian


@dataclass(frozen=True)
class StabilizerTerm:
    """One commuting term S with S^2 = 1 and S |Psi_beta> = +|Psi_beta>.

    Structure: X_{theta} on ``center``, optionally the two-body phase
    e^{-i pi/8 Z_center Z_partner}, and plain Z on ``z_sites``.
    """

    index: int
    center: int
    theta: float
    partner: int | None
    z_sites: tuple[int, ...]

    @property
    def support(self) -> tuple[int, ...]:
        extra = (self.partner,) if self.partner is not None else ()
        return tuple(sorted((self.center,) + extra + self.z_sites))

    @property
    def locality(self) -> int:
        return len(self.support)

    def diagonal_factor(self, n_sites: int) -> np.ndarray:
        """The diagonal part (ZZ phase and Z factors) over all basis states."""
        idx = np.arange(1 << n_sites, dtype=np.int64)
        d = np.ones(1 << n_sites, dtype=np.complex128)
        if self.partner is not None:
            s_c = 1.0 - 2.0 * ((idx >> self.center) & 1)
            s_p = 1.0 - 2.0 * ((idx >> self.partner) & 1)
            d = d * np.exp(-1j * DARK_HALF_ANGLE * s_c * s_p)
        for site in self.z_sites:
            d = d * (1.0 - 2.0 * ((idx >> site) & 1))
        return d

    def dense(self, n_sites: int) -> np.ndarray:
        """Full 2^N x 2^N matrix (small systems only)."""
        dim = 1 << n_sites
        d = self.diagonal_factor(n_sites)
        idx = np.arange(dim, dtype=np.int64)
        flipped = idx ^ (1 << self.center)
        bit = (idx >> self.center) & 1
        xcoef = np.where(bit == 0, np.exp(1j * self.theta), np.exp(-1j * self.theta))
        mat = np.zeros((dim, dim), dtype=np.complex128)
        mat[flipped, idx] = xcoef * d
        return mat

    def apply(self, state: StateVector) -> StateVector:
        d = self.diagonal_factor(state.n_qubits)
        bit = (np.arange(1 << state.n_qubits, dtype=np.int64) >> self.center) & 1
        xcoef = np.where(bit == 0, np.exp(1j * self.theta), np.exp(-1j * self.theta))
        moved = np.empty_like(state.amps)
        scaled = state.amps * (xcoef * d)
        idx = np.arange(1 << state.n_qubits, dtype=np.int64)
        moved[idx ^ (1 << self.center)] = scaled
        return StateVector(state.n_qubits, moved)


@dataclass(frozen=True)
class ParentHamiltonian:
    """Sum of projectors h_t = (1 - S_t)/2: frustration free, gap 1."""

    arch: Architecture
    lattice: Lattice
    terms: tuple[StabilizerTerm, ...]
    gap: float = 1.0
    ground_energy: float = 0.0

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def interaction_strength(self) -> float:
        return 1.0  # max norm of a projector term

    def dense(self) -> np.ndarray:
        n = self.lattice.n_sites
        dim = 1 << n
        h = np.zeros((dim, dim), dtype=np.complex128)
        for term in self.terms:
            h += (np.eye(dim) - term.dense(n)) / 2.0
        return h


def parent_hamiltonian(
    arch: Architecture | str, lattice: Lattice, beta: BetaConfig
) -> ParentHamiltonian:
    """One stabilizer term per site; N terms in total."""
    arch = Architecture.parse(arch)
    if arch is not lattice.arch:
        raise ValueError("architecture does not match the lattice")
    angles = site_angles(beta, lattice)
    terms = []
    for i in range(lattice.n_primitive):
        bright = tuple(nbr for nbr, kind in lattice.adjacency[i] if kind == "bright")
        if arch.has_dangling:
            terms.append(
                StabilizerTerm(
                    index=i,
                    center=i,
                    theta=angles[i] + DARK_HALF_ANGLE,
                    partner=lattice.dangling_partner(i),
                    z_sites=bright,
                )
            )
        else:
            terms.append(
                StabilizerTerm(index=i, center=i, theta=angles[i], partner=None, z_sites=bright)
            )
    if arch.has_dangling:
        for i in range(lattice.n_primitive):
            k = lattice.dangling_partner(i)
            terms.append(
                StabilizerTerm(
                    index=k, center=k, theta=angles[k] + DARK_HALF_ANGLE, partner=i, z_sites=()
                )
            )
    return ParentHamiltonian(arch=arch, lattice=lattice, terms=tuple(terms))


# ---------------------------------------------------------------------------
# measurement decompositions


@dataclass(frozen=True)
class Part:
    """One jointly measurable group.

    ``rotations`` maps mutually disjoint site tuples to the unitary that takes
    the measured observables to the computational basis; unlisted sites are
    read directly in Z. Term (or expansion-piece) values are parities of the
    sampled bit-string under ``masks``: value_j = coeff_j * (-1)^popcount(z &
    masks_j). Direct parts have coeff 1 and one mask per Hamiltonian term;
    expanded parts carry product-basis pieces and a constant energy offset.
    """

    name: str
    n_sites: int
    rotations: tuple[tuple[tuple[int, ...], np.ndarray], ...]
    masks: tuple[int, ...]
    coeffs: tuple[float, ...]
    term_indices: tuple[int, ...]
    energy_offset: float
    direct: bool

    def validate(self) -> None:
        seen: set[int] = set()
        for sites, _ in self.rotations:
            for s in sites:
                if s in seen:
                    raise ValueError(f"site {s} measured twice in part {self.name}")
                seen.add(s)


@dataclass(frozen=True)
class Decomposition:
    """(kappa, alpha, tau) measurement decomposition of a parent Hamiltonian."""

    kappa: int
    alpha: float
    tau: int
    mode: str
    parts: tuple[Part, ...]


def _checkerboard(lattice: Lattice) -> tuple[list[int], list[int]]:
    even, odd = [], []
    for p in range(lattice.n_primitive):
        r, c = lattice.position(p)
        (even if (r + c) % 2 == 0 else odd).append(p)
    return even, odd


def _pair_rotation(theta_i: float, theta_k: float) -> np.ndarray:
    """Common eigenbasis rotation of the two commuting pair factors on (i, k).

    Columns are ordered so that after the rotation the grid-site factor reads
    (-1)^{bit_i} and the dangling factor (-1)^{bit_k}.
    """
    zz = np.diag(np.exp(-1j * DARK_HALF_ANGLE * np.array([1.0, -1.0, -1.0, 1.0])))
    b_grid = np.kron(x_rotated(theta_i), np.eye(2)) @ zz
    b_dang = np.kron(np.eye(2), x_rotated(theta_k)) @ zz
    vals, vecs = np.linalg.eigh(2.0 * b_grid + b_dang)
    cols = np.argsort(-np.round(vals).astype(int))
    return vecs[:, cols].conj().T


def _direct_parts(parent: ParentHamiltonian) -> list[Part]:
    lattice = parent.lattice
    even, odd = _checkerboard(lattice)
    by_center = {t.center: t for t in parent.terms}
    parts = []
    for name, centers in (("even", even), ("odd", odd)):
        rotations = []
        masks = []
        indices = []
        for i in centers:
            t = by_center[i]
            if parent.arch.has_dangling:
                k = lattice.dangling_partner(i)
                td = by_center[k]
                rotations.append(
                    ((i, k), _pair_rotation(t.theta, td.theta))
                )
                mask_i = 1 << i
                for j in t.z_sites:
                    mask_i |= 1 << j
                masks.append(mask_i)
                indices.append(t.index)
                masks.append(1 << k)
                indices.append(td.index)
            else:
                rotations.append(((i,), _onsite_rotation(x_rotated(t.theta))))
                mask = 1 << i
                for j in t.z_sites:
                    mask |= 1 << j
                masks.append(mask)
                indices.append(t.index)
        part = Part(
            name=name,
            n_sites=lattice.n_sites,
            rotations=tuple(rotations),
            masks=tuple(masks),
            coeffs=tuple(1.0 for _ in masks),
            term_indices=tuple(indices),
            energy_offset=0.0,
            direct=True,
        )
        part.validate()
        parts.append(part)
    return parts


def _onsite_rotation(observable: np.ndarray) -> np.ndarray:
    """Rotation taking a +-1 on-site observable to Z (bit 0 <-> outcome +1)."""
    vals, vecs = np.linalg.eigh(observable)
    cols = np.argsort(-vals)
    return vecs[:, cols].conj().T


def _pauli_pieces(op: np.ndarray) -> dict[tuple[int, int], float]:
    """Real coefficients of a Hermitian 4x4 op over the Pauli product basis."""
    pieces = {}
    for mu in range(4):
        for nu in range(4):
            basis = np.kron(_PAULI[mu], _PAULI[nu])
            coeff = np.trace(op @ basis) / 4.0
            if abs(coeff.imag) > 1e-12:
                raise ValueError("expected real Pauli coefficients")
            if abs(coeff.real) > 1e-12:
                pieces[(mu, nu)] = float(coeff.real)
    return pieces


def _expanded_parts(parent: ParentHamiltonian) -> list[Part]:
    """Architecture III on-site variant: 2 colors x 16 product-basis settings."""
    lattice = parent.lattice
    even, odd = _checkerboard(lattice)
    by_center = {t.center: t for t in parent.terms}
    zz = np.diag(np.exp(-1j * DARK_HALF_ANGLE * np.array([1.0, -1.0, -1.0, 1.0])))
    parts = []
    for name, centers in (("even", even), ("odd", odd)):
        n_terms_color = 2 * len(centers)
        for mu in range(4):
            for nu in range(4):
                rotations = []
                masks: list[int] = []
                coeffs: list[float] = []
                indices: list[int] = []
                for i in centers:
                    k = lattice.dangling_partner(i)
                    t, td = by_center[i], by_center[k]
                    grid_op = np.kron(x_rotated(t.theta), np.eye(2)) @ zz
                    dang_op = np.kron(np.eye(2), x_rotated(td.theta)) @ zz
                    if mu != 0:
                        rotations.append(((i,), _onsite_rotation(_PAULI[mu])))
                    if nu != 0:
                        rotations.append(((k,), _onsite_rotation(_PAULI[nu])))
                    z_mask = 0
                    for j in t.z_sites:
                        z_mask |= 1 << j
                    site_mask = (1 << i if mu != 0 else 0) | (1 << k if nu != 0 else 0)
                    for op, term, extra_mask in (
                        (grid_op, t, z_mask),
                        (dang_op, td, 0),
                    ):
                        coeff = _pauli_pieces(op).get((mu, nu))
                        if coeff is not None:
                            # round values get -1/2 so part sums add up to the
                            # projector energy together with the offset below
                            coeffs.append(-0.5 * coeff)
                            masks.append(site_mask | extra_mask)
                            indices.append(term.index)
                part = Part(
                    name=f"{name}:{mu}{nu}",
                    n_sites=lattice.n_sites,
                    rotations=tuple(rotations),
                    masks=tuple(masks),
                    coeffs=tuple(coeffs),
                    term_indices=tuple(indices),
                    energy_offset=n_terms_color / 2.0 / 16.0,
                    direct=False,
                )
                part.validate()
                parts.append(part)
    return parts


def two_color_decomposition(
    parent: ParentHamiltonian, lattice: Lattice | None = None, mode: str | None = None
) -> Decomposition:
    """Checkerboard decomposition of the parent Hamiltonian.

    Architectures I/II: on-site, kappa = 2, tau = 1. Architecture III:
    ``mode="two_body"`` (default) gives kappa = 2, tau = 2 with joint pair
    measurements; ``mode="on_site"`` expands the pair factors into the
    product-operator basis, giving the on-site kappa = 32, tau = 1 variant.
    """
    lattice = lattice or parent.lattice
    even, odd = _checkerboard(lattice)
    cells = max(len(even), len(odd))
    alpha = cells * lattice.arch.qubits_per_cell / lattice.n_sites
    if not parent.arch.has_dangling:
        if mode not in (None, "on_site"):
            raise ValueError(f"architectures I/II only support on-site parts, not {mode!r}")
        return Decomposition(
            kappa=2, alpha=alpha, tau=1, mode="on_site", parts=tuple(_direct_parts(parent))
        )
    mode = mode or "two_body"
    if mode == "two_body":
        return Decomposition(
            kappa=2, alpha=alpha, tau=2, mode="two_body", parts=tuple(_direct_parts(parent))
        )
    if mode == "on_site":
        return Decomposition(
            kappa=32, alpha=alpha, tau=1, mode="on_site", parts=tuple(_expanded_parts(parent))
        )
    raise ValueError(f"unknown decomposition mode {mode!r}")


# ---------------------------------------------------------------------------
# sample complexity


def sample_bound(
    kappa: int, alpha: float, j: float, delta: float, eps: float, p_err: float, n_sites: int
) -> float:
    """The closed-form bound before integer rounding."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not 0 < p_err < 0.5:
        raise ValueError("p_err must lie in (0, 1/2)")
    if delta <= 0 or j <= 0 or kappa < 1 or not 0 < alpha <= 1 or n_sites < 1:
        raise ValueError("invalid decomposition parameters")
    coeff = (alpha**2 * kappa**2 * j**2) / (2.0 * delta**2 * eps**2)
    confidence = math.log((kappa + 1) / (-math.log1p(-p_err)))
    return coeff * confidence * n_sites**2


def required_samples(
    kappa: int, alpha: float, j: float, delta: float, eps: float, p_err: float, n_sites: int
) -> int:
    """Smallest integer number of rounds per part satisfying the bound."""
    return math.ceil(sample_bound(kappa, alpha, j, delta, eps, p_err, n_sites))


# ---------------------------------------------------------------------------
# preparation sources (noise lives here, at state preparation only)


def apply_pauli_mask(state: StateVector, paulis) -> StateVector:
    """Apply the Pauli string given by per-site codes {0:I, 1:X, 2:Y, 3:Z}."""
    amps = state.amps
    idx = np.arange(len(amps), dtype=np.int64)
    flip = 0
    for site, code in enumerate(paulis):
        if code in (1, 2):
            flip |= 1 << site
    if flip:
        amps = amps[idx ^ flip]
    phase = np.ones(len(amps), dtype=np.complex128)
    for site, code in enumerate(paulis):
        bit = (idx >> site) & 1
        if code == 2:  # Y = i X Z acting before the flip above
            phase = phase * np.where(bit == 1, 1j, -1j)
        elif code == 3:
            phase = phase * (1.0 - 2.0 * bit)
    return StateVector(state.n_qubits, amps * phase)


def _conjugate_site(rho: np.ndarray, site: int, op: np.ndarray, n: int) -> np.ndarray:
    dim = 1 << n
    out = rho.reshape(-1, 2, (1 << site) * dim)
    out = np.einsum("ab,xbY->xaY", op, out).reshape(dim, dim)
    out = out.reshape(-1, 2, 1 << site)
    out = np.einsum("ab,xbY->xaY", op.conj(), out).reshape(dim, dim)
    return out


class PreparationSource:
    """Supplies fresh copies of a (possibly corrupted) preparation."""

    def __init__(self, state: StateVector):
        self.base = state
        self.n_qubits = state.n_qubits

    def batches(self, count: int, rng: RandomStream) -> list[tuple[tuple, int]]:
        return [((), count)]

    def materialize(self, key: tuple) -> StateVector:
        return self.base

    def draw(self, rng: RandomStream) -> StateVector:
        (key, _), = self.batches(1, rng)
        return self.materialize(key)

    def density(self) -> np.ndarray:
        psi = self.base.amps
        return np.outer(psi, psi.conj())


class ExactSource(PreparationSource):
    """Noiseless copies of the target state."""


class DepolarizingSource(PreparationSource):
    """Independent per-site depolarizing noise of strength p on every copy,
    realized by sampling uniform Pauli errors (stochastic purification)."""

    def __init__(self, state: StateVector, p: float):
        if not 0.0 <= p <= 1.0:
            raise ValueError("depolarizing probability must lie in [0, 1]")
        super().__init__(state)
        self.p = float(p)
        self._cdf = np.cumsum([1.0 - 0.75 * self.p, self.p / 4, self.p / 4, self.p / 4])

    def batches(self, count: int, rng: RandomStream) -> list[tuple[tuple, int]]:
        draws = rng.generator.random((count, self.n_qubits))
        codes = np.searchsorted(self._cdf, draws, side="right").astype(np.int64)
        keys = codes @ (4 ** np.arange(self.n_qubits, dtype=np.int64))
        uniq, counts = np.unique(keys, return_counts=True)
        out = []
        for key, cnt in zip(uniq, counts):
            digits = []
            k = int(key)
            for _ in range(self.n_qubits):
                digits.append(k % 4)
                k //= 4
            out.append((tuple(digits), int(cnt)))
        return out

    def materialize(self, key: tuple) -> StateVector:
        if not any(key):
            return self.base
        return apply_pauli_mask(self.base, key)

    def density(self) -> np.ndarray:
        rho = super().density()
        for site in range(self.n_qubits):
            mixed = np.zeros_like(rho)
            for code in (1, 2, 3):
                mixed += _conjugate_site(rho, site, _PAULI[code], self.n_qubits)
            rho = (1.0 - 0.75 * self.p) * rho + (self.p / 4.0) * mixed
        return rho


class ZRotationSource(PreparationSource):
    """Coherent per-site overrotation diag(1, e^{i angle}) on every copy."""

    def __init__(self, state: StateVector, angle: float):
        idx = np.arange(len(state.amps), dtype=np.int64)
        phase = np.ones(len(state.amps), dtype=np.complex128)
        for site in range(state.n_qubits):
            phase = phase * np.exp(1j * angle * ((idx >> site) & 1))
        super().__init__(StateVector(state.n_qubits, state.amps * phase))


def apply_noise(state: StateVector, model: dict, rng: RandomStream | None = None) -> PreparationSource:
    """Wrap a target state in a noisy preparation source.

    ``model`` is {"kind": "depolarizing", "p": ...} or
    {"kind": "z_rotation", "angle": ...}; p = 0 returns exact copies.
    """
    kind = model.get("kind")
    if kind == "depolarizing":
        p = float(model["p"])
        if p == 0.0:
            return ExactSource(state)
        return DepolarizingSource(state, p)
    if kind == "z_rotation":
        return ZRotationSource(state, float(model["angle"]))
    raise ValueError(f"unknown noise model {kind!r}")


# ---------------------------------------------------------------------------
# measurement rounds


def _apply_sites(amps: np.ndarray, sites: tuple[int, ...], gate: np.ndarray, n: int) -> np.ndarray:
    tensor = amps.reshape([2] * n)
    axes = [n - 1 - s for s in sites]
    g = gate.reshape([2] * (2 * len(sites)))
    moved = np.tensordot(g, tensor, axes=(list(range(len(sites), 2 * len(sites))), axes))
    return np.moveaxis(moved, list(range(len(sites))), axes).reshape(-1)


def rotate_for_part(state: StateVector, part: Part) -> np.ndarray:
    amps = state.amps
    for sites, gate in part.rotations:
        amps = _apply_sites(amps, sites, gate, state.n_qubits)
    return amps


_PARITY_CACHE: dict[tuple[int, tuple[int, ...]], np.ndarray] = {}


def _parity_signs(n_sites: int, masks: tuple[int, ...]) -> np.ndarray:
    """(2^N, n_masks) array of (-1)^popcount(z & mask)."""
    key = (n_sites, masks)
    if key not in _PARITY_CACHE:
        idx = np.arange(1 << n_sites, dtype=np.int64)
        cols = []
        for mask in masks:
            acc = idx & mask
            parity = np.zeros(1 << n_sites, dtype=np.int64)
            while acc.any():
                parity ^= acc & 1
                acc >>= 1
            cols.append(1.0 - 2.0 * parity)
        _PARITY_CACHE[key] = np.stack(cols, axis=1)
    return _PARITY_CACHE[key]


def part_value_table(part: Part) -> np.ndarray:
    """Round value for every possible measured bit-string.

    Direct parts: the part energy sum_t (1 - s_t)/2. Expanded parts: the
    weighted piece sum plus the constant offset is added by the estimator.
    """
    signs = _parity_signs(part.n_sites, part.masks)
    if part.direct:
        return ((1.0 - signs) / 2.0).sum(axis=1)
    return signs @ np.asarray(part.coeffs)


def measurement_round(source: PreparationSource, part: Part, rng: RandomStream):
    """One simultaneous measurement round of a direct part.

    Returns (term outcomes +-1 aligned with part.term_indices, energy sample).
    """
    if not part.direct:
        raise ValueError("measurement_round applies to direct parts; use run_rounds")
    state = source.draw(rng)
    if state.n_qubits != part.n_sites:
        raise ValueError("source and part disagree on the number of sites")
    amps = rotate_for_part(state, part)
    probs = np.abs(amps) ** 2
    z = int(rng.generator.choice(len(probs), p=probs / probs.sum()))
    signs = _parity_signs(part.n_sites, part.masks)[z]
    energy = float(((1.0 - signs) / 2.0).sum())
    return signs.copy(), energy


def run_rounds(
    source: PreparationSource,
    part: Part,
    m: int,
    rng: RandomStream,
    cache: dict | None = None,
) -> np.ndarray:
    """m independent round values of a part, grouped by noise realization."""
    values = part_value_table(part)
    samples = np.empty(m)
    filled = 0
    cache = cache if cache is not None else {}
    for key, count in source.batches(m, rng):
        cdf = cache.get(key)
        if cdf is None:
            amps = rotate_for_part(source.materialize(key), part)
            cdf = np.cumsum(np.abs(amps) ** 2)
            cdf[-1] = 1.0
            cache[key] = cdf
        draws = rng.generator.random(count)
        zs = np.searchsorted(cdf, draws, side="right")
        samples[filled : filled + count] = values[zs]
        filled += count
    if filled != m:
        raise AssertionError("source returned a wrong number of copies")
    return samples


def estimate_energy(
    source: PreparationSource,
    decomposition: Decomposition,
    m: int,
    rng: RandomStream,
) -> float:
    """E* = sum over parts of (offset + mean of m round values)."""
    total = 0.0
    for j, part in enumerate(decomposition.parts):
        samples = run_rounds(source, part, m, rng.substream(j), cache={})
        total += part.energy_offset + float(samples.mean())
    return total


def estimate_witness(part_samples: list[np.ndarray], delta: float, parts: list[Part]):
    """(E*, F*_min) from per-part round values (direct parts)."""
    if len(part_samples) != len(parts):
        raise ValueError("one sample array per part required")
    e_star = 0.0
    for samples, part in zip(part_samples, parts):
        samples = np.asarray(samples)
        if samples.size == 0:
            raise ValueError("empty sample array")
        e_star += part.energy_offset + float(samples.mean())
    return e_star, 1.0 - e_star / delta


# ---------------------------------------------------------------------------
# the weak-membership protocol


@dataclass(frozen=True)
class ProtocolConfig:
    threshold_fidelity: float
    eps: float
    p_err: float

    def validate(self) -> None:
        if not 0.0 < self.threshold_fidelity < 1.0:
            raise ValueError("threshold fidelity must lie in (0, 1)")
        if not 0.0 < self.p_err < 0.5:
            raise ValueError("p_err must lie in (0, 1/2)")
        if self.eps <= 0.0 or self.eps > (1.0 - self.threshold_fidelity) / 2.0:
            raise ValueError("eps must satisfy 0 < eps <= (1 - F_T)/2")


@dataclass(frozen=True)
class CertificationReport:
    arch: str
    rows: int
    cols: int
    seed: int
    threshold_fidelity: float
    eps: float
    p_err: float
    m_samples: int
    e_star: float
    f_min_star: float
    verdict: str

    def to_dict(self) -> dict:
        return {
            "arch": self.arch,
            "n": self.rows,
            "m_lattice": self.cols,
            "seed": self.seed,
            "F_T": self.threshold_fidelity,
            "eps": self.eps,
            "p_err": self.p_err,
            "m_samples": self.m_samples,
            "E_star": self.e_star,
            "F_min_star": self.f_min_star,
            "verdict": self.verdict,
        }


def run_protocol(
    config: ProtocolConfig | dict,
    source: PreparationSource,
    arch: Architecture | str,
    lattice: Lattice,
    beta: BetaConfig,
    rng: RandomStream,
    decomposition: Decomposition | None = None,
    caches: list[dict] | None = None,
) -> CertificationReport:
    """Full weak-membership test: estimate the energy with the bound-derived
    sample count, form the witness, and accept iff F*_min >= F_T + eps."""
    if isinstance(config, dict):
        config = ProtocolConfig(
            threshold_fidelity=config["F_T"], eps=config["eps"], p_err=config["p_err"]
        )
    config.validate()
    arch = Architecture.parse(arch)
    if decomposition is None:
        parent = parent_hamiltonian(arch, lattice, beta)
        decomposition = two_color_decomposition(parent)
        delta = parent.gap
    else:
        delta = 1.0
    m = required_samples(
        decomposition.kappa,
        decomposition.alpha,
        1.0,
        delta,
        config.eps,
        config.p_err,
        lattice.n_sites,
    )
    if caches is None:
        caches = [{} for _ in decomposition.parts]
    part_samples = []
    for j, part in enumerate(decomposition.parts):
        part_samples.append(run_rounds(source, part, m, rng.substream(j), cache=caches[j]))
    e_star, f_min = estimate_witness(part_samples, delta, list(decomposition.parts))
    verdict = "accept" if f_min >= config.threshold_fidelity + config.eps else "reject"
    return CertificationReport(
        arch=arch.value,
        rows=lattice.n,
        cols=lattice.m,
        seed=rng.seed,
        threshold_fidelity=config.threshold_fidelity,
        eps=config.eps,
        p_err=config.p_err,
        m_samples=m,
        e_star=e_star,
        f_min_star=f_min,
        verdict=verdict,
    )


# ---------------------------------------------------------------------------
# exact oracles (small systems)


def exact_energy(parent: ParentHamiltonian, rho: np.ndarray) -> float:
    n = parent.lattice.n_sites
    total = 0.0
    for term in parent.terms:
        total += (1.0 - np.trace(rho @ term.dense(n)).real) / 2.0
    return float(total)


def exact_fidelity(rho: np.ndarray, target: StateVector) -> float:
    psi = target.amps
    return float((psi.conj() @ rho @ psi).real)
