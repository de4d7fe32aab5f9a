"""Spin-ladder Hilbert space in fixed-magnetization sectors and its Hamiltonians.

Site layout: chain I occupies sites ``0 .. M-1``, chain II sites ``M .. 2M-1``;
rung ``n`` (1-based) joins site ``n-1`` with site ``M+n-1``.  A set bit means
spin up (s = +1/2).  Units are hbar = 1 with energies in the same units as
``intra_coupling`` (normally 1).
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field
from math import comb
from pathlib import Path

import numpy as np

from .errors import ResourceCapError

DEFAULT_DIM_CAP = 2**24


class Boundary(str, enum.Enum):
    OPEN = "open"
    PERIODIC = "periodic"


class Chain(str, enum.Enum):
    I = "I"  # noqa: E741
    II = "II"


@dataclass(frozen=True)
class LadderSpec:
    """Physical description of a two-leg XY ladder.

    Parameters
    ----------
    chain_length : int
        Spins per chain, ``M``.
    intra_coupling : float
        ``J_x``, XY coupling along each chain.
    inter_coupling : float
        ``J_y``, rung coupling between the chains.
    ising_weight, xy_weight : float
        Weights ``a`` and ``b`` of the rung Ising and flip-flop terms.
    boundary : Boundary
        ``open`` or ``periodic`` (ring closure of both chains, needs ``M >= 3``).
    excitation_site : int
        1-based site of chain I carrying the initial excess polarization.
    """

    chain_length: int
    intra_coupling: float = 1.0
    inter_coupling: float = 0.0
    ising_weight: float = 1.0
    xy_weight: float = 1.0
    boundary: Boundary = Boundary.OPEN
    excitation_site: int = 1

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if int(self.chain_length) != self.chain_length or self.chain_length < 1:
            raise ValueError(f"chain_length must be a positive integer, got {self.chain_length}")
        if not 1 <= self.excitation_site <= self.chain_length:
            raise ValueError(
                f"excitation_site must lie in [1, {self.chain_length}], got {self.excitation_site}"
            )
        if self.boundary is Boundary.PERIODIC and self.chain_length < 3:
            raise ValueError("periodic boundary needs chain_length >= 3 (M=2 would double the only bond)")

    @property
    def n_sites(self) -> int:
        return 2 * self.chain_length

    @property
    def excitation_bit(self) -> int:
        return self.excitation_site - 1

    def chain_bonds(self, chain: Chain | str = Chain.I) -> list[tuple[int, int]]:
        """Nearest-neighbour site pairs of one chain, ring closure last."""
        m = self.chain_length
        offset = 0 if Chain(chain) is Chain.I else m
        bonds = [(offset + n, offset + n + 1) for n in range(m - 1)]
        if self.boundary is Boundary.PERIODIC:
            bonds.append((offset + m - 1, offset))
        return bonds

    def rungs(self) -> list[tuple[int, int]]:
        m = self.chain_length
        return [(n, m + n) for n in range(m)]

    def with_coupling(self, **changes) -> "LadderSpec":
        data = asdict(self)
        data.update(changes)
        return LadderSpec(**data)

    def as_dict(self) -> dict:
        data = asdict(self)
        data["boundary"] = self.boundary.value
        return data


def _popcount(values: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(values)
    counts = np.zeros(values.shape, dtype=np.int64)
    v = values.copy()
    while np.any(v):
        counts += v & 1
        v >>= 1
    return counts


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """Bit patterns over ``n_sites`` with exactly ``n_up`` up spins, ascending."""

    n_sites: int
    n_up: int
    states: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return len(self.states)

    def index_of(self, patterns):
        """Ordinal of each pattern within the sector (vectorized, via bisection)."""
        patterns = np.asarray(patterns, dtype=np.int64)
        idx = np.searchsorted(self.states, patterns)
        if np.any(idx >= len(self.states)) or np.any(self.states[np.minimum(idx, len(self.states) - 1)] != patterns):
            raise KeyError("pattern not in sector")
        return idx

    def spin(self, site: int) -> np.ndarray:
        """s^z of ``site`` (+-1/2) for every basis state."""
        return ((self.states >> site) & 1) - 0.5


def sector_basis(n_sites: int, n_up: int) -> SectorBasis:
    if not 0 <= n_up <= n_sites:
        raise ValueError(f"n_up={n_up} outside [0, {n_sites}]")
    all_states = np.arange(2**n_sites, dtype=np.int64)
    states = all_states[_popcount(all_states) == n_up]
    return SectorBasis(n_sites, n_up, states)


def enumerate_sectors(chain_length: int, dim_cap: int = DEFAULT_DIM_CAP) -> list[SectorBasis]:
    """All ``2M + 1`` magnetization sectors of a ladder with ``M`` spins per chain."""
    if chain_length < 1:
        raise ValueError("chain_length must be >= 1")
    n_sites = 2 * chain_length
    if 2**n_sites > dim_cap:
        raise ResourceCapError(
            f"Hilbert space dimension 2^{n_sites} exceeds the cap of {dim_cap}"
        )
    all_states = np.arange(2**n_sites, dtype=np.int64)
    counts = _popcount(all_states)
    return [SectorBasis(n_sites, n, all_states[counts == n]) for n in range(n_sites + 1)]


@dataclass(frozen=True, eq=False)
class SparseHamiltonian:
    """Real symmetric sector block stored as its upper triangle in COO form.

    Entries are ordered row-major and zero-valued entries are never stored.
    """

    sector: SectorBasis
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.sector.dim

    @property
    def entries(self) -> list[tuple[int, int, float]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.values.tolist()))

    @property
    def nnz(self) -> int:
        return len(self.values)

    def to_dense(self) -> np.ndarray:
        h = np.zeros((self.dim, self.dim))
        h[self.rows, self.cols] = self.values
        off = self.rows != self.cols
        h[self.cols[off], self.rows[off]] = self.values[off]
        return h

    def __add__(self, other: "SparseHamiltonian") -> "SparseHamiltonian":
        if other.sector is not self.sector and not np.array_equal(other.sector.states, self.sector.states):
            raise ValueError("cannot add Hamiltonians from different sectors")
        return _from_triplets(
            self.sector,
            np.concatenate((self.rows, other.rows)),
            np.concatenate((self.cols, other.cols)),
            np.concatenate((self.values, other.values)),
        )

    def dump_csv(self, path, spec: LadderSpec | None = None) -> None:
        """Write ``row,col,value`` rows after a ``# key=value`` parameter header."""
        lines = []
        if spec is not None:
            lines.append("# " + " ".join(f"{k}={v}" for k, v in spec.as_dict().items()))
        lines.append(f"# n_up={self.sector.n_up} dim={self.dim}")
        lines.append("row,col,value")
        lines.extend(f"{r},{c},{v:.17g}" for r, c, v in self.entries)
        Path(path).write_text("\n".join(lines) + "\n")


def _from_triplets(sector, rows, cols, values) -> SparseHamiltonian:
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    d = sector.dim
    keys = rows * d + cols
    uniq, inverse = np.unique(keys, return_inverse=True)
    summed = np.zeros(len(uniq))
    np.add.at(summed, inverse, values)
    keep = summed != 0.0
    uniq = uniq[keep]
    return SparseHamiltonian(sector, uniq // d, uniq % d, summed[keep])


def _bond_triplets(sector: SectorBasis, bonds):
    """COO triplets for ``sum_b zz_b S^z_i S^z_j + (flip_b / 2)(S^+_i S^-_j + h.c.)``.

    ``bonds`` holds ``(i, j, flip, zz)`` tuples.
    """
    states = sector.states
    rows, cols, vals = [], [], []
    diag = np.zeros(sector.dim)
    for i, j, flip, zz in bonds:
        bi = (states >> i) & 1
        bj = (states >> j) & 1
        if zz != 0.0:
            diag += zz * (bi - 0.5) * (bj - 0.5)
        if flip != 0.0:
            # pairs (s, s ^ mask) with bit i set, bit j clear, counted once with the smaller pattern
            mask = (1 << i) | (1 << j)
            src = np.flatnonzero(bi != bj)
            partner = states[src] ^ mask
            upper = states[src] < partner
            src = src[upper]
            dst = sector.index_of(partner[upper])
            rows.append(src)
            cols.append(dst)
            vals.append(np.full(len(src), 0.5 * flip))
    nz = np.flatnonzero(diag)
    rows.append(nz)
    cols.append(nz)
    vals.append(diag[nz])
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def _check_sector(spec: LadderSpec, sector: SectorBasis) -> None:
    if sector.n_sites != spec.n_sites:
        raise ValueError(
            f"sector has {sector.n_sites} sites but the ladder has {spec.n_sites}"
        )


def chain_bond_terms(spec: LadderSpec, chain: Chain | str):
    return [(i, j, spec.intra_coupling, 0.0) for i, j in spec.chain_bonds(chain)]


def rung_bond_terms(spec: LadderSpec):
    jy = spec.inter_coupling
    return [(i, j, spec.xy_weight * jy, spec.ising_weight * jy) for i, j in spec.rungs()]


def build_chain_hamiltonian(spec: LadderSpec, chain: Chain | str, sector: SectorBasis) -> SparseHamiltonian:
    """XY Hamiltonian of chain I or II: flip-flop elements ``J_x / 2`` on every bond."""
    _check_sector(spec, sector)
    return _from_triplets(sector, *_bond_triplets(sector, chain_bond_terms(spec, chain)))


def build_transverse_hamiltonian(spec: LadderSpec, sector: SectorBasis) -> SparseHamiltonian:
    """Rung coupling ``a J_y S^z S^z + b J_y (S^x S^x + S^y S^y)``."""
    _check_sector(spec, sector)
    return _from_triplets(sector, *_bond_triplets(sector, rung_bond_terms(spec)))


def build_total_hamiltonian(spec: LadderSpec, sector: SectorBasis) -> SparseHamiltonian:
    return (
        build_chain_hamiltonian(spec, Chain.I, sector)
        + build_chain_hamiltonian(spec, Chain.II, sector)
        + build_transverse_hamiltonian(spec, sector)
    )


def sector_sizes(chain_length: int) -> list[int]:
    n = 2 * chain_length
    return [comb(n, k) for k in range(n + 1)]
