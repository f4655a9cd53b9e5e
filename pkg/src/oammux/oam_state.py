"""Algebra of OAM superpositions and density matrices.

Pure states live on a sparse, ordered map keyed by the integer OAM index,
so scattered mode sets such as [-4, -2, 1, 3] cost nothing and the index
range is unbounded.  Dense complex matrices appear only once a
:class:`BasisSpec` fixes row/column order.

All types here are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

#: Unit-norm tolerance for superpositions (far below any simulated noise).
NORM_TOL = 1e-12
#: Max allowed |rho - rho^dagger| entry for a density matrix.
HERMITICITY_TOL = 1e-12
#: Max allowed |trace - 1| for a density matrix.
TRACE_TOL = 1e-12
#: Most negative eigenvalue tolerated as "numerically PSD".
EIGENVALUE_FLOOR = -1e-10


class EmptyStateError(ValueError):
    """No terms were supplied."""


class ZeroNormError(ValueError):
    """All supplied amplitudes (or weights) are zero."""


class DuplicateIndexError(ValueError):
    """The same OAM index appears more than once."""


class BasisMismatchError(ValueError):
    """A state or matrix does not fit the requested basis."""


class NegativeWeightError(ValueError):
    """Mixture weights must be nonnegative."""


class InvalidMultiplierError(ValueError):
    """The index multiplier of the hotel remap must be a positive integer."""


@dataclass(frozen=True)
class Superposition:
    """Normalized pure state over integer OAM indices.

    ``terms`` is a tuple of ``(index, amplitude)`` pairs in strictly
    ascending index order with unit total weight.  Use
    :func:`make_superposition` to build one from raw amplitudes; the
    linear-optics operations elsewhere construct instances directly and
    preserve exact amplitudes (including phases).
    """

    terms: tuple[tuple[int, complex], ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise EmptyStateError("a superposition needs at least one term")
        indices = [ell for ell, _ in self.terms]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise DuplicateIndexError(
                f"term indices must be strictly ascending, got {indices}"
            )
        norm_sq = sum(abs(a) ** 2 for _, a in self.terms)
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise ZeroNormError(f"terms are not normalized: sum |a|^2 = {norm_sq!r}")

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(ell for ell, _ in self.terms)

    @property
    def amplitudes(self) -> tuple[complex, ...]:
        return tuple(a for _, a in self.terms)

    def amplitude(self, ell: int) -> complex:
        """Amplitude on index ``ell`` (0 when absent from the support)."""
        for index, a in self.terms:
            if index == ell:
                return a
        return 0j

    def as_dict(self) -> dict[int, complex]:
        return dict(self.terms)


def make_superposition(terms: Iterable[tuple[int, complex]]) -> Superposition:
    """Build a normalized :class:`Superposition` from (index, amplitude) pairs.

    Zero-amplitude terms are dropped, the remainder is sorted by ascending
    index and scaled to unit norm, and the global phase is fixed by making
    the first surviving amplitude real and positive.  Physical predictions
    are phase invariant, so the canonical phase only serves equality tests.

    Raises:
        EmptyStateError: no terms were supplied.
        DuplicateIndexError: an index appears more than once.
        ZeroNormError: every supplied amplitude is zero.
    """
    pairs = [(operator.index(ell), complex(a)) for ell, a in terms]
    if not pairs:
        raise EmptyStateError("a superposition needs at least one term")
    seen: set[int] = set()
    for ell, _ in pairs:
        if ell in seen:
            raise DuplicateIndexError(f"index {ell} appears more than once")
        seen.add(ell)
    pairs = [(ell, a) for ell, a in pairs if a != 0]
    norm_sq = sum(abs(a) ** 2 for _, a in pairs)
    if norm_sq == 0.0:
        raise ZeroNormError("all amplitudes are zero")
    pairs.sort(key=lambda term: term[0])
    first = pairs[0][1]
    # Dividing by (norm * first/|first|) normalizes and makes the leading
    # amplitude real positive in one step.
    scale = complex(np.sqrt(norm_sq)) * (first / abs(first))
    return Superposition(tuple((ell, complex(a / scale)) for ell, a in pairs))


@dataclass(frozen=True)
class ParityComponent:
    """One parity sector of a superposition: raw amplitudes plus its weight."""

    amplitudes: tuple[tuple[int, complex], ...]
    weight: float

    def as_dict(self) -> dict[int, complex]:
        return dict(self.amplitudes)

    def normalized(self) -> Superposition:
        """The component as a unit-norm state (raises ZeroNormError if empty)."""
        if not self.amplitudes or self.weight == 0.0:
            raise ZeroNormError("parity component carries no weight")
        return make_superposition(self.amplitudes)


def parity_decompose(s: Superposition) -> tuple[ParityComponent, ParityComponent]:
    """Split a state into its even-index and odd-index components.

    Returns ``(even, odd)``.  Each component keeps the original (still
    unnormalized) amplitudes of its sector; the weights are the summed
    |amplitude|^2 and add up to 1.
    """
    even = tuple((ell, a) for ell, a in s.terms if ell % 2 == 0)
    odd = tuple((ell, a) for ell, a in s.terms if ell % 2 != 0)
    even_weight = sum(abs(a) ** 2 for _, a in even)
    odd_weight = sum(abs(a) ** 2 for _, a in odd)
    return ParityComponent(even, even_weight), ParityComponent(odd, odd_weight)


def hilbert_hotel(s: Superposition, k: int) -> Superposition:
    """Remap every index ell to k*ell, keeping amplitudes untouched.

    For k = 2 the output occupies even indices only; every odd-index
    amplitude is exactly zero (absent from the support).  k = 1 is the
    identity.

    Raises:
        InvalidMultiplierError: k is not a positive integer.
    """
    try:
        k = operator.index(k)
    except TypeError as exc:
        raise InvalidMultiplierError(f"multiplier must be an integer, got {k!r}") from exc
    if k < 1:
        raise InvalidMultiplierError(f"multiplier must be >= 1, got {k}")
    return Superposition(tuple((k * ell, a) for ell, a in s.terms))


@dataclass(frozen=True)
class BasisSpec:
    """Ordered list of distinct OAM indices fixing matrix row/column order."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        indices = tuple(operator.index(ell) for ell in self.indices)
        object.__setattr__(self, "indices", indices)
        if not indices:
            raise EmptyStateError("a basis needs at least one index")
        if len(set(indices)) != len(indices):
            raise DuplicateIndexError(f"basis indices must be distinct, got {indices}")

    @property
    def dim(self) -> int:
        return len(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __contains__(self, ell: int) -> bool:
        return ell in self.indices

    def position(self, ell: int) -> int:
        """Row/column position of index ``ell``."""
        try:
            return self.indices.index(ell)
        except ValueError:
            raise BasisMismatchError(f"index {ell} is not in basis {self.indices}") from None


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, PSD, unit-trace matrix over an ordered OAM basis.

    The matrix is validated at construction (Hermiticity and trace to
    1e-12, eigenvalues above -1e-10) and stored as a read-only copy.
    """

    basis: BasisSpec
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        d = self.basis.dim
        if m.shape != (d, d):
            raise BasisMismatchError(f"matrix shape {m.shape} does not match basis dim {d}")
        if not np.all(np.isfinite(m.view(float))):
            raise ValueError("density matrix entries must be finite")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian within 1e-12")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise ValueError(f"density matrix trace {np.trace(m)!r} is not 1 within 1e-12")
        if np.min(np.linalg.eigvalsh(m)) < EIGENVALUE_FLOOR:
            raise ValueError("density matrix has an eigenvalue below -1e-10")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def entry(self, ell_i: int, ell_j: int) -> complex:
        """Element <ell_i| rho |ell_j> addressed by OAM index."""
        return complex(self.matrix[self.basis.position(ell_i), self.basis.position(ell_j)])

    def isclose(self, other: "DensityMatrix", atol: float = 1e-12) -> bool:
        return self.basis == other.basis and bool(
            np.allclose(self.matrix, other.matrix, rtol=0.0, atol=atol)
        )

    def to_interchange(self) -> dict:
        """Serialize to the interchange layout {basis, re, im} (full precision)."""
        return matrix_to_interchange(self.basis, self.matrix)

    @classmethod
    def from_interchange(cls, obj: Mapping) -> "DensityMatrix":
        """Rebuild from the interchange layout, revalidating all invariants."""
        basis, matrix = matrix_from_interchange(obj)
        return cls(basis, matrix)


def matrix_to_interchange(basis: BasisSpec, matrix: np.ndarray) -> dict:
    """Interchange layout for any complex matrix over a basis.

    The layout is ``{"basis": [ints], "re": [[...]], "im": [[...]]}`` with
    row-major float arrays.  Used both for density matrices and for the
    (possibly non-PSD) linear tomography estimate.
    """
    m = np.asarray(matrix, dtype=complex)
    return {
        "basis": [int(ell) for ell in basis],
        "re": [[float(x) for x in row] for row in m.real],
        "im": [[float(x) for x in row] for row in m.imag],
    }


def matrix_from_interchange(obj: Mapping) -> tuple[BasisSpec, np.ndarray]:
    """Parse the {basis, re, im} layout back into a basis and complex matrix."""
    try:
        basis_list = obj["basis"]
        re = obj["re"]
        im = obj["im"]
    except (KeyError, TypeError) as exc:
        raise ValueError("interchange object must have keys 'basis', 're', 'im'") from exc
    basis = BasisSpec(tuple(int(ell) for ell in basis_list))
    d = basis.dim
    re_arr = np.array(re, dtype=float)
    im_arr = np.array(im, dtype=float)
    if re_arr.shape != (d, d) or im_arr.shape != (d, d):
        raise ValueError(
            f"'re'/'im' must be {d}x{d} row-major arrays, got {re_arr.shape} and {im_arr.shape}"
        )
    return basis, re_arr + 1j * im_arr


def pure_density(s: Superposition, basis: BasisSpec) -> DensityMatrix:
    """Outer product |s><s| as a density matrix over ``basis``.

    Raises:
        BasisMismatchError: some term of ``s`` lies outside the basis.
    """
    vec = np.zeros(basis.dim, dtype=complex)
    for ell, a in s.terms:
        vec[basis.position(ell)] = a
    return DensityMatrix(basis, np.outer(vec, vec.conj()))


def incoherent_mix(parts: Sequence[tuple[float, DensityMatrix]]) -> DensityMatrix:
    """Weighted incoherent mixture sum(w_i rho_i) / sum(w_i).

    Mutually phase-unlocked sources add at the density-matrix level, so a
    mixture of states supported on disjoint index sets has exactly zero
    cross blocks.

    Raises:
        EmptyStateError: no parts given.
        NegativeWeightError: a weight is negative.
        ZeroNormError: the weights sum to zero.
        BasisMismatchError: the parts do not share one basis.
    """
    parts = list(parts)
    if not parts:
        raise EmptyStateError("incoherent_mix needs at least one component")
    basis = parts[0][1].basis
    total = 0.0
    acc = np.zeros((basis.dim, basis.dim), dtype=complex)
    for weight, rho in parts:
        weight = float(weight)
        if weight < 0.0 or not np.isfinite(weight):
            raise NegativeWeightError(f"weight {weight!r} is not a nonnegative real")
        if rho.basis != basis:
            raise BasisMismatchError("all mixture components must share one basis")
        acc += weight * rho.matrix
        total += weight
    if total <= 0.0:
        raise ZeroNormError("mixture weights sum to zero")
    return DensityMatrix(basis, acc / total)


def purity(rho: DensityMatrix) -> float:
    """Tr(rho^2); 1 for pure states, 1/d for the maximally mixed state."""
    return float(np.vdot(rho.matrix, rho.matrix).real)
