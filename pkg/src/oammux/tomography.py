"""Projective-measurement tomography of OAM density matrices.

The measurement set holds one projector per basis state plus, for every
unordered index pair, the four superposition projectors (|i> +- |j>)/sqrt2
and (|i> +- i|j>)/sqrt2 — d + 2d(d-1) in total, enough to invert a d-level
density matrix linearly.  Counts follow Poisson statistics with one
deterministic stream per (seed, projector index).

Convention: projectors are normalized states, so the differential
formulas carry a denominator of 2,

    Re rho_ij = (P_+ - P_-) / 2,      Im rho_ij = (P'_- - P'_+) / 2,

where P_+- come from (|i> +- |j>)/sqrt2 and P'_+- from (|i> +- i|j>)/sqrt2.
Physicality is enforced afterwards by eigenvalue clipping (deterministic,
no likelihood iteration).
"""

from __future__ import annotations

import math
import re as _re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .oam_state import (
    BasisMismatchError,
    BasisSpec,
    DensityMatrix,
    Superposition,
    make_superposition,
    matrix_to_interchange,
)

HALF = 1.0 / math.sqrt(2.0)


class BasisTooSmallError(ValueError):
    """Tomography needs at least a two-dimensional basis."""


class InvalidExposureError(ValueError):
    """The exposure (expected counts at unit probability) must be positive."""


class IncompleteSetError(ValueError):
    """The records do not cover the full projector set of the basis."""


class ZeroExposureError(ValueError):
    """A record carries a nonpositive exposure."""


class DegenerateInputError(ValueError):
    """No probability mass survives; reconstruction is impossible."""


class NotPSDError(ValueError):
    """A matrix that must be positive semidefinite is not."""


@dataclass(frozen=True)
class ProjectorLabel:
    """Role tag of a projector: which matrix element it addresses.

    kind is "diag", "re" or "im"; i and j are OAM indices (j is None for
    diagonal projectors); sign is +1 or -1 for pair projectors.
    """

    kind: str
    i: int
    j: int | None = None
    sign: int | None = None

    def __post_init__(self) -> None:
        if self.kind == "diag":
            if self.j is not None or self.sign is not None:
                raise ValueError("diagonal labels carry no pair index or sign")
        elif self.kind in ("re", "im"):
            if self.j is None or self.sign not in (1, -1):
                raise ValueError(f"{self.kind!r} labels need a second index and a sign of +-1")
        else:
            raise ValueError(f"unknown label kind {self.kind!r}")

    @property
    def text(self) -> str:
        if self.kind == "diag":
            return f"diag({self.i})"
        return f"{self.kind}{'+' if self.sign > 0 else '-'}({self.i},{self.j})"

    @classmethod
    def from_text(cls, text: str) -> "ProjectorLabel":
        m = _re.fullmatch(r"diag\((-?\d+)\)", text)
        if m:
            return cls("diag", int(m.group(1)))
        m = _re.fullmatch(r"(re|im)([+-])\((-?\d+),(-?\d+)\)", text)
        if m:
            return cls(m.group(1), int(m.group(3)), int(m.group(4)), 1 if m.group(2) == "+" else -1)
        raise ValueError(f"unparseable projector label {text!r}")


@dataclass(frozen=True)
class Projector:
    """Normalized projection state |phi><phi| plus its role tag."""

    state: Superposition
    label: ProjectorLabel


def projector_set(basis: BasisSpec) -> list[Projector]:
    """The full measurement set for ``basis``: d + 2d(d-1) projectors.

    Raises:
        BasisTooSmallError: the basis has fewer than two states.
    """
    if basis.dim < 2:
        raise BasisTooSmallError(f"need a basis of dimension >= 2, got {basis.dim}")
    projectors = [
        Projector(make_superposition([(ell, 1.0)]), ProjectorLabel("diag", ell))
        for ell in basis
    ]
    indices = basis.indices
    for p in range(len(indices)):
        for q in range(p + 1, len(indices)):
            li, lj = indices[p], indices[q]
            for kind, factor in (("re", 1.0), ("im", 1j)):
                for sign in (1, -1):
                    state = make_superposition([(li, 1.0), (lj, sign * factor)])
                    projectors.append(Projector(state, ProjectorLabel(kind, li, lj, sign)))
    return projectors


def projector_matrix(proj: Projector, basis: BasisSpec) -> np.ndarray:
    """Materialize |phi><phi| over ``basis`` (mainly for cross-checks)."""
    vec = np.zeros(basis.dim, dtype=complex)
    for ell, a in proj.state.terms:
        vec[basis.position(ell)] = a
    return np.outer(vec, vec.conj())


def ideal_probability(rho: DensityMatrix, proj: Projector) -> float:
    """Detection probability <phi| rho |phi>, clipped into [0, 1].

    Raises:
        BasisMismatchError: the projector uses an index outside rho's basis.
    """
    vec = np.zeros(rho.dim, dtype=complex)
    for ell, a in proj.state.terms:
        vec[rho.basis.position(ell)] = a
    p = float(np.real(vec.conj() @ rho.matrix @ vec))
    return min(max(p, 0.0), 1.0)


@dataclass(frozen=True)
class CountRecord:
    """One simulated exposure of one projector.

    ``exposure`` is the expected count at unit probability; math.inf marks
    an exact (infinite-statistics) record whose estimate is the expected
    probability itself.  ``seed`` is the master seed the counts were drawn
    under (None for exact records).
    """

    label: ProjectorLabel
    expected_probability: float
    counts: int
    exposure: float
    seed: int | None

    def __post_init__(self) -> None:
        if not 0.0 <= self.expected_probability <= 1.0:
            raise ValueError(f"probability {self.expected_probability} outside [0, 1]")
        if self.counts < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def is_exact(self) -> bool:
        return math.isinf(self.exposure)

    def probability_estimate(self) -> float:
        return self.expected_probability if self.is_exact else self.counts / self.exposure

    def probability_variance(self) -> float:
        # Plug-in Poisson variance of the estimate: Var(k/N) ~ p_hat / N.
        return 0.0 if self.is_exact else self.probability_estimate() / self.exposure


def simulate_counts(
    probabilities: Sequence[tuple[Projector, float]],
    exposure: float,
    seed: int,
) -> list[CountRecord]:
    """Draw one Poisson count with mean exposure * P per projector.

    Every record uses its own generator derived from (seed, position in
    the list), so results are bit-identical regardless of evaluation
    order and reproducible for a fixed seed.

    Raises:
        InvalidExposureError: exposure is not a positive finite number.
    """
    exposure = float(exposure)
    if not (math.isfinite(exposure) and exposure > 0.0):
        raise InvalidExposureError(f"exposure must be positive and finite, got {exposure}")
    seed = int(seed)
    records = []
    for idx, (proj, p) in enumerate(probabilities):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p} for {proj.label.text} outside [0, 1]")
        rng = np.random.default_rng([seed, idx])
        counts = int(rng.poisson(exposure * p))
        records.append(CountRecord(proj.label, float(p), counts, exposure, seed))
    return records


def exact_records(rho: DensityMatrix, projectors: Sequence[Projector]) -> list[CountRecord]:
    """Infinite-statistics records: expected probabilities, no noise."""
    return [
        CountRecord(proj.label, ideal_probability(rho, proj), 0, math.inf, None)
        for proj in projectors
    ]


def reconstruct_linear(
    records: Sequence[CountRecord], basis: BasisSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Linear inversion of a complete record set over ``basis``.

    Diagonals come from the diagonal records, renormalized to unit trace;
    off-diagonals come from the differential pair formulas (see module
    docstring).  Returns ``(rho_linear, std_errors)`` where rho_linear is
    Hermitian with unit trace but possibly not PSD, and std_errors carries
    the Poisson-propagated standard error of each element (the combined
    real/imaginary error off the diagonal).

    Raises:
        ZeroExposureError: a record has nonpositive exposure.
        IncompleteSetError: the full projector set is not covered.
        DegenerateInputError: the diagonal estimates sum to zero.
    """
    by_label: dict[ProjectorLabel, CountRecord] = {}
    for rec in records:
        if not math.isinf(rec.exposure) and rec.exposure <= 0.0:
            raise ZeroExposureError(f"record {rec.label.text} has exposure {rec.exposure}")
        if rec.label in by_label:
            raise IncompleteSetError(f"duplicate record for projector {rec.label.text}")
        by_label[rec.label] = rec

    def fetch(label: ProjectorLabel) -> CountRecord:
        try:
            return by_label[label]
        except KeyError:
            raise IncompleteSetError(f"missing record for projector {label.text}") from None

    d = basis.dim
    rho = np.zeros((d, d), dtype=complex)
    var = np.zeros((d, d), dtype=float)

    diag_records = [fetch(ProjectorLabel("diag", ell)) for ell in basis]
    diag_sum = sum(rec.probability_estimate() for rec in diag_records)
    if diag_sum <= 0.0:
        raise DegenerateInputError("diagonal probability estimates sum to zero")
    for p, rec in enumerate(diag_records):
        rho[p, p] = rec.probability_estimate() / diag_sum
        var[p, p] = rec.probability_variance() / diag_sum**2

    indices = basis.indices
    for p in range(d):
        for q in range(p + 1, d):
            li, lj = indices[p], indices[q]
            re_plus = fetch(ProjectorLabel("re", li, lj, 1))
            re_minus = fetch(ProjectorLabel("re", li, lj, -1))
            im_plus = fetch(ProjectorLabel("im", li, lj, 1))
            im_minus = fetch(ProjectorLabel("im", li, lj, -1))
            real = (re_plus.probability_estimate() - re_minus.probability_estimate()) / 2.0
            imag = (im_minus.probability_estimate() - im_plus.probability_estimate()) / 2.0
            rho[p, q] = real + 1j * imag
            rho[q, p] = real - 1j * imag
            var[p, q] = var[q, p] = (
                re_plus.probability_variance()
                + re_minus.probability_variance()
                + im_plus.probability_variance()
                + im_minus.probability_variance()
            ) / 4.0
    return rho, np.sqrt(var)


def project_physical(matrix: np.ndarray, basis: BasisSpec) -> DensityMatrix:
    """Nearest-physical projection: clip negative eigenvalues, renormalize.

    Intended for Hermitian estimates whose trace is already near 1; a
    valid density matrix passes through unchanged (to 1e-12).

    Raises:
        NotPSDError: the input is not Hermitian (within 1e-10).
        DegenerateInputError: no positive eigenvalue mass remains.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (basis.dim, basis.dim):
        raise BasisMismatchError(f"matrix shape {m.shape} does not match basis dim {basis.dim}")
    if np.max(np.abs(m - m.conj().T)) > 1e-10:
        raise NotPSDError("input must be Hermitian")
    eigenvalues, vectors = np.linalg.eigh(m)
    clipped = np.clip(eigenvalues, 0.0, None)
    total = float(np.sum(clipped))
    if total <= 0.0:
        raise DegenerateInputError("all eigenvalue mass clipped away; trace <= 0")
    clipped /= total
    out = (vectors * clipped) @ vectors.conj().T
    out = (out + out.conj().T) / 2.0
    return DensityMatrix(basis, out)


def _hermitian_sqrt(matrix: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(matrix)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def _as_psd_array(rho: DensityMatrix | np.ndarray, what: str) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return np.asarray(rho.matrix)
    m = np.asarray(rho, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be a square matrix")
    if np.max(np.abs(m - m.conj().T)) > 1e-10:
        raise NotPSDError(f"{what} is not Hermitian")
    if float(np.min(np.linalg.eigvalsh(m))) < -1e-10:
        raise NotPSDError(f"{what} has an eigenvalue below -1e-10")
    return m


def fidelity(rho_target: DensityMatrix | np.ndarray, rho_measured: DensityMatrix | np.ndarray) -> float:
    """Overlap fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)), in [0, 1].

    This is the square-root (amplitude-level) convention: for two pure
    states it equals |<psi|chi>|.  The squared convention is simply the
    square of this value.  Symmetric in its arguments; 1 iff the states
    coincide.

    Raises:
        BasisMismatchError: two DensityMatrix arguments with different bases.
        NotPSDError: an array argument is not Hermitian PSD.
    """
    if isinstance(rho_target, DensityMatrix) and isinstance(rho_measured, DensityMatrix):
        if rho_target.basis != rho_measured.basis:
            raise BasisMismatchError("fidelity needs both states on one basis")
    a = _as_psd_array(rho_target, "rho_target")
    b = _as_psd_array(rho_measured, "rho_measured")
    if a.shape != b.shape:
        raise BasisMismatchError(f"matrix shapes differ: {a.shape} vs {b.shape}")
    sqrt_a = _hermitian_sqrt(a)
    inner = sqrt_a @ b @ sqrt_a
    inner = (inner + inner.conj().T) / 2.0
    value = float(np.sum(np.sqrt(np.clip(np.linalg.eigvalsh(inner), 0.0, None))))
    return min(max(value, 0.0), 1.0)


@dataclass(frozen=True, eq=False)
class TomographyResult:
    """End-to-end reconstruction output.

    rho_linear is the raw Hermitian inversion (possibly non-PSD);
    rho_physical the clipped, renormalized density matrix; fidelities are
    scored against the requested target in both conventions.
    """

    rho_linear: np.ndarray
    rho_physical: DensityMatrix
    fidelity_vs_target: float
    fidelity_vs_target_squared: float
    std_errors: np.ndarray

    def to_interchange(self) -> dict:
        return {
            "rho_linear": matrix_to_interchange(self.rho_physical.basis, self.rho_linear),
            "rho_physical": self.rho_physical.to_interchange(),
            "fidelity": self.fidelity_vs_target,
            "fidelity_squared": self.fidelity_vs_target_squared,
        }


def run_tomography(
    rho_true: DensityMatrix,
    exposure: float,
    seed: int | None,
    target: DensityMatrix,
) -> TomographyResult:
    """Full pipeline: measure ``rho_true``, reconstruct, score vs ``target``.

    ``exposure = math.inf`` bypasses count simulation and feeds exact
    probabilities (the noiseless baseline).  Deterministic for a given
    seed.
    """
    basis = rho_true.basis
    if target.basis != basis:
        raise BasisMismatchError("target must share the measured state's basis")
    projectors = projector_set(basis)
    if math.isinf(exposure):
        records = exact_records(rho_true, projectors)
    else:
        if seed is None:
            raise ValueError("a seed is required for finite exposure")
        probabilities = [(proj, ideal_probability(rho_true, proj)) for proj in projectors]
        records = simulate_counts(probabilities, exposure, seed)
    rho_linear, std_errors = reconstruct_linear(records, basis)
    rho_physical = project_physical(rho_linear, basis)
    score = fidelity(target, rho_physical)
    return TomographyResult(rho_linear, rho_physical, score, score**2, std_errors)


def records_to_obj(records: Sequence[CountRecord]) -> list[dict]:
    """Serializable form of a record list: {label, P, counts, N, seed}."""
    return [
        {
            "label": rec.label.text,
            "P": rec.expected_probability,
            "counts": rec.counts,
            "N": "infinite" if rec.is_exact else rec.exposure,
            "seed": rec.seed,
        }
        for rec in records
    ]


def records_from_obj(obj: Sequence[Mapping]) -> list[CountRecord]:
    """Inverse of :func:`records_to_obj`."""
    records = []
    for item in obj:
        exposure = item["N"]
        exposure = math.inf if exposure == "infinite" else float(exposure)
        seed = item["seed"]
        records.append(
            CountRecord(
                ProjectorLabel.from_text(item["label"]),
                float(item["P"]),
                int(item["counts"]),
                exposure,
                None if seed is None else int(seed),
            )
        )
    return records
