"""Two-input interferometric even/odd mode sorter.

A Mach-Zehnder loop with an image-inverting prism in each arm routes the
even-index (rotation-symmetric) part of input A and the odd-index
(antisymmetric) part of input B to one output port, and the complementary
parts to the other.  The element operations below (parity flip, rotation,
prism) are exposed on their own; :func:`duplex` composes them into the
full two-port transfer with a three-parameter imperfection model.

Conventions: each 50:50 splitter transmits with a real-positive amplitude
and reflects with a +i phase; the second arm carries the relative image
rotation of pi.  Mirror parity flips cancel pairwise along each arm and
are not tracked individually.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .oam_state import (
    BasisMismatchError,
    BasisSpec,
    DensityMatrix,
    Superposition,
)

#: Port weights below this are treated as exactly dark (no state to normalize).
EMPTY_PORT_TOL = 1e-15


class WeightError(ValueError):
    """Input port weights must be nonnegative and sum to 1."""


class BrightPortEmptyError(ValueError):
    """No power reached the bright port, so the ratio is undefined."""


def parity_flip(s: Superposition) -> Superposition:
    """Mirror image: index ell -> -ell, amplitudes untouched. An involution."""
    flipped = sorted(((-ell, a) for ell, a in s.terms), key=lambda t: t[0])
    return Superposition(tuple(flipped))


def rotate(s: Superposition, theta: float) -> Superposition:
    """Image rotation by ``theta``: amplitude on ell picks up exp(i ell theta)."""
    return Superposition(
        tuple((ell, a * complex(np.exp(1j * ell * theta))) for ell, a in s.terms)
    )


def dove_prism(s: Superposition, theta: float) -> Superposition:
    """Inverting prism at orientation ``theta``: parity flip, then rotation by
    twice the prism angle."""
    return rotate(parity_flip(s), 2.0 * theta)


@dataclass(frozen=True)
class ElementOp:
    """Declarative wrapper over one linear, norm-preserving element.

    ``kind`` is one of ``identity``, ``parity_flip``, ``rotation``,
    ``dove_prism``; the angle is ignored for the first two.
    """

    kind: str
    angle: float = 0.0

    _KINDS = ("identity", "parity_flip", "rotation", "dove_prism")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown element kind {self.kind!r}; expected one of {self._KINDS}")
        if not math.isfinite(self.angle):
            raise ValueError("element angle must be finite")

    def apply(self, s: Superposition) -> Superposition:
        if self.kind == "identity":
            return s
        if self.kind == "parity_flip":
            return parity_flip(s)
        if self.kind == "rotation":
            return rotate(s, self.angle)
        return dove_prism(s, self.angle)


@dataclass(frozen=True)
class ImperfectionModel:
    """Interferometer error parameters.

    path_phase_error: relative phase between the arms beyond design (rad).
    prism_angle_error: deviation from the pi/2 relative prism setting (rad).
    splitting_imbalance: intensity asymmetry of each splitter in [0, 1);
        0 is an ideal 50:50 split.
    """

    path_phase_error: float = 0.0
    prism_angle_error: float = 0.0
    splitting_imbalance: float = 0.0

    def __post_init__(self) -> None:
        for name in ("path_phase_error", "prism_angle_error", "splitting_imbalance"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0.0 <= self.splitting_imbalance < 1.0:
            raise ValueError(
                f"splitting_imbalance must lie in [0, 1), got {self.splitting_imbalance}"
            )


IDEAL = ImperfectionModel()


@dataclass(frozen=True, eq=False)
class PortOutput:
    """The two output ports of one duplex pass.

    A port with weight 0 carries no state and its matrix is None.  The
    weights are fractions of the total input power and sum to 1 (the
    device is lossless linear optics).
    """

    bright: DensityMatrix | None
    bright_weight: float
    dark: DensityMatrix | None
    dark_weight: float

    def __post_init__(self) -> None:
        if abs(self.bright_weight + self.dark_weight - 1.0) > 1e-12:
            raise WeightError(
                f"port weights must sum to 1, got {self.bright_weight} + {self.dark_weight}"
            )
        for name, rho, w in (
            ("bright", self.bright, self.bright_weight),
            ("dark", self.dark, self.dark_weight),
        ):
            if (rho is None) != (w == 0.0):
                raise WeightError(f"{name} port must carry a state iff its weight is nonzero")


def _second_arm_phases(basis: BasisSpec, prism_angle_error: float) -> np.ndarray:
    # Net second-arm operator relative to the first arm: image rotation by
    # pi + 2*delta, diagonal in the OAM basis.  The pi part is applied as
    # exact signs so ideal parity sorting is exact in floating point.
    ells = np.array(basis.indices, dtype=float)
    signs = np.where(np.array(basis.indices) % 2 == 0, 1.0, -1.0)
    if prism_angle_error == 0.0:
        return signs.astype(complex)
    return signs * np.exp(2j * ells * prism_angle_error)


def _port_operators(basis: BasisSpec, imp: ImperfectionModel) -> dict[str, np.ndarray]:
    """Diagonal transfer operators (bright, dark) x (input A, input B)."""
    eta = imp.splitting_imbalance
    t_sq = (1.0 + eta) / 2.0
    r_sq = (1.0 - eta) / 2.0
    cross = math.sqrt(t_sq * r_sq)
    arm2 = np.exp(1j * imp.path_phase_error) * _second_arm_phases(
        basis, imp.prism_angle_error
    )
    one = np.ones(basis.dim, dtype=complex)
    return {
        # Global +-i / -1 phases from the splitter convention are dropped;
        # they cancel in every density-matrix sandwich.
        "bright_a": cross * (one + arm2),
        "dark_a": t_sq * one - r_sq * arm2,
        "bright_b": t_sq * arm2 - r_sq * one,
        "dark_b": cross * (one + arm2),
    }


def _sandwich(diag_op: np.ndarray, rho: DensityMatrix) -> np.ndarray:
    # M rho M^dagger for diagonal M, as an outer scaling of the entries.
    return np.outer(diag_op, diag_op.conj()) * rho.matrix


def duplex(
    input_a: DensityMatrix | None,
    input_b: DensityMatrix | None,
    weights: tuple[float, float],
    imp: ImperfectionModel = IDEAL,
) -> PortOutput:
    """Push two mutually incoherent inputs through the sorter.

    Each source's density matrix is propagated independently (vacuum at
    the other port) and the port outputs are summed with the input
    weights, which is exact for phase-unlocked sources in a linear device.
    With zero imperfections the bright port carries the even part of A
    plus the odd part of B; the dark port carries the complements.

    Args:
        input_a: state at port A, or None when w_A is 0.
        input_b: state at port B, or None when w_B is 0.
        weights: (w_A, w_B), nonnegative, summing to 1.
        imp: imperfection parameters; defaults to the ideal device.

    Raises:
        WeightError: weights are not convex, or a weighted port has no state.
        BasisMismatchError: the two inputs use different bases.
    """
    w_a, w_b = (float(w) for w in weights)
    if not (math.isfinite(w_a) and math.isfinite(w_b)) or w_a < 0.0 or w_b < 0.0:
        raise WeightError(f"port weights must be nonnegative, got ({w_a}, {w_b})")
    if abs(w_a + w_b - 1.0) > 1e-12:
        raise WeightError(f"port weights must sum to 1, got {w_a} + {w_b}")
    sources = []
    if w_a > 0.0:
        if input_a is None:
            raise WeightError("port A has nonzero weight but no input state")
        sources.append(("a", w_a, input_a))
    if w_b > 0.0:
        if input_b is None:
            raise WeightError("port B has nonzero weight but no input state")
        sources.append(("b", w_b, input_b))
    if not sources:
        raise WeightError("at least one port must carry weight")
    basis = sources[0][2].basis
    if any(rho.basis != basis for _, _, rho in sources):
        raise BasisMismatchError("both inputs must share one basis")

    ops = _port_operators(basis, imp)
    bright_acc = np.zeros((basis.dim, basis.dim), dtype=complex)
    dark_acc = np.zeros((basis.dim, basis.dim), dtype=complex)
    for port, w, rho in sources:
        bright_acc += w * _sandwich(ops[f"bright_{port}"], rho)
        dark_acc += w * _sandwich(ops[f"dark_{port}"], rho)

    w_bright = max(float(np.trace(bright_acc).real), 0.0)
    w_dark = max(float(np.trace(dark_acc).real), 0.0)
    bright = dark = None
    if w_bright > EMPTY_PORT_TOL:
        bright = DensityMatrix(basis, bright_acc / w_bright)
    else:
        w_bright = 0.0
    if w_dark > EMPTY_PORT_TOL:
        dark = DensityMatrix(basis, dark_acc / w_dark)
    else:
        w_dark = 0.0
    return PortOutput(bright, w_bright, dark, w_dark)


def dark_port_ratio(out: PortOutput) -> float:
    """Residual dark-port power over bright-port power.

    Raises:
        BrightPortEmptyError: the bright port carries no power (complete
            destructive interference), so the ratio diverges.
    """
    if out.bright is None or out.bright_weight <= 0.0:
        raise BrightPortEmptyError("bright port is empty; dark/bright ratio diverges")
    return out.dark_weight / out.bright_weight
