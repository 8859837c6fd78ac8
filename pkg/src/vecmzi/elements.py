"""Jones operators and parameter specs for the interferometer's optical elements."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

JonesOperator = np.ndarray

BS_CONVENTIONS = ("hadamard", "symmetric")

# Above this mean photon number per trial the attenuated source no longer
# approximates a single-photon stream.
SINGLE_PHOTON_MU_LIMIT = 0.1


@dataclass(frozen=True)
class QplateSpec:
    """Patterned half-wave retarder whose fast axis rotates with azimuth.

    The local fast-axis angle is ``chi = s*q*phi + alpha0`` with ``s = +1``
    for ``handedness="plus"`` and ``s = -1`` for ``"minus"``.  The default
    (q=1/2, minus, alpha0=pi/4) maps |H> at azimuth phi to (sin phi, cos phi).
    """

    q: float = 0.5
    alpha0: float = np.pi / 4
    handedness: str = "minus"

    def __post_init__(self) -> None:
        if self.handedness not in ("plus", "minus"):
            raise ValueError(f"handedness must be 'plus' or 'minus', got {self.handedness!r}")
        if not (np.isfinite(self.q) and np.isfinite(self.alpha0)):
            raise ValueError("q and alpha0 must be finite")


@dataclass(frozen=True)
class SourceSpec:
    """Attenuated coherent source emitting Poisson(mu) photons per trial."""

    mu: float

    def __post_init__(self) -> None:
        if not (self.mu > 0.0 and np.isfinite(self.mu)):
            raise ValueError(f"mu must be positive and finite, got {self.mu!r}")
        if self.mu >= SINGLE_PHOTON_MU_LIMIT:
            warnings.warn(
                f"mu={self.mu} is outside the single-photon regime "
                f"(expected < {SINGLE_PHOTON_MU_LIMIT})",
                stacklevel=2,
            )


def bs_5050(in1: np.ndarray, in2: np.ndarray, convention: str = "hadamard"):
    """50:50 beamsplitter acting per polarization component on two input amplitudes.

    The default real Hadamard convention returns ((in1+in2)/sqrt2,
    (in1-in2)/sqrt2); the symmetric convention puts i on each reflection.
    Both conserve |in1|^2 + |in2|^2.
    """
    in1 = np.asarray(in1, dtype=complex)
    in2 = np.asarray(in2, dtype=complex)
    s = np.sqrt(2.0)
    if convention == "hadamard":
        return (in1 + in2) / s, (in1 - in2) / s
    if convention == "symmetric":
        return (in1 + 1j * in2) / s, (1j * in1 + in2) / s
    raise ValueError(f"unknown beamsplitter convention {convention!r}")


def phase_shift(v: np.ndarray, theta: float) -> np.ndarray:
    """Multiply every amplitude by e^{i theta}; norm preserved."""
    return np.exp(1j * theta) * np.asarray(v, dtype=complex)


def mirror(v: np.ndarray) -> np.ndarray:
    """Arm mirror: identity, since the common reflection phase cancels between arms."""
    return np.asarray(v, dtype=complex)


def qplate_axis_angle(spec: QplateSpec, phi):
    """Local fast-axis angle chi at azimuth phi (vectorized over phi)."""
    s = 1.0 if spec.handedness == "plus" else -1.0
    return s * spec.q * np.asarray(phi, dtype=float) + spec.alpha0


def qplate_operator(spec: QplateSpec, phi: float) -> JonesOperator:
    """Jones matrix of the retarder at azimuth phi.

    A half-wave plate with fast axis chi:
    [[cos 2chi, sin 2chi], [sin 2chi, -cos 2chi]] -- unitary, Hermitian, and
    involutory.
    """
    chi = qplate_axis_angle(spec, phi)
    c, s = np.cos(2.0 * chi), np.sin(2.0 * chi)
    return np.array([[c, s], [s, -c]], dtype=complex)
