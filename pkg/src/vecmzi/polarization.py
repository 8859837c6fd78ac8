"""Jones-vector algebra for the (H, V) polarization state at one transverse point.

A Jones vector is a length-2 complex ndarray holding the horizontal and
vertical field amplitudes, in that order.  The global time-harmonic factor
is factored out everywhere: it multiplies both components identically and
cancels from every probability.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBasisError

JonesVector = np.ndarray

# Oblique decomposition refuses below this basis conditioning, see wave_state().
DEGENERATE_COS_HALF_THETA = 1e-9

SQRT2 = float(np.sqrt(2.0))


def ket_H() -> JonesVector:
    """Horizontal basis state (1, 0)."""
    return np.array([1.0, 0.0], dtype=complex)


def ket_V() -> JonesVector:
    """Vertical basis state (0, 1)."""
    return np.array([0.0, 1.0], dtype=complex)


def ket_P(phi: float) -> JonesVector:
    """Azimuth-tagged linear polarization (sin phi, cos phi).

    phi=0 gives |V> (orthogonal to the reference arm, paths distinguishable);
    phi=pi/2 gives |H> (identical to the reference arm, paths erased).
    """
    return np.array([np.sin(phi), np.cos(phi)], dtype=complex)


def inner(a: JonesVector, b: JonesVector) -> complex:
    """Hermitian inner product <a|b>, conjugate-linear in the first slot."""
    return complex(np.vdot(a, b))


def norm(v: JonesVector) -> float:
    """Euclidean norm sqrt(|h|^2 + |v|^2)."""
    return float(np.linalg.norm(v))


def particle_state(theta: float) -> JonesVector:
    """Which-path branch (e^{i theta}|H> + |V>)/sqrt(2); always unit norm."""
    return np.array([np.exp(1j * theta), 1.0], dtype=complex) / SQRT2


def wave_state(theta: float) -> JonesVector:
    """Interfering branch (e^{i theta} + 1)|H>/sqrt(2).

    Not normalized: its norm is sqrt(2)*|cos(theta/2)| and vanishes at
    theta = pi, where the (particle, wave) pair stops spanning the plane.
    """
    return np.array([np.exp(1j * theta) + 1.0, 0.0], dtype=complex) / SQRT2


def exit_point_state(phi: float, theta: float) -> JonesVector:
    """Unnormalized bright-port state e^{i theta}|H> + |P(phi)> at one point."""
    return np.exp(1j * theta) * ket_H() + ket_P(phi)


@dataclass(frozen=True)
class WpDecomposition:
    """Coefficients of a state on the (particle, wave) pair at fixed theta.

    ``convention`` records how the coefficients were obtained:
    ``"projection"`` takes literal inner products against the two (mutually
    non-orthogonal) branch states; ``"oblique"`` solves the 2x2 linear system
    exactly so that c1*particle + c2*wave reconstructs the input.
    ``residual_norm`` is the reconstruction error under either convention.
    """

    c1: complex
    c2: complex
    convention: str
    residual_norm: float


def decompose_wp(psi: JonesVector, theta: float, convention: str = "oblique") -> WpDecomposition:
    """Split ``psi`` into which-path and interfering components at phase ``theta``.

    The projection convention mirrors the textbook inner-product recipe but
    does not reconstruct ``psi`` because the basis is oblique and the wave
    branch is unnormalized.  The oblique convention (default) is the exact
    change of basis; it raises :class:`DegenerateBasisError` where the wave
    branch vanishes (|cos(theta/2)| < 1e-9).
    """
    psi = np.asarray(psi, dtype=complex)
    p = particle_state(theta)
    w = wave_state(theta)
    if convention == "projection":
        c1 = inner(p, psi)
        c2 = inner(w, psi)
    elif convention == "oblique":
        if abs(np.cos(theta / 2.0)) < DEGENERATE_COS_HALF_THETA:
            raise DegenerateBasisError(
                f"(particle, wave) basis is singular at theta={theta!r}: "
                "wave branch has vanishing norm"
            )
        basis = np.column_stack([p, w])
        c1, c2 = np.linalg.solve(basis, psi)
        c1, c2 = complex(c1), complex(c2)
    else:
        raise ValueError(f"unknown convention {convention!r}; use 'projection' or 'oblique'")
    residual = float(np.linalg.norm(c1 * p + c2 * w - psi))
    return WpDecomposition(c1=c1, c2=c2, convention=convention, residual_norm=residual)
