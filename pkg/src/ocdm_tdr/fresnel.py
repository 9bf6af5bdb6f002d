"""Real-valued (baseband) discrete Fresnel transform.

The transform matrix is the real circulant ``Phi = F^H diag(gamma) F`` where
``F`` is the unitary DFT and ``gamma`` holds quadratic-phase eigenvalues with
Hermitian symmetry. Applying it therefore costs one FFT pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

# Imaginary residue tolerated after inverse FFT synthesis, relative to output norm.
IMAG_RESIDUE_TOL = 1e-9


def fresnel_eigenvalues(two_n: int) -> np.ndarray:
    """Eigenvalues of the modified DFnT for a transform of size ``two_n``."""
    half = two_n // 2
    k = np.arange(two_n, dtype=np.float64)
    # k*k taken mod 4N keeps the phase argument small for large sizes
    phase = np.pi * np.mod(k * k, 2 * two_n) / two_n
    return np.where(k <= half, np.exp(-1j * phase), np.exp(1j * phase))


def _check_size(two_n: int) -> None:
    if not isinstance(two_n, (int, np.integer)) or isinstance(two_n, bool):
        raise TypeError(f"transform size must be an integer, got {two_n!r}")
    if two_n < 4 or two_n % 2:
        raise ValueError(f"transform size must be even and >= 4, got {two_n}")
    if (two_n // 2) % 2:
        raise ValueError(
            f"half-size N = {two_n // 2} is odd; the k = N eigenvalue would be "
            "complex and the transform matrix would not be real"
        )


@dataclass(frozen=True)
class FresnelBasis:
    """Modified DFnT of size ``size`` (= 2N).

    Instances are immutable; build them with :func:`build_fresnel_basis`.
    """

    size: int
    eigenvalues: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_size(self.size)
        ev = np.asarray(self.eigenvalues, dtype=np.complex128)
        if ev.shape != (self.size,):
            raise ValueError("eigenvalue count must equal the basis size")
        ev = ev.copy()
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def half_size(self) -> int:
        return self.size // 2

    def matrix(self) -> np.ndarray:
        """Dense real ``Phi``. Debug/oracle path, O((2N)^2) memory."""
        return _dense_matrix(self.size)

    def forward(self, x, dense: bool = False) -> np.ndarray:
        return dfnt_forward(self, x, dense=dense)

    def inverse(self, xdot, dense: bool = False) -> np.ndarray:
        return dfnt_inverse(self, xdot, dense=dense)


@lru_cache(maxsize=32)
def _cached_basis(two_n: int) -> FresnelBasis:
    return FresnelBasis(two_n, fresnel_eigenvalues(two_n))


def build_fresnel_basis(two_n: int) -> FresnelBasis:
    """Return the modified DFnT basis of size ``two_n``.

    Raises:
        ValueError: if ``two_n`` is odd, smaller than 4, or ``two_n / 2`` is odd.
    """
    _check_size(two_n)
    return _cached_basis(int(two_n))


@lru_cache(maxsize=8)
def _dense_matrix(two_n: int) -> np.ndarray:
    gamma = fresnel_eigenvalues(two_n)
    f = np.fft.fft(np.eye(two_n), axis=0, norm="ortho")  # unitary DFT matrix
    phi = f.conj().T @ np.diag(gamma) @ f
    if np.max(np.abs(phi.imag)) > 1e-10:
        raise ArithmeticError("dense Fresnel matrix is not real")
    out = np.ascontiguousarray(phi.real)
    out.setflags(write=False)
    return out


def _as_real(z: np.ndarray, reference_norm: float) -> np.ndarray:
    residue = np.linalg.norm(z.imag)
    if residue > IMAG_RESIDUE_TOL * max(reference_norm, np.finfo(float).tiny):
        raise ArithmeticError(
            f"imaginary residue {residue:.3e} exceeds tolerance; basis is broken"
        )
    return z.real.copy()


def _apply(basis: FresnelBasis, x, eig: np.ndarray, dense_matrix) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape[-1] != basis.size:
        raise ValueError(
            f"sequence length {arr.shape[-1]} does not match basis size {basis.size}"
        )
    if dense_matrix is not None:
        return arr @ dense_matrix.T
    spectrum = np.fft.fft(arr, axis=-1) * eig
    out = np.fft.ifft(spectrum, axis=-1)
    return _as_real(out, float(np.linalg.norm(out)))


def dfnt_forward(basis: FresnelBasis, x, dense: bool = False) -> np.ndarray:
    """Time domain -> discrete-Fresnel domain, ``Phi @ x``.

    ``x`` may be a single length-2N sequence or a stack with the transform
    along the last axis.
    """
    return _apply(basis, x, basis.eigenvalues, basis.matrix() if dense else None)


def dfnt_inverse(basis: FresnelBasis, xdot, dense: bool = False) -> np.ndarray:
    """Discrete-Fresnel domain -> time domain, ``Phi^H @ xdot``."""
    return _apply(
        basis, xdot, basis.eigenvalues.conj(), basis.matrix().T if dense else None
    )
