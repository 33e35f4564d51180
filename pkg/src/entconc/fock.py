"""Dense linear algebra on a truncated multimode Fock space.

Modes are numbered from 1.  A multimode basis state ``|n_1, ..., n_k>`` has
flat index ``sum(n_i * (cutoff + 1) ** (k - i))``, i.e. mode 1 is the most
significant digit.  This is numpy's C order for an array of shape
``(cutoff + 1,) * k``, and every routine in the package relies on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NonPhysicalStateError, ParameterGuardError

HERMITIAN_TOL = 1e-10
PSD_FLOOR = -1e-10


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=complex)
    out.flags.writeable = False
    return out


def _check_dim(size: int, modes: int, cutoff: int) -> None:
    if modes < 1:
        raise ValueError(f"modes must be positive, got {modes}")
    if cutoff < 0:
        raise ValueError(f"cutoff must be non-negative, got {cutoff}")
    if size != (cutoff + 1) ** modes:
        raise ValueError(
            f"dimension {size} does not match (cutoff+1)^modes = {(cutoff + 1) ** modes}"
        )


@dataclass(frozen=True)
class FockOperator:
    """Dense operator on ``modes`` modes, each truncated at photon number ``cutoff``."""

    matrix: np.ndarray
    modes: int
    cutoff: int

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {m.shape}")
        _check_dim(m.shape[0], self.modes, self.cutoff)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def dag(self) -> "FockOperator":
        return FockOperator(self.matrix.conj().T, self.modes, self.cutoff)

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            _same_space(self, other)
            return FockOperator(self.matrix @ other.matrix, self.modes, self.cutoff)
        if isinstance(other, StateVector):
            _same_space(self, other)
            return StateVector(self.matrix @ other.amplitudes, self.modes, self.cutoff)
        return NotImplemented

    def __add__(self, other: "FockOperator") -> "FockOperator":
        _same_space(self, other)
        return FockOperator(self.matrix + other.matrix, self.modes, self.cutoff)

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        _same_space(self, other)
        return FockOperator(self.matrix - other.matrix, self.modes, self.cutoff)

    def __mul__(self, scalar) -> "FockOperator":
        return FockOperator(scalar * self.matrix, self.modes, self.cutoff)

    __rmul__ = __mul__

    def kron(self, other: "FockOperator") -> "FockOperator":
        """Tensor product with ``other`` placed on the less significant modes."""
        if other.cutoff != self.cutoff:
            raise ValueError("cannot combine operators with different cutoffs")
        return FockOperator(
            np.kron(self.matrix, other.matrix), self.modes + other.modes, self.cutoff
        )


@dataclass(frozen=True)
class StateVector:
    """Pure state amplitudes.  Not assumed normalized."""

    amplitudes: np.ndarray
    modes: int
    cutoff: int

    def __post_init__(self):
        v = _frozen(self.amplitudes)
        if v.ndim != 1:
            raise ValueError(f"amplitudes must be a vector, got shape {v.shape}")
        _check_dim(v.shape[0], self.modes, self.cutoff)
        object.__setattr__(self, "amplitudes", v)

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalized(self) -> "StateVector":
        n2 = self.norm_squared
        if n2 == 0.0:
            raise ZeroDivisionError("cannot normalize a zero vector")
        return StateVector(self.amplitudes / np.sqrt(n2), self.modes, self.cutoff)

    def amplitude(self, *occupations: int) -> complex:
        return complex(self.amplitudes[basis_index(occupations, self.cutoff)])

    def density_matrix(self) -> "DensityMatrix":
        """``|psi><psi|``, flagged normalized when the norm is 1 to 1e-12."""
        v = self.amplitudes
        return DensityMatrix(
            np.outer(v, v.conj()),
            self.modes,
            self.cutoff,
            normalized=abs(self.norm_squared - 1.0) <= 1e-12,
        )


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian positive matrix, possibly with trace below one.

    An unnormalized density matrix carries a heralding probability in its
    trace; ``normalized`` records whether the trace is meant to be one.
    """

    matrix: np.ndarray
    modes: int
    cutoff: int
    normalized: bool = True

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        _check_dim(m.shape[0], self.modes, self.cutoff)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalize(self) -> "DensityMatrix":
        tr = self.trace
        if tr <= 0.0:
            raise NonPhysicalStateError(f"cannot normalize a state with trace {tr:.3e}")
        return DensityMatrix(self.matrix / tr, self.modes, self.cutoff, normalized=True)

    def eigenvalues(self) -> np.ndarray:
        return hermitian_eigenvalues(self.matrix)

    def check_physical(self, floor: float = PSD_FLOOR) -> "DensityMatrix":
        """Raise :class:`NonPhysicalStateError` unless Hermitian, PSD and with a valid trace.

        The eigenvalue floor is applied relative to the trace so that heralded
        states with tiny success probability are judged on their shape.
        """
        m = self.matrix
        scale = max(np.abs(m).max(), 1e-300)
        asym = np.abs(m - m.conj().T).max() / scale
        if asym > 1e-12:
            raise NonPhysicalStateError(f"matrix is not Hermitian (relative deviation {asym:.2e})")
        tr = self.trace
        if not 0.0 < tr <= 1.0 + 1e-12:
            raise NonPhysicalStateError(f"trace {tr!r} outside (0, 1]")
        if self.normalized and abs(tr - 1.0) > 1e-12:
            raise NonPhysicalStateError(f"state flagged normalized has trace {tr!r}")
        lowest = self.eigenvalues()[0] / tr
        if lowest < floor:
            raise NonPhysicalStateError(
                f"negative eigenvalue {lowest:.3e} (relative to trace) below floor {floor:.0e}"
            )
        return self


def _same_space(a, b) -> None:
    if a.modes != b.modes or a.cutoff != b.cutoff:
        raise ValueError(
            f"space mismatch: ({a.modes} modes, cutoff {a.cutoff}) vs "
            f"({b.modes} modes, cutoff {b.cutoff})"
        )


def hermitian_part(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.conj().T)


def basis_index(occupations: Sequence[int], cutoff: int) -> int:
    """Flat index of ``|n_1, ..., n_k>`` (mode 1 most significant)."""
    index = 0
    for n in occupations:
        if not 0 <= n <= cutoff:
            raise ValueError(f"occupation {n} outside [0, {cutoff}]")
        index = index * (cutoff + 1) + n
    return index


def basis_occupations(index: int, modes: int, cutoff: int) -> tuple[int, ...]:
    return tuple(int(n) for n in np.unravel_index(index, (cutoff + 1,) * modes))


def fock_state(occupations: Sequence[int], cutoff: int) -> StateVector:
    modes = len(occupations)
    v = np.zeros((cutoff + 1) ** modes, dtype=complex)
    v[basis_index(occupations, cutoff)] = 1.0
    return StateVector(v, modes, cutoff)


def superposition(terms: dict[tuple[int, ...], complex], cutoff: int) -> StateVector:
    """Normalized ``sum_k c_k |n_k>`` from an occupation -> coefficient mapping."""
    modes = len(next(iter(terms)))
    v = np.zeros((cutoff + 1) ** modes, dtype=complex)
    for occ, c in terms.items():
        v[basis_index(occ, cutoff)] += c
    return StateVector(v, modes, cutoff).normalized()


def annihilation(cutoff: int) -> FockOperator:
    """Single-mode lowering operator, ``<n-1|a|n> = sqrt(n)``."""
    if cutoff < 1:
        raise ParameterGuardError(
            "cutoff must be at least 1; the annihilation operator vanishes on a "
            "vacuum-only space"
        )
    return FockOperator(np.diag(np.sqrt(np.arange(1, cutoff + 1)), k=1), 1, cutoff)


def creation(cutoff: int) -> FockOperator:
    return annihilation(cutoff).dag


def number_operator(cutoff: int) -> FockOperator:
    return FockOperator(np.diag(np.arange(cutoff + 1, dtype=float)), 1, cutoff)


def identity(cutoff: int, modes: int = 1) -> FockOperator:
    return FockOperator(np.eye((cutoff + 1) ** modes), modes, cutoff)


def vacuum_projector(cutoff: int) -> FockOperator:
    m = np.zeros((cutoff + 1, cutoff + 1))
    m[0, 0] = 1.0
    return FockOperator(m, 1, cutoff)


def embed(op: FockOperator, target_mode: int, total_modes: int) -> FockOperator:
    """``I x ... x op x ... x I`` with ``op`` acting on ``target_mode``."""
    if op.modes != 1:
        raise ValueError("embed expects a single-mode operator")
    if not 1 <= target_mode <= total_modes:
        raise ValueError(f"mode {target_mode} out of range 1..{total_modes}")
    d = op.cutoff + 1
    left = np.eye(d ** (target_mode - 1))
    right = np.eye(d ** (total_modes - target_mode))
    return FockOperator(np.kron(np.kron(left, op.matrix), right), total_modes, op.cutoff)


def _check_mode(mode: int, modes: int) -> None:
    if not 1 <= mode <= modes:
        raise ValueError(f"mode {mode} out of range 1..{modes}")


def apply_to_state(op: np.ndarray, psi: StateVector, mode: int) -> StateVector:
    """Act with a single-mode matrix on one mode of ``psi`` without building the embedding."""
    _check_mode(mode, psi.modes)
    d = psi.cutoff + 1
    t = psi.amplitudes.reshape((d,) * psi.modes)
    t = np.moveaxis(np.tensordot(op, t, axes=([1], [mode - 1])), 0, mode - 1)
    return StateVector(t.reshape(-1), psi.modes, psi.cutoff)


def conjugate_mode(matrix: np.ndarray, op: np.ndarray, mode: int, modes: int, cutoff: int):
    """``O rho O^dagger`` with ``O`` a single-mode matrix on ``mode`` (raw arrays)."""
    d = cutoff + 1
    t = matrix.reshape((d,) * (2 * modes))
    t = np.moveaxis(np.tensordot(op, t, axes=([1], [mode - 1])), 0, mode - 1)
    col = modes + mode - 1
    t = np.moveaxis(np.tensordot(t, op.conj(), axes=([col], [1])), -1, col)
    return t.reshape(matrix.shape)


def apply_kraus(
    rho: DensityMatrix, kraus: Iterable[np.ndarray], mode: int, normalized: bool | None = None
) -> DensityMatrix:
    """``sum_k K_k rho K_k^dagger`` with single-mode Kraus matrices on ``mode``."""
    _check_mode(mode, rho.modes)
    out = np.zeros_like(rho.matrix)
    for k in kraus:
        out += conjugate_mode(rho.matrix, np.asarray(k), mode, rho.modes, rho.cutoff)
    flag = rho.normalized if normalized is None else normalized
    return DensityMatrix(hermitian_part(out), rho.modes, rho.cutoff, normalized=flag)


def apply_unitary(rho: DensityMatrix, op: FockOperator) -> DensityMatrix:
    """``U rho U^dagger`` for a full-space operator.  Trace may drop for cropped operators."""
    _same_space(rho, op)
    m = op.matrix @ rho.matrix @ op.matrix.conj().T
    return DensityMatrix(hermitian_part(m), rho.modes, rho.cutoff, normalized=False)


def partial_trace(rho: DensityMatrix, keep_modes: Iterable[int]) -> DensityMatrix:
    """Reduced state on ``keep_modes``; the kept modes retain their relative order."""
    keep = sorted(set(keep_modes))
    if not keep:
        raise ValueError("keep_modes must be non-empty")
    for m in keep:
        _check_mode(m, rho.modes)
    k = rho.modes
    d = rho.cutoff + 1
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = letters[:k]
    cols = "".join(letters[k + i] if i + 1 in keep else rows[i] for i in range(k))
    out = "".join(rows[i - 1] for i in keep) + "".join(cols[i - 1] for i in keep)
    t = np.einsum(f"{rows}{cols}->{out}", rho.matrix.reshape((d,) * (2 * k)))
    kd = d ** len(keep)
    return DensityMatrix(
        hermitian_part(t.reshape(kd, kd)), len(keep), rho.cutoff, normalized=rho.normalized
    )


def partial_transpose(rho, transposed_mode: int = 1) -> FockOperator:
    """Transpose the indices of one mode of a two-mode operator.

    ``<m,n| rho^T_A |p,q> = <p,n| rho |m,q>``.  The result is Hermitian but
    in general not positive, so it comes back as a plain :class:`FockOperator`.
    """
    if rho.modes != 2:
        raise ValueError(f"partial transpose is defined here for two modes, got {rho.modes}")
    _check_mode(transposed_mode, 2)
    d = rho.cutoff + 1
    t = rho.matrix.reshape(d, d, d, d)
    if transposed_mode == 1:
        t = t.transpose(2, 1, 0, 3)
    else:
        t = t.transpose(0, 3, 2, 1)
    return FockOperator(t.reshape(d * d, d * d), 2, rho.cutoff)


def hermitian_eigenvalues(matrix) -> np.ndarray:
    """Ascending real spectrum of a (numerically) Hermitian matrix.

    The input is symmetrized before the eigensolve; a deviation from
    Hermiticity larger than 1e-10 relative to the matrix scale is rejected.
    """
    if isinstance(matrix, (FockOperator, DensityMatrix)):
        matrix = matrix.matrix
    m = np.asarray(matrix, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, np.abs(m).max())
    if np.abs(m - m.conj().T).max() > HERMITIAN_TOL * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    return np.linalg.eigvalsh(hermitian_part(m))
