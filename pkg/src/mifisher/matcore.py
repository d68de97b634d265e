"""Dense complex matrix kernel.

Matrices are plain ``numpy`` complex arrays. The one algorithm written out by
hand is the Hermitian eigensolver (cyclic complex Jacobi), because the SLD and
every measurement basis downstream depend on its ordering being reproducible.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, NoConvergence, NotHermitian

HERMITIAN_TOL = 1e-9
EQUAL_TOL = 1e-12
TIE_TOL = 1e-12
MAX_SWEEPS = 100
# off-diagonal Frobenius norm relative to ||m||_F at which Jacobi stops
JACOBI_OFF_TOL = 1e-14


@dataclass(frozen=True)
class BipartiteDims:
    dim_a: int
    dim_b: int

    def __post_init__(self):
        if int(self.dim_a) < 1 or int(self.dim_b) < 1:
            raise DimMismatch(f"dimensions must be positive, got {self.dim_a}x{self.dim_b}")

    @property
    def total(self) -> int:
        return self.dim_a * self.dim_b

    def party(self, label: str) -> int:
        if label == "a":
            return self.dim_a
        if label == "b":
            return self.dim_b
        raise ValueError(f"party must be 'a' or 'b', got {label!r}")

    def check(self, m: np.ndarray) -> None:
        if m.shape != (self.total, self.total):
            raise DimMismatch(f"operator of shape {m.shape} on a {self.dim_a}x{self.dim_b} system")


@dataclass(frozen=True)
class EigDecomposition:
    """Eigenvalues ascending; ``eigenvectors[:, k]`` belongs to ``eigenvalues[k]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_cmatrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimMismatch(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def max_abs(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def allclose(a, b, atol: float = EQUAL_TOL) -> bool:
    """Entrywise comparison with an absolute tolerance only."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a.shape == b.shape and max_abs(a - b) <= atol


def hermiticity_residual(m: np.ndarray) -> float:
    return max_abs(m - m.conj().T)


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return m.shape[0] == m.shape[1] and hermiticity_residual(m) <= tol


def is_unitary(u: np.ndarray, tol: float = 1e-9) -> bool:
    u = as_cmatrix(u)
    return u.shape[0] == u.shape[1] and max_abs(u.conj().T @ u - np.eye(u.shape[0])) <= tol


def _rotation(app: float, aqq: float, b: complex):
    """Complex Jacobi rotation R (as c, s, conj phase) zeroing the pivot b = a[p, q].

    R = diag(1, conj(phase)) @ [[c, s], [-s, c]]: the phase makes the pivot
    real, the real rotation annihilates it.
    """
    abs_b = abs(b)
    phase_c = (b / abs_b).conjugate()
    phi = (aqq - app) / (2.0 * abs_b)
    t = (1.0 if phi >= 0.0 else -1.0) / (abs(phi) + math.sqrt(phi * phi + 1.0))
    c = 1.0 / math.sqrt(1.0 + t * t)
    return c, t * c, phase_c, t * abs_b


def _jacobi_rotate(a: list, v: list, n: int, p: int, q: int) -> None:
    """Zero a[p][q] in place (nested lists); accumulate the rotation into v."""
    b = a[p][q]
    if b == 0.0:
        return
    app, aqq = a[p][p].real, a[q][q].real
    c, s, ph, shift = _rotation(app, aqq, b)
    sph, cph = s * ph, c * ph
    sphc, cphc = sph.conjugate(), cph.conjugate()
    for row in a:
        x, y = row[p], row[q]
        row[p] = c * x - sph * y
        row[q] = s * x + cph * y
    rp, rq = a[p], a[q]
    for k in range(n):
        x, y = rp[k], rq[k]
        rp[k] = c * x - sphc * y
        rq[k] = s * x + cphc * y
    for row in v:
        x, y = row[p], row[q]
        row[p] = c * x - sph * y
        row[q] = s * x + cph * y
    rp[q] = rq[p] = 0j
    rp[p] = complex(app - shift)
    rq[q] = complex(aqq + shift)


def _off_norm(a: list, n: int) -> float:
    return math.sqrt(sum(abs(a[i][j]) ** 2 for i in range(n) for j in range(n) if i != j))


def _eig_2x2(m: np.ndarray, tie_tol: float) -> EigDecomposition:
    # a single Jacobi rotation diagonalizes a 2x2 Hermitian matrix exactly
    app, aqq = float(m[0, 0].real), float(m[1, 1].real)
    b = 0.5 * (complex(m[0, 1]) + complex(m[1, 0]).conjugate())
    if b == 0.0:
        vecs = [(1.0 + 0j, 0j), (0j, 1.0 + 0j)]
        lam = [app, aqq]
    else:
        c, s, ph, shift = _rotation(app, aqq, b)
        vecs = [(c + 0j, -s * ph), (s + 0j, c * ph)]
        lam = [app - shift, aqq + shift]
    fixed = []
    for x, y in vecs:
        # largest component real positive; first one on ties
        z = x if abs(x) >= abs(y) - TIE_TOL else y
        f = abs(z) / z
        fixed.append((x * f, y * f))
    swap = lam[1] < lam[0] - tie_tol or (
        abs(lam[1] - lam[0]) <= tie_tol
        and _compare_vectors(np.array(fixed[1]), np.array(fixed[0]), tie_tol) < 0
    )
    if swap:
        lam.reverse()
        fixed.reverse()
    return EigDecomposition(
        eigenvalues=np.array(lam),
        eigenvectors=np.array([[fixed[0][0], fixed[1][0]], [fixed[0][1], fixed[1][1]]]),
    )


def _normalize_phase(vec: np.ndarray) -> np.ndarray:
    # largest-magnitude component (first one on ties) made real and positive
    mags = np.abs(vec)
    k = int(np.argmax(mags >= mags.max() - TIE_TOL))
    return vec * (abs(vec[k]) / vec[k]) if vec[k] != 0 else vec


def _compare_vectors(x: np.ndarray, y: np.ndarray, tol: float) -> int:
    for xi, yi in zip(x, y):
        for u, w in ((xi.real, yi.real), (xi.imag, yi.imag)):
            if abs(u - w) > tol:
                return -1 if u > w else 1
    return 0


def herm_eig(
    m,
    herm_tol: float = HERMITIAN_TOL,
    max_sweeps: int = MAX_SWEEPS,
    tie_tol: float = TIE_TOL,
) -> EigDecomposition:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    Eigenvalues come out ascending. Eigenvectors are phase-fixed so that their
    largest component is real positive, and exactly tied eigenvalues (within
    ``tie_tol``) are ordered by the first differing eigenvector component,
    larger component first, so a degenerate diagonal input returns the
    identity columns.

    Raises
    ------
    NotHermitian
        If ``m`` is not square or ``max|m - m^dagger| > herm_tol``.
    NoConvergence
        If the off-diagonal mass has not vanished after ``max_sweeps`` sweeps.
    """
    m = as_cmatrix(m)
    n = m.shape[0]
    if m.shape != (n, n):
        raise NotHermitian(f"matrix is not square: {m.shape}")
    if hermiticity_residual(m) > herm_tol:
        raise NotHermitian(f"Hermiticity residual {hermiticity_residual(m):.3e} exceeds {herm_tol:g}")
    if n == 2:
        return _eig_2x2(m, tie_tol)
    h = 0.5 * (m + m.conj().T)
    a = h.tolist()
    v = np.eye(n, dtype=complex).tolist()
    scale = float(np.linalg.norm(h))
    if n > 1 and scale > 0.0:
        for _ in range(max_sweeps):
            if _off_norm(a, n) <= JACOBI_OFF_TOL * scale:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    _jacobi_rotate(a, v, n, p, q)
        else:
            if _off_norm(a, n) > JACOBI_OFF_TOL * scale:
                raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    a = np.array(a, dtype=complex)
    v = np.array(v, dtype=complex)
    evals = np.real(np.diag(a)).copy()
    vecs = [_normalize_phase(v[:, k]) for k in range(n)]

    def by_vector(i, j):
        return _compare_vectors(vecs[i], vecs[j], tie_tol)

    # group by value first so the tolerant comparison stays transitive
    order = sorted(range(n), key=lambda k: evals[k])
    groups, current = [], [order[0]] if n else []
    for k in order[1:]:
        if evals[k] - evals[current[0]] <= tie_tol:
            current.append(k)
        else:
            groups.append(current)
            current = [k]
    if current:
        groups.append(current)
    order = [k for g in groups for k in sorted(g, key=functools.cmp_to_key(by_vector))]
    return EigDecomposition(
        eigenvalues=evals[order],
        eigenvectors=np.column_stack([vecs[k] for k in order]) if n else v,
    )


def herm_func(m, fn) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum."""
    eig = herm_eig(m)
    v = eig.eigenvectors
    return (v * fn(eig.eigenvalues)) @ v.conj().T


def expi_hermitian(h) -> np.ndarray:
    """Unitary ``exp(i h)`` for Hermitian ``h``."""
    return herm_func(h, lambda lam: np.exp(1j * lam))


def kron(a, b) -> np.ndarray:
    return np.kron(as_cmatrix(a), as_cmatrix(b))


def kron_all(*mats) -> np.ndarray:
    return functools.reduce(kron, mats)


def partial_trace(m, dims: BipartiteDims, keep: str) -> np.ndarray:
    """Reduce a bipartite operator to party ``keep`` ('a' or 'b')."""
    m = as_cmatrix(m)
    if m.shape != (dims.total, dims.total):
        raise DimMismatch(f"operator of shape {m.shape} does not act on {dims.dim_a}x{dims.dim_b}")
    t = m.reshape(dims.dim_a, dims.dim_b, dims.dim_a, dims.dim_b)
    if keep == "a":
        return np.einsum("ijkj->ik", t)
    if keep == "b":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"keep must be 'a' or 'b', got {keep!r}")


def embed(op, dims: BipartiteDims, party: str) -> np.ndarray:
    """Tensor a local operator with the identity on the other party."""
    op = as_cmatrix(op)
    if op.shape != (dims.party(party),) * 2:
        raise DimMismatch(f"local operator {op.shape} does not act on party {party} of dim {dims.party(party)}")
    if party == "a":
        return np.kron(op, np.eye(dims.dim_b))
    return np.kron(np.eye(dims.dim_a), op)


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
