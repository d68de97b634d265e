"""POVMs, the measurement classes of a bipartite system, and the
projective-measurement manifold searched by the optimizers."""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimMismatch, InvalidPovm, MissingConditional
from .matcore import (
    BipartiteDims,
    as_cmatrix,
    embed,
    expi_hermitian,
    herm_eig,
    hermiticity_residual,
    max_abs,
    projector,
)

POSITIVITY_TOL = 1e-9
COMPLETENESS_TOL = 1e-8


class PovmClass(enum.Enum):
    """Measurement classes of a two-party system, from local to global."""

    LocalA = "LocalA"
    LocalB = "LocalB"
    Product = "Product"
    AdaptiveAtoB = "AdaptiveAtoB"
    AdaptiveBtoA = "AdaptiveBtoA"
    Global = "Global"


@dataclass(frozen=True)
class Povm:
    elements: tuple
    labels: tuple = ()

    def __post_init__(self):
        els = tuple(as_cmatrix(e) for e in self.elements)
        if not els:
            raise InvalidPovm("a POVM needs at least one element")
        d = els[0].shape[0]
        if any(e.shape != (d, d) for e in els):
            raise DimMismatch("POVM elements must be square and of equal size")
        object.__setattr__(self, "elements", els)
        labels = tuple(self.labels) if self.labels else tuple(range(len(els)))
        if len(labels) != len(els):
            raise InvalidPovm("one label per element")
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self) -> int:
        return len(self.elements)

    def stacked(self) -> np.ndarray:
        return np.stack(self.elements)


@dataclass(frozen=True)
class PovmReport:
    hermiticity_residual: float
    positivity_residual: float
    completeness_residual: float
    passed: bool
    failures: tuple = ()


def validate(m: Povm, positivity_tol: float = POSITIVITY_TOL, completeness_tol: float = COMPLETENESS_TOL) -> PovmReport:
    herm = max(hermiticity_residual(e) for e in m.elements)
    pos = 0.0
    for e in m.elements:
        lam = herm_eig(0.5 * (e + e.conj().T), herm_tol=np.inf).eigenvalues[0]
        pos = max(pos, -lam)
    comp = max_abs(sum(m.elements) - np.eye(m.dim))
    failures = []
    if herm > positivity_tol:
        failures.append("hermiticity")
    if pos > positivity_tol:
        failures.append("positivity")
    if comp > completeness_tol:
        failures.append("completeness")
    return PovmReport(herm, pos, comp, not failures, tuple(failures))


def require_valid(m: Povm) -> None:
    report = validate(m)
    if not report.passed:
        raise InvalidPovm(f"invalid POVM ({', '.join(report.failures)}): {report}")


def basis_povm(u) -> Povm:
    """Rank-1 projectors onto the columns of a unitary."""
    u = as_cmatrix(u)
    return Povm(tuple(projector(u[:, k]) for k in range(u.shape[1])))


def computational_basis(dim: int) -> Povm:
    return basis_povm(np.eye(dim))


def trivial_povm(dim: int) -> Povm:
    return Povm((np.eye(dim, dtype=complex),))


def pauli_basis(axis: str) -> Povm:
    s = 1 / np.sqrt(2)
    u = {
        "x": [[s, s], [s, -s]],
        "y": [[s, s], [1j * s, -1j * s]],
        "z": [[1, 0], [0, 1]],
    }[axis.lower()]
    return basis_povm(np.array(u, dtype=complex))


def bloch_projector(polar: float, azimuth: float) -> np.ndarray:
    """|n><n| for the Bloch direction (polar, azimuth)."""
    v = np.array([np.cos(polar / 2), np.exp(1j * azimuth) * np.sin(polar / 2)])
    return projector(v)


def tetrahedral_povm() -> Povm:
    """Four-outcome symmetric qubit POVM (I + n_k . sigma)/4, n_k tetrahedral."""
    r = 1 / np.sqrt(3)
    dirs = [(r, r, r), (r, -r, -r), (-r, r, -r), (-r, -r, r)]
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]])
    z = np.diag([1.0, -1.0]).astype(complex)
    return Povm(tuple((np.eye(2) + a * x + b * y + c * z) / 4 for a, b, c in dirs))


# ------------------------------------------------------------- bipartite embeddings


def embed_local(m: Povm, dims: BipartiteDims, party: str) -> Povm:
    """M_i (x) 1 (party a) or 1 (x) M_i (party b)."""
    if m.dim != dims.party(party):
        raise DimMismatch(f"POVM of dimension {m.dim} on party {party} of dimension {dims.party(party)}")
    return Povm(tuple(embed(e, dims, party) for e in m.elements), m.labels)


def product_povm(ma: Povm, mb: Povm) -> Povm:
    """All M_i (x) N_j; outcome (i, j) gets flat label i * len(mb) + j."""
    els = tuple(np.kron(a, b) for a in ma.elements for b in mb.elements)
    return Povm(els, tuple(range(len(els))))


@dataclass(frozen=True)
class AdaptivePovm:
    """First-stage POVM on one party, then one POVM per first outcome on the other."""

    first: Povm
    conditionals: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "conditionals", tuple(self.conditionals))


def adaptive_embed(ap: AdaptivePovm, dims: BipartiteDims, direction: str = "a->b") -> Povm:
    """Joint POVM of an adaptive measurement.

    For ``a->b`` the elements are M_i (x) N_j^{|i}; for ``b->a`` they are
    N_j^{|i} (x) M_i with M measured on b first. Labels run over (i, j) in
    row-major order of (first outcome, second outcome).
    """
    first_party, second_party = _parties(direction)
    if ap.first.dim != dims.party(first_party):
        raise DimMismatch(f"first-stage POVM does not act on party {first_party}")
    if len(ap.conditionals) < len(ap.first):
        raise MissingConditional(
            f"{len(ap.first)} first-stage outcomes but only {len(ap.conditionals)} conditional POVMs"
        )
    els = []
    for mi, cond in zip(ap.first.elements, ap.conditionals):
        if cond.dim != dims.party(second_party):
            raise DimMismatch(f"conditional POVM does not act on party {second_party}")
        for nj in cond.elements:
            els.append(np.kron(mi, nj) if first_party == "a" else np.kron(nj, mi))
    return Povm(tuple(els))


def _parties(direction: str) -> tuple:
    if direction in ("a->b", "a→b", "ab"):
        return "a", "b"
    if direction in ("b->a", "b→a", "ba"):
        return "b", "a"
    raise ValueError(f"direction must be 'a->b' or 'b->a', got {direction!r}")


def local_as_product(m: Povm, dims: BipartiteDims, party: str) -> Povm:
    """A local measurement seen as a product measurement with {1} on the other side."""
    if party == "a":
        return product_povm(m, trivial_povm(dims.dim_b))
    return product_povm(trivial_povm(dims.dim_a), m)


def product_as_adaptive(ma: Povm, mb: Povm, direction: str = "a->b") -> AdaptivePovm:
    """A product measurement seen as an adaptive one with outcome-independent second stage."""
    first, second = (ma, mb) if _parties(direction)[0] == "a" else (mb, ma)
    return AdaptivePovm(first, (second,) * len(first))


# ------------------------------------------------------------ projective manifold


@dataclass(frozen=True)
class ProjectiveParam:
    """Point on the rank-1 projective manifold of a ``dim``-level system.

    ``params`` (length dim**2) fill a Hermitian H: the first ``dim`` entries
    are the diagonal, then (re, im) of H[i, j] for i < j in row-major order.
    The measured basis is the columns of ``base @ exp(iH)``.
    """

    dim: int
    params: np.ndarray
    base: Optional[np.ndarray] = None

    def __post_init__(self):
        p = np.asarray(self.params, dtype=float).reshape(-1)
        if p.size != self.dim**2:
            raise DimMismatch(f"expected {self.dim ** 2} parameters, got {p.size}")
        object.__setattr__(self, "params", p)


@functools.lru_cache(maxsize=None)
def _upper(dim: int) -> tuple:
    return np.triu_indices(dim, 1)


def params_to_hermitian(dim: int, params: Sequence[float]) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    h = np.diag(params[:dim]).astype(complex)
    iu = _upper(dim)
    off = params[dim::2] + 1j * params[dim + 1 :: 2]
    h[iu] = off
    h[(iu[1], iu[0])] = off.conj()
    return h


def projective_unitary(p: ProjectiveParam) -> np.ndarray:
    u = expi_hermitian(params_to_hermitian(p.dim, p.params))
    return u if p.base is None else as_cmatrix(p.base) @ u


def projective_from_params(p: ProjectiveParam) -> Povm:
    return basis_povm(projective_unitary(p))


def sample_params(dim: int, rng: np.random.Generator, scale: float = np.pi) -> np.ndarray:
    return rng.uniform(-scale, scale, size=dim**2)
