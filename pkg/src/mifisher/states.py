"""Density matrices and one-parameter state families.

A family maps theta to a density matrix and knows how to differentiate itself,
either in closed form or by finite differences. Three kinds exist:

* ``generator``: rho_theta = exp(-i theta G) rho_0 exp(i theta G)
* ``builtin``: the named example states (see ``BUILTIN_NAMES``)
* ``grid``: tabulated (theta_k, rho_k) pairs, evaluated only at the table

Families produced by pushing another family through a fixed channel have kind
``mapped`` (see :func:`mifisher.channels.push_family`).
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    AnalyticUnavailable,
    DimMismatch,
    InvalidState,
    ThetaOutOfDomain,
    UnknownName,
)
from .matcore import (
    BipartiteDims,
    as_cmatrix,
    commutator,
    herm_eig,
    hermiticity_residual,
    is_hermitian,
    max_abs,
    partial_trace,
    projector,
)

STATE_TOL = 1e-9
DERIVATIVE_TOL = 1e-7
DEFAULT_FD_STEP = 1e-5
CC_BERNOULLI_DOMAIN = (1e-6, 1.0 - 1e-6)
SCHEMES = ("analytic", "central-fd", "richardson", "auto")


@dataclass(frozen=True)
class DensityMatrix:
    mat: np.ndarray
    dims: Optional[BipartiteDims] = None

    def __post_init__(self):
        mat = as_cmatrix(self.mat)
        object.__setattr__(self, "mat", mat)
        n = mat.shape[0]
        if mat.shape != (n, n):
            raise InvalidState(f"density matrix must be square, got {mat.shape}")
        if self.dims is not None and self.dims.total != n:
            raise DimMismatch(f"{n}x{n} matrix with dims {self.dims.dim_a}x{self.dims.dim_b}")
        if hermiticity_residual(mat) > STATE_TOL:
            raise InvalidState("density matrix is not Hermitian")
        if abs(np.trace(mat) - 1.0) > STATE_TOL:
            raise InvalidState(f"trace {np.trace(mat).real:.12g} != 1")
        lam_min = herm_eig(mat).eigenvalues[0]
        if lam_min < -STATE_TOL:
            raise InvalidState(f"negative eigenvalue {lam_min:.3e}")

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def reduced(self, keep: str) -> "DensityMatrix":
        if self.dims is None:
            raise DimMismatch("state carries no bipartite structure")
        return DensityMatrix(partial_trace(self.mat, self.dims, keep))


@dataclass(frozen=True)
class ParameterizedFamily:
    """One-parameter family theta -> rho_theta.

    Construct through :func:`generator_family`, :func:`make_builtin`,
    :func:`grid_family` or :func:`product_family` rather than directly.
    """

    kind: str
    dim: int
    dims: Optional[BipartiteDims]
    name: str
    matrix_fn: Callable[[float], np.ndarray] = field(repr=False)
    derivative_fn: Optional[Callable[[float], np.ndarray]] = field(default=None, repr=False)
    ket_fn: Optional[Callable[[float], np.ndarray]] = field(default=None, repr=False)
    dket_fn: Optional[Callable[[float], np.ndarray]] = field(default=None, repr=False)
    domain: tuple = (-np.inf, np.inf)
    fd_step: float = DEFAULT_FD_STEP
    grid: Optional[tuple] = field(default=None, repr=False)
    payload: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def is_pure(self) -> bool:
        return self.ket_fn is not None

    def check_theta(self, theta: float) -> float:
        theta = float(theta)
        lo, hi = self.domain
        if not (lo <= theta <= hi) or not np.isfinite(theta):
            raise ThetaOutOfDomain(f"theta={theta!r} outside [{lo}, {hi}] for family {self.name}")
        if self.grid is not None:
            _grid_index(self.grid[0], theta)
        return theta

    def matrix(self, theta: float) -> np.ndarray:
        return self.matrix_fn(self.check_theta(theta))

    def ket(self, theta: float) -> np.ndarray:
        if self.ket_fn is None:
            raise AnalyticUnavailable(f"family {self.name} is not a pure-state family")
        return self.ket_fn(self.check_theta(theta))

    def dket(self, theta: float) -> np.ndarray:
        if self.dket_fn is None:
            raise AnalyticUnavailable(f"family {self.name} has no closed-form ket derivative")
        return self.dket_fn(self.check_theta(theta))

    def with_dims(self, dims: Optional[BipartiteDims]) -> "ParameterizedFamily":
        if dims is not None and dims.total != self.dim:
            raise DimMismatch(f"dims {dims.dim_a}x{dims.dim_b} on a family of dimension {self.dim}")
        return _replace(self, dims=dims)

    def with_fd_step(self, step: float) -> "ParameterizedFamily":
        if not step > 0:
            raise ValueError("finite-difference step must be positive")
        return _replace(self, fd_step=float(step))


def _replace(f: ParameterizedFamily, **changes) -> ParameterizedFamily:
    return dataclasses.replace(f, **changes)


def evaluate(f: ParameterizedFamily, theta: float) -> DensityMatrix:
    return DensityMatrix(f.matrix(theta), f.dims)


def eval_derivative(
    f: ParameterizedFamily,
    theta: float,
    scheme: str = "auto",
    step: Optional[float] = None,
) -> np.ndarray:
    """d rho / d theta at ``theta``.

    ``scheme`` is ``analytic``, ``central-fd``, ``richardson`` or ``auto``
    (analytic when available, otherwise central differences). Grid families
    difference their tabulated neighbours and ignore ``step``.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown derivative scheme {scheme!r}")
    theta = f.check_theta(theta)
    h = f.fd_step if step is None else float(step)
    if scheme == "auto":
        scheme = "analytic" if f.derivative_fn is not None else "central-fd"
    if scheme == "analytic":
        if f.derivative_fn is None:
            raise AnalyticUnavailable(f"no closed-form derivative for {f.kind} family {f.name}")
        return f.derivative_fn(theta)
    if f.grid is not None:
        return _grid_derivative(f, theta, richardson=(scheme == "richardson"))
    d1 = _central(f, theta, h)
    if scheme == "central-fd":
        return d1
    return (4.0 * d1 - _central(f, theta, 2.0 * h)) / 3.0


def _central(f: ParameterizedFamily, theta: float, h: float) -> np.ndarray:
    lo, hi = f.domain
    if theta - h < lo or theta + h > hi:
        raise ThetaOutOfDomain(f"finite-difference stencil theta±{h:g} leaves the domain of {f.name}")
    d = (f.matrix_fn(theta + h) - f.matrix_fn(theta - h)) / (2.0 * h)
    return 0.5 * (d + d.conj().T)


# ---------------------------------------------------------------- generator


def generator_family(
    rho0,
    generator,
    dims: Optional[BipartiteDims] = None,
    name: str = "generator",
) -> ParameterizedFamily:
    """rho_theta = exp(-i theta G) rho_0 exp(i theta G); derivative -i[G, rho_theta]."""
    rho0 = DensityMatrix(rho0, dims).mat
    g = as_cmatrix(generator)
    if g.shape != rho0.shape:
        raise DimMismatch(f"generator {g.shape} vs state {rho0.shape}")
    if not is_hermitian(g):
        raise InvalidState("generator must be Hermitian")
    g = 0.5 * (g + g.conj().T)
    eig = herm_eig(g)
    v, lam = eig.eigenvectors, eig.eigenvalues

    def unitary(theta):
        return (v * np.exp(-1j * theta * lam)) @ v.conj().T

    def matrix(theta):
        u = unitary(theta)
        r = u @ rho0 @ u.conj().T
        return 0.5 * (r + r.conj().T)

    def derivative(theta):
        d = -1j * commutator(g, matrix(theta))
        return 0.5 * (d + d.conj().T)

    ket_fn = dket_fn = None
    e0 = herm_eig(rho0)
    if e0.eigenvalues[-1] > 1.0 - 1e-12:
        psi0 = e0.eigenvectors[:, -1]

        def ket_fn(theta):
            return unitary(theta) @ psi0

        def dket_fn(theta):
            return -1j * (g @ ket_fn(theta))

    return ParameterizedFamily(
        kind="generator",
        dim=rho0.shape[0],
        dims=dims,
        name=name,
        matrix_fn=matrix,
        derivative_fn=derivative,
        ket_fn=ket_fn,
        dket_fn=dket_fn,
        payload={"rho0": rho0, "generator": g},
    )


# ------------------------------------------------------------------ builtins


def _pure_family(name, ket_fn, dket_fn, dims=None, domain=(-np.inf, np.inf)) -> ParameterizedFamily:
    def matrix(theta):
        return projector(ket_fn(theta))

    def derivative(theta):
        psi, dpsi = ket_fn(theta), dket_fn(theta)
        d = np.outer(dpsi, psi.conj())
        return d + d.conj().T

    return ParameterizedFamily(
        kind="builtin",
        dim=len(ket_fn(0.0 if domain[0] <= 0.0 <= domain[1] else domain[0])),
        dims=dims,
        name=name,
        matrix_fn=matrix,
        derivative_fn=derivative,
        ket_fn=ket_fn,
        dket_fn=dket_fn,
        domain=domain,
    )


_S2 = 1.0 / np.sqrt(2.0)


def _bell_phase():
    # (|00> + e^{i theta}|11>)/sqrt 2
    return _pure_family(
        "bell_phase",
        lambda t: np.array([_S2, 0, 0, _S2 * np.exp(1j * t)], dtype=complex),
        lambda t: np.array([0, 0, 0, 1j * _S2 * np.exp(1j * t)], dtype=complex),
        BipartiteDims(2, 2),
    )


def _cossin():
    # cos(theta/2)|00> + sin(theta/2)|11>
    return _pure_family(
        "cossin",
        lambda t: np.array([np.cos(t / 2), 0, 0, np.sin(t / 2)], dtype=complex),
        lambda t: np.array([-np.sin(t / 2) / 2, 0, 0, np.cos(t / 2) / 2], dtype=complex),
        BipartiteDims(2, 2),
    )


def _plus_phase_times_zero():
    # (|0> + e^{i theta}|1>)/sqrt 2 (x) |0>
    return _pure_family(
        "plus_phase_times_zero",
        lambda t: np.array([_S2, 0, _S2 * np.exp(1j * t), 0], dtype=complex),
        lambda t: np.array([0, 0, 1j * _S2 * np.exp(1j * t), 0], dtype=complex),
        BipartiteDims(2, 2),
    )


def _cc_bernoulli():
    # theta |00><00| + (1 - theta) |11><11|
    return ParameterizedFamily(
        kind="builtin",
        dim=4,
        dims=BipartiteDims(2, 2),
        name="cc_bernoulli",
        matrix_fn=lambda t: np.diag([t, 0.0, 0.0, 1.0 - t]).astype(complex),
        derivative_fn=lambda t: np.diag([1.0, 0.0, 0.0, -1.0]).astype(complex),
        domain=CC_BERNOULLI_DOMAIN,
    )


def _phase_qubit():
    return _pure_family(
        "phase_qubit",
        lambda t: np.array([_S2, _S2 * np.exp(1j * t)], dtype=complex),
        lambda t: np.array([0, 1j * _S2 * np.exp(1j * t)], dtype=complex),
    )


def _cossin_qubit():
    return _pure_family(
        "cossin_qubit",
        lambda t: np.array([np.cos(t / 2), np.sin(t / 2)], dtype=complex),
        lambda t: np.array([-np.sin(t / 2) / 2, np.cos(t / 2) / 2], dtype=complex),
    )


def _zero_qubit():
    return _pure_family(
        "zero_qubit",
        lambda t: np.array([1, 0], dtype=complex),
        lambda t: np.zeros(2, dtype=complex),
    )


def _bernoulli_qubit():
    return ParameterizedFamily(
        kind="builtin",
        dim=2,
        dims=None,
        name="bernoulli_qubit",
        matrix_fn=lambda t: np.diag([t, 1.0 - t]).astype(complex),
        derivative_fn=lambda t: np.diag([1.0, -1.0]).astype(complex),
        domain=CC_BERNOULLI_DOMAIN,
    )


_BUILTINS = {
    "bell_phase": _bell_phase,
    "cc_bernoulli": _cc_bernoulli,
    "cossin": _cossin,
    "plus_phase_times_zero": _plus_phase_times_zero,
    "phase_qubit": _phase_qubit,
    "cossin_qubit": _cossin_qubit,
    "bernoulli_qubit": _bernoulli_qubit,
    "zero_qubit": _zero_qubit,
}
BUILTIN_NAMES = tuple(_BUILTINS) + ("product_of",)
QUBIT_FAMILIES = ("phase_qubit", "cossin_qubit", "bernoulli_qubit", "zero_qubit")


def make_builtin(name: str, factors: Sequence = ()) -> ParameterizedFamily:
    """Named example family.

    ``product_of`` needs two ``factors``, each a family or a builtin name, and
    yields their tensor product with bipartite dims taken from the factors.
    """
    if name == "product_of":
        if len(factors) != 2:
            raise UnknownName("product_of needs exactly two factors")
        fa, fb = (make_builtin(x) if isinstance(x, str) else x for x in factors)
        return product_family(fa, fb)
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise UnknownName(f"unknown builtin family {name!r}; known: {', '.join(BUILTIN_NAMES)}") from None


def product_family(fa: ParameterizedFamily, fb: ParameterizedFamily) -> ParameterizedFamily:
    """sigma^a_theta (x) sigma^b_theta with the product-rule derivative."""
    if fa.grid is not None or fb.grid is not None:
        raise AnalyticUnavailable("products of grid families are not supported")
    dims = BipartiteDims(fa.dim, fb.dim)
    domain = (max(fa.domain[0], fb.domain[0]), min(fa.domain[1], fb.domain[1]))

    def matrix(theta):
        return np.kron(fa.matrix_fn(theta), fb.matrix_fn(theta))

    derivative = None
    if fa.derivative_fn is not None and fb.derivative_fn is not None:

        def derivative(theta):
            return np.kron(fa.derivative_fn(theta), fb.matrix_fn(theta)) + np.kron(
                fa.matrix_fn(theta), fb.derivative_fn(theta)
            )

    ket_fn = dket_fn = None
    if fa.is_pure and fb.is_pure:

        def ket_fn(theta):
            return np.kron(fa.ket_fn(theta), fb.ket_fn(theta))

        if fa.dket_fn is not None and fb.dket_fn is not None:

            def dket_fn(theta):
                return np.kron(fa.dket_fn(theta), fb.ket_fn(theta)) + np.kron(
                    fa.ket_fn(theta), fb.dket_fn(theta)
                )

    return ParameterizedFamily(
        kind="builtin",
        dim=dims.total,
        dims=dims,
        name=f"product_of({fa.name},{fb.name})",
        matrix_fn=matrix,
        derivative_fn=derivative,
        ket_fn=ket_fn,
        dket_fn=dket_fn,
        domain=domain,
        fd_step=min(fa.fd_step, fb.fd_step),
        payload={"factors": (fa, fb)},
    )


# ---------------------------------------------------------------------- grid


def _grid_index(thetas: np.ndarray, theta: float, atol: float = 1e-12) -> int:
    k = int(np.argmin(np.abs(thetas - theta)))
    if abs(thetas[k] - theta) > atol:
        raise ThetaOutOfDomain(f"theta={theta!r} is not a tabulated point")
    return k


def grid_family(thetas, states, dims: Optional[BipartiteDims] = None, name: str = "grid") -> ParameterizedFamily:
    """Tabulated family; only the listed theta values are admissible."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim != 1 or len(thetas) != len(states) or len(thetas) == 0:
        raise InvalidState("grid needs one state per theta")
    if np.any(np.diff(thetas) <= 0):
        raise InvalidState("grid thetas must be strictly increasing")
    mats = tuple(DensityMatrix(s, dims).mat for s in states)
    dim = mats[0].shape[0]
    if any(m.shape != (dim, dim) for m in mats):
        raise DimMismatch("grid states differ in dimension")

    def matrix(theta):
        return mats[_grid_index(thetas, theta)]

    return ParameterizedFamily(
        kind="grid",
        dim=dim,
        dims=dims,
        name=name,
        matrix_fn=matrix,
        domain=(float(thetas[0]), float(thetas[-1])),
        grid=(thetas, mats),
    )


def _grid_derivative(f: ParameterizedFamily, theta: float, richardson: bool) -> np.ndarray:
    thetas, mats = f.grid
    k = _grid_index(thetas, theta)
    if k == 0 or k == len(thetas) - 1:
        raise ThetaOutOfDomain("no central difference at the ends of the grid")
    hm, hp = thetas[k] - thetas[k - 1], thetas[k + 1] - thetas[k]
    # three-point derivative on a non-uniform stencil
    d = (
        -hp / (hm * (hm + hp)) * mats[k - 1]
        + (hp - hm) / (hm * hp) * mats[k]
        + hm / (hp * (hm + hp)) * mats[k + 1]
    )
    if richardson:
        if k < 2 or k > len(thetas) - 3:
            raise ThetaOutOfDomain("Richardson needs two tabulated neighbours on each side")
        h = thetas[k + 1] - thetas[k]
        spacing = np.diff(thetas[k - 2 : k + 3])
        if max_abs(spacing - h) > 1e-12 * max(1.0, abs(h)):
            raise ThetaOutOfDomain("Richardson extrapolation needs uniform grid spacing")
        d2 = (mats[k + 2] - mats[k - 2]) / (4.0 * h)
        d = (4.0 * d - d2) / 3.0
    return 0.5 * (d + d.conj().T)


def reduced_family(f: ParameterizedFamily, keep: str) -> ParameterizedFamily:
    """Marginal family theta -> tr_other rho_theta."""
    if f.dims is None:
        raise DimMismatch("family carries no bipartite structure")
    dims = f.dims

    def matrix(theta):
        return partial_trace(f.matrix_fn(theta), dims, keep)

    derivative = None
    if f.derivative_fn is not None:

        def derivative(theta):
            return partial_trace(f.derivative_fn(theta), dims, keep)

    grid = None
    if f.grid is not None:
        grid = (f.grid[0], tuple(partial_trace(m, dims, keep) for m in f.grid[1]))
    return ParameterizedFamily(
        kind=f.kind,
        dim=dims.party(keep),
        dims=None,
        name=f"tr_{'b' if keep == 'a' else 'a'}({f.name})",
        matrix_fn=matrix,
        derivative_fn=derivative,
        domain=f.domain,
        fd_step=f.fd_step,
        grid=grid,
    )


def derivative_residuals(d: np.ndarray) -> dict:
    return {"hermiticity": hermiticity_residual(d), "trace": abs(complex(np.trace(d)))}


def is_valid_derivative(d: np.ndarray, tol: float = DERIVATIVE_TOL) -> bool:
    r = derivative_residuals(d)
    return r["hermiticity"] <= tol and r["trace"] <= tol


def random_density_matrix(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    """Ginibre-distributed density matrix of the given rank (full by default)."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T)


def random_generator_family(
    dims: BipartiteDims | int,
    rng: np.random.Generator,
    rank: Optional[int] = None,
    scale: float = 1.0,
) -> ParameterizedFamily:
    if isinstance(dims, int):
        dim, bip = dims, None
    else:
        dim, bip = dims.total, dims
    return generator_family(
        random_density_matrix(dim, rng, rank),
        random_hermitian(dim, rng, scale),
        bip,
        name="random_generator",
    )


__all__ = [
    "BUILTIN_NAMES",
    "DensityMatrix",
    "ParameterizedFamily",
    "eval_derivative",
    "evaluate",
    "generator_family",
    "grid_family",
    "make_builtin",
    "product_family",
    "reduced_family",
]
