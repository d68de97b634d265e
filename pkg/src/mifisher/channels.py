"""Theta-independent quantum channels in Kraus form and Fisher-information
flow along a chain of them."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimMismatch, NotTracePreserving, NotUnitaryBlock
from .hierarchy import HierarchyReport, OptimizerConfig, hierarchy_report
from .matcore import BipartiteDims, as_cmatrix, is_unitary, max_abs, projector
from .povm import Povm
from .states import DensityMatrix, ParameterizedFamily, _replace, eval_derivative

TRACE_PRESERVING_TOL = 1e-9


@dataclass(frozen=True)
class QuantumChannel:
    kraus: tuple
    dim_in: int
    dim_out: int
    label: str = "channel"
    dims_out: Optional[BipartiteDims] = field(default=None, compare=False)

    def __post_init__(self):
        ks = tuple(as_cmatrix(k) for k in self.kraus)
        if not ks or any(k.shape != (self.dim_out, self.dim_in) for k in ks):
            raise DimMismatch(f"Kraus operators must all be {self.dim_out}x{self.dim_in}")
        object.__setattr__(self, "kraus", ks)
        residual = max_abs(sum(k.conj().T @ k for k in ks) - np.eye(self.dim_in))
        if residual > TRACE_PRESERVING_TOL:
            raise NotTracePreserving(f"sum E^dagger E deviates from identity by {residual:.3e}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return sum(k @ x @ k.conj().T for k in self.kraus)

    def adjoint(self, x: np.ndarray) -> np.ndarray:
        return sum(k.conj().T @ x @ k for k in self.kraus)


def kraus_channel(operators: Sequence, label: str = "kraus") -> QuantumChannel:
    ops = [as_cmatrix(k) for k in operators]
    return QuantumChannel(tuple(ops), ops[0].shape[1], ops[0].shape[0], label)


def identity_channel(dim: int) -> QuantumChannel:
    return QuantumChannel((np.eye(dim, dtype=complex),), dim, dim, "identity")


def unitary_channel(u, label: str = "unitary") -> QuantumChannel:
    u = as_cmatrix(u)
    if not is_unitary(u):
        raise NotTracePreserving("matrix is not unitary")
    return QuantumChannel((u,), u.shape[0], u.shape[0], label)


def depolarizing(q: float) -> QuantumChannel:
    """Qubit depolarizing channel with Kraus operators
    sqrt(1 - 3q/4) 1, sqrt(q/4) X, sqrt(q/4) Y, sqrt(q/4) Z, for 0 <= q <= 4/3.
    q = 1 maps every state to 1/2."""
    if not 0.0 <= q <= 4.0 / 3.0:
        raise ValueError("depolarizing parameter must lie in [0, 4/3]")
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]])
    z = np.diag([1.0, -1.0]).astype(complex)
    w = np.sqrt(q / 4.0)
    return QuantumChannel((np.sqrt(1.0 - 3.0 * q / 4.0) * np.eye(2), w * x, w * y, w * z), 2, 2, f"depolarizing({q:g})")


CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    dtype=complex,
)


def cnot() -> QuantumChannel:
    """|0><0| (x) 1 + |1><1| (x) X with party a as control."""
    ch = unitary_channel(CNOT, "cnot")
    return _replace_dims(ch, BipartiteDims(2, 2))


def conditional_unitary(unitaries: Sequence, controls=None) -> QuantumChannel:
    """U = sum_i |c_i><c_i| (x) U_i with c_i the columns of ``controls``."""
    us = [as_cmatrix(u) for u in unitaries]
    da = len(us)
    db = us[0].shape[0]
    if any(u.shape != (db, db) or not is_unitary(u) for u in us):
        raise NotUnitaryBlock("every block must be a unitary of the same size")
    c = np.eye(da, dtype=complex) if controls is None else as_cmatrix(controls)
    if c.shape != (da, da) or not is_unitary(c):
        raise NotUnitaryBlock("controls must be an orthonormal basis with one vector per block")
    u = sum(np.kron(projector(c[:, i]), us[i]) for i in range(da))
    return _replace_dims(unitary_channel(u, "conditional_unitary"), BipartiteDims(da, db))


def local_channel(ch_a: QuantumChannel, ch_b: QuantumChannel) -> QuantumChannel:
    """E^a (x) E^b with Kraus family {E_mu (x) F_nu}."""
    ks = tuple(np.kron(e, f) for e in ch_a.kraus for f in ch_b.kraus)
    ch = QuantumChannel(ks, ch_a.dim_in * ch_b.dim_in, ch_a.dim_out * ch_b.dim_out, f"{ch_a.label}(x){ch_b.label}")
    return _replace_dims(ch, BipartiteDims(ch_a.dim_out, ch_b.dim_out))


def on_party(ch: QuantumChannel, dims: BipartiteDims, party: str) -> QuantumChannel:
    """Apply a channel on one party and the identity on the other."""
    if ch.dim_in != dims.party(party):
        raise DimMismatch(f"channel on dimension {ch.dim_in} for party {party} of dimension {dims.party(party)}")
    if party == "a":
        return local_channel(ch, identity_channel(dims.dim_b))
    return local_channel(identity_channel(dims.dim_a), ch)


def _replace_dims(ch: QuantumChannel, dims: BipartiteDims) -> QuantumChannel:
    return QuantumChannel(ch.kraus, ch.dim_in, ch.dim_out, ch.label, dims)


def random_channel(dim: int, n_kraus: int, rng: np.random.Generator) -> QuantumChannel:
    """Kraus operators cut from a random isometry dim -> dim * n_kraus."""
    g = rng.normal(size=(dim * n_kraus, dim)) + 1j * rng.normal(size=(dim * n_kraus, dim))
    v, _ = np.linalg.qr(g)
    return QuantumChannel(tuple(v.reshape(n_kraus, dim, dim)), dim, dim, f"random({n_kraus})")


def apply(ch: QuantumChannel, rho) -> DensityMatrix:
    mat = rho.mat if isinstance(rho, DensityMatrix) else as_cmatrix(rho)
    if mat.shape != (ch.dim_in, ch.dim_in):
        raise DimMismatch(f"channel on dimension {ch.dim_in} applied to a {mat.shape} state")
    out = ch(mat)
    dims = ch.dims_out or (rho.dims if isinstance(rho, DensityMatrix) and ch.dim_in == ch.dim_out else None)
    return DensityMatrix(0.5 * (out + out.conj().T), dims)


def adjoint_apply(ch: QuantumChannel, m: Povm) -> Povm:
    """E^dagger(M) = {sum_mu E_mu^dagger M_i E_mu}, again a POVM."""
    if m.dim != ch.dim_out:
        raise DimMismatch(f"POVM on dimension {m.dim} but channel outputs dimension {ch.dim_out}")
    return Povm(tuple(ch.adjoint(e) for e in m.elements), m.labels)


def push_family(f: ParameterizedFamily, ch: QuantumChannel) -> ParameterizedFamily:
    """theta -> E(rho_theta); the derivative is E(d rho_theta) since E is fixed."""
    if f.dim != ch.dim_in:
        raise DimMismatch(f"channel on dimension {ch.dim_in} after a family of dimension {f.dim}")
    dims = ch.dims_out or (f.dims if ch.dim_in == ch.dim_out else None)

    def matrix(theta):
        out = ch(f.matrix_fn(theta))
        return 0.5 * (out + out.conj().T)

    def derivative(theta):
        out = ch(eval_derivative(f, theta))
        return 0.5 * (out + out.conj().T)

    ket_fn = dket_fn = None
    if f.ket_fn is not None and len(ch.kraus) == 1:
        k = ch.kraus[0]

        def ket_fn(theta):
            return k @ f.ket_fn(theta)

        if f.dket_fn is not None:

            def dket_fn(theta):
                return k @ f.dket_fn(theta)

    grid = None
    if f.grid is not None:
        grid = (f.grid[0], tuple(ch(m) for m in f.grid[1]))
    return _replace(
        f,
        kind="mapped",
        dim=ch.dim_out,
        dims=dims,
        name=f"{ch.label}[{f.name}]",
        matrix_fn=matrix,
        derivative_fn=derivative if (f.derivative_fn is not None or f.grid is None) else None,
        ket_fn=ket_fn,
        dket_fn=dket_fn,
        grid=grid,
    )


@dataclass
class FlowTrace:
    steps: list

    @property
    def reports(self) -> list:
        return [r for _, r in self.steps]


def flow_trace(
    f: ParameterizedFamily,
    theta: float,
    chain: Sequence[QuantumChannel],
    cfg: OptimizerConfig = OptimizerConfig(),
) -> FlowTrace:
    """Hierarchy report of the family after every prefix of ``chain``."""
    steps = [("input", hierarchy_report(f, theta, cfg=cfg))]
    current = f
    for k, ch in enumerate(chain, start=1):
        current = push_family(current, ch)
        steps.append((f"{k}:{ch.label}", hierarchy_report(current, theta, cfg=cfg)))
    return FlowTrace(steps)


__all__ = [
    "CNOT",
    "FlowTrace",
    "HierarchyReport",
    "QuantumChannel",
    "adjoint_apply",
    "apply",
    "cnot",
    "conditional_unitary",
    "depolarizing",
    "flow_trace",
    "identity_channel",
    "kraus_channel",
    "local_channel",
    "on_party",
    "push_family",
    "random_channel",
    "unitary_channel",
]
