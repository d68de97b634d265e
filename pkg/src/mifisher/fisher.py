"""Fisher information: SLD quantum Fisher information, classical Fisher
information of a POVM, derived classical-quantum states and the two adaptive
decompositions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimMismatch, NotNormalized, NotTraceless, SingularOutcome
from .matcore import BipartiteDims, as_cmatrix, herm_eig, max_abs, partial_trace
from .povm import AdaptivePovm, Povm, _parties, adaptive_embed, basis_povm, embed_local, require_valid
from .states import (
    DensityMatrix,
    ParameterizedFamily,
    _replace,
    eval_derivative,
    random_density_matrix,
)

SLD_TOL = 1e-10
P_TOL = 1e-12
TRACELESS_TOL = 1e-7


def _mat(x) -> np.ndarray:
    return x.mat if isinstance(x, DensityMatrix) else as_cmatrix(x)


@dataclass(frozen=True)
class SLDResult:
    sld: np.ndarray
    qfi: float
    support_rank: int
    truncation_tol: float
    eigenvalues: np.ndarray = field(repr=False, default=None)
    eigenvectors: np.ndarray = field(repr=False, default=None)


def sld(rho, drho, tol: float = SLD_TOL) -> SLDResult:
    """Symmetric logarithmic derivative and quantum Fisher information.

    Solved in the eigenbasis of rho: L_jk = 2 D_jk / (l_j + l_k) where
    l_j + l_k > tol, zero elsewhere, with D = d rho / d theta in that basis.
    """
    rho, drho = _mat(rho), as_cmatrix(drho)
    if rho.shape != drho.shape:
        raise DimMismatch(f"state {rho.shape} vs derivative {drho.shape}")
    if abs(np.trace(drho)) > TRACELESS_TOL:
        raise NotTraceless(f"tr(d rho) = {np.trace(drho):.3e}")
    eig = herm_eig(rho)
    lam, v = eig.eigenvalues, eig.eigenvectors
    d = v.conj().T @ drho @ v
    denom = lam[:, None] + lam[None, :]
    keep = denom > tol
    l_eig = np.zeros_like(d)
    l_eig[keep] = 2.0 * d[keep] / denom[keep]
    qfi = float(np.sum(2.0 * np.abs(d[keep]) ** 2 / denom[keep]))
    sld_mat = v @ l_eig @ v.conj().T
    return SLDResult(
        sld=0.5 * (sld_mat + sld_mat.conj().T),
        qfi=qfi,
        support_rank=int(np.sum(lam > tol)),
        truncation_tol=tol,
        eigenvalues=lam,
        eigenvectors=v,
    )


def qfi(rho, drho, tol: float = SLD_TOL) -> float:
    return sld(rho, drho, tol).qfi


def qfi_pure(psi, dpsi, norm_tol: float = 1e-9) -> float:
    """4 (<dpsi|dpsi> - |<psi|dpsi>|^2) for a normalized pure state."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    dpsi = np.asarray(dpsi, dtype=complex).reshape(-1)
    if abs(np.vdot(psi, psi).real - 1.0) > norm_tol:
        raise NotNormalized(f"<psi|psi> = {np.vdot(psi, psi).real:.12g}")
    return float(4.0 * (np.vdot(dpsi, dpsi).real - abs(np.vdot(psi, dpsi)) ** 2))


def _fi_from_probs(p: np.ndarray, dp: np.ndarray, p_tol: float) -> float:
    small = p < p_tol
    if np.any(small & (np.abs(dp) >= np.sqrt(p_tol))):
        k = int(np.argmax(small & (np.abs(dp) >= np.sqrt(p_tol))))
        raise SingularOutcome(f"outcome {k}: p = {p[k]:.3e} but dp/dtheta = {dp[k]:.3e}")
    ok = ~small
    return float(np.sum(dp[ok] ** 2 / p[ok]))


def outcome_probabilities(rho, m: Povm) -> np.ndarray:
    return np.real(np.einsum("kij,ji->k", m.stacked(), _mat(rho)))


def classical_fi(rho, drho, m: Povm, p_tol: float = P_TOL, check: bool = True) -> float:
    """Sum over outcomes of (dp_i)^2 / p_i with p_i = tr(rho M_i).

    Outcomes with p_i < p_tol are dropped when |dp_i| < sqrt(p_tol) too;
    otherwise :class:`SingularOutcome` is raised.
    """
    rho, drho = _mat(rho), as_cmatrix(drho)
    if m.dim != rho.shape[0] or drho.shape != rho.shape:
        raise DimMismatch(f"POVM of dimension {m.dim} on a state of shape {rho.shape}")
    if check:
        require_valid(m)
    stack = m.stacked()
    p = np.real(np.einsum("kij,ji->k", stack, rho))
    dp = np.real(np.einsum("kij,ji->k", stack, drho))
    return _fi_from_probs(p, dp, p_tol)


def basis_fi(rho: np.ndarray, drho: np.ndarray, u: np.ndarray, p_tol: float = P_TOL) -> float:
    """Classical FI of the rank-1 measurement onto the columns of ``u``."""
    p = np.real(np.einsum("ik,ij,jk->k", u.conj(), rho, u))
    dp = np.real(np.einsum("ik,ij,jk->k", u.conj(), drho, u))
    return _fi_from_probs(p, dp, p_tol)


def sld_basis_measurement(s: SLDResult) -> Povm:
    """Projectors onto the SLD eigenbasis, a measurement attaining the QFI."""
    return basis_povm(sld_eigenbasis(s))


def sld_eigenbasis(s: SLDResult) -> np.ndarray:
    return herm_eig(s.sld).eigenvectors


# ------------------------------------------------------------------ families


def family_point(f: ParameterizedFamily, theta: float, scheme: str = "auto", step: Optional[float] = None):
    """(rho_theta, d rho_theta) as raw arrays."""
    return f.matrix(theta), eval_derivative(f, theta, scheme, step)


def family_qfi(f: ParameterizedFamily, theta: float, scheme: str = "auto", step: Optional[float] = None) -> SLDResult:
    rho, drho = family_point(f, theta, scheme, step)
    return sld(rho, drho)


def fi_marginal(
    f: ParameterizedFamily,
    theta: float,
    dims: Optional[BipartiteDims] = None,
    party: str = "a",
    scheme: str = "auto",
    step: Optional[float] = None,
) -> float:
    """QFI of the reduced family on ``party``: the best a local measurement can do."""
    dims = _dims(f, dims)
    rho, drho = family_point(f, theta, scheme, step)
    return sld(partial_trace(rho, dims, party), partial_trace(drho, dims, party)).qfi


def _dims(f: ParameterizedFamily, dims: Optional[BipartiteDims]) -> BipartiteDims:
    dims = dims or f.dims
    if dims is None:
        raise DimMismatch(f"family {f.name} has no bipartite dims")
    if dims.total != f.dim:
        raise DimMismatch(f"dims {dims.dim_a}x{dims.dim_b} on a family of dimension {f.dim}")
    return dims


# ------------------------------------------------------ classical-quantum states


def unnormalized_conditionals(mat: np.ndarray, elements: np.ndarray, dims: BipartiteDims, party: str) -> np.ndarray:
    """tr_party((M_i on party) X) for each stacked element M_i; shape (k, d, d)."""
    r = mat.reshape(dims.dim_a, dims.dim_b, dims.dim_a, dims.dim_b)
    if party == "a":
        out = np.einsum("iac,cbad->ibd", elements, r)
    else:
        out = np.einsum("ibc,acdb->iad", elements, r)
    return 0.5 * (out + np.conj(np.swapaxes(out, 1, 2)))


@dataclass(frozen=True)
class CQState:
    """sum_i p_i |i><i| (x) rho^{|i} after measuring ``party`` with a local POVM.

    Outcomes with p_i < P_TOL are flagged in ``excluded`` and carry ``None``
    as conditional; they drop out of every downstream sum.
    """

    probs: np.ndarray
    conditionals: tuple
    labels: tuple
    party: str
    excluded: tuple

    @property
    def other_dim(self) -> int:
        return next(c.dim for c in self.conditionals if c is not None)

    def matrix(self) -> np.ndarray:
        k, d = len(self.probs), self.other_dim
        out = np.zeros((k * d, k * d), dtype=complex)
        for i, (p, c) in enumerate(zip(self.probs, self.conditionals)):
            if c is not None:
                out[i * d : (i + 1) * d, i * d : (i + 1) * d] = p * c.mat
        return out

    def density_matrix(self) -> DensityMatrix:
        return DensityMatrix(self.matrix(), BipartiteDims(len(self.probs), self.other_dim))


def cq_state(
    f: ParameterizedFamily,
    theta: float,
    m: Povm,
    dims: Optional[BipartiteDims] = None,
    party: str = "a",
    p_tol: float = P_TOL,
) -> CQState:
    dims = _dims(f, dims)
    if m.dim != dims.party(party):
        raise DimMismatch(f"POVM of dimension {m.dim} on party {party} of dimension {dims.party(party)}")
    tau = unnormalized_conditionals(f.matrix(theta), m.stacked(), dims, party)
    probs = np.real(np.trace(tau, axis1=1, axis2=2))
    conds, excluded = [], []
    for p, t in zip(probs, tau):
        if p < p_tol:
            conds.append(None)
            excluded.append(True)
        else:
            conds.append(DensityMatrix(t / p))
            excluded.append(False)
    return CQState(probs, tuple(conds), m.labels, party, tuple(excluded))


def cq_family(
    f: ParameterizedFamily,
    m: Povm,
    dims: Optional[BipartiteDims] = None,
    party: str = "a",
    scheme: str = "auto",
) -> ParameterizedFamily:
    """theta -> derived classical-quantum state, as a family of its own.

    Its derivative is block-diagonal with blocks tr_party((M_i on party) d rho);
    the SLD of this family gives an independent route to the adaptive value.
    """
    dims = _dims(f, dims)
    stack = m.stacked()
    k, d = len(m), dims.party("b" if party == "a" else "a")

    def blocks(x):
        t = unnormalized_conditionals(x, stack, dims, party)
        out = np.zeros((k * d, k * d), dtype=complex)
        for i in range(k):
            out[i * d : (i + 1) * d, i * d : (i + 1) * d] = t[i]
        return out

    return _replace(
        f,
        kind="mapped",
        dim=k * d,
        dims=BipartiteDims(k, d),
        name=f"cq[{party}]({f.name})",
        matrix_fn=lambda theta: blocks(f.matrix_fn(theta)),
        derivative_fn=lambda theta: blocks(eval_derivative(f, theta, scheme)),
        ket_fn=None,
        dket_fn=None,
        grid=None if f.grid is None else (f.grid[0], tuple(blocks(x) for x in f.grid[1])),
    )


def _conditional_terms(rho, drho, stack, dims, party, p_tol):
    """Yield (p_i, dp_i, rho^{|i}, d rho^{|i}) for every non-excluded outcome.

    Conditional derivatives use the quotient rule on the unnormalized
    conditional tau_i: d(tau_i / p_i) = (d tau_i - dp_i rho^{|i}) / p_i.
    """
    tau = unnormalized_conditionals(rho, stack, dims, party)
    dtau = unnormalized_conditionals(drho, stack, dims, party)
    probs = np.real(np.trace(tau, axis1=1, axis2=2))
    dprobs = np.real(np.trace(dtau, axis1=1, axis2=2))
    out = []
    for i, (p, dp) in enumerate(zip(probs, dprobs)):
        if p < p_tol:
            if abs(dp) >= np.sqrt(p_tol) or max_abs(dtau[i]) >= np.sqrt(p_tol):
                raise SingularOutcome(f"first-stage outcome {i}: p = {p:.3e} with non-vanishing derivative")
            continue
        c = tau[i] / p
        out.append((p, dp, c, (dtau[i] - dp * c) / p))
    return probs, dprobs, out


def adaptive_value(rho, drho, first_stack, dims: BipartiteDims, party: str, p_tol: float = P_TOL) -> tuple:
    """(classical first-stage FI, sum_i p_i QFI(rho^{|i})) on raw arrays."""
    probs, dprobs, terms = _conditional_terms(rho, drho, first_stack, dims, party, p_tol)
    first = _fi_from_probs(probs, dprobs, p_tol)
    second = 0.0
    for p, _, c, dc in terms:
        # the quotient rule is traceless only up to rounding/p; remove that part
        dc = 0.5 * (dc + dc.conj().T)
        dc -= np.trace(dc) / len(dc) * np.eye(len(dc))
        second += p * sld(c, dc).qfi
    return first, float(second)


def adaptive_fi_given_first(
    f: ParameterizedFamily,
    theta: float,
    first: Povm,
    dims: Optional[BipartiteDims] = None,
    direction: str = "a->b",
    scheme: str = "auto",
    step: Optional[float] = None,
    p_tol: float = P_TOL,
) -> float:
    """Best adaptive FI once the first-stage measurement is fixed.

    Equals F(rho^first | first) + sum_i p_i F(rho^{second|i}): each second
    stage measures in the SLD basis of its conditional state.
    """
    dims = _dims(f, dims)
    party = _parties(direction)[0]
    if first.dim != dims.party(party):
        raise DimMismatch(f"first-stage POVM does not act on party {party}")
    require_valid(first)
    rho, drho = family_point(f, theta, scheme, step)
    a, b = adaptive_value(rho, drho, first.stacked(), dims, party, p_tol)
    return a + b


@dataclass(frozen=True)
class AdaptiveFIResult:
    value: float
    first_term: float
    second_term: float
    residual: float
    conditional_dp_sums: tuple

    @property
    def decomposition(self) -> float:
        return self.first_term + self.second_term


def adaptive_fi_explicit(
    f: ParameterizedFamily,
    theta: float,
    ap: AdaptivePovm,
    dims: Optional[BipartiteDims] = None,
    direction: str = "a->b",
    scheme: str = "auto",
    step: Optional[float] = None,
    p_tol: float = P_TOL,
) -> AdaptiveFIResult:
    """Classical FI of a fully specified adaptive measurement, two ways.

    ``value`` is the FI of the embedded joint POVM; the decomposition is the
    first-stage FI plus the p-weighted conditional FIs. ``residual`` is their
    absolute difference and ``conditional_dp_sums`` holds sum_j dp(j|i) per
    kept first outcome, which must vanish.
    """
    dims = _dims(f, dims)
    party = _parties(direction)[0]
    joint = adaptive_embed(ap, dims, direction)
    require_valid(joint)
    rho, drho = family_point(f, theta, scheme, step)
    value = classical_fi(rho, drho, joint, p_tol, check=False)

    probs, dprobs, _ = _conditional_terms(rho, drho, ap.first.stacked(), dims, party, p_tol)
    first_term = _fi_from_probs(probs, dprobs, p_tol)
    tau = unnormalized_conditionals(rho, ap.first.stacked(), dims, party)
    dtau = unnormalized_conditionals(drho, ap.first.stacked(), dims, party)
    second_term, dp_sums = 0.0, []
    for i, cond in enumerate(ap.conditionals[: len(ap.first)]):
        p, dp = probs[i], dprobs[i]
        if p < p_tol:
            continue
        c = tau[i] / p
        dc = (dtau[i] - dp * c) / p
        stack = cond.stacked()
        pj = np.real(np.einsum("kij,ji->k", stack, c))
        dpj = np.real(np.einsum("kij,ji->k", stack, dc))
        dp_sums.append(float(np.sum(dpj)))
        second_term += p * _fi_from_probs(pj, dpj, p_tol / max(p, p_tol))
    decomposition = first_term + second_term
    return AdaptiveFIResult(
        value=value,
        first_term=first_term,
        second_term=float(second_term),
        residual=abs(value - decomposition),
        conditional_dp_sums=tuple(dp_sums),
    )


# ---------------------------------------------------------- extension check


def check_extension_invariance(
    f: ParameterizedFamily,
    theta: float,
    m: Povm,
    dims: Optional[BipartiteDims] = None,
    extension_dim: int = 2,
    seed: int = 0,
) -> float:
    """|F(rho~ | M (x) 1) - F(rho^a | M)| for a random extension rho~ of rho^a.

    The extension is (1 (x) V) rho_theta (1 (x) V^dagger) with V a random
    isometry from party b into b (x) K, K of dimension ``extension_dim``,
    so tracing out everything but a returns rho^a exactly.
    """
    dims = _dims(f, dims)
    rng = np.random.default_rng(seed)
    rho, drho = family_point(f, theta)
    db, dk = dims.dim_b, extension_dim
    g = rng.normal(size=(db * dk, db)) + 1j * rng.normal(size=(db * dk, db))
    v, _ = np.linalg.qr(g)
    w = np.kron(np.eye(dims.dim_a), v)
    ext_rho = w @ rho @ w.conj().T
    ext_drho = w @ drho @ w.conj().T
    ext_dims = BipartiteDims(dims.dim_a, db * dk)
    lhs = classical_fi(ext_rho, ext_drho, embed_local(m, ext_dims, "a"))
    rhs = classical_fi(partial_trace(rho, dims, "a"), partial_trace(drho, dims, "a"), m)
    return abs(lhs - rhs)


def random_povm(dim: int, n_outcomes: int, rng: np.random.Generator) -> Povm:
    """Random POVM from a Haar-like isometry: M_k = V^dagger P_k V."""
    g = rng.normal(size=(dim * n_outcomes, dim)) + 1j * rng.normal(size=(dim * n_outcomes, dim))
    v, _ = np.linalg.qr(g)
    blocks = v.reshape(n_outcomes, dim, dim)
    return Povm(tuple(b.conj().T @ b for b in blocks))


__all__ = [
    "AdaptiveFIResult",
    "CQState",
    "SLDResult",
    "adaptive_fi_explicit",
    "adaptive_fi_given_first",
    "basis_fi",
    "check_extension_invariance",
    "classical_fi",
    "cq_family",
    "cq_state",
    "fi_marginal",
    "qfi",
    "qfi_pure",
    "random_density_matrix",
    "random_povm",
    "sld",
    "sld_basis_measurement",
]
