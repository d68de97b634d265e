"""Exhaustive Bloch-grid search over qubit projective measurements.

Used as an independent check on the Nelder-Mead values for two-qubit
families. It works from the Pauli correlation tensor T[mu, nu] =
tr(rho sigma_mu (x) sigma_nu) and the Bloch-vector QFI formula for qubits, so
it shares no code with the optimizer path in :mod:`mifisher.hierarchy`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch
from .matcore import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z
from .states import ParameterizedFamily, eval_derivative

N_POLAR = 64
N_AZIMUTH = 128
P_TOL = 1e-12
PURE_TOL = 1e-10
_PAULIS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)


@dataclass(frozen=True)
class GridResult:
    value: float
    # (polar, azimuth) of the best direction per measured party
    angles: tuple
    points: int


def bloch_grid(n_polar: int = N_POLAR, n_azimuth: int = N_AZIMUTH) -> tuple:
    """Unit vectors on a polar x azimuth grid; both axes exclude their upper end."""
    polar = np.linspace(0.0, np.pi, n_polar, endpoint=False)
    azimuth = np.linspace(0.0, 2 * np.pi, n_azimuth, endpoint=False)
    pp, aa = np.meshgrid(polar, azimuth, indexing="ij")
    pp, aa = pp.ravel(), aa.ravel()
    dirs = np.stack([np.sin(pp) * np.cos(aa), np.sin(pp) * np.sin(aa), np.cos(pp)], axis=1)
    return dirs, np.stack([pp, aa], axis=1)


def correlation_tensor(mat: np.ndarray) -> np.ndarray:
    return np.array([[np.trace(mat @ np.kron(s, t)).real for t in _PAULIS] for s in _PAULIS])


def _family_tensors(f: ParameterizedFamily, theta: float):
    if f.dim != 4 or (f.dims is not None and (f.dims.dim_a, f.dims.dim_b) != (2, 2)):
        raise DimMismatch("the grid oracle needs a two-qubit family")
    return correlation_tensor(f.matrix(theta)), correlation_tensor(eval_derivative(f, theta))


def _fi_terms(p, dp):
    """Per-point FI contributions; -inf where an outcome is singular."""
    small = p < P_TOL
    bad = small & (np.abs(dp) >= np.sqrt(P_TOL))
    out = np.where(small, 0.0, dp**2 / np.where(small, 1.0, p))
    return np.where(bad, -np.inf, out)


def grid_product_fi(f: ParameterizedFamily, theta: float, n_polar: int = N_POLAR, n_azimuth: int = N_AZIMUTH, chunk: int = 256) -> GridResult:
    """max over grid directions (n, m) of the FI of {P_{+-n} (x) Q_{+-m}}."""
    t, dt = _family_tensors(f, theta)
    dirs, angles = bloch_grid(n_polar, n_azimuth)
    n = len(dirs)
    best, arg = -np.inf, (0, 0)
    signed = {s: np.hstack([np.ones((n, 1)), s * dirs]) for s in (1.0, -1.0)}
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        total = np.zeros((stop - start, n))
        for s in (1.0, -1.0):
            x = signed[s][start:stop] @ t
            dx = signed[s][start:stop] @ dt
            for u in (1.0, -1.0):
                p = x @ signed[u].T / 4.0
                dp = dx @ signed[u].T / 4.0
                total += _fi_terms(p, dp)
        k = np.unravel_index(int(np.argmax(total)), total.shape)
        if total[k] > best:
            best, arg = float(total[k]), (start + k[0], k[1])
    return GridResult(best, (tuple(angles[arg[0]]), tuple(angles[arg[1]])), n * n)


def _qubit_qfi(r: np.ndarray, dr: np.ndarray) -> np.ndarray:
    """QFI of (1 + r.sigma)/2 with Bloch derivative dr, vectorized over rows."""
    rr = np.sum(r * r, axis=1)
    drdr = np.sum(dr * dr, axis=1)
    rdr = np.sum(r * dr, axis=1)
    mixed = 1.0 - rr > PURE_TOL
    return drdr + np.where(mixed, rdr**2 / np.where(mixed, 1.0 - rr, 1.0), 0.0)


def grid_adaptive_fi(f: ParameterizedFamily, theta: float, direction: str = "a->b", n_polar: int = N_POLAR, n_azimuth: int = N_AZIMUTH) -> GridResult:
    """max over grid directions of first-stage FI plus p-weighted conditional QFIs."""
    t, dt = _family_tensors(f, theta)
    if direction in ("b->a", "ba"):
        t, dt = t.T, dt.T
    elif direction not in ("a->b", "ab"):
        raise ValueError(f"direction must be 'a->b' or 'b->a', got {direction!r}")
    dirs, angles = bloch_grid(n_polar, n_azimuth)
    n = len(dirs)
    total = np.zeros(n)
    for s in (1.0, -1.0):
        signed = np.hstack([np.ones((n, 1)), s * dirs])
        # rows: tr(tau sigma_nu) with tau = tr_first((P_{s n} (x) 1) rho), nu = 0..3
        c = signed @ t / 2.0
        dc = signed @ dt / 2.0
        p, dp = c[:, 0], dc[:, 0]
        classical = _fi_terms(p, dp)
        ok = p >= P_TOL
        safe_p = np.where(ok, p, 1.0)
        r = c[:, 1:] / safe_p[:, None]
        dr = (dc[:, 1:] - dp[:, None] * r) / safe_p[:, None]
        quantum = np.where(ok, p * _qubit_qfi(r, dr), 0.0)
        total += classical + quantum
    k = int(np.argmax(total))
    return GridResult(float(total[k]), (tuple(angles[k]),), n)
