"""Measurement-class Fisher information and the six-entry hierarchy report.

Local and global entries are exact (reduced-state QFI and full QFI). Product
and adaptive entries are maximized by multi-start Nelder-Mead over rank-1
projective measurements, so they are certified lower bounds only.
"""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .errors import OptimizerDidNotConverge
from .fisher import (
    adaptive_value,
    basis_fi,
    family_point,
    sld,
    sld_eigenbasis,
    unnormalized_conditionals,
    _dims,
)
from .matcore import BipartiteDims, partial_trace
from .povm import (
    AdaptivePovm,
    PovmClass,
    ProjectiveParam,
    basis_povm,
    embed_local,
    product_povm,
    projective_unitary,
)
from .states import ParameterizedFamily

CLOSED_FORM = "closed-form"
LOWER_BOUND = "optimized-lower-bound"
VALUE_KEYS = ("fi_local_a", "fi_local_b", "fi_product", "fi_adaptive_ab", "fi_adaptive_ba", "fi_global")
CLASS_KEYS = dict(zip(
    (PovmClass.LocalA, PovmClass.LocalB, PovmClass.Product, PovmClass.AdaptiveAtoB, PovmClass.AdaptiveBtoA, PovmClass.Global),
    VALUE_KEYS,
))


@dataclass(frozen=True)
class OptimizerConfig:
    starts: int = 16
    seed: int = 0
    fatol: float = 1e-9
    xatol: float = 1e-5
    max_evals: int = 2000
    init_step: float = 0.3
    init_scale: float = np.pi
    scheme: str = "auto"
    fd_step: Optional[float] = None
    eps: float = 1e-6
    slack: float = 1e-4
    # stop once a start is within this of the global QFI, which bounds every class
    certify_tol: float = 1e-9

    def __post_init__(self):
        if self.starts < 1 or self.max_evals < 1:
            raise ValueError("starts and max_evals must be positive")


@dataclass
class ClassResult:
    cls: PovmClass
    value: float
    method: str
    measurement: object = None
    diagnostics: dict = field(default_factory=dict)


def _point(f, theta, cfg):
    return family_point(f, theta, cfg.scheme, cfg.fd_step)


def _simplex(x0: np.ndarray, step: float) -> np.ndarray:
    return np.vstack([x0] + [x0 + step * e for e in np.eye(len(x0))])


def _multistart(objective, starts: list, cfg: OptimizerConfig, upper: Optional[float] = None) -> dict:
    """Maximize ``objective`` from each (x0, context) start; keep the best.

    Ties go to the lowest start index so the reduction is order independent.
    When ``upper`` is a known bound on the maximum, the search stops at the
    first start that comes within ``cfg.certify_tol`` of it, and a start whose
    initial point already does so is accepted without running the simplex.

    A point where :class:`SingularOutcome` is raised has an outcome with zero
    probability and non-zero derivative, so the supremum over the class is
    infinite; the error propagates instead of being stepped around.
    """
    runs = []
    certified = False
    target = None if upper is None else upper - cfg.certify_tol
    for k, (x0, ctx) in enumerate(starts):
        def neg(x, ctx=ctx):
            return -objective(x, ctx)

        if target is not None:
            v0 = -neg(x0)
            if v0 >= target:
                runs.append({"start": k, "value": float(v0), "x": np.asarray(x0, dtype=float), "ctx": ctx, "nfev": 1, "converged": True})
                certified = True
                break
        res = minimize(
            neg,
            x0,
            method="Nelder-Mead",
            options={
                "maxfev": cfg.max_evals,
                "fatol": cfg.fatol,
                "xatol": cfg.xatol,
                "initial_simplex": _simplex(x0, cfg.init_step),
            },
        )
        value = -float(res.fun) if np.isfinite(res.fun) else float("-inf")
        runs.append({"start": k, "value": value, "x": res.x, "ctx": ctx, "nfev": int(res.nfev), "converged": bool(res.success)})
        if target is not None and value >= target:
            certified = True
            break
    best = max(runs, key=lambda r: (r["value"], -r["start"]))
    if not any(r["converged"] for r in runs):
        warnings.warn("no Nelder-Mead start converged; returning best-so-far", OptimizerDidNotConverge)
    return {"best": best, "runs": runs, "certified": certified}


def _diagnostics(opt: dict) -> dict:
    best = opt["best"]
    return {
        "starts": len(opt["runs"]),
        "certified": opt["certified"],
        "best_start": best["start"],
        "best_params": [float(x) for x in best["x"]],
        "converged": best["converged"],
        "all_converged": all(r["converged"] for r in opt["runs"]),
        "start_values": [r["value"] for r in opt["runs"]],
        "nfev": [r["nfev"] for r in opt["runs"]],
    }


def _rng(cfg: OptimizerConfig, cls: PovmClass, k: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, list(PovmClass).index(cls), k])


def _marginal_sld_basis(rho, drho, dims, party) -> np.ndarray:
    return sld_eigenbasis(sld(partial_trace(rho, dims, party), partial_trace(drho, dims, party)))


def _optimize_product(rho, drho, dims: BipartiteDims, cfg: OptimizerConfig, seeds=(), upper=None):
    da, db = dims.dim_a, dims.dim_b
    na = da * da

    def unitaries(x, ctx):
        ua = projective_unitary(ProjectiveParam(da, x[:na], ctx[0]))
        ub = projective_unitary(ProjectiveParam(db, x[na:], ctx[1]))
        return ua, ub

    def objective(x, ctx):
        ua, ub = unitaries(x, ctx)
        return basis_fi(rho, drho, np.kron(ua, ub))

    zeros = np.zeros(na + db * db)
    starts = [(zeros, s) for s in seeds]
    k = len(starts)
    while len(starts) < cfg.starts:
        rng = _rng(cfg, PovmClass.Product, k)
        x0 = np.concatenate([rng.uniform(-cfg.init_scale, cfg.init_scale, na), rng.uniform(-cfg.init_scale, cfg.init_scale, db * db)])
        starts.append((x0, (None, None)))
        k += 1
    opt = _multistart(objective, starts[: cfg.starts], cfg, upper)
    ua, ub = unitaries(opt["best"]["x"], opt["best"]["ctx"])
    return opt, ua, ub


def _optimize_adaptive(rho, drho, dims: BipartiteDims, party: str, cls: PovmClass, cfg: OptimizerConfig, seeds=(), upper=None):
    d = dims.party(party)

    def first_unitary(x, ctx):
        return projective_unitary(ProjectiveParam(d, x, ctx))

    def objective(x, ctx):
        u = first_unitary(x, ctx)
        stack = np.einsum("ik,jk->kij", u, u.conj())
        a, b = adaptive_value(rho, drho, stack, dims, party)
        return a + b

    starts = [(np.zeros(d * d), s) for s in seeds]
    k = len(starts)
    while len(starts) < cfg.starts:
        rng = _rng(cfg, cls, k)
        starts.append((rng.uniform(-cfg.init_scale, cfg.init_scale, d * d), None))
        k += 1
    opt = _multistart(objective, starts[: cfg.starts], cfg, upper)
    return opt, first_unitary(opt["best"]["x"], opt["best"]["ctx"])


def _adaptive_measurement(rho, drho, u, dims, party) -> AdaptivePovm:
    """First stage onto the columns of u; second stage in each conditional SLD basis."""
    first = basis_povm(u)
    stack = first.stacked()
    tau = unnormalized_conditionals(rho, stack, dims, party)
    dtau = unnormalized_conditionals(drho, stack, dims, party)
    other = dims.party("b" if party == "a" else "a")
    conds = []
    for t, dt in zip(tau, dtau):
        p = np.trace(t).real
        if p < 1e-12:
            conds.append(basis_povm(np.eye(other)))
            continue
        c = t / p
        dc = (dt - np.trace(dt).real * c) / p
        dc -= np.trace(dc) / other * np.eye(other)
        conds.append(basis_povm(sld_eigenbasis(sld(c, dc))))
    return AdaptivePovm(first, tuple(conds))


def optimize_class(
    f: ParameterizedFamily,
    theta: float,
    cls: PovmClass,
    dims: Optional[BipartiteDims] = None,
    cfg: OptimizerConfig = OptimizerConfig(),
    seeds: tuple = (),
) -> ClassResult:
    """Fisher information induced by a measurement class.

    ``seeds`` are extra starting bases tried before the random starts: pairs of
    unitaries for ``Product``, single unitaries for the adaptive classes.
    """
    dims = _dims(f, dims)
    cls = PovmClass(cls)
    rho, drho = _point(f, theta, cfg)
    if cls in (PovmClass.LocalA, PovmClass.LocalB):
        party = "a" if cls is PovmClass.LocalA else "b"
        r = sld(partial_trace(rho, dims, party), partial_trace(drho, dims, party))
        m = embed_local(basis_povm(sld_eigenbasis(r)), dims, party)
        return ClassResult(cls, r.qfi, CLOSED_FORM, m)
    if cls is PovmClass.Global:
        r = sld(rho, drho)
        return ClassResult(cls, r.qfi, CLOSED_FORM, basis_povm(sld_eigenbasis(r)), {"support_rank": r.support_rank})
    upper = sld(rho, drho).qfi
    if cls is PovmClass.Product:
        seeds = tuple(seeds) + (
            (_marginal_sld_basis(rho, drho, dims, "a"), _marginal_sld_basis(rho, drho, dims, "b")),
            (None, None),
        )
        opt, ua, ub = _optimize_product(rho, drho, dims, cfg, seeds, upper)
        m = product_povm(basis_povm(ua), basis_povm(ub))
        diag = _diagnostics(opt)
        diag["bases"] = (ua, ub)
        return ClassResult(cls, opt["best"]["value"], LOWER_BOUND, m, diag)
    party = "a" if cls is PovmClass.AdaptiveAtoB else "b"
    seeds = tuple(seeds) + (_marginal_sld_basis(rho, drho, dims, party), None)
    opt, u = _optimize_adaptive(rho, drho, dims, party, cls, cfg, seeds, upper)
    diag = _diagnostics(opt)
    diag["first_basis"] = u
    return ClassResult(cls, opt["best"]["value"], LOWER_BOUND, _adaptive_measurement(rho, drho, u, dims, party), diag)


# ------------------------------------------------------------------- report


def distribution_type(fa: float, fb: float, fg: float, tol: float = 1e-6) -> str:
    """Which of the extremal distribution types the three exact values realise."""
    if fg <= tol and fa <= tol and fb <= tol:
        return "none"
    if fa <= tol and fb <= tol:
        return "locally inaccessible"
    if abs(fa - fg) <= tol and abs(fb - fg) <= tol:
        return "fully shared"
    if abs(fa + fb - fg) <= tol:
        if fb <= tol:
            return "locally owned by a"
        if fa <= tol:
            return "locally owned by b"
        return "locally owned"
    return "mixed"


def additivity(fa: float, fb: float, fg: float, tol: float = 1e-6) -> str:
    if fg > fa + fb + tol:
        return "superadditive"
    if fg < fa + fb - tol:
        return "subadditive"
    return "additive"


@dataclass
class HierarchyReport:
    theta: float
    family: str
    values: dict
    methods: dict
    verdicts: dict
    distribution: str
    additivity: str
    diagnostics: dict = field(default_factory=dict)
    measurements: dict = field(default_factory=dict, repr=False)

    def __getattr__(self, name):
        values = self.__dict__.get("values", {})
        if name in values:
            return values[name]
        raise AttributeError(name)

    @property
    def chain_ok(self) -> bool:
        return all(self.verdicts.values())

    def as_tuple(self) -> tuple:
        return tuple(self.values[k] for k in VALUE_KEYS)


def chain_verdicts(values: dict, methods: dict, eps: float = 1e-6, slack: float = 1e-4) -> dict:
    """Each hierarchy inequality, loosened by ``slack`` when its upper side is a lower bound."""

    def tol(upper):
        return eps + (slack if methods[upper] == LOWER_BOUND else 0.0)

    pairs = [
        ("fi_local_a", "fi_product"),
        ("fi_product", "fi_adaptive_ab"),
        ("fi_adaptive_ab", "fi_global"),
        ("fi_local_b", "fi_product"),
        ("fi_product", "fi_adaptive_ba"),
        ("fi_adaptive_ba", "fi_global"),
    ]
    out = {f"{lo}<={hi}": bool(values[lo] <= values[hi] + tol(hi)) for lo, hi in pairs}
    out["optimized<=fi_global"] = all(
        values[k] <= values["fi_global"] + eps for k in VALUE_KEYS if methods[k] == LOWER_BOUND
    )
    return out


def hierarchy_report(
    f: ParameterizedFamily,
    theta: float,
    dims: Optional[BipartiteDims] = None,
    cfg: OptimizerConfig = OptimizerConfig(),
) -> HierarchyReport:
    """All six class values at ``theta`` with inequality verdicts.

    The product search is seeded with both marginal SLD bases, and each
    adaptive search with the matching half of the best product measurement,
    so the optimized chain is monotone by construction whenever the exact
    entries are attained.
    """
    dims = _dims(f, dims)
    results = {
        PovmClass.LocalA: optimize_class(f, theta, PovmClass.LocalA, dims, cfg),
        PovmClass.LocalB: optimize_class(f, theta, PovmClass.LocalB, dims, cfg),
        PovmClass.Global: optimize_class(f, theta, PovmClass.Global, dims, cfg),
    }
    prod = optimize_class(f, theta, PovmClass.Product, dims, cfg)
    results[PovmClass.Product] = prod
    ua, ub = prod.diagnostics["bases"]
    results[PovmClass.AdaptiveAtoB] = optimize_class(f, theta, PovmClass.AdaptiveAtoB, dims, cfg, seeds=(ua,))
    results[PovmClass.AdaptiveBtoA] = optimize_class(f, theta, PovmClass.AdaptiveBtoA, dims, cfg, seeds=(ub,))
    values = {CLASS_KEYS[c]: float(r.value) for c, r in results.items()}
    values = {k: values[k] for k in VALUE_KEYS}
    methods = {CLASS_KEYS[c]: r.method for c, r in results.items()}
    methods = {k: methods[k] for k in VALUE_KEYS}
    diagnostics = {}
    for c in (PovmClass.Product, PovmClass.AdaptiveAtoB, PovmClass.AdaptiveBtoA):
        d = {k: v for k, v in results[c].diagnostics.items() if k not in ("bases", "first_basis")}
        diagnostics[CLASS_KEYS[c]] = d
    fa, fb, fg = values["fi_local_a"], values["fi_local_b"], values["fi_global"]
    return HierarchyReport(
        theta=float(theta),
        family=f.name,
        values=values,
        methods=methods,
        verdicts=chain_verdicts(values, methods, cfg.eps, cfg.slack),
        distribution=distribution_type(fa, fb, fg),
        additivity=additivity(fa, fb, fg),
        diagnostics=diagnostics,
        measurements={CLASS_KEYS[c]: r.measurement for c, r in results.items()},
    )


def config_dict(cfg: OptimizerConfig) -> dict:
    return asdict(cfg)
