"""Experiment drivers and the closed-form thresholds they are compared against."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import DomainSpec, build_preset
from .fem import OperatorSet, assemble, field_gradients, functional_value
from .mesh import TriMesh, interpolate, refine, snap_delta, triangulate
from .spectral import DEFAULT_TOL, EigenError, EigenResult, guard, is_positive_definite, min_eig

log = logging.getLogger(__name__)


class ExperimentError(RuntimeError):
    pass


class PreconditionError(ExperimentError):
    pass


class BisectionError(ExperimentError):
    """No sign change or a non-monotone probe pattern; ``trace`` is kept."""

    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace


# -- closed-form thresholds ---------------------------------------------------

def theory_M_theorem5(k: int) -> float:
    """Admissible coefficient 2 + 2/k paired with strip width 1/(2k)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return 2.0 + 2.0 / k


def theory_M_prop8(k: int) -> float:
    """M_k = 1 - 1/k + sqrt(1/k^2 + 6/k + 1).

    Root of 1 - 4/M + k(M - 2)/2 = 0. The second form below is the same
    value rewritten to avoid cancellation for large k.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    k = float(k)
    s = math.sqrt(1.0 / k**2 + 6.0 / k + 1.0)
    # 1 - 1/k + s = 2 + (s - 1 - 1/k), and s - 1 - 1/k = (4/k) / (s + 1 + 1/k)
    return 2.0 + (4.0 / k) / (s + 1.0 + 1.0 / k)


def prop8_identity_residual(k: int) -> float:
    M = theory_M_prop8(k)
    return 1.0 - 4.0 / M + k * (M - 2.0) / 2.0


# -- level sweep --------------------------------------------------------------

@dataclass
class LevelSweepRow:
    level: int
    n_triangles: int
    n_nodes: int
    n_free_dofs: int
    lambda_min: float
    pd: bool
    converged: bool = True

    def csv_row(self) -> dict:
        return {
            "level": self.level,
            "n_triangles": self.n_triangles,
            "n_nodes": self.n_nodes,
            "n_free_dofs": self.n_free_dofs,
            "lambda_min": self.lambda_min,
            "pd": self.pd,
        }


def solve_level(domain: DomainSpec, level: int, tol: float = DEFAULT_TOL,
                fit_strips: bool = False):
    mesh = triangulate(domain, level, fit_strips=fit_strips)
    ops = assemble(mesh)
    return mesh, ops, min_eig(ops.A, tol)


def run_insulation_sweep(c: float, max_level: int, tol: float = DEFAULT_TOL,
                         min_level: int = 1) -> list[LevelSweepRow]:
    """lambda_min(A) and the factorization verdict on the canonical domain per level."""
    if max_level < min_level or min_level < 1:
        raise ValueError("need 1 <= min_level <= max_level")
    domain = build_preset("canonical", {"c": c})
    rows = []
    for level in range(min_level, max_level + 1):
        mesh = triangulate(domain, level)
        ops = assemble(mesh)
        try:
            res = min_eig(ops.A, tol)
            converged = True
        except EigenError as exc:
            log.warning("level %d: %s", level, exc)
            res, converged = exc.result, False
        lam = res.lambda_min if res is not None else float("nan")
        rows.append(LevelSweepRow(level, mesh.n_triangles, mesh.n_nodes, ops.n_free,
                                  lam, is_positive_definite(ops.A), converged))
        log.info("c=%g level=%d lambda_min=%.6e", c, level, lam)
    return rows


def refinement_persistence_check(c: float, level: int, tol: float = DEFAULT_TOL,
                                 rel_tol: float = 0.05) -> bool:
    """Does a negative discrete mode keep its energy on the next finer mesh?

    The level-L minimal eigenvector, zero-extended to the clamped nodes, is
    interpolated onto the level-(L+1) nodes and its energy re-evaluated by
    direct quadrature. True iff the fine energy is negative and within
    ``rel_tol`` of the coarse one.
    """
    domain = build_preset("canonical", {"c": c})
    mesh, ops, res = solve_level(domain, level, tol)
    if res.lambda_min >= -guard(ops.A):
        raise PreconditionError(
            f"lambda_min = {res.lambda_min:.3e} is not negative at level {level}")
    phi = ops.extend(res.eigvec, mesh.n_nodes)
    coarse = functional_value(mesh, domain, phi)
    fine_mesh = refine(mesh)
    fine = functional_value(fine_mesh, domain, interpolate(mesh, phi, fine_mesh.nodes))
    log.info("persistence c=%g level=%d coarse=%.6e fine=%.6e", c, level, coarse, fine)
    return bool(fine < 0 and abs(fine - coarse) <= rel_tol * abs(coarse))


# -- bisection on the thin strip ----------------------------------------------

@dataclass
class BisectionTrace:
    k: int
    delta: float
    bracket_lo: float
    bracket_hi: float
    probes: list = field(default_factory=list)   # (M, lambda_min)
    M_num: float = float("nan")
    level: int = 0
    snapped: bool = False

    def csv_row(self) -> dict:
        return {
            "k": self.k,
            "delta": self.delta,
            "M_theory5": theory_M_theorem5(self.k),
            "M_theory8": theory_M_prop8(self.k),
            "M_num": self.M_num,
        }


def thin_operators(k: int, level: int, snap: bool = False,
                   delta: float | None = None) -> tuple[TriMesh, OperatorSet, float]:
    """Operators on the thin strip with unit coefficient, so A(M) = K1 + M/2 K2.

    By default the strip keeps its exact width and is split into
    ceil(delta / h) columns; ``snap=True`` instead rounds delta to a whole
    number of square cells.
    """
    if delta is None:
        delta = 1.0 / (2 * k)
    if snap:
        delta = snap_delta(delta, level)
    domain = build_preset("thin", {"M": 1.0, "delta": delta})
    mesh = triangulate(domain, level, fit_strips=not snap)
    return mesh, assemble(mesh), delta


def bisect_critical_M(k: int, level: int = 4, tol_M: float = 1e-3,
                      tol: float = DEFAULT_TOL, snap: bool = False,
                      bracket: tuple[float, float] = (2.0, 5.0),
                      max_doublings: int = 6) -> BisectionTrace:
    """Smallest coefficient M (to ``tol_M``) with lambda_min(A(M)) < -guard.

    ``M_num`` is the certified-negative end of the final bracket.
    """
    if k < 1 or tol_M <= 0:
        raise ValueError("need k >= 1 and tol_M > 0")
    mesh, ops, delta = thin_operators(k, level, snap)
    trace = BisectionTrace(k, delta, *bracket, level=level, snapped=snap)
    seen: dict[float, bool] = {}

    def negative(M):
        if M not in seen:
            A = ops.A_at(M)
            lam = min_eig(A, tol).lambda_min
            trace.probes.append((M, lam))
            seen[M] = lam < -guard(A)
        return seen[M]

    lo, hi = bracket
    if negative(lo):
        raise BisectionError(f"lambda_min already negative at M = {lo}", trace)
    doublings = 0
    while not negative(hi):
        if doublings == max_doublings:
            raise BisectionError(f"no sign change up to M = {hi}", trace)
        lo, hi = hi, 2.0 * hi
        doublings += 1
    while hi - lo > tol_M:
        mid = 0.5 * (lo + hi)
        if negative(mid):
            hi = mid
        else:
            lo = mid
    trace.bracket_lo, trace.bracket_hi, trace.M_num = lo, hi, hi
    _check_monotone(trace, ops)
    log.info("k=%d delta=%g M_num=%.6f (%d probes)", k, delta, hi, len(trace.probes))
    return trace


def _check_monotone(trace: BisectionTrace, ops: OperatorSet) -> None:
    for M, lam in trace.probes:
        neg = lam < -guard(ops.A_at(M))
        if neg != (M >= trace.M_num):
            raise BisectionError(
                f"non-monotone sign of lambda_min in M: probe M={M} gave {lam:.3e}",
                trace)


# -- mixed boundary conditions --------------------------------------------------

@dataclass
class LayerProfile:
    n_layers: int
    edges: np.ndarray
    energy: np.ndarray

    def csv_rows(self) -> list[dict]:
        return [{"layer": i, "x_lo": self.edges[i], "x_hi": self.edges[i + 1],
                 "energy": self.energy[i]} for i in range(self.n_layers)]


def layer_profile(mesh: TriMesh, field_: np.ndarray, n_layers: int) -> LayerProfile:
    """Share of int |grad phi|^2 in each of ``n_layers`` equal x1-bands.

    Triangles are assigned to bands by their centroid.
    """
    if n_layers < 1:
        raise ValueError("n_layers must be >= 1")
    x0, x1 = mesh.xs[0], mesh.xs[-1]
    edges = np.linspace(x0, x1, n_layers + 1)
    G = field_gradients(mesh, field_)
    e = np.abs(mesh.signed_areas()) * np.einsum("nab,nab->n", G, G)
    band = np.clip(np.searchsorted(edges, mesh.centroids()[:, 0]) - 1, 0, n_layers - 1)
    energy = np.bincount(band, weights=e, minlength=n_layers)
    total = energy.sum()
    if total > 0:
        energy = energy / total
    return LayerProfile(n_layers, edges, energy)


@dataclass
class NeumannResult:
    eigen: EigenResult
    layers: LayerProfile
    det: np.ndarray          # per-triangle det grad phi_min
    grad_sq: np.ndarray      # per-triangle |grad phi_min|^2
    mesh: TriMesh
    field: np.ndarray        # (n_nodes, 2) eigenmode, zero on clamped nodes


def run_neumann(c: float, delta: float, level: int = 4, n_layers: int = 64,
                tol: float = DEFAULT_TOL) -> NeumannResult:
    """Minimal eigenmode on (-1, delta) x (-1/2, 1/2), clamped on {x1 <= 0}."""
    domain = build_preset("neumann", {"c": c, "delta": delta})
    mesh, ops, res = solve_level(domain, level, tol, fit_strips=True)
    phi = ops.extend(res.eigvec, mesh.n_nodes)
    G = field_gradients(mesh, phi)
    return NeumannResult(res, layer_profile(mesh, phi, n_layers), np.linalg.det(G),
                         np.einsum("nab,nab->n", G, G), mesh, phi)


# -- coercivity and symmetry ----------------------------------------------------

def mean_coercivity_check(M: float, level: int, tol: float = DEFAULT_TOL) -> bool:
    """Is A(M) - (4 - M)/4 K1 positive semidefinite on the half domain?"""
    if not 0 <= M < 4:
        raise ValueError(f"need 0 <= M < 4, got {M}")
    mesh = triangulate(build_preset("half", {"M": M}), level)
    ops = assemble(mesh)
    B = (ops.A - ((4.0 - M) / 4.0) * ops.K1).tocsr()
    B.eliminate_zeros()
    if B.nnz == 0:
        return True
    return min_eig(B, tol).lambda_min >= -guard(B)


def prop8_check(k: int, level: int, tol: float = DEFAULT_TOL) -> tuple[float, bool]:
    """lambda_min on the thin strip at M = M_k and whether it clears -guard."""
    mesh, ops, _ = thin_operators(k, level)
    A = ops.A_at(theory_M_prop8(k))
    lam = min_eig(A, tol).lambda_min
    return lam, lam >= -guard(A)


def symmetry_check(c: float, level: int, tol: float = DEFAULT_TOL) -> float:
    """Relative gap between lambda_min for weights (-c, 0, 0, c) and (c, 0, 0, -c)."""
    if c == 0:
        return 0.0
    lam_p = solve_level(build_preset("canonical", {"c": c}), level, tol)[2].lambda_min
    lam_m = solve_level(build_preset("canonical", {"c": -c}), level, tol)[2].lambda_min
    return abs(lam_p - lam_m) / max(1.0, abs(lam_p))
