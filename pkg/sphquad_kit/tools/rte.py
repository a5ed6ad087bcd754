import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from sphquad_kit.constants import FACES, FOUR_PI
from sphquad_kit.errors import (Divergence, DomainError, MaterialError,
                                ProblemTooLarge)
from sphquad_kit.types import (BoundaryFn, PhaseMatrix, QuadratureRule,
                               RteField, RteOptions, RteProblem)
from sphquad_kit.utils.voxel_io import read_labels, read_material_table

logger = logging.getLogger(__name__)

_INWARD_NORMALS = {
    "x-": (0, 1.0), "x+": (0, -1.0),
    "y-": (1, 1.0), "y+": (1, -1.0),
    "z-": (2, 1.0), "z+": (2, -1.0),
}


def build_phase_matrix(rule: QuadratureRule, g: float, normalize: bool = True) -> PhaseMatrix:
    """
    Henyey-Greenstein values P[k, j] = p(xi_k . xi_j).

    With `normalize` each row is rescaled so that sum_j w_j P[k, j] = 1 and
    the discrete scattering operator conserves energy.
    """
    if not -1.0 < g < 1.0:
        raise DomainError(f"anisotropy g = {g} outside (-1, 1)")
    mu = np.clip(rule.vectors @ rule.vectors.T, -1.0, 1.0)
    values = (1.0 - g * g) / (FOUR_PI * (1.0 + g * g - 2.0 * g * mu) ** 1.5)
    if normalize:
        values = values / (values @ rule.weights)[:, None]
    return PhaseMatrix(values=values, g=float(g), normalized=normalize)


def unknown_count(grid: Tuple[int, int, int], rule: Union[QuadratureRule, int]) -> int:
    size = rule if isinstance(rule, int) else rule.size
    nx, ny, nz = grid
    return int(nx) * int(ny) * int(nz) * int(size)


def vacuum_boundary() -> BoundaryFn:
    def boundary(face: str, ijk: Tuple[int, int, int], xi: np.ndarray) -> float:
        return 0.0
    return boundary


def uniform_face_inflow(face: str, value: float) -> BoundaryFn:
    """Constant inflow through one face, vacuum elsewhere."""
    if face not in FACES:
        raise DomainError(f"unknown face {face!r}")

    def boundary(f: str, ijk: Tuple[int, int, int], xi: np.ndarray) -> float:
        return value if f == face else 0.0
    return boundary


def collimated_patch(face: str, center: Tuple[float, float], radius: float,
                     cone_cos: float = 0.8, value: float = 1.0) -> BoundaryFn:
    """
    Disc of inflow on one face, restricted to directions within a cone about
    the inward normal.
    """
    if face not in FACES:
        raise DomainError(f"unknown face {face!r}")
    axis, sign = _INWARD_NORMALS[face]
    tangential = [a for a in range(3) if a != axis]

    def boundary(f: str, ijk: Tuple[int, int, int], xi: np.ndarray) -> float:
        if f != face or sign * xi[axis] < cone_cos:
            return 0.0
        du = ijk[tangential[0]] - center[0]
        dv = ijk[tangential[1]] - center[1]
        return value if du * du + dv * dv <= radius * radius else 0.0
    return boundary


def _octant_plan(grid: Tuple[int, int, int], signs: Tuple[int, int, int]):
    """
    Wavefronts i' + j' + l' = const in upwind coordinates, with the flat index
    of each voxel's upwind neighbour per axis (nvox marks the boundary).
    """
    nx, ny, nz = grid
    nvox = nx * ny * nz
    i, j, l = (a.ravel() for a in np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"))
    flat = np.arange(nvox)
    sx, sy, sz = signs
    ip = i if sx > 0 else nx - 1 - i
    jp = j if sy > 0 else ny - 1 - j
    lp = l if sz > 0 else nz - 1 - l
    nbr_x = np.where(ip > 0, flat - sx * ny * nz, nvox)
    nbr_y = np.where(jp > 0, flat - sy * nz, nvox)
    nbr_z = np.where(lp > 0, flat - sz, nvox)
    level = ip + jp + lp
    order = np.argsort(level, kind="stable")
    cuts = np.cumsum(np.bincount(level))[:-1]
    planes = [(idx, nbr_x[idx], nbr_y[idx], nbr_z[idx]) for idx in np.split(order, cuts)]
    return planes, (nbr_x, nbr_y, nbr_z)


def _signs(xi: np.ndarray) -> Tuple[int, int, int]:
    return tuple(1 if c >= 0.0 else -1 for c in xi)


class TransportOperator:
    """
    Upwind finite-difference discretisation of the steady transport equation.

    The field is (nvox, K) with voxels flattened C-order over (nx, ny, nz).
    Row (x, k) reads

        sum_a c_a (I[x,k] - I[up_a(x),k]) + (mu_a + mu_s) I[x,k]
            - mu_s sum_j w_j P[k,j] I[x,j] = q[x,k]

    with c_a = |xi_a| / h and inflow from the boundary replacing missing
    upwind neighbours.
    """

    def __init__(self, problem: RteProblem, normalize_phase: bool = True):
        self.problem = problem
        rule = problem.rule
        self.nvox = problem.voxel_count
        self.K = rule.size
        self.coeff = np.abs(rule.vectors) / problem.h
        mu_a = problem.mu_a.ravel()
        self.mu_s = problem.mu_s.ravel()
        self.denom = self.coeff.sum(axis=1)[None, :] + (mu_a + self.mu_s)[:, None]
        self.mu_a = mu_a

        g = problem.g.ravel()
        self.groups = []
        values = np.unique(g)
        for gv in values:
            rows = slice(None) if len(values) == 1 else np.flatnonzero(g == gv)
            phase = build_phase_matrix(rule, float(gv), normalize_phase)
            self.groups.append((rows, phase.values * rule.weights[None, :]))

        self.source = problem.source if problem.source is not None else np.zeros((self.nvox, self.K))
        self.inflow = self._inflow_term()
        self.rhs_fixed = self.source + self.inflow

        self.octant_of = [_signs(xi) for xi in rule.vectors]
        self.plans: Dict[Tuple[int, int, int], tuple] = {}
        for signs in set(self.octant_of):
            self.plans[signs] = _octant_plan(problem.grid, signs)

    def _inflow_term(self) -> np.ndarray:
        out = np.zeros((self.nvox, self.K))
        boundary = self.problem.boundary
        if boundary is None:
            return out
        nx, ny, nz = self.problem.grid
        dims = (nx, ny, nz)
        idx = np.arange(self.nvox).reshape(dims)
        vectors = self.problem.rule.vectors
        for face in FACES:
            axis, sign = _INWARD_NORMALS[face]
            entering = np.flatnonzero(sign * vectors[:, axis] > 0.0)
            if entering.size == 0:
                continue
            cut = [slice(None)] * 3
            cut[axis] = 0 if sign > 0 else dims[axis] - 1
            for flat in idx[tuple(cut)].ravel():
                ijk = tuple(int(c) for c in np.unravel_index(flat, dims))
                for k in entering:
                    value = boundary(face, ijk, vectors[k])
                    if value:
                        out[flat, k] += self.coeff[k, axis] * value
        return out

    def scattering(self, intensity: np.ndarray, k: Optional[int] = None) -> np.ndarray:
        """mu_s sum_j w_j P[k, j] I[:, j], for one direction or all of them."""
        if k is None:
            out = np.empty_like(intensity)
            for rows, wp in self.groups:
                out[rows] = self.mu_s[rows, None] * (intensity[rows] @ wp.T)
            return out
        out = np.empty(self.nvox)
        for rows, wp in self.groups:
            out[rows] = self.mu_s[rows] * (intensity[rows] @ wp[k])
        return out

    def transport(self, intensity: np.ndarray, k: int, scatter: np.ndarray) -> None:
        """Upwind sweep of direction k with a frozen scattering source."""
        planes, _ = self.plans[self.octant_of[k]]
        col = np.zeros(self.nvox + 1)
        cx, cy, cz = self.coeff[k]
        rhs = scatter + self.rhs_fixed[:, k]
        den = self.denom[:, k]
        for idx, up_x, up_y, up_z in planes:
            col[idx] = (cx * col[up_x] + cy * col[up_y] + cz * col[up_z] + rhs[idx]) / den[idx]
        intensity[:, k] = col[:self.nvox]

    def sweep(self, intensity: np.ndarray, workers: int = 1) -> None:
        """
        One in-place pass over all directions in index order.

        With one worker this is Gauss-Seidel in direction: direction k sees
        every column already updated. More workers switch to block-Jacobi,
        where a block of directions shares the scattering source computed at
        its start.
        """
        if workers <= 1:
            for k in range(self.K):
                self.transport(intensity, k, self.scattering(intensity, k))
            return
        block = 4 * workers
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for start in range(0, self.K, block):
                ks = range(start, min(start + block, self.K))
                sources = {k: self.scattering(intensity, k) for k in ks}
                list(pool.map(lambda k: self.transport(intensity, k, sources[k]), ks))

    def upwind(self, intensity: np.ndarray) -> np.ndarray:
        ext = np.vstack([intensity, np.zeros((1, self.K))])
        out = np.zeros_like(intensity)
        octants = np.array(self.octant_of)
        for signs, (_, neighbours) in self.plans.items():
            ks = np.flatnonzero(np.all(octants == np.array(signs), axis=1))
            for axis, nbr in enumerate(neighbours):
                out[:, ks] += self.coeff[ks, axis][None, :] * ext[nbr][:, ks]
        return out

    def defect(self, intensity: np.ndarray) -> np.ndarray:
        """b - A I for the full linear system."""
        return (self.rhs_fixed + self.upwind(intensity) + self.scattering(intensity)
                - self.denom * intensity)

    def relative_defect(self, intensity: np.ndarray) -> float:
        r = float(np.abs(self.defect(intensity)).max())
        b = float(np.abs(self.rhs_fixed).max())
        return r / b if b > 0.0 else r

    def dominance_margins(self) -> np.ndarray:
        """
        Diagonal minus off-diagonal row sum minus mu_a, per (voxel, direction).

        Non-negative margins certify that the sweep is a contraction.
        """
        interior = np.zeros((self.nvox, self.K))
        octants = np.array(self.octant_of)
        for signs, (_, neighbours) in self.plans.items():
            ks = np.flatnonzero(np.all(octants == np.array(signs), axis=1))
            for axis, nbr in enumerate(neighbours):
                has = (nbr < self.nvox).astype(float)
                interior[:, ks] += has[:, None] * self.coeff[ks, axis][None, :]
        diag = self.denom.copy()
        off = interior
        for rows, wp in self.groups:
            self_term = np.diag(wp)
            row_sum = wp.sum(axis=1)
            mus = self.mu_s[rows, None]
            diag[rows] -= mus * self_term[None, :]
            off[rows] += mus * (row_sum - self_term)[None, :]
        return diag - off - self.mu_a[:, None]


def _check_size(problem: RteProblem, opts: RteOptions) -> None:
    if problem.unknowns > opts.max_unknowns and not opts.allow_large:
        raise ProblemTooLarge(
            f"{problem.unknowns} unknowns exceed the cap of {opts.max_unknowns}; "
            "pass allow_large to override"
        )


def gauss_seidel_sweep(problem: RteProblem, field: RteField,
                       operator: Optional[TransportOperator] = None) -> Tuple[RteField, float]:
    """One sweep from `field`; returns the new field and its relative defect."""
    operator = operator or TransportOperator(problem)
    intensity = np.array(field.intensity, dtype=float, copy=True)
    operator.sweep(intensity)
    rel = operator.relative_defect(intensity)
    step = len(field.residual_history) + 1
    return RteField(intensity, field.residual_history + [(step, rel)]), rel


def solve(problem: RteProblem, opts: Optional[RteOptions] = None) -> RteField:
    """
    Iterate sweeps from a zero field until the relative defect drops to `tol`.

    Args:
        problem: Discretised transport problem.
        opts: Iteration options.

    Returns:
        RteField with the residual history, one entry per sweep.

    Raises:
        ProblemTooLarge: Above the unknown cap without `allow_large`.
        Divergence: If the defect grows for `divergence_window` sweeps in a row.
    """
    opts = opts or RteOptions()
    _check_size(problem, opts)
    field = RteField(np.zeros((problem.voxel_count, problem.rule.size)))
    if opts.max_iters == 0:
        return field
    operator = TransportOperator(problem, opts.normalize_phase)
    logger.info(f"Solving transport with {problem.unknowns} unknowns")
    growth = 0
    previous = math.inf
    for it in range(1, opts.max_iters + 1):
        operator.sweep(field.intensity, opts.workers)
        rel = operator.relative_defect(field.intensity)
        field.residual_history.append((it, rel))
        if not math.isfinite(rel):
            raise Divergence(f"residual became non-finite at sweep {it}", field.residual_history)
        if rel <= opts.tol:
            logger.info(f"Converged after {it} sweeps, residual {rel:.3e}")
            return field
        growth = growth + 1 if rel > previous else 0
        if growth >= opts.divergence_window:
            raise Divergence(f"residual grew for {growth} consecutive sweeps", field.residual_history)
        previous = rel
        if it % 50 == 0:
            logger.info(f"Sweep {it}: relative residual {rel:.3e}")
    logger.warning(f"Stopped after {opts.max_iters} sweeps at residual {field.residual_history[-1][1]:.3e}")
    return field


def fluence(problem: RteProblem, field: RteField) -> np.ndarray:
    """sum_k w_k I[:, k] on the (nx, ny, nz) grid."""
    return (field.intensity @ problem.rule.weights).reshape(problem.grid)


def defect(problem: RteProblem, field: RteField, normalize_phase: bool = True) -> np.ndarray:
    """Residual b - A I of a field, shaped (nvox, K)."""
    return TransportOperator(problem, normalize_phase).defect(field.intensity)


def dominance_margins(problem: RteProblem, normalize_phase: bool = True) -> np.ndarray:
    return TransportOperator(problem, normalize_phase).dominance_margins()


def load_voxel_problem(label_file: Union[str, Path],
                       materials: Union[str, Path, Dict[int, Tuple[float, float, float]]],
                       rule: QuadratureRule, boundary: Optional[BoundaryFn] = None,
                       source: Optional[np.ndarray] = None) -> RteProblem:
    """
    Build a problem from a label volume and a material table.

    Raises:
        VolumeFormatError: On unreadable or malformed files.
        MaterialError: On unknown labels or optical properties out of range.
    """
    labels, spacing = read_labels(label_file)
    table = materials if isinstance(materials, dict) else read_material_table(materials)
    for label, (mu_a, mu_s, g) in table.items():
        if mu_a <= 0.0 or mu_s < 0.0 or not -1.0 < g < 1.0:
            raise MaterialError(f"invalid optical properties for label {label}")
    missing = sorted(set(np.unique(labels).tolist()) - set(table))
    if missing:
        raise MaterialError(f"labels without material: {missing}")
    lookup = np.zeros((256, 3))
    for label, props in table.items():
        lookup[label] = props
    props = lookup[labels]
    try:
        return RteProblem(grid=labels.shape, h=spacing, mu_a=props[..., 0], mu_s=props[..., 1],
                          g=props[..., 2], rule=rule, boundary=boundary, source=source)
    except DomainError as e:
        raise MaterialError(str(e)) from e


class RteManager:
    @staticmethod
    def run(problem: RteProblem, opts: Optional[RteOptions] = None) -> RteField:
        """
        Solve a transport problem from a zero field.

        Args:
            problem: Transport problem.
            opts: Iteration options.

        Returns:
            RteField with its residual history.
        """
        try:
            field = solve(problem, opts)
        except Exception as e:
            logger.error(f"Transport solve failed: {e}", exc_info=True)
            raise
        return field
