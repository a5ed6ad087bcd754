import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from sphquad_kit.constants import (FOUR_PI, GROUP_ORDER, ORBIT_DOF,
                                   POLE_EPS, SQRT_FOUR_PI)
from sphquad_kit.errors import (DomainError, NegativeWeight, NonConvergence,
                                RankDeficiency)
from sphquad_kit.helpers import to_angles
from sphquad_kit.tools.harmonics import (legendre_table,
                                         legendre_table_derivative)
from sphquad_kit.tools.icosahedral import (canonical_seed,
                                           decomposition_summary, get_group,
                                           invariant_count, orbit, pinned_seed)
from sphquad_kit.types import (ConstructOptions, ConvergenceRow, Direction,
                               MomentSystem, OrbitParam, QuadratureRule,
                               RotationGroup, RuleMeta)
from sphquad_kit.utils.recipe import validate_recipe

logger = logging.getLogger(__name__)

_MIN_WEIGHT = 1e-15


def index_set(N: int) -> List[Tuple[int, int]]:
    """
    Harmonic indices kept after the reflection reduction, sorted by (n, m).

    Even n takes m in {0, 2, ..., n}; odd n takes m in {2, 4, ..., n - 1}.
    """
    if N < 0:
        raise DomainError("degree must be non-negative")
    out = []
    for n in range(N + 1):
        start = 0 if n % 2 == 0 else 2
        out.extend((n, m) for m in range(start, n + 1, 2))
    return out


class _Layout:
    """
    Reduced moment equations for an ordered list of orbit types.

    Parameters are packed orbit by orbit: (theta, phi, w) for a generic orbit,
    (w) for a pinned one. Generic orbits keep all 60 images, pinned orbits
    their distinct points.
    """

    def __init__(self, group: RotationGroup, orbit_types: Sequence[str], degree: int):
        self.group = group
        self.types = list(orbit_types)
        self.degree = degree
        self.index = index_set(degree)
        self.pos = {nm: i for i, nm in enumerate(self.index)}
        self.orders = sorted({m for _, m in self.index})
        self.pinned = {t: orbit(group, pinned_seed(t)).vectors
                       for t in set(self.types) if t != "generic"}
        self.offsets = []
        p = 0
        for t in self.types:
            self.offsets.append(p)
            p += ORBIT_DOF[t]
        self.n_params = p
        self.weight_cols = np.array([off + (2 if t == "generic" else 0)
                                     for t, off in zip(self.types, self.offsets)], dtype=int)

    @property
    def node_count(self) -> int:
        return sum(GROUP_ORDER if t == "generic" else len(self.pinned[t]) for t in self.types)

    def _blocks(self, x: np.ndarray):
        blocks = []
        mats = self.group.matrices
        for t, off in zip(self.types, self.offsets):
            if t == "generic":
                th, ph, w = x[off:off + 3]
                st, ct, sp, cp = math.sin(th), math.cos(th), math.sin(ph), math.cos(ph)
                v = np.array([st * cp, st * sp, ct])
                d_th = np.array([ct * cp, ct * sp, -st])
                d_ph = np.array([-st * sp, st * cp, 0.0])
                blocks.append((mats @ v, w, (mats @ d_th, mats @ d_ph)))
            else:
                blocks.append((self.pinned[t], x[off], None))
        return blocks

    @staticmethod
    def _angles(vectors: np.ndarray):
        z = np.clip(vectors[:, 2], -1.0, 1.0)
        phi = np.arctan2(vectors[:, 1], vectors[:, 0])
        return z, phi

    def _scatter(self, out: np.ndarray, col, m: int, re: np.ndarray, im: np.ndarray) -> None:
        for n in range(m, self.degree + 1):
            row = self.pos.get((n, m))
            if row is not None:
                value = re[n - m] if n % 2 == 0 else im[n - m]
                if col is None:
                    out[row] = value
                else:
                    out[row, col] = value

    def residual(self, x: np.ndarray) -> np.ndarray:
        blocks = self._blocks(x)
        vectors = np.concatenate([b[0] for b in blocks])
        weights = np.concatenate([np.full(len(b[0]), b[1]) for b in blocks])
        z, phi = self._angles(vectors)
        res = np.zeros(len(self.index))
        for m in self.orders:
            table = legendre_table(self.degree, m, z)
            self._scatter(res, None, m, table @ (weights * np.cos(m * phi)),
                          table @ (weights * np.sin(m * phi)))
        res[self.pos[(0, 0)]] -= SQRT_FOUR_PI
        return res

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        blocks = self._blocks(x)
        vectors = np.concatenate([b[0] for b in blocks])
        z, phi = self._angles(vectors)
        rho = np.hypot(vectors[:, 0], vectors[:, 1])
        pole = rho < POLE_EPS
        rho_safe = np.where(pole, 1.0, rho)
        bounds = np.cumsum([0] + [len(b[0]) for b in blocks])
        jac = np.zeros((len(self.index), self.n_params))
        for m in self.orders:
            table = legendre_table(self.degree, m, z)
            deriv = legendre_table_derivative(self.degree, m, z, table)
            c, s = np.cos(m * phi), np.sin(m * phi)
            for (nodes, w, tangents), off, lo, hi in zip(blocks, self.offsets, bounds[:-1], bounds[1:]):
                sl = slice(lo, hi)
                t_sl, d_sl = table[:, sl], deriv[:, sl]
                wcol = off + (2 if tangents is not None else 0)
                self._scatter(jac, wcol, m, t_sl @ c[sl], t_sl @ s[sl])
                if tangents is None:
                    continue
                xs, ys, zs = nodes[:, 0], nodes[:, 1], nodes[:, 2]
                r = rho_safe[sl]
                for j, du in enumerate(tangents):
                    # chain rule through the node's own polar angles
                    a = np.where(pole[sl], 0.0, zs * (xs * du[:, 0] + ys * du[:, 1]) / r - r * du[:, 2])
                    b = np.where(pole[sl], 0.0, (xs * du[:, 1] - ys * du[:, 0]) / (r * r))
                    re = w * (d_sl @ (c[sl] * a) - m * (t_sl @ (s[sl] * b)))
                    im = w * (d_sl @ (s[sl] * a) + m * (t_sl @ (c[sl] * b)))
                    self._scatter(jac, off + j, m, re, im)
        return jac

    def pack(self, params: Sequence[OrbitParam]) -> np.ndarray:
        x = np.zeros(self.n_params)
        for p, off in zip(params, self.offsets):
            if p.orbit_type == "generic":
                x[off:off + 3] = (p.seed_theta, p.seed_phi, p.weight)
            else:
                x[off] = p.weight
        return x

    def unpack(self, x: np.ndarray) -> List[OrbitParam]:
        params = []
        for t, off in zip(self.types, self.offsets):
            if t == "generic":
                params.append(OrbitParam(orbit_type=t, seed_theta=float(x[off]),
                                         seed_phi=float(x[off + 1]), weight=float(x[off + 2])))
            else:
                params.append(OrbitParam(orbit_type=t, weight=float(x[off])))
        return params


def build_system(N: int, params: Sequence[OrbitParam]) -> MomentSystem:
    return MomentSystem(degree=N, params=list(params), index_set=index_set(N))


def _layout_for(system: MomentSystem) -> _Layout:
    return _Layout(get_group(), [p.orbit_type for p in system.params], system.degree)


def residual(system: MomentSystem) -> np.ndarray:
    """
    Reduced moment residual, one entry per index of `index_set(N)`.

    Even n contributes the real part, odd n the imaginary part of
    sum_nodes w Y_n^m; the (0, 0) entry has sqrt(4 pi) subtracted.
    """
    layout = _layout_for(system)
    return layout.residual(layout.pack(system.params))


def jacobian(system: MomentSystem) -> np.ndarray:
    """Analytic Jacobian of `residual` with respect to (theta, phi, w) per orbit."""
    layout = _layout_for(system)
    return layout.jacobian(layout.pack(system.params))


def verify_exactness(rule: QuadratureRule, N: int) -> float:
    """Largest |Q(Y_n^m) - sqrt(4 pi) delta_n0| over every n <= N and |m| <= n."""
    if N < 0:
        raise DomainError("degree must be non-negative")
    z = np.clip(rule.vectors[:, 2], -1.0, 1.0)
    worst = 0.0
    for m in range(N + 1):
        table = legendre_table(N, m, z)
        q = (-1.0) ** m * (table @ (rule.weights * np.exp(1j * m * rule.phis)))
        if m == 0:
            q[0] -= SQRT_FOUR_PI
        worst = max(worst, float(np.abs(q).max()))
    return worst


def recipe_search(N: int, pinned: Sequence[str] = ("vertex",)) -> List[str]:
    """Pinned orbits plus the fewest generic orbits whose freedom covers the invariants."""
    validate_recipe(list(pinned) or ["generic"])
    needed = invariant_count(N)
    dof = sum(ORBIT_DOF[t] for t in pinned)
    generic = max(0, math.ceil((needed - dof) / 3))
    return list(pinned) + ["generic"] * generic


def _ladder(N: int, opts: ConstructOptions) -> List[int]:
    return list(range(opts.ladder_start, N, opts.ladder_step)) + [N]


class _Solver:
    def __init__(self, group: RotationGroup, opts: ConstructOptions,
                 log: Optional[List[ConvergenceRow]]):
        self.group = group
        self.opts = opts
        self.log = log
        self.step = 0

    def _to_x(self, layout: _Layout, y: np.ndarray) -> np.ndarray:
        x = y.copy()
        if self.opts.positive_weights:
            with np.errstate(over="ignore"):
                x[layout.weight_cols] = np.exp(y[layout.weight_cols])
        return x

    def levenberg_marquardt(self, layout: _Layout, y: np.ndarray) -> np.ndarray:
        """
        Damped Gauss-Newton on the reduced equations.

        Steps solve the augmented least-squares problem [J; sqrt(lam) I] d = [-r; 0],
        which is the minimum-norm step for underdetermined systems.
        """
        opts = self.opts
        x = self._to_x(layout, y)
        r = layout.residual(x)
        cost = float(r @ r)
        lam = None
        p = layout.n_params
        for _ in range(opts.max_iters):
            if np.abs(r).max() <= opts.residual_tol:
                break
            jac = layout.jacobian(x)
            if opts.positive_weights:
                jac[:, layout.weight_cols] *= x[layout.weight_cols]
            if not np.all(np.isfinite(jac)) or not np.any(jac):
                raise RankDeficiency("Jacobian is not finite or vanishes")
            scale = float((jac * jac).sum(axis=0).max())
            lam = 1e-3 * scale if lam is None else max(lam, 1e-12 * scale)
            a = np.vstack([jac, math.sqrt(lam) * np.eye(p)])
            b = np.concatenate([-r, np.zeros(p)])
            delta, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
            if rank < p:
                raise RankDeficiency(f"damped system has rank {rank} < {p}")
            y_new = y + delta
            x_new = self._to_x(layout, y_new)
            with np.errstate(invalid="ignore", over="ignore"):
                r_new = layout.residual(x_new)
            new_cost = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else math.inf
            if new_cost < cost:
                y, x, r, cost = y_new, x_new, r_new, new_cost
                lam /= 3.0
            else:
                lam *= 2.0
                if lam > 1e12 * scale:
                    raise NonConvergence("damping grew without reducing the residual",
                                         residual=float(np.abs(r).max()))
            self.step += 1
            if self.log is not None:
                self.log.append(ConvergenceRow(step=self.step, degree=layout.degree,
                                               residual_inf=float(np.abs(r).max()), damping=lam,
                                               dof=p, equations=len(layout.index)))
            if np.linalg.norm(delta) <= opts.step_tol * (1.0 + np.linalg.norm(y)) and new_cost < math.inf:
                break
        rinf = float(np.abs(r).max())
        if rinf > opts.residual_tol:
            raise NonConvergence(f"degree {layout.degree} not reached", residual=rinf)
        weights = x[layout.weight_cols]
        if np.any(weights <= _MIN_WEIGHT):
            raise NegativeWeight(f"orbit weight {weights.min():.3e} is not positive")
        return x


def _seed_direction(group: RotationGroup, sampler: qmc.Halton) -> Direction:
    u, v = sampler.random(1)[0]
    z = 1.0 - 2.0 * u
    direction = Direction.from_angles(math.acos(z), 2.0 * math.pi * v)
    return canonical_seed(group, direction)


def _initial_point(layout: _Layout, previous: List[OrbitParam], sampler: qmc.Halton,
                   reseed_all: bool, positive: bool) -> np.ndarray:
    """Carry solved orbits forward and seed the rest, weights summing to 4 pi."""
    group = layout.group
    k_new = layout.node_count
    keep = [] if reseed_all else previous
    k_old = sum(len(layout.pinned[p.orbit_type]) if p.orbit_type != "generic" else GROUP_ORDER
                for p in keep)
    params = []
    for i, t in enumerate(layout.types):
        if i < len(keep):
            old = keep[i]
            params.append(old.model_copy(update={"weight": old.weight * k_old / k_new}))
        elif t == "generic":
            d = _seed_direction(group, sampler)
            params.append(OrbitParam(orbit_type=t, seed_theta=d.theta, seed_phi=d.phi,
                                     weight=FOUR_PI / k_new))
        else:
            params.append(OrbitParam(orbit_type=t, weight=FOUR_PI / k_new))
    y = layout.pack(params)
    if positive:
        y[layout.weight_cols] = np.log(y[layout.weight_cols])
    return y


def build_rule(group: RotationGroup, params: Sequence[OrbitParam], degree: Optional[int]) -> QuadratureRule:
    """
    Expand orbit parameters into a rule. Generic seeds that landed on a
    symmetry axis are merged, their weight scaled by the multiplicity.
    """
    vectors, weights, kinds = [], [], []
    for p in params:
        if p.orbit_type == "generic":
            orb = orbit(group, Direction.from_angles(p.seed_theta, p.seed_phi))
            w = p.weight * GROUP_ORDER / len(orb)
        else:
            orb = orbit(group, pinned_seed(p.orbit_type))
            w = p.weight
        vectors.append(orb.vectors)
        weights.append(np.full(len(orb), w))
        kinds.append((orb.orbit_type, []))
    thetas, phis = to_angles(np.concatenate(vectors))
    meta = RuleMeta(kind="riqs20", degree=degree, orbit_decomposition=decomposition_summary(kinds))
    return QuadratureRule(thetas, phis, np.concatenate(weights), meta)


def solve(N: int, recipe: Sequence[str], seed: int = 0, opts: Optional[ConstructOptions] = None,
          convergence_log: Optional[List[ConvergenceRow]] = None) -> QuadratureRule:
    """
    Construct an icosahedrally invariant rule exact through degree N.

    A continuation ladder raises the degree step by step, activating just
    enough orbits of the recipe (pinned orbits first) to cover the invariant
    count of each step. Failed steps restart from fresh quasi-random seeds.

    Args:
        N: Target degree.
        recipe: Orbit types, e.g. ["vertex"] + ["generic"] * 32.
        seed: Seed for the restart sequence.
        opts: Solver options.
        convergence_log: Optional list receiving one row per iteration.

    Returns:
        QuadratureRule of kind riqs20.

    Raises:
        DomainError: If the recipe has fewer parameters than invariants.
        NonConvergence: If every restart fails.
    """
    if not isinstance(N, (int, np.integer)) or N < 0:
        raise DomainError(f"degree must be a non-negative integer, got {N!r}")
    recipe = list(recipe)
    validate_recipe(recipe)
    opts = opts or ConstructOptions()
    group = get_group()
    needed = invariant_count(N, group)
    order = [t for t in recipe if t != "generic"] + [t for t in recipe if t == "generic"]
    dof = sum(ORBIT_DOF[t] for t in order)
    if dof < needed:
        raise DomainError(f"recipe has {dof} parameters but degree {N} has {needed} invariants")

    rng = np.random.default_rng(seed)
    sampler = qmc.Halton(d=2, scramble=True, seed=rng)
    solver = _Solver(group, opts, convergence_log)
    params: List[OrbitParam] = []
    for degree in _ladder(N, opts):
        if degree == N:
            target = len(order)
        else:
            need_d = invariant_count(degree, group)
            target = len(params)
            while target < len(order) and (target == 0 or sum(ORBIT_DOF[t] for t in order[:target]) <= need_d):
                target += 1
        layout = _Layout(group, order[:target], degree)
        fresh = target > len(params)
        failure: Optional[Exception] = None
        for attempt in range(opts.restarts + 1):
            reseed_all = attempt > opts.restarts // 2 or (attempt > 0 and not fresh)
            y0 = _initial_point(layout, params, sampler, reseed_all, opts.positive_weights)
            try:
                x = solver.levenberg_marquardt(layout, y0)
                break
            except (NonConvergence, RankDeficiency, NegativeWeight) as e:
                failure = e
                logger.info(f"Degree {degree} attempt {attempt} failed: {e}")
        else:
            raise NonConvergence(f"degree {degree} failed after {opts.restarts} restarts",
                                 residual=getattr(failure, "residual", float("nan")))
        params = layout.unpack(x)
        logger.info(f"Reached degree {degree} with {target} orbits, {layout.node_count} nodes")

    canonical = []
    for p in params:
        if p.orbit_type == "generic":
            d = canonical_seed(group, Direction.from_angles(p.seed_theta, p.seed_phi))
            p = p.model_copy(update={"seed_theta": d.theta, "seed_phi": d.phi})
        canonical.append(p)
    rule = build_rule(group, canonical, N)
    err = verify_exactness(rule, N)
    if err > opts.exactness_tol:
        raise NonConvergence("full moment check failed", residual=err)
    logger.info(f"Constructed degree-{N} rule with {rule.size} nodes")
    return rule


class ConstructionManager:
    @staticmethod
    def construct(N: int, recipe: Optional[Sequence[str]] = None, seed: int = 0,
                  opts: Optional[ConstructOptions] = None) -> Tuple[QuadratureRule, List[ConvergenceRow]]:
        """
        Construct a rule and return it with its convergence log.

        Args:
            N: Target degree.
            recipe: Orbit recipe; the smallest vertex-pinned recipe when omitted.
            seed: Restart seed.
            opts: Solver options.

        Returns:
            (rule, convergence rows).
        """
        log: List[ConvergenceRow] = []
        try:
            rule = solve(N, recipe or recipe_search(N), seed, opts, log)
        except Exception as e:
            logger.error(f"Construction failed: {e}", exc_info=True)
            raise
        return rule, log
