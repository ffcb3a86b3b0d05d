"""Robust (min-max) static hedging over the market price of risk.

The affine market price of risk (lambda0, lambda1) is parametrized by the
risk-neutral OU pair (alpha, theta) it induces.  The loss coefficients y and
z are computed on a rectangular (alpha, theta) node grid with common random
numbers, interpolated by bicubic splines, and the projected loss
g = z - y' X^+ y (the loss at the conditionally optimal allocation) is
searched for interior local maxima and for maxima on the domain boundary.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.interpolate import LSQBivariateSpline, RectBivariateSpline

from .hedge import quadratic_coefficients
from .instruments import epo_wealth, instrument_wealth
from .paths import MarketPriceOfRisk, OUParams, PathSet, girsanov_map, with_behaviour
from .prepay import MortgageSpec, SigmoidParams, epo_cashflows, incentive_swap_rate, notional_paths
from .pricer import LsmConfig, price_epo

EDGES = ("alpha_min", "alpha_max", "theta_min", "theta_max")


@dataclass(frozen=True)
class MprDomain:
    """Rectangle of risk-neutral (alpha, theta) and the real-world OU it is measured from."""

    alpha_q_range: tuple
    theta_q_range: tuple
    ou_p: OUParams

    def __post_init__(self):
        a_lo, a_hi = map(float, self.alpha_q_range)
        t_lo, t_hi = map(float, self.theta_q_range)
        object.__setattr__(self, "alpha_q_range", (a_lo, a_hi))
        object.__setattr__(self, "theta_q_range", (t_lo, t_hi))
        if a_lo < 0.0 or a_hi <= a_lo:
            raise ValueError("need 0 <= alpha_min < alpha_max")
        if t_hi <= t_lo:
            raise ValueError("need theta_min < theta_max")
        if not self.ou_p.eta_b > 0.0:
            raise ValueError("the market price of risk domain needs eta_b > 0")

    def to_lambda(self, alpha, theta):
        """(alpha, theta) -> (lambda0, lambda1), inverse of the Girsanov parameter map."""
        p = self.ou_p
        alpha = np.asarray(alpha, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return ((p.alpha_b * p.theta_b - alpha * theta) / p.eta_b, (alpha - p.alpha_b) / p.eta_b)

    def to_alpha_theta(self, lambda0, lambda1):
        p = self.ou_p
        alpha = p.alpha_b + p.eta_b * np.asarray(lambda1, dtype=float)
        return alpha, (p.alpha_b * p.theta_b - p.eta_b * np.asarray(lambda0, dtype=float)) / alpha

    def jacobian(self, alpha, theta) -> np.ndarray:
        """d(alpha, theta) / d(lambda0, lambda1)."""
        eta = self.ou_p.eta_b
        return np.array([[0.0, eta], [-eta / alpha, -theta * eta / alpha]])

    def second_derivatives(self, alpha, theta):
        """Hessians of alpha and theta with respect to (lambda0, lambda1)."""
        eta = self.ou_p.eta_b
        h_theta = np.array([[0.0, eta ** 2 / alpha ** 2], [eta ** 2 / alpha ** 2, 2.0 * theta * eta ** 2 / alpha ** 2]])
        return np.zeros((2, 2)), h_theta


@dataclass(frozen=True)
class DomainGeometry:
    """Search region in (lambda0, lambda1): vertices (counter-clockwise) and A lam <= c."""

    vertices: np.ndarray
    A: np.ndarray
    c: np.ndarray
    kind: str

    def contains(self, lambda0, lambda1, tol: float = 1e-12) -> bool:
        lam = np.array([lambda0, lambda1], dtype=float)
        slack = self.c - self.A @ lam
        return bool(np.all(slack >= -tol * np.maximum(1.0, np.abs(self.c))))

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=-1)))


def build_domain(domain: MprDomain) -> DomainGeometry:
    """Region of market prices of risk whose induced (alpha, theta) lie in the rectangle.

    It is a triangle when alpha_min = 0 (the apex is the inadmissible limit
    alpha = 0) and a trapezoid otherwise.
    """
    p = domain.ou_p
    a_lo, a_hi = domain.alpha_q_range
    t_lo, t_hi = domain.theta_q_range
    eta = p.eta_b
    lam1_lo = (a_lo - p.alpha_b) / eta
    lam1_hi = (a_hi - p.alpha_b) / eta
    # lambda0 >= m_lo lambda1 + q_lo  <=>  theta <= theta_max, and symmetrically for theta_min
    m_lo, q_lo = -t_hi, p.alpha_b * (p.theta_b - t_hi) / eta
    m_hi, q_hi = -t_lo, p.alpha_b * (p.theta_b - t_lo) / eta
    A = np.array([[0.0, -1.0], [0.0, 1.0], [-1.0, m_lo], [1.0, -m_hi]])
    c = np.array([-lam1_lo, lam1_hi, -q_lo, q_hi])
    top = [np.array(domain.to_lambda(a_hi, t_lo)), np.array(domain.to_lambda(a_hi, t_hi))]
    if a_lo == 0.0:
        apex = np.array([p.alpha_b * p.theta_b / eta, -p.alpha_b / eta])
        verts, kind = [apex, top[0], top[1]], "triangle"
    else:
        bottom = [np.array(domain.to_lambda(a_lo, t_hi)), np.array(domain.to_lambda(a_lo, t_lo))]
        verts, kind = [bottom[0], bottom[1], top[0], top[1]], "trapezoid"
    verts = np.array(verts)
    center = verts.mean(axis=0)
    order = np.argsort(np.arctan2(verts[:, 1] - center[1], verts[:, 0] - center[0]))
    return DomainGeometry(verts[order], A, c, kind)


@dataclass(frozen=True)
class NodalProblem:
    """Everything needed to evaluate the hedge loss coefficients under one measure."""

    paths: PathSet
    mortgage: MortgageSpec
    sigmoid: SigmoidParams
    roster: tuple
    lsm: LsmConfig = LsmConfig()
    mode: str = "continuous"
    window: tuple = None


@dataclass
class _Shared:
    kappa: np.ndarray
    wealths: list
    X: np.ndarray


def _shared(problem: NodalProblem) -> _Shared:
    kappa = incentive_swap_rate(problem.mortgage, problem.paths)
    wealths = [instrument_wealth(s, problem.paths).wealth for s in problem.roster]
    epo0 = np.zeros_like(problem.paths.r)
    x, _, _ = quadratic_coefficients(epo0, wealths, problem.paths.times, window=problem.window)
    return _Shared(kappa, wealths, x)


def node_coefficients(problem: NodalProblem, ou_q: OUParams, shared: _Shared | None = None):
    """(X, y, z, V0) for the EPO priced under ``ou_q`` on the problem's rate paths."""
    shared = _shared(problem) if shared is None else shared
    paths = with_behaviour(problem.paths, ou_q)
    notionals = notional_paths(problem.mortgage, problem.sigmoid, paths, problem.mode, shared.kappa)
    values = price_epo(paths, notionals, problem.mortgage, problem.lsm)
    cash = epo_cashflows(paths, notionals, problem.mortgage)
    wealth = epo_wealth(values, cash, paths, problem.mortgage.payment_dates).wealth
    v0 = float(values[:, 0].mean())
    del values, notionals
    _, y, z = quadratic_coefficients(wealth, shared.wealths, paths.times, window=problem.window)
    return shared.X, y, z, v0


@dataclass(frozen=True)
class NodalTables:
    alphas: np.ndarray
    thetas: np.ndarray
    y: np.ndarray   # [n_alpha, n_theta, n_instruments]
    z: np.ndarray   # [n_alpha, n_theta]
    X: np.ndarray
    v0: np.ndarray  # EPO value at t0 per node


def node_axes(domain: MprDomain, grid_shape) -> tuple:
    n_a, n_t = grid_shape
    if n_a < 4 or n_t < 4:
        raise ValueError("a bicubic surface needs at least 4 x 4 nodes")
    a_lo, a_hi = domain.alpha_q_range
    if a_lo <= 0.0:
        raise ValueError("nodes need alpha > 0; use a positive alpha_min for the node grid")
    return np.linspace(a_lo, a_hi, n_a), np.linspace(*domain.theta_q_range, n_t)


def evaluate_nodal_grid(domain: MprDomain, grid_shape, problem: NodalProblem, progress=None,
                        workers: int = 1) -> NodalTables:
    """Monte Carlo loss coefficients on the (alpha, theta) node grid.

    The short rate, money account, instrument wealths and X are shared by
    all nodes; only the behavioural drift changes, driven by the same shocks.
    Nodes are independent jobs, so the tables do not depend on ``workers``.
    """
    alphas, thetas = node_axes(domain, grid_shape)
    shared = _shared(problem)
    n_inst = len(problem.roster)
    y = np.empty((alphas.size, thetas.size, n_inst))
    z = np.empty((alphas.size, thetas.size))
    v0 = np.empty_like(z)
    eta, b0 = domain.ou_p.eta_b, domain.ou_p.b0

    def job(ij):
        i, j = ij
        ou_q = OUParams(float(alphas[i]), float(thetas[j]), eta, b0, "risk-neutral")
        _, y[i, j], z[i, j], v0[i, j] = node_coefficients(problem, ou_q, shared)
        if progress is not None:
            progress(i, j)

    nodes = [(i, j) for i in range(alphas.size) for j in range(thetas.size)]
    if workers <= 1:
        for ij in nodes:
            job(ij)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(job, nodes))
    return NodalTables(alphas, thetas, y, z, shared.X, v0)


@dataclass(frozen=True)
class SplineSurface:
    """Bicubic surfaces of y_i and z over (alpha, theta) plus the fixed matrix X."""

    alphas: np.ndarray
    thetas: np.ndarray
    y_splines: tuple
    z_spline: object
    X: np.ndarray
    residual: float

    @property
    def X_pinv(self) -> np.ndarray:
        return np.linalg.pinv(self.X, hermitian=True)

    def _ev(self, spline, a, t, da=0, dt=0):
        return spline.ev(a, t, dx=da, dy=dt)

    def y(self, a, t, da=0, dt=0):
        return np.array([self._ev(s, a, t, da, dt) for s in self.y_splines])

    def z(self, a, t, da=0, dt=0):
        return self._ev(self.z_spline, a, t, da, dt)

    def allocation(self, a, t):
        return self.X_pinv @ self.y(a, t)

    def projected_loss(self, a, t):
        """g = z - y' X^+ y, the loss under the conditionally optimal allocation."""
        y = self.y(a, t)
        return self.z(a, t) - np.einsum("i...,ij,j...->...", y, self.X_pinv, y)

    def gradient(self, a, t) -> np.ndarray:
        """(dg/dalpha, dg/dtheta); valid for scalar or array arguments."""
        xi = self.X_pinv
        y = self.y(a, t)
        ay = np.einsum("ij,j...->i...", xi, y)
        ga = self.z(a, t, 1, 0) - 2.0 * np.sum(self.y(a, t, 1, 0) * ay, axis=0)
        gt = self.z(a, t, 0, 1) - 2.0 * np.sum(self.y(a, t, 0, 1) * ay, axis=0)
        return np.array([ga, gt])

    def hessian(self, a, t) -> np.ndarray:
        xi = self.X_pinv
        y = self.y(a, t)
        ay = xi @ y
        d = {"a": self.y(a, t, 1, 0), "t": self.y(a, t, 0, 1)}
        orders = {("a", "a"): (2, 0), ("a", "t"): (1, 1), ("t", "t"): (0, 2)}
        h = np.empty((2, 2))
        for (u, v), (da, dt) in orders.items():
            val = self.z(a, t, da, dt) - 2.0 * self.y(a, t, da, dt) @ ay - 2.0 * d[u] @ xi @ d[v]
            iu, iv = "at".index(u), "at".index(v)
            h[iu, iv] = h[iv, iu] = val
        return h


def fit_spline(tables: NodalTables, interior_knots=None) -> SplineSurface:
    """Bicubic interpolation of the nodal tables (least squares if interior knots are given)."""
    a, t = tables.alphas, tables.thetas
    if a.size < 4 or t.size < 4:
        raise ValueError("under-determined bicubic fit: need at least 4 nodes per axis")

    def fit(values):
        if interior_knots is None:
            return RectBivariateSpline(a, t, values, kx=3, ky=3, s=0.0)
        ka, kt = interior_knots
        aa, tt = np.meshgrid(a, t, indexing="ij")
        if (len(ka) + 4) * (len(kt) + 4) > values.size:
            raise ValueError("under-determined bicubic fit: more coefficients than nodes")
        return LSQBivariateSpline(aa.ravel(), tt.ravel(), values.ravel(), ka, kt, kx=3, ky=3,
                                  bbox=[a[0], a[-1], t[0], t[-1]])

    ys = tuple(fit(tables.y[:, :, i]) for i in range(tables.y.shape[2]))
    zs = fit(tables.z)
    aa, tt = np.meshgrid(a, t, indexing="ij")
    res = [np.max(np.abs(s.ev(aa, tt) - tables.y[:, :, i])) / max(np.max(np.abs(tables.y[:, :, i])), 1e-300)
           for i, s in enumerate(ys)]
    res.append(np.max(np.abs(zs.ev(aa, tt) - tables.z)) / max(np.max(np.abs(tables.z)), 1e-300))
    return SplineSurface(a, t, ys, zs, np.asarray(tables.X, dtype=float), float(max(res)))


@dataclass(frozen=True)
class CriticalPoint:
    alpha: float
    theta: float
    lambda0: float
    lambda1: float
    allocation: np.ndarray
    loss: float
    hessian_eigenvalues: np.ndarray = None
    classification: str = "unclassified"


def _lambda_hessian(surface: SplineSurface, domain: MprDomain, a, t) -> np.ndarray:
    jac = domain.jacobian(a, t)
    grad = surface.gradient(a, t)
    h_a, h_t = domain.second_derivatives(a, t)
    return jac.T @ surface.hessian(a, t) @ jac + grad[0] * h_a + grad[1] * h_t


def find_critical_points(surface: SplineSurface, X, domain: MprDomain, scan: int = 200,
                         tol: float = 1e-10) -> list:
    """Interior zeros of the projected-loss gradient.

    A dense scan flags cells where both gradient components change sign; each
    flag seeds a root polish.  The Girsanov map is a diffeomorphism, so these
    are also the critical points in (lambda0, lambda1).
    """
    a_lo, a_hi = surface.alphas[0], surface.alphas[-1]
    t_lo, t_hi = surface.thetas[0], surface.thetas[-1]
    ag = np.linspace(a_lo, a_hi, scan + 1)
    tg = np.linspace(t_lo, t_hi, scan + 1)
    aa, tt = np.meshgrid(ag, tg, indexing="ij")
    ga, gt = surface.gradient(aa, tt)

    def changes(f):
        corners = np.stack([f[:-1, :-1], f[1:, :-1], f[:-1, 1:], f[1:, 1:]])
        return (corners.min(axis=0) <= 0.0) & (corners.max(axis=0) >= 0.0)

    cells = np.argwhere(changes(ga) & changes(gt))
    span = np.array([a_hi - a_lo, t_hi - t_lo])
    found = []
    for i, j in cells:
        x0 = np.array([0.5 * (ag[i] + ag[i + 1]), 0.5 * (tg[j] + tg[j + 1])])
        sol = optimize.root(lambda u: surface.gradient(*(u * span)) * span, x0 / span, method="hybr",
                            options={"xtol": tol})
        a, t = sol.x * span
        if not sol.success or not (a_lo < a < a_hi and t_lo < t < t_hi):
            continue
        if any(abs(a - c.alpha) < span[0] / scan and abs(t - c.theta) < span[1] / scan for c in found):
            continue
        lam0, lam1 = domain.to_lambda(a, t)
        w = surface.allocation(a, t)
        found.append(CriticalPoint(float(a), float(t), float(lam0), float(lam1), w,
                                   float(surface.projected_loss(a, t))))
    return found


@dataclass(frozen=True)
class BoundarySolution:
    edge: str
    alpha: float
    theta: float
    lambda0: float
    lambda1: float
    allocation: np.ndarray
    loss: float


@dataclass(frozen=True)
class SaddleReport:
    critical_points: list
    boundary_solutions: list
    selected: list = field(default_factory=list)

    @property
    def saddles(self) -> list:
        return [c for c in self.critical_points if c.classification == "saddle"]


def classify(point: CriticalPoint, surface: SplineSurface, domain: MprDomain) -> CriticalPoint:
    try:
        eig = np.linalg.eigvalsh(_lambda_hessian(surface, domain, point.alpha, point.theta))
    except (np.linalg.LinAlgError, ValueError):
        return point
    if not np.all(np.isfinite(eig)):
        return point
    if np.all(eig < 0.0):
        label = "saddle"  # local max in lambda; convex in w by construction
    elif np.all(eig > 0.0):
        label = "min"
    else:
        label = "indefinite"
    return CriticalPoint(point.alpha, point.theta, point.lambda0, point.lambda1, point.allocation,
                         point.loss, eig, label)


def _inward_derivative(surface: SplineSurface, edge: str, a, t) -> float:
    """Derivative of g along the inward normal of ``edge`` in (alpha, theta)."""
    ga, gt = surface.gradient(a, t)
    return float({"alpha_min": ga, "alpha_max": -ga, "theta_min": gt, "theta_max": -gt}[edge])


def _edge(surface: SplineSurface, edge: str):
    """Parameter range and point map of an edge, with the edges met at its two ends."""
    a_lo, a_hi = surface.alphas[0], surface.alphas[-1]
    t_lo, t_hi = surface.thetas[0], surface.thetas[-1]
    if edge in ("alpha_min", "alpha_max"):
        a = a_lo if edge == "alpha_min" else a_hi
        return (t_lo, t_hi), (lambda x: (a, x)), ("theta_min", "theta_max")
    t = t_lo if edge == "theta_min" else t_hi
    return (a_lo, a_hi), (lambda x: (x, t)), ("alpha_min", "alpha_max")


def boundary_solutions(surface: SplineSurface, domain: MprDomain, samples: int = 400) -> list:
    """Boundary points where no admissible direction increases the projected loss.

    Along each edge the 1-D local maxima of g are located (endpoints count
    when g decreases away from them); a candidate is kept if g does not
    increase along the inward normal.  Corners must pass the test of both
    edges and are reported once.
    """
    out = []
    for edge in EDGES:
        (lo, hi), point, ends = _edge(surface, edge)
        s = np.linspace(lo, hi, samples + 1)
        g = np.array([surface.projected_loss(*point(x)) for x in s])
        cands = []
        for k in range(1, samples):
            if g[k] >= g[k - 1] and g[k] >= g[k + 1]:
                res = optimize.minimize_scalar(lambda x: -surface.projected_loss(*point(x)),
                                               bounds=(s[k - 1], s[k + 1]), method="bounded",
                                               options={"xatol": 1e-10 * (hi - lo)})
                cands.append((float(res.x), None))
        if g[0] >= g[1]:
            cands.append((float(lo), ends[0]))
        if g[-1] >= g[-2]:
            cands.append((float(hi), ends[1]))
        for x, other in cands:
            a, t = map(float, point(x))
            if _inward_derivative(surface, edge, a, t) > 0.0:
                continue
            if other is not None and _inward_derivative(surface, other, a, t) > 0.0:
                continue
            if any(abs(a - b.alpha) <= 1e-9 * abs(a) and abs(t - b.theta) <= 1e-12 for b in out):
                continue
            lam0, lam1 = domain.to_lambda(a, t)
            out.append(BoundarySolution(edge, a, t, float(lam0), float(lam1), surface.allocation(a, t),
                                        float(surface.projected_loss(a, t))))
    return out


def classify_and_boundary(candidates, surface: SplineSurface, X, domain: MprDomain,
                          samples: int = 400) -> SaddleReport:
    points = [classify(c, surface, domain) for c in candidates]
    edges = boundary_solutions(surface, domain, samples)
    selected = [p for p in points if p.classification == "saddle"] + edges
    return SaddleReport(points, edges, selected)


def compass_check(surface: SplineSurface, domain: MprDomain, point, fraction: float = 0.01) -> np.ndarray:
    """Change of g under 8 compass moves in lambda of size ``fraction`` of the domain diameter.

    The allocation is held at its value at ``point``; moves leaving the
    domain are reported as NaN.
    """
    geo = build_domain(domain)
    step = fraction * geo.diameter
    w = surface.allocation(point.alpha, point.theta)
    x = surface.X

    def loss_at(a, t):
        return float(w @ x @ w - 2.0 * surface.y(a, t) @ w + surface.z(a, t))

    base = loss_at(point.alpha, point.theta)
    out = []
    for ang in np.arange(8) * np.pi / 4:
        lam0 = point.lambda0 + step * np.cos(ang)
        lam1 = point.lambda1 + step * np.sin(ang)
        a, t = domain.to_alpha_theta(lam0, lam1)
        inside = (surface.alphas[0] <= a <= surface.alphas[-1]) and (surface.thetas[0] <= t <= surface.thetas[-1])
        out.append(loss_at(a, t) - base if inside else np.nan)
    return np.array(out)


def ascent_trajectories(surface: SplineSurface, starts, step: float = 0.02, n_steps: int = 2000,
                        tol: float = 1e-7) -> list:
    """Projected gradient-ascent paths of g in range-normalized (alpha, theta) coordinates.

    Each path moves by ``step`` (unit-square units) along the normalized
    ascent direction, shrinking the step when g stops increasing, and is
    clipped to the rectangle.
    """
    lo = np.array([surface.alphas[0], surface.thetas[0]])
    span = np.array([surface.alphas[-1], surface.thetas[-1]]) - lo
    paths = []
    for start in starts:
        u = (np.asarray(start, dtype=float) - lo) / span
        g_now = surface.projected_loss(*(lo + u * span))
        h = step
        track = [lo + u * span]
        for _ in range(n_steps):
            grad = surface.gradient(*(lo + u * span)) * span
            norm = np.linalg.norm(grad)
            if norm == 0.0 or h < tol:
                break
            trial = np.clip(u + h * grad / norm, 0.0, 1.0)
            g_trial = surface.projected_loss(*(lo + trial * span))
            if g_trial > g_now and np.linalg.norm(trial - u) > 0.0:
                u, g_now = trial, g_trial
                track.append(lo + u * span)
            else:
                h *= 0.5
        paths.append(np.array(track))
    return paths


def semi_robustness(surface: SplineSurface, saddle_alpha: float, scan: int = 200) -> dict:
    """Compare |dg/dalpha| on the curve dg/dtheta = 0 (alpha above the saddle) with |dg/dtheta|.

    Returns the largest |dg/dalpha| found on the curve, the 10th percentile of
    |dg/dtheta| over the rectangle and whether the former is below the latter.
    """
    ag = np.linspace(surface.alphas[0], surface.alphas[-1], scan + 1)
    tg = np.linspace(surface.thetas[0], surface.thetas[-1], scan + 1)
    aa, tt = np.meshgrid(ag, tg, indexing="ij")
    ga, gt = surface.gradient(aa, tt)
    p10 = float(np.percentile(np.abs(gt), 10))
    on_curve = []
    for i, a in enumerate(ag):
        if a <= saddle_alpha:
            continue
        row = gt[i]
        for j in np.nonzero(np.sign(row[:-1]) * np.sign(row[1:]) <= 0)[0]:
            frac = row[j] / (row[j] - row[j + 1]) if row[j] != row[j + 1] else 0.0
            t = tg[j] + frac * (tg[j + 1] - tg[j])
            on_curve.append(abs(float(surface.gradient(a, t)[0])))
    worst = max(on_curve) if on_curve else float("nan")
    return {"max_abs_dalpha_on_curve": worst, "p10_abs_dtheta": p10,
            "semi_robust": bool(on_curve) and worst < p10}


def mpr_of_node(domain: MprDomain, alpha: float, theta: float) -> MarketPriceOfRisk:
    lam0, lam1 = domain.to_lambda(alpha, theta)
    return MarketPriceOfRisk(float(lam0), float(lam1))


def roundtrip_error(domain: MprDomain, lambda0: float, lambda1: float) -> float:
    """|lambda - to_lambda(girsanov_map(lambda))|, a consistency measure of the two maps."""
    ou_q = girsanov_map(domain.ou_p, MarketPriceOfRisk(lambda0, lambda1))
    back = domain.to_lambda(ou_q.alpha_b, ou_q.theta_b)
    return float(np.hypot(back[0] - lambda0, back[1] - lambda1))
