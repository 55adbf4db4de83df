"""Joint power-allocation and energy-transfer optimizer.

Maximizes the weighted sum rate of a ZF-precoded cluster subject to per-BS
power budgets coupled by lossy inter-BS energy transfers.  The problem is
concave with affine constraints, so it is solved through its dual: pricing
each BS budget with a multiplier mu_i, the per-terminal power allocation
has a water-filling closed form, the dual is minimized with the ellipsoid
method over the cone {mu >= 0, beta_ij mu_j <= mu_i}, and a feasible
transfer pattern is recovered from the optimal powers with a small LP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ZfGains
from .energy import EnergyState, TransferModel, as_beta_matrix
from .simplex import InfeasibleError, phase1_feasible

LN2 = math.log(2.0)

# Transfers below this fraction of the energy scale are flushed to zero
# during the unidirectionality post-processing.
FLOW_FLOOR = 1e-11


class InvalidDualError(ValueError):
    """Dual point violates the boundedness conditions (e.g. all-zero mu)."""


class ConvergenceError(RuntimeError):
    """Ellipsoid iteration budget exhausted before the tolerance was met."""

    def __init__(self, msg: str, best_mu: np.ndarray):
        super().__init__(msg)
        self.best_mu = best_mu


@dataclass(frozen=True)
class DualState:
    """Per-BS dual prices of the power constraints."""

    mu: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", np.atleast_1d(np.asarray(self.mu, dtype=float)))

    def validate(self, beta=None, tol: float = 1e-10):
        mu = self.mu
        if np.any(mu < -tol) or np.all(mu <= tol):
            raise InvalidDualError("dual prices must be nonnegative, not all zero")
        if beta is not None:
            bm = as_beta_matrix(beta, mu.size)
            if np.max(bm * mu[None, :] - mu[:, None]) > tol:
                raise InvalidDualError("dual prices violate the transfer cone")


@dataclass(frozen=True)
class Solution:
    """Primal/dual solution of the joint cooperation problem."""

    p: np.ndarray              # per-MT transmit powers
    e: np.ndarray              # N x N transfer pattern
    mu: DualState
    rates: np.ndarray          # per-MT rates (bps/Hz, bandwidth share included)
    objective: float           # weighted sum rate
    net_exchange: np.ndarray   # per-BS grid draw (+) / injection (-)
    dual_value: float
    duality_gap: float
    iterations: int


def dual_power_alloc(gains: ZfGains, mu: DualState) -> np.ndarray:
    """Water-filling powers maximizing the Lagrangian at fixed prices."""
    mu.validate()
    s = gains.b.T @ mu.mu
    if np.any(s <= 0):
        raise InvalidDualError("some terminal sees a zero aggregate price")
    return np.maximum(gains.weights / (LN2 * s) - 1.0 / gains.a, 0.0)


def dual_subgradient(gains: ZfGains, es: EnergyState, p: np.ndarray) -> np.ndarray:
    """Subgradient of the dual function: per-BS budget minus spent power."""
    return es.budget - gains.b @ np.asarray(p, dtype=float)


def net_exchange(gains: ZfGains, p_star: np.ndarray, es: EnergyState) -> np.ndarray:
    """Per-BS power drawn from (+) or injected into (-) the grid."""
    return gains.b @ np.asarray(p_star, dtype=float) - es.budget


# ---------------------------------------------------------------------------
# dual minimization


def _merge_lossless_groups(beta: np.ndarray) -> list[list[int]]:
    """Union BSs connected by loss-free transfers in both directions.

    beta_ij = beta_ji = 1 forces mu_i = mu_j in the dual cone, which makes
    the feasible set lower-dimensional; collapsing those BSs into one dual
    variable keeps the ellipsoid method well posed.
    """
    n = beta.shape[0]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if beta[i, j] >= 1.0 and beta[j, i] >= 1.0:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


class _DualProblem:
    """Reduced dual problem over merged BS groups."""

    def __init__(self, gains: ZfGains, es: EnergyState, beta: np.ndarray):
        self.groups = _merge_lossless_groups(beta)
        self.n = len(self.groups)
        self.w = gains.weights
        self.a = gains.a
        self.bg = np.array([gains.b[g].sum(axis=0) for g in self.groups])
        self.eg = np.array([es.budget[g].sum() for g in self.groups])
        # Cross-group cone constraints keep the tightest (largest) efficiency.
        self.betag = np.zeros((self.n, self.n))
        for gi, grp_i in enumerate(self.groups):
            for gj, grp_j in enumerate(self.groups):
                if gi != gj:
                    self.betag[gi, gj] = beta[np.ix_(grp_i, grp_j)].max()

    def powers(self, x: np.ndarray) -> np.ndarray:
        s = np.maximum(self.bg.T @ x, 1e-300)
        return np.maximum(self.w / (LN2 * s) - 1.0 / self.a, 0.0)

    def value(self, x: np.ndarray) -> float:
        s = np.maximum(self.bg.T @ x, 1e-300)
        p = np.maximum(self.w / (LN2 * s) - 1.0 / self.a, 0.0)
        val = np.sum(self.w * np.log2(1.0 + self.a * p) - s * p)
        return float(val + x @ self.eg)

    def subgradient(self, x: np.ndarray) -> np.ndarray:
        return self.eg - self.bg @ self.powers(x)

    def violated_cut(self, x: np.ndarray):
        """Gradient of the most violated cone constraint, or None."""
        worst, cut = 0.0, None
        for i in range(self.n):
            if x[i] < -0.0 and -x[i] > worst:
                worst = -x[i]
                g = np.zeros(self.n)
                g[i] = -1.0
                cut = g
        viol = self.betag * x[None, :] - x[:, None]
        np.fill_diagonal(viol, -np.inf)
        i, j = np.unravel_index(int(np.argmax(viol)), viol.shape)
        if self.betag[i, j] > 0 and viol[i, j] > worst and viol[i, j] > 0:
            g = np.zeros(self.n)
            g[i] = -1.0
            g[j] = self.betag[i, j]
            cut = g
        return cut

    def expand(self, x: np.ndarray) -> np.ndarray:
        mu = np.empty(sum(len(g) for g in self.groups))
        for gi, grp in enumerate(self.groups):
            mu[grp] = x[gi]
        return mu

    def radius(self) -> float:
        """Ball around the init point guaranteed to contain a dual optimum.

        Whenever some terminal transmits, its aggregate price is at most
        w_k a_k / ln 2, which caps each group price through that
        terminal's cost coefficient.
        """
        caps = self.w * self.a / LN2 / np.maximum(self.bg, 1e-12)
        upper = np.max(np.where(self.bg > 1e-12, caps, 0.0), axis=1)
        upper = np.where(upper > 0, upper, np.max(self.w * self.a) / LN2)
        return float(np.linalg.norm(upper) + math.sqrt(self.n) + 1.0)


def _minimize_dual_1d(prob: _DualProblem, tol: float) -> tuple[float, int]:
    """Bisection on the scalar dual when all groups merged (or N = 1)."""
    hi = max(float(np.max(prob.w * prob.a / (LN2 * np.maximum(prob.bg[0], 1e-12)))), 1.0)
    lo = min(tol, 1e-12) * 1e-3
    it = 0
    for it in range(200):
        mid = 0.5 * (lo + hi)
        g = prob.subgradient(np.array([mid]))[0]
        if g >= 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-16 * max(hi, 1.0):
            break
    return hi, it + 1


def _minimize_dual_ellipsoid(prob: _DualProblem, tol: float,
                             max_iter: int) -> tuple[np.ndarray, int, bool]:
    n = prob.n
    x = np.ones(n)
    r = prob.radius()
    a_mat = (r * r) * np.eye(n)
    best_x, best_f = None, np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = prob.violated_cut(x)
        objective_cut = g is None
        if objective_cut:
            f = prob.value(x)
            if f < best_f:
                best_f, best_x = f, x.copy()
            g = prob.subgradient(x)
        ag = a_mat @ g
        gag = float(g @ ag)
        if gag <= 0:
            converged = best_x is not None
            break
        width = math.sqrt(gag)
        if objective_cut and width <= tol:
            converged = True
            break
        if width <= 1e-18:
            converged = best_x is not None
            break
        gn = ag / width
        x = x - gn / (n + 1)
        a_mat = (n * n) / (n * n - 1.0) * (a_mat - (2.0 / (n + 1)) * np.outer(gn, gn))
        a_mat = 0.5 * (a_mat + a_mat.T)
    if best_x is None:
        best_x = np.maximum(x, 0.0)
    return best_x, it, converged


def _polish_dual(prob: _DualProblem, x0: np.ndarray) -> np.ndarray | None:
    """Newton refinement of the reduced KKT system at the ellipsoid point.

    The active structure at x0 fixes a square smooth system: water-filling
    stationarity for transmitting terminals, budget balance for positive
    prices, and equality on the active cone edges (whose multipliers are
    the group-level transfer flows).  Returns the refined price vector, or
    None when the active-set guess does not validate.
    """
    n = prob.n
    scale = max(float(np.max(x0)), 1e-12)
    edges_all = [(g, h) for g in range(n) for h in range(n)
                 if g != h and prob.betag[g, h] > 0]
    p0 = prob.powers(x0)
    active_p = set(np.where(p0 > 1e-8 * max(float(np.max(p0, initial=0.0)), 1.0))[0])
    free = set(np.where(x0 > 1e-7 * scale)[0])
    # Over-include nearly-active edges: spurious ones are pruned when their
    # flow comes out negative, while a missing edge leaves the balance
    # equations inconsistent and stalls the Newton iteration.
    edges = [(g, h) for (g, h) in edges_all
             if prob.betag[g, h] * x0[h] - x0[g] > -1e-3 * scale]

    for _ in range(6):          # active-set adjustment rounds
        ks = sorted(active_p)
        gs = sorted(free)
        if not ks or not gs:
            return None
        nv = len(gs) + len(ks) + len(edges)
        xi = {g: i for i, g in enumerate(gs)}
        pi = {k: len(gs) + i for i, k in enumerate(ks)}
        ei = {gh: len(gs) + len(ks) + i for i, gh in enumerate(edges)}

        x = x0.copy()
        x[[g for g in range(n) if g not in free]] = 0.0
        p = p0.copy()
        e = np.zeros(len(edges))

        def unpack(v):
            xx = np.zeros(n)
            for g in gs:
                xx[g] = v[xi[g]]
            pp = np.zeros(prob.a.size)
            for k in ks:
                pp[k] = v[pi[k]]
            return xx, pp, v[len(gs) + len(ks):]

        v = np.concatenate([[x[g] for g in gs], [p[k] for k in ks], e])
        ok = False
        for _ in range(60):
            xx, pp, ee = unpack(v)
            f = np.zeros(nv)
            jac = np.zeros((nv, nv))
            row = 0
            for k in ks:        # stationarity in p
                s_k = float(prob.bg[:, k] @ xx)
                denom = 1.0 + prob.a[k] * pp[k]
                f[row] = prob.w[k] * prob.a[k] / (LN2 * denom) - s_k
                jac[row, pi[k]] = -prob.w[k] * prob.a[k] ** 2 / (LN2 * denom ** 2)
                for g in gs:
                    jac[row, xi[g]] = -prob.bg[g, k]
                row += 1
            for g in gs:        # budget balance (complementary slackness)
                f[row] = float(prob.bg[g] @ pp) - prob.eg[g]
                for k in ks:
                    jac[row, pi[k]] = prob.bg[g, k]
                for idx, (gi, gj) in enumerate(edges):
                    col = ei[(gi, gj)]
                    if gj == g:
                        f[row] -= prob.betag[gi, gj] * ee[idx]
                        jac[row, col] = -prob.betag[gi, gj]
                    if gi == g:
                        f[row] += ee[idx]
                        jac[row, col] = 1.0
                row += 1
            for (gi, gj) in edges:   # active cone edges
                f[row] = prob.betag[gi, gj] * xx[gj] - xx[gi]
                if gj in xi:
                    jac[row, xi[gj]] = prob.betag[gi, gj]
                if gi in xi:
                    jac[row, xi[gi]] = -1.0
                row += 1
            # The residual lives in price units while the powers respond with
            # a factor ~1/s^2, so take one more step after the residual test
            # before accepting: quadratic convergence squares the power error.
            if ok:
                break
            if float(np.max(np.abs(f))) < 1e-12 * max(scale, 1.0):
                ok = True
            # Equilibrate: stationarity rows are O(a^2) while budget rows are
            # O(1), and the raw system's conditioning caps lstsq accuracy.
            row_s = np.max(np.abs(jac), axis=1)
            row_s[row_s == 0.0] = 1.0
            jac_r = jac / row_s[:, None]
            col_s = np.max(np.abs(jac_r), axis=0)
            col_s[col_s == 0.0] = 1.0
            try:
                step = np.linalg.lstsq(jac_r / col_s[None, :], -f / row_s,
                                       rcond=None)[0] / col_s
            except np.linalg.LinAlgError:
                return None
            if not np.all(np.isfinite(step)):
                return None
            v = v + step
        if not ok:
            # Newton can stall when a nearly-zero price was misread as a
            # tight budget, making the balance equations inconsistent.
            # Drop the free group with the largest surplus and retry.
            slack = prob.subgradient(x0)
            g_drop = max(free, key=lambda g: slack[g])
            if len(free) > 1 and slack[g_drop] > 0:
                free.discard(g_drop)
                continue
            return None
        xx, pp, ee = unpack(v)
        # Validate the active-set guess; shrink it where signs flipped.
        changed = False
        for idx, (gi, gj) in enumerate(list(edges)):
            if ee[idx] < -1e-9 * max(scale, 1.0):
                edges.remove((gi, gj))
                changed = True
        for k in list(active_p):
            if pp[k] < -1e-10:
                active_p.remove(k)
                changed = True
        # Terminals left out of the active set can come back above the water
        # level at the refined prices; transfer recovery sees their power, so
        # the balance equations must too.
        pw = prob.powers(np.maximum(xx, 0.0))
        for k in range(prob.a.size):
            if k not in active_p and pw[k] > 0.0:
                active_p.add(k)
                changed = True
        for g in list(free):
            if xx[g] < -1e-10 * scale:
                free.remove(g)
                changed = True
        if changed:
            continue
        xx = np.maximum(xx, 0.0)
        cone = prob.betag * xx[None, :] - xx[:, None]
        np.fill_diagonal(cone, -np.inf)
        if float(np.max(cone)) > 1e-9 * max(scale, 1.0):
            return None
        if prob.value(xx) > prob.value(x0) + 1e-9 * max(scale, 1.0):
            return None
        return xx
    return None


def solve_dual(gains: ZfGains, es: EnergyState, beta, tol: float = 1e-9,
               max_iter: int | None = None) -> DualState:
    """Minimize the dual function over the transfer cone (ellipsoid method)."""
    mu, _, it, converged = _solve_dual(gains, es, beta, tol, max_iter)
    if not converged:
        raise ConvergenceError(f"dual not converged after {it} cuts", mu)
    return DualState(mu=mu)


def _solve_dual(gains, es, beta, tol, max_iter):
    bm = as_beta_matrix(beta, es.n_bs)
    prob = _DualProblem(gains, es, bm)
    if prob.n == 1:
        t, it = _minimize_dual_1d(prob, tol)
        return prob.expand(np.array([t])), prob, it, True
    if max_iter is None:
        max_iter = 5000 * prob.n * prob.n
    x, it, converged = _minimize_dual_ellipsoid(prob, tol, max_iter)
    polished = _polish_dual(prob, x)
    if polished is not None:
        x = polished
    return prob.expand(x), prob, it, converged


# ---------------------------------------------------------------------------
# transfer recovery


def _cancel_bidirectional(e: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Reroute flows so no BS both sends and receives.

    Keeps the net inflow unchanged at the rerouted BS and the final
    receiver; the original sender only gains slack.  A no-op at a true
    optimum with strictly lossy transfers, where bidirectional patterns
    cannot occur.
    """
    n = e.shape[0]
    e = e.copy()
    scale = max(float(np.max(e)), 1.0)
    e[e < FLOW_FLOOR * scale] = 0.0
    for _ in range(4 * n * n * n):
        inflow = e.sum(axis=0)
        outflow = e.sum(axis=1)
        mid = np.where((inflow > 0) & (outflow > 0))[0]
        if mid.size == 0:
            break
        i = int(mid[0])
        jbar = int(np.argmax(e[:, i]))          # sender into i
        jtil = int(np.argmax(e[i, :]))          # receiver from i
        if jbar == jtil:
            # Two-BS cycle: cancel; the counterpart keeps its net inflow.
            x = min(e[jbar, i], e[i, jbar] / max(beta[jbar, i], 1e-300))
            e[jbar, i] -= x
            e[i, jbar] -= beta[jbar, i] * x
        elif beta[jbar, jtil] > 0:
            x = min(e[jbar, i], e[i, jtil] / max(beta[jbar, i], 1e-300))
            e[jbar, i] -= x
            e[i, jtil] -= beta[jbar, i] * x
            e[jbar, jtil] += beta[jbar, i] * beta[i, jtil] * x / beta[jbar, jtil]
        else:
            break
        e[e < FLOW_FLOOR * scale] = 0.0
    return np.maximum(e, 0.0)


def recover_transfers(p_star, es: EnergyState, beta, gains: ZfGains | None = None,
                      b: np.ndarray | None = None, tol: float = 1e-7) -> np.ndarray:
    """Feasible transfer pattern for the optimal powers (phase-1 LP).

    Finds e >= 0 with spent_i <= E_i + sum_j beta_ji e_ji - sum_j e_ij at
    every BS, then reroutes any bidirectional flows away.  Raises
    InfeasibleError when no pattern covers the deficits, which signals
    that ``p_star`` is not primal optimal.
    """
    if b is None:
        b = gains.b
    n = es.n_bs
    bm = as_beta_matrix(beta, n)
    deficit = b @ np.asarray(p_star, dtype=float) - es.budget
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j and bm[i, j] > 0]
    if not pairs:
        if np.max(deficit) > tol * max(1.0, float(np.max(es.budget, initial=1.0))):
            raise InfeasibleError(float(np.max(deficit)))
        return np.zeros((n, n))
    # Row i: sum_j e_ij - sum_j beta_ji e_ji + slack_i = -deficit_i.
    a_eq = np.zeros((n, len(pairs) + n))
    for col, (i, j) in enumerate(pairs):
        a_eq[i, col] += 1.0
        a_eq[j, col] -= bm[i, j]
    a_eq[:, len(pairs):] = np.eye(n)
    x = phase1_feasible(a_eq, -deficit, tol=tol)
    e = np.zeros((n, n))
    for col, (i, j) in enumerate(pairs):
        e[i, j] = x[col]
    return _cancel_bidirectional(e, bm)


# ---------------------------------------------------------------------------
# full pipeline


def _forced_zero_terminals(gains: ZfGains, es: EnergyState,
                           bm: np.ndarray) -> np.ndarray:
    """Terminals whose power is pinned to zero by an unreachable budget.

    A BS with zero budget and no (possibly multi-hop) inflow from a
    positive-budget BS forces p_k = 0 for every terminal it must power.
    """
    n = es.n_bs
    eff = bm.copy()
    for m in range(n):          # best multi-hop transfer efficiency
        eff = np.maximum(eff, np.outer(eff[:, m], eff[m, :]))
        np.fill_diagonal(eff, 0.0)
    reachable = es.budget + eff.T @ es.budget
    dead = reachable <= 0.0
    return np.any((gains.b > 1e-12) & dead[:, None], axis=0)


def solve_p1(gains: ZfGains, es: EnergyState, beta, tol: float = 1e-9,
             max_iter: int | None = None, bandwidth: float = 1.0) -> Solution:
    """Solve the joint power-allocation and energy-transfer problem.

    ``bandwidth`` scales every rate (used by the per-BS baseline, which
    splits the band in N orthogonal shares).  The returned objective is
    certified by the reported duality gap.
    """
    if gains.n_bs != es.n_bs:
        raise ValueError("gains and energy state disagree on the BS count")
    bm = as_beta_matrix(beta, es.n_bs)
    k_all = gains.n_mt
    w_eff = gains.weights * bandwidth

    zero_mask = _forced_zero_terminals(gains, es, bm)
    keep = ~zero_mask
    p = np.zeros(k_all)
    if not np.any(keep):
        mu = DualState(mu=np.ones(es.n_bs))
        zeros = np.zeros((es.n_bs, es.n_bs))
        return Solution(p=p, e=zeros, mu=mu, rates=np.zeros(k_all), objective=0.0,
                        net_exchange=-es.budget.copy(), dual_value=0.0,
                        duality_gap=0.0, iterations=0)

    # Normalize the budget scale: p = scale * q maps the problem onto one
    # with O(1) budgets and gains a * scale, which keeps the absolute
    # solver tolerances meaningful at any energy level.
    scale = float(np.max(es.budget))
    es_s = EnergyState(re=es.budget / scale)
    sub = ZfGains(a=gains.a[keep] * scale, b=gains.b[:, keep],
                  t_dir=gains.t_dir[keep], weights=w_eff[keep])
    mu_vec, prob, iters, converged = _solve_dual(sub, es_s, bm, tol, max_iter)
    if not converged:
        raise ConvergenceError(f"dual not converged after {iters} cuts", mu_vec)

    dual_s = DualState(mu=mu_vec)
    q = np.zeros(k_all)
    q[keep] = dual_power_alloc(sub, dual_s)
    e = scale * recover_transfers(q, es_s, bm, b=gains.b, tol=max(tol, 1e-7))
    p = scale * q
    dual = DualState(mu=mu_vec / scale)

    rates = bandwidth * np.log2(1.0 + gains.a * p)
    objective = float(gains.weights @ rates)
    x_red = np.array([mu_vec[g[0]] for g in prob.groups])
    dual_value = prob.value(x_red)
    return Solution(p=p, e=e, mu=dual, rates=rates, objective=objective,
                    net_exchange=net_exchange(gains, p, es),
                    dual_value=dual_value,
                    duality_gap=float(dual_value - objective),
                    iterations=iters)
