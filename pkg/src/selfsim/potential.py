"""Dirichlet energies and p-capacities on level graphs.

Edge weights of a level graph give ``W[v, w] = sum_g mu(g) [g v = w]``; the
energy of ``f`` is ``1/2 sum_{v,w} W[v,w] |f(v) - f(w)|^p``, which equals
``sum_{v<w} C[v,w] |f(v) - f(w)|^p`` with ``C = (W + W^T) / 2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pyamg
from scipy.sparse import csr_matrix, diags, triu
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import cg

from .machine import Machine
from .nucleus import Nucleus
from .schreier import LevelGraph, level_graph, level_permutation, suffix_cylinder, tiles_disjoint


class SolverDiverged(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3g})")
        self.residual = residual


class TilesNotDisjoint(ValueError):
    pass


@dataclass
class CapacityProblem:
    graph: LevelGraph | csr_matrix
    A: np.ndarray
    B: np.ndarray
    p: float = 2.0

    def __post_init__(self):
        self.A = np.unique(np.asarray(self.A, dtype=np.int64))
        self.B = np.unique(np.asarray(self.B, dtype=np.int64))
        if len(self.A) == 0 or len(self.B) == 0:
            raise ValueError("A and B must be nonempty")
        if np.intersect1d(self.A, self.B).size:
            raise ValueError("A and B must be disjoint")
        if self.p < 1:
            raise ValueError("p must be at least 1")

    def conductance(self) -> csr_matrix:
        if isinstance(self.graph, LevelGraph):
            return self.graph.conductance()
        c = csr_matrix(self.graph)
        c = ((c + c.T) * 0.5).tolil()
        c.setdiag(0)
        return c.tocsr()


@dataclass
class PotentialSolution:
    values: np.ndarray
    capacity: float
    residual: float
    iterations: int
    method: str
    converged: bool = True
    disconnected: bool = False
    history: list = field(default_factory=list)


def dirichlet_energy(c: csr_matrix, f: np.ndarray, p: float) -> float:
    u = triu(c, k=1).tocoo()
    return float(np.sum(u.data * np.abs(f[u.row] - f[u.col]) ** p))


def _split(c: csr_matrix, A, B):
    """Interior vertices that can carry potential, plus the disconnected flag."""
    n = c.shape[0]
    boundary = np.zeros(n, dtype=bool)
    boundary[A] = True
    boundary[B] = True
    _, comp = connected_components(c, directed=False)
    connected = bool(np.intersect1d(comp[A], comp[B]).size)
    # interior vertices in components touching the boundary
    live_comps = np.unique(comp[boundary])
    live = np.isin(comp, live_comps) & ~boundary
    return np.flatnonzero(live), connected


AMG_THRESHOLD = 20_000


def _solve_dirichlet(c: csr_matrix, A, B, interior, tol: float, maxiter: int, x0=None):
    """Harmonic extension; Jacobi-preconditioned CG, or AMG-preconditioned CG on large systems."""
    n = c.shape[0]
    f = np.zeros(n)
    f[A] = 1.0
    if len(interior) == 0:
        return f, 0.0, 0
    deg = np.asarray(c.sum(axis=1)).ravel()
    c_ii = c[interior][:, interior]
    lap = (diags(deg[interior]) - c_ii).tocsr()
    rhs = np.asarray(c[interior][:, A].sum(axis=1)).ravel()
    if len(interior) > AMG_THRESHOLD:
        precond = pyamg.smoothed_aggregation_solver(lap, symmetry="symmetric").aspreconditioner()
    else:
        precond = diags(1.0 / np.where(deg[interior] > 0, deg[interior], 1.0))
    count = [0]

    def step(_):
        count[0] += 1

    x, info = cg(lap, rhs, x0=x0, rtol=tol, atol=0.0, maxiter=maxiter, M=precond, callback=step)
    residual = float(np.linalg.norm(rhs - lap @ x))
    if info != 0:
        raise SolverDiverged("conjugate gradient did not converge", residual)
    f[interior] = x
    return f, residual, count[0]


def capacity2(prob: CapacityProblem, tol: float = 1e-10, maxiter: int = 100_000) -> PotentialSolution:
    """Exact 2-capacity via the harmonic extension (preconditioned CG)."""
    c = prob.conductance()
    interior, connected = _split(c, prob.A, prob.B)
    if not connected:
        f = np.zeros(c.shape[0])
        f[prob.A] = 1.0
        return PotentialSolution(f, 0.0, 0.0, 0, "cg", disconnected=True)
    f, residual, its = _solve_dirichlet(c, prob.A, prob.B, interior, tol, maxiter)
    return PotentialSolution(f, dirichlet_energy(c, f, 2.0), residual, its, "cg")


def capacity_p(prob: CapacityProblem, tol: float = 1e-10, maxiter: int = 500,
               floor: float = 1e-12) -> PotentialSolution:
    """p-capacity by iteratively reweighted least squares.

    Each step solves the weighted Laplacian problem with weights
    ``C |grad f|^(p-2)`` (gradients floored at ``floor``) and backtracks
    by halving until the p-energy does not increase.
    """
    p = prob.p
    start = capacity2(prob, tol=min(tol, 1e-10))
    if p == 2.0 or start.disconnected:
        start.method = "irls"
        return start
    c = prob.conductance()
    u = triu(c, k=1).tocoo()
    n = c.shape[0]
    interior, _ = _split(c, prob.A, prob.B)
    f = start.values
    energy = dirichlet_energy(c, f, p)
    history = [energy]
    converged = False
    it = 0
    for it in range(1, maxiter + 1):
        grad = np.maximum(np.abs(f[u.row] - f[u.col]), floor)
        w = u.data * grad ** (p - 2)
        cw = csr_matrix((np.concatenate([w, w]), (np.concatenate([u.row, u.col]), np.concatenate([u.col, u.row]))),
                        shape=(n, n))
        target, _, _ = _solve_dirichlet(cw, prob.A, prob.B, interior, 1e-12, 100_000, x0=f[interior])
        step = 1.0
        while True:
            trial = f + step * (target - f)
            e = dirichlet_energy(c, trial, p)
            if e <= energy or step < 1e-6:
                break
            step *= 0.5
        change = abs(energy - e) / max(energy, 1e-300)
        if e <= energy:
            f, energy = trial, e
        history.append(energy)
        if change < tol:
            converged = True
            break
    return PotentialSolution(f, energy, change, it, "irls", converged=converged, history=history)


def capacity(prob: CapacityProblem, **kw) -> PotentialSolution:
    return capacity2(prob, **kw) if prob.p == 2.0 else capacity_p(prob, **kw)


# --- Monte-Carlo --------------------------------------------------------------------

@dataclass
class McEstimate:
    estimate: float
    stderr: float
    trials: int
    steps: int


def capacity_mc(machine: Machine, weights: dict, n: int, A, B, trials: int, seed: int = 0,
                max_steps: int = 10_000_000) -> McEstimate:
    """Estimate ``sum_{a in A} P_a(walk hits B before returning to A)``.

    ``weights`` is a symmetric probability measure given as label -> mass.
    Staying put at time 1 counts as a return.
    """
    labels = list(weights)
    probs = np.array([weights[k] for k in labels], dtype=float)
    if abs(probs.sum() - 1.0) > 1e-12:
        raise ValueError("measure must sum to 1")
    states = [machine.canonical(machine.group.word(k)) for k in labels]
    perms = np.stack([level_permutation(machine, s, n) for s in states])
    size = perms.shape[1]
    A = np.unique(np.asarray(A, dtype=np.int64))
    B = np.unique(np.asarray(B, dtype=np.int64))
    tag = np.zeros(size, dtype=np.int8)
    tag[A] = 1
    tag[B] = 2
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    pos = A[rng.integers(len(A), size=trials)]
    hit = np.zeros(trials, dtype=bool)
    active = np.arange(trials)
    cum = np.cumsum(probs)
    steps = 0
    while len(active) and steps < max_steps:
        steps += 1
        k = np.searchsorted(cum, rng.random(len(active)), side="right")
        k = np.minimum(k, len(labels) - 1)
        pos[active] = perms[k, pos[active]]
        t = tag[pos[active]]
        hit[active[t == 2]] = True
        active = active[t == 0]
    if len(active):
        raise SolverDiverged("Monte-Carlo walks did not stop", float(len(active)))
    mean = hit.mean()
    stderr = hit.std(ddof=1) / np.sqrt(trials) if trials > 1 else float("nan")
    return McEstimate(len(A) * float(mean), len(A) * float(stderr), trials, steps)


# --- decay scans ---------------------------------------------------------------------

def capacity_decay_scan(machine: Machine, nucleus: Nucleus, weights: dict, u_A, u_B, levels, p: float = 2.0,
                        tol: float = 1e-10) -> list[dict]:
    """Capacities between the suffix cylinders of ``u_A`` and ``u_B`` on each level."""
    u_A, u_B = tuple(u_A), tuple(u_B)
    k = max(len(u_A), len(u_B))
    pad_A = [u for u in _extensions(u_A, k, machine.d)]
    pad_B = [u for u in _extensions(u_B, k, machine.d)]
    if not all(tiles_disjoint(machine, nucleus, a, b) for a in pad_A for b in pad_B):
        raise TilesNotDisjoint(f"tiles {u_A} and {u_B} intersect")
    out = []
    for n in levels:
        if n < k:
            continue
        g = level_graph(machine, n, weights)
        prob = CapacityProblem(g, suffix_cylinder(u_A, machine.d, n), suffix_cylinder(u_B, machine.d, n), p)
        sol = capacity(prob, tol=tol)
        out.append({"level": n, "capacity": sol.capacity, "residual": sol.residual,
                    "iterations": sol.iterations, "method": sol.method})
    return out


def _extensions(u, k, d):
    """Words of length ``k`` ending with ``u``."""
    if len(u) == k:
        return [u]
    out = []
    for i in range(d ** (k - len(u))):
        head = []
        for _ in range(k - len(u)):
            i, r = divmod(i, d)
            head.append(r)
        out.append(tuple(reversed(head)) + u)
    return out
