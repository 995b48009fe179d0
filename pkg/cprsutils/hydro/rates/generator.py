# cprsutils/hydro/rates/generator.py
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy import linalg
from scipy.sparse.linalg import spsolve
from scipy.stats import poisson

from cprsutils.hydro.config.model_params import ModelParams
from cprsutils.hydro.errors import StateSpaceTooLargeError
from cprsutils.hydro.logging_utils import get_logger, kv
from cprsutils.lattice.core import Configuration, Geometry

log = get_logger(__name__)

MAX_ORACLE_SITES = 8
# Poisson windows longer than this are split into sub-steps
_MAX_UNIFORM_WINDOW = 200.0


@dataclass(frozen=True)
class GeneratorMatrix:
    """
    Rate matrix over all 4**n configurations of a tiny lattice.

    Configuration index c = sum_k state(k) * 4**k (site 0 least significant),
    matching Configuration.state_index().
    """
    geometry: Geometry
    matrix: sp.csr_matrix

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def rate(self, c_from: int, c_to: int) -> float:
        return float(self.matrix[c_from, c_to])

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def uniformization_rate(self) -> float:
        return float(np.max(-self.matrix.diagonal())) if self.dimension else 0.0


def _digits(n_sites: int) -> np.ndarray:
    c = np.arange(4 ** n_sites, dtype=np.int64)
    return np.stack([(c >> (2 * k)) & 3 for k in range(n_sites)], axis=1)


def build_generator(geometry: Geometry, params: ModelParams, box_M: int | None = None) -> GeneratorMatrix:
    """
    Assemble the full generator (reaction + exchange + reservoirs, toggles
    respected). With box_M set, the restricted process instead.
    """
    n = geometry.n_sites
    if n > MAX_ORACLE_SITES:
        raise StateSpaceTooLargeError(
            f"oracle is capped at {MAX_ORACLE_SITES} sites (4**{MAX_ORACLE_SITES} states), got {n}"
        )
    p = params.as_float()
    D = _digits(n)
    S = D.shape[0]
    c = np.arange(S, dtype=np.int64)
    pow4 = 4 ** np.arange(n, dtype=np.int64)

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []

    def emit(mask: np.ndarray, target: np.ndarray, rate: np.ndarray | float) -> None:
        rate = np.broadcast_to(np.asarray(rate, dtype=float), mask.shape)
        keep = mask & (rate > 0)
        rows.append(c[keep])
        cols.append(target[keep])
        vals.append(rate[keep])

    def inside(x: int) -> bool:
        return box_M is None or geometry.in_box(x, box_M)

    if p.reaction_on:
        for x in range(n):
            if not inside(x):
                continue
            s = D[:, x]
            nbrs = [y for y in geometry.neighbor_table[x] if inside(y)]
            n1 = sum((D[:, y] == 1).astype(float) for y in nbrs) if nbrs else np.zeros(S)
            n3 = sum((D[:, y] == 3).astype(float) for y in nbrs) if nbrs else np.zeros(S)
            b = p.lambda1 * n1 + p.lambda2 * n3

            omega = (s >> 1) & 1
            emit(np.ones(S, dtype=bool), c + ((s ^ 2) - s) * pow4[x], np.where(omega == 0, p.r, 1.0))
            xi = s & 1
            emit(np.ones(S, dtype=bool), c + ((s ^ 1) - s) * pow4[x], np.where(xi == 0, b, 1.0))

    if p.exchange_on:
        for x, y, _ in geometry.bond_table:
            if not (inside(x) and inside(y)):
                continue
            sx, sy = D[:, x], D[:, y]
            target = c + (sy - sx) * pow4[x] + (sx - sy) * pow4[y]
            emit(sx != sy, target, float(p.n2))

    if p.boundary_on:
        for x in geometry.boundary_sites:
            if not inside(x):
                continue
            bfull = p.b_hat.full(geometry.boundary_side(x))
            s = D[:, x]
            for j in range(4):
                emit(s != j, c + (j - s) * pow4[x], float(p.n2) * float(bfull[j]))

    if rows:
        r = np.concatenate(rows)
        k = np.concatenate(cols)
        v = np.concatenate(vals)
    else:
        r = k = np.zeros(0, dtype=np.int64)
        v = np.zeros(0)

    off = sp.coo_matrix((v, (r, k)), shape=(S, S)).tocsr()
    off.sum_duplicates()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    Q = (off + sp.diags(diag)).tocsr()
    Q.eliminate_zeros()
    log.debug(kv("generator_built", sites=n, states=S, nnz=Q.nnz))
    return GeneratorMatrix(geometry, Q)


def point_mass(gen: GeneratorMatrix, config: Configuration) -> np.ndarray:
    v = np.zeros(gen.dimension)
    v[config.state_index()] = 1.0
    return v


def stationary_distribution(gen: GeneratorMatrix) -> np.ndarray:
    """
    A probability vector pi with pi Q = 0. Assumes a unique stationary law
    (one closed class); transient states get mass 0.
    """
    S = gen.dimension
    if S <= 1024:
        A = np.vstack([gen.dense().T, np.ones((1, S))])
        rhs = np.zeros(S + 1)
        rhs[-1] = 1.0
        pi, *_ = linalg.lstsq(A, rhs)
    else:
        A = gen.matrix.T.tolil()
        A[S - 1, :] = np.ones(S)
        rhs = np.zeros(S)
        rhs[-1] = 1.0
        pi = spsolve(A.tocsr(), rhs)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def transient_distribution(
    gen: GeneratorMatrix, init: np.ndarray, t: float, *, tol: float = 1e-11
) -> np.ndarray:
    """
    init @ expm(t Q) by uniformization.

    With L = max |q_ii| and P = I + Q/L, the law at t is a Poisson(L t)
    mixture of init @ P^k. The series is cut where the Poisson tail drops
    below `tol`; long windows are split so each piece has L*dt <= 200.
    """
    v = np.asarray(init, dtype=float).copy()
    if v.shape != (gen.dimension,):
        raise ValueError(f"init must have shape ({gen.dimension},), got {v.shape}")
    if abs(v.sum() - 1.0) > 1e-9 or (v < 0).any():
        raise ValueError("init must be a probability vector")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")

    L = gen.uniformization_rate()
    if t == 0 or L == 0:
        return v

    n_sub = max(1, math.ceil(L * t / _MAX_UNIFORM_WINDOW))
    mu = L * t / n_sub
    tol_sub = tol / n_sub
    K = int(poisson.isf(tol_sub, mu)) + 1
    weights = poisson.pmf(np.arange(K + 1), mu)
    PT = (sp.identity(gen.dimension, format="csr") + gen.matrix / L).T.tocsr()

    for _ in range(n_sub):
        term = v
        acc = weights[0] * term
        for k in range(1, K + 1):
            term = PT @ term
            acc = acc + weights[k] * term
        v = acc

    log.debug(kv("uniformization", rate=L, t=t, substeps=n_sub, terms=K, mass=float(v.sum())))
    return v


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
