"""Threshold cascades and influence oracles.

Every model is run under the same general-threshold semantics: each vertex v
draws a threshold theta_v uniform on (0, 1], and an uninfected v becomes
infected in the round after f_v(|infected neighbors|, deg(v)) >= theta_v
first holds.  Because every f here depends on the neighbor set only through
its size, a threshold draw is equivalent to drawing a count class
K_v = min{c : f(c) >= theta_v}: v activates once it has K_v infected
neighbors.  Both oracles work in count-class space, which makes the Monte
Carlo simulator a few matrix operations per round and makes exact
expectations computable by conditioning on one class boundary at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError
from ._rng import DOMAIN_CRN, DOMAIN_INDEPENDENT, generator, seeds_digest

CRN = "CRN"
INDEPENDENT = "INDEPENDENT"

_MODEL_PARAMS = {
    "icm": ("p",),
    "ltm": (),
    "dicm": ("p", "q"),
    "scm": (),
    "twostep": ("eps",),
}


@dataclass(frozen=True)
class CascadeModel:
    """Local influence function f(c, d), tagged by model kind.

    kind is one of icm, ltm, dicm, scm, twostep.  Parameters not used by a
    kind must be None.  f(c, d) is nondecreasing in c, f(0, d) = 0,
    f(d, d) <= 1.
    """

    kind: str
    p: float | None = None
    q: float | None = None
    eps: float | None = None

    def __post_init__(self):
        if self.kind not in _MODEL_PARAMS:
            raise ValueError(f"unknown cascade model {self.kind!r}")
        wanted = _MODEL_PARAMS[self.kind]
        for name in ("p", "q", "eps"):
            val = getattr(self, name)
            if name in wanted:
                if val is None:
                    raise ValueError(f"model {self.kind} requires parameter {name}")
                if not 0.0 <= val <= 1.0:
                    raise ValueError(f"parameter {name}={val} outside [0, 1]")
            elif val is not None:
                raise ValueError(f"model {self.kind} does not take parameter {name}")

    @classmethod
    def icm(cls, p: float) -> "CascadeModel":
        return cls("icm", p=float(p))

    @classmethod
    def ltm(cls) -> "CascadeModel":
        return cls("ltm")

    @classmethod
    def dicm(cls, p: float, q: float) -> "CascadeModel":
        return cls("dicm", p=float(p), q=float(q))

    @classmethod
    def scm(cls) -> "CascadeModel":
        return cls("scm")

    @classmethod
    def twostep(cls, eps: float) -> "CascadeModel":
        return cls("twostep", eps=float(eps))

    @property
    def spec(self) -> str:
        """Canonical spec string, parseable by parse_model."""
        if self.kind == "icm":
            return f"icm:p={self.p!r}"
        if self.kind == "dicm":
            return f"dicm:p={self.p!r},q={self.q!r}"
        if self.kind == "twostep":
            return f"twostep:eps={self.eps!r}"
        return self.kind

    def f(self, c: int, d: int) -> float:
        """Activation probability with c of d neighbors infected."""
        if c == 0:
            return 0.0
        if self.kind == "icm":
            return 1.0 - (1.0 - self.p) ** c
        if self.kind == "ltm":
            return c / d
        if self.kind == "dicm":
            if c == 1:
                return self.q * self.p
            return 1.0 - (1.0 - self.p) ** c
        if self.kind == "scm":
            # Integer-scaled form of (x/2)^2 / ((x/2)^2 + (1-x)^2), x = c/d:
            # exact at the symmetry point and at c = d.
            half = c * c / 4.0
            return half / (half + (d - c) ** 2)
        # twostep
        return self.eps if c == 1 else 1.0

    def f_table(self, d: int) -> np.ndarray:
        """f(c, d) for c = 0..d as a read-only vector."""
        c = np.arange(d + 1, dtype=np.float64)
        if self.kind == "icm":
            out = 1.0 - (1.0 - self.p) ** c
        elif self.kind == "ltm":
            out = c / d if d > 0 else c
        elif self.kind == "dicm":
            out = 1.0 - (1.0 - self.p) ** c
            if d >= 1:
                out[1] = self.q * self.p
        elif self.kind == "scm":
            half = c * c / 4.0
            denom = half + (d - c) ** 2
            out = np.divide(half, denom, out=np.zeros_like(half), where=denom > 0)
        else:
            out = np.ones(d + 1)
            out[0] = 0.0
            if d >= 1:
                out[1] = self.eps
        out[0] = 0.0
        out.setflags(write=False)
        return out


def parse_model(text: str) -> CascadeModel:
    """Parse a model spec like icm:p=0.01 or dicm:p=0.01,q=0.1."""
    name, _, rest = text.strip().partition(":")
    name = name.lower()
    if name not in _MODEL_PARAMS:
        raise ValueError(f"unknown cascade model {name!r}")
    params: dict[str, float] = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            key = key.strip()
            if not eq or key not in ("p", "q", "eps"):
                raise ValueError(f"bad model parameter {item!r}")
            try:
                params[key] = float(val)
            except ValueError:
                raise ValueError(f"bad model parameter value {val!r}") from None
    expected = set(_MODEL_PARAMS[name])
    if set(params) != expected:
        raise ValueError(
            f"model {name} takes parameters {sorted(expected)}, got {sorted(params)}"
        )
    return CascadeModel(name, **params)


def local_influence(model: CascadeModel, infected_count: int, degree: int) -> float:
    """f(c, d) with argument validation."""
    c, d = int(infected_count), int(degree)
    if c < 0 or d < 0:
        raise ValueError("counts must be nonnegative")
    if c > d:
        raise ValueError(f"infected count {c} exceeds degree {d}")
    return model.f(c, d)


@dataclass(frozen=True)
class OracleConfig:
    """Monte Carlo oracle settings: repetitions, seed, and draw regime.

    CRN mode reuses one fixed threshold table for every query so that sigma
    comparisons are noise-consistent; INDEPENDENT mode draws a fresh table
    per seed set (keyed by the set itself, so still deterministic).
    """

    reps: int
    master_seed: int
    mode: str = CRN

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.mode not in (CRN, INDEPENDENT):
            raise ValueError(f"mode must be {CRN} or {INDEPENDENT}")


@dataclass(frozen=True)
class SigmaEstimate:
    """Estimated expected infected count.  reps == 0 marks an exact value."""

    mean: float
    stderr: float
    reps: int


def _count_classes(model: CascadeModel, degrees: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Map thresholds to activation count classes.

    Entry K satisfies: activate exactly when the infected-neighbor count
    reaches K.  theta in (0, 1] gives K in [1, d+1]; K = d+1 never fires.
    """
    K = np.empty(theta.shape, dtype=np.int32)
    for d in np.unique(degrees):
        cols = np.flatnonzero(degrees == d)
        table = model.f_table(int(d))
        K[..., cols] = np.searchsorted(table, theta[..., cols], side="left").astype(np.int32)
    return K


def simulate_cascade(graph, model: CascadeModel, seeds, thresholds) -> set[int]:
    """One deterministic cascade run under an explicit threshold vector.

    Round 0 infects the seeds; each later round infects every uninfected v
    with f(|infected neighbors of v|, deg v) >= thresholds[v]; stops at a
    fixed point.
    """
    n = graph.n
    theta = np.asarray(thresholds, dtype=np.float64)
    if theta.shape != (n,):
        raise ValueError(f"need one threshold per vertex, got shape {theta.shape}")
    if theta.size and (theta.min() < 0.0 or theta.max() > 1.0):
        raise ValueError("thresholds must lie in [0, 1]")
    seed_list = sorted({int(v) for v in seeds})
    if seed_list and (seed_list[0] < 0 or seed_list[-1] >= n):
        raise ValueError("seed outside vertex range")

    K = _count_classes(model, graph.degrees, theta)
    infected = np.zeros(n, dtype=bool)
    infected[seed_list] = True
    counts = np.zeros(n, dtype=np.int64)
    A = graph.csr()
    if seed_list:
        counts += np.asarray(A[seed_list].sum(axis=0)).ravel()
    while True:
        newly = (counts >= K) & ~infected
        if not newly.any():
            break
        infected |= newly
        counts += newly.astype(np.int64) @ A
    return {int(v) for v in np.flatnonzero(infected)}


class MonteCarloOracle:
    """Monte Carlo sigma(S) with shared threshold draws and result caching.

    The oracle decomposes the graph into connected components and caches,
    per component and per (component-local) seed set, the integer infected
    counts of every repetition.  Totals are sums of cached integer vectors,
    so results are bit-identical regardless of query order or parallelism.
    calls counts every sigma() invocation, cache hits included.
    """

    def __init__(self, graph, model: CascadeModel, cfg: OracleConfig):
        self.graph = graph
        self.model = model
        self.cfg = cfg
        self.calls = 0
        comps = graph.components()
        self._comp_of = np.zeros(graph.n, dtype=np.int64)
        self._local_col = np.zeros(graph.n, dtype=np.int64)
        for ci, verts in enumerate(comps):
            self._comp_of[verts] = ci
            self._local_col[verts] = np.arange(len(verts))
        self._comp_data: dict[int, tuple] = {}
        self._memo: dict[tuple, np.ndarray] = {}
        if cfg.mode == CRN:
            rng = generator(DOMAIN_CRN, cfg.master_seed)
            self._theta = 1.0 - rng.random((cfg.reps, graph.n))
        else:
            self._theta = None

    # Cache bound: totals vectors are cheap to recompute and exact, so the
    # cache may be dropped wholesale without changing any result.
    _MEMO_LIMIT = 200_000

    def _component(self, ci: int):
        data = self._comp_data.get(ci)
        if data is None:
            verts = self.graph.components()[ci]
            A = self.graph.csr()[verts][:, verts]
            degrees = self.graph.degrees[verts]
            K = None
            if self._theta is not None:
                K = _count_classes(self.model, degrees, self._theta[:, verts])
            data = (verts, A, degrees, K)
            self._comp_data[ci] = data
        return data

    def _batch_sim(self, A, K, seed_cols) -> np.ndarray:
        """Infected count per repetition for one component, one seed set."""
        reps, nc = K.shape
        infected = np.zeros((reps, nc), dtype=bool)
        infected[:, seed_cols] = True
        counts = np.zeros((reps, nc), dtype=np.int32)
        counts += np.asarray(A[seed_cols].sum(axis=0)).ravel().astype(np.int32)
        while True:
            newly = (counts >= K) & ~infected
            nnz = int(np.count_nonzero(newly))
            if nnz == 0:
                break
            infected |= newly
            if nnz * 20 < reps * nc:
                inc = (sp.csr_array(newly, dtype=np.int32) @ A).tocoo()
                np.add.at(counts, (inc.coords[0], inc.coords[1]), inc.data)
            else:
                counts += newly.astype(np.int32) @ A
        return infected.sum(axis=1, dtype=np.int64)

    def _crn_totals(self, ci: int, seed_cols: tuple[int, ...]) -> np.ndarray:
        key = (ci, seed_cols)
        totals = self._memo.get(key)
        if totals is None:
            _, A, _, K = self._component(ci)
            totals = self._batch_sim(A, K, list(seed_cols))
            if len(self._memo) >= self._MEMO_LIMIT:
                self._memo.clear()
            self._memo[key] = totals
        return totals

    def sigma(self, seeds) -> SigmaEstimate:
        self.calls += 1
        seed_list = sorted({int(v) for v in seeds})
        if seed_list and (seed_list[0] < 0 or seed_list[-1] >= self.graph.n):
            raise ValueError("seed outside vertex range")
        reps = self.cfg.reps
        totals = np.zeros(reps, dtype=np.int64)
        by_comp: dict[int, list[int]] = {}
        for v in seed_list:
            by_comp.setdefault(int(self._comp_of[v]), []).append(int(self._local_col[v]))
        if self.cfg.mode == CRN:
            for ci, cols in sorted(by_comp.items()):
                totals += self._crn_totals(ci, tuple(cols))
        else:
            rng = generator(DOMAIN_INDEPENDENT, self.cfg.master_seed, seeds_digest(seed_list))
            theta = 1.0 - rng.random((reps, self.graph.n))
            for ci, cols in sorted(by_comp.items()):
                verts, A, degrees, _ = self._component(ci)
                K = _count_classes(self.model, degrees, theta[:, verts])
                totals += self._batch_sim(A, K, cols)
        mean = float(totals.mean())
        stderr = float(totals.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        return SigmaEstimate(mean, stderr, reps)


def sigma_mc(graph, model: CascadeModel, seeds, cfg: OracleConfig) -> SigmaEstimate:
    """Monte Carlo estimate of sigma(seeds) under cfg."""
    return MonteCarloOracle(graph, model, cfg).sigma(seeds)


class ExactOracle:
    """Exact sigma(S) by conditioning on count classes.

    Each vertex's threshold is equivalent to a count class K with
    P(K = c) = f(c) - f(c-1) and P(never) = 1 - f(d).  The oracle runs the
    cascade symbolically per connected component: activations forced by
    already-revealed information are applied outright, vertices whose
    neighbors are all infected are marginalized in closed form (their
    activation cannot influence anyone else), and otherwise the recursion
    branches on whether the smallest undecided vertex activates at its
    current count.  States are memoized; the explored-state budget guards
    against exponential blowups and raises CapacityError when exceeded.

    calls counts every sigma()/value() invocation, cache hits included.
    """

    def __init__(self, graph, model: CascadeModel, budget: int = 10_000_000):
        self.graph = graph
        self.model = model
        self.budget = int(budget)
        self.calls = 0
        self._states = 0
        self._comp_local: list[dict] = []
        self._result_memo: dict[tuple, float] = {}
        self._state_memos: list[dict] = []
        comps = graph.components()
        self._comp_of = np.zeros(graph.n, dtype=np.int64)
        self._local_col = np.zeros(graph.n, dtype=np.int64)
        for ci, verts in enumerate(comps):
            self._comp_of[verts] = ci
            self._local_col[verts] = np.arange(len(verts))
            local = {int(v): i for i, v in enumerate(verts)}
            masks = []
            tables = []
            degs = []
            for v in verts:
                mask = 0
                for u in graph.neighbors(int(v)):
                    mask |= 1 << local[int(u)]
                masks.append(mask)
                d = graph.degree(int(v))
                degs.append(d)
                tables.append(tuple(model.f_table(d)))
            self._comp_local.append(
                {"masks": tuple(masks), "degs": tuple(degs), "tables": tuple(tables)}
            )
            self._state_memos.append({})

    def value(self, seeds) -> float:
        """Exact expected infected count."""
        self.calls += 1
        seed_list = sorted({int(v) for v in seeds})
        if seed_list and (seed_list[0] < 0 or seed_list[-1] >= self.graph.n):
            raise ValueError("seed outside vertex range")
        by_comp: dict[int, list[int]] = {}
        for v in seed_list:
            by_comp.setdefault(int(self._comp_of[v]), []).append(int(self._local_col[v]))
        parts = []
        for ci, cols in sorted(by_comp.items()):
            key = (ci, tuple(cols))
            val = self._result_memo.get(key)
            if val is None:
                val = self._component_value(ci, cols)
                self._result_memo[key] = val
            parts.append(val)
        return math.fsum(parts)

    def sigma(self, seeds) -> SigmaEstimate:
        return SigmaEstimate(self.value(seeds), 0.0, 0)

    def _component_value(self, ci: int, seed_cols) -> float:
        data = self._comp_local[ci]
        masks = data["masks"]
        degs = data["degs"]
        tables = data["tables"]
        nc = len(masks)
        memo = self._state_memos[ci]

        def g(I: int, surv: tuple) -> float:
            key = (I, surv)
            hit = memo.get(key)
            if hit is not None:
                return hit
            self._states += 1
            if self._states > self.budget:
                raise CapacityError(
                    f"exact oracle exceeded {self.budget} explored states"
                )
            slist = list(surv)
            # Settle forced outcomes: certain activations may cascade, and
            # zero-probability steps just raise the survived count.
            changed = True
            while changed:
                changed = False
                for v in range(nc):
                    if I >> v & 1:
                        continue
                    c = (I & masks[v]).bit_count()
                    s = slist[v]
                    if c <= s:
                        continue
                    table = tables[v]
                    fs = table[s]
                    p = (table[c] - fs) / (1.0 - fs)
                    if p >= 1.0:
                        I |= 1 << v
                        changed = True
                    elif p <= 0.0:
                        slist[v] = c
                        changed = True
            credits = []
            branch_v = -1
            branch_c = 0
            branch_p = 0.0
            for v in range(nc):
                if I >> v & 1:
                    continue
                c = (I & masks[v]).bit_count()
                s = slist[v]
                if c <= s:
                    continue
                table = tables[v]
                fs = table[s]
                p = (table[c] - fs) / (1.0 - fs)
                if c == degs[v]:
                    # All of v's neighbors are infected: v's fate affects
                    # nobody, so take its activation probability directly.
                    credits.append(p)
                    slist[v] = c
                elif branch_v < 0:
                    branch_v, branch_c, branch_p = v, c, p
            gain = math.fsum(credits)
            if branch_v < 0:
                val = float(I.bit_count()) + gain
            else:
                surv_no = list(slist)
                surv_no[branch_v] = branch_c
                surv_yes = list(slist)
                surv_yes[branch_v] = 0
                val = gain + branch_p * g(I | 1 << branch_v, tuple(surv_yes)) + (
                    1.0 - branch_p
                ) * g(I, tuple(surv_no))
            memo[key] = val
            return val

        I0 = 0
        for col in seed_cols:
            I0 |= 1 << col
        return g(I0, tuple(0 for _ in range(nc)))


def sigma_exact(graph, model: CascadeModel, seeds, budget: int = 10_000_000) -> float:
    """Exact expected infected count from seeds (capacity-guarded)."""
    return ExactOracle(graph, model, budget=budget).value(seeds)
