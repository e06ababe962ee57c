"""Community detection portfolio optimizing directed modularity.

Four building blocks, combinable into combo scripts like "esrfr-30":

* ``f`` greedy agglomeration: start from singletons, repeatedly apply the
  merge with the largest modularity gain until none is positive.
* ``s`` spectral bisection: recursive leading-eigenvector splits of the
  symmetrized modularity matrix, found by shifted power iteration.
* ``e`` extremal optimization: recursive bisection where the worst-fitness
  node, chosen with rank-power probability r^-tau, switches sides.
* ``r`` reposition: single-node moves to the best neighboring (or fresh)
  group until a full pass yields no improvement; never decreases Q.

A trailing count ("-30") sets the number of independent seeded restarts of
every stochastic stage (e and s) in the script; r and f are deterministic and
run once per occurrence.  The directed modularity of the full layer is always
the arbiter: internals may symmetrize, accepted splits and returned scores
never do.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedMetricError, ValidationError
from .modularity import q_modularity
from .network import Layer, Partition

DEFAULT_PORTFOLIO = ("e-1", "esrfr-30", "r-1", "f-1", "s-10", "rfr-1", "rsrfr-30")

EO_TAU = 1.4
POWER_TOL = 1e-10
IMPROVE_TOL = 1e-12
_DENSE_LIMIT = 512  # largest subgraph solved with a dense modularity matrix


@dataclass(frozen=True)
class ComboScript:
    """Parsed combo script: a stage sequence plus a restart count."""

    stages: tuple[str, ...]
    repetitions: int = 1

    @classmethod
    def parse(cls, text: str) -> "ComboScript":
        text = text.strip()
        if not text:
            raise ValidationError("empty combo script")
        stages, _, count = text.partition("-")
        reps = 1
        if count:
            try:
                reps = int(count)
            except ValueError:
                raise ValidationError(f"bad repetition count in {text!r}") from None
            if reps < 1:
                raise ValidationError(f"repetition count must be positive in {text!r}")
        bad = set(stages) - set("esfr")
        if not stages or bad:
            raise ValidationError(f"combo script {text!r} may only use stages e, s, f, r")
        return cls(tuple(stages), reps)

    @property
    def stochastic(self) -> bool:
        return any(tag in ("e", "s") for tag in self.stages)

    def __str__(self) -> str:
        return "".join(self.stages) + f"-{self.repetitions}"


@dataclass(frozen=True)
class DetectionResult:
    """Partition found by one script together with its recomputed directed Q."""

    partition: Partition
    q: float
    script: str
    seed: int | None
    group_count: int
    flags: tuple[str, ...] = ()


class _Problem:
    """Precomputed link arrays, degrees and adjacency lists for one layer."""

    def __init__(self, layer: Layer):
        src, dst, w = layer.metric_view()
        self.layer = layer
        self.n = len(layer.node_ids)
        self.src, self.dst, self.w = src, dst, w
        self.m = float(w.sum())
        if self.m <= 0.0:
            raise UndefinedMetricError(f"layer {layer.name!r} has no non-self links")
        self.k_out = np.bincount(src, weights=w, minlength=self.n)
        self.k_in = np.bincount(dst, weights=w, minlength=self.n)
        # Unique-neighbor adjacency with both directions combined:
        # wboth[i][k] = w(i->j) + w(j->i) for neighbor j = nbr[i][k].
        combined: list[dict[int, float]] = [dict() for _ in range(self.n)]
        for s, t, weight in zip(src.tolist(), dst.tolist(), w.tolist()):
            combined[s][t] = combined[s].get(t, 0.0) + weight
            combined[t][s] = combined[t].get(s, 0.0) + weight
        self.nbr = [np.array(sorted(d), dtype=np.int64) for d in combined]
        self.wboth = [
            np.array([d[j] for j in sorted(d)], dtype=np.float64) for d in combined
        ]

    def q_of(self, codes: np.ndarray) -> float:
        return q_modularity(self.layer, None, codes=codes, n_groups=int(codes.max()) + 1)


def _canonical(codes: np.ndarray) -> np.ndarray:
    """Relabel groups 0..G-1 in order of first appearance by node index."""
    mapping: dict[int, int] = {}
    out = np.empty_like(codes)
    for i, c in enumerate(codes.tolist()):
        out[i] = mapping.setdefault(c, len(mapping))
    return out


def _partition_from_codes(layer: Layer, codes: np.ndarray) -> Partition:
    codes = _canonical(codes)
    labels = tuple(f"c{k}" for k in range(int(codes.max()) + 1))
    assignment = {node: labels[codes[i]] for i, node in enumerate(layer.node_ids)}
    return Partition.from_assignment(assignment, labels)


def _codes_from_partition(layer: Layer, partition: Partition) -> np.ndarray:
    label_code = {label: i for i, label in enumerate(partition.labels)}
    codes = np.empty(len(layer.node_ids), dtype=np.int64)
    for i, node in enumerate(layer.node_ids):
        codes[i] = label_code[partition.label_of(node)]
    return _canonical(codes)


def _better(q_a: float, codes_a: np.ndarray, q_b: float, codes_b: np.ndarray | None) -> bool:
    """True when (q_a, codes_a) beats (q_b, codes_b) under (Q, lexicographic)."""
    if codes_b is None:
        return True
    if q_a != q_b:
        return q_a > q_b
    return tuple(codes_a.tolist()) < tuple(codes_b.tolist())


# -- fast greedy agglomeration ---------------------------------------------


def _fast_greedy(problem: _Problem) -> np.ndarray:
    n, m = problem.n, problem.m
    k_out = problem.k_out.copy()
    k_in = problem.k_in.copy()
    conn: list[dict[int, float]] = [dict() for _ in range(n)]
    for s, t, w in zip(problem.src.tolist(), problem.dst.tolist(), problem.w.tolist()):
        conn[s][t] = conn[s].get(t, 0.0) + w
        conn[t][s] = conn[t].get(s, 0.0) + w
    alive = np.ones(n, dtype=bool)
    members: list[list[int]] = [[i] for i in range(n)]

    def gain(a: int, b: int) -> float:
        return conn[a][b] / m - (k_out[a] * k_in[b] + k_out[b] * k_in[a]) / (m * m)

    heap: list[tuple[float, int, int]] = []
    for a in range(n):
        for b in conn[a]:
            if a < b:
                heap.append((-gain(a, b), a, b))
    heapq.heapify(heap)
    while heap:
        neg, a, b = heapq.heappop(heap)
        if not alive[a] or not alive[b] or b not in conn[a]:
            continue
        current = gain(a, b)
        if current != -neg:
            continue  # stale entry; a fresher one is queued
        if current <= IMPROVE_TOL:
            break
        # Merge b into a; a < b keeps the smallest label as the survivor.
        alive[b] = False
        members[a].extend(members[b])
        members[b] = []
        k_out[a] += k_out[b]
        k_in[a] += k_in[b]
        del conn[a][b]
        for x, wx in conn[b].items():
            if x == a:
                continue
            conn[a][x] = conn[a].get(x, 0.0) + wx
            conn[x][a] = conn[a][x]
            del conn[x][b]
        conn[b] = {}
        for x in conn[a]:
            lo, hi = (a, x) if a < x else (x, a)
            heapq.heappush(heap, (-gain(lo, hi), lo, hi))
    codes = np.empty(n, dtype=np.int64)
    for rep in range(n):
        if alive[rep]:
            for node in members[rep]:
                codes[node] = rep
    return _canonical(codes)


# -- reposition refinement -------------------------------------------------


def _reposition(problem: _Problem, codes: np.ndarray, max_passes: int = 10_000) -> np.ndarray:
    n, m = problem.n, problem.m
    codes = _canonical(codes)
    k_out, k_in = problem.k_out, problem.k_in
    kout_g = np.zeros(n)
    kin_g = np.zeros(n)
    size_g = np.zeros(n, dtype=np.int64)
    np.add.at(kout_g, codes, k_out)
    np.add.at(kin_g, codes, k_in)
    np.add.at(size_g, codes, 1)
    free = list(range(int(codes.max()) + 1, n))
    heapq.heapify(free)
    for _ in range(max_passes):
        moved = False
        for i in range(n):
            nbr = problem.nbr[i]
            if len(nbr) == 0:
                continue
            g = int(codes[i])
            koi, kii = k_out[i], k_in[i]
            kin_rest = kin_g[g] - kii
            kout_rest = kout_g[g] - koi
            acc: dict[int, float] = {}
            for j, wb in zip(nbr.tolist(), problem.wboth[i].tolist()):
                h = int(codes[j])
                acc[h] = acc.get(h, 0.0) + wb
            w_same = acc.pop(g, 0.0)
            detach_gain = -w_same / m + (koi * kin_rest + kii * kout_rest) / (m * m)
            best_gain = IMPROVE_TOL
            best_target = -1
            for h in sorted(acc):
                gain = detach_gain + acc[h] / m - (koi * kin_g[h] + kii * kout_g[h]) / (m * m)
                if gain > best_gain:
                    best_gain = gain
                    best_target = h
            if size_g[g] > 1 and detach_gain > best_gain:
                # The heap root is the smallest unused label; consumed on apply.
                best_gain = detach_gain
                best_target = free[0]
            if best_target >= 0:
                if size_g[best_target] == 0:
                    heapq.heappop(free)
                codes[i] = best_target
                kout_g[g] -= koi
                kin_g[g] -= kii
                size_g[g] -= 1
                if size_g[g] == 0:
                    heapq.heappush(free, g)
                kout_g[best_target] += koi
                kin_g[best_target] += kii
                size_g[best_target] += 1
                moved = True
        if not moved:
            break
    return _canonical(codes)


# -- spectral bisection ----------------------------------------------------


def _subset_links(problem: _Problem, sub: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Links with both endpoints in ``sub``, endpoints in local 0..s-1 indices."""
    pos = np.full(problem.n, -1, dtype=np.int64)
    pos[sub] = np.arange(len(sub))
    ls, lt = pos[problem.src], pos[problem.dst]
    keep = (ls >= 0) & (lt >= 0)
    return ls[keep], lt[keep], problem.w[keep]


def _split_gain(
    problem: _Problem,
    sub: np.ndarray,
    sides: np.ndarray,
    ls: np.ndarray,
    lt: np.ndarray,
    lw: np.ndarray,
) -> float:
    """Directed modularity change from splitting ``sub`` along ``sides``."""
    m = problem.m
    cross = float(lw[sides[ls] != sides[lt]].sum())
    kout0 = float(problem.k_out[sub[sides == 0]].sum())
    kout1 = float(problem.k_out[sub[sides == 1]].sum())
    kin0 = float(problem.k_in[sub[sides == 0]].sum())
    kin1 = float(problem.k_in[sub[sides == 1]].sum())
    return -cross / m + (kout0 * kin1 + kout1 * kin0) / (m * m)


def _leading_vector(
    problem: _Problem, sub: np.ndarray, rng: np.random.Generator
) -> np.ndarray | None:
    """Eigenvector of the most positive eigenvalue of the generalized
    symmetrized modularity submatrix; None on power-iteration non-convergence."""
    s = len(sub)
    m = problem.m
    ls, lt, lw = _subset_links(problem, sub)
    kout = problem.k_out[sub]
    kin = problem.k_in[sub]
    kout_sum = float(kout.sum())
    kin_sum = float(kin.sum())
    # Row sums of the symmetrized modularity matrix restricted to sub.
    row_adj = (
        np.bincount(ls, weights=lw, minlength=s) + np.bincount(lt, weights=lw, minlength=s)
    ) / 2.0
    d = row_adj - (kout * kin_sum + kin * kout_sum) / (2.0 * m)
    max_iter = 10 * max(s, 10)
    x = rng.standard_normal(s)
    x /= np.linalg.norm(x)
    if s <= _DENSE_LIMIT:
        dense = np.zeros((s, s))
        np.add.at(dense, (ls, lt), lw / 2.0)
        np.add.at(dense, (lt, ls), lw / 2.0)
        dense -= (np.outer(kout, kin) + np.outer(kin, kout)) / (2.0 * m)
        dense[np.diag_indices(s)] -= d
        shift = float(np.abs(dense).sum(axis=1).max()) + 1.0
        dense[np.diag_indices(s)] += shift
        for _ in range(max_iter):
            y = dense @ x
            norm = np.linalg.norm(y)
            if norm == 0.0:
                return None
            y /= norm
            if np.abs(y - x).max() < POWER_TOL:
                return y
            x = y
        return None

    def apply(vec: np.ndarray) -> np.ndarray:
        adj = np.bincount(ls, weights=lw * vec[lt], minlength=s)
        adj += np.bincount(lt, weights=lw * vec[ls], minlength=s)
        adj /= 2.0
        null = (kout * float(kin @ vec) + kin * float(kout @ vec)) / (2.0 * m)
        return adj - null - d * vec

    # Gershgorin-style bound keeps the shifted operator non-negative definite.
    abs_adj = (
        np.bincount(ls, weights=lw, minlength=s) + np.bincount(lt, weights=lw, minlength=s)
    ) / 2.0
    shift = float(
        (abs_adj + (kout * kin_sum + kin * kout_sum) / (2.0 * m) + np.abs(d)).max()
    ) + 1.0
    for _ in range(max_iter):
        y = apply(x) + shift * x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return None
        y /= norm
        if np.abs(y - x).max() < POWER_TOL:
            return y
        x = y
    return None


def _spectral(problem: _Problem, rng: np.random.Generator) -> tuple[np.ndarray, tuple[str, ...]]:
    codes = np.zeros(problem.n, dtype=np.int64)
    flags: list[str] = []
    next_label = 1
    stack: list[np.ndarray] = [np.arange(problem.n)]
    while stack:
        sub = stack.pop()
        if len(sub) < 2:
            continue
        vector = _leading_vector(problem, sub, rng)
        if vector is None:
            flags.append(f"power iteration did not converge on a subgraph of {len(sub)} nodes")
            continue
        sides = (vector >= 0.0).astype(np.int64)
        if sides.min() == sides.max():
            continue
        ls, lt, lw = _subset_links(problem, sub)
        if _split_gain(problem, sub, sides, ls, lt, lw) <= IMPROVE_TOL:
            continue
        half = sub[sides == 1]
        codes[half] = next_label
        next_label += 1
        stack.append(sub[sides == 0])
        stack.append(half)
    return _canonical(codes), tuple(flags)


# -- extremal optimization -------------------------------------------------


def _eo_bisect(
    problem: _Problem, sub: np.ndarray, rng: np.random.Generator
) -> np.ndarray | None:
    """One tau-EO bisection of ``sub``; returns sides or None when no split helps."""
    s = len(sub)
    m = problem.m
    ls, lt, lw = _subset_links(problem, sub)
    kout = problem.k_out[sub]
    kin = problem.k_in[sub]
    pos = np.full(problem.n, -1, dtype=np.int64)
    pos[sub] = np.arange(s)
    local_nbr: list[np.ndarray] = []
    local_wb: list[np.ndarray] = []
    for node in sub.tolist():
        others = pos[problem.nbr[node]]
        keep = others >= 0
        local_nbr.append(others[keep])
        local_wb.append(problem.wboth[node][keep])
    ksym = np.array([wb.sum() for wb in local_wb])
    sides = rng.integers(0, 2, size=s).astype(np.int64)
    wsym_same = np.zeros(s)
    for i in range(s):
        mask = sides[local_nbr[i]] == sides[i]
        wsym_same[i] = local_wb[i][mask].sum() / 2.0
    agg_out = np.array([kout[sides == 0].sum(), kout[sides == 1].sum()])
    agg_in = np.array([kin[sides == 0].sum(), kin[sides == 1].sum()])
    cross = float(lw[sides[ls] != sides[lt]].sum())

    def split_gain() -> float:
        return -cross / m + (agg_out[0] * agg_in[1] + agg_out[1] * agg_in[0]) / (m * m)

    best_gain = split_gain()
    best_sides = sides.copy()
    ranks = np.arange(1, s + 1, dtype=np.float64) ** (-EO_TAU)
    cumulative = np.cumsum(ranks / ranks.sum())
    moves = min(max(48, 8 * s), 4096)
    patience = max(24, 2 * s)
    stale = 0
    guard = np.where(ksym > 0.0, ksym, 1.0)
    for _ in range(moves):
        if stale >= patience:
            break
        null = (kout * (agg_in[sides] - kin) + kin * (agg_out[sides] - kout)) / (2.0 * m)
        fitness = (wsym_same - null) / guard
        fitness[ksym == 0.0] = np.inf  # isolated nodes never move
        order = np.argsort(fitness, kind="stable")
        rank = min(int(np.searchsorted(cumulative, rng.random(), side="right")), s - 1)
        pick = order[rank]
        old = int(sides[pick])
        new = 1 - old
        sides[pick] = new
        agg_out[old] -= kout[pick]
        agg_in[old] -= kin[pick]
        agg_out[new] += kout[pick]
        agg_in[new] += kin[pick]
        same = 0.0
        for j, wb in zip(local_nbr[pick].tolist(), local_wb[pick].tolist()):
            if sides[j] == new:
                wsym_same[j] += wb / 2.0
                cross -= wb
                same += wb / 2.0
            else:
                wsym_same[j] -= wb / 2.0
                cross += wb
        wsym_same[pick] = same
        gain = split_gain()
        if gain > best_gain + IMPROVE_TOL:
            best_gain = gain
            best_sides = sides.copy()
            stale = 0
        else:
            stale += 1
    if best_gain > IMPROVE_TOL and 0 < best_sides.sum() < s:
        return best_sides
    return None


def _extremal(problem: _Problem, rng: np.random.Generator) -> np.ndarray:
    codes = np.zeros(problem.n, dtype=np.int64)
    next_label = 1
    stack: list[np.ndarray] = [np.arange(problem.n)]
    while stack:
        sub = stack.pop()
        if len(sub) < 2:
            continue
        sides = _eo_bisect(problem, sub, rng)
        if sides is None:
            continue
        half = sub[sides == 1]
        codes[half] = next_label
        next_label += 1
        stack.append(sub[sides == 0])
        stack.append(half)
    return _canonical(codes)


# -- public entry points ---------------------------------------------------


def _result(
    problem: _Problem,
    codes: np.ndarray,
    script: str,
    seed: int | None,
    flags: tuple[str, ...] = (),
) -> DetectionResult:
    partition = _partition_from_codes(problem.layer, codes)
    q = q_modularity(problem.layer, partition)
    return DetectionResult(partition, q, script, seed, len(partition.labels), flags)


def detect_fast(layer: Layer) -> DetectionResult:
    """Greedy modularity agglomeration from singletons (deterministic)."""
    problem = _Problem(layer)
    return _result(problem, _fast_greedy(problem), "f-1", None)


def detect_spectral(layer: Layer, seed: int) -> DetectionResult:
    """Recursive leading-eigenvector bisection with a seeded start vector."""
    problem = _Problem(layer)
    codes, flags = _spectral(problem, np.random.default_rng(np.random.SeedSequence(seed)))
    return _result(problem, codes, "s-1", seed, flags)


def detect_extremal(layer: Layer, seed: int) -> DetectionResult:
    """Recursive tau-EO bisection (tau = 1.4), seeded."""
    problem = _Problem(layer)
    codes = _extremal(problem, np.random.default_rng(np.random.SeedSequence(seed)))
    return _result(problem, codes, "e-1", seed)


def refine_reposition(layer: Layer, start: Partition) -> DetectionResult:
    """Single-node move refinement of a starting partition; Q never drops."""
    problem = _Problem(layer)
    codes = _reposition(problem, _codes_from_partition(layer, start))
    return _result(problem, codes, "r-1", None)


def run_combo(layer: Layer, script: ComboScript | str, seed: int | None = None) -> DetectionResult:
    """Execute one combo script and return its best partition.

    Stages chain left to right over a current-best partition that starts as
    all singletons: r refines it in place, f and the seeded restarts of e and
    s propose fresh candidates that replace it only when they score a higher
    directed Q (ties broken toward the lexicographically smaller partition).
    Restart k of the stage at position p draws its generator from
    SeedSequence([seed, p, k]), so identical (layer, script, seed) triples
    reproduce identical partitions.
    """
    if isinstance(script, str):
        script = ComboScript.parse(script)
    if script.stochastic and seed is None:
        raise ValidationError(f"script {script} has stochastic stages and needs a seed")
    problem = _Problem(layer)
    codes = np.arange(problem.n, dtype=np.int64)
    q = problem.q_of(codes)
    flags: list[str] = []
    for position, tag in enumerate(script.stages):
        if tag == "r":
            codes = _reposition(problem, codes)
            q = problem.q_of(codes)
            continue
        if tag == "f":
            candidates = [(_fast_greedy(problem), ())]
        else:
            candidates = []
            for repeat in range(script.repetitions):
                rng = np.random.default_rng(np.random.SeedSequence([seed, position, repeat]))
                if tag == "s":
                    cand, cand_flags = _spectral(problem, rng)
                else:
                    cand, cand_flags = _extremal(problem, rng), ()
                candidates.append((cand, cand_flags))
        for cand, cand_flags in candidates:
            cand_q = problem.q_of(cand)
            flags.extend(cand_flags)
            if _better(cand_q, cand, q, codes):
                codes, q = cand, cand_q
    return _result(problem, codes, str(script), seed, tuple(flags))


def run_portfolio(
    layer: Layer,
    scripts: tuple[str, ...] = DEFAULT_PORTFOLIO,
    seed: int | None = None,
) -> DetectionResult:
    """Run every script and keep the best result by (Q, lexicographic partition).

    Script i runs with the derived seed SeedSequence([seed, i]) so the
    portfolio is reproducible from one configuration seed.
    """
    if not scripts:
        raise ValidationError("empty portfolio")
    best: DetectionResult | None = None
    best_codes: np.ndarray | None = None
    for i, text in enumerate(scripts):
        script = ComboScript.parse(text) if isinstance(text, str) else text
        sub_seed = None
        if script.stochastic:
            if seed is None:
                raise ValidationError(f"script {script} has stochastic stages and needs a seed")
            sub_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        result = run_combo(layer, script, sub_seed)
        codes = _codes_from_partition(layer, result.partition)
        if best is None or _better(result.q, codes, best.q, best_codes):
            best, best_codes = result, codes
    return best
