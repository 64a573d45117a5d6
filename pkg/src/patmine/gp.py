"""Genetic-programming search for pattern groups.

Learns one :class:`~patmine.pattern.PatternGroup` per feedback type:

1. mine a pool of recommended terminal candidates from the training split
   (frequent literal/POS unigrams and bigrams minus cross-class collisions,
   plus every gazetteer entity type and the wildcard);
2. evolve a single pattern with a generational GP (ramped half-and-half
   initialization, tournament selection, elitism, type-compatible subtree
   crossover, subtree/point mutation), scoring individuals with the
   precision-weighted F-beta measure (beta = 0.3 by default);
3. wrap the evolution in a sequential covering loop: a pattern is accepted
   only if it strictly increases the group F1 on the full training set, and
   the positives it covers leave the working set.  The loop stops when all
   positives are covered or ``max_group_stall`` consecutive candidates fail
   to improve the group.

Everything is deterministic under a fixed seed: one ``random.Random``
instance is threaded through the whole run, and fitness evaluation never
consumes randomness (so it may fan out across processes without changing
results).
"""

from __future__ import annotations

import logging
import multiprocessing
from collections import Counter
from dataclasses import dataclass, fields
from pathlib import Path
from random import Random
from typing import Callable, Optional, Sequence

import numpy as np

from .corpus import FeedbackType
from .gazetteer import Gazetteer
from .linguistics import Document
from .pattern import (
    Kind,
    PatternGroup,
    PatternNode,
    Provenance,
    TERMINAL_KINDS,
    compile_matcher,
    depth as pattern_depth,
    doc_match,
    ent,
    is_token_level,
    lit,
    pos,
    prepare_document,
    print_dsl,
    seq,
    size,
    wildcard,
)

log = logging.getLogger(__name__)


class GpError(ValueError):
    pass


@dataclass
class GpConfig:
    """Knobs for the evolutionary search.  Defaults target sub-minute
    pattern runs on a few thousand short documents."""

    population_size: int = 200
    max_generations: int = 50
    max_group_stall: int = 3
    max_depth: int = 5
    max_children: int = 4
    tournament_size: int = 5
    elitism_count: int = 2
    crossover_rate: float = 0.8
    mutation_rate: float = 0.2
    beta: float = 0.3
    pool_top_k: int = 200
    cross_class_cutoff: int = 100
    rng_seed: int = 0
    # stop a pattern run early after this many generations without the best
    # fitness improving; 0 disables the early stop
    stall_generations: int = 10

    def __post_init__(self):
        if self.population_size < 2:
            raise GpError("population_size must be >= 2")
        if not 2 <= self.tournament_size <= self.population_size:
            raise GpError("tournament_size must be in [2, population_size]")
        if not 0 <= self.elitism_count < self.population_size:
            raise GpError("elitism_count must be in [0, population_size)")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise GpError(f"{name} must be in [0, 1]")
        if self.beta <= 0:
            raise GpError("beta must be positive")
        if self.max_depth < 2:
            raise GpError("max_depth must be >= 2")
        if self.max_children < 2:
            raise GpError("max_children must be >= 2")


def load_gp_config(path: str | Path, **overrides) -> GpConfig:
    """Read a ``key = value`` config file; keyword overrides win."""
    known = {f.name: f.type for f in fields(GpConfig)}
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise GpError(f"config line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise GpError(f"config line {lineno}: unknown key {key!r}")
        caster = float if key in ("crossover_rate", "mutation_rate", "beta") else int
        try:
            values[key] = caster(value)
        except ValueError:
            raise GpError(f"config line {lineno}: bad value {value!r} for {key}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return GpConfig(**values)


# ---------------------------------------------------------------------------
# fitness measures


def f_beta(precision: float, recall: float, beta: float) -> float:
    denom = beta * beta * precision + recall
    if denom == 0.0:
        return 0.0
    return (1.0 + beta * beta) * precision * recall / denom


@dataclass
class Individual:
    tree: PatternNode
    fitness: float = 0.0
    precision: float = 0.0
    recall: float = 0.0
    # canonical rendering, used for duplicate detection and deterministic ties
    canon: str = ""
    # fitness after the intra-population duplicate penalty; selection uses this
    sel_fitness: float = 0.0


def fitness(
    tree: PatternNode,
    positives: Sequence[Document],
    negatives: Sequence[Document],
    beta: float,
) -> tuple[float, float, float]:
    """Reference fitness: (precision, recall, F-beta) by exhaustive doc_match."""
    if not positives and not negatives:
        raise GpError("fitness requires at least one document")
    tp = sum(1 for d in positives if doc_match(tree, d))
    fp = sum(1 for d in negatives if doc_match(tree, d))
    fn = len(positives) - tp
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall, f_beta(precision, recall, beta)


# ---------------------------------------------------------------------------
# terminal pool


@dataclass(frozen=True)
class TerminalPool:
    unigrams: tuple[PatternNode, ...]
    bigrams: tuple[PatternNode, ...]
    entity_terminals: tuple[PatternNode, ...]
    wildcard: PatternNode

    @property
    def token_terminals(self) -> tuple[PatternNode, ...]:
        return self.unigrams + self.entity_terminals + (self.wildcard,)


def _valid_literal(norm: str) -> bool:
    return bool(norm) and not any(ch in "()|," or ch.isspace() for ch in norm)


def _doc_candidates(doc: Document) -> set[tuple]:
    """Candidate keys occurring in one document (counted once each)."""
    norms = [t.norm for t in doc.tokens]
    tags = [t.pos for t in doc.tokens]
    cands: set[tuple] = set()
    for n, t in zip(norms, tags):
        if _valid_literal(n):
            cands.add(("lit", n))
        cands.add(("pos", t))
    for (n1, t1), (n2, t2) in zip(zip(norms, tags), zip(norms[1:], tags[1:])):
        ok1, ok2 = _valid_literal(n1), _valid_literal(n2)
        if ok1 and ok2:
            cands.add(("ll", n1, n2))
        if ok2:
            cands.add(("pl", t1, n2))
        if ok1:
            cands.add(("lp", n1, t2))
        cands.add(("pp", t1, t2))
    return cands


def _rank_candidates(docs: Sequence[Document]) -> list[tuple]:
    counts: Counter = Counter()
    for d in docs:
        counts.update(_doc_candidates(d))
    return sorted(counts, key=lambda c: (-counts[c], c))


def _candidate_node(key: tuple) -> PatternNode:
    shape = key[0]
    if shape == "lit":
        return lit(key[1])
    if shape == "pos":
        return pos(key[1])
    parts = []
    for mark, value in zip(shape, key[1:]):
        parts.append(lit(value) if mark == "l" else pos(value))
    return seq(*parts)


def mine_terminal_pool(
    positives: Sequence[Document],
    negatives: Sequence[Document],
    config: GpConfig,
    gazetteer: Gazetteer,
) -> TerminalPool:
    """Build the pool of recommended terminal candidates.

    Literal/POS unigrams and the four bigram shapes (lit+lit, pos+lit,
    lit+pos, pos+pos) are ranked by document frequency in the positive
    class; any candidate also ranking in the top ``cross_class_cutoff``
    of the negative class is removed; the top ``pool_top_k`` survivors are
    kept.  Every gazetteer entity type and the wildcard are always included.
    """
    if not positives:
        raise GpError("mine_terminal_pool requires a non-empty positive set")
    ranked = _rank_candidates(positives)
    excluded = set(_rank_candidates(negatives)[: config.cross_class_cutoff])
    survivors = [c for c in ranked if c not in excluded][: config.pool_top_k]
    if not survivors:
        raise GpError(
            "no unigram or bigram candidates survive the cross-class filter; lower cross_class_cutoff"
        )
    unigrams = tuple(_candidate_node(c) for c in survivors if c[0] in ("lit", "pos"))
    bigrams = tuple(_candidate_node(c) for c in survivors if c[0] not in ("lit", "pos"))
    entity_terminals = tuple(ent(k) for k in sorted(gazetteer.keys))
    return TerminalPool(
        unigrams=unigrams,
        bigrams=bigrams,
        entity_terminals=entity_terminals,
        wildcard=wildcard(),
    )


# ---------------------------------------------------------------------------
# tree generation

_SEQ_SLOT_FUNCTIONS = (Kind.SEQUENCE, Kind.REPETITION, Kind.AND, Kind.OR, Kind.NOT)
_TOKEN_SLOT_FUNCTIONS = (Kind.AND, Kind.OR, Kind.NOT)


def _draw_terminal(slot: str, remaining: int, pool: TerminalPool, rng: Random) -> PatternNode:
    choices = pool.token_terminals
    if slot == "seq" and remaining >= 2 and pool.bigrams:
        choices = choices + pool.bigrams
    return choices[rng.randrange(len(choices))]


def _child_arity(kind: Kind, max_children: int, rng: Random) -> int:
    if kind is Kind.REPETITION:
        return 1
    lo = 2 if kind is Kind.AND else 1
    return rng.randint(lo, max_children)


def _gen(method: str, slot: str, remaining: int, pool: TerminalPool, rng: Random, max_children: int) -> PatternNode:
    if remaining <= 1:
        return pool.token_terminals[rng.randrange(len(pool.token_terminals))]
    if method == "grow" and rng.random() < 0.5:
        return _draw_terminal(slot, remaining, pool, rng)
    functions = _SEQ_SLOT_FUNCTIONS if slot == "seq" else _TOKEN_SLOT_FUNCTIONS
    kind = functions[rng.randrange(len(functions))]
    arity = _child_arity(kind, max_children, rng)
    child_slot = "seq" if kind is Kind.SEQUENCE else "token"
    children = tuple(_gen(method, child_slot, remaining - 1, pool, rng, max_children) for _ in range(arity))
    return PatternNode(kind, children=children)


def generate_individual(
    method: str,
    depth_limit: int,
    pool: TerminalPool,
    rng: Random,
    max_children: int = 4,
) -> PatternNode:
    """Generate one tree by the ``full`` or ``grow`` method; the root is
    always a Sequence and the result respects every structural invariant."""
    if method not in ("full", "grow"):
        raise GpError(f"unknown generation method {method!r}")
    if depth_limit < 2:
        raise GpError("depth_limit must be >= 2")
    arity = rng.randint(1, max_children)
    children = tuple(_gen(method, "seq", depth_limit - 1, pool, rng, max_children) for _ in range(arity))
    return seq(*children)


def init_population(config: GpConfig, pool: TerminalPool, rng: Random) -> list[Individual]:
    """Ramped half-and-half: alternate grow/full pairs while cycling the
    depth limit over [2, max_depth]."""
    out: list[Individual] = []
    ramp = list(range(2, config.max_depth + 1))
    for i in range(config.population_size):
        method = "grow" if i % 2 == 0 else "full"
        depth_limit = ramp[(i // 2) % len(ramp)]
        tree = generate_individual(method, depth_limit, pool, rng, config.max_children)
        out.append(Individual(tree=tree))
    return out


# ---------------------------------------------------------------------------
# evaluation
#
# The reference route is fitness() above, built on the recursive matcher.
# The evaluator used by the search matches whole corpora at once: every
# token-level subtree gets a per-document bitmask of matching positions
# (cached across trees and generations, since the pool terminals recur
# constantly), fixed-length sequences compose by shift-AND over numpy
# arrays, and only Repetition-bearing trees fall back to a per-document
# walk over the cached masks.  The test suite pins this engine against the
# recursive matcher and an independent brute-force matcher.

_TOKEN_LEVEL_KINDS = TERMINAL_KINDS | frozenset({Kind.AND, Kind.OR, Kind.NOT})


class _MaskEngine:
    def __init__(self, docs):
        self.docs = list(docs)
        self.lengths = [d[3] for d in self.docs]
        max_len = max(self.lengths, default=0)
        # documents longer than 63 tokens need arbitrary-width Python ints
        self._wide = max_len > 63
        self.dtype = object if self._wide else np.uint64
        self.universe = np.array([(1 << n) - 1 for n in self.lengths], dtype=self.dtype)
        self._zeros = np.zeros(len(self.docs), dtype=self.dtype)
        self._token_masks: dict[PatternNode, np.ndarray] = {}

    def token_mask(self, node: PatternNode) -> np.ndarray:
        mask = self._token_masks.get(node)
        if mask is None:
            mask = self._build_token_mask(node)
            self._token_masks[node] = mask
        return mask

    def _build_token_mask(self, node: PatternNode) -> np.ndarray:
        kind = node.kind
        if kind is Kind.WILDCARD:
            return self.universe
        if kind in (Kind.LITERAL, Kind.POS, Kind.ENTITY):
            out = []
            for norms, tags, ents, n in self.docs:
                m = 0
                if kind is Kind.LITERAL:
                    vals = node.values
                    for i in range(n):
                        if norms[i] in vals:
                            m |= 1 << i
                elif kind is Kind.POS:
                    tag = node.value
                    for i in range(n):
                        if tags[i] == tag:
                            m |= 1 << i
                else:
                    key = node.value
                    for i in range(n):
                        if key in ents[i]:
                            m |= 1 << i
                out.append(m)
            return np.array(out, dtype=self.dtype)
        parts = [self.token_mask(c) for c in node.children]
        merged = parts[0]
        for p in parts[1:]:
            merged = (merged & p) if kind is Kind.AND else (merged | p)
        if kind is Kind.NOT:
            return ~merged & self.universe
        if kind in (Kind.AND, Kind.OR):
            return merged
        raise GpError(f"not a token-level node: {kind.value}")

    def _shift(self, arr: np.ndarray, off: int) -> np.ndarray:
        if off == 0:
            return arr
        if not self._wide and off >= 64:
            return self._zeros
        return arr >> off

    def _plan(self, node: PatternNode):
        """(walk plan, fixed consumed length or None, matches-at mask or None)."""
        if node.kind in _TOKEN_LEVEL_KINDS:
            mask = self.token_mask(node)
            return ("tok", mask), 1, mask
        if node.kind is Kind.REPETITION:
            child = self.token_mask(node.children[0])
            # a run of >= 2 starts wherever the child matches here and at the next token
            return ("rep", child), None, child & self._shift(child, 1)
        parts = [self._plan(c) for c in node.children]
        plans = tuple(p[0] for p in parts)
        if all(p[1] is not None for p in parts):
            total = parts[0][1]
            mask = parts[0][2]
            for plan, length, child_mask in parts[1:]:
                mask = mask & self._shift(child_mask, total)
                total += length
            return ("seq", plans), total, mask
        return ("seq", plans), None, None

    def match_bools(self, tree: PatternNode) -> np.ndarray:
        plan, _length, mask = self._plan(tree)
        if mask is not None:
            return mask != 0
        rows = _listify_plan(plan)
        bools = np.zeros(len(self.docs), dtype=bool)
        for d, n in enumerate(self.lengths):
            for i in range(n):
                if _walk_plan(rows, d, i) is not None:
                    bools[d] = True
                    break
        return bools


def _listify_plan(plan):
    kind = plan[0]
    if kind == "seq":
        return ("seq", tuple(_listify_plan(p) for p in plan[1]))
    return (kind, plan[1].tolist())


def _walk_plan(plan, d: int, i: int):
    """End position of a deterministic span match starting at i, or None."""
    kind = plan[0]
    if kind == "tok":
        return i + 1 if (plan[1][d] >> i) & 1 else None
    if kind == "rep":
        m = plan[1][d]
        j = i
        while (m >> j) & 1:
            j += 1
        return j if j - i >= 2 else None
    for sub in plan[1]:
        i = _walk_plan(sub, d, i)
        if i is None:
            return None
    return i


def _bools_to_bits(flags) -> int:
    mask = 0
    for i in np.flatnonzero(flags):
        mask |= 1 << int(i)
    return mask


_WORKER_PREPARED: tuple | None = None


def _worker_init(pos_prep, neg_prep):
    global _WORKER_PREPARED
    _WORKER_PREPARED = (pos_prep, neg_prep)


def _worker_masks(tree: PatternNode) -> tuple[int, int]:
    pos_prep, neg_prep = _WORKER_PREPARED
    return _compute_masks(tree, pos_prep, neg_prep)


def _compute_masks(tree: PatternNode, pos_prep, neg_prep) -> tuple[int, int]:
    match = compile_matcher(tree)
    pos_mask = 0
    for idx, prep in enumerate(pos_prep):
        if match(prep):
            pos_mask |= 1 << idx
    neg_mask = 0
    for idx, prep in enumerate(neg_prep):
        if match(prep):
            neg_mask |= 1 << idx
    return pos_mask, neg_mask


class _Evaluator:
    """Caches per-tree match bitmasks over the full training split.

    Masks are position-indexed over the positive/negative document lists, so
    fitness against any working subset of positives is a couple of popcounts.
    With jobs > 1 the uncached trees fan out over a process pool running the
    compiled matcher; results are bit-identical to the sequential engine.
    """

    def __init__(self, positives: Sequence[Document], negatives: Sequence[Document], beta: float, jobs: int = 1):
        self.pos_prep = [prepare_document(d) for d in positives]
        self.neg_prep = [prepare_document(d) for d in negatives]
        self.n_pos = len(positives)
        self.beta = beta
        self.engine = _MaskEngine(self.pos_prep + self.neg_prep)
        self.cache: dict[PatternNode, tuple[int, int]] = {}
        self._pool = None
        if jobs > 1:
            self._pool = multiprocessing.Pool(
                processes=jobs, initializer=_worker_init, initargs=(self.pos_prep, self.neg_prep)
            )

    def close(self) -> None:
        if self._pool is not None:
            self._pool.close()
            self._pool.join()
            self._pool = None

    def _engine_masks(self, tree: PatternNode) -> tuple[int, int]:
        flags = self.engine.match_bools(tree)
        return _bools_to_bits(flags[: self.n_pos]), _bools_to_bits(flags[self.n_pos :])

    def masks(self, tree: PatternNode) -> tuple[int, int]:
        cached = self.cache.get(tree)
        if cached is None:
            cached = self._engine_masks(tree)
            self.cache[tree] = cached
        return cached

    def _fill_cache(self, trees: Sequence[PatternNode]) -> None:
        missing = list(dict.fromkeys(t for t in trees if t not in self.cache))
        if not missing:
            return
        if self._pool is not None:
            chunk = max(1, len(missing) // (4 * self._pool._processes))
            results = self._pool.map(_worker_masks, missing, chunksize=chunk)
        else:
            results = [self._engine_masks(t) for t in missing]
        self.cache.update(zip(missing, results))

    def scores(self, tree: PatternNode, active_mask: int) -> tuple[float, float, float]:
        pos_mask, neg_mask = self.masks(tree)
        tp = (pos_mask & active_mask).bit_count()
        fp = neg_mask.bit_count()
        fn = active_mask.bit_count() - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        return precision, recall, f_beta(precision, recall, self.beta)

    def evaluate_population(self, population: Sequence[Individual], active_mask: int) -> None:
        self._fill_cache([ind.tree for ind in population])
        seen: set[str] = set()
        for ind in population:
            ind.precision, ind.recall, ind.fitness = self.scores(ind.tree, active_mask)
            if not ind.canon:
                ind.canon = print_dsl(ind.tree)
            # penalize structural duplicates (after canonicalization) to keep diversity
            if ind.canon in seen:
                ind.sel_fitness = ind.fitness * 0.99
            else:
                ind.sel_fitness = ind.fitness
                seen.add(ind.canon)


# ---------------------------------------------------------------------------
# selection and variation


def tournament_select(
    population: Sequence[Individual],
    k: int,
    rng: Random,
    key: Callable[[Individual], float] | None = None,
) -> Individual:
    """Fittest of k distinct uniformly sampled individuals; ties prefer the
    smaller tree, then fall to a random draw."""
    if not 1 <= k <= len(population):
        raise GpError(f"tournament size {k} out of range for population of {len(population)}")
    key = key or (lambda ind: ind.fitness)
    contenders = rng.sample(list(population), k)
    best_fit = max(key(c) for c in contenders)
    finalists = [c for c in contenders if key(c) == best_fit]
    if len(finalists) > 1:
        smallest = min(size(c.tree) for c in finalists)
        finalists = [c for c in finalists if size(c.tree) == smallest]
    return finalists[0] if len(finalists) == 1 else rng.choice(finalists)


def _node_class(node: PatternNode) -> str:
    return "token" if is_token_level(node) else "span"


def _slots(tree: PatternNode) -> list[tuple[tuple[int, ...], PatternNode, str]]:
    """Every non-root position: (path, node, slot), where slot says whether
    the position sits under a Sequence ('seq') or requires a token-level
    node ('token')."""
    out: list[tuple[tuple[int, ...], PatternNode, str]] = []

    def walk(node: PatternNode, path: tuple[int, ...]):
        slot_for_children = "seq" if node.kind is Kind.SEQUENCE else "token"
        for idx, child in enumerate(node.children):
            child_path = path + (idx,)
            out.append((child_path, child, slot_for_children))
            walk(child, child_path)

    walk(tree, ())
    return out


def _replace(root: PatternNode, path: tuple[int, ...], new: PatternNode) -> PatternNode:
    if not path:
        return new
    idx = path[0]
    children = list(root.children)
    children[idx] = _replace(children[idx], path[1:], new)
    return PatternNode(root.kind, values=root.values, children=tuple(children))


def _crossover(recipient: PatternNode, donor: PatternNode, config: GpConfig, rng: Random) -> PatternNode:
    """Swap a type-compatible donor subtree into the recipient: token-level
    with token-level, Sequence/Repetition-rooted with the same.  Offspring
    deeper than max_depth are rejected with up to 3 retries, then the
    recipient survives unchanged."""
    points = _slots(recipient)
    donor_slots = _slots(donor)
    for _ in range(3):
        path, node, _slot = points[rng.randrange(len(points))]
        cls = _node_class(node)
        compatible = [d for _, d, _ in donor_slots if _node_class(d) == cls]
        if not compatible:
            continue
        sub = compatible[rng.randrange(len(compatible))]
        child = _replace(recipient, path, sub)
        if pattern_depth(child) <= config.max_depth:
            return child
    return recipient


def _grow_replacement(slot: str, budget: int, pool: TerminalPool, rng: Random, config: GpConfig) -> PatternNode:
    if budget <= 1:
        return pool.token_terminals[rng.randrange(len(pool.token_terminals))]
    return _gen("grow", slot, budget, pool, rng, config.max_children)


def _mutate(tree: PatternNode, config: GpConfig, pool: TerminalPool, rng: Random) -> PatternNode:
    """Either replace a random subtree with a freshly grown one, or point-
    mutate one terminal into another pool terminal."""
    points = _slots(tree)
    if rng.random() < 0.5:
        path, _node, slot = points[rng.randrange(len(points))]
        budget = config.max_depth - len(path)
        new = _grow_replacement(slot, budget, pool, rng, config)
        return _replace(tree, path, new)
    terminals = [(p, n, s) for p, n, s in points if n.kind in TERMINAL_KINDS]
    if not terminals:
        return tree
    path, _node, _slot = terminals[rng.randrange(len(terminals))]
    new = pool.token_terminals[rng.randrange(len(pool.token_terminals))]
    return _replace(tree, path, new)


# ---------------------------------------------------------------------------
# evolution


def _best_key(ind: Individual) -> tuple:
    return (ind.fitness, -size(ind.tree), ind.canon)


def _elite_key(ind: Individual) -> tuple:
    return (-ind.sel_fitness, size(ind.tree), ind.canon)


def evolve_one_pattern(
    positives: Sequence[Document],
    negatives: Sequence[Document],
    config: GpConfig,
    pool: TerminalPool,
    rng: Random,
    *,
    history: Optional[list] = None,
    jobs: int = 1,
    _evaluator: _Evaluator | None = None,
    _active_mask: int | None = None,
) -> Individual:
    """Evolve a single pattern and return the best individual ever seen.

    Runs at most ``max_generations`` generations; each generation copies the
    ``elitism_count`` best unchanged and fills the rest with tournament-
    selected parents passed through crossover and mutation.  Stops early when
    fitness cannot improve (1.0) or after ``stall_generations`` generations
    without improvement.
    """
    if not positives:
        raise GpError("evolve_one_pattern requires a non-empty positive set")
    owned = _evaluator is None
    evaluator = _evaluator or _Evaluator(positives, negatives, config.beta, jobs)
    active_mask = _active_mask if _active_mask is not None else (1 << len(positives)) - 1
    try:
        population = init_population(config, pool, rng)
        evaluator.evaluate_population(population, active_mask)
        best = max(population, key=_best_key)
        if history is not None:
            history.append((0, best.fitness, _mean_fitness(population)))
        stall = 0
        for generation in range(1, config.max_generations + 1):
            if best.fitness >= 1.0:
                break
            if config.stall_generations and stall >= config.stall_generations:
                break
            offspring = [
                Individual(tree=e.tree, canon=e.canon)
                for e in sorted(population, key=_elite_key)[: config.elitism_count]
            ]
            while len(offspring) < config.population_size:
                parent = tournament_select(population, config.tournament_size, rng, key=lambda i: i.sel_fitness)
                tree = parent.tree
                if rng.random() < config.crossover_rate:
                    donor = tournament_select(population, config.tournament_size, rng, key=lambda i: i.sel_fitness)
                    tree = _crossover(tree, donor.tree, config, rng)
                if rng.random() < config.mutation_rate:
                    tree = _mutate(tree, config, pool, rng)
                offspring.append(Individual(tree=tree))
            population = offspring
            evaluator.evaluate_population(population, active_mask)
            generation_best = max(population, key=_best_key)
            if _best_key(generation_best) > _best_key(best):
                if generation_best.fitness > best.fitness:
                    stall = 0
                else:
                    stall += 1
                best = generation_best
            else:
                stall += 1
            if history is not None:
                history.append((generation, generation_best.fitness, _mean_fitness(population)))
        return best
    finally:
        if owned:
            evaluator.close()


def _mean_fitness(population: Sequence[Individual]) -> float:
    return sum(i.fitness for i in population) / len(population)


# ---------------------------------------------------------------------------
# sequential covering


def learn_group(
    positives: Sequence[Document],
    negatives: Sequence[Document],
    config: GpConfig,
    pool: TerminalPool,
    rng: Random,
    *,
    feedback_type: FeedbackType = FeedbackType.DEFECT,
    history: Optional[list] = None,
    jobs: int = 1,
) -> PatternGroup:
    """Sequential covering: evolve patterns on the still-uncovered positives
    (all negatives retained), accepting a pattern only if it strictly
    increases the group F1 on the full training set.  Accepted patterns
    remove the positives they cover from the working set.  Terminates when
    no positives remain uncovered or after ``max_group_stall`` consecutive
    rejections."""
    if not positives:
        raise GpError("learn_group requires a non-empty positive set")
    evaluator = _Evaluator(positives, negatives, config.beta, jobs)
    try:
        uncovered = (1 << len(positives)) - 1
        accepted: list[PatternNode] = []
        group_pos = 0
        group_neg = 0
        group_f1 = 0.0
        stalls = 0
        while uncovered and stalls < config.max_group_stall:
            candidate = evolve_one_pattern(
                positives,
                negatives,
                config,
                pool,
                rng,
                history=history,
                _evaluator=evaluator,
                _active_mask=uncovered,
            )
            pos_mask, neg_mask = evaluator.masks(candidate.tree)
            tp = (group_pos | pos_mask).bit_count()
            fp = (group_neg | neg_mask).bit_count()
            precision = tp / (tp + fp) if tp + fp else 0.0
            recall = tp / len(positives)
            new_f1 = f_beta(precision, recall, 1.0)
            if new_f1 > group_f1:
                accepted.append(candidate.tree)
                group_pos |= pos_mask
                group_neg |= neg_mask
                group_f1 = new_f1
                uncovered &= ~pos_mask
                stalls = 0
                log.info(
                    "accepted pattern %d (group F1 %.3f, %d positives uncovered): %s",
                    len(accepted), group_f1, uncovered.bit_count(), print_dsl(candidate.tree),
                )
            else:
                stalls += 1
                log.info("rejected candidate (stall %d/%d): %s", stalls, config.max_group_stall, print_dsl(candidate.tree))
        return PatternGroup(feedback_type=feedback_type, patterns=tuple(accepted), provenance=Provenance.LEARNED)
    finally:
        evaluator.close()
