"""The bounded-equivalence engine and the full-equivalence front doors.

N-equivalence of two queries is decided by a finite search: build BASE,
the set of every atom formable from the queries' predicates over their
constants plus N fresh variables, then walk all pairs of a subset S of
BASE and a complete ordering L of the terms.  Each pair stands for the
infinitely many concrete databases obtained by instantiating S with an
assignment satisfying L; the queries are evaluated symbolically over it
and each shared group leaves an ordered identity for the identity
deciders.  The first failure is instantiated into a concrete
counterexample database and re-verified against the concrete evaluator
before being reported.

Orderings that equate two distinct terms are skipped: any database they
describe is also described by a smaller subset with an injective
ordering, and injectivity is what makes symbolic group keys and negated
atoms behave like their concrete counterparts.

Full equivalence reduces to N-equivalence at the pair's term size for
the decomposable functions (count, sum, max, min, parity, top2) and for
prod over the rationals; avg and cntd are reported unsupported.
"""

from __future__ import annotations

import itertools
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterator, Optional

from . import oracle
from .aggregation import FUNCTIONS, apply
from .model import (
    Comparison, Database, Query, RATIONALS, Var, term_size_pair,
    term_sort_key,
)
from .orderings import (
    Assignment, CompleteOrdering, assign_tuple, enumerate_complete_orderings,
    entails, satisfying_assignment,
)

EQUIVALENT = "equivalent"
NOT_EQUIVALENT = "not_equivalent"
UNSUPPORTED = "unsupported"

#: functions whose equivalence problem reduces to local equivalence
DECOMPOSABLE = ("count", "parity", "sum", "max", "min", "top2", "bot2")


@dataclass(frozen=True)
class SymbolicDatabase:
    """A subset of BASE together with a complete ordering of its terms."""

    atoms: frozenset  # of (predicate, tuple of Term)
    ordering: CompleteOrdering


@dataclass(frozen=True)
class Counterexample:
    database: Database
    group: tuple
    left_value: object
    right_value: object


@dataclass(frozen=True)
class Verdict:
    status: str
    counterexample: Optional[Counterexample] = None
    n_used: Optional[int] = None
    reason: Optional[str] = None

    @property
    def equivalent(self) -> bool:
        return self.status == EQUIVALENT


# ---------------------------------------------------------------------------
# BASE and symbolic evaluation
# ---------------------------------------------------------------------------

def merged_predicates(q: Query, q2: Query) -> dict:
    predicates = dict(q.predicates())
    for pred, arity in q2.predicates().items():
        if predicates.setdefault(pred, arity) != arity:
            raise ValueError(f"predicate {pred} has conflicting arities")
    return predicates


def fresh_variables(n: int) -> list:
    # lowercase names cannot collide with parsed query variables
    return [Var(f"u{i}") for i in range(1, n + 1)]


def build_base(q: Query, q2: Query, n: int):
    """Terms (query constants plus n fresh variables) and all atoms over
    them, deterministically ordered."""
    constants = sorted({t for t in q.constants() | q2.constants()},
                       key=term_sort_key)
    terms = constants + fresh_variables(n)
    predicates = merged_predicates(q, q2)
    atoms = [(pred, combo)
             for pred in sorted(predicates)
             for combo in itertools.product(terms, repeat=predicates[pred])]
    return terms, atoms


def evaluate_symbolic(q: Query, sdb: SymbolicDatabase) -> dict:
    """Group the symbolic satisfying assignments of `q` over `sdb`.

    Returns {instantiated grouping tuple: bag of aggregate-argument
    tuples}, all entries being terms of the ordering.  Labeled-assignment
    semantics: an assignment satisfying several disjuncts contributes one
    bag element per disjunct.
    """
    ordering = sdb.ordering
    terms = sorted(ordering.terms(), key=term_sort_key)
    groups: dict = {}
    for cond in q.disjuncts:
        variables = sorted(cond.variables(), key=term_sort_key)
        for values in itertools.product(terms, repeat=len(variables)):
            gamma = dict(zip(variables, values))
            if not _satisfied_symbolically(cond, gamma, sdb):
                continue
            key = tuple(gamma.get(t, t) for t in q.grouping)
            bag = groups.setdefault(key, [])
            if q.aggregate is not None:
                bag.append(tuple(gamma.get(t, t)
                                 for t in q.aggregate.args))
            else:
                bag.append(())
    return groups


def _satisfied_symbolically(cond, gamma: dict, sdb: SymbolicDatabase) -> bool:
    for atom in cond.atoms:
        instantiated = (atom.predicate,
                        tuple(gamma.get(t, t) for t in atom.args))
        if atom.positive != (instantiated in sdb.atoms):
            return False
    for c in cond.comparisons:
        lhs = gamma.get(c.lhs, c.lhs)
        rhs = gamma.get(c.rhs, c.rhs)
        if not entails(sdb.ordering, Comparison(lhs, c.op, rhs)):
            return False
    return True


# ---------------------------------------------------------------------------
# The (S, L) search
# ---------------------------------------------------------------------------

def _subsets(atoms: list) -> Iterator[tuple]:
    for size in range(len(atoms) + 1):
        yield from itertools.combinations(atoms, size)


def _orderings_for(terms, domain) -> list:
    return list(enumerate_complete_orderings(terms, domain,
                                             injective_only=True))


def _prepare_assignments(q: Query, ordering: CompleteOrdering, terms: list,
                         atom_bit: dict) -> list:
    """Satisfying assignments of `q` over the full BASE under one ordering,
    with their positive and negated atoms as bitmasks.

    Comparisons depend only on the ordering, so they are settled here once;
    per subset S only the two mask tests remain.
    """
    prepared = []
    for cond in q.disjuncts:
        variables = sorted(cond.variables(), key=term_sort_key)
        comparisons = cond.comparisons
        for values in itertools.product(terms, repeat=len(variables)):
            gamma = dict(zip(variables, values))
            if not all(entails(ordering,
                               Comparison(gamma.get(c.lhs, c.lhs), c.op,
                                          gamma.get(c.rhs, c.rhs)))
                       for c in comparisons):
                continue
            positive = negated = 0
            for atom in cond.atoms:
                bit = atom_bit[(atom.predicate,
                                tuple(gamma.get(t, t) for t in atom.args))]
                if atom.positive:
                    positive |= bit
                else:
                    negated |= bit
            if positive & negated:
                continue  # an atom required both present and absent
            key = tuple(gamma.get(t, t) for t in q.grouping)
            item = (tuple(gamma.get(t, t) for t in q.aggregate.args)
                    if q.aggregate is not None else ())
            prepared.append((positive, negated, key, item))
    return prepared


def _collect_groups(prepared: list, mask: int) -> dict:
    groups: dict = {}
    for positive, negated, key, item in prepared:
        if positive & mask == positive and not negated & mask:
            groups.setdefault(key, []).append(item)
    return groups


def _pair_counterexample(q: Query, q2: Query, subset, ordering,
                         prep=None) -> Optional[Counterexample]:
    """Check one (S, L) unit of work; None means no disagreement."""
    sdb = SymbolicDatabase(frozenset(subset), ordering)
    if prep is None:
        groups1 = evaluate_symbolic(q, sdb)
        groups2 = evaluate_symbolic(q2, sdb)
    else:
        prep1, prep2, atom_bit = prep
        mask = 0
        for atom in subset:
            mask |= atom_bit[atom]
        groups1 = _collect_groups(prep1, mask)
        groups2 = _collect_groups(prep2, mask)
    keys1, keys2 = set(groups1), set(groups2)
    if keys1 != keys2:
        key = min(keys1 ^ keys2, key=lambda k: tuple(term_sort_key(t) for t in k))
        witness = satisfying_assignment(ordering)
        return _materialize(q, q2, sdb, key, groups1, groups2, witness)
    func = q.aggregate.function
    from .identity import OrderedIdentity, decide
    for key in sorted(keys1, key=lambda k: tuple(term_sort_key(t) for t in k)):
        left, right = groups1[key], groups2[key]
        if Counter(left) == Counter(right):
            continue
        verdict = decide(OrderedIdentity(ordering, tuple(left), tuple(right),
                                         func))
        if not verdict.valid:
            return _materialize(q, q2, sdb, key, groups1, groups2,
                                verdict.witness)
    return None


def _materialize(q: Query, q2: Query, sdb: SymbolicDatabase, key,
                 groups1, groups2, witness: Assignment) -> Counterexample:
    database = Database(frozenset(
        (pred, assign_tuple(witness, args)) for pred, args in sdb.atoms))
    group = assign_tuple(witness, key)
    left = right = None
    if q.aggregate is not None:
        if key in groups1:
            left = apply(q.aggregate.function,
                         [assign_tuple(witness, t) for t in groups1[key]])
        if key in groups2:
            right = apply(q2.aggregate.function,
                          [assign_tuple(witness, t) for t in groups2[key]])
    counterexample = Counterexample(database, group, left, right)
    _verify_counterexample(q, q2, counterexample)
    return counterexample


def _verify_counterexample(q: Query, q2: Query, ce: Counterexample):
    """Re-evaluate both queries concretely; the reported disagreement must
    reproduce exactly."""
    left = dict(oracle.eval_concrete(q, ce.database))
    right = dict(oracle.eval_concrete(q2, ce.database))
    if left.get(ce.group) != ce.left_value or right.get(ce.group) != ce.right_value:
        raise AssertionError("counterexample failed concrete re-verification")
    if left.get(ce.group) == right.get(ce.group):
        raise AssertionError("counterexample does not separate the queries")


def n_equivalent(q: Query, q2: Query, n: int, workers: int = 1) -> Verdict:
    """Do the queries agree on every database with at most `n` constants?"""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if q.domain != q2.domain:
        raise ValueError("queries range over different domains")
    if q.aggregate is None or q2.aggregate is None:
        raise ValueError("n_equivalent expects aggregate queries")
    if (q.aggregate.function.name != q2.aggregate.function.name
            or len(q.grouping) != len(q2.grouping)):
        return _head_mismatch(q, q2, n)

    if workers > 1:
        ce = _parallel_scan(q, q2, n, workers)
    else:
        hit = _scan_chunk((q, q2, n, 1, 0))
        ce = hit[1] if hit is not None else None
    if ce is not None:
        return Verdict(NOT_EQUIVALENT, counterexample=ce, n_used=n)
    return Verdict(EQUIVALENT, n_used=n)


def _scan_chunk(args):
    """One worker's stride over the (S, L) stream, in the global order."""
    q, q2, n, workers, offset = args
    base_terms, base = build_base(q, q2, n)
    orderings = _orderings_for(base_terms, q.domain)
    atom_bit = {atom: 1 << i for i, atom in enumerate(base)}
    preps = [
        (_prepare_assignments(q, ordering, base_terms, atom_bit),
         _prepare_assignments(q2, ordering, base_terms, atom_bit),
         atom_bit)
        for ordering in orderings]
    index = 0
    for subset in _subsets(base):
        for ordering, prep in zip(orderings, preps):
            if index % workers == offset:
                ce = _pair_counterexample(q, q2, subset, ordering, prep)
                if ce is not None:
                    return index, ce
            index += 1
    return None


def _parallel_scan(q: Query, q2: Query, n: int,
                   workers: int) -> Optional[Counterexample]:
    jobs = [(q, q2, n, workers, w) for w in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = [r for r in pool.map(_scan_chunk, jobs) if r is not None]
    if not results:
        return None
    # the lowest global index wins, so scheduling cannot change the output
    return min(results, key=lambda r: r[0])[1]


def _head_mismatch(q: Query, q2: Query, n: int) -> Verdict:
    """Different function or grouping arity: hunt for a concrete database
    where the result sets differ; if the bounded search finds none, the
    queries agree vacuously at this bound."""
    terms, base = build_base(q, q2, n)
    orderings = _orderings_for(terms, q.domain)
    for subset in _subsets(base):
        for ordering in orderings:
            witness = satisfying_assignment(ordering)
            database = Database(frozenset(
                (pred, assign_tuple(witness, args)) for pred, args in subset))
            left = dict(oracle.eval_concrete(q, database))
            right = dict(oracle.eval_concrete(q2, database))
            if left != right:
                keys = sorted(set(left) ^ set(right)) or sorted(
                    k for k in left if left[k] != right.get(k))
                key = keys[0]
                ce = Counterexample(database, key, left.get(key),
                                    right.get(key))
                return Verdict(NOT_EQUIVALENT, counterexample=ce, n_used=n)
    return Verdict(EQUIVALENT, n_used=n)


# ---------------------------------------------------------------------------
# Local and full equivalence
# ---------------------------------------------------------------------------

def locally_equivalent(q: Query, q2: Query, workers: int = 1) -> Verdict:
    """N-equivalence at the pair's term size."""
    return n_equivalent(q, q2, term_size_pair(q, q2), workers=workers)


def equivalent(q: Query, q2: Query, workers: int = 1) -> Verdict:
    """Full equivalence, via the reduction to local equivalence.

    Sound and complete for the decomposable functions and for prod over
    the rationals; avg and cntd (and prod over the integers) are open and
    reported unsupported.
    """
    if q.aggregate is None or q2.aggregate is None:
        raise ValueError("equivalent expects aggregate queries; "
                         "use bagset_equivalent for plain ones")
    func = q.aggregate.function
    if (func.name != q2.aggregate.function.name
            or len(q.grouping) != len(q2.grouping)):
        # the local-equivalence reduction needs matching heads; a local
        # counterexample still disproves equivalence outright
        verdict = locally_equivalent(q, q2, workers=workers)
        if verdict.status == NOT_EQUIVALENT:
            return verdict
        return Verdict(UNSUPPORTED, reason=(
            "queries have different head signatures; equivalence is only "
            "decided for matching heads"))
    if func.name in DECOMPOSABLE:
        return locally_equivalent(q, q2, workers=workers)
    if func.prod_special:
        if q.domain == RATIONALS:
            return locally_equivalent(q, q2, workers=workers)
        return Verdict(UNSUPPORTED, reason=(
            "equivalence of prod queries is only decided over the rationals"))
    return Verdict(UNSUPPORTED, reason=(
        f"full equivalence for {func.name} queries is not decided; "
        f"bounded equivalence (nequiv) remains available"))


def bagset_equivalent(q: Query, q2: Query, workers: int = 1) -> Verdict:
    """Bag-set equivalence of two non-aggregate queries: equivalence of
    the queries with count adjoined to their heads."""
    if q.aggregate is not None or q2.aggregate is not None:
        raise ValueError("bagset_equivalent expects non-aggregate queries")
    from .model import AggregateTerm
    counted = AggregateTerm(FUNCTIONS["count"], ())
    return equivalent(replace(q, aggregate=counted),
                      replace(q2, aggregate=counted), workers=workers)
