"""Independent oracles and random generators for the test suite.

Nothing here shares code with the library's decision paths: weak orders
are enumerated through canonical rank maps, rational feasibility goes
through a from-scratch Fourier-Motzkin elimination, and integer
feasibility through plain enumeration of a value box.  Where a test
freezes an expected value, one of these oracles computed it.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from aggequiv.model import Const, INTEGERS, Var, is_const, is_var
from aggequiv.orderings import CompleteOrdering


# ---------------------------------------------------------------------------
# Weak orders via surjective rank maps
# ---------------------------------------------------------------------------

def brute_force_weak_orders(terms):
    """Every weak order on `terms` as a tuple of frozen classes, derived
    from surjective maps onto an initial segment of the naturals."""
    items = sorted(terms, key=str)
    n = len(items)
    out = set()
    if n == 0:
        return {()}
    for ranks in itertools.product(range(n), repeat=n):
        k = max(ranks) + 1
        if set(ranks) != set(range(k)):
            continue
        classes = tuple(frozenset(items[i] for i in range(n)
                                  if ranks[i] == level)
                        for level in range(k))
        out.add(classes)
    return out


def ordering_as_classes(ordering: CompleteOrdering):
    return tuple(frozenset(cls) for cls in ordering.classes)


# ---------------------------------------------------------------------------
# Fourier-Motzkin elimination over exact rationals
# ---------------------------------------------------------------------------

def fm_feasible(constraints, variables) -> bool:
    """Is a conjunction of strict linear inequalities satisfiable over Q?

    Each constraint is (coeffs, const) read as
    sum(coeffs[v] * v) + const > 0.
    """
    rows = [dict(coeffs, _const=const) for coeffs, const in constraints]
    for var in variables:
        lowers, uppers, rest = [], [], []
        for row in rows:
            coef = row.get(var, Fraction(0))
            if coef > 0:
                lowers.append(row)
            elif coef < 0:
                uppers.append(row)
            else:
                rest.append(row)
        new_rows = rest
        for low in lowers:
            for up in uppers:
                scale_l = low[var]
                scale_u = -up[var]
                combined = {"_const": low["_const"] * scale_u
                            + up["_const"] * scale_l}
                for key in set(low) | set(up):
                    if key in ("_const", var):
                        continue
                    combined[key] = (low.get(key, Fraction(0)) * scale_u
                                     + up.get(key, Fraction(0)) * scale_l)
                new_rows.append(combined)
        rows = [{k: v for k, v in row.items() if k == "_const" or v != 0}
                for row in new_rows]
    # all variables eliminated: each surviving row is a constant constraint
    assert all(len(row) == 1 for row in rows)
    return all(row["_const"] > 0 for row in rows)


def sum_identity_valid_by_fm(ordering: CompleteOrdering, left, right) -> bool:
    """Independent verdict for a rational sum identity: valid iff neither
    the positive nor the negative strict difference is feasible."""
    representative = {}
    for cls in ordering.classes:
        rep = next((t for t in cls if is_const(t)), cls[0])
        for t in cls:
            representative[t] = rep
    coeffs = {}
    const = Fraction(0)
    for bag, sign in ((left, 1), (right, -1)):
        for (raw,) in bag:
            term = representative.get(raw, raw)
            if is_const(term):
                const += sign * term.value
            else:
                coeffs[term] = coeffs.get(term, Fraction(0)) + sign
    chain = _chain_constraints(ordering)
    variables = [t for cls in ordering.classes for t in cls if is_var(t)]
    positive = chain + [(dict(coeffs), const)]
    negative = chain + [({t: -c for t, c in coeffs.items()}, -const)]
    return not fm_feasible(positive, variables) and \
        not fm_feasible(negative, variables)


def _chain_constraints(ordering: CompleteOrdering):
    """The ordering as strict constraints rep_{i+1} - rep_i > 0, with
    anchored classes folded to their constant values."""
    out = []
    reps = []
    for cls in ordering.classes:
        const = next((t for t in cls if is_const(t)), None)
        reps.append(const if const is not None else cls[0])
    for a, b in zip(reps, reps[1:]):
        coeffs = {}
        const = Fraction(0)
        if is_const(b):
            const += b.value
        else:
            coeffs[b] = coeffs.get(b, Fraction(0)) + 1
        if is_const(a):
            const -= a.value
        else:
            coeffs[a] = coeffs.get(a, Fraction(0)) - 1
        out.append((coeffs, const))
    return out


# ---------------------------------------------------------------------------
# Integer feasibility by box enumeration
# ---------------------------------------------------------------------------

def int_sum_identity_box_refutation(ordering: CompleteOrdering, left, right,
                                    radius: int = 4):
    """Search integer assignments near the canonical one for a point where
    the two sums differ; returns such an assignment or None."""
    from aggequiv.orderings import satisfying_assignment

    base = satisfying_assignment(ordering)
    class_reps = [cls[0] for cls in ordering.classes]
    anchored = [next((t.value for t in cls if is_const(t)), None)
                for cls in ordering.classes]
    spans = []
    for rep, anchor in zip(class_reps, anchored):
        if anchor is not None:
            spans.append([anchor])
        else:
            center = base[rep]
            spans.append([center + d for d in range(-radius, radius + 1)])
    for values in itertools.product(*spans):
        if any(b <= a for a, b in zip(values, values[1:])):
            continue
        assignment = {}
        for cls, value in zip(ordering.classes, values):
            for t in cls:
                assignment[t] = value
        def total(bag):
            return sum(t.value if is_const(t) else assignment[t]
                       for (t,) in bag)
        if total(left) != total(right):
            return assignment
    return None


# ---------------------------------------------------------------------------
# Random generators (all driven by a seeded Random instance)
# ---------------------------------------------------------------------------

def random_ordering(rng: random.Random, domain: str, max_vars: int = 4,
                    max_consts: int = 2) -> CompleteOrdering:
    from aggequiv.orderings import enumerate_complete_orderings

    n_vars = rng.randint(1, max_vars)
    n_consts = rng.randint(0, max_consts)
    variables = [Var(name) for name in ["x", "y", "z", "w"][:n_vars]]
    constants = [Const(Fraction(v))
                 for v in rng.sample(range(-3, 8), n_consts)]
    options = list(enumerate_complete_orderings(variables + constants, domain))
    return rng.choice(options)


def random_bag(rng: random.Random, ordering: CompleteOrdering, arity: int,
               max_len: int = 4) -> tuple:
    terms = sorted(ordering.terms(), key=str)
    length = rng.randint(1, max_len)
    if arity == 0:
        return tuple(() for _ in range(length))
    return tuple((rng.choice(terms),) for _ in range(length))


def random_satisfying_assignment(rng: random.Random,
                                 ordering: CompleteOrdering) -> dict:
    """A random (not canonical) assignment satisfying the ordering."""
    values = []
    classes = ordering.classes
    anchors = [(i, ordering.class_constant(i)) for i in range(len(classes))]
    anchors = [(i, v) for i, v in anchors if v is not None]
    integer = ordering.domain == INTEGERS

    def random_step():
        if integer:
            return Fraction(rng.randint(1, 3))
        return Fraction(rng.randint(1, 300), rng.randint(80, 100))

    if not anchors:
        current = Fraction(rng.randint(-5, 5))
        for _ in classes:
            values.append(current)
            current = current + random_step()
    else:
        values = [None] * len(classes)
        for i, v in anchors:
            values[i] = v
        first_pos, first_val = anchors[0]
        current = first_val
        for i in range(first_pos - 1, -1, -1):
            current = current - random_step()
            values[i] = current
        last_pos, last_val = anchors[-1]
        current = last_val
        for i in range(last_pos + 1, len(classes)):
            current = current + random_step()
            values[i] = current
        for (p, a), (np_, b) in zip(anchors, anchors[1:]):
            gap = np_ - p - 1
            if gap <= 0:
                continue
            if integer:
                picks = sorted(rng.sample(range(int(a) + 1, int(b)), gap))
                picks = [Fraction(v) for v in picks]
            else:
                picks = sorted(a + (b - a) * Fraction(rng.randint(1, 9999), 10000)
                               for _ in range(gap))
                while len(set(picks)) < gap:
                    picks = sorted(a + (b - a)
                                   * Fraction(rng.randint(1, 9999), 10000)
                                   for _ in range(gap))
            for offset, value in enumerate(picks, start=1):
                values[p + offset] = value
    assignment = {}
    for cls, value in zip(classes, values):
        for t in cls:
            assignment[t] = value
    return assignment
