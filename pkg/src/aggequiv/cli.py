"""Command-line front end for the equivalence decision procedures.

Exit codes: 0 equivalent (or valid / verified), 1 not equivalent (a
counterexample was emitted), 2 error or unsupported input, 64 usage.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from typing import Optional

from . import engine, identity, oracle
from .aggregation import FUNCTIONS, format_value, value_to_json
from .model import Const, INTEGERS, Query, RATIONALS, ValidationError
from .orderings import CompleteOrdering, is_satisfiable_order
from .parsing import (
    ArityRegistry, ParseError, format_database, format_fact, parse_database,
    parse_queries, parse_term,
)
from .quasilinear import equivalent_quasilinear

USAGE_EXIT = 64
MAX_BASE = 24
MAX_N = 5


@dataclass
class RunConfig:
    command: str
    domain: str = RATIONALS
    n: Optional[int] = None
    force: bool = False
    json_output: bool = False
    cap: int = 2 ** 20
    workers: int = 1
    save_counterexample: Optional[str] = None

    def validate(self):
        if self.n is not None and self.n < 0:
            raise UsageError("--n must be nonnegative")
        if self.workers < 1:
            raise UsageError("--workers must be at least 1")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="aggequiv", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, queries=2):
        if queries:
            p.add_argument("queries", nargs="+" if queries == 2 else 1,
                           metavar="QUERYFILE",
                           help="two query files, or one file holding two "
                                "declarations" if queries == 2
                           else "query file")
        p.add_argument("--domain", choices=[INTEGERS, RATIONALS],
                       default=RATIONALS,
                       help="numeric domain the comparisons range over")
        p.add_argument("--json", action="store_true", dest="json_output",
                       help="machine-readable output on stdout")

    def engine_flags(p):
        p.add_argument("--force", action="store_true",
                       help="run even past the search-size guardrail")
        p.add_argument("--workers", type=int, default=1,
                       help="partition the search across processes")
        p.add_argument("--save-counterexample", metavar="FILE",
                       help="write the counterexample database here")

    p = sub.add_parser("equiv", help="full equivalence")
    common(p); engine_flags(p)

    p = sub.add_parser("nequiv", help="N-bounded equivalence")
    p.add_argument("--n", type=int, required=True,
                   help="database carrier bound")
    common(p); engine_flags(p)

    p = sub.add_parser("local-equiv",
                       help="equivalence over term-size-bounded databases")
    common(p); engine_flags(p)

    p = sub.add_parser("quasilinear",
                       help="polynomial fast path for quasilinear queries")
    common(p)
    p.add_argument("--save-counterexample", metavar="FILE")
    p.add_argument("--cap", type=int, default=2 ** 20,
                   help="candidate bound for the exhaustive fallback")

    p = sub.add_parser("bagset-equiv",
                       help="bag-set equivalence of non-aggregate queries")
    common(p); engine_flags(p)

    p = sub.add_parser("eval", help="evaluate a query over a database")
    common(p, queries=1)
    p.add_argument("-d", "--database", required=True, metavar="DBFILE")

    p = sub.add_parser("check-decomposition",
                       help="build and verify a database decomposition")
    common(p)
    p.add_argument("-d", "--database", required=True, metavar="DBFILE")
    p.add_argument("--group", required=True,
                   help="comma-separated grouping constants, e.g. '1,3/2'")

    p = sub.add_parser("check-identity",
                       help="decide an ordered identity from a file")
    p.add_argument("identity_file", metavar="IDENTITYFILE")
    p.add_argument("--json", action="store_true", dest="json_output")

    return parser


# ---------------------------------------------------------------------------
# Input loading
# ---------------------------------------------------------------------------

def _load_pair(paths, domain):
    registry = ArityRegistry()
    queries = []
    for path in paths:
        with open(path, encoding="utf-8") as handle:
            queries.extend(parse_queries(handle.read(), domain, registry))
    if len(queries) != 2:
        raise UsageError(
            f"expected exactly two query declarations, found {len(queries)}")
    return queries[0], queries[1], registry


def _load_single(path, domain):
    registry = ArityRegistry()
    with open(path, encoding="utf-8") as handle:
        queries = parse_queries(handle.read(), domain, registry)
    if len(queries) != 1:
        raise UsageError(
            f"expected exactly one query declaration, found {len(queries)}")
    return queries[0], registry


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _counterexample_json(ce) -> Optional[dict]:
    if ce is None:
        return None
    return {
        "facts": [format_fact(f) for f in ce.database.sorted_facts()],
        "grouping": [format_value(v) for v in ce.group],
        "values": [value_to_json(ce.left_value), value_to_json(ce.right_value)],
    }


def _report_verdict(verdict, config: RunConfig, started: float) -> int:
    payload = {
        "status": verdict.status,
        "n_used": verdict.n_used,
        "counterexample": _counterexample_json(verdict.counterexample),
        "timings": {"total_s": round(time.monotonic() - started, 6)},
    }
    if verdict.reason:
        payload["reason"] = verdict.reason
    if config.json_output:
        print(json.dumps(payload))
    else:
        print(f"status: {verdict.status}")
        if verdict.n_used is not None:
            print(f"n_used: {verdict.n_used}")
        if verdict.reason:
            print(f"reason: {verdict.reason}")
        if verdict.counterexample is not None:
            ce = verdict.counterexample
            print("counterexample database:")
            text = format_database(ce.database)
            print("  " + text.replace("\n", "\n  ") if text else "  (empty)")
            group = ", ".join(format_value(v) for v in ce.group)
            print(f"grouping tuple: ({group})")
            print(f"left value:  {format_value(ce.left_value)}")
            print(f"right value: {format_value(ce.right_value)}")
    if verdict.counterexample is not None and config.save_counterexample:
        with open(config.save_counterexample, "w", encoding="utf-8") as out:
            out.write(format_database(verdict.counterexample.database) + "\n")
    if verdict.status == engine.EQUIVALENT:
        return 0
    if verdict.status == engine.NOT_EQUIVALENT:
        return 1
    return 2


def _guardrail(q: Query, q2: Query, n: int, config: RunConfig):
    _, base = engine.build_base(q, q2, n)
    if not config.force and (len(base) > MAX_BASE or n > MAX_N):
        raise SystemExit(_fail(
            f"refusing a search over 2^{len(base)} atom subsets "
            f"(|BASE| = {len(base)}, N = {n}); the cost is doubly "
            f"exponential. Pass --force to run anyway.", config))


def _fail(message: str, config: RunConfig) -> int:
    if config.json_output:
        print(json.dumps({"status": "error", "reason": message}))
    else:
        print(f"error: {message}", file=sys.stderr)
    return 2


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_pairwise(args, config: RunConfig) -> int:
    started = time.monotonic()
    q, q2, _ = _load_pair(args.queries, config.domain)
    if config.command == "equiv":
        _guardrail(q, q2, _planned_n(q, q2), config)
        verdict = engine.equivalent(q, q2, workers=config.workers)
    elif config.command == "local-equiv":
        _guardrail(q, q2, _planned_n(q, q2), config)
        verdict = engine.locally_equivalent(q, q2, workers=config.workers)
    elif config.command == "nequiv":
        _guardrail(q, q2, config.n, config)
        verdict = engine.n_equivalent(q, q2, config.n, workers=config.workers)
    elif config.command == "bagset-equiv":
        _guardrail(q, q2, _planned_n(q, q2), config)
        verdict = engine.bagset_equivalent(q, q2, workers=config.workers)
    elif config.command == "quasilinear":
        verdict = equivalent_quasilinear(q, q2, cap=config.cap)
    else:  # pragma: no cover
        raise AssertionError(config.command)
    return _report_verdict(verdict, config, started)


def _planned_n(q: Query, q2: Query) -> int:
    from .model import term_size_pair
    return term_size_pair(q, q2)


def _cmd_eval(args, config: RunConfig) -> int:
    q, registry = _load_single(args.queries[0], config.domain)
    with open(args.database, encoding="utf-8") as handle:
        db = parse_database(handle.read(), config.domain, registry)
    results = sorted(oracle.eval_concrete(q, db))
    if config.json_output:
        if q.aggregate is None:
            payload = [{"group": [format_value(v) for v in key]}
                       for key in results]
        else:
            payload = [{"group": [format_value(v) for v in key],
                        "value": value_to_json(value)}
                       for key, value in results]
        print(json.dumps({"results": payload}))
    else:
        for item in results:
            if q.aggregate is None:
                print("(" + ", ".join(format_value(v) for v in item) + ")")
            else:
                key, value = item
                group = ", ".join(format_value(v) for v in key)
                print(f"({group}) -> {format_value(value)}")
    return 0


def _cmd_check_decomposition(args, config: RunConfig) -> int:
    q, q2, registry = _load_pair(args.queries, config.domain)
    with open(args.database, encoding="utf-8") as handle:
        db = parse_database(handle.read(), config.domain, registry)
    group = []
    for chunk in args.group.split(","):
        chunk = chunk.strip()
        if chunk:
            term = parse_term(chunk)
            if not isinstance(term, Const):
                raise UsageError(f"grouping value {chunk!r} is not a constant")
            group.append(term.value)
    family = oracle.build_decomposition(db, q, q2, tuple(group))
    ok = oracle.verify_decomposition(family, db, q, q2, tuple(group))
    if config.json_output:
        print(json.dumps({
            "databases": [len(part) for part in family],
            "verified": ok,
        }))
    else:
        print(f"decomposition into {len(family)} database(s), "
              f"sizes {[len(part) for part in family]}")
        print("verified" if ok else "verification FAILED")
    return 0 if ok else 1


def _cmd_check_identity(args, config: RunConfig) -> int:
    with open(args.identity_file, encoding="utf-8") as handle:
        ident = _parse_identity(handle.read())
    verdict = identity.decide(ident)
    if config.json_output:
        witness = None
        if verdict.witness is not None:
            witness = {str(t): format_value(v)
                       for t, v in sorted(verdict.witness.items(),
                                          key=lambda kv: str(kv[0]))}
        print(json.dumps({"valid": verdict.valid, "witness": witness}))
    else:
        print("valid" if verdict.valid else "invalid")
        if verdict.witness is not None:
            for t, v in sorted(verdict.witness.items(),
                               key=lambda kv: str(kv[0])):
                print(f"  {t} = {format_value(v)}")
    return 0 if verdict.valid else 1


def _parse_identity(text: str):
    """Ordered-identity file format::

        domain: int
        function: sum
        ordering: 0 < X < Y = Z < 7
        left: {X, X, Y}
        right: {7, Z}

    Nullary functions write bag elements as ``()``.
    """
    fields = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ValueError(f"bad identity line: {line!r}")
        key, value = line.split(":", 1)
        fields[key.strip().lower()] = value.strip()
    for required in ("function", "ordering", "left", "right"):
        if required not in fields:
            raise ValueError(f"identity file is missing {required!r}")
    domain = fields.get("domain", RATIONALS)
    if domain not in (INTEGERS, RATIONALS):
        raise ValueError(f"unknown domain {domain!r}")
    name = fields["function"]
    if name not in FUNCTIONS:
        raise ValueError(f"unknown aggregation function {name!r}")
    func = FUNCTIONS[name]

    classes = []
    for chunk in fields["ordering"].split("<"):
        members = [parse_term(part.strip())
                   for part in chunk.split("=") if part.strip()]
        if members:
            classes.append(members)
    if not is_satisfiable_order(classes, domain):
        raise ValueError("the ordering is not satisfiable over the domain")
    ordering = CompleteOrdering.of(classes, domain)

    def bag(source: str):
        source = source.strip()
        if not (source.startswith("{") and source.endswith("}")):
            raise ValueError("bags are written {t1, t2, ...}")
        inner = source[1:-1].strip()
        if not inner:
            return ()
        items = []
        for part in inner.split(","):
            part = part.strip()
            if part == "()":
                items.append(())
            else:
                items.append((parse_term(part),))
        return tuple(items)

    return identity.OrderedIdentity(ordering, bag(fields["left"]),
                                    bag(fields["right"]), func)


# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = RunConfig(
            command=args.command,
            domain=getattr(args, "domain", RATIONALS),
            n=getattr(args, "n", None),
            force=getattr(args, "force", False),
            json_output=getattr(args, "json_output", False),
            cap=getattr(args, "cap", 2 ** 20),
            workers=getattr(args, "workers", 1),
            save_counterexample=getattr(args, "save_counterexample", None),
        )
        config.validate()
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT

    try:
        if config.command in ("equiv", "nequiv", "local-equiv",
                              "quasilinear", "bagset-equiv"):
            return _cmd_pairwise(args, config)
        if config.command == "eval":
            return _cmd_eval(args, config)
        if config.command == "check-decomposition":
            return _cmd_check_decomposition(args, config)
        if config.command == "check-identity":
            return _cmd_check_identity(args, config)
        raise AssertionError(config.command)  # pragma: no cover
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except (ParseError, ValidationError, ValueError, OSError) as exc:
        return _fail(str(exc), config)


if __name__ == "__main__":
    sys.exit(main())
