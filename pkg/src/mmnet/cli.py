"""Command-line front end.

Subcommands: run (deterministic auto-fire), step (interactive token game),
explore (bounded state space), reach (nonempty-place search), lint
(structural validation plus advisory consistency checks), patterns emit
(write a shipped pattern bundle). Exit codes: 0 success, 2 validation,
3 runtime error, 4 file I/O.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys

from .actions import StorageInstance, lint_consistency, lint_storage
from .errors import MMNetError, NoSupply, ParseError
from .media import EMPTY_STORE, dump_store, load_store
from .net import validate
from .netdef import emit_netdef, load_net_file
from .patterns import (
    BUILDERS,
    PatternConfig,
    detector_seed,
    enricher_seed,
    filter_seed,
    pipeline_net,
    pipeline_seed,
    splitter_seed,
)
from .rdf import EMPTY_GRAPH, parse_ntriples, serialize_ntriples
from .runtime import (
    Bounds,
    Supply,
    enabled_bindings,
    explore,
    fire,
    initial_snapshot,
    marking_summary,
    reachable_nonempty,
    run_to_quiescence,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
EXIT_IO = 4


def _add_common(p: argparse.ArgumentParser, needs_net=True):
    if needs_net:
        p.add_argument("--net", required=True, help="net-definition file")
    p.add_argument("--triples", help="N-Triples seed for the metadata store")
    p.add_argument("--objects", help="JSON seed for the object store")
    p.add_argument("--supply", help="JSON file: external-input value lists")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the stepper's random-choice command")
    p.add_argument("--max-steps", type=int, default=200,
                   help="firing bound (run/step) or depth bound (explore/reach)")
    p.add_argument("--max-states", type=int, default=20000)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mmnet",
        description="Simulate, step and explore metadata-coupled nets.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="fire deterministically until quiescence")
    _add_common(run)
    run.add_argument("--out-dir", help="write trace, storage, tables and renders")

    step = sub.add_parser("step", help="interactive token game (reads stdin)")
    _add_common(step)

    exp = sub.add_parser("explore", help="bounded reachability graph")
    _add_common(exp)
    exp.add_argument("--canonicalize", action="store_true",
                     help="collapse states equal up to fresh-value renaming")
    exp.add_argument("--parallel", action="store_true",
                     help="evaluate the frontier with a worker pool")
    exp.add_argument("--dot", help="write the graph in DOT format")
    exp.add_argument("--out-dir", help="write states.csv, edges.csv, lts.png")

    reach = sub.add_parser("reach", help="can this place become nonempty?")
    reach.add_argument("place")
    _add_common(reach)

    lint = sub.add_parser("lint", help="validate and run advisory lints")
    _add_common(lint)

    pat = sub.add_parser("patterns", help="shipped pattern bundles")
    psub = pat.add_subparsers(dest="pat_command", required=True)
    emit = psub.add_parser("emit", help="write a pattern net with demo seeds")
    emit.add_argument("name", choices=sorted(BUILDERS) + ["pipeline"])
    emit.add_argument("--out-dir", default=".")
    emit.add_argument("--segments", type=int, default=2,
                      help="tagged segments in the demo image")
    return ap


def _load_inputs(args):
    try:
        net = load_net_file(args.net)
    except ParseError as exc:
        print(f"error: {args.net}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)
    errors = validate(net)
    if errors:
        for e in errors:
            print(f"invalid net: {e}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)

    base = os.path.dirname(os.path.abspath(args.net))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    metadata, objects = EMPTY_GRAPH, EMPTY_STORE
    triples_path = args.triples or (resolve(net.triples_file)
                                    if net.triples_file else None)
    objects_path = args.objects or (resolve(net.objects_file)
                                    if net.objects_file else None)
    try:
        if triples_path:
            with open(triples_path, encoding="utf-8") as fh:
                metadata = parse_ntriples(fh.read())
        if objects_path:
            with open(objects_path, encoding="utf-8") as fh:
                objects = load_store(fh.read())
        supply_lists = dict(net.init_supply)
        if args.supply:
            with open(args.supply, encoding="utf-8") as fh:
                supply_lists.update(json.load(fh))
    except ParseError as exc:
        print(f"error: {triples_path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)

    storage = StorageInstance(metadata, objects)
    try:
        snap = initial_snapshot(net, storage)
    except MMNetError as exc:
        print(f"error building initial snapshot: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_RUNTIME)
    return net, snap, Supply(supply_lists)


def _bounds(args) -> Bounds:
    return Bounds(max_depth=args.max_steps, max_states=args.max_states)


def cmd_run(args) -> int:
    net, snap, supply = _load_inputs(args)
    try:
        trace, final, notes = run_to_quiescence(net, snap, supply,
                                                max_steps=args.max_steps)
    except MMNetError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for step in trace:
        print(step.render())
    for note in notes:
        print(f"note: {note}")
    print(f"quiescent after {len(trace)} firings" if len(trace) < args.max_steps
          else f"stopped at step bound {args.max_steps}")
    print(f"final |m|: {marking_summary(final)}")
    print(f"final metadata: {len(final.storage.metadata)} triples; "
          f"objects: {len(final.storage.objects)}")
    if args.out_dir:
        from .report import write_run_artifacts
        write_run_artifacts(args.out_dir, trace, final, render=True)
        print(f"artifacts written to {args.out_dir}")
    return EXIT_OK


class _PromptingSupply(Supply):
    """Supply that falls back to asking on stdin; the answer holds for the
    current round and is cleared after each firing."""

    def __init__(self, lists, ask):
        super().__init__(lists)
        self.ask = ask
        self.cache: dict[str, str] = {}

    def has(self, var):
        return True

    def alternatives(self, var):
        if super().has(var):
            return super().alternatives(var)
        if var not in self.cache:
            self.cache[var] = self.ask(var)
        return [self.cache[var]]

    def clear_round(self):
        self.cache.clear()


def cmd_step(args) -> int:
    net, snap, base_supply = _load_inputs(args)
    rng = random.Random(args.seed)
    print(f"stepper seed: {args.seed}")

    def ask(var):
        print(f"input value for {var!r}: ", end="", flush=True)
        line = sys.stdin.readline()
        if not line:
            raise EOFError
        return line.strip()

    supply = _PromptingSupply(base_supply.lists, ask)
    undo: list = []
    while True:
        print(f"|m|: {marking_summary(snap)}")
        pairs = []
        for t in sorted(net.transitions):
            try:
                for b in enabled_bindings(net, t, snap, supply):
                    pairs.append((t, b))
            except (NoSupply, EOFError):
                print(f"  ({t} needs external input; no more stdin)")
        if not pairs:
            print("no enabled transitions; quiescent")
            return EXIT_OK
        for i, (t, b) in enumerate(pairs):
            print(f"  [{i}] {t} {{{b.render()}}}")
        print("> ", end="", flush=True)
        line = sys.stdin.readline()
        if not line:
            return EXIT_OK
        cmd = line.strip()
        if cmd == "q":
            return EXIT_OK
        if cmd == "m":
            for p in sorted(snap.marking):
                print(f"  {p}: {snap.marking[p]!r}")
            continue
        if cmd == "s":
            print(serialize_ntriples(snap.storage.metadata), end="")
            for addr in sorted(snap.storage.objects.addresses()):
                print(f"  object @{addr}")
            continue
        if cmd == "u":
            if undo:
                snap = undo.pop()
                print("undone")
            else:
                print("nothing to undo")
            continue
        if cmd == "r":
            idx = rng.randrange(len(pairs))
        else:
            try:
                idx = int(cmd)
            except ValueError:
                print(f"unknown command {cmd!r}")
                continue
            if not 0 <= idx < len(pairs):
                print("selection out of range")
                continue
        t, b = pairs[idx]
        undo.append(snap)
        try:
            snap = fire(net, t, b, snap, check=False)
        except MMNetError as exc:
            print(f"runtime error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        for v in net.external_vars(t):
            supply.advance(v)
        supply.clear_round()
        print(f"fired {t}")


def cmd_explore(args) -> int:
    net, snap, supply = _load_inputs(args)
    try:
        lts = explore(net, snap, _bounds(args), canonicalize=args.canonicalize,
                      parallel=args.parallel, supply=supply)
    except MMNetError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"states: {len(lts.states)}")
    print(f"edges: {len(lts.edges)}")
    print(f"truncated: {'yes' if lts.truncated else 'no'}")
    for reason in lts.truncations:
        print(f"  bound hit: {reason}")
    for note in lts.notes:
        print(f"note: {note}")
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(lts.to_dot())
        print(f"DOT written to {args.dot}")
    if args.out_dir:
        from .report import lts_figure, write_lts_tables
        write_lts_tables(lts, args.out_dir)
        lts_figure(lts, os.path.join(args.out_dir, "lts.png"))
        print(f"tables and figure written to {args.out_dir}")
    return EXIT_OK


def cmd_reach(args) -> int:
    net, snap, supply = _load_inputs(args)
    if args.place not in net.places:
        print(f"error: no place {args.place!r}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        verdict = reachable_nonempty(net, snap, args.place, _bounds(args), supply)
    except MMNetError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"verdict: {verdict.status}")
    if verdict.reachable:
        if verdict.witness:
            print("witness:")
            for i, (t, b) in enumerate(verdict.witness, 1):
                print(f"  {i}. {t} [{b.render()}]")
        else:
            print("witness: (already nonempty in the initial snapshot)")
    print(f"states explored: {verdict.states_explored}")
    return EXIT_OK


def cmd_lint(args) -> int:
    net, snap, _supply = _load_inputs(args)
    warnings = []
    for action in net.actions.values():
        warnings.extend(lint_consistency(action))
    warnings.extend(lint_storage(snap.storage))
    for w in warnings:
        print(f"warning: {w}")
    print(f"net {net.name}: structurally valid, {len(warnings)} advisory "
          f"warning(s)")
    return EXIT_OK


def cmd_patterns_emit(args) -> int:
    cfg = PatternConfig()
    name = args.name
    if name == "pipeline":
        net = pipeline_net(cfg)
        storage, marking = pipeline_seed(args.segments, cfg=cfg)
    else:
        net = BUILDERS[name](cfg)
        if name == "splitter":
            storage, marking = splitter_seed(args.segments, cfg)
        elif name == "filter":
            storage, marking = filter_seed(cfg.accepted_tags[0])
        elif name == "enricher":
            storage, marking = enricher_seed(cfg)
        else:
            storage, marking = detector_seed(args.segments, 1, cfg)
    try:
        os.makedirs(args.out_dir, exist_ok=True)
        net.triples_file = f"{name}.nt"
        net.objects_file = f"{name}.objects.json"
        for place, tokens in marking.items():
            net.init_marking.setdefault(place, []).extend(tokens)
        net_path = os.path.join(args.out_dir, f"{name}.mmn")
        with open(net_path, "w", encoding="utf-8") as fh:
            fh.write(emit_netdef(net))
        with open(os.path.join(args.out_dir, net.triples_file), "w",
                  encoding="utf-8") as fh:
            fh.write(serialize_ntriples(storage.metadata))
        with open(os.path.join(args.out_dir, net.objects_file), "w",
                  encoding="utf-8") as fh:
            fh.write(dump_store(storage.objects))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {net_path} (+ seeds)")
    print(f"try: mmnet run --net {net_path}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "step":
            return cmd_step(args)
        if args.command == "explore":
            return cmd_explore(args)
        if args.command == "reach":
            return cmd_reach(args)
        if args.command == "lint":
            return cmd_lint(args)
        if args.command == "patterns":
            return cmd_patterns_emit(args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
