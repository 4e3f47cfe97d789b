"""Command-line driver: ``tarski {sections,heat,gossip,experiment,kripke-demo}``.

Exit codes: 0 success, 1 usage or parse error, 2 no convergence (a partial CSV
is still written), 3 a size guard was exceeded.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import specfile
from .dynamics import (
    BroadcastSequence,
    EdgeMetric,
    dirichlet_energy,
    gossip,
    heat_flow,
    trace_csv,
)
from .errors import NotConverged, SpecError, TarskiError, TooLarge
from .semantics import kripke_laplacian, kripke_sheaf, random_model
from .sheaf import Graph, is_section, sections_bruteforce

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED, EXIT_GUARD = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _state_labels(sheaf, x):
    return "(" + ", ".join(sheaf.node_stalks[i].labels[v] for i, v in enumerate(x)) + ")"


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _initial(spec, seed):
    if spec.initial is not None:
        return spec.initial
    rng = np.random.Generator(np.random.PCG64(seed))
    return tuple(int(rng.integers(lat.m)) for lat in spec.sheaf.node_stalks)


def _schedule(arg, spec, seed):
    if arg is None:
        return spec.schedule or BroadcastSequence.uniform(seed)
    if arg == "sync":
        return BroadcastSequence.synchronous()
    if arg == "uniform1":
        return BroadcastSequence.uniform(seed)
    if arg.startswith("file:"):
        try:
            return BroadcastSequence.from_file(arg[5:])
        except (OSError, ValueError) as exc:
            raise SpecError(f"cannot read schedule file: {exc}") from None
    raise SpecError(f"unknown schedule {arg!r}")


def cmd_sections(args):
    spec = specfile.load(args.spec)
    res = sections_bruteforce(spec.sheaf)
    lines = [_state_labels(spec.sheaf, row) for row in res.sections]
    lines.append(f"count: {len(res.sections)}")
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_heat(args):
    spec = specfile.load(args.spec)
    sheaf = spec.sheaf
    metric = EdgeMetric(args.metric)
    x0 = _initial(spec, args.seed)
    try:
        res = heat_flow(sheaf, x0, max_steps=args.max_steps)
        traj, code = res.trajectory, EXIT_OK
    except NotConverged as exc:
        traj, code = exc.trace, EXIT_NOT_CONVERGED
    rows = [(t, "", dirichlet_energy(sheaf, x, metric)) for t, x in enumerate(traj)]
    _write(args.out, trace_csv(rows))
    final = traj[-1]
    print(f"final: {_state_labels(sheaf, final)}", file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return code


def cmd_gossip(args):
    spec = specfile.load(args.spec)
    sheaf = spec.sheaf
    schedule = _schedule(args.schedule, spec, args.seed)
    x0 = _initial(spec, args.seed)
    try:
        res = gossip(sheaf, x0, schedule, max_steps=args.max_steps, metric=EdgeMetric(args.metric))
        trace, final, code = res.trace, res.final, EXIT_OK
    except NotConverged as exc:
        trace, final, code = exc.trace, exc.state, EXIT_NOT_CONVERGED
    _write(args.out, trace_csv(trace))
    stream = sys.stderr if args.out in (None, "-") else sys.stdout
    print(f"final: {_state_labels(sheaf, final)}", file=stream)
    print(f"section: {is_section(sheaf, final)}", file=stream)
    if code == EXIT_NOT_CONVERGED:
        print(f"not converged within {args.max_steps} steps", file=sys.stderr)
    return code


@dataclass
class ExperimentConfig:
    seed: int = 0
    nodes: int = 40
    radius: float = 0.08
    states: int = 10
    p_diag: float = 0.9
    p_off: float = 0.1
    trials: int = 10
    schedule: str = "uniform1"
    max_steps: int = 1_000_000
    metric: str | None = None
    out: str | None = None

    def __post_init__(self):
        if not (0 <= self.p_diag <= 1 and 0 <= self.p_off <= 1):
            raise ValueError("probabilities must lie in [0, 1]")
        if self.radius < 0:
            raise ValueError("radius must be non-negative")


@dataclass
class TrialResult:
    trial: int
    steps: int
    changes: int
    final_energy: float
    section: bool
    trace: list
    max_firings: int = 0


def geometric_graph(n, radius, rng):
    """Uniform points in the unit square joined when their Euclidean distance is at most ``radius``."""
    pts = rng.random((n, 2))
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1))
    a, b = np.nonzero(np.triu(d <= radius, k=1))
    return Graph(n, list(zip(a.tolist(), b.tolist())))


def run_experiment(cfg):
    """Gossip on a random geometric graph carrying a random Kripke sheaf, from several random starts."""
    seq = np.random.SeedSequence(cfg.seed)
    g_seed, m_seed, x_seed, s_seed = seq.spawn(4)
    graph = geometric_graph(cfg.nodes, cfg.radius, np.random.Generator(np.random.PCG64(g_seed)))
    model = random_model(cfg.nodes, cfg.states, np.random.Generator(np.random.PCG64(m_seed)), cfg.p_diag, cfg.p_off)
    sheaf = kripke_sheaf(model, graph)
    x_rng = np.random.Generator(np.random.PCG64(x_seed))
    sched_seeds = s_seed.generate_state(cfg.trials, dtype=np.uint64)
    metric = EdgeMetric(cfg.metric)
    results = []
    for k in range(cfg.trials):
        x0 = x_rng.integers(0, 1 << cfg.states, size=cfg.nodes)
        if cfg.schedule == "sync":
            sched = BroadcastSequence.synchronous()
        elif cfg.schedule == "round-robin":
            sched = BroadcastSequence.round_robin(cfg.nodes)
        else:
            sched = BroadcastSequence.uniform(int(sched_seeds[k]))
        res = gossip(sheaf, x0, sched, max_steps=cfg.max_steps, metric=metric)
        results.append(TrialResult(k, res.steps, res.changes, res.trace[-1][2], is_section(sheaf, res.final),
                                   res.trace, int(res.firings.max(initial=0))))
    return sheaf, results


def cmd_experiment(args):
    cfg = ExperimentConfig(seed=args.seed, nodes=args.nodes, radius=args.radius, states=args.states,
                           p_diag=args.p_diag, p_off=args.p_off, trials=args.trials,
                           schedule=args.schedule or "uniform1", max_steps=args.max_steps,
                           metric=args.metric, out=args.out)
    try:
        sheaf, results = run_experiment(cfg)
    except NotConverged as exc:
        if cfg.out:
            os.makedirs(cfg.out, exist_ok=True)
            _write(os.path.join(cfg.out, "partial.csv"), trace_csv(exc.trace))
        print(str(exc), file=sys.stderr)
        return EXIT_NOT_CONVERGED
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
    print(f"nodes={cfg.nodes} edges={len(sheaf.graph.edges)} states={cfg.states}")
    print("trial,steps,changes,final_energy,section")
    for r in results:
        print(f"{r.trial},{r.steps},{r.changes},{r.final_energy:g},{r.section}")
        if cfg.out:
            _write(os.path.join(cfg.out, f"trial_{r.trial:02d}.csv"), trace_csv(r.trace))
    return EXIT_OK


def kripke_demo_lines():
    from .worked import (
        AGENTS,
        EVENTS,
        GALOIS_REFERENCE,
        LAPLACIAN_REFERENCE,
        TRUSTED_LAPLACIAN_ROWS,
        three_agent_graph,
        three_agent_model,
    )

    M = three_agent_model()
    G = three_agent_graph()

    def fmt(e):
        return "{" + ",".join(sorted(M.members(e))) + "}"

    def ref(s):
        return "{" + ",".join(s) + "}"

    lines = ["Galois connections (computed from the relations)",
             f"{'e':9} {'agent':5} {'exists':9} {'forall':9} note"]
    for ev in EVENTS:
        e = M.event(ev)
        for a, name in enumerate(AGENTS):
            ex, fa = M.knows_exists(a, e), M.knows_forall(a, e)
            rex, rfa = GALOIS_REFERENCE[ev][name]
            notes = []
            if fmt(ex) != ref(rex):
                notes.append(f"exists differs from reference {ref(rex)}")
            if fmt(fa) != ref(rfa):
                notes.append(f"forall differs from reference {ref(rfa)}")
            lines.append(f"{ref(ev):9} {name:5} {fmt(ex):9} {fmt(fa):9} {'; '.join(notes)}".rstrip())
    lines += ["", "Kripke Laplacian", f"{'e':24} {'computed':24} reference"]
    for k, (ins, outs) in enumerate(LAPLACIAN_REFERENCE):
        got = kripke_laplacian(M, G, [M.event(x) for x in ins])
        got_s = "(" + ", ".join(fmt(v) for v in got) + ")"
        ref_s = "(" + ", ".join(ref(v) for v in outs) + ")"
        in_s = "(" + ", ".join(ref(v) for v in ins) + ")"
        if got_s == ref_s:
            note = "verified" if k in TRUSTED_LAPLACIAN_ROWS else "matches"
        else:
            note = "DIFFERS from reference"
        lines.append(f"{in_s:24} {got_s:24} {ref_s} {note}")
    return lines


def cmd_kripke_demo(args):
    print("\n".join(kripke_demo_lines()))
    return EXIT_OK


def build_parser():
    p = _Parser(prog="tarski", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, spec=True):
        if spec:
            sp.add_argument("--spec", required=True, help="sheaf spec JSON file")
        sp.add_argument("--seed", type=int, default=0, help="PRNG seed (default 0)")
        sp.add_argument("--max-steps", type=int, default=None)
        sp.add_argument("--metric", choices=["hamming", "hasse"], default=None)
        sp.add_argument("--out", default=None, help="output file (directory for experiment)")

    sp = sub.add_parser("sections", help="list all global sections")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_sections)

    sp = sub.add_parser("heat", help="synchronous heat flow; CSV energy trace")
    common(sp)
    sp.set_defaults(func=cmd_heat)

    sp = sub.add_parser("gossip", help="asynchronous gossip; CSV energy trace")
    common(sp)
    sp.add_argument("--schedule", default=None, help="sync | uniform1 | file:PATH")
    sp.set_defaults(func=cmd_gossip)

    sp = sub.add_parser("experiment", help="random geometric gossip experiment")
    common(sp, spec=False)
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--nodes", type=int, default=40)
    sp.add_argument("--radius", type=float, default=0.08)
    sp.add_argument("--states", type=int, default=10)
    sp.add_argument("--p-diag", type=float, default=0.9)
    sp.add_argument("--p-off", type=float, default=0.1)
    sp.add_argument("--schedule", default=None, choices=["uniform1", "sync", "round-robin"])
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("kripke-demo", help="three-agent worked example")
    sp.set_defaults(func=cmd_kripke_demo)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "max_steps", 0) is None:
        args.max_steps = 1_000_000 if args.func is not cmd_heat else None
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TooLarge as exc:
        print(f"guard exceeded: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (TarskiError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
