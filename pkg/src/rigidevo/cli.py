"""Command-line front end.

Query commands print one JSON object on a single line. ``hitting`` and ``exp``
write CSV plus a JSON manifest. Exit codes: 2 usage, 3 file, 4 integrity.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import sys
from pathlib import Path

from . import __version__
from .exceptions import IntegrityError
from .experiments import RECIPES, ExperimentConfig, Report, run
from .graphs import extended_core, is_d_orientable, kcore, read_edge_list, write_edge_list
from .rigidity import closure, is_globally_rigid, is_rigid, max_rank, rigid_components, rigidity_rank

EXIT_USAGE, EXIT_FILE, EXIT_INTEGRITY = 2, 3, 4
SEED_ENV = "RIGIDEVO_SEED"

log = logging.getLogger("rigidevo")


class FileProblem(Exception):
    """Unreadable, unwritable or malformed input/output file."""


def resolve_seed(flag: int | None, config_value=None) -> int:
    """Flag, then config file, then ``$RIGIDEVO_SEED``, else a fresh random seed."""
    for value in (flag, config_value, os.environ.get(SEED_ENV)):
        if value is not None and value != "":
            return int(value)
    return secrets.randbits(63)


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, separators=(",", ":")) + "\n")


def _load(path: str):
    try:
        return read_edge_list(path)
    except OSError as exc:
        raise FileProblem(f"cannot read {path}: {exc.strerror or exc}") from exc
    except ValueError as exc:
        raise FileProblem(f"{path}: {exc}") from exc


def _write(fn, path, *args):
    try:
        return fn(*args, path) if args else fn(path)
    except OSError as exc:
        raise FileProblem(f"cannot write {path}: {exc.strerror or exc}") from exc


# -- commands ---------------------------------------------------------------


def cmd_rank(a) -> None:
    G, seed = _load(a.graph), resolve_seed(a.seed)
    _emit({"rank": rigidity_rank(G, a.dim, seed), "max_rank": max_rank(G.n, a.dim), "seed": seed})


def cmd_rigid(a) -> None:
    G, seed = _load(a.graph), resolve_seed(a.seed)
    _emit({"rigid": is_rigid(G, a.dim, seed, reps=a.reps), "seed": seed})


def cmd_closure(a) -> None:
    G, seed = _load(a.graph), resolve_seed(a.seed)
    cl = closure(G, a.dim, seed)
    if a.out:
        _write(write_edge_list, a.out, cl.as_graph())
    _emit({
        "closure_edges": cl.size, "added": sorted(map(list, cl.added)), "rank": cl.rank,
        "complete": cl.is_complete(), "seed": seed,
    })


def cmd_global(a) -> None:
    G, seed = _load(a.graph), resolve_seed(a.seed)
    _emit({"globally_rigid": is_globally_rigid(G, a.dim, seed, trials=a.trials), "seed": seed})


def cmd_components(a) -> None:
    G, seed = _load(a.graph), resolve_seed(a.seed)
    comps = rigid_components(G, a.dim, mode=a.mode, rng=seed)
    _emit({"components": sorted(sorted(c) for c in comps), "mode": a.mode, "seed": seed})


def cmd_core(a) -> None:
    core = kcore(_load(a.graph), a.k)
    _emit({"core": sorted(core), "size": len(core)})


def cmd_extcore(a) -> None:
    core = extended_core(_load(a.graph), a.dim)
    _emit({"core": sorted(core), "size": len(core)})


def cmd_orient(a) -> None:
    res = is_d_orientable(_load(a.graph), a.d)
    if res.orientable:
        arcs = sorted([v if h == u else u, h] for (u, v), h in res.heads.items())
        _emit({"orientable": True, "orientation": arcs})
    else:
        _emit({"orientable": False, "witness": sorted(res.witness)})


def cmd_hitting(a) -> None:
    """Same seeds and CSV schema as the ``theorem1`` recipe on a single ``n``."""
    seed = resolve_seed(a.seed)
    cfg = ExperimentConfig("theorem1", n=(a.n,), d=a.dim, trials=a.trials, seed=seed, with_global=a.glob)
    _finish(run(cfg), a.out, {"n": a.n, "trials": a.trials, "seed": seed})


def _finish(rep: Report, out: str | None, info: dict) -> None:
    if not out:
        sys.stdout.write(rep.csv_text())
        return
    csv_path, man_path = _write(rep.write, out)
    _emit({**info, "records": len(rep.records), "csv": str(csv_path), "manifest": str(man_path)})


def cmd_exp(a) -> None:
    values: dict = {}
    if a.config:
        try:
            values = ExperimentConfig.parse_text(Path(a.config).read_text())
        except OSError as exc:
            raise FileProblem(f"cannot read {a.config}: {exc.strerror or exc}") from exc
    values["recipe"] = a.recipe or values.get("recipe")
    for key in ("trials", "jobs", "d", "n", "out"):
        if getattr(a, key) is not None:
            values[key] = getattr(a, key)
    values["seed"] = resolve_seed(a.seed, values.get("seed"))
    cfg = ExperimentConfig.from_mapping(values)
    _finish(run(cfg), cfg.out, {"recipe": cfg.recipe, "seed": cfg.seed})


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rigidevo", description="Generic rigidity over a prime field.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def graph_cmd(name, fn, help_, dim=True, seed=True):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--graph", required=True, help="edge-list file")
        if dim:
            sp.add_argument("--dim", type=int, required=True)
        if seed:
            sp.add_argument("--seed", type=int)
        sp.set_defaults(func=fn)
        return sp

    graph_cmd("rank", cmd_rank, "rigidity-matrix rank at a random embedding")
    graph_cmd("rigid", cmd_rigid, "generic d-rigidity").add_argument("--reps", type=int, default=1)
    graph_cmd("closure", cmd_closure, "d-rigidity closure").add_argument("--out", help="write closure edge list")
    graph_cmd("global", cmd_global, "generic global d-rigidity").add_argument("--trials", type=int, default=2)
    graph_cmd("components", cmd_components, "rigid components").add_argument(
        "--mode", choices=("exact", "heuristic"), default="exact"
    )
    graph_cmd("core", cmd_core, "k-core", dim=False, seed=False).add_argument("--k", type=int, required=True)
    graph_cmd("extcore", cmd_extcore, "extended core", seed=False)
    graph_cmd("orient", cmd_orient, "in-degree bounded orientation", dim=False, seed=False).add_argument(
        "--d", "--dim", dest="d", type=int, required=True
    )

    sp = sub.add_parser("hitting", help="hitting times along the random graph process")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--global", dest="glob", action="store_true")
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_hitting)

    sp = sub.add_parser("exp", help="run an experiment recipe")
    sp.add_argument("--recipe", choices=tuple(RECIPES))
    sp.add_argument("--config", help="key=value file; flags override its values")
    sp.add_argument("--out")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--d", "--dim", dest="d", type=int)
    sp.add_argument("--n", help="comma-separated vertex counts")
    sp.set_defaults(func=cmd_exp)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        args.func(args)
    except FileProblem as exc:
        print(f"rigidevo: {exc}", file=sys.stderr)
        return EXIT_FILE
    except IntegrityError as exc:
        print(f"rigidevo: integrity violation: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except ValueError as exc:
        print(f"rigidevo: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
