"""Batch experiment runner: validation, entropies, distance bounds,
contraction and expansion experiments, tail-verification sweeps.

Exit codes: 0 success, 1 input/config error, 2 verification failure.
Every output file records the tool version and the root seed; identical
config and seed give byte-identical output regardless of worker count."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import __version__
from .contraction import (
    ContractionParams,
    contract_once,
    default_parameters,
    extend_admissible_fan,
    monte_carlo_tails,
    recover_collapsed_diagram,
)
from .diagrams import FanIndices, entropy_vector
from .distances import ikd_bounds
from .errors import ConfigError, ProbdiagError
from .expansion import ExpansionSpec, expand_diagram, verify_expansion
from .fixtures import coord_lambda3, coord_two_fan, parse_coords, reduced_lambda3, reduced_two_fan
from .jsonio import diagram_to_obj, load_diagram
from .sampling import subseed
from .tropical_bounds import TropicalBoundParams, contraction_epsilons, min_n_for_epsilon

DEFAULT_TAIL_GRID = {
    "binomial_i": {"N": [50, 200, 1000], "rho": ["1/2", "1/4", "1/8"], "t": [0.3, 0.5, 0.8]},
    "binomial_ii": {"N": [50, 200, 1000], "rho": ["1/2", "1/4", "1/8"], "t": [0.5, 1.0, 1.5]},
}


def emit_results(rows: list[dict], fmt: str, path, *, seed) -> None:
    """Write rows with a stable column order and a version+seed header.

    Fractions become "num/den" strings in JSON and decimals in CSV."""
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    if fmt == "json":
        def convert(v):
            return str(v) if isinstance(v, Fraction) else v
        payload = {"version": __version__, "seed": seed,
                   "rows": [{k: convert(v) for k, v in r.items()} for r in rows]}
        text = json.dumps(payload, indent=2) + "\n"
    else:
        def convert(v):
            if isinstance(v, Fraction):
                return repr(float(v))
            if isinstance(v, float):
                return repr(v)
            return v
        buffer = io.StringIO()
        buffer.write(f"# probdiag {__version__} seed={seed}\n")
        writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: convert(v) for k, v in row.items()})
        text = buffer.getvalue()
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _check_keys(config: dict, allowed: set) -> None:
    unknown = set(config) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")


def _fixture(config: dict):
    name = config.get("fixture", "coord")
    if name in ("coord", "two_fan"):
        ell = int(config.get("l", 6))
        left = parse_coords(str(config.get("I", "1..4")))
        right = parse_coords(str(config.get("J", "3..6")))
        return coord_two_fan(ell, left, right)
    if name == "lambda3":
        left = parse_coords(str(config.get("I", "1,2")))
        right = parse_coords(str(config.get("J", "2,3")))
        u = parse_coords(str(config.get("U", "3,4,5")))
        ell = int(config["l"]) if "l" in config else None
        return coord_lambda3(left, right, u, ell=ell)
    raise ConfigError(f"unknown fixture {name!r}")


def _load_input(config: dict):
    if "input" in config and config["input"]:
        diagram = load_diagram(config["input"])
        fan_text = config.get("fan")
        fan = None
        if fan_text:
            parts = [p.strip() for p in str(fan_text).split(",")]
            if len(parts) != 3:
                raise ConfigError("fan must be 'x,z,u'")
            fan = FanIndices(x_obj=parts[0], z_obj=parts[1], u_obj=parts[2])
        return diagram, fan
    return _fixture(config)


# -- subcommands ------------------------------------------------------------


def cmd_validate(config: dict) -> int:
    _check_keys(config, {"command", "input", "fixture", "l", "I", "J", "U", "fan"})
    try:
        diagram, _ = _load_input(config)
    except ProbdiagError as exc:
        print(f"invalid: {exc}")
        return 2
    sizes = {o: len(s) for o, s in diagram.spaces.items()}
    print(f"valid diagram: {len(diagram.category.objects)} objects, supports {sizes}")
    return 0


def cmd_entropy(config: dict) -> int:
    _check_keys(config, {"command", "input", "fixture", "l", "I", "J", "U", "fan",
                         "output", "format", "seed"})
    diagram, _ = _load_input(config)
    vec = entropy_vector(diagram)
    rows = [{"object": o, "entropy_nats": h} for o, h in vec.items()]
    emit_results(rows, config.get("format", "csv"), config.get("output"),
                 seed=config.get("seed", 0))
    return 0


def cmd_distance(config: dict) -> int:
    _check_keys(config, {"command", "input", "input2", "output", "format", "seed"})
    if "input" not in config or "input2" not in config:
        raise ConfigError("distance needs input and input2")
    left = load_diagram(config["input"])
    right = load_diagram(config["input2"])
    bounds = ikd_bounds(left, right)
    rows = [{"lower": bounds.lower, "upper": bounds.upper,
             "witness_method": bounds.witness.method, "witness_exact": bounds.witness.exact}]
    emit_results(rows, config.get("format", "csv"), config.get("output"),
                 seed=config.get("seed", 0))
    return 0


def _contract_row(index: int, run) -> dict:
    cap_run, cap_size = run.height_thresholds()
    cap_h, cap_g = run.ikd_caps()
    return {
        "run": index,
        "seed": run.params.seed,
        "N": run.params.N,
        "t": run.params.t,
        "rho": run.params.rho,
        "x0_card": run.x0_card,
        "sum_nu_ok": run.sum_nu == run.params.rho * run.x0_card,
        "mass_ok": run.total_mass == 1,
        "alpha": run.alpha,
        "height": run.height,
        "height_cap_run": cap_run,
        "height_cap_size": cap_size,
        "pass_height": run.height <= cap_run and run.height <= cap_size,
        "coverage": run.coverage,
        "fiber_iso_ok": run.fiber_iso_ok,
        "ikd_upper": run.ikd_upper,
        "ikd_cap_h": cap_h,
        "ikd_cap_g": cap_g,
        "pass_ikd": run.ikd_upper <= cap_h and run.ikd_upper <= cap_g,
    }


def cmd_contract(config: dict) -> int:
    _check_keys(config, {"command", "input", "fixture", "l", "I", "J", "U", "fan",
                         "N", "t", "seeds", "seed", "output", "format", "workers"})
    diagram, fan = _load_input(config)
    if fan is None:
        raise ConfigError("contract needs a designated fan")
    ext = extend_admissible_fan(diagram, fan)
    root_seed = int(config.get("seed", 0))
    n_runs = int(config.get("seeds", 1))
    if config.get("N") and config.get("t"):
        n_override, t_override = int(config["N"]), float(config["t"])
    else:
        base = default_parameters(ext, seed=0)
        n_override = int(config["N"]) if config.get("N") else base.N
        t_override = float(config["t"]) if config.get("t") else base.t

    def one(index: int):
        params = ContractionParams(N=n_override, t=t_override, rho=ext.rho,
                                   seed=subseed(root_seed, "run", index))
        return _contract_row(index, contract_once(ext, params))

    workers = int(config.get("workers", 1))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(n_runs)))
    else:
        rows = [one(i) for i in range(n_runs)]
    emit_results(rows, config.get("format", "csv"), config.get("output"), seed=root_seed)
    ok = all(r["sum_nu_ok"] and r["mass_ok"] and r["fiber_iso_ok"] for r in rows)
    return 0 if ok else 2


def cmd_expand(config: dict) -> int:
    _check_keys(config, {"command", "fixture", "l", "split", "J", "m",
                         "output", "format", "seed"})
    name = config.get("fixture", "two_fan")
    ell = int(config.get("l", 4))
    u_coords = parse_coords(str(config.get("J", "3..4")))
    if name == "two_fan":
        diagram, fan = reduced_two_fan(ell, u_coords)
    elif name == "lambda3":
        split = int(config.get("split", ell // 2))
        diagram, fan = reduced_lambda3(split, ell, u_coords)
    else:
        raise ConfigError(f"unknown expand fixture {name!r}")
    m = int(config.get("m", 2))
    spec = ExpansionSpec(diagram, fan, m)
    expanded = expand_diagram(spec)
    try:
        report = verify_expansion(diagram, expanded, spec)
    except ProbdiagError as exc:
        print(f"expansion verification failed: {exc}")
        return 2
    print(f"expansion m={m}: arrow entropy {report.arrow_entropy_before:.6f} -> "
          f"{report.arrow_entropy_after:.6f} (added ln m = {report.added:.6f}); "
          f"recovered exactly: {report.recovered_exactly}")
    if config.get("output"):
        Path(config["output"]).write_text(
            json.dumps(diagram_to_obj(expanded), indent=2) + "\n")
    return 0


def cmd_tails(config: dict) -> int:
    _check_keys(config, {"command", "grid", "kind", "N", "rho", "t", "trials",
                         "seed", "output", "format"})
    seed = int(config.get("seed", 0))
    trials = int(config.get("trials", 10000))
    checks = []
    if config.get("kind"):
        checks.append(monte_carlo_tails(
            config["kind"], t=float(config["t"]), trials=trials, seed=seed,
            n=int(config["N"]), rho=Fraction(str(config["rho"]))))
    else:
        grid = DEFAULT_TAIL_GRID
        for kind, axes in grid.items():
            for n in axes["N"]:
                for rho in axes["rho"]:
                    for t in axes["t"]:
                        checks.append(monte_carlo_tails(
                            kind, t=t, trials=trials, seed=seed,
                            n=n, rho=Fraction(rho)))
    rows = [{"kind": c.kind, "N": c.N, "rho": c.rho, "t": c.t, "trials": c.trials,
             "empirical": c.empirical, "bound": c.bound, "slack": c.slack,
             "pass": c.passed} for c in checks]
    emit_results(rows, config.get("format", "csv"), config.get("output"), seed=seed)
    return 0 if all(c.passed for c in checks) else 2


def cmd_sweep(config: dict) -> int:
    _check_keys(config, {"command", "config"})
    path = config.get("config")
    if not path:
        raise ConfigError("sweep needs a config file")
    steps = json.loads(Path(path).read_text())
    if not isinstance(steps, list):
        raise ConfigError("sweep config must be a list of command objects")
    worst = 0
    for step in steps:
        if not isinstance(step, dict) or "command" not in step:
            raise ConfigError("each sweep step needs a 'command'")
        worst = max(worst, run_config(step))
    return worst


def cmd_epsilons(config: dict) -> int:
    _check_keys(config, {"command", "C", "D_phi", "size_g", "log_card", "target",
                         "n", "output", "format", "seed"})
    params = TropicalBoundParams(
        c=float(config.get("C", 1.0)), d_phi=float(config.get("D_phi", 1.0)),
        size_g=int(config.get("size_g", 3)), log_card=float(config.get("log_card", 1.0)))
    rows = []
    if config.get("n"):
        schedule = contraction_epsilons(params, int(config["n"]))
        rows.append({"n": int(config["n"]), "eps_conditional": schedule.conditional,
                     "eps_x": schedule.x_side, "eps_height": schedule.height})
    if config.get("target"):
        n_min = min_n_for_epsilon(params, float(config["target"]))
        rows.append({"target": float(config["target"]), "min_n": n_min})
    if not rows:
        raise ConfigError("epsilons needs n and/or target")
    print("schedule constants are exploration defaults, not normative values")
    emit_results(rows, config.get("format", "csv"), config.get("output"),
                 seed=config.get("seed", 0))
    return 0


def cmd_demo(config: dict) -> int:
    _check_keys(config, {"command", "seed", "output"})
    seed = int(config.get("seed", 0))
    out_dir = Path(config["output"]) if config.get("output") else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    print("== three-feet pipeline ==")
    diagram, fan = coord_lambda3()
    ext = extend_admissible_fan(diagram, fan)
    params = default_parameters(ext, seed=subseed(seed, "demo-lambda3", 0))
    run = contract_once(ext, params)
    recovered = recover_collapsed_diagram(diagram, fan, run)
    print(f"fan (x <- z -> u): |x0|={ext.x0_card}, rho={ext.rho}, "
          f"N={params.N}, coverage={run.coverage}")
    before = entropy_vector(diagram)
    after = entropy_vector(recovered)
    for obj in diagram.category.objects:
        print(f"  {obj:>3}: H={before[obj]:8.5f} -> H'={after[obj]:8.5f}")
    print(f"  arrow defect [y'0 | x'0] = {run.height:.5f} "
          f"(<= 4 ln ln|x0| = {run.height_thresholds()[1]:.5f})")

    print("== broken diamond narrative ==")
    diagram2, fan2 = coord_two_fan(8, range(1, 7), range(5, 9))
    ext2 = extend_admissible_fan(diagram2, fan2)
    params2 = default_parameters(ext2, seed=subseed(seed, "demo-diamond", 0))
    run2 = contract_once(ext2, params2)
    recovered2 = recover_collapsed_diagram(diagram2, fan2, run2)
    mutual = -math.log(float(ext2.rho))
    log_n = math.log(params2.N)
    print(f"mutual information of the feet: {mutual:.5f}")
    print(f"[V] = ln N = {log_n:.5f} "
          f"= mutual + 3 ln ln|x0| + o(1) (excess {log_n - mutual:.5f})")
    print(f"contracted fan arrow defect: {run2.height:.5f}; after normalizing by "
          "tensor powers the defect is what vanishes in the limit")
    print(f"recovered shape: {list(recovered2.category.objects)} with "
          f"H(V) = {recovered2.spaces[fan2.u_obj].entropy:.5f}")
    if out_dir:
        from .jsonio import save_diagram
        save_diagram(recovered, out_dir / "lambda3_contracted.json")
        save_diagram(recovered2, out_dir / "two_fan_contracted.json")
        print(f"wrote artifacts to {out_dir}")
    ok = run.fiber_iso_ok and run2.fiber_iso_ok
    return 0 if ok else 2


COMMANDS = {
    "validate": cmd_validate,
    "entropy": cmd_entropy,
    "distance": cmd_distance,
    "contract": cmd_contract,
    "expand": cmd_expand,
    "tails": cmd_tails,
    "sweep": cmd_sweep,
    "epsilons": cmd_epsilons,
    "demo": cmd_demo,
}


def run_config(config: dict) -> int:
    command = config.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    return COMMANDS[command](config)


def _add_io(parser, with_seed=True):
    parser.add_argument("--output", default=None, help="output path (default stdout)")
    parser.add_argument("--format", default="csv", choices=["csv", "json"])
    if with_seed:
        parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="probdiag",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"probdiag {__version__}")
    parser.add_argument("--config", default=None,
                        help="JSON config; flags given on the command line win")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("validate", help="validate a diagram file or fixture")
    p.add_argument("--input", default=None)
    p.add_argument("--fixture", default=None)
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--I", default=None)
    p.add_argument("--J", default=None)
    p.add_argument("--U", default=None)

    p = sub.add_parser("entropy", help="entropy vector of a diagram")
    p.add_argument("--input", default=None)
    p.add_argument("--fixture", default=None)
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--I", default=None)
    p.add_argument("--J", default=None)
    p.add_argument("--U", default=None)
    _add_io(p)

    p = sub.add_parser("distance", help="certified distance bounds between two diagrams")
    p.add_argument("--input", required=True)
    p.add_argument("--input2", required=True)
    _add_io(p)

    p = sub.add_parser("contract", help="sampled arrow-contraction runs")
    p.add_argument("--input", default=None)
    p.add_argument("--fan", default=None, help="x,z,u object ids for a loaded diagram")
    p.add_argument("--fixture", default="coord")
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--I", default=None)
    p.add_argument("--J", default=None)
    p.add_argument("--U", default=None)
    p.add_argument("--N", type=int, default=None, help="override the default sample size")
    p.add_argument("--t", type=float, default=None, help="override the default threshold")
    p.add_argument("--seeds", type=int, default=1, help="number of independent runs")
    p.add_argument("--workers", type=int, default=1)
    _add_io(p)

    p = sub.add_parser("expand", help="arrow expansion with verification")
    p.add_argument("--fixture", default="two_fan", choices=["two_fan", "lambda3"])
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--split", type=int, default=None)
    p.add_argument("--J", default=None)
    p.add_argument("--m", type=int, default=2)
    _add_io(p)

    p = sub.add_parser("tails", help="Monte-Carlo tail checks against analytic bounds")
    p.add_argument("--grid", default=None, choices=["default"])
    p.add_argument("--kind", default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--rho", default=None)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--trials", type=int, default=10000)
    _add_io(p)

    p = sub.add_parser("sweep", help="run a list of configured commands")
    p.add_argument("--config", dest="sweep_config", required=True)

    p = sub.add_parser("epsilons", help="error schedule for the limiting argument")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--D-phi", dest="D_phi", type=float, default=1.0)
    p.add_argument("--size-g", dest="size_g", type=int, default=3)
    p.add_argument("--log-card", dest="log_card", type=float, default=1.0)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--target", type=float, default=None)
    _add_io(p)

    p = sub.add_parser("demo", help="worked contraction narratives on fixtures")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None and not args.config:
        parser.print_help()
        return 1
    config: dict = {}
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 1
    cli = {k: v for k, v in vars(args).items()
           if k not in ("config", "command") and v is not None}
    if "sweep_config" in cli:
        cli["config"] = cli.pop("sweep_config")
    config.update(cli)
    if args.command:
        config["command"] = args.command
    try:
        return run_config(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ProbdiagError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
