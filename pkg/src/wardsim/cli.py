"""Command line interface.

    wardsim init SCENARIO [-o FILE]      write an annotated config file
    wardsim simulate CONFIG [-o DIR]     run it and export a bundle
    wardsim analyze BUNDLE NAME          stratified rates from a bundle
    wardsim story SOURCE                 print the learner story
    wardsim verify BUNDLE                check a bundle's intended artifact

Exit codes: 0 success, 1 failed checks, 2 bad configuration or usage,
3 missing or malformed data. WARDSIM_OUTPUT_DIR supplies a default for
simulate -o; WARDSIM_WORKERS supplies a default worker count. Flags
always win over environment values, which win over the config file.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from wardsim._version import __version__
from wardsim.errors import (
    CheckFailure,
    ConfigurationError,
    DataError,
    WardsimError,
)
from wardsim.scenario import ScenarioKind

_KIND_NAMES = [k.value for k in ScenarioKind]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wardsim",
        description="Deterministic ward-scale epidemic datasets for teaching.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="write an annotated config template")
    p.add_argument("scenario", choices=_KIND_NAMES)
    p.add_argument("-o", "--output", default=None, help="target file path")
    p.add_argument("--force", action="store_true", help="overwrite if present")

    p = sub.add_parser("simulate", help="run a config and export a bundle")
    p.add_argument("config", help="path to a config YAML file")
    p.add_argument("-o", "--output", default=None, help="bundle directory")
    p.add_argument("--seed", type=int, default=None, help="override run.seed")
    p.add_argument(
        "--workers", type=int, default=None, help="override run.workers"
    )
    p.add_argument(
        "--format", choices=["wide", "long"], default=None,
        help="override run.format",
    )
    p.add_argument("--force", action="store_true", help="overwrite the bundle")
    p.add_argument("--quiet", action="store_true", help="no progress output")

    p = sub.add_parser("analyze", help="run a named analysis over a bundle")
    p.add_argument("bundle", help="bundle directory")
    p.add_argument("analysis", help="analysis name or fig alias")
    p.add_argument("-o", "--output", default=None, help="write CSV (or .json)")
    p.add_argument(
        "--json", action="store_true", help="write JSON instead of CSV"
    )

    p = sub.add_parser("story", help="render the learner story")
    p.add_argument(
        "source",
        help="scenario kind, a config YAML path, or a bundle directory",
    )
    p.add_argument(
        "--hint-level", type=int, default=None, choices=[0, 1, 2],
        help="override the hint level",
    )
    p.add_argument(
        "--question", action="store_true",
        help="append the scenario's assignment question",
    )
    p.add_argument("--template", default=None, help="alternative template file")
    p.add_argument("-o", "--output", default=None, help="write to a file")

    p = sub.add_parser("verify", help="check a bundle for its intended artifact")
    p.add_argument("bundle", help="bundle directory")
    p.add_argument(
        "--quiet", action="store_true", help="print failing checks only"
    )
    return parser


def cmd_init(args) -> int:
    from wardsim import config as cfg

    kind = ScenarioKind(args.scenario)
    out = Path(args.output) if args.output else Path(f"{kind.value}.yaml")
    cfg.write_template(kind, out, force=args.force)
    print(f"wrote {out}")
    return 0


def _env_int(name: str) -> int | None:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"{name}: {raw!r} is not an integer")


def cmd_simulate(args) -> int:
    from wardsim import config as cfgmod
    from wardsim import dataset, engine, story, world
    from wardsim.scenario import adjust_params

    cfg = cfgmod.load_config(args.config)
    run = cfg.run
    workers = args.workers
    if workers is None:
        workers = _env_int("WARDSIM_WORKERS")
    if workers is None:
        workers = run.workers
    run = dataclasses.replace(
        run,
        seed=args.seed if args.seed is not None else run.seed,
        workers=workers,
        format=args.format if args.format is not None else run.format,
    )
    cfg = dataclasses.replace(cfg, run=run)
    cfg.validate()

    out_dir = args.output or os.environ.get("WARDSIM_OUTPUT_DIR")
    if not out_dir:
        out_dir = f"bundle_{cfg.scenario.kind.value}_seed{run.seed}"

    quiet = args.quiet

    def note(msg: str) -> None:
        if not quiet:
            print(msg, file=sys.stderr)

    note(f"building world (scale {cfg.world.scale_factor})")
    w = world.build_world(cfg.world, cfg.scenario, run.seed)
    params = adjust_params(cfg.scenario, cfg.epidemic)
    note(
        f"simulating {w.n_agents} agents for 200 days "
        f"(scenario {cfg.scenario.kind.value}, seed {run.seed})"
    )

    progress = None
    if not quiet:
        def progress(done: int) -> None:
            if done % 20 == 0 or done == 200:
                print(f"  day {done}/200", file=sys.stderr)

    trace = engine.run(
        w, params, run.seed, policy=cfg.mobility, workers=run.workers,
        progress=progress,
    )
    note(f"exporting bundle to {out_dir} ({run.format})")
    manifest = dataset.export_bundle(
        trace,
        out_dir,
        fmt=run.format,
        force=args.force,
        survey=cfg.survey_params(),
        config_digest=cfgmod.config_digest(cfg),
    )
    text = story.render_story(
        cfg.scenario.kind,
        hint_level=cfg.scenario.hint_level,
        include_question=True,
    )
    (Path(out_dir) / "story.txt").write_text(text, encoding="utf-8")
    infected = int(trace.ever_infected().sum())
    print(
        f"done: {infected}/{w.n_agents} ever infected, "
        f"{int(trace.deaths.sum())} deaths, "
        f"{len(manifest['tables'])} tables + story.txt in {out_dir}"
    )
    return 0


def cmd_analyze(args) -> int:
    from wardsim import analysis

    bundle = analysis.Bundle(args.bundle)
    table = analysis.run_analysis(bundle, args.analysis)
    if args.output:
        out = Path(args.output)
        if args.json or out.suffix == ".json":
            table.write_json(out)
        else:
            table.write_csv(out)
        print(f"wrote {out}")
    else:
        print(table)
    return 0


def cmd_story(args) -> int:
    from wardsim import story

    source = args.source
    hint_level = args.hint_level
    if source in _KIND_NAMES:
        kind = ScenarioKind(source)
        if hint_level is None:
            hint_level = 0
    else:
        path = Path(source)
        if path.is_dir():
            from wardsim.dataset import read_manifest

            manifest = read_manifest(path)
            kind = ScenarioKind(manifest["scenario"])
            if hint_level is None:
                hint_level = int(manifest["hint_level"])
        elif path.exists():
            from wardsim import config as cfgmod

            cfg = cfgmod.load_config(path)
            kind = cfg.scenario.kind
            if hint_level is None:
                hint_level = cfg.scenario.hint_level
        else:
            raise ConfigurationError(
                f"story.source: {source!r} is not a scenario kind, config "
                "file, or bundle directory"
            )
    text = story.render_story(
        kind,
        hint_level=hint_level,
        include_question=args.question,
        template_path=args.template,
    )
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        print(f"wrote {args.output}")
    else:
        print(text, end="")
    return 0


def cmd_verify(args) -> int:
    from wardsim import verify

    results = verify.check_bundle(args.bundle)
    failed = [r for r in results if not r.passed]
    for r in results:
        if args.quiet and r.passed:
            continue
        print(r)
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


_COMMANDS = {
    "init": cmd_init,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "story": cmd_story,
    "verify": cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CheckFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except WardsimError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
