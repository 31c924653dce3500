"""Command-line entry point: one subcommand per pipeline stage plus ``run``."""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .config import PipelineConfig, load_config
from .errors import ConfigInvalid, MissingArtifact, RareError
from .pipeline import STAGES, Pipeline

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_MISSING = 3

log = logging.getLogger("rare")


def _command(stage: str) -> str:
    return stage.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rare", description="Build and run a RAG robustness benchmark.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", "-c", type=Path, required=True, help="pipeline TOML file")
        p.add_argument("--mock", action="store_true", help="serve every model from the offline scripted backend")
        p.add_argument("--force", action="store_true", help="rerun even if the stage is up to date")
        p.add_argument("--seed", type=int, help="override qa.seed and perturb.seed")

    for stage in STAGES:
        common(sub.add_parser(_command(stage), help=f"run the {stage.replace('_', ' ')} stage"))
    run = sub.add_parser("run", help="run every stage in order")
    common(run)
    run.add_argument("--until", choices=[_command(s) for s in STAGES], help="stop after this stage")

    init = sub.add_parser("init-toy", help="copy the bundled toy corpus and config into a directory")
    init.add_argument("directory", type=Path)
    return parser


def _with_seed(cfg: PipelineConfig, seed: Optional[int]) -> PipelineConfig:
    if seed is None:
        return cfg
    return replace(cfg, qa=replace(cfg.qa, seed=seed), perturb=replace(cfg.perturb, seed=seed))


def init_toy(directory: Path) -> Path:
    from .mock import toy_root

    src = toy_root()
    directory.mkdir(parents=True, exist_ok=True)
    shutil.copytree(src / "corpus", directory / "corpus", dirs_exist_ok=True)
    (directory / "corpus" / "mock").mkdir(exist_ok=True)
    shutil.copy(src / "extraction.json", directory / "corpus" / "mock" / "extraction.json")
    shutil.copy(src / "rare.toml", directory / "rare.toml")
    return directory / "rare.toml"


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        if args.command == "init-toy":
            path = init_toy(args.directory)
            print(f"wrote {path}; next: rare run --config {path} --mock")
            return EXIT_OK
        cfg = _with_seed(load_config(args.config), args.seed)
        pipe = Pipeline(cfg, mock=args.mock)
        if args.command == "run":
            until = args.until.replace("-", "_") if args.until else None
            results = pipe.run_all(force=args.force, until=until)
        else:
            results = [pipe.run_stage(args.command.replace("-", "_"), force=args.force)]
        for r in results:
            print(f"{r.name}: {'up to date' if r.skipped else 'done'}")
        if results and results[-1].name == "report":
            print()
            print(pipe.path("report.md").read_text(encoding="utf-8"), end="")
        return EXIT_OK
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingArtifact as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_MISSING
    except RareError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
