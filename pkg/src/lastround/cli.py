"""Command-line front end for single runs and named presets.

Exit codes: 0 when every assertion holds (or there are none), 1 when an
assertion fails, 2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

from .columns import POLICIES, STEP_MODES, ColumnConfig
from .engine import GAME_KINDS, derive_seeds, generate_game, run_batch
from .learners import ALGORITHMS, SCHEDULES, LearnerConfig
from .minimax import SolverError
from .presets import METRICS, PRESETS, check

log = logging.getLogger(__name__)

OUT_ENV = "LASTROUND_OUT"
DEFAULT_OUT = "lastround-out"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_OVERRIDABLE = ("game", "rows", "cols", "seed", "games", "game_file", "row_algo", "mu", "schedule",
                "col_algo", "step_mode", "rounds")


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    game: str = "random-uniform"
    rows: int = 2
    cols: int = 2
    seed: int = 0
    games: int = 1
    game_file: Optional[str] = None
    row_algo: str = "mwu"
    mu: float = 0.1
    schedule: str = "constant"
    col_algo: str = "lrca"
    step_mode: Optional[str] = None
    rounds: int = 1000
    out: str = DEFAULT_OUT
    preset: Optional[str] = None
    row_init: Optional[tuple] = None
    col_init: Optional[tuple] = None

    def __post_init__(self):
        if self.game not in GAME_KINDS:
            raise UsageError(f"unknown game kind {self.game!r}")
        if self.game == "from-file" and not self.game_file:
            raise UsageError("--game from-file needs --game-file")
        if self.rows < 1 or self.cols < 1:
            raise UsageError("--rows and --cols must be positive")
        if self.games < 1:
            raise UsageError("--games must be positive")
        if self.rounds < 1:
            raise UsageError("--rounds must be at least 1")
        if not self.mu >= 0:
            raise UsageError("--mu must be non-negative")
        if self.row_algo not in ALGORITHMS:
            raise UsageError(f"unknown row algorithm {self.row_algo!r}")
        if self.col_algo not in POLICIES:
            raise UsageError(f"unknown column policy {self.col_algo!r}")
        if self.schedule not in SCHEDULES or self.schedule == "custom":
            raise UsageError(f"schedule must be one of constant, inverse-sqrt, got {self.schedule!r}")
        if self.step_mode is not None and self.step_mode not in STEP_MODES:
            raise UsageError(f"unknown step mode {self.step_mode!r}")

    def learner(self) -> LearnerConfig:
        return LearnerConfig(self.row_algo, self.mu, self.schedule, init=self.row_init)

    def column(self) -> ColumnConfig:
        return ColumnConfig(self.col_algo, self.step_mode, self.mu, self.col_init)


HELP_EPILOG = """\
seeds: game i of a batch (0-based) is generated from child i of
numpy.random.SeedSequence(SEED).spawn(GAMES); the random row learner also
draws from SEED.  Identical arguments give byte-identical output files.

presets: {presets}

exit codes: 0 all assertions pass, 1 an assertion failed, 2 usage error.
default output directory: ${env} or ./{default}
"""


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lastround",
        description="Simulate an informed column player against a no-regret row learner.",
        epilog=HELP_EPILOG.format(presets=", ".join(PRESETS), env=OUT_ENV, default=DEFAULT_OUT),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--game", choices=GAME_KINDS)
    p.add_argument("--game-file", help="CSV payoff matrix for --game from-file")
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--games", type=int, help="number of games in the batch (default 1)")
    p.add_argument("--seed", type=int)
    p.add_argument("--row-algo", choices=ALGORITHMS)
    p.add_argument("--mu", type=float, help="row step size; also the MWU column step")
    p.add_argument("--schedule", choices=("constant", "inverse-sqrt"))
    p.add_argument("--col-algo", choices=POLICIES)
    p.add_argument("--step-mode", choices=STEP_MODES)
    p.add_argument("--rounds", type=int)
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    p.add_argument("--preset", help="run a named experiment; cannot be combined with run options")
    return p


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Parse flags into a ``RunConfig``; bad input exits with status 2."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    out = ns.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    given = {k: getattr(ns, k) for k in _OVERRIDABLE if getattr(ns, k) is not None}
    if ns.preset is not None:
        if ns.preset not in PRESETS:
            parser.error(f"unknown preset {ns.preset!r}; choose from {', '.join(PRESETS)}")
        if given:
            flags = ", ".join("--" + k.replace("_", "-") for k in given)
            parser.error(f"--preset {ns.preset} cannot be combined with {flags}")
        return RunConfig(out=out, preset=ns.preset)
    try:
        return RunConfig(out=out, **given)
    except UsageError as exc:
        parser.error(str(exc))


def preset_configs(name: str, out: str = DEFAULT_OUT) -> list[tuple[RunConfig, list]]:
    """Expand a preset into ``(config, assertions)`` pairs."""
    if name not in PRESETS:
        raise UsageError(f"unknown preset {name!r}")
    pairs = []
    for entry in PRESETS[name]["runs"]:
        entry = dict(entry)
        assertions = entry.pop("assert")
        pairs.append((RunConfig(out=out, preset=name, **entry), assertions))
    return pairs


def simulate(config: RunConfig):
    seeds = derive_seeds(config.seed, config.games)
    games = [generate_game(config.game, config.rows, config.cols, s, config.game_file) for s in seeds]
    return run_batch(games, config.learner(), config.column(), config.rounds, seed=config.seed)


def evaluate(trajs, assertions) -> list[dict]:
    results = []
    for metric, op, threshold, params in assertions:
        value = METRICS[metric](trajs, **params)
        results.append({
            "metric": metric, "params": dict(params), "op": op, "threshold": threshold,
            "value": value, "passed": check(op, value, threshold),
        })
    return results


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _config_dict(config: RunConfig) -> dict:
    d = asdict(config)
    d.pop("out")
    return d


def run_config(config: RunConfig) -> int:
    """Single run: one CSV per game plus a JSON summary."""
    trajs = simulate(config)
    out = Path(config.out)
    for g, t in enumerate(trajs):
        _write(out / f"trajectory-{g:03d}.csv", t.csv_text())
    _write(out / "summary.json", _json({"config": _config_dict(config), "runs": [t.summary() for t in trajs]}))
    return EXIT_OK


def run_preset(name: str, out: str = DEFAULT_OUT) -> int:
    """Run every configuration of a preset and write ``<name>-report.json``."""
    entries = []
    for i, (config, assertions) in enumerate(preset_configs(name, out)):
        trajs = simulate(config)
        results = evaluate(trajs, assertions)
        for r in results:
            status = "PASS" if r["passed"] else "FAIL"
            print(f"{status} {name}[{i}] {r['metric']} = {r['value']:.6g} {r['op']} {r['threshold']:.6g}")
        entries.append({"run": i, "config": _config_dict(config), "assertions": results,
                        "summaries": [t.summary() for t in trajs]})
    passed = all(r["passed"] for e in entries for r in e["assertions"])
    report = {"preset": name, "description": PRESETS[name]["description"], "passed": passed, "runs": entries}
    _write(Path(out) / f"{name}-report.json", _json(report))
    return EXIT_OK if passed else EXIT_FAIL


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if config.preset:
            return run_preset(config.preset, config.out)
        return run_config(config)
    except (ValueError, SolverError, OSError) as exc:
        print(f"lastround: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
