"""Command-line entry point.

Three commands share a layered configuration (built-in defaults, then an
optional JSON config file via ``--config``, then explicit flags):

* ``generate``     write floorplan and episode files for seeded worlds
* ``eval``         run the ablation matrix over those files and report
* ``gen-omp-data`` emit panorama/occupancy training pairs

Exit codes: 0 success, 2 usage or missing inputs, 3 missing environment
for remote services.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from . import evalharness, perception, policy, worldgen
from .language import (
    MockSpotParser,
    ParserConfigError,
    RemoteSpotParser,
    cached,
)
from .policy import (
    AgentConfig,
    MockSimilarityScorer,
    RemoteSimilarityScorer,
    ScorerError,
    make_handcrafted_runner,
    make_pipeline_runner,
    make_random_runner,
)
from .world import Floorplan, load_episodes, save_episodes

ABLATION_LABELS = ("full", "-OMP", "-ASP", "-OMP-ASP")
BASELINE_LABELS = ("random", "handcrafted")


class EnvironmentError_(click.ClickException):
    exit_code = 3


def _load_config_file(path):
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config file {path}: {exc}")
    if not isinstance(data, dict):
        raise click.UsageError(f"config file {path} must hold a JSON object")
    return data


def _resolve(flag_value, file_cfg, key, default):
    """Flag beats config file beats default; None means 'not given'."""
    if flag_value is not None:
        return flag_value
    if key in file_cfg:
        return file_cfg[key]
    return default


def _write_manifest(out_dir: Path, command: str, resolved: dict) -> None:
    path = out_dir / f"manifest-{command}.json"
    path.write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")


def _load_worlds(out_dir: Path):
    world_dir = out_dir / "worlds"
    episode_file = out_dir / "episodes.json"
    if not world_dir.is_dir() or not episode_file.is_file():
        raise click.UsageError(
            f"no generated data under {out_dir} (expected worlds/ and episodes.json; run 'generate' first)"
        )
    floorplans = {}
    for f in sorted(world_dir.glob("*.json")):
        fp = Floorplan.load(f)
        floorplans[fp.id] = fp
    if not floorplans:
        raise click.UsageError(f"no floorplan files in {world_dir}")
    return floorplans, load_episodes(episode_file)


@click.group()
def main():
    """Desk-scale zero-shot navigation simulator and evaluation harness."""


@main.command()
@click.option("--seed", type=int, default=None, help="Generation seed [default: 7]")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Output directory [default: runs]")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="JSON config file")
@click.option("--worlds", type=int, default=None, help="Number of worlds [default: 3]")
@click.option("--episodes-per-world", type=int, default=None, help="Episodes per world [default: 5]")
@click.option("--rooms", type=int, default=None, help="Rooms per world, 2..8 [default: 2]")
@click.option("--corridor-width", type=float, default=None, help="Corridor width in meters [default: 1.6]")
def generate(seed, out_path, config_path, worlds, episodes_per_world, rooms, corridor_width):
    """Generate floorplan and episode files."""
    cfg = _load_config_file(config_path)
    resolved = {
        "seed": _resolve(seed, cfg, "seed", 7),
        "out": str(_resolve(out_path, cfg, "out", "runs")),
        "worlds": _resolve(worlds, cfg, "worlds", 3),
        "episodes_per_world": _resolve(episodes_per_world, cfg, "episodes_per_world", 5),
        "rooms": _resolve(rooms, cfg, "rooms", 2),
        "corridor_width": _resolve(corridor_width, cfg, "corridor_width", 1.6),
    }
    if resolved["worlds"] < 1:
        raise click.UsageError("--worlds must be >= 1")
    spec = worldgen.GenerationSpec(
        rooms=resolved["rooms"],
        corridor_width=resolved["corridor_width"],
        episodes_per_world=resolved["episodes_per_world"],
    )
    try:
        floorplans, episodes = worldgen.generate_batch(resolved["seed"], resolved["worlds"], spec)
    except worldgen.GenerationError as exc:
        raise click.UsageError(str(exc))

    out_dir = Path(resolved["out"])
    (out_dir / "worlds").mkdir(parents=True, exist_ok=True)
    paths = []
    for fp in floorplans:
        p = out_dir / "worlds" / f"{fp.id}.json"
        fp.save(p)
        paths.append(p)
    ep_path = out_dir / "episodes.json"
    save_episodes(episodes, ep_path)
    paths.append(ep_path)
    _write_manifest(out_dir, "generate", resolved)

    for p in paths:
        click.echo(str(p))
    click.echo(f"{len(floorplans)} worlds, {len(episodes)} episodes")


def _build_parser(kind, cache_dir):
    if kind == "mock":
        parser = MockSpotParser()
    else:
        try:
            parser = RemoteSpotParser()
        except ParserConfigError as exc:
            raise EnvironmentError_(f"{exc} (set the variable or use --parser mock)")
    if cache_dir:
        parser = cached(parser, cache_dir)
    return parser


def _build_scorer(kind):
    if kind == "mock":
        return MockSimilarityScorer()
    try:
        return RemoteSimilarityScorer()
    except ScorerError as exc:
        raise EnvironmentError_(f"{exc} (set the variable or use --scorer mock)")


@main.command(name="eval")
@click.option("--seed", type=int, default=None, help="Suite seed [default: 7]")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Data/report directory [default: runs]")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="JSON config file")
@click.option("--scorer", type=click.Choice(["mock", "remote"]), default=None, help="[default: mock]")
@click.option("--parser", "parser_kind", type=click.Choice(["mock", "remote"]), default=None, help="[default: mock]")
@click.option("--only", multiple=True, help="Run only these config labels (repeatable)")
@click.option("--baselines/--no-baselines", "with_baselines", default=None, help="Include baseline agents [default: off]")
@click.option("--k", type=int, default=None, help="Progress threshold K [default: 2]")
@click.option("--success-radius", type=float, default=None, help="Success radius in meters [default: 3.0]")
@click.option("--budget", type=int, default=None, help="Step budget per episode [default: 200]")
@click.option("--parallelism", type=int, default=None, help="Concurrent episodes [default: 1]")
@click.option("--cache-dir", type=click.Path(), default=None, help="Parser cache directory")
@click.option("--trajectories", is_flag=True, default=False, help="Record per-episode trajectories")
def eval_cmd(seed, out_path, config_path, scorer, parser_kind, only, with_baselines, k,
             success_radius, budget, parallelism, cache_dir, trajectories):
    """Run the ablation matrix over generated episodes and write reports."""
    cfg = _load_config_file(config_path)
    resolved = {
        "seed": _resolve(seed, cfg, "seed", 7),
        "out": str(_resolve(out_path, cfg, "out", "runs")),
        "scorer": _resolve(scorer, cfg, "scorer", "mock"),
        "parser": _resolve(parser_kind, cfg, "parser", "mock"),
        "only": list(only) or cfg.get("only", []),
        "baselines": _resolve(with_baselines, cfg, "baselines", False),
        "k": _resolve(k, cfg, "k", 2),
        "success_radius": _resolve(success_radius, cfg, "success_radius", 3.0),
        "budget": _resolve(budget, cfg, "budget", 200),
        "parallelism": _resolve(parallelism, cfg, "parallelism", 1),
        "cache_dir": cache_dir or cfg.get("cache_dir"),
        "trajectories": trajectories or cfg.get("trajectories", False),
    }
    if resolved["k"] < 1 or resolved["budget"] < 0 or resolved["parallelism"] < 1:
        raise click.UsageError("invalid k/budget/parallelism")
    if resolved["success_radius"] <= 0:
        raise click.UsageError("--success-radius must be positive")

    out_dir = Path(resolved["out"])
    floorplans, episodes = _load_worlds(out_dir)

    parser = _build_parser(resolved["parser"], resolved["cache_dir"])
    scorer_client = _build_scorer(resolved["scorer"])

    base = dict(
        progress_threshold=resolved["k"],
        step_budget=resolved["budget"],
        record_trajectory=resolved["trajectories"],
    )
    flag_sets = {
        "full": dict(use_omp=True, use_asp=True),
        "-OMP": dict(use_omp=False, use_asp=True),
        "-ASP": dict(use_omp=True, use_asp=False),
        "-OMP-ASP": dict(use_omp=False, use_asp=False),
    }
    configs = [
        (label, make_pipeline_runner(parser, scorer_client, AgentConfig(**flags, **base), label))
        for label, flags in flag_sets.items()
    ]
    if resolved["baselines"]:
        configs.append(("random", make_random_runner(resolved["budget"])))
        configs.append(("handcrafted", make_handcrafted_runner(resolved["budget"])))
    if resolved["only"]:
        known = {label for label, _ in configs}
        unknown = [l for l in resolved["only"] if l not in known]
        if unknown:
            raise click.UsageError(f"unknown config labels {unknown}; known: {sorted(known)}")
        configs = [(l, r) for l, r in configs if l in resolved["only"]]

    summaries, results = evalharness.run_suite(
        episodes,
        floorplans,
        configs,
        seed=resolved["seed"],
        parallelism=resolved["parallelism"],
        success_radius=resolved["success_radius"],
    )
    report_dir = out_dir / "report"
    files = evalharness.write_report(summaries, results, report_dir)
    _write_manifest(out_dir, "eval", resolved)
    for f in files:
        click.echo(str(f))
    click.echo((report_dir / "report.txt").read_text(), nl=False)


@main.command(name="gen-omp-data")
@click.option("--seed", type=int, default=None, help="Sampling seed [default: 7]")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Data directory [default: runs]")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="JSON config file")
@click.option("--samples", type=int, default=None, help="Samples per world [default: 100]")
@click.option("--rays", type=int, default=None, help="Rays per view [default: 10]")
@click.option("--verify", is_flag=True, default=False, help="Re-check every record against the oracle")
def gen_omp_data(seed, out_path, config_path, samples, rays, verify):
    """Emit occupancy-predictor training data from generated worlds."""
    cfg = _load_config_file(config_path)
    resolved = {
        "seed": _resolve(seed, cfg, "seed", 7),
        "out": str(_resolve(out_path, cfg, "out", "runs")),
        "samples": _resolve(samples, cfg, "samples", 100),
        "rays": _resolve(rays, cfg, "rays", 10),
        "verify": verify,
    }
    if resolved["samples"] < 1:
        raise click.UsageError("--samples must be >= 1")

    out_dir = Path(resolved["out"])
    floorplans, _ = _load_worlds(out_dir)
    dataset = out_dir / "omp_dataset.jsonl"
    n = perception.emit_omp_dataset(
        floorplans.values(), resolved["samples"], resolved["seed"], dataset, resolved["rays"]
    )
    _write_manifest(out_dir, "gen-omp-data", resolved)
    click.echo(f"{n} records")
    click.echo(str(dataset))
    if verify:
        checked = perception.verify_omp_dataset(dataset, floorplans)
        click.echo(f"verified {checked} records against the oracle")


if __name__ == "__main__":
    main()
