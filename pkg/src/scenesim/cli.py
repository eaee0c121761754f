"""Batch CLI: run editing rounds, plan without rendering, lint command files."""

from __future__ import annotations

import json
import os
import sys

import click

from . import dsl, orchestrator
from .compositor import assemble_video
from .demo import demo_scene
from .export import dumps_canonical, export_document
from .rendering import RenderOptions
from .report import topdown_figure, write_trajectory_csvs
from .scene import load_scene, save_scene, validate_scene


@click.group()
def main():
    """Driving-scene editing simulator."""


def _load(scene: str | None):
    if scene is None or scene == "demo":
        return demo_scene()
    return load_scene(scene)


def _read_commands(path: str) -> list[str]:
    with open(path) as fh:
        return [line.strip() for line in fh if line.strip()
                and not line.lstrip().startswith("#")]


@main.command()
@click.option("--scene", "scene_path", default="demo",
              help="scene JSON file, or 'demo'")
@click.option("--commands", "commands_path", required=True,
              help="text file, one command per line")
@click.option("--seed", default=0, type=int)
@click.option("--out", "out_dir", required=True)
@click.option("--frames", default=4, type=int, help="frames per round")
@click.option("--width", default=160, type=int)
@click.option("--height", default=120, type=int)
def run(scene_path, commands_path, seed, out_dir, frames, width, height):
    """Execute command rounds, writing frames, report figures, and export."""
    code = _execute(scene_path, commands_path, seed, out_dir, render=True,
                    frames=frames, width=width, height=height)
    sys.exit(code)


@main.command()
@click.option("--scene", "scene_path", default="demo")
@click.option("--commands", "commands_path", required=True)
@click.option("--seed", default=0, type=int)
@click.option("--out", "out_dir", required=True)
def plan(scene_path, commands_path, seed, out_dir):
    """Like run, but stops before rendering (state + export only)."""
    code = _execute(scene_path, commands_path, seed, out_dir, render=False)
    sys.exit(code)


def _execute(scene_path, commands_path, seed, out_dir, render,
             frames=4, width=160, height=120) -> int:
    os.makedirs(out_dir, exist_ok=True)
    state = _load(scene_path)
    session = orchestrator.Session(
        id="cli", state=state, seed=seed,
        render_options=RenderOptions(width=width, height=height, frames=frames))

    all_frames = []
    exit_code = 0
    for i, raw in enumerate(_read_commands(commands_path)):
        try:
            result = orchestrator.run_command(session, raw, render=render)
            all_frames.extend(result.frames)
            click.echo(f"round {i}: ok ({raw})")
        except Exception as exc:
            click.echo(f"round {i}: FAILED ({raw}): {exc}", err=True)
            exit_code = 1

    save_scene(session.state, os.path.join(out_dir, "scene.json"))
    doc = export_document(session.state, session.bank)
    with open(os.path.join(out_dir, "export.json"), "w") as fh:
        fh.write(dumps_canonical(doc))
    write_trajectory_csvs(session.state, out_dir)
    topdown_figure(session.state, os.path.join(out_dir, "topdown.png"),
                   title=f"final scene (seed={seed})")
    if render and all_frames:
        assemble_video(all_frames, session.render_options.fps, out_dir)
    violations = validate_scene(session.state)
    if violations:
        click.echo("scene violations: " + "; ".join(violations), err=True)
        exit_code = 1
    return exit_code


@main.command("lint-dsl")
@click.argument("corpus", type=click.Path(exists=True))
def lint_dsl(corpus):
    """Validate a command corpus against the grammar; exit 1 on any failure."""
    failures = 0
    for lineno, raw in enumerate(_read_commands(corpus), start=1):
        try:
            configs = dsl.parse_command(dsl.CommandText(raw))
            for c in configs:
                dsl.validate_config_dict(c.to_dict())
        except Exception as exc:
            click.echo(f"line {lineno}: {exc}", err=True)
            failures += 1
    if failures:
        click.echo(f"{failures} line(s) failed", err=True)
        sys.exit(1)
    click.echo("corpus OK")


@main.command()
@click.option("--port", default=8000, type=int)
def serve(port):
    """Start the HTTP session service."""
    from .service import main as serve_main
    serve_main(port)


@main.command("export-demo-scene")
@click.argument("path")
def export_demo_scene(path):
    """Write the built-in demo scene as a JSON scene file."""
    save_scene(demo_scene(), path)
    click.echo(path)


if __name__ == "__main__":
    main()
