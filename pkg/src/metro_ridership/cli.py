"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .config import load_config, validate_config
from .errors import ConfigError, RidershipError
from .pipeline import StageError, run_features, run_pipeline


def _fail(stage: str, exc: Exception, code: int):
    click.echo(json.dumps({"stage": stage, "error": str(exc), "type": type(exc).__name__}), err=True)
    sys.exit(code)


def _load(config_file, out_dir):
    try:
        cfg = load_config(config_file)
    except ConfigError as exc:
        _fail("config", exc, exc.exit_code)
    if out_dir is not None:
        cfg.out_dir = Path(out_dir)
    return cfg


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose):
    """Direct-demand ridership models for metro stations."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@click.argument("config_file", type=click.Path(dir_okay=False))
@click.option("--out-dir", type=click.Path(file_okay=False), default=None, help="Override out_dir from the config.")
def run(config_file, out_dir):
    """Run the full pipeline and write the report bundle."""
    cfg = _load(config_file, out_dir)
    try:
        bundle = run_pipeline(cfg)
    except StageError as exc:
        _fail(exc.stage, exc.cause, exc.exit_code)
    for response, rep in bundle.models.items():
        d = rep["diagnostics"]
        chosen = ", ".join(c["variable"] for c in rep["coefficients"][1:]) or "(intercept only)"
        click.echo(f"{response:18s} R2={d['r_squared']:.4f} CV-R2={d['cv_r_squared']:.4f}  {chosen}")
    click.echo(f"wrote {len(bundle.files)} files to {bundle.out_dir}")


@cli.command()
@click.argument("config_file", type=click.Path(dir_okay=False))
def validate(config_file):
    """Check a config file and list every problem found."""
    cfg = _load(config_file, None)
    errors = validate_config(cfg)
    if errors:
        for e in errors:
            click.echo(e, err=True)
        sys.exit(ConfigError.exit_code)
    click.echo("ok")


@cli.command()
@click.argument("config_file", type=click.Path(dir_okay=False))
@click.option("--out-dir", type=click.Path(file_okay=False), default=None, help="Override out_dir from the config.")
def features(config_file, out_dir):
    """Stop after the shared feature exports."""
    cfg = _load(config_file, out_dir)
    try:
        bundle = run_features(cfg)
    except StageError as exc:
        _fail(exc.stage, exc.cause, exc.exit_code)
    click.echo(f"wrote {len(bundle.files)} files to {bundle.out_dir}")


@cli.command()
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--stations", "n_stations", type=int, default=108, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def synth(out_dir, n_stations, seed):
    """Write a synthetic city (inputs plus config.json) for trying the pipeline."""
    from .synthetic import write_city

    try:
        path = write_city(out_dir, n_stations=n_stations, seed=seed)
    except (RidershipError, ValueError) as exc:
        _fail("synth", exc, 2)
    click.echo(f"wrote {path}")


def main():
    cli()


if __name__ == "__main__":
    main()
