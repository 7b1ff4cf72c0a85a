"""Command line interface: run configs, emit recipes, sweep with overrides."""

import logging
import sys

import click

from .harness import (RECIPE_NAMES, dump_decision_regions, load_config, recipe,
                      run_sweep)


def _parse_axis(text, cast=float):
    """Parse 'a,b,c' lists or 'start:stop:step' inclusive ranges."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise click.BadParameter(f"range must be start:stop[:step], got {text!r}")
        start, stop = float(parts[0]), float(parts[1])
        step = float(parts[2]) if len(parts) == 3 else 1.0
        if step <= 0:
            raise click.BadParameter("range step must be positive")
        values = []
        v = start
        while v <= stop + 1e-9:
            values.append(cast(round(v, 10)))
            v += step
        return tuple(values)
    return tuple(cast(v) for v in text.split(","))


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log per-point progress.")
def main(verbose):
    """Fiber transmission simulator and detector benchmark."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr)


_shared_run_options = [
    click.option("--out", type=click.Path(dir_okay=False), default=None,
                 help="Result table path (streamed, then sorted)."),
    click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
                 default="csv", show_default=True,
                 help="csv table or JSON-lines records."),
    click.option("--seed", "seeds", default=None,
                 help="Override seed list, e.g. 1,2,3."),
    click.option("--jobs", type=int, default=1, show_default=True,
                 help="Parallel worker processes."),
    click.option("--regions", type=click.Path(dir_okay=False), default=None,
                 help="Also dump PW decision regions (re,im,label CSV) for "
                      "the first sweep point."),
]


def _with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn
    return wrap


def _execute(cfg, out, fmt, seeds, jobs, regions,
             power=None, radius=None, spans=None):
    overrides = {}
    if seeds is not None:
        overrides["seeds"] = _parse_axis(seeds, int)
    if power is not None:
        overrides["power_dbm"] = _parse_axis(power, float)
    if radius is not None:
        overrides["pw_radius"] = _parse_axis(radius, float)
    if spans is not None:
        overrides["span_counts"] = _parse_axis(spans, int)
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **overrides)
    rows = run_sweep(cfg, out_path=out, fmt=fmt, jobs=jobs)
    if regions:
        dump_decision_regions(cfg, regions)
        click.echo(f"decision regions written to {regions}", err=True)
    failed = sum(r.detector == "error" for r in rows)
    click.echo(f"{len(rows)} result rows"
               + (f" ({failed} failed points)" if failed else "")
               + (f" -> {out}" if out else ""), err=True)
    if not out:
        from .harness import CSV_COLUMNS
        import csv as _csv
        writer = _csv.writer(sys.stdout)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.to_csv_values())


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@_with_options(_shared_run_options)
def run(config_path, out, fmt, seeds, jobs, regions):
    """Execute the sweep described by a config file."""
    _execute(load_config(config_path), out, fmt, seeds, jobs, regions)


@main.command(name="recipe")
@click.argument("name")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the config file here instead of stdout.")
def recipe_cmd(name, out):
    """Emit the named experiment preset as a config file."""
    try:
        cfg = recipe(name)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    text = cfg.to_text()
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        click.echo(f"wrote {out}", err=True)
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--power", default=None,
              help="Override launch power axis (list or start:stop:step, dBm).")
@click.option("--radius", default=None, help="Override PW radius grid.")
@click.option("--spans", default=None, help="Override span-count axis.")
@_with_options(_shared_run_options)
def sweep(config_path, power, radius, spans, out, fmt, seeds, jobs, regions):
    """Run a config with sweep-axis overrides from the command line."""
    _execute(load_config(config_path), out, fmt, seeds, jobs, regions,
             power=power, radius=radius, spans=spans)


if __name__ == "__main__":
    main()
