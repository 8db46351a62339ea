"""Batch CLI: fit a session, render Voronoi SVGs, compare selections,
project new rows. Session files are shared with the HTTP server.
"""

import sys

import click
import numpy as np

from .colormap import values_to_colors
from .dataset import load_csv, preprocess
from .errors import EmbedLensError, InvalidParameter
from .session import load_session, run_pipeline, save_session
from .svg import voronoi_svg
from .umap import METRICS, UmapConfig, transform_new


def _fail(exc):
    click.echo(f"{exc.code}: {exc.message}", err=True)
    sys.exit(1)


def _load(session_path):
    with open(session_path, "rb") as f:
        return load_session(f.read())


def _parse_indices(spec):
    """Index list from "1,2,3" or @file-with-indices."""
    if spec.startswith("@"):
        with open(spec[1:], encoding="utf-8") as f:
            spec = f.read()
    parts = spec.replace(",", " ").split()
    try:
        return [int(p) for p in parts]
    except ValueError as exc:
        raise InvalidParameter(f"bad index list: {exc}") from exc


@click.group()
def main():
    """Explainable neighbor-embedding workbench."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--preprocess", "mode", default="center",
              type=click.Choice(["center", "autoscale"]))
@click.option("--delimiter", default=",")
@click.option("--id-column", default=None)
@click.option("--neighbors", default=15, show_default=True)
@click.option("--min-dist", default=0.1, show_default=True)
@click.option("--metric", default="euclidean", type=click.Choice(list(METRICS)))
@click.option("--epochs", default=200, show_default=True)
@click.option("--max-pcs", default=None, type=int,
              help="PCA components to fit [default: min(I-1, J, 10)]")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def fit(input_path, mode, delimiter, id_column, neighbors, min_dist, metric,
        epochs, max_pcs, seed, out_path):
    """Fit PCA + embedding on a CSV and write a session file."""
    try:
        with open(input_path, "rb") as f:
            ds = load_csv(f.read(), delimiter=delimiter, id_column=id_column)
        ds = preprocess(ds, mode)
        if max_pcs is None:
            max_pcs = min(ds.n_samples - 1, ds.n_variables, 10)
        cfg = UmapConfig(n_neighbors=neighbors, min_dist=min_dist,
                         metric=metric, n_epochs=epochs, seed=seed)
        cfg.validate(ds.n_samples)
        s = run_pipeline(ds, cfg, max_pcs)
        with open(out_path, "wb") as f:
            f.write(save_session(s))
        click.echo(f"session {s.id}: {ds.n_samples} samples, "
                   f"{ds.n_variables} variables, "
                   f"{s.selected_components} components selected")
    except EmbedLensError as exc:
        _fail(exc)


@main.command("plot-voronoi")
@click.option("--session", "session_path", required=True,
              type=click.Path(exists=True))
@click.option("--color", "color_spec", default="pc:0", show_default=True,
              help="pc:K | q:K | q:total | var:NAME")
@click.option("--out", "out_path", required=True, type=click.Path())
def plot_voronoi(session_path, color_spec, out_path):
    """Render the session's Voronoi diagram as a standalone SVG."""
    try:
        s = _load(session_path)
        values = _color_values(s, color_spec)
        svg = voronoi_svg(s.voronoi, colors=values_to_colors(values),
                          title=color_spec)
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(svg)
        click.echo(f"wrote {out_path}")
    except EmbedLensError as exc:
        _fail(exc)


def _color_values(s, spec):
    kind, _, arg = spec.partition(":")
    if kind == "pc":
        return s.color_by("pc_score", arg or "0")
    if kind == "q":
        return s.color_by("q_residual", arg or "total")
    if kind == "var":
        return s.color_by("variable", arg)
    raise InvalidParameter(f"bad color spec {spec!r} (pc:K | q:K|total | var:NAME)")


@main.command()
@click.option("--session", "session_path", required=True,
              type=click.Path(exists=True))
@click.option("--a", "a_spec", required=True,
              help="sample indices, e.g. 0,1,2 or @file")
@click.option("--b", "b_spec", required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def compare(session_path, a_spec, b_spec, out_path):
    """Ranked relative contributions between two sample groups, as CSV."""
    try:
        s = _load(session_path)
        s.add_selection("cli-a", indices=_parse_indices(a_spec))
        s.add_selection("cli-b", indices=_parse_indices(b_spec))
        report = s.compare("cli-a", "cli-b")
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(report.to_csv(s.dataset.variables))
        top = s.dataset.variables[report.ranking[0]]
        click.echo(f"top-ranked variable: {top}")
    except EmbedLensError as exc:
        _fail(exc)


@main.command()
@click.option("--session", "session_path", required=True,
              type=click.Path(exists=True))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--delimiter", default=",")
@click.option("--out", "out_path", required=True, type=click.Path())
def transform(session_path, input_path, delimiter, out_path):
    """Project new CSV rows (original units) into the fitted embedding."""
    try:
        s = _load(session_path)
        with open(input_path, "rb") as f:
            text = f.read().decode("utf-8")
        rows = _parse_rows(text, delimiter, s.dataset.variables)
        lines = ["x,y"]
        for row in rows:
            x = s.dataset.preprocess_vector(row)
            y = transform_new(s.umap, x)
            lines.append(f"{repr(float(y[0]))},{repr(float(y[1]))}")
        with open(out_path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")
        click.echo(f"projected {len(rows)} rows")
    except EmbedLensError as exc:
        _fail(exc)


def _parse_rows(text, delimiter, variables):
    import csv
    import io

    reader = list(csv.reader(io.StringIO(text), delimiter=delimiter))
    reader = [r for r in reader if r]
    if not reader:
        raise InvalidParameter("no rows in input")
    start = 0
    if reader[0] == list(variables):
        start = 1
    rows = []
    for raw in reader[start:]:
        if len(raw) != len(variables):
            raise InvalidParameter(
                f"expected {len(variables)} columns, got {len(raw)}")
        rows.append(np.array([float(c) for c in raw], dtype=np.float64))
    return rows


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--data-dir", default=None, type=click.Path())
@click.option("--ui-dir", default=None, type=click.Path(exists=True),
              help="serve a built frontend at /ui")
@click.option("--max-fits", default=2, show_default=True)
@click.option("--seed", default=0, show_default=True)
def serve(host, port, data_dir, ui_dir, max_fits, seed):
    """Run the HTTP API server."""
    import uvicorn

    from .server import create_app

    app = create_app(data_dir=data_dir, max_concurrent_fits=max_fits,
                     default_seed=seed, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
