#!/usr/bin/env python3

""" ablation_table.py
Adopts every corpus case under the default pipeline and each ablation, then
prints how many chosen transformations are 0%, 75% and 100% generalizable.

Usage: Run from the root of the project:
> scripts/ablation_table.py [corpus_dir] [--csv out/ablations.csv]
"""
import sys
import os

# Add the directory containing main.py to the Python path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import click
import pandas as pd

from __init__ import app
from model.corpus import discover_cases
from model.evaluation import THRESHOLDS
from model.pipeline import ABLATIONS, PipelineConfig, run_adopt


def ablation_row(paths, ablation):
    cfg = PipelineConfig.for_ablation(ablation)
    counts = {n: 0 for n in THRESHOLDS}
    for path in paths:
        result = run_adopt(path, cfg)
        for n in THRESHOLDS:
            if result.measurement["generalizable"][str(n)]:
                counts[n] += 1
    row = {"variant": ablation or "default", "cases": len(paths)}
    row.update({f"{n}%": counts[n] for n in THRESHOLDS})
    return row


def ablation_table(corpus_dir):
    paths = discover_cases(corpus_dir)
    rows = [ablation_row(paths, ablation) for ablation in (None,) + tuple(ABLATIONS)]
    return pd.DataFrame(rows)


@click.command()
@click.argument("corpus_dir", required=False)
@click.option("--csv", "csv_path", default=None, help="Also write the table to this file")
def main(corpus_dir, csv_path):
    """Generalizability counts per ablation."""
    table = ablation_table(corpus_dir or app.config["CORPUS_DIR"])
    click.echo(table.to_string(index=False))
    if csv_path:
        os.makedirs(os.path.dirname(csv_path) or ".", exist_ok=True)
        table.to_csv(csv_path, index=False)


if __name__ == "__main__":
    main()
