"""render_figures: regenerate the standard figure set from simulation CSVs.

Expected input layout (produced by `balnet run --out <csv-dir>/<name>`):

    <csv-dir>/test1/{limit.csv, particle.csv}
    <csv-dir>/test2/{limit.csv, particle.csv}
    <csv-dir>/test3_n100/particle.csv
    <csv-dir>/test3_n500/particle.csv

Output: six figure panels across five images per full run; the spatial
scenario ships as one two-panel image (n=100 left, n=500 right).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FigureSpec, LineSpec, render

PRESETS = ("test1", "test2", "test3")


def _mean_variance_specs(csv_dir: Path, out_dir: Path, name: str):
    limit = str(csv_dir / name / "limit.csv")
    particle = str(csv_dir / name / "particle.csv")
    means = FigureSpec(
        inputs=(limit, particle),
        lines=(LineSpec(0, "v_e_1", "solid", "excitatory", label="limit e"),
               LineSpec(0, "v_i_1", "solid", "inhibitory", label="limit i"),
               LineSpec(1, "vhat_e_1", "dotted", "excitatory", label="empirical e"),
               LineSpec(1, "vhat_i_1", "dotted", "inhibitory", label="empirical i")),
        output=str(out_dir / ("%s_means.png" % name)),
        panel_titles=("%s mean activities" % name,),
        ylabel="mean activity")
    variances = FigureSpec(
        inputs=(limit, particle),
        lines=(LineSpec(0, "K_e", "solid", "excitatory", label="limit K_e"),
               LineSpec(0, "K_i", "solid", "inhibitory", label="limit K_i"),
               LineSpec(1, "Khat_e", "dotted", "excitatory", label="empirical K_e"),
               LineSpec(1, "Khat_i", "dotted", "inhibitory", label="empirical K_i")),
        output=str(out_dir / ("%s_variances.png" % name)),
        panel_titles=("%s fluctuation variances" % name,),
        ylabel="variance")
    return [means, variances]


def _spatial_spec(csv_dir: Path, out_dir: Path):
    lines = []
    inputs = []
    titles = []
    for panel, n in enumerate((100, 500)):
        inputs.append(str(csv_dir / ("test3_n%d" % n) / "particle.csv"))
        titles.append("n = %d" % n)
        lines.append(LineSpec(panel, "vhat_e_1", "dotted", "excitatory",
                              panel=panel, label="empirical e"))
        lines.append(LineSpec(panel, "vhat_i_1", "dotted", "inhibitory",
                              panel=panel, label="empirical i"))
    return FigureSpec(inputs=tuple(inputs), lines=tuple(lines),
                      output=str(out_dir / "test3_activity.png"),
                      panel_titles=tuple(titles), ylabel="mean activity")


def figure_specs(csv_dir: Path, out_dir: Path, preset: str = None):
    specs = []
    if preset in (None, "test1"):
        specs += _mean_variance_specs(csv_dir, out_dir, "test1")
    if preset in (None, "test2"):
        specs += _mean_variance_specs(csv_dir, out_dir, "test2")
    if preset in (None, "test3"):
        specs.append(_spatial_spec(csv_dir, out_dir))
    return specs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figures",
        description="Render solid-limit/dotted-empirical figures from CSVs.")
    parser.add_argument("csv_dir", help="directory holding per-scenario CSV folders")
    parser.add_argument("out_dir", help="directory for the rendered images")
    parser.add_argument("--preset", choices=PRESETS,
                        help="render only one scenario's figures")
    args = parser.parse_args(argv)

    csv_dir = Path(args.csv_dir)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        for spec in figure_specs(csv_dir, out_dir, args.preset):
            print(render(spec))
    except (OSError, KeyError, ValueError) as err:
        print("error: %s" % err, file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
