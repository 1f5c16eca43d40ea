#!/usr/bin/env python3
"""Plot CSVs written by `hmmop bench run`.

Result CSVs (l1 or accuracy column) become metric-vs-sweep curves per method,
averaged over replications with one standard deviation shaded. Convergence
CSVs become mean log-likelihood traces per method and inner-step setting.
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def plot_results(df, metric, ax):
    ok = df[df["status"] == "ok"]
    swept = ok["sweep_param"].iloc[0] != "none"
    for method, group in ok.groupby("method", sort=False):
        if swept:
            stats = group.groupby("sweep_value")[metric].agg(["mean", "std"]).fillna(0.0)
            ax.plot(stats.index, stats["mean"], marker="o", label=method)
            ax.fill_between(stats.index, stats["mean"] - stats["std"], stats["mean"] + stats["std"], alpha=0.2)
        else:
            ax.bar(method, group[metric].mean(), yerr=group[metric].std() if len(group) > 1 else None)
    if swept:
        ax.set_xlabel(ok["sweep_param"].iloc[0])
        ax.legend()
    ax.set_ylabel(metric)
    ax.set_title(ok["model_id"].iloc[0])


def plot_convergence(df, ax):
    for (method, steps), group in df.groupby(["method", "inner_steps"], sort=False):
        trace = group.groupby("iteration")["mean_loglik"].mean()
        label = method if method == "gaps" else f"{method} ({steps} inner)"
        ax.plot(trace.index, trace.values, label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean log-likelihood")
    ax.legend()


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv", nargs="+", type=Path)
    parser.add_argument("--out-dir", type=Path, default=Path("."))
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    for path in args.csv:
        df = pd.read_csv(path)
        fig, ax = plt.subplots(figsize=(6, 4))
        if "mean_loglik" in df.columns:
            plot_convergence(df, ax)
        else:
            metric = "l1" if "l1" in df.columns else "accuracy"
            plot_results(df, metric, ax)
        fig.tight_layout()
        out = args.out_dir / (path.stem + ".png")
        fig.savefig(out, dpi=120)
        plt.close(fig)
        print(out)


if __name__ == "__main__":
    main()
