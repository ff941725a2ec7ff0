"""Turn the output of ``lieregulator run`` into figures.

    lieregulator run sec5_nominal --out runs/nominal
    python demos/plot_run.py runs/nominal --out nominal.png
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import yaml

from lieregulator.simulate import TrajectoryLog

parser = argparse.ArgumentParser(description="plot a run directory")
parser.add_argument("run_dir")
parser.add_argument("--out", default="run.png")
args = parser.parse_args()

run_dir = Path(args.run_dir)
log = TrajectoryLog.from_csv(run_dir / "trajectory.csv")
summary = yaml.safe_load((run_dir / "summary.yaml").read_text())
print(f"{summary['scenario']}: status {summary['status']}, {summary['rows']} rows")

panels = [c for c in ("group_error", "e_sq_sum", "w_tilde_norm", "omega_tilde_norm") if c in log.columns]
lyap = "L_bs" if "L_bs" in log.columns else "L"
fig, axes = plt.subplots(len(panels) + 1, 1, sharex=True, figsize=(8, 2.2 * (len(panels) + 1)))
for ax, col in zip(axes, panels + [lyap]):
    ax.semilogy(log.t, np.maximum(np.abs(log[col]), 1e-18))
    ax.set_ylabel(col)
axes[-1].set_xlabel("t [s]")
fig.suptitle(summary["scenario"])
fig.tight_layout()
fig.savefig(args.out, dpi=120)
print("wrote", args.out)
