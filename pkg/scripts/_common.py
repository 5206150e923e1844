"""Shared plumbing for the experiment scripts: write a config, run the CLI."""

import argparse
import json
from pathlib import Path

from robustpois.harness.cli import main

# settings shared by every recovery experiment
BASE = {
    "p": 6,
    "q": 0,
    "r": 0.5,
    "s": 1,
    "N": 1000,
    "tau": 1e-5,
    "tau_y": 0.01,
    "init": "mean",
    "solver": "hybrid",
}


def parser(description, M=100):
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--out", default="results", help="output root directory")
    ap.add_argument("--M", type=int, default=M, help="number of simulated runs")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    return ap


def run(command, name, settings, args):
    out = Path(args.out) / name
    out.mkdir(parents=True, exist_ok=True)
    cfg = out / "run.cfg"
    lines = [f"{k} = {', '.join(map(str, v)) if isinstance(v, (list, tuple)) else v}" for k, v in settings.items()]
    cfg.write_text("\n".join(lines) + "\n")
    code = main([command, "--config", str(cfg), "--out", str(out), "--seed", str(args.seed)])
    print(f"{name}: exit {code}")
    return out


def experiment(name, settings, args):
    out = run("experiment", name, {**BASE, **settings, "M": args.M, "workers": args.workers}, args)
    summary = json.loads((out / "summary.json").read_text())
    print(f"  runs ok {summary['succeeded']}/{summary['M']}, mean iterations {summary['iterations']['mean']}")
    for coef, st in summary["coefficients"].items():
        if st is not None:
            print(f"  {coef:>4}  true {st['true']:+.3f}  median {st['median']:+.4f}  IQR [{st['q1']:+.4f}, {st['q3']:+.4f}]")
    return summary
