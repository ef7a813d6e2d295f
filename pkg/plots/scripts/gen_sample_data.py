"""Regenerate the bundled sample sweep by driving the bandit-nav CLI.

Everything under sample_data/ is real simulator output at reduced scale,
committed so the renderer's tests and demos need no simulation run.
"""

import csv
import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

HERE = Path(__file__).resolve().parent
SAMPLE = HERE.parent / "src" / "bandit_nav_plots" / "sample_data"


def cli(*args):
    subprocess.run(["bandit-nav", *args], check=True, capture_output=True, text=True)


def network_path() -> str:
    out = subprocess.run(
        [sys.executable, "-c", "from bandit_nav.netio import bundled_network_path; print(bundled_network_path())"],
        check=True,
        capture_output=True,
        text=True,
    )
    return out.stdout.strip()


def main() -> None:
    SAMPLE.mkdir(parents=True, exist_ok=True)
    for old in SAMPLE.glob("*.csv"):
        old.unlink()
    net = network_path()
    shutil.copy(net, SAMPLE / "network.csv")

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)

        # policy-comparison sweep for regret curves
        cfg = tmp / "cfg.json"
        cfg.write_text(
            json.dumps(
                {
                    "scenario": "known-prior",
                    "T": 40,
                    "source": 0,
                    "target": 29,
                    "policies": ["ts", "bayes-ucb", "greedy"],
                    "seeds": [0, 1],
                    "output_dir": str(tmp / "sweep"),
                }
            )
        )
        cli("sweep", "--network", net, "--config", str(cfg))
        for f in sorted((tmp / "sweep").glob("known-prior_*.csv")):
            shutil.copy(f, SAMPLE / f.name)

        # fleet sizes 1..5 for the fleet comparison figure; seed 9 keeps the
        # run ids distinct from the sweep cells above
        for k in range(1, 6):
            out = tmp / f"fleet{k}"
            cli(
                "run", "--network", net, "--config", str(cfg),
                "--policy", "ts", "--seed", "9", "--T", "30", "--K", str(k),
                "--out", str(out),
            )
            for f in out.glob("known-prior_*.csv"):
                shutil.copy(f, SAMPLE / f.name)

        # reduced-scale edge-count scaling table from synthetic instances
        rows = []
        for o in (200, 250, 300, 350, 400):
            finals = []
            for seed in (0, 1, 2):
                inst = tmp / f"synth_{o}_{seed}"
                cli("gen-synth", "--n", "30", "--o", str(o), "--seed", str(seed), "--out", str(inst))
                run_cfg = inst / "cfg.json"
                run_cfg.write_text(
                    json.dumps(
                        {
                            "scenario": "synthetic",
                            "ground_truth": str(inst / "synth_truth.csv"),
                            "T": 200,
                            "source": 0,
                            "target": 29,
                            "policies": ["ts"],
                            "seeds": [seed],
                            "output_dir": str(inst / "out"),
                        }
                    )
                )
                cli("sweep", "--network", str(inst / "synth_network.csv"), "--config", str(run_cfg))
                with (inst / "out" / "summary.csv").open() as fh:
                    summary = list(csv.DictReader(fh))
                finals.append(float(summary[0]["avg_final_regret"]))
            mean = sum(finals) / len(finals)
            sd = (sum((x - mean) ** 2 for x in finals) / (len(finals) - 1)) ** 0.5
            rows.append({"n_vertices": 30, "n_edges": o, "avg_final_regret": mean, "sd_final_regret": sd})

    with (SAMPLE / "scaling.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["n_vertices", "n_edges", "avg_final_regret", "sd_final_regret"])
        writer.writeheader()
        writer.writerows(rows)
    print(f"sample data written to {SAMPLE}")


if __name__ == "__main__":
    main()
