"""Generate and analyse synthetic studies for several seeds; print headline numbers.

    python scripts/run_study.py --seeds 0 1 2 --out runs/
"""

import argparse
import json
import time
from pathlib import Path

from pantoguide.analysis.io import load_choices, load_subjects, load_trials
from pantoguide.analysis.summary import summarize_study, write_report
from pantoguide.synth import StudyRecipe, fileset_digest, synth_study, write_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--subjects", type=int, default=20)
    ap.add_argument("--out", default="runs")
    args = ap.parse_args()

    recipe = StudyRecipe.with_subjects(args.subjects)
    print("seed  sizes   mixture_s      slope_grp  slope_nogrp  opposed  correct  seconds  sha256")
    for seed in args.seeds:
        t0 = time.perf_counter()
        logs = Path(args.out) / f"seed{seed}" / "logs"
        write_study(synth_study(recipe, seed), logs)
        trials = load_trials(logs / "part1_trials.csv") + load_trials(logs / "part3_trials.csv")
        summary = summarize_study(
            trials, load_choices(logs / "part2_choices.csv"), load_subjects(logs / "subjects.csv")
        )
        write_report(summary, logs.parent / "report")
        elapsed = time.perf_counter() - t0

        manifest = json.loads((logs / "manifest.json").read_text())
        truth = {s["subject_id"]: s["responder_class"] for s in manifest["subjects"]}
        exact = summary.clusters.get("assignments") == truth
        slopes = {}
        for name, model in summary.delays["models"].items():
            row = next(r for r in model.get("coefficients", []) if r["term"] == "experience")
            slopes[name] = row["coef"]
        mix = summary.delays["mixture"]["means_s"]
        opposed = sum(q["holds"] for q in summary.qualitative)
        print(
            f"{seed:4d}  {summary.clusters['sizes']}{'*' if exact else ' '} "
            f"{mix[0]:.3f}/{mix[1]:.3f}  {slopes['with_responder_group']:9.4f}  "
            f"{slopes['without_group']:11.4f}  {opposed}/{len(summary.qualitative)}      "
            f"{summary.confusion.overall_percent_correct:6.1f}  {elapsed:7.1f}  "
            f"{fileset_digest(logs)[:12]}"
        )
    print("* = assignments identical to the generator's responder classes")


if __name__ == "__main__":
    main()
