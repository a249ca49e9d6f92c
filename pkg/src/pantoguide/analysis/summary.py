"""Whole-study aggregation into a JSON-serialisable report."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from ..cues import DIRECTIONS, Direction
from .io import DOFS, PARTS, ChoiceRecord, TrialRecord
from .motion import (
    AnalysisConfig,
    NoMotionDetected,
    detect_delay,
    kinematics_of_trial,
    peak_displacement,
)
from .stats import (
    ConfusionBlock,
    InsufficientData,
    RankDeficient,
    anova_with_bonferroni,
    build_design,
    cluster_responders,
    confusion_stats,
    delay_mixture,
    factor_f_tests,
    mean_ci,
    ols_fit,
)

# DOF each cue pair is meant to drive
CUE_PAIRS = {
    "x": ("Forward", "Backward"),
    "z": ("Up", "Down"),
    "yaw": ("TwistLeft", "TwistRight"),
    "roll": ("TiltLeft", "TiltRight"),
}
_PRIMARY_DOF = {
    Direction.FORWARD: 0,
    Direction.BACKWARD: 0,
    Direction.UP: 2,
    Direction.DOWN: 2,
    Direction.TWIST_LEFT: 3,
    Direction.TWIST_RIGHT: 3,
    Direction.TILT_LEFT: 5,
    Direction.TILT_RIGHT: 5,
}


@dataclass
class TrialFeatures:
    subject_id: str
    part: str
    trial_index: int
    cue: Direction
    repeats: int
    delay: float  # NaN when no motion was detected
    peak: np.ndarray  # (6,)

    @property
    def primary_magnitude(self) -> float:
        return float(abs(self.peak[_PRIMARY_DOF[self.cue]]))


def extract_features(trial: TrialRecord, cfg: AnalysisConfig) -> TrialFeatures:
    series = kinematics_of_trial(trial, cfg)
    try:
        delay = detect_delay(series, cfg)
    except NoMotionDetected:
        delay = math.nan
    peak = peak_displacement(series)
    return TrialFeatures(
        trial.subject_id, trial.part, trial.trial_index, trial.cue, trial.repeats, delay, peak
    )


@dataclass
class StudySummary:
    confusion: ConfusionBlock | None = None
    peaks: list[dict] = field(default_factory=list)
    delays: dict = field(default_factory=dict)
    clusters: dict = field(default_factory=dict)
    anova: dict = field(default_factory=dict)
    qualitative: list[dict] = field(default_factory=list)
    repeats: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    features: list[TrialFeatures] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return _clean(
            {
                "counts": self.counts,
                "confusion": self.confusion.as_dict() if self.confusion else None,
                "peaks": self.peaks,
                "delays": self.delays,
                "clusters": self.clusters,
                "anova": self.anova,
                "qualitative_checks": self.qualitative,
                "repeats": self.repeats,
            }
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def headline(self) -> dict:
        out = {}
        if self.confusion is not None:
            out["overall_percent_correct"] = round(self.confusion.overall_percent_correct, 1)
        mix = self.delays.get("mixture")
        if mix:
            out["delay_mixture_means_s"] = [round(m, 3) for m in mix["means_s"]]
        if self.clusters:
            out["cluster_sizes"] = self.clusters["sizes"]
        return out


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, NaN/inf to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, Direction):
        return obj.value
    return obj


def _peak_table(feats, cfg):
    rows = []
    for part in PARTS:
        for cue in DIRECTIONS:
            cell = [f.peak for f in feats if f.part == part and f.cue == cue]
            if not cell:
                continue
            arr = np.array(cell)
            for j, dof in enumerate(DOFS):
                m, lo, hi = mean_ci(arr[:, j], cfg.ci_level)
                rows.append(
                    {"part": part, "cue": cue.value, "dof": dof, "n": len(cell),
                     "mean": m, "ci_low": lo, "ci_high": hi}
                )
    return rows


def _subject_features(feats):
    """Per-subject mean delay and variance of normalised peak magnitude."""
    by_subject = {}
    for f in feats:
        by_subject.setdefault(f.subject_id, []).append(f)
    ids = sorted(by_subject)
    rows = []
    for sid in ids:
        fs = by_subject[sid]
        delays = np.array([f.delay for f in fs])
        delays = delays[np.isfinite(delays)]
        normalised = []
        for cue in DIRECTIONS:
            mags = np.array([f.primary_magnitude for f in fs if f.cue == cue])
            if mags.size and mags.mean() > 0:
                normalised.extend(mags / mags.mean())
        rows.append(
            (
                float(delays.mean()) if delays.size else math.nan,
                float(np.var(normalised)) if normalised else math.nan,
            )
        )
    return ids, np.array(rows)


def _delay_models(feats, experience, groups):
    ok = [f for f in feats if np.isfinite(f.delay)]
    y = np.array([f.delay for f in ok])
    cues = np.array([f.cue.value for f in ok], dtype=object)
    parts = np.array([f.part for f in ok], dtype=object)
    cue_levels = [d.value for d in DIRECTIONS if d.value in set(cues)]
    part_levels = [p for p in PARTS if p in set(parts)]
    numeric = {}
    if experience:
        numeric["experience"] = np.array([experience[f.subject_id] for f in ok], dtype=float)
    categorical = {"set": (parts, part_levels), "cue": (cues, cue_levels)}
    models = {}
    specs = {"without_group": dict(categorical)}
    if groups:
        g = np.array([groups[f.subject_id] for f in ok], dtype=object)
        specs["with_responder_group"] = {**categorical, "group": (g, ["Fast", "Slow"])}
    for name, cats in specs.items():
        cats = {k: v for k, v in cats.items() if len(v[1]) > 1}
        try:
            design = build_design(numeric, cats)
            fit = ols_fit(design, y)
            models[name] = {
                "n": int(y.size),
                "r2": fit.r2,
                "coefficients": fit.table(),
                "f_tests": factor_f_tests(design, y),
            }
        except (RankDeficient, InsufficientData) as exc:
            models[name] = {"error": str(exc)}
    return models


def summarize_study(
    trials: list[TrialRecord],
    choices: list[ChoiceRecord] | None = None,
    experience: dict[str, int] | None = None,
    cfg: AnalysisConfig | None = None,
) -> StudySummary:
    cfg = cfg or AnalysisConfig()
    summary = StudySummary()
    trials = sorted(trials, key=lambda r: (r.subject_id, r.part, r.trial_index))
    feats = [extract_features(t, cfg) for t in trials]
    summary.features = feats
    summary.counts = {
        "movement_trials": len(trials),
        "choices": len(choices or []),
        "subjects": len({t.subject_id for t in trials} | {c.subject_id for c in choices or []}),
    }

    if choices:
        summary.confusion = confusion_stats(choices)
        reps = np.array([c.repeats for c in choices], dtype=float)
        rcues = np.array([c.cue.value for c in choices], dtype=object)
        subs = np.array([c.subject_id for c in choices], dtype=object)
        try:
            res = anova_with_bonferroni(
                reps, rcues, blocks={"subject": (subs, sorted(set(subs)))}, dof="repeats",
                alpha=cfg.alpha,
            )
            summary.repeats = {
                "mean": float(reps.mean()),
                "f_tests": res.f_tests,
                "f_undefined": res.flagged,
            }
        except InsufficientData as exc:
            summary.repeats = {"mean": float(reps.mean()), "error": str(exc)}

    if not feats:
        return summary

    summary.peaks = _peak_table(feats, cfg)

    delays = np.array([f.delay for f in feats])
    finite = delays[np.isfinite(delays)]
    dblock = {
        "n_detected": int(finite.size),
        "n_missing": int(delays.size - finite.size),
        "median_s": float(np.median(finite)) if finite.size else math.nan,
    }
    if finite.size >= 4:
        dblock["mixture"] = delay_mixture(finite).as_dict()
    rot = np.array([f.delay for f in feats if f.cue.is_rotation and np.isfinite(f.delay)])
    tra = np.array([f.delay for f in feats if not f.cue.is_rotation and np.isfinite(f.delay)])
    if rot.size > 1 and tra.size > 1:
        w = stats.ttest_ind(rot, tra, equal_var=False)
        dblock["rotation_minus_translation_s"] = {
            "diff": float(rot.mean() - tra.mean()),
            "p": float(w.pvalue),
        }

    ids, sub_feats = _subject_features(feats)
    groups = None
    usable = np.isfinite(sub_feats).all(axis=1)
    if usable.sum() >= 2:
        try:
            cl = cluster_responders(sub_feats[usable])
            names = np.array(ids)[usable]
            groups = {sid: ("Fast" if lab == 0 else "Slow") for sid, lab in zip(names, cl.labels)}
            summary.clusters = {
                "features": ["mean_delay_s", "peak_magnitude_variance"],
                "assignments": groups,
                "sizes": list(cl.sizes),
                "centroids": cl.centroids.tolist(),
                "subject_features": {
                    sid: list(map(float, row)) for sid, row in zip(ids, sub_feats)
                },
            }
        except (InsufficientData, ValueError) as exc:
            summary.clusters = {"error": str(exc)}
    dblock["models"] = _delay_models(feats, experience, groups)
    summary.delays = dblock

    cues = np.array([f.cue.value for f in feats], dtype=object)
    subs = np.array([f.subject_id for f in feats], dtype=object)
    parts = np.array([f.part for f in feats], dtype=object)
    peaks = np.array([f.peak for f in feats])
    blocks = {"subject": (subs, sorted(set(subs))), "set": (parts, [p for p in PARTS if p in set(parts)])}
    for j, dof in enumerate(DOFS):
        try:
            res = anova_with_bonferroni(peaks[:, j], cues, blocks=blocks, dof=dof, alpha=cfg.alpha)
        except InsufficientData as exc:
            summary.anova[dof] = {"error": str(exc)}
            continue
        summary.anova[dof] = res.as_dict()
        if dof in CUE_PAIRS and all(c in res.group_means for c in CUE_PAIRS[dof]):
            summary.qualitative.append(res.opposed_pair(*CUE_PAIRS[dof]))
    return summary


def write_report(summary: StudySummary, outdir) -> list[Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "report.json"]
    paths[0].write_text(summary.dumps())
    if summary.confusion is not None:
        p = out / "confusion.csv"
        labels = [d.value for d in DIRECTIONS]
        lines = ["cue," + ",".join(labels)]
        for lab, row in zip(labels, summary.confusion.percent):
            lines.append(lab + "," + ",".join(f"{v:.1f}" for v in row))
        p.write_text("\n".join(lines) + "\n")
        paths.append(p)
    if summary.peaks:
        p = out / "peaks.csv"
        lines = ["part,cue,dof,n,mean,ci_low,ci_high"]
        for r in summary.peaks:
            lines.append(
                f"{r['part']},{r['cue']},{r['dof']},{r['n']},"
                f"{r['mean']:.6f},{r['ci_low']:.6f},{r['ci_high']:.6f}"
            )
        p.write_text("\n".join(lines) + "\n")
        paths.append(p)
    if summary.features:
        p = out / "trial_features.csv"
        lines = ["subject_id,part,trial_index,cue,repeats,delay_s," + ",".join(f"peak_{d}" for d in DOFS)]
        for f in summary.features:
            d = "" if not np.isfinite(f.delay) else f"{f.delay:.6f}"
            lines.append(
                f"{f.subject_id},{f.part},{f.trial_index},{f.cue.value},{f.repeats},{d},"
                + ",".join(f"{v:.6f}" for v in f.peak)
            )
        p.write_text("\n".join(lines) + "\n")
        paths.append(p)
    return paths
