"""Trial-log ingestion, per-trial motion features and study statistics.

Names are re-exported lazily so that loading one submodule (for example the
log writer used by the generator) does not import scipy and scikit-learn.
"""

import importlib

_EXPORTS = {
    "frames": ["Pose6", "RigidOffset", "to_handle_frame", "transform_series"],
    "io": [
        "ChoiceRecord",
        "EmptyFile",
        "SchemaError",
        "TrialRecord",
        "load_choices",
        "load_subjects",
        "load_trials",
        "write_choices",
        "write_subjects",
        "write_trials",
    ],
    "params": ["AnalysisConfig"],
    "motion": [
        "MotionSeries",
        "NoMotionDetected",
        "TooShort",
        "detect_delay",
        "kinematics_of_trial",
        "peak_displacement",
    ],
    "stats": [
        "DegenerateFeatures",
        "InsufficientData",
        "RankDeficient",
        "UnknownLabel",
        "anova_with_bonferroni",
        "build_design",
        "cluster_responders",
        "confusion_stats",
        "delay_mixture",
        "mean_ci",
        "ols_fit",
    ],
    "summary": ["StudySummary", "TrialFeatures", "extract_features", "summarize_study", "write_report"],
}
_OWNER = {name: mod for mod, names in _EXPORTS.items() for name in names}

__all__ = sorted(_OWNER)


def __getattr__(name):
    if name in _OWNER:
        value = getattr(importlib.import_module(f".{_OWNER[name]}", __name__), name)
        globals()[name] = value
        return value
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(__all__))
