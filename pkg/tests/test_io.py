import numpy as np
import pytest

from pantoguide.analysis import io as aio
from pantoguide.cues import Direction
from pantoguide.synth import StudyRecipe, synth_study, write_study


def small_trial(n=9, subject="S01", index=0, cue=Direction.UP):
    t = aio.quantize(np.arange(n) / 80.0)
    pose = aio.quantize(np.arange(n * 6, dtype=float).reshape(n, 6) / 7.0)
    return aio.TrialRecord(subject, "Part1", index, cue, 0, t, pose)


def write_one(path, rec=None):
    aio.write_trials([rec or small_trial()], path)
    return path.read_text().splitlines()


def test_trial_roundtrip(tmp_path):
    recs = [small_trial(index=0), small_trial(index=1, cue=Direction.TILT_RIGHT)]
    aio.write_trials(recs, tmp_path / "t.csv")
    assert aio.load_trials(tmp_path / "t.csv") == recs


def test_synth_study_roundtrip(tmp_path):
    st = synth_study(StudyRecipe.with_subjects(1), seed=2)
    write_study(st, tmp_path)
    assert aio.load_trials(tmp_path / "part1_trials.csv") == st.trials["Part1"]


def test_header_written(tmp_path):
    lines = write_one(tmp_path / "t.csv")
    assert lines[0] == ",".join(aio.TRIAL_COLUMNS)
    assert len(lines) == 10


def test_decreasing_timestamp_rejected(tmp_path):
    path = tmp_path / "t.csv"
    lines = write_one(path)
    a, b = lines[3].split(","), lines[4].split(",")
    a[5], b[5] = b[5], a[5]
    lines[3], lines[4] = ",".join(a), ",".join(b)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(aio.SchemaError, match=r":5: timestamps"):
        aio.load_trials(path)


def test_truncated_last_line_named(tmp_path):
    path = tmp_path / "t.csv"
    text = "\n".join(write_one(path))
    path.write_text(text[:-12])
    with pytest.raises(aio.SchemaError, match=r"t\.csv:10: expected 12 columns"):
        aio.load_trials(path)


def test_nan_rejected(tmp_path):
    path = tmp_path / "t.csv"
    lines = write_one(path)
    row = lines[2].split(",")
    row[8] = "nan"
    lines[2] = ",".join(row)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(aio.SchemaError, match=r":3: bad z_mm"):
        aio.load_trials(path)


def test_unknown_cue_rejected(tmp_path):
    path = tmp_path / "t.csv"
    lines = write_one(path)
    lines[1] = lines[1].replace("Up", "Sideways")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(aio.SchemaError, match="unknown cue"):
        aio.load_trials(path)


def test_wrong_rate_rejected(tmp_path):
    rec = small_trial()
    rec.t = aio.quantize(np.arange(9) / 60.0)
    path = tmp_path / "t.csv"
    aio.write_trials([rec], path)
    with pytest.raises(aio.SchemaError, match="Hz"):
        aio.load_trials(path)


def test_split_trial_rejected(tmp_path):
    a, b = small_trial(index=0), small_trial(index=1)
    path = tmp_path / "t.csv"
    aio.write_trials([a, b], path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join([lines[0], *lines[1:3], *lines[10:], *lines[3:10]]) + "\n")
    with pytest.raises(aio.SchemaError, match="not contiguous"):
        aio.load_trials(path)


def test_bad_header(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(aio.SchemaError, match=":1: expected header"):
        aio.load_trials(path)


def test_empty_files(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("")
    with pytest.raises(aio.EmptyFile):
        aio.load_trials(path)
    path.write_text(",".join(aio.TRIAL_COLUMNS) + "\n")
    with pytest.raises(aio.EmptyFile):
        aio.load_trials(path)


def test_choices_and_subjects_roundtrip(tmp_path):
    ch = [aio.ChoiceRecord("S01", 0, Direction.UP, Direction.DOWN, 2)]
    aio.write_choices(ch, tmp_path / "c.csv")
    assert aio.load_choices(tmp_path / "c.csv") == ch
    aio.write_subjects({"S02": 3, "S01": 1}, tmp_path / "s.csv")
    assert aio.load_subjects(tmp_path / "s.csv") == {"S01": 1, "S02": 3}


def test_choice_non_integer_rejected(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("subject_id,trial_index,cue,response,repeats\nS01,0.5,Up,Up,0\n")
    with pytest.raises(aio.SchemaError, match=":2: bad trial_index"):
        aio.load_choices(path)


def test_record_shape_checked():
    with pytest.raises(aio.SchemaError):
        aio.TrialRecord("S", "Part1", 0, Direction.UP, 0, np.zeros(3), np.zeros((4, 6)))


def test_normalize_angle():
    assert aio.normalize_angle(190.0) == -170.0
    assert aio.normalize_angle(-180.0) == 180.0
    assert np.allclose(aio.normalize_angle([360.0, -10.0]), [0.0, -10.0])
