import numpy as np
import pytest

from frailcure import ParamSet, Weibull
from frailcure.data import (
    DataError,
    Family,
    FhLabel,
    SubjectRecord,
    event_count,
    fh_indicator,
    pack,
    read_csv,
    write_csv,
)
from frailcure.simulate import Scenario, simulate_registry


def fam(*pairs, roles=None):
    roles = roles or ["main", "mother"] + ["sister"] * max(len(pairs) - 2, 0)
    return Family("A", tuple(SubjectRecord(x, d, r) for (x, d), r in zip(pairs, roles)))


def test_record_validation():
    with pytest.raises(DataError):
        SubjectRecord(-1.0, 0)
    with pytest.raises(DataError):
        SubjectRecord(float("inf"), 0)
    with pytest.raises(DataError):
        SubjectRecord(1.0, 2)
    with pytest.raises(DataError):
        SubjectRecord(1.0, 0, role="aunt")


def test_family_validation():
    with pytest.raises(DataError):
        Family("E", ())
    with pytest.raises(DataError):
        Family("M", (SubjectRecord(1, 0, "main"), SubjectRecord(2, 0, "main")))


def test_event_count():
    assert event_count(fam((1, 0), (2, 0), (3, 0))) == 0
    assert event_count(fam((1, 1), (2, 0), (3, 1))) == 2


def test_fh_from_relatives():
    assert fh_indicator(fam((5, 0), (4, 1), (6, 0))).fh_end == 1
    lab = fh_indicator(fam((5, 1), (4, 0), (6, 0)))
    assert lab == FhLabel(0, None)


def test_fh_change_age_from_calendar():
    main = SubjectRecord(30.0, 0, "main", birth_year=1950.0)
    mother = SubjectRecord(40.0, 1, "mother", birth_year=1925.0, event_year=1965.0)
    assert fh_indicator(Family("C", (main, mother))).fh_change_age == 15.0


def test_fh_change_age_recomputed_from_simulation():
    fams, labels = simulate_registry(Scenario(n_families=400, seed=3))
    checked = 0
    for f, lab in zip(fams, labels):
        years = [m.event_year for m in f.members[1:] if m.delta]
        if years:
            assert lab.fh_change_age == pytest.approx(max(0.0, min(years) - f.members[0].birth_year))
            checked += 1
        else:
            assert lab.fh_end == 0
    assert checked > 0


def test_fh_label_invariant():
    with pytest.raises(DataError):
        FhLabel(0, 3.0)


def test_paramset_validation():
    ParamSet(0.5, 0.85, Weibull(8, 6))
    with pytest.raises(ValueError):
        ParamSet(0.0, 0.85, Weibull(8, 6))
    with pytest.raises(ValueError):
        ParamSet(0.5, 1.0, Weibull(8, 6))


def test_pack_layout():
    coh = pack([fam((1, 1), (2, 0)), fam((3, 0))])
    np.testing.assert_array_equal(coh.family_index, [0, 0, 1])
    np.testing.assert_array_equal(coh.sizes, [2, 1])
    np.testing.assert_array_equal(coh.events, [1, 0])
    np.testing.assert_array_equal(coh.family_sum(np.array([1.0, 2.0, 4.0])), [3.0, 4.0])


def test_csv_round_trip(tmp_path):
    fams, labels = simulate_registry(Scenario(n_families=50, seed=1))
    path = tmp_path / "f.csv"
    write_csv(path, fams, labels)
    back, change = read_csv(path)
    assert back == fams
    assert change == {f.id: lab.fh_change_age for f, lab in zip(fams, labels) if lab.fh_change_age is not None}


def test_csv_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("family_id,subject_id,role,age,event\nA,a1,main,3.0,0\nA,a2,sister,x,1\n")
    with pytest.raises(DataError, match="line 3"):
        read_csv(path)
    path.write_text("family_id,age,event\n")
    with pytest.raises(DataError, match="line 1"):
        read_csv(path)
    path.write_text("family_id,subject_id,role,age,event\nA,a1,main,-3.0,0\n")
    with pytest.raises(DataError, match="line 2"):
        read_csv(path)
