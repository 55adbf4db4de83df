"""Renewable generation profiles and per-station budget mapping."""

import numpy as np
import pytest

from ecomp import EnergyProfile, ProfileError, bs_budgets_at, load_profiles


def test_bundled_profile_loads_and_is_normalized():
    prof = load_profiles("bundled")
    assert len(prof) >= 96
    assert prof.wind.max() == pytest.approx(1.0)
    assert prof.solar.max() == pytest.approx(1.0)
    assert prof.wind.min() >= 0.0 and prof.solar.min() >= 0.0
    assert np.sum(prof.solar == 0.0) > 0.25 * len(prof)   # night hours


def test_bundled_timestamps_strictly_increase():
    prof = load_profiles("bundled")
    assert all(a < b for a, b in zip(prof.timestamps, prof.timestamps[1:]))


def test_budgets_combine_mixes_and_mean_level():
    prof = EnergyProfile(
        timestamps=("t0", "t1"),
        wind=np.array([1.0, 0.5]),
        solar=np.array([0.0, 1.0]),
        mixes=((1.0, 0.0), (0.0, 1.0), (0.5, 0.5)),
        ebar=4.0,
    )
    np.testing.assert_allclose(bs_budgets_at(prof, 0), [4.0, 0.0, 2.0])
    np.testing.assert_allclose(bs_budgets_at(prof, 1), [2.0, 4.0, 3.0])
    with pytest.raises(IndexError):
        bs_budgets_at(prof, 2)


def test_with_mix_overrides_station_composition():
    prof = load_profiles("bundled")
    prof2 = prof.with_mix(((1.0, 0.0),), ebar=2.0)
    np.testing.assert_allclose(bs_budgets_at(prof2, 0), [2.0 * prof.wind[0]])


def test_profile_validation():
    with pytest.raises(ProfileError):
        EnergyProfile(timestamps=("t0",), wind=np.array([1.0]),
                      solar=np.array([1.0]))
    with pytest.raises(ProfileError):
        EnergyProfile(timestamps=("t0", "t1"), wind=np.array([1.0, 2.0]),
                      solar=np.array([0.0, 1.0]))


def test_csv_parsing_reports_the_offending_line(tmp_path):
    bad = tmp_path / "profile.csv"
    bad.write_text("timestamp,wind,solar\n"
                   "2013-10-01T00:00,0.5,0.0\n"
                   "2013-10-01T00:15,oops,0.1\n")
    with pytest.raises(ProfileError, match="line 3"):
        load_profiles(bad)


def test_csv_rejects_non_monotone_timestamps(tmp_path):
    bad = tmp_path / "profile.csv"
    bad.write_text("timestamp,wind,solar\n"
                   "2013-10-01T01:00,0.5,0.0\n"
                   "2013-10-01T00:45,0.6,0.1\n")
    with pytest.raises(ProfileError, match="timestamp"):
        load_profiles(bad)


def test_csv_rejects_missing_columns(tmp_path):
    bad = tmp_path / "profile.csv"
    bad.write_text("timestamp,wind\n2013-10-01T00:00,0.5\n")
    with pytest.raises(ProfileError, match="solar"):
        load_profiles(bad)


def test_csv_normalizes_peaks(tmp_path):
    good = tmp_path / "profile.csv"
    good.write_text("timestamp,wind,solar,extra\n"
                    "2013-10-01T00:00,2.0,0.0,9\n"
                    "2013-10-01T00:15,4.0,8.0,9\n")
    prof = load_profiles(good)
    np.testing.assert_allclose(prof.wind, [0.5, 1.0])
    np.testing.assert_allclose(prof.solar, [0.0, 1.0])
