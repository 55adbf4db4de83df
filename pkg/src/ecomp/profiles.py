"""Renewable generation profiles and per-station energy budgets.

A profile holds normalized wind and solar series sampled on a fixed
15-minute grid, plus a per-station mix: station i harvests
E_i(t) = ebar * (w_wind_i * wind[t] + w_solar_i * solar[t]).
"""

from __future__ import annotations

import csv
import importlib.resources
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

# Generation-capacity mixes for the bundled three-station scenario:
# station 1 is balanced, station 2 is solar-heavy, station 3 wind-heavy.
DEFAULT_MIXES = ((0.5, 0.5), (0.1, 0.9), (0.9, 0.1))

BUNDLED_PROFILE = "bundled"


class ProfileError(ValueError):
    """Malformed or inconsistent profile data."""


@dataclass
class EnergyProfile:
    timestamps: list
    wind: np.ndarray
    solar: np.ndarray
    mixes: tuple = DEFAULT_MIXES
    ebar: float = 1.0

    def __post_init__(self):
        self.wind = np.asarray(self.wind, dtype=float)
        self.solar = np.asarray(self.solar, dtype=float)
        if len(self.timestamps) != self.wind.size or self.wind.size != self.solar.size:
            raise ProfileError("timestamps, wind and solar must have equal length")
        if self.wind.size < 2:
            raise ProfileError("profile needs at least 2 rows")
        for name, series in (("wind", self.wind), ("solar", self.solar)):
            if series.min() < 0.0 or series.max() > 1.0 + 1e-12:
                raise ProfileError(f"{name} series not normalized to [0, 1]")
        for pair in self.mixes:
            if len(pair) != 2 or pair[0] < 0 or pair[1] < 0:
                raise ProfileError(f"bad mix pair {pair!r}")
        if self.ebar < 0:
            raise ProfileError("ebar must be nonnegative")

    def __len__(self):
        return self.wind.size

    def with_mix(self, mixes, ebar) -> "EnergyProfile":
        return EnergyProfile(self.timestamps, self.wind, self.solar,
                             tuple(tuple(m) for m in mixes), float(ebar))


def _normalize(series: np.ndarray) -> np.ndarray:
    peak = series.max()
    return series / peak if peak > 0 else series


def load_profiles(path) -> EnergyProfile:
    """Read a (timestamp, wind, solar) CSV and normalize each series to peak 1.

    `path` may also be the literal string "bundled" to use the packaged
    synthetic four-day profile.  Unknown columns are ignored; malformed
    rows raise ProfileError with the offending line number; timestamps
    must be strictly increasing.
    """
    if path == BUNDLED_PROFILE:
        ref = importlib.resources.files("ecomp").joinpath("data/synthetic_profile.csv")
        with ref.open("r") as fh:
            return _parse_profile_csv(fh, "bundled synthetic profile")
    with open(path, "r", newline="") as fh:
        return _parse_profile_csv(fh, str(path))


def _parse_profile_csv(fh, source: str) -> EnergyProfile:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ProfileError(f"{source}: empty file") from None
    cols = {name.strip().lower(): i for i, name in enumerate(header)}
    for required in ("timestamp", "wind", "solar"):
        if required not in cols:
            raise ProfileError(f"{source}: missing column {required!r}")
    stamps, wind, solar = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            stamp = datetime.fromisoformat(row[cols["timestamp"]].strip())
            w = float(row[cols["wind"]])
            s = float(row[cols["solar"]])
        except (ValueError, IndexError) as exc:
            raise ProfileError(f"{source}: line {lineno}: {exc}") from None
        if w < 0 or s < 0:
            raise ProfileError(f"{source}: line {lineno}: negative generation")
        if stamps and stamp <= stamps[-1]:
            raise ProfileError(f"{source}: line {lineno}: non-monotone timestamp {stamp}")
        stamps.append(stamp)
        wind.append(w)
        solar.append(s)
    if len(stamps) < 2:
        raise ProfileError(f"{source}: profile needs at least 2 rows")
    return EnergyProfile(stamps, _normalize(np.array(wind)),
                         _normalize(np.array(solar)))


def bs_budgets_at(profile: EnergyProfile, slot_index: int) -> np.ndarray:
    """Per-station harvested-energy budgets at one profile slot."""
    if not 0 <= slot_index < len(profile):
        raise IndexError(f"slot {slot_index} out of range [0, {len(profile)})")
    w = profile.wind[slot_index]
    s = profile.solar[slot_index]
    return np.array([profile.ebar * (ww * w + ws * s) for ww, ws in profile.mixes])
