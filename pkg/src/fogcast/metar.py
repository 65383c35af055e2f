"""METAR decoding and ASOS archive CSV loading.

Covers the groups the pipeline consumes: station, time, wind, visibility,
temperature/dew point, and pressure. Remark (RMK) and runway-visual-range
groups are skipped, not errors. Canonical units are fixed here: km, m/s,
degrees C, hPa.
"""

import csv
import re
from dataclasses import dataclass
from datetime import datetime, timezone

from .errors import MalformedReport, MissingColumn, RowError

KM_PER_STATUTE_MILE = 1.609344
MPS_PER_KNOT = 0.514444
HPA_PER_INHG = 33.8638866667

_STATION_RE = re.compile(r"^[A-Z][A-Z0-9]{3}$")
_TIME_RE = re.compile(r"^(\d{2})(\d{2})(\d{2})Z$")
_WIND_RE = re.compile(r"^(\d{3}|VRB)(\d{2,3})(?:G\d{2,3})?KT$")
_VIS_METERS_RE = re.compile(r"^(\d{4})(?:NDV)?$")
_VIS_SM_RE = re.compile(r"^M?(\d{1,2})SM$")
_VIS_SM_FRAC_RE = re.compile(r"^M?(\d{1,2})/(\d{1,2})SM$")
_TEMP_RE = re.compile(r"^(M?\d{2})/(M?\d{2})?$")
_PRESS_Q_RE = re.compile(r"^Q(\d{4})$")
_PRESS_A_RE = re.compile(r"^A(\d{4})$")


@dataclass(frozen=True)
class MetarRecord:
    """One decoded surface report in canonical units.

    Absent or undecodable groups leave fields as None; the timestamp is
    always UTC. `raw` keeps the original text for diagnostics.
    """

    station: str
    timestamp: datetime
    visibility_km: float | None = None
    temp_c: float | None = None
    dewpoint_c: float | None = None
    wind_speed_mps: float | None = None
    pressure_hpa: float | None = None
    raw: str = ""


def _signed_temp(token):
    if token.startswith("M"):
        return -float(token[1:])
    return float(token)


def parse_metar(text, ref_year_month=(2000, 1)):
    """Decode a single raw METAR line into a MetarRecord.

    The day/hour/minute group carries no month or year; `ref_year_month`
    anchors the calendar (archive loaders that know the full date should
    prefer load_asos_csv). Corrupt optional groups are skipped; a missing
    station or time group rejects the whole report.
    """
    tokens = text.strip().split()
    if tokens and tokens[0] in ("METAR", "SPECI"):
        tokens = tokens[1:]
    if not tokens or not _STATION_RE.match(tokens[0]):
        raise MalformedReport(f"no station group: {text[:40]!r}")
    station = tokens[0]
    rest = tokens[1:]
    if not rest:
        raise MalformedReport(f"no timestamp group: {text[:40]!r}")
    m = _TIME_RE.match(rest[0])
    if not m:
        raise MalformedReport(f"bad timestamp group {rest[0]!r}")
    day, hour, minute = int(m.group(1)), int(m.group(2)), int(m.group(3))
    year, month = ref_year_month
    try:
        ts = datetime(year, month, day, hour, minute, tzinfo=timezone.utc)
    except ValueError as exc:
        raise MalformedReport(f"bad timestamp group {rest[0]!r}: {exc}") from exc

    vis = temp = dew = wind = press = None
    i = 1
    while i < len(rest):
        tok = rest[i]
        if tok == "RMK":
            break
        if tok in ("AUTO", "COR", "NIL"):
            i += 1
            continue
        if wind is None and (m := _WIND_RE.match(tok)):
            wind = float(m.group(2)) * MPS_PER_KNOT
        elif vis is None and tok == "CAVOK":
            vis = 10.0
        elif vis is None and (m := _VIS_METERS_RE.match(tok)):
            meters = int(m.group(1))
            vis = 10.0 if meters == 9999 else meters / 1000.0
        elif vis is None and (m := _VIS_SM_FRAC_RE.match(tok)):
            num, den = int(m.group(1)), int(m.group(2))
            if den > 0:
                whole = 0.0
                # "2 1/2SM": integer token directly before the fraction
                if i >= 2 and re.match(r"^\d{1,2}$", rest[i - 1]):
                    whole = float(rest[i - 1])
                vis = (whole + num / den) * KM_PER_STATUTE_MILE
        elif vis is None and (m := _VIS_SM_RE.match(tok)):
            # lone integer-mile group; a following fraction is handled above
            if not (i + 1 < len(rest) and _VIS_SM_FRAC_RE.match(rest[i + 1])):
                vis = float(m.group(1)) * KM_PER_STATUTE_MILE
        elif temp is None and (m := _TEMP_RE.match(tok)):
            temp = _signed_temp(m.group(1))
            if m.group(2):
                dew = _signed_temp(m.group(2))
        elif press is None and (m := _PRESS_Q_RE.match(tok)):
            press = float(m.group(1))
        elif press is None and (m := _PRESS_A_RE.match(tok)):
            press = float(m.group(1)) / 100.0 * HPA_PER_INHG
        i += 1

    return MetarRecord(
        station=station,
        timestamp=ts,
        visibility_km=vis,
        temp_c=temp,
        dewpoint_c=dew,
        wind_speed_mps=wind,
        pressure_hpa=press,
        raw=text.strip(),
    )


def parse_metar_lines(lines, ref_year_month=(2000, 1)):
    """Parse raw report lines; returns (records, rejects).

    Rejects are RowError entries, one per line that failed the station or
    timestamp precondition; all other oddities degrade to absent fields.
    """
    records, rejects = [], []
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            records.append(parse_metar(line, ref_year_month))
        except MalformedReport as exc:
            rejects.append(RowError(index=i, reason=str(exc)))
    return records, rejects


def _cell(row, key):
    val = row.get(key)
    if val is None:
        return None
    val = val.strip()
    if val in ("", "M"):
        return None
    try:
        return float(val)
    except ValueError:
        return None


def load_asos_csv(stream):
    """Load an ASOS archive CSV export; returns (records, row_errors).

    Required columns: station, valid (UTC "YYYY-MM-DD HH:MM"), vsby (statute
    miles). Optional: tmpf, dwpf (deg F), sknt (knots), mslp (hPa). "M" cells
    are missing values. Negative visibility is physically impossible and is
    rejected per row.
    """
    reader = csv.DictReader(stream)
    header = reader.fieldnames or []
    for col in ("station", "valid", "vsby"):
        if col not in header:
            raise MissingColumn(f"ASOS CSV lacks required column {col!r}")
    records, errors = [], []
    for i, row in enumerate(reader):
        try:
            ts = datetime.strptime(row["valid"].strip(), "%Y-%m-%d %H:%M")
        except (ValueError, AttributeError):
            errors.append(RowError(index=i, reason=f"bad valid cell {row.get('valid')!r}"))
            continue
        ts = ts.replace(tzinfo=timezone.utc)
        vsby = _cell(row, "vsby")
        if vsby is not None and vsby < 0:
            errors.append(RowError(index=i, reason=f"negative visibility {vsby}"))
            continue
        tmpf = _cell(row, "tmpf")
        dwpf = _cell(row, "dwpf")
        sknt = _cell(row, "sknt")
        mslp = _cell(row, "mslp")
        records.append(
            MetarRecord(
                station=row["station"].strip(),
                timestamp=ts,
                visibility_km=None if vsby is None else vsby * KM_PER_STATUTE_MILE,
                temp_c=None if tmpf is None else (tmpf - 32.0) * 5.0 / 9.0,
                dewpoint_c=None if dwpf is None else (dwpf - 32.0) * 5.0 / 9.0,
                wind_speed_mps=None if sknt is None else sknt * MPS_PER_KNOT,
                pressure_hpa=mslp,
                raw="",
            )
        )
    return records, errors
