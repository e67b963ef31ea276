import pandas as pd

EPOCH = pd.Timestamp("1970-01-01", tz="UTC")


def is_integer_minutes(raw: pd.Series) -> bool:
    """True when every timestamp in the column is a plain integer (minutes since epoch)."""
    stripped = raw.astype(str).str.strip()
    return bool(len(stripped)) and bool(stripped.str.fullmatch(r"[+-]?\d+").all())


def parse_timestamps(raw: pd.Series) -> pd.Series:
    """Parse a timestamp column into integer minutes since the epoch.

    The format is detected once per file: integer minutes when every entry is
    an integer, ISO-8601 (UTC when no offset is given) otherwise. Unparseable
    entries and instants that are not whole minutes come back as <NA>.
    """
    if is_integer_minutes(raw):
        return pd.to_numeric(raw.astype(str).str.strip(), errors="coerce").astype("Int64")

    parsed = pd.to_datetime(raw.astype(str).str.strip(), utc=True, errors="coerce", format="ISO8601")
    delta = parsed - EPOCH
    minutes = delta // pd.Timedelta(minutes=1)
    whole = (delta % pd.Timedelta(minutes=1)) == pd.Timedelta(0)
    return minutes.where(whole & parsed.notna()).astype("Int64")


def format_minutes(minutes: int) -> str:
    """ISO-8601 UTC rendering of a minute timestamp, for log messages."""
    return (EPOCH + pd.Timedelta(minutes=int(minutes))).strftime("%Y-%m-%dT%H:%MZ")
