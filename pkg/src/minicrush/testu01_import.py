"""Read TestU01 battery output files into campaign reports.

Only the closing summary block is used.  It lists the tests whose p-values
fell outside [0.001, 0.999]::

     The following tests gave p-values outside [0.001, 0.9990]:
     (eps  means a value < 1.0e-300):
     (eps1 means a value < 1.0e-15):

           Test                          p-value
     ----------------------------------------------
      80  LinearComp, r = 0              1 - eps1
     ----------------------------------------------
     All other tests were passed

or the single line ``All tests were passed``.  One file holds one stream.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

from .families import Classification, DEFAULT_POLICY, classify
from .harness import BatteryReport

FINGERPRINT_PREFIX = "testu01:"

_EPS = 1e-300
_EPS1 = 1e-16  # any value below 1e-15
_ROW = re.compile(r"^\s*(\d+)\s+(.+?)\s{2,}(\S.*?)\s*$")


@dataclass(frozen=True)
class ExternalTestId:
    index: int
    name: str

    def sort_key(self):
        return (self.index, self.name)

    @property
    def label(self) -> str:
        return f"{self.index} {self.name}"


@dataclass(frozen=True)
class ExternalResult:
    id: ExternalTestId
    p_value: float
    text: str

    @property
    def classification(self) -> Classification:
        return classify(self.p_value, DEFAULT_POLICY)


def parse_p_value(text: str) -> float:
    """Decode a printed p-value: a number, ``eps``, ``eps1`` or ``1 - x``."""
    s = text.strip()
    if s.startswith("1 -"):
        return 1.0 - parse_p_value(s[3:])
    if s == "eps":
        return _EPS
    if s == "eps1":
        return _EPS1
    return float(s)


def _nudge(p: float) -> float:
    # A listed p-value rounded onto the boundary still counts as flagged.
    if DEFAULT_POLICY.suspicious_low <= p <= DEFAULT_POLICY.suspicious_high:
        if p >= 0.5:
            return math.nextafter(DEFAULT_POLICY.suspicious_high, 1.0)
        return math.nextafter(DEFAULT_POLICY.suspicious_low, 0.0)
    return p


def parse_summary(text: str, source: str = "<string>") -> tuple[str, list[ExternalResult]]:
    """Return (battery name, flagged results) from one TestU01 output."""
    m = re.search(r"Summary results of (\w+)", text)
    if not m:
        raise ValueError(f"{source}: no TestU01 summary block")
    battery = m.group(1)
    tail = text[m.end():]
    if re.search(r"All tests were passed", tail):
        return battery, []
    lines = tail.splitlines()
    try:
        start = next(i for i, ln in enumerate(lines) if ln.strip().startswith("Test") and "p-value" in ln)
    except StopIteration:
        raise ValueError(f"{source}: summary has neither a pass line nor a results table") from None
    results = []
    for ln in lines[start + 1:]:
        s = ln.strip()
        if not s or set(s) == {"-"}:
            continue
        if s.startswith("All other tests"):
            break
        row = _ROW.match(ln)
        if row is None:
            raise ValueError(f"{source}: cannot parse summary row {s!r}")
        try:
            p = _nudge(parse_p_value(row.group(3)))
        except ValueError:
            raise ValueError(f"{source}: bad p-value {row.group(3)!r}") from None
        results.append(ExternalResult(ExternalTestId(int(row.group(1)), row.group(2).strip()),
                                      p, row.group(3)))
    return battery, results


def load_testu01_dir(path, generator: str | None = None, pattern: str = "*") -> list[BatteryReport]:
    """One report per file under ``path`` (sorted by name), all for one generator."""
    path = Path(path)
    files = sorted(p for p in path.rglob(pattern) if p.is_file())
    reports = []
    for i, f in enumerate(files):
        try:
            text = f.read_text(errors="replace")
        except OSError as exc:
            raise ValueError(f"{f}: {exc}") from exc
        if "Summary results of" not in text:
            continue
        battery, results = parse_summary(text, str(f))
        reports.append(BatteryReport(generator or path.name, i, results,
                                     FINGERPRINT_PREFIX + battery, i))
    if not reports:
        raise ValueError(f"{path}: no TestU01 summaries found")
    return reports
