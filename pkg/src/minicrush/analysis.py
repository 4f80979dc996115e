"""Campaign aggregation, failure profiles and the derived quantities."""

from __future__ import annotations

import csv
import enum
import io
import math
from collections import Counter
from dataclasses import dataclass, field

from .families import DEFAULT_POLICY, Classification, ClassificationPolicy, classify


class FingerprintMismatchError(ValueError):
    pass


def _failed(result, policy: ClassificationPolicy) -> Classification:
    return classify(result.p_value, policy)


def _sort_key(test_id):
    return test_id.sort_key() if hasattr(test_id, "sort_key") else (str(test_id),)


@dataclass
class AggregateReport:
    generator: str
    total_streams: int
    avg_failures_suspicious: float
    avg_failures_extreme: float
    distinct_failed_tests: frozenset
    per_test_failure_rate: dict
    histogram: dict[int, int]
    fingerprint: str = ""

    @classmethod
    def empty(cls, generator: str = "", fingerprint: str = "") -> "AggregateReport":
        return cls(generator, 0, 0.0, 0.0, frozenset(), {}, {}, fingerprint)

    @property
    def streams_with_failure(self) -> int:
        return self.total_streams - self.histogram.get(0, 0)


def _label(report) -> str:
    return getattr(report, "label", None) or str(report.kind)


def aggregate(reports, policy: ClassificationPolicy = DEFAULT_POLICY) -> AggregateReport:
    """Average non-Pass and ExtremeFail counts per stream under ``policy``.

    Every report must come from the same generator and battery fingerprint.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("cannot aggregate an empty report list")
    fingerprints = {r.fingerprint for r in reports}
    if len(fingerprints) > 1:
        raise FingerprintMismatchError(f"reports mix battery fingerprints: {sorted(fingerprints)}")
    labels = {_label(r) for r in reports}
    if len(labels) > 1:
        raise ValueError(f"reports mix generators: {sorted(labels)}")

    fail_counts, extreme_counts = [], []
    per_test = Counter()
    seen = set()
    for rep in reports:
        fails = extremes = 0
        for res in rep.results:
            seen.add(res.id)
            c = _failed(res, policy)
            if c is not Classification.PASS:
                fails += 1
                per_test[res.id] += 1
                if c is Classification.EXTREME_FAIL:
                    extremes += 1
        fail_counts.append(fails)
        extreme_counts.append(extremes)

    n = len(reports)
    ids = sorted(seen, key=_sort_key)
    return AggregateReport(
        generator=labels.pop(),
        total_streams=n,
        avg_failures_suspicious=sum(fail_counts) / n,
        avg_failures_extreme=sum(extreme_counts) / n,
        distinct_failed_tests=frozenset(per_test),
        per_test_failure_rate={t: per_test[t] / n for t in ids},
        histogram=dict(sorted(Counter(fail_counts).items())),
        fingerprint=fingerprints.pop(),
    )


def distinct_failures(reports, policy: ClassificationPolicy = DEFAULT_POLICY) -> set:
    return {res.id for rep in reports for res in rep.results
            if _failed(res, policy) is not Classification.PASS}


@dataclass
class ProfileDiff:
    only_a: list
    only_b: list
    rate_deltas: dict = field(default_factory=dict)  # rate_a - rate_b, nonzero only
    anomalies: list = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not (self.only_a or self.only_b or self.rate_deltas or self.anomalies)

    def summary(self) -> str:
        out = []
        for tag, ids in (("only in a", self.only_a), ("only in b", self.only_b)):
            for t in ids:
                out.append(f"{tag}: {_name(t)}")
        for t, d in self.rate_deltas.items():
            flag = "  ANOMALY" if t in self.anomalies else ""
            out.append(f"delta {_name(t)}: {d:+.6f}{flag}")
        return "\n".join(out)


def _name(test_id) -> str:
    return getattr(test_id, "label", str(test_id))


def profile_diff(a: AggregateReport, b: AggregateReport, threshold: float = 0.05,
                 min_streams: int = 30) -> ProfileDiff:
    """Compare the failure profiles of two aggregates over the same battery.

    A test is an anomaly when its failure rates differ by more than
    ``threshold`` and both sides have at least ``min_streams`` streams.
    """
    if a.fingerprint != b.fingerprint:
        raise FingerprintMismatchError(
            f"cannot diff profiles of different batteries ({a.fingerprint[:12]} vs {b.fingerprint[:12]})")
    only_a = sorted(a.distinct_failed_tests - b.distinct_failed_tests, key=_sort_key)
    only_b = sorted(b.distinct_failed_tests - a.distinct_failed_tests, key=_sort_key)
    ids = sorted(set(a.per_test_failure_rate) | set(b.per_test_failure_rate), key=_sort_key)
    deltas, anomalies = {}, []
    enough = a.total_streams >= min_streams and b.total_streams >= min_streams
    for t in ids:
        d = a.per_test_failure_rate.get(t, 0.0) - b.per_test_failure_rate.get(t, 0.0)
        if d != 0.0:
            deltas[t] = d
            if enough and abs(d) > threshold:
                anomalies.append(t)
    return ProfileDiff(only_a, only_b, deltas, anomalies)


def multiple_testing_expectation(test_count: int, alpha: float) -> float:
    """Chance that at least one of ``test_count`` independent tests falls below ``alpha``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if test_count < 0:
        raise ValueError("test_count must be >= 0")
    return -math.expm1(test_count * math.log1p(-alpha))


class Battery(enum.Enum):
    SMALL_CRUSH = "SmallCrush"
    CRUSH = "Crush"
    BIG_CRUSH = "BigCrush"

    @classmethod
    def parse(cls, text: str) -> "Battery":
        key = text.strip().lower().replace("_", "").replace("-", "")
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValueError(f"unknown battery {text!r}; expected one of "
                         + ", ".join(m.value for m in cls))


# minimum state size (bits) a generator needs to pass each battery
HEADROOM_THRESHOLDS = {Battery.SMALL_CRUSH: 32, Battery.CRUSH: 35, Battery.BIG_CRUSH: 36}


def headroom(state_bits: int, battery: Battery | str = Battery.BIG_CRUSH) -> int:
    if state_bits < 1:
        raise ValueError("state_bits must be >= 1")
    if isinstance(battery, str):
        battery = Battery.parse(battery)
    return state_bits - HEADROOM_THRESHOLDS[battery]


def headroom_verdict(state_bits: int, battery: Battery | str = Battery.BIG_CRUSH) -> str:
    h = headroom(state_bits, battery)
    return f"{h}" if h >= 0 else f"{h} (insufficient state)"


# --------------------------------------------------------------------------
# output formats

AGGREGATE_COLUMNS = ("generator", "total_streams", "avg_failures_suspicious", "avg_failures_extreme")


def aggregate_csv(aggregates) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGGREGATE_COLUMNS)
    for agg in aggregates:
        w.writerow([agg.generator, agg.total_streams,
                    repr(agg.avg_failures_suspicious), repr(agg.avg_failures_extreme)])
    return buf.getvalue()


def histogram_tsv(agg: AggregateReport) -> str:
    """Columns: failures (per stream), streams."""
    rows = ["failures\tstreams"]
    rows += [f"{k}\t{v}" for k, v in sorted(agg.histogram.items())]
    return "\n".join(rows) + "\n"


def profile_tsv(agg: AggregateReport, rate_cap: float | None = None) -> str:
    """Columns: test, rate, plotted_rate, clipped.

    With ``rate_cap`` the plotted rate is clamped and clipped rows keep their
    true rate so they stay visible in the data.
    """
    if rate_cap is not None and not 0.0 < rate_cap <= 1.0:
        raise ValueError("rate_cap must lie in (0, 1]")
    rows = ["test\trate\tplotted_rate\tclipped"]
    for t, rate in agg.per_test_failure_rate.items():
        clipped = rate_cap is not None and rate > rate_cap
        shown = rate_cap if clipped else rate
        rows.append(f"{_name(t)}\t{rate!r}\t{shown!r}\t{int(clipped)}")
    return "\n".join(rows) + "\n"


def export_plot_data(agg: AggregateReport, kind: str, path=None, rate_cap: float | None = None) -> str:
    """Write histogram or profile plot data; returns the text as well."""
    if kind == "histogram":
        text = histogram_tsv(agg)
    elif kind == "profile":
        text = profile_tsv(agg, rate_cap)
    else:
        raise ValueError(f"unknown plot data kind {kind!r} (histogram or profile)")
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def summary_table(aggregates_default, aggregates_strict=None) -> str:
    """Human table: generator, streams, average failures under both policies."""
    head = f"{'generator':<16}{'streams':>9}{'avg failures':>15}{'avg extreme':>14}"
    lines = [head, "-" * len(head)]
    strict = aggregates_strict or [None] * len(aggregates_default)
    for agg, st in zip(aggregates_default, strict):
        extreme = st.avg_failures_suspicious if st is not None else agg.avg_failures_extreme
        lines.append(f"{agg.generator:<16}{agg.total_streams:>9}"
                     f"{agg.avg_failures_suspicious:>15.6f}{extreme:>14.6f}")
    return "\n".join(lines)
