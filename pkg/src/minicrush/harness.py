"""Multi-stream campaigns: seed derivation, parallel execution, report files.

Report files are JSON lines.  The first line is a header naming the schema
and its version; each following line is one stream::

    {"schema": "minicrush.campaign", "version": 1}
    {"stream": 0, "kind": "Pcg32", "seed": 123, "fingerprint": "ab12...",
     "results": [{"family": "SerialOver", "variant": 0, "statistic": "",
                  "bigcrush_indices": [1, 2], "value": 3984.53,
                  "value_bits": "40af...", "p_value": 0.69,
                  "p_bits": "3fe6...", "classification": "Pass",
                  "samples": 4194304}, ...]}

``*_bits`` fields hold the IEEE-754 binary64 pattern as 16 hex digits and
are authoritative on load, so "1 - eps" p-values survive exactly.  Wall-clock
timing is only written when asked for, inside a ``"meta"`` object.
"""

from __future__ import annotations

import json
import logging
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .battery import BatteryConfig, battery_from_dict, resolve_battery, run_battery, _decode_toml
from .battery import ConfigError
from .families import Classification, Family, TestId, TestResult
from .generators import MASK64, GeneratorKind, splitmix64, stream_from_seed

log = logging.getLogger(__name__)

REPORT_SCHEMA = "minicrush.campaign"
REPORT_SCHEMA_VERSION = 1


class SchemaVersionError(ValueError):
    pass


class CampaignError(RuntimeError):
    """A stream failed; ``partial`` holds every report that did complete."""

    def __init__(self, stream_index: int, seed: int, cause: BaseException, partial):
        self.stream_index = stream_index
        self.seed = seed
        self.partial = partial
        self.incomplete = True
        super().__init__(f"stream {stream_index} (seed {seed}) failed: {cause}")


@dataclass
class BatteryReport:
    kind: GeneratorKind | str
    seed: int
    results: list[TestResult]
    fingerprint: str
    stream_index: int = 0
    timing: float | None = field(default=None, compare=False)

    @property
    def label(self) -> str:
        return self.kind.value if isinstance(self.kind, GeneratorKind) else str(self.kind)


@dataclass(frozen=True)
class HarnessConfig:
    kind: GeneratorKind
    stream_count: int
    master_seed: int
    battery: BatteryConfig
    parallelism: int = 1

    def __post_init__(self):
        if self.stream_count < 1:
            raise ValueError("stream_count must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


def derive_seeds(master_seed: int, count: int) -> list[int]:
    """``count`` distinct 64-bit seeds from a splitmix64 sequence, repeats skipped."""
    if count < 1:
        raise ValueError("count must be >= 1")
    seeds, seen = [], set()
    x = master_seed & MASK64
    while len(seeds) < count:
        x, z = splitmix64(x)
        if z not in seen:
            seen.add(z)
            seeds.append(z)
    return seeds


def run_stream(kind: GeneratorKind, seed: int, battery: BatteryConfig, index: int = 0) -> BatteryReport:
    start = time.perf_counter()
    results = run_battery(stream_from_seed(kind, seed), battery)
    return BatteryReport(kind, seed, results, battery.fingerprint(), index,
                         time.perf_counter() - start)


def _job(args):
    return run_stream(*args)


def run_campaign(config: HarnessConfig) -> list[BatteryReport]:
    seeds = derive_seeds(config.master_seed, config.stream_count)
    # fail fast on budget before spawning workers
    needed = config.battery.words_required
    if needed > config.battery.budget:
        from .battery import BudgetExceededError
        raise BudgetExceededError(
            f"battery needs {needed} words per stream but the budget ceiling is {config.battery.budget}")
    jobs = [(config.kind, s, config.battery, i) for i, s in enumerate(seeds)]
    reports: list[BatteryReport] = []
    if config.parallelism == 1:
        for job in jobs:
            try:
                reports.append(_job(job))
            except Exception as exc:
                raise CampaignError(job[3], job[1], exc, reports) from exc
            log.info("stream %d/%d done", job[3] + 1, len(jobs))
        return reports
    with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
        futures = [pool.submit(_job, job) for job in jobs]
        failure = None
        for job, fut in zip(jobs, futures):
            try:
                reports.append(fut.result())
            except Exception as exc:
                if failure is None:
                    failure = (job, exc)
    if failure is not None:
        job, exc = failure
        raise CampaignError(job[3], job[1], exc, reports) from exc
    return reports


# --------------------------------------------------------------------------
# campaign config files


@dataclass(frozen=True)
class CampaignFile:
    harness: HarnessConfig
    output: Path | None


def load_campaign_config(path) -> CampaignFile:
    """Read a campaign TOML file.

    ``[campaign]`` holds kind, streams, master_seed, parallelism, output and
    ``battery`` (preset name or path); alternatively an inline ``[battery]``
    table using the battery-file schema.
    """
    path = Path(path)
    text = path.read_text()
    data = _decode_toml(text, str(path))
    camp = data.get("campaign")
    if not isinstance(camp, dict):
        raise ConfigError("missing [campaign] table", source=str(path))
    try:
        kind = GeneratorKind.parse(camp["kind"])
        streams = int(camp.get("streams", 896))
        master = int(camp.get("master_seed", 0))
        parallelism = int(camp.get("parallelism", 1))
    except KeyError as exc:
        raise ConfigError(f"[campaign] missing {exc}", source=str(path)) from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[campaign]: {exc}", source=str(path)) from exc
    if "battery" in data and isinstance(data["battery"], dict):
        battery = battery_from_dict(data["battery"], text, str(path))
    else:
        battery = resolve_battery(str(camp.get("battery", "desk")), path.parent)
    if "budget" in camp:
        battery = battery.with_budget(int(camp["budget"]))
    output = camp.get("output")
    try:
        harness = HarnessConfig(kind, streams, master, battery, parallelism)
    except ValueError as exc:
        raise ConfigError(f"[campaign]: {exc}", source=str(path)) from exc
    return CampaignFile(harness, path.parent / output if output else None)


# --------------------------------------------------------------------------
# report files


def _bits(x: float) -> str:
    return struct.pack(">d", x).hex()


def _from_bits(h: str) -> float:
    return struct.unpack(">d", bytes.fromhex(h))[0]


def _result_to_json(r: TestResult) -> dict:
    return {
        "family": r.id.family.value,
        "variant": r.id.variant,
        "statistic": r.id.statistic,
        "bigcrush_indices": list(r.id.bigcrush_indices),
        "value": r.statistic,
        "value_bits": _bits(r.statistic),
        "p_value": r.p_value,
        "p_bits": _bits(r.p_value),
        "classification": r.classification.value,
        "samples": r.samples_consumed,
    }


def _result_from_json(d: dict) -> TestResult:
    tid = TestId(Family.parse(d["family"]), int(d["variant"]), d.get("statistic", ""),
                 tuple(d.get("bigcrush_indices", ())))
    p = _from_bits(d["p_bits"]) if "p_bits" in d else float(d["p_value"])
    if "p_bits" in d and "p_value" in d and float(d["p_value"]) != p:
        raise ValueError(f"{tid.label}: p_value and p_bits disagree")
    value = _from_bits(d["value_bits"]) if "value_bits" in d else float(d["value"])
    return TestResult(tid, value, p, Classification(d["classification"]), int(d["samples"]))


def report_to_json(rep: BatteryReport, include_timing: bool = False) -> dict:
    out = {
        "stream": rep.stream_index,
        "kind": rep.label,
        "seed": rep.seed,
        "fingerprint": rep.fingerprint,
        "results": [_result_to_json(r) for r in rep.results],
    }
    if include_timing and rep.timing is not None:
        out["meta"] = {"wall_seconds": rep.timing}
    return out


def report_from_json(d: dict) -> BatteryReport:
    try:
        kind = GeneratorKind.parse(d["kind"])
    except ValueError:
        kind = d["kind"]
    timing = d.get("meta", {}).get("wall_seconds")
    return BatteryReport(kind, int(d["seed"]), [_result_from_json(r) for r in d["results"]],
                         d["fingerprint"], int(d.get("stream", 0)), timing)


def dumps_reports(reports, include_timing: bool = False) -> str:
    lines = [json.dumps({"schema": REPORT_SCHEMA, "version": REPORT_SCHEMA_VERSION})]
    lines += [json.dumps(report_to_json(r, include_timing)) for r in reports]
    return "\n".join(lines) + "\n"


def save_reports(reports, path, include_timing: bool = False) -> None:
    Path(path).write_text(dumps_reports(reports, include_timing))


def loads_reports(text: str, source: str = "<string>") -> list[BatteryReport]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{source}: empty report file (no header)")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ValueError(f"{source}:1: header is not JSON: {exc}") from exc
    if header.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"{source}: not a campaign report (schema {header.get('schema')!r})")
    version = header.get("version")
    if version != REPORT_SCHEMA_VERSION:
        raise SchemaVersionError(
            f"{source}: report schema version {version} not supported (expected {REPORT_SCHEMA_VERSION})")
    reports = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            reports.append(report_from_json(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise ValueError(f"{source}:{lineno}: bad record: {exc}") from exc
    return reports


def load_reports(path) -> list[BatteryReport]:
    path = Path(path)
    return loads_reports(path.read_text(), str(path))


def is_report_file(path) -> bool:
    try:
        with open(path, "rb") as fh:
            head = fh.readline(4096)
        return json.loads(head).get("schema") == REPORT_SCHEMA
    except (OSError, ValueError, AttributeError, UnicodeDecodeError):
        return False
