"""Battery configuration, presets and the sequential battery runner."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import families as fam
from .families import ClassificationPolicy, Family, ParameterError, TestResult
from .generators import GeneratorState, Stream

CONFIG_SCHEMA_VERSION = 1
DEFAULT_BUDGET = 2 ** 38

_PARAMS_BY_FAMILY = {
    Family.SERIAL_OVER: ("n", "d", "t", "bit_offset"),
    Family.COLLISION_OVER: ("n", "d", "t", "bit_offset"),
    Family.BIRTHDAY_SPACINGS: ("n", "d", "t", "bit_offset"),
    Family.CLOSE_PAIRS: ("n", "t"),
    Family.RANDOM_WALK: ("walk_length", "walks", "bit_offset"),
    Family.LINEAR_COMP: ("l_bits", "bit_offset"),
}
_REQUIRED = {
    Family.SERIAL_OVER: ("n", "d", "t"),
    Family.COLLISION_OVER: ("n", "d", "t"),
    Family.BIRTHDAY_SPACINGS: ("n", "d", "t"),
    Family.CLOSE_PAIRS: ("n", "t"),
    Family.RANDOM_WALK: ("walk_length", "walks"),
    Family.LINEAR_COMP: ("l_bits",),
}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class BudgetExceededError(RuntimeError):
    pass


@dataclass(frozen=True)
class TestParams:
    __test__ = False

    n: int | None = None
    d: int | None = None
    t: int | None = None
    bit_offset: int = 0
    walk_length: int | None = None
    walks: int | None = None
    l_bits: int | None = None

    def as_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True)
class TestConfig:
    __test__ = False

    family: Family
    variant: int
    params: TestParams
    bigcrush_indices: tuple[int, ...] = ()

    def __post_init__(self):
        allowed = _PARAMS_BY_FAMILY[self.family]
        given = self.params.as_dict()
        extra = sorted(k for k in given if k not in allowed and not (k == "bit_offset" and given[k] == 0))
        if extra:
            raise ParameterError(f"{self.family.value}: unexpected parameter(s) {', '.join(extra)}")
        missing = [k for k in _REQUIRED[self.family] if given.get(k) is None]
        if missing:
            raise ParameterError(f"{self.family.value}: missing parameter(s) {', '.join(missing)}")
        for k, v in given.items():
            if isinstance(v, bool) or not isinstance(v, int):
                raise ParameterError(f"{self.family.value}: parameter {k} must be an integer")
        self._check_ranges()

    def _check_ranges(self) -> None:
        # the same preconditions the test functions enforce, checked before any word is drawn
        p, F = self.params, Family
        name = self.family.value
        if not 0 <= p.bit_offset < 32:
            raise ParameterError(f"{name}: bit_offset must be in [0, 32)")
        if self.family in (F.SERIAL_OVER, F.COLLISION_OVER, F.BIRTHDAY_SPACINGS):
            if p.d < 2 or p.t < 1 or p.n < 1:
                raise ParameterError(f"{name}: need n >= 1, d >= 2, t >= 1")
            k = fam._cell_total(p.d, p.t)
            if self.family is F.SERIAL_OVER and (p.t < 2 or p.n < 10 * k):
                raise ParameterError(f"{name}: need t >= 2 and n >= 10*d**t = {10 * k}")
            if self.family is F.COLLISION_OVER and p.n >= k / 4:
                raise ParameterError(f"{name}: need n < d**t/4 = {k / 4:g}")
            if self.family is F.BIRTHDAY_SPACINGS and not 1.0 <= fam.birthday_lambda(p.n, k) <= 1e4:
                raise ParameterError(f"{name}: lambda = n**3/(4 d**t) must lie in [1, 1e4]")
        elif self.family is F.CLOSE_PAIRS:
            if not 2 <= p.t <= 9 or p.n < 2:
                raise ParameterError(f"{name}: need n >= 2 and t in [2, 9]")
        elif self.family is F.RANDOM_WALK:
            if p.walk_length < 2 or p.walk_length % 2 or p.walks < 1:
                raise ParameterError(f"{name}: walk_length must be even and >= 2, walks >= 1")
        elif p.l_bits < 64:
            raise ParameterError(f"{name}: l_bits must be >= 64")

    @property
    def words_required(self) -> int:
        p = self.params
        if self.family in (Family.SERIAL_OVER, Family.COLLISION_OVER):
            return p.n
        if self.family in (Family.BIRTHDAY_SPACINGS, Family.CLOSE_PAIRS):
            return p.n * p.t
        if self.family is Family.RANDOM_WALK:
            return p.walks * p.walk_length
        return p.l_bits

    def to_dict(self) -> dict:
        out = {"family": self.family.value, "variant": self.variant}
        out.update({k: v for k, v in self.params.as_dict().items()
                    if k in _PARAMS_BY_FAMILY[self.family]})
        if self.bigcrush_indices:
            out["bigcrush_indices"] = list(self.bigcrush_indices)
        return out

    def run(self, stream, policy: ClassificationPolicy) -> list[TestResult]:
        p = self.params
        common = dict(variant=self.variant, policy=policy, bigcrush_indices=self.bigcrush_indices)
        if self.family is Family.SERIAL_OVER:
            return [fam.serial_over(stream, p.n, p.d, p.t, p.bit_offset, **common)]
        if self.family is Family.COLLISION_OVER:
            return [fam.collision_over(stream, p.n, p.d, p.t, p.bit_offset, **common)]
        if self.family is Family.BIRTHDAY_SPACINGS:
            return [fam.birthday_spacings(stream, p.n, p.d, p.t, p.bit_offset, **common)]
        if self.family is Family.CLOSE_PAIRS:
            return [fam.close_pairs(stream, p.n, p.t, **common)]
        if self.family is Family.RANDOM_WALK:
            return fam.random_walk(stream, p.walk_length, p.walks, p.bit_offset, **common)
        return fam.linear_comp(stream, p.l_bits, p.bit_offset, **common)


@dataclass(frozen=True)
class BatteryConfig:
    tests: tuple[TestConfig, ...]
    policy: ClassificationPolicy = field(default_factory=ClassificationPolicy)
    budget: int = DEFAULT_BUDGET
    name: str = "custom"

    def __post_init__(self):
        seen = set()
        for tc in self.tests:
            key = (tc.family, tc.variant)
            if key in seen:
                raise ConfigError(f"duplicate test {tc.family.value} variant {tc.variant}")
            seen.add(key)

    @property
    def words_required(self) -> int:
        return sum(tc.words_required for tc in self.tests)

    def to_dict(self) -> dict:
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "name": self.name,
            "budget": self.budget,
            "policy": asdict(self.policy),
            "tests": [tc.to_dict() for tc in self.tests],
        }

    def fingerprint(self) -> str:
        """sha256 over everything that influences results (tests and policy)."""
        body = {"policy": asdict(self.policy), "tests": [tc.to_dict() for tc in self.tests]}
        canon = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def with_budget(self, budget: int) -> "BatteryConfig":
        return replace(self, budget=budget)

    def to_toml(self) -> str:
        lines = [f"schema_version = {CONFIG_SCHEMA_VERSION}", f'name = "{self.name}"',
                 f"budget = {self.budget}", "", "[policy]"]
        for f_ in fields(self.policy):
            lines.append(f"{f_.name} = {getattr(self.policy, f_.name)!r}")
        for tc in self.tests:
            lines += ["", "[[tests]]"]
            for k, v in tc.to_dict().items():
                lines.append(f'{k} = "{v}"' if isinstance(v, str) else f"{k} = {v}")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# parsing


def _table_lines(text: str, header: str) -> list[int]:
    pat = re.compile(r"^\s*\[\[\s*" + re.escape(header) + r"\s*\]\]")
    return [i + 1 for i, line in enumerate(text.splitlines()) if pat.match(line)]


def battery_from_dict(data: dict, text: str | None = None, source: str | None = None) -> BatteryConfig:
    version = data.get("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"unsupported battery schema_version {version}", source=source)
    test_lines = _table_lines(text, "tests") if text else []
    try:
        policy = ClassificationPolicy(**data.get("policy", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [policy]: {exc}", source=source) from exc
    tests = []
    for i, entry in enumerate(data.get("tests", [])):
        line = test_lines[i] if i < len(test_lines) else None
        entry = dict(entry)
        try:
            family = Family.parse(entry.pop("family"))
            variant = entry.pop("variant", 0)
            indices = tuple(entry.pop("bigcrush_indices", ()))
            known = {f_.name for f_ in fields(TestParams)}
            unknown = sorted(set(entry) - known)
            if unknown:
                raise ParameterError(f"unknown key(s) {', '.join(unknown)}")
            tests.append(TestConfig(family, variant, TestParams(**entry), indices))
        except KeyError as exc:
            raise ConfigError(f"tests[{i}]: missing {exc}", line, source) from exc
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"tests[{i}]: {exc}", line, source) from exc
    budget = data.get("budget", DEFAULT_BUDGET)
    if not isinstance(budget, int) or budget < 0:
        raise ConfigError("budget must be a nonnegative integer", source=source)
    try:
        return BatteryConfig(tuple(tests), policy, budget, data.get("name", "custom"))
    except ConfigError as exc:
        raise ConfigError(str(exc), source=source) from exc


def _decode_toml(text: str, source: str | None):
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", int(m.group(1)) if m else None, source) from exc


def parse_battery_config(text: str, source: str | None = None) -> BatteryConfig:
    return battery_from_dict(_decode_toml(text, source), text, source)


def load_battery_config(path) -> BatteryConfig:
    path = Path(path)
    return parse_battery_config(path.read_text(), str(path))


# --------------------------------------------------------------------------
# presets


def _t(family, variant, indices=(), **params):
    return TestConfig(family, variant, TestParams(**params), tuple(indices))


def desk_battery(budget: int = DEFAULT_BUDGET) -> BatteryConfig:
    """The default desk-scale battery (about 1.7e7 words per stream)."""
    F = Family
    tests = (
        _t(F.SERIAL_OVER, 0, (1, 2), n=2 ** 22, d=64, t=2),
        _t(F.COLLISION_OVER, 0, (9, 10, 11, 12), n=2 ** 20, d=2 ** 13, t=2, bit_offset=0),
        _t(F.COLLISION_OVER, 1, (9, 10, 11, 12), n=2 ** 20, d=2 ** 13, t=2, bit_offset=19),
        _t(F.BIRTHDAY_SPACINGS, 0, (), n=2 ** 16, d=2 ** 23, t=2),
        _t(F.CLOSE_PAIRS, 0, (22, 23, 24, 25), n=2 ** 13, t=2),
        _t(F.CLOSE_PAIRS, 1, (22, 23, 24, 25), n=2 ** 13, t=3),
        _t(F.RANDOM_WALK, 0, (74, 75, 76, 77, 78, 79), walk_length=64, walks=10_000),
        _t(F.RANDOM_WALK, 1, (74, 75, 76, 77, 78, 79), walk_length=1024, walks=10_000),
        _t(F.LINEAR_COMP, 0, (80,), l_bits=50_000, bit_offset=0),
        _t(F.LINEAR_COMP, 1, (81,), l_bits=50_000, bit_offset=29),
    )
    return BatteryConfig(tests, ClassificationPolicy(), budget, "desk")


def smoke_battery(budget: int = DEFAULT_BUDGET) -> BatteryConfig:
    """Tiny battery for quick checks; too small to detect anything subtle."""
    F = Family
    tests = (
        _t(F.SERIAL_OVER, 0, (1, 2), n=2 ** 13, d=16, t=2),
        _t(F.COLLISION_OVER, 0, (9, 10, 11, 12), n=2 ** 10, d=2 ** 7, t=2),
        _t(F.BIRTHDAY_SPACINGS, 0, (), n=2 ** 10, d=2 ** 14, t=2),
        _t(F.CLOSE_PAIRS, 0, (22, 23, 24, 25), n=256, t=2),
        _t(F.RANDOM_WALK, 0, (74, 75, 76, 77, 78, 79), walk_length=64, walks=500),
        _t(F.LINEAR_COMP, 0, (80,), l_bits=2000),
    )
    return BatteryConfig(tests, ClassificationPolicy(), budget, "smoke")


def linear_comp_battery(budget: int = DEFAULT_BUDGET, l_bits: int = 50_000) -> BatteryConfig:
    """Only the two LinearComp variants of the desk battery."""
    tests = tuple(tc if l_bits == tc.params.l_bits else replace(tc, params=replace(tc.params, l_bits=l_bits))
                  for tc in desk_battery().tests if tc.family is Family.LINEAR_COMP)
    return BatteryConfig(tests, ClassificationPolicy(), budget, "linearcomp")


PRESETS = {"desk": desk_battery, "smoke": smoke_battery, "linearcomp": linear_comp_battery}


def resolve_battery(ref: str, base_dir: Path | None = None) -> BatteryConfig:
    """A preset name or a path to a battery TOML file."""
    if ref in PRESETS:
        return PRESETS[ref]()
    path = Path(ref)
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    return load_battery_config(path)


# --------------------------------------------------------------------------
# running


def run_battery(stream_state, config: BatteryConfig) -> list[TestResult]:
    """Run every configured test, in order, on successive words of one stream.

    ``stream_state`` may be a generator state (consumed in place) or any
    object with ``words``/``uniforms`` methods.  The budget is checked before
    a single word is drawn.
    """
    needed = config.words_required
    if needed > config.budget:
        raise BudgetExceededError(
            f"battery needs {needed} words but the budget ceiling is {config.budget}")
    stream = Stream(stream_state) if isinstance(stream_state, GeneratorState.__args__) else stream_state
    results: list[TestResult] = []
    for tc in config.tests:
        results.extend(tc.run(stream, config.policy))
    return results
