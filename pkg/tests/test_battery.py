import pytest

from minicrush.battery import (
    BatteryConfig,
    BudgetExceededError,
    ConfigError,
    desk_battery,
    linear_comp_battery,
    load_battery_config,
    parse_battery_config,
    resolve_battery,
    run_battery,
    smoke_battery,
)
from minicrush.families import Classification, Family
from minicrush.generators import GeneratorKind, Stream, stream_from_seed

GOOD = """\
schema_version = 1
name = "two"

[policy]
suspicious_low = 0.001
suspicious_high = 0.999
extreme_eps = 1e-15

[[tests]]
family = "SerialOver"
n = 1280
d = 8
t = 2

[[tests]]
family = "RandomWalk"
variant = 3
walk_length = 16
walks = 200
bit_offset = 5
"""


def test_parse_good_config():
    cfg = parse_battery_config(GOOD)
    assert [t.family for t in cfg.tests] == [Family.SERIAL_OVER, Family.RANDOM_WALK]
    assert cfg.tests[1].variant == 3 and cfg.tests[1].params.bit_offset == 5
    assert cfg.words_required == 1280 + 16 * 200


@pytest.mark.parametrize("factory", [desk_battery, smoke_battery, linear_comp_battery])
def test_toml_round_trip(factory):
    cfg = factory()
    back = parse_battery_config(cfg.to_toml())
    assert back == cfg
    assert back.fingerprint() == cfg.fingerprint()


def test_fingerprint_ignores_budget_and_tracks_content():
    a = desk_battery()
    assert a.fingerprint() == a.with_budget(10).fingerprint()
    assert a.fingerprint() != smoke_battery().fingerprint()
    assert a.fingerprint() == desk_battery().fingerprint()


def test_config_error_carries_line_number():
    bad = GOOD.replace("walks = 200", "walks = 200\nbogus = 1")
    with pytest.raises(ConfigError) as info:
        parse_battery_config(bad, "x.toml")
    # errors point at the [[tests]] header of the offending table
    assert info.value.line == 15
    assert "x.toml:15:" in str(info.value) and "bogus" in str(info.value)


@pytest.mark.parametrize("edit,needle", [
    (("n = 1280", "n = 100"), r"10\*d\*\*t"),
    (("walk_length = 16", "walk_length = 15"), "even"),
    (('family = "SerialOver"', 'family = "Nope"'), "Nope"),
    (("t = 2", 't = "two"'), "integer"),
    (("d = 8\n", ""), "missing"),
])
def test_semantic_errors_rejected_at_parse_time(edit, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_battery_config(GOOD.replace(*edit))


def test_toml_syntax_error_line():
    with pytest.raises(ConfigError) as info:
        parse_battery_config("name = \n[[tests]]\n")
    assert info.value.line == 1


def test_schema_version_and_duplicates():
    with pytest.raises(ConfigError, match="schema_version"):
        parse_battery_config("schema_version = 9\n")
    dup = GOOD + '\n[[tests]]\nfamily = "SerialOver"\nn = 1280\nd = 8\nt = 2\n'
    with pytest.raises(ConfigError, match="duplicate"):
        parse_battery_config(dup)


def test_resolve_preset_and_file(tmp_path):
    assert resolve_battery("desk") == desk_battery()
    f = tmp_path / "b.toml"
    f.write_text(GOOD)
    assert resolve_battery("b.toml", tmp_path) == load_battery_config(f)


def test_empty_battery_gives_no_results():
    assert run_battery(stream_from_seed(GeneratorKind.PCG32, 1), BatteryConfig(())) == []


def test_budget_checked_before_drawing():
    s = Stream.from_seed(GeneratorKind.PCG32, 1)
    with pytest.raises(BudgetExceededError):
        run_battery(s, smoke_battery(budget=100))
    assert s.consumed == 0


def test_run_battery_deterministic_and_counts():
    cfg = smoke_battery()
    a = run_battery(stream_from_seed(GeneratorKind.PHILOX4X32_10, 9), cfg)
    b = run_battery(stream_from_seed(GeneratorKind.PHILOX4X32_10, 9), cfg)
    assert a == b
    assert len(a) == 11  # four single-statistic tests, five walk statistics, two LinearComp
    s = Stream.from_seed(GeneratorKind.PHILOX4X32_10, 9)
    run_battery(s, cfg)
    assert s.consumed == cfg.words_required


def test_desk_battery_on_mt_5489():
    results = run_battery(stream_from_seed(GeneratorKind.MT19937, 5489), desk_battery())
    assert len(results) == 20
    lc = {r.id.label: r.classification for r in results if r.id.family is Family.LINEAR_COMP}
    assert lc["LinearComp[0].jumps"] is Classification.EXTREME_FAIL
    assert lc["LinearComp[1].jumps"] is Classification.EXTREME_FAIL
    assert len({r.id for r in results}) == 20
