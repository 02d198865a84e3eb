import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgecachesim.cli import main
from edgecachesim.scenario import (
    CSV_COLUMNS,
    SEED_ENV,
    OracleSpec,
    Scenario,
    ScenarioFileError,
    ScenarioParseError,
    ScenarioValidationError,
    SchemaError,
    load_scenario,
    oracle_check,
    parse_scenario,
    read_results,
    resolve_seed,
    rows_to_csv,
    run_scenario,
    summarize,
    write_scenario,
)
from edgecachesim.simulator import DelayModel

SMALL = """
scenario.id = tiny
catalog.k = 6
population.n = 20
sim.requests_per_day = 60
sim.days = 2
sim.seed = 3
run.algorithms = PROPOSED, LRU
run.capacities = 40, 80, 120
"""


class TestLoad:
    def test_fig2_scenario_settings(self):
        s = load_scenario("paper_fig2.scenario")
        assert s.catalog.k == 21 and s.catalog.gamma == 0.6
        assert s.population.n == 900
        assert s.sim.requests_per_day == 900 and s.sim.lam == 0.9
        assert s.capacities == (50, 150, 250, 350, 450, 500)
        assert s.catalog.types == ("news", "scene", "sport", "traffic", "person")
        assert s.algorithms == ("PROPOSED", "LRU", "LFU", "WGDSF*")

    def test_shipped_scenarios_all_load(self):
        for name in ("paper_fig2", "desk_small", "oracle_sweep"):
            load_scenario(name)
        s = load_scenario("desk_small")
        assert (s.catalog.k, s.population.n, s.sim.requests_per_day) == (10, 50, 200)

    def test_alpha_out_of_range_names_key(self):
        with pytest.raises(ScenarioValidationError) as exc:
            parse_scenario("population.alpha_shares = 1.5:1")
        assert exc.value.key == "population.alpha_shares"

    def test_missing_delay_uses_defaults(self):
        s = parse_scenario("sim.days = 2")
        assert s.sim.delay == DelayModel(10.0, 5.0, 100.0)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioFileError):
            load_scenario(tmp_path / "nope.scenario")

    def test_parse_errors(self):
        with pytest.raises(ScenarioParseError, match="line 2"):
            parse_scenario("catalog.k = 3\nthis is not a pair\n")
        with pytest.raises(ScenarioParseError, match="unknown key"):
            parse_scenario("catalog.colour = red")
        with pytest.raises(ScenarioParseError, match="duplicate"):
            parse_scenario("catalog.k = 3\ncatalog.k = 4")

    @pytest.mark.parametrize(
        "text, key",
        [
            ("catalog.k = x", "catalog.k"),
            ("catalog.k = 0", "catalog.k"),
            ("sim.lambda = 0", "sim.lambda"),
            ("sim.days = 0", "sim.days"),
            ("sim.refresh_rho = 2", "sim.refresh_rho"),
            ("sim.delay.miss_ms = 1", "sim.delay.miss_ms"),
            ("run.algorithms = PROPOSED, FIFO", "run.algorithms"),
            ("run.capacities = ", "run.capacities"),
            ("population.type_shares = cooking:1", "population.type_shares"),
            ("catalog.sd_size_range = 9, 3", "catalog.sd_size_range"),
            ("wgdsf.cost = free", "wgdsf.cost"),
            ("catalog.videos = 1:news:2:4", "catalog.videos"),
        ],
    )
    def test_validation_errors_name_key(self, text, key):
        with pytest.raises(ScenarioValidationError) as exc:
            parse_scenario(text)
        assert exc.value.key == key

    def test_explicit_videos(self):
        s = parse_scenario("catalog.videos = 2:news:10:5, 1:sport:8:4\npopulation.type_shares = sport:1")
        cat = s.build_catalog()
        assert s.catalog.k == 2
        assert [v.rank for v in cat.videos] == [2, 1]
        np.testing.assert_array_equal(cat.sizes, [[10, 5], [8, 4]])

    def test_fraction_shares(self):
        s = parse_scenario("population.alpha_shares = 0.2:1/3, 0.5:2/3")
        assert s.population.alpha_shares == ((0.2, 1 / 3), (0.5, 2 / 3))


BASE = parse_scenario("")


@st.composite
def scenarios(draw):
    weights = draw(st.lists(st.tuples(st.sampled_from(["news", "sport"]), st.floats(0.1, 5)),
                            max_size=2, unique_by=lambda t: t[0]))
    return Scenario(
        id="rt",
        catalog=replace(BASE.catalog, k=draw(st.integers(1, 40)), gamma=draw(st.floats(0, 3))),
        population=replace(BASE.population, n=draw(st.integers(1, 2000))),
        sim=replace(BASE.sim, days=draw(st.integers(1, 30)), seed=draw(st.integers(0, 2**64 - 1)),
                    refresh_rho=draw(st.floats(0, 1)), wgdsf_type_weights=tuple(weights)),
        algorithms=tuple(draw(st.lists(st.sampled_from(["PROPOSED", "LRU", "LFU", "WGDSF*"]),
                                       min_size=1, max_size=4, unique=True))),
        capacities=tuple(draw(st.lists(st.integers(0, 1000), min_size=1, max_size=6))),
    )


@settings(max_examples=60, deadline=None)
@given(scenarios())
def test_round_trip(s):
    assert parse_scenario(write_scenario(s)) == s


def test_round_trip_shipped():
    for name in ("paper_fig2", "desk_small", "oracle_sweep"):
        s = load_scenario(name)
        assert parse_scenario(write_scenario(s)) == s


class TestSeed:
    def test_precedence(self):
        s = parse_scenario("sim.seed = 5")
        assert resolve_seed(s, None, {}) == 5
        assert resolve_seed(s, None, {SEED_ENV: "9"}) == 9
        assert resolve_seed(s, 11, {SEED_ENV: "9"}) == 11

    def test_bad_env(self):
        with pytest.raises(ScenarioValidationError):
            resolve_seed(parse_scenario(""), None, {SEED_ENV: "abc"})


class TestRun:
    def test_row_count(self):
        result = run_scenario(parse_scenario(SMALL))
        assert len(result.rows) == 2 * 3 * 2 * 6

    def test_row_order_and_header(self, tmp_path):
        result = run_scenario(parse_scenario(SMALL), out_dir=tmp_path)
        lines = (tmp_path / "results.csv").read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        keys = [(r.algorithm, r.capacity, r.day) for r in result.rows]
        order = {"PROPOSED": 0, "LRU": 1}
        assert keys == sorted(keys, key=lambda k: (order[k[0]], k[1], k[2]))
        assert [r.content_type for r in result.rows[:6]] == ["ALL", "news", "scene", "sport", "traffic", "person"]

    def test_formatting(self):
        result = run_scenario(parse_scenario(SMALL))
        text = rows_to_csv(result.rows)
        first = text.splitlines()[1].split(",")
        assert len(first[CSV_COLUMNS.index("empirical_hit_ratio")].split(".")[1]) == 6
        assert len(first[CSV_COLUMNS.index("mean_startup_delay_ms")].split(".")[1]) == 3
        numeric = [f for line in text.splitlines()[1:] for f in line.split(",")[2:12]]
        assert not any("e" in f or "E" in f for f in numeric)

    def test_baseline_predicted_empty(self):
        result = run_scenario(parse_scenario(SMALL))
        for r in result.rows:
            if r.algorithm != "PROPOSED" or r.content_type != "ALL":
                assert r.predicted_hit_ratio is None
            else:
                assert 0 <= r.predicted_hit_ratio <= 1

    def test_byte_identical_and_jobs_independent(self, tmp_path):
        s = parse_scenario(SMALL)
        run_scenario(s, out_dir=tmp_path / "a")
        run_scenario(s, out_dir=tmp_path / "b", jobs=2)
        for name in ("results.csv", "placement.jsonl"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_placement_jsonl(self, tmp_path):
        run_scenario(parse_scenario(SMALL), out_dir=tmp_path)
        records = [json.loads(line) for line in (tmp_path / "placement.jsonl").read_text().splitlines()]
        assert len(records) == 3 * 2
        for rec in records:
            x, y = np.array(rec["x"]), np.array(rec["y"])
            assert x.shape == (6, 2) and np.all(x + y <= 1)
            assert rec["capacity_used"] <= rec["capacity"]

    def test_seed_changes_output(self):
        s = parse_scenario(SMALL)
        a = rows_to_csv(run_scenario(s, seed=1).rows)
        b = rows_to_csv(run_scenario(s, seed=2).rows)
        assert a != b

    def test_proposed_non_decreasing_in_capacity(self):
        result = run_scenario(load_scenario("paper_fig2"))
        ratios = [result.metrics[("PROPOSED", S)].hit_ratio for S in (50, 150, 250, 350, 450, 500)]
        predicted = [result.metrics[("PROPOSED", S)].days[0].predicted_hit_ratio for S in (50, 150, 250, 350, 450, 500)]
        assert all(b >= a for a, b in zip(predicted, predicted[1:]))
        assert all(b >= a for a, b in zip(ratios, ratios[1:]))

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(ScenarioFileError):
            run_scenario(parse_scenario(SMALL), out_dir=blocker / "sub")


@pytest.fixture(scope="module")
def csv_path(tmp_path_factory):
    out = tmp_path_factory.mktemp("sum")
    run_scenario(parse_scenario(SMALL.replace("40, 80, 120", "40, 80, 350")), out_dir=out)
    return out / "results.csv"


class TestSummarize:
    def test_tables(self, csv_path):
        tables = summarize(csv_path)
        assert [r[0] for r in tables["fig2a"].rows] == ["PROPOSED", "LRU"]
        assert "S=350" in tables["fig2a"].title
        assert [r[0] for r in tables["fig2b"].rows] == [40, 80, 350]
        assert tables["fig3"].header[1:] == ["news", "scene", "sport", "traffic", "person"]
        assert len(tables["fig5"].rows) == 6

    def test_type_counts_crossfoot(self, csv_path):
        records = read_results(csv_path)
        totals = {}
        for r in records:
            key = (r["algorithm"], r["capacity"], r["day"], r["content_type"] == "ALL")
            acc = totals.setdefault(key, [0, 0, 0])
            acc[0] += r["exact_hits"]
            acc[1] += r["transcode_hits"]
            acc[2] += r["requests"]
        for (a, S, d, is_all), acc in totals.items():
            if is_all:
                assert acc == totals[(a, S, d, False)]

    def test_empty_csv(self, tmp_path, caplog):
        path = tmp_path / "empty.csv"
        path.write_text("")
        tables = summarize(path)
        assert all(not t.rows for t in tables.values())
        assert "no result rows" in caplog.text
        path.write_text(",".join(CSV_COLUMNS) + "\n")
        assert all(not t.rows for t in summarize(path).values())

    def test_missing_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("scenario_id,algorithm\n")
        with pytest.raises(SchemaError) as exc:
            summarize(path)
        assert exc.value.column == "capacity"

    def test_bad_value(self, tmp_path, csv_path):
        lines = csv_path.read_text().splitlines()
        fields = lines[1].split(",")
        fields[CSV_COLUMNS.index("misses")] = "lots"
        path = tmp_path / "bad.csv"
        path.write_text("\n".join([lines[0], ",".join(fields)]) + "\n")
        with pytest.raises(SchemaError) as exc:
            summarize(path)
        assert exc.value.column == "misses"


class TestOracle:
    def test_no_mismatches(self):
        s = replace(parse_scenario(""), oracle=OracleSpec(instances=150, max_k=8))
        report = oracle_check(s)
        assert report == {"instances": 150, "mismatches": []}


class TestCLI:
    def test_validate(self, capsys):
        assert main(["validate", "paper_fig2"]) == 0
        assert "K=21" in capsys.readouterr().out

    def test_validate_error_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.scenario"
        bad.write_text("population.alpha_shares = 1.5:1\n")
        assert main(["validate", str(bad)]) == 1
        assert "population.alpha_shares" in capsys.readouterr().err

    def test_missing_file_exit_2(self, tmp_path):
        assert main(["validate", str(tmp_path / "none.scenario")]) == 2

    def test_run_and_summarize(self, tmp_path, capsys):
        path = tmp_path / "s.scenario"
        path.write_text(SMALL)
        assert main(["run", str(path), "--out", str(tmp_path / "out"), "--seed", "4"]) == 0
        assert (tmp_path / "out" / "results.csv").exists()
        assert main(["summarize", str(tmp_path / "out" / "results.csv"), "--figure", "fig2b"]) == 0
        out = capsys.readouterr().out
        assert "hit ratio vs capacity" in out

    def test_env_seed(self, tmp_path, monkeypatch):
        path = tmp_path / "s.scenario"
        path.write_text(SMALL)
        monkeypatch.setenv(SEED_ENV, "77")
        main(["run", str(path), "--out", str(tmp_path / "env")])
        main(["run", str(path), "--out", str(tmp_path / "flag"), "--seed", "77"])
        main(["run", str(path), "--out", str(tmp_path / "override"), "--seed", "3"])
        env_csv = (tmp_path / "env" / "results.csv").read_bytes()
        assert env_csv == (tmp_path / "flag" / "results.csv").read_bytes()
        assert env_csv != (tmp_path / "override" / "results.csv").read_bytes()

    def test_oracle_check(self, tmp_path, capsys):
        path = tmp_path / "o.scenario"
        path.write_text("oracle.instances = 50\noracle.max_k = 6\n")
        assert main(["oracle-check", str(path)]) == 0
        assert "0 mismatches" in capsys.readouterr().out
