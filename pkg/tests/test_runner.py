import xml.etree.ElementTree as ET

import pytest

from masscollapse import chart, cli
from masscollapse.chart import emit_chart, render_svg
from masscollapse.engine import Scope
from masscollapse.errors import ConfigError, InputError
from masscollapse.noise import Constant, PowerLaw, noise_probability
from masscollapse.protocols import Backend
from masscollapse.runner import (
    CSV_HEADER, ResultRow, as_printed, format_csv, parse_config, point_seed, read_csv, run_sweep, write_csv,
)

SVG = "{http://www.w3.org/2000/svg}"


def row(**kw):
    base = dict(experiment="ghz", law="power", size=3, iterations=None, p_effective=0.18, metric=0.262144,
                stderr=0.001, shots=2000, seed=1, backend="trajectory")
    base.update(kw)
    return ResultRow(**base)


class TestParseConfig:
    def test_ghz_defaults(self):
        plan = parse_config("experiment=ghz sizes=2..8")
        assert plan.sizes == tuple(range(2, 9))
        assert [type(s.law) for s in plan.laws] == [PowerLaw, Constant]
        assert plan.laws[0].law == PowerLaw(0.02, 2.0)
        assert plan.laws[1].law == Constant(0.08)
        assert (plan.shots, plan.phase_points, plan.seed, plan.backend) == (2000, 64, 0, Backend.TRAJECTORY)

    def test_grover_grid(self):
        plan = parse_config("experiment=grover sizes=3,4,5 iterations=1..7")
        assert plan.sizes == (3, 4, 5)
        assert plan.iterations == tuple(range(1, 8))
        assert len(plan.points()) == 2 * 3 * 7

    def test_zero_shots(self):
        with pytest.raises(ConfigError) as err:
            parse_config("experiment=ghz shots=0")
        assert err.value.key == "shots"

    @pytest.mark.parametrize("text, key", [
        ("experiment=ghz colour=red", "colour"),
        ("experiment=ghz k=abc", "k"),
        ("experiment=ghz sizes=1..4", "sizes"),
        ("experiment=ghz phase_points=10", "phase_points"),
        ("experiment=ghz law=cubic", "law"),
        ("experiment=ghz p0=0.7", "p0"),
        ("experiment=ghz backend=gpu", "backend"),
        ("experiment=ghz seed=-1", "seed"),
        ("experiment=grover iterations=0..3", "iterations"),
        ("experiment=branch iterations=2", "iterations"),
        ("experiment=branch backend=exact sizes=0..12", "sizes"),
        ("sizes=2..4", "experiment"),
        ("experiment=teleport", "experiment"),
        ("experiment=ghz sizes", "sizes"),
        ("experiment=ghz law=none,constant p0=0", "law"),
    ])
    def test_errors_name_the_key(self, text, key):
        with pytest.raises(ConfigError) as err:
            parse_config(text)
        assert err.value.key == key

    def test_comments_and_lines(self):
        plan = parse_config("# branch grid\nexperiment=branch\nsizes=0..2,5  # mixed\nlaw=power\n")
        assert plan.sizes == (0, 1, 2, 5)
        assert plan.laws[0].scope is Scope.BRANCH_ANCILLAS_ONLY

    def test_branch_constant_hits_all_qubits(self):
        plan = parse_config("experiment=branch law=constant")
        assert plan.laws[0].scope is Scope.ALL_QUBITS


class TestSweep:
    def test_row_count(self):
        plan = parse_config("experiment=ghz sizes=2..8 shots=50 phase_points=17")
        rows = run_sweep(plan)
        assert len(rows) == 14

    def test_sorted_and_p_effective(self):
        plan = parse_config("experiment=grover sizes=3,4 iterations=1..2 shots=100 law=power,constant,none")
        rows = run_sweep(plan)
        assert len(rows) == 3 * 2 * 2
        assert [r.sort_key for r in rows] == sorted(r.sort_key for r in rows)
        laws = {"power": PowerLaw(0.02, 2.0), "constant": Constant(0.08), "none": Constant(0.0)}
        for r in rows:
            assert abs(r.p_effective - noise_probability(laws[r.law], r.size)) <= 1e-12

    def test_exact_rows_have_zero_stderr(self):
        rows = run_sweep(parse_config("experiment=branch sizes=1..3 backend=exact"))
        assert all(r.stderr == 0 for r in rows)
        assert all(r.backend == "exact" for r in rows)

    def test_point_seed_is_stable_and_local(self):
        assert point_seed(42, "ghz", "power", 3, None) == point_seed(42, "ghz", "power", 3, None)
        assert point_seed(42, "ghz", "power", 3, None) != point_seed(42, "ghz", "power", 4, None)
        small = run_sweep(parse_config("experiment=ghz sizes=3 shots=200 seed=7 law=power"))
        large = run_sweep(parse_config("experiment=ghz sizes=2..5 shots=200 seed=7 law=power"))
        assert small[0] == next(r for r in large if r.size == 3)

    def test_parallel_matches_serial(self):
        plan = parse_config("experiment=branch sizes=0..3 shots=200 seed=3")
        assert format_csv(run_sweep(plan, workers=1)) == format_csv(run_sweep(plan, workers=2))

    def test_mass_rows_vanish_after_clamp(self):
        rows = run_sweep(parse_config("experiment=ghz sizes=5..8 law=power seed=1"))
        assert all(r.metric <= 0.02 for r in rows)


class TestCsv:
    def test_header_and_one_row(self, tmp_path):
        path = write_csv([row()], tmp_path / "out.csv")
        lines = path.read_text().split("\n")
        assert lines[0] == ",".join(CSV_HEADER)
        assert lines[0] == "experiment,law,size,iterations,p_effective,metric,stderr,shots,seed,backend"
        assert lines[1] == "ghz,power,3,,0.18,0.262144,0.001,2000,1,trajectory"
        assert lines[2:] == [""]

    def test_nine_significant_digits(self):
        text = format_csv([row(metric=0.123456789123, stderr=1 / 3)])
        assert "0.123456789," in text and "0.333333333," in text

    def test_round_trip(self, tmp_path):
        rows = [row(metric=0.1234567891234), row(size=4, iterations=None, metric=1 / 7),
                row(experiment="grover", iterations=5, size=5, metric=0.13)]
        path = write_csv(rows, tmp_path / "r.csv")
        parsed = read_csv(path)
        assert parsed == [as_printed(r) for r in rows]
        assert format_csv(parsed) == path.read_text()

    def test_empty_rows(self, tmp_path):
        with pytest.raises(InputError):
            write_csv([], tmp_path / "x.csv")

    def test_io_failure_names_path(self, tmp_path):
        target = tmp_path / "missing" / "x.csv"
        with pytest.raises(OSError, match="missing"):
            write_csv([row()], target)


class TestChart:
    def _series(self, svg_text):
        root = ET.fromstring(svg_text)
        return [g.get("data-name") for g in root.iter(f"{SVG}g") if g.get("class") == "series"]

    def test_ghz_two_series(self, tmp_path):
        rows = [row(law=law, size=n, metric=0.5, stderr=0.01) for law in ("constant", "power") for n in range(2, 9)]
        path = emit_chart(rows, tmp_path / "g.svg")
        text = path.read_text()
        assert self._series(text) == ["constant", "power"]
        tick_y = chart.HEIGHT - chart.BOTTOM + 18
        xlabels = [t.text for t in ET.fromstring(text).iter(f"{SVG}text") if float(t.get("y")) == tick_y]
        assert xlabels == [str(n) for n in range(2, 9)]

    def test_grover_six_series(self):
        rows = [row(experiment="grover", law=law, size=n, iterations=t, metric=0.3)
                for law in ("constant", "power") for n in (3, 4, 5) for t in range(1, 8)]
        names = self._series(render_svg(rows))
        assert len(names) == 6
        assert "n=5 power" in names

    def test_mass_law_is_dashed(self):
        text = render_svg([row(law="constant"), row(law="power")])
        polylines = [p for p in ET.fromstring(text).iter(f"{SVG}polyline")]
        assert [p.get("stroke-dasharray") for p in polylines] == [None, "6 4"]

    def test_error_bars(self):
        text = render_svg([row(stderr=0.05), row(size=4, stderr=0.0)])
        # one bar (3 segments) for the nonzero stderr point
        group = next(g for g in ET.fromstring(text).iter(f"{SVG}g") if g.get("class") == "series")
        assert len(list(group.iter(f"{SVG}line"))) == 3

    def test_empty(self):
        with pytest.raises(InputError):
            render_svg([])

    def test_mixed_experiments(self):
        with pytest.raises(InputError):
            render_svg([row(), row(experiment="branch")])


class TestCli:
    def test_ghz_to_stdout(self, capsys):
        assert cli.main(["ghz", "--sizes", "2..3", "--shots", "100", "--phase-points", "8"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == ",".join(CSV_HEADER)
        assert len(out) == 1 + 4

    def test_config_file_and_flag_merge(self, tmp_path, capsys):
        cfg = tmp_path / "c.txt"
        cfg.write_text("experiment=branch sizes=0..4 law=constant shots=50\n")
        out = tmp_path / "b.csv"
        chart = tmp_path / "b.svg"
        code = cli.main(["branch", "--config", str(cfg), "--sizes", "1..2", "--out", str(out), "--chart", str(chart)])
        assert code == 0
        rows = read_csv(out)
        assert [r.size for r in rows] == [1, 2]
        assert {r.law for r in rows} == {"constant"}
        assert rows[0].shots == 50
        assert chart.read_text().startswith("<?xml")

    def test_config_error_exit_code(self, capsys):
        assert cli.main(["ghz", "--shots", "0"]) == 1
        assert "shots" in capsys.readouterr().err

    def test_engine_error_exit_code(self, tmp_path, capsys):
        assert cli.main(["grover", "--sizes", "3", "--iterations", "1", "--shots", "10",
                         "--out", str(tmp_path / "no" / "such" / "dir.csv")]) == 2

    def test_predict(self, capsys):
        assert cli.main(["predict", "ghz", "--sizes", "3", "--law", "constant"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[1] == "ghz,constant,3,,0.08,0.592704"

    def test_predict_grover_noiseless(self, capsys):
        assert cli.main(["predict", "grover", "--sizes", "3", "--iterations", "1..2", "--law", "none,power"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[1:] == ["grover,none,3,1,0,0.78125", "grover,none,3,2,0,0.9453125"]

    def test_workers_env(self, monkeypatch, capsys):
        monkeypatch.setenv("MASSCOLLAPSE_WORKERS", "2")
        assert cli.main(["branch", "--sizes", "0..1", "--shots", "20", "--phase-points", "4"]) == 0
