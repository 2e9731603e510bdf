import os
import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critpoint import ConfigError, CsvFormatError
from critpoint.harness import (
    FIELDS, emit_tradeoff_plot, expand, load_config, parse_config, read_points, render_svg, run_sweep,
    selfcheck,
)
from critpoint.harness.sweep import rows_to_csv, summarize, worker_count
from critpoint.oracle import finite_difference_hessian
from critpoint.spectral import p_max_for

DATA = os.path.join(os.path.dirname(__file__), "data")

ONE_CELL = """
[experiment one]
family = quad_cos
d = 2
eps = 0.2
n_h = 1
param.x0_scale = 0.5
"""


def test_field_order():
    assert FIELDS == ("run_id", "family", "d", "method", "epsilon", "n_H", "oracle_mode", "delta",
                      "grad_queries", "hess_queries", "iterations", "final_grad_norm", "f_final",
                      "terminated", "wall_ms", "seed")


def test_config_defaults_and_params():
    (cfg,) = parse_config(ONE_CELL)
    assert cfg.name == "one" and cfg.oracle == "exact" and cfg.seeds == (0,)
    assert cfg.methods == ("dispatch",) and cfg.params == {"x0_scale": 0.5}
    assert not cfg.record_timing


@pytest.mark.parametrize("text,match", [
    ("[experiment]\nfamily = quad_cos\nd = 2\neps = 0.1\n", "n_h"),
    ("[experiment]\nfamily = nope\nd = 2\neps = 0.1\nn_h = 1\n", "family"),
    ("[experiment]\nfamily = quad_cos\nd = 2\neps = 0.1\nn_h = 1\nseeds = 1, 1\n", "distinct"),
    ("[experiment]\nfamily = quad_cos\nd = 2\neps = 0.1\nn_h = 1\nscale = 0.5\n", "practical"),
    ("[experiment]\nfamily = quad_cos\nd = 2\neps = 0.1\nn_h = 1\ncolour = red\n", "unknown key"),
    ("[experiment]\nfamily = quad_cos\nd = two\neps = 0.1\nn_h = 1\n", "cannot parse"),
    ("[other]\nfamily = quad_cos\n", "unexpected section"),
    ("", "no \\[experiment\\]"),
])
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_missing_config_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/exp.ini")


def test_expand_order_and_ids():
    (cfg,) = parse_config(ONE_CELL.replace("n_h = 1", "n_h = 1, 2\nseeds = 3, 4\nrepeat = 2"))
    cells = expand(cfg)
    assert len(cells) == 8
    assert [c.run_id for c in cells][:2] == ["one-00000", "one-00001"]
    assert [(c.n_H, c.seed) for c in cells[::2]] == [(1, 3), (1, 4), (2, 3), (2, 4)]


def test_one_cell_sweep_csv(tmp_path):
    out = tmp_path / "r.csv"
    res = run_sweep(parse_config(ONE_CELL), out=str(out))
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(FIELDS)
    assert len(lines) == 2
    row = res.rows[0]
    assert row.terminated == "eps_critical" and row.final_grad_norm <= row.epsilon


def test_rerun_is_byte_identical(tmp_path):
    cfgs = parse_config(ONE_CELL.replace("n_h = 1", "n_h = 1, 2\nseeds = 0, 1"))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_sweep(cfgs, out=str(a), workers=1)
    run_sweep(cfgs, out=str(b), workers=2)
    assert a.read_bytes() == b.read_bytes()


def test_golden_file(tmp_path):
    out = tmp_path / "golden.csv"
    res = run_sweep(load_config(os.path.join(DATA, "golden.ini")), out=str(out), workers=1)
    with open(os.path.join(DATA, "golden.csv"), "rb") as fh:
        assert out.read_bytes() == fh.read()
    assert len(res.errors) == 1 and "ContractError" in res.errors[0]


def test_error_rows_do_not_stop_the_sweep(tmp_path):
    text = ONE_CELL + "\n[experiment bad]\nfamily = separable_quartic\nd = 2\neps = 0.1\nn_h = 1\nmethods = restarted\n"
    res = run_sweep(parse_config(text), out=str(tmp_path / "r.csv"))
    terms = {r.run_id: r.terminated for r in res.rows}
    assert terms == {"bad-00000": "error:ContractError", "one-00000": "eps_critical"}


def test_unwritable_output_directory():
    with pytest.raises(OSError):
        run_sweep(parse_config(ONE_CELL), out="/nonexistent/dir/r.csv")


def test_timing_column_only_on_request(tmp_path):
    res = run_sweep(parse_config(ONE_CELL + "record_timing = true\n"))
    assert isinstance(res.rows[0].wall_ms, float) and res.rows[0].wall_ms > 0
    res = run_sweep(parse_config(ONE_CELL))
    assert res.rows[0].wall_ms == ""


def test_worker_cap_from_environment(monkeypatch):
    monkeypatch.setenv("CRITPOINT_THREADS", "1")
    assert worker_count(10, 8) == 1
    monkeypatch.setenv("CRITPOINT_THREADS", "lots")
    with pytest.raises(ConfigError):
        worker_count(10, 8)
    monkeypatch.delenv("CRITPOINT_THREADS")
    assert worker_count(3, 8) == 3


def test_summary_is_median_per_budget():
    from critpoint.harness import ResultRow

    rows = [ResultRow(f"e-{i:05d}", "quad_cos", 2, "restarted", 0.1, n, "exact", 0.0, g, 1, 1, 0.1, 0.0,
                      "eps_critical", "", 0) for i, (n, g) in enumerate([(1, 10), (1, 30), (1, 20), (2, 5)])]
    assert summarize(rows) == {("e", 1): 20, ("e", 2): 5}


def write_csv(path, points):
    from critpoint.harness import ResultRow

    rows = [ResultRow(f"p-{i:05d}", "quad_cos", 2, "restarted", 0.1, n, "exact", 0.0, g, 1, 1, 0.1, 0.0,
                      "eps_critical", "", 0) for i, (n, g) in enumerate(points)]
    path.write_text(rows_to_csv(rows))


def test_plot_empty_input_has_axes_only(tmp_path):
    csv_path, svg = tmp_path / "e.csv", tmp_path / "e.svg"
    write_csv(csv_path, [])
    assert emit_tradeoff_plot(str(csv_path), str(svg)) == 0
    text = svg.read_text()
    assert text.startswith("<svg") and 'class="axes"' in text
    assert 'class="marker"' not in text and 'class="reference"' not in text


def test_plot_four_points(tmp_path):
    csv_path, svg = tmp_path / "p.csv", tmp_path / "p.svg"
    write_csv(csv_path, [(1, 1000), (2, 700), (4, 500), (8, 350)])
    assert emit_tradeoff_plot(str(csv_path), str(svg)) == 4
    text = svg.read_text()
    assert text.count('class="marker"') == 4
    ref = re.search(r'class="reference"[^>]*data-slope="([^"]+)" data-log-x1="([^"]+)" '
                    r'data-log-y1="([^"]+)" data-log-x2="([^"]+)" data-log-y2="([^"]+)"', text)
    slope, x1, y1, x2, y2 = map(float, ref.groups())
    assert slope == -0.5
    assert (y2 - y1) / (x2 - x1) == pytest.approx(-0.5)


def test_plot_malformed_csv_reports_line(tmp_path):
    bad = tmp_path / "bad.csv"
    write_csv(bad, [(1, 10), (2, 5)])
    lines = bad.read_text().splitlines()
    lines[2] = lines[2].replace(",5,", ",five,", 1)
    bad.write_text("\n".join(lines) + "\n")
    with pytest.raises(CsvFormatError) as info:
        read_points(str(bad))
    assert info.value.line == 3
    (tmp_path / "hdr.csv").write_text("a,b\n")
    with pytest.raises(CsvFormatError):
        read_points(str(tmp_path / "hdr.csv"))


def test_selfcheck_passes():
    rep = selfcheck(seed=0)
    assert rep.passed, "\n".join(rep.lines())


def test_selfcheck_catches_31_delta_phi():
    def mutated(lam, delta, L1):
        pm = p_max_for(L1, delta)
        a = np.abs(np.asarray(lam, dtype=float))
        band = np.maximum(np.ceil(np.log2(np.maximum(a, 2.0 * delta) / delta)), 1.0)
        return (31.0 * delta + a) * pm / band

    rep = selfcheck(phi_fn=mutated, seed=0, davis_kahan_instances=20)
    by_name = {s.name: s.passed for s in rep.suites}
    assert not rep.passed and not by_name["hhat_floor"]


def test_selfcheck_catches_missing_symmetrization():
    def unsymmetrized(gradient, x, h):
        return finite_difference_hessian(gradient, x, h, symmetrize=False)

    rep = selfcheck(fd_builder=unsymmetrized, seed=0, davis_kahan_instances=20)
    fd = next(s for s in rep.suites if s.name == "fd_accuracy")
    assert not fd.passed and "InvariantViolation" in fd.detail


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 64), st.integers(1, 10 ** 9)), min_size=1, max_size=12))
def test_plot_marker_count_property(points):
    svg = render_svg(points)
    assert svg.count('class="marker"') == len(points)
    assert svg.count('class="reference"') == 1
