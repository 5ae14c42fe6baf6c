import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from structbath.errors import ParseError, SchemaError, ValidationError
from structbath.fileio import (GridFile, config_to_json, dump_config, parse_config, parse_model,
                               read_grid, read_pgm, read_ridge, read_spectrum, render_heatmap,
                               write_grid, write_spectrum, write_sweep)
from structbath.comparators import EprModel, HeomModes, TnChain
from structbath.network import PumpSpec
from structbath.selfenergy import SpectrumTrace, spectrum
from structbath.sweep import PRESET_NAMES, SweepAxis, preset, run_sweep

from conftest import networks

finite = st.floats(allow_nan=False, allow_infinity=False)


class TestConfig:
    @pytest.mark.parametrize("name", PRESET_NAMES)
    def test_preset_round_trip(self, name):
        p = preset(name)
        spec, pump = parse_config(config_to_json(p.spec, p.pump))
        assert spec == p.spec and pump == p.pump

    def test_missing_system(self):
        doc = dump_config(preset("C1").spec)
        del doc["system"]
        with pytest.raises(SchemaError) as exc:
            parse_config(json.dumps(doc))
        assert "system" in str(exc.value)

    def test_unknown_field_path(self):
        doc = dump_config(preset("C1").spec)
        doc["nodes"][2]["colour"] = "red"
        with pytest.raises(SchemaError) as exc:
            parse_config(doc)
        assert exc.value.path == "$.nodes[2]" and "colour" in str(exc.value)

    def test_wrong_type_path(self):
        doc = dump_config(preset("C1").spec)
        doc["couplings"][1]["j_ghz"] = "0.1"
        with pytest.raises(SchemaError) as exc:
            parse_config(doc)
        assert exc.value.path == "$.couplings[1].j_ghz"

    def test_duplicate_edge(self):
        doc = dump_config(preset("C1").spec)
        doc["couplings"].append({"a": "B2", "b": "S", "j_ghz": 0.1})
        with pytest.raises(ValidationError) as exc:
            parse_config(doc)
        assert any("duplicate" in v.message for v in exc.value.violations)

    def test_parse_error_position(self):
        with pytest.raises(ParseError) as exc:
            parse_config('{"nodes": [}')
        assert "line 1 column 12" in str(exc.value)

    def test_nan_rejected(self):
        with pytest.raises(ParseError):
            parse_config('{"nodes": [{"label": "S", "omega_ghz": NaN, "gamma": 0}]}')

    def test_pump_edge_checked(self):
        doc = dump_config(preset("C1").spec, PumpSpec(("B1", "B5"), g=0.1))
        with pytest.raises(ValidationError):
            parse_config(doc)

    def test_pump_optional(self):
        assert parse_config(dump_config(preset("C2").spec))[1] is None

    @settings(max_examples=50, deadline=None)
    @given(networks())
    def test_random_round_trip(self, spec):
        assert parse_config(config_to_json(spec))[0] == spec


class TestModel:
    def test_heom(self):
        kind, m, _ = parse_model('{"kind": "heom", "modes": [{"c_re": 1, "c_im": -0.5, "gamma": 2}]}')
        assert kind == "heom" and m == HeomModes((1 - 0.5j,), (2.0,))

    def test_tn(self):
        kind, m, opts = parse_model({"kind": "tn", "lambda": 0.5, "eps": [0, 1], "hop": [0.2], "eta": 1e-6})
        assert m == TnChain(0.5, (0, 1), (0.2,)) and opts == {"eta": 1e-6}

    def test_epr(self):
        _, m, _ = parse_model({"kind": "epr", "elements": [{"energy": 0.2, "participation": 0.5}]})
        assert m == EprModel((0.2,), (0.5,))

    @pytest.mark.parametrize("doc,path", [
        ({"kind": "heom", "modes": [{"c_re": 1}]}, "$.modes[0]"),
        ({"kind": "tn", "lambda": 1, "eps": [0], "extra": 1}, "$"),
        ({"kind": "laplace"}, "$.kind"),
    ])
    def test_schema_paths(self, doc, path):
        with pytest.raises(SchemaError) as exc:
            parse_model(doc)
        assert exc.value.path == path

    def test_invariant_violation(self):
        with pytest.raises(SchemaError):
            parse_model({"kind": "heom", "modes": [{"c_re": 1, "gamma": -1}]})


class TestSpectrumFile:
    def test_one_point(self):
        buf = io.StringIO()
        write_spectrum(spectrum(preset("C1").spec, [6.6]), buf)
        lines = buf.getvalue().splitlines()
        assert len(lines) == 2
        assert lines[0] == "omega_ghz,re_sigma,im_sigma,re_gss,im_gss,re_gtransfer,im_gtransfer,gain"

    def test_round_trip_bits(self, tmp_path):
        trace = spectrum(preset("C9").spec, np.linspace(5.8, 7.6, 601))
        write_spectrum(trace, tmp_path / "s.csv")
        back = read_spectrum(tmp_path / "s.csv")
        for f in ("omega", "sigma", "g_ss", "g_transfer", "gain"):
            assert getattr(back, f).tobytes() == getattr(trace, f).tobytes()
        np.testing.assert_array_equal(back.gain, np.abs(back.g_transfer) ** 2)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(finite, finite, finite), min_size=1, max_size=5))
    def test_round_trip_arbitrary_doubles(self, rows):
        a = np.array(rows)
        c = a[:, 1] + 1j * a[:, 2]
        trace = SpectrumTrace(a[:, 0], c, c, c, a[:, 0])
        buf = io.StringIO()
        write_spectrum(trace, buf)
        back = read_spectrum(io.StringIO(buf.getvalue()))
        assert back.sigma.tobytes() == c.tobytes() and back.omega.tobytes() == a[:, 0].tobytes()

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            write_spectrum(SpectrumTrace(*(np.zeros(0),) * 5), io.StringIO())


class TestSweepFiles:
    def test_one_by_one(self, tmp_path):
        res = run_sweep(preset("C1"), SweepAxis("J_SB-scale", [1.0]), [6.5])
        paths = write_sweep(res, tmp_path)
        grid = read_grid(paths["grid"])
        assert grid.values.shape == (1, 1) and grid.values[0, 0] == res.grid[0, 0]

    def test_round_trip(self, tmp_path):
        res = run_sweep(preset("FIG3"), SweepAxis.linspace("pump-P", 0, 6, 13),
                        np.linspace(5.8, 7.6, 181))
        paths = write_sweep(res, tmp_path, {"command": "sweep"})
        grid = read_grid(paths["grid"])
        assert grid.values.tobytes() == res.grid.tobytes()
        assert grid.omega_grid.tobytes() == res.omega_grid.tobytes()
        assert tuple(grid.axis_values) == res.axis.values
        assert grid.axis == "pump-P" and grid.preset == "FIG3"
        assert grid.pump == res.meta["pump"]
        axis_vals, ridge = read_ridge(paths["ridge"])
        assert len(axis_vals) == 13
        assert ridge.tobytes() == res.ridge.tobytes()
        manifest = json.loads(paths["manifest"].read_text())
        assert manifest["command"] == "sweep"
        assert manifest["outputs"] == {"grid": "grid.txt", "ridge": "ridge.csv",
                                       "manifest": "manifest.json"}

    def test_missing_cells_round_trip(self):
        g = GridFile("gamma2", np.array([0.0, 1.0]), np.array([6.0, 7.0]), "X", {},
                     np.array([[1.0, np.nan], [np.nan, 2.5]]))
        buf = io.StringIO()
        write_grid(g, buf)
        back = read_grid(io.StringIO(buf.getvalue()))
        np.testing.assert_array_equal(back.values, g.values)

    def test_not_a_grid(self):
        with pytest.raises(ValueError):
            read_grid(io.StringIO("a,b\n1,2\n"))


class TestHeatmap:
    def test_affine(self):
        assert render_heatmap(np.array([[0.0, 1.0], [2.0, 3.0]])).pixels.tolist() == [[0, 85], [170, 255]]

    def test_constant(self):
        assert np.all(render_heatmap(np.full((3, 4), 2.5)).pixels == 128)
        assert np.all(render_heatmap(np.full((3, 4), 2.5), "log").pixels == 128)
        assert np.all(render_heatmap(np.zeros((3, 4))).pixels == 0)

    def test_log(self):
        px = render_heatmap(np.array([[1.0, 10.0, 100.0]]), "log").pixels
        assert px.tolist() == [[0, 128, 255]]

    def test_missing_cells_are_black(self):
        px = render_heatmap(np.array([[np.nan, 1.0, 3.0]]), "log").pixels
        assert px.tolist() == [[0, 0, 255]]

    @pytest.mark.parametrize("grid,scale", [(np.zeros((0, 3)), "linear"),
                                            (np.array([[0.0, 1.0]]), "log"),
                                            (np.array([[-1.0, 1.0]]), "log"),
                                            (np.array([[1.0]]), "sqrt")])
    def test_errors(self, grid, scale):
        with pytest.raises(ValueError):
            render_heatmap(grid, scale)

    def test_pgm_round_trip(self, tmp_path):
        px = render_heatmap(np.arange(12.0).reshape(3, 4))
        px.save(tmp_path / "h.pgm")
        assert (tmp_path / "h.pgm").read_bytes().startswith(b"P5\n4 3\n255\n")
        np.testing.assert_array_equal(read_pgm(tmp_path / "h.pgm"), px.pixels)

    def test_deterministic(self):
        g = np.random.default_rng(3).random((5, 7))
        assert render_heatmap(g).to_bytes() == render_heatmap(g.copy()).to_bytes()

    def test_fig3_brightest_column_tracks_ridge(self):
        p = preset("FIG3")
        res = run_sweep(p, p.default_axis)
        px = render_heatmap(GridFile.from_result(res)).pixels
        for k in range(0, 121, 10):
            col = int(np.argmax(px[k]))
            # pixel quantisation may merge near-equal columns; the ridge is among the brightest
            assert px[k, list(res.omega_grid).index(res.ridge[k])] == px[k, col]
