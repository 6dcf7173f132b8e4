"""End-to-end checks of the error norms, CSV/VTK output, config and CLI."""

import os

import numpy as np
import pytest

from idpns.assembly import assemble_operators
from idpns.cli import main
from idpns.config import ConfigError, RunConfig, load_config
from idpns.errors import compute_delta_q, convergence_rate
from idpns.mesh import export_mesh, generate_structured_tri_2d, generate_uniform_1d
from idpns.output import (
    CSV_COLUMNS,
    read_convergence_csv,
    schlieren,
    write_convergence_csv,
    write_vtk,
)
from idpns.state import GasModel, SolutionField, assemble_state

GAS = GasModel(gamma=1.4, mu=0.01, prandtl=0.75)


def sample_field(n=33):
    mesh = generate_uniform_1d(0.0, 1.0, n)
    ops = assemble_operators(mesh, GAS)
    x = ops.coords[:, 0]
    rho = 1.0 + 0.3 * np.sin(2 * np.pi * x)
    v = 0.5 * np.cos(2 * np.pi * x)[:, None]
    e = 2.0 + 0.1 * x
    u = assemble_state(rho, v, e, 1)
    return SolutionField(u, 1, 0.0), ops


class TestDeltaQ:
    def test_zero_for_exact_data(self):
        field, ops = sample_field()
        rep = compute_delta_q(field, field.u.copy(), ops)
        assert rep.delta1 == rep.delta2 == rep.delta_inf == 0.0

    def test_relative_errors_are_scale_invariant(self):
        field, ops = sample_field()
        exact = field.u * 1.001
        a = compute_delta_q(field, exact, ops)
        scaled = SolutionField(10.0 * field.u, 1, 0.0)
        b = compute_delta_q(scaled, 10.0 * exact, ops)
        assert b.delta1 == pytest.approx(a.delta1, rel=1e-12)
        assert b.delta2 == pytest.approx(a.delta2, rel=1e-12)
        assert b.delta_inf == pytest.approx(a.delta_inf, rel=1e-12)

    def test_sums_three_component_errors(self):
        field, ops = sample_field()
        exact = field.u.copy()
        exact[:, 0] *= 1.01  # only density perturbed
        rep = compute_delta_q(field, exact, ops)
        d1, d2, dinf = rep.per_component["rho"]
        assert rep.delta1 == pytest.approx(d1)
        assert rep.per_component["momentum"] == (0.0, 0.0, 0.0)

    def test_quadratures_agree_on_smooth_data(self):
        field, ops = sample_field(201)
        exact = field.u * (1.0 + 1e-3)
        a = compute_delta_q(field, exact, ops, quadrature="lumped")
        b = compute_delta_q(field, exact, ops, quadrature="cellwise")
        assert b.delta1 == pytest.approx(a.delta1, rel=5e-2)

    def test_rejects_vanishing_reference(self):
        field, ops = sample_field()
        with pytest.raises(ValueError):
            compute_delta_q(field, np.zeros_like(field.u), ops)

    def test_rate_doubling_with_known_exponent(self):
        # delta ~ h^3 exactly -> rate 3 between any two grids
        assert convergence_rate(8.0, 1.0, 0.2, 0.1) == pytest.approx(3.0)


class TestConvergenceCsv:
    def test_roundtrip_and_rate_consistency(self, tmp_path):
        rows = [
            {"N": 50, "delta1": 4e-2, "rate1": None, "delta2": 5e-2,
             "rate2": None, "deltainf": 9e-2, "rateinf": None},
            {"N": 100, "delta1": 1e-2, "rate1": 2.0, "delta2": 1.25e-2,
             "rate2": 2.0, "deltainf": 3e-2, "rateinf": 1.58},
        ]
        path = str(tmp_path / "table.csv")
        write_convergence_csv(path, rows)
        back = read_convergence_csv(path)
        assert list(back[0].keys()) == CSV_COLUMNS
        assert back[0]["rate1"] is None
        assert back[1]["N"] == 100
        # recompute the rate from the stored deltas (h halves with N doubling)
        r = convergence_rate(back[0]["delta1"], back[1]["delta1"], 1 / 49, 1 / 99)
        assert abs(r - 1.97) < 0.1  # printed deltas keep 6 decimals
        assert back[1]["delta1"] == pytest.approx(1e-2, rel=1e-6)


class TestVtk:
    def test_writer_emits_all_fields(self, tmp_path):
        mesh = generate_structured_tri_2d((0.0, 1.0, 0.0, 0.5), 6, 4)
        ops = assemble_operators(mesh, GAS)
        n = ops.n
        rho = np.linspace(1.0, 2.0, n)
        u = assemble_state(rho, np.zeros((n, 2)), np.full(n, 1.5), 2)
        field = SolutionField(u, 2, 0.25)
        extra = {"schlieren": schlieren(field, ops)}
        path = str(tmp_path / "snap.vtk")
        write_vtk(path, field, ops, extra)
        text = open(path).read()
        for token in ("UNSTRUCTURED_GRID", f"POINTS {n} double", "density",
                      "momentum_x", "momentum_y", "total_energy", "schlieren"):
            assert token in text
        assert text.count("SCALARS") == 5

    def test_schlieren_range(self):
        field, ops = sample_field()
        s = schlieren(field, ops)
        assert s.min() >= np.exp(-10.0) - 1e-12
        assert s.max() == pytest.approx(1.0)


class TestConfig:
    def test_parses_full_file(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text(
            "[mesh]\nkind = uniform1d\na = -1.0\nb = 1.5\nn = 101\n"
            "[gas]\ngamma = 1.4\nmu = 0.01\nprandtl = 0.75\n"
            "[initial]\ncase = becker\nmach0 = 3.0\nv_inf = 0.2\n"
            "[time]\ncfl = 0.4\nt_final = 3.0\n"
            "[output]\ndirectory = out\nsnapshots = 1.0, 2.0\n"
        )
        cfg = load_config(str(path))
        assert cfg.n_nodes == 101
        assert cfg.case == "becker"
        assert cfg.snapshots == (1.0, 2.0)

    def test_missing_file_is_diagnosed(self):
        with pytest.raises(ConfigError, match="not found"):
            load_config("/nonexistent/run.ini")

    def test_bad_number_points_at_key(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("[time]\ncfl = fast\n")
        with pytest.raises(ConfigError, match="cfl"):
            load_config(str(path))

    def test_unknown_case_rejected(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("[initial]\ncase = vortex\n")
        with pytest.raises(ConfigError, match="case"):
            load_config(str(path))


class TestCli:
    def test_converge_writes_csv(self, tmp_path, capsys):
        out = str(tmp_path / "conv.csv")
        rc = main(["converge", "--case", "becker1d", "--grids", "25,50",
                   "--output", out])
        assert rc == 0
        rows = read_convergence_csv(out)
        assert [r["N"] for r in rows] == [25, 50]
        assert rows[0]["rate1"] is None
        assert rows[1]["rate1"] is not None
        assert rows[1]["delta1"] < rows[0]["delta1"]

    def test_run_reports_error_and_writes_vtk(self, tmp_path, capsys):
        cfg = tmp_path / "run.ini"
        cfg.write_text(
            "[mesh]\nkind = uniform1d\nn = 40\n"
            "[time]\ncfl = 0.4\nt_final = 0.05\n"
            f"[output]\ndirectory = {tmp_path / 'out'}\n"
        )
        rc = main(["run", "--config", str(cfg)])
        assert rc == 0
        assert (tmp_path / "out" / "final.vtk").is_file()
        assert "delta" in capsys.readouterr().out

    def test_mesh_info_flags_acuteness(self, tmp_path, capsys):
        mesh = generate_uniform_1d(0.0, 1.0, 11)
        path = str(tmp_path / "line.msh")
        export_mesh(mesh, path)
        rc = main(["mesh-info", path])
        assert rc == 0
        assert "acute" in capsys.readouterr().out

    def test_export_exact_csv(self, tmp_path):
        out = str(tmp_path / "exact.csv")
        rc = main(["export-exact", "--n", "11", "--output", out])
        assert rc == 0
        lines = open(out).read().strip().splitlines()
        assert lines[0] == "x,density,momentum,total_energy"
        assert len(lines) == 12

    def test_bad_config_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[initial]\ncase = nonsense\n")
        assert main(["run", "--config", str(cfg)]) == 2
