import csv
import json
import logging
import math

import numpy as np
import pytest

from homoflow import cli, io
from homoflow.analytic import limit_mu_tilde
from homoflow.exceptions import DivergenceError
from homoflow.orthons import reconstruct_flow

from conftest import eigen_image


@pytest.fixture
def pulse_csv(tmp_path, pulse):
    path = tmp_path / "pulse.csv"
    io.write_csv(path, pulse)
    return path


def run(*args):
    return cli.main([str(a) for a in args])


def load_json(path):
    return json.loads(path.read_text())


def nan_none(values):
    return np.array([np.nan if v is None else v for v in values], dtype=float)


class TestFlow:
    def test_snapshot_count(self, tmp_path, pulse_csv):
        out = tmp_path / "snaps"
        assert run("flow", "--input", pulse_csv, "--p", 1.01, "--delta", 0.5, "--steps", 200, "--out", out) == 0
        assert len(list(out.glob("psi_*.csv"))) == 201
        assert len(io.read_csv(out / "times.csv")) == 201
        assert (out / "psi_00000.csv").exists() and (out / "psi_00200.csv").exists()

    def test_fixed_step(self, tmp_path, pulse_csv):
        out = tmp_path / "fixed"
        assert run("flow", "--input", pulse_csv, "--p", 1.5, "--dt", 0.05, "--steps", 4, "--out", out) == 0
        np.testing.assert_allclose(io.read_csv(out / "times.csv"), np.arange(5) * 0.05)

    def test_automatic_fixed_step(self, tmp_path, pulse_csv):
        out = tmp_path / "auto"
        assert run("flow", "--input", pulse_csv, "--p", 2 - 1e-9, "--dt", "auto", "--steps", 2, "--out", out) == 0
        assert io.read_csv(out / "times.csv")[1] == pytest.approx(cli.default_dt(2 - 1e-9, 1e-8))

    def test_constant_input_warns(self, tmp_path, caplog):
        src = tmp_path / "c.csv"
        io.write_csv(src, np.full(10, 0.3))
        with caplog.at_level(logging.WARNING, logger="homoflow"):
            assert run("flow", "--input", src, "--p", 1.5, "--delta", 0.5, "--steps", 5, "--out", tmp_path / "c") == 0
        assert "constant input" in caplog.text
        snaps = [io.read_csv(f) for f in sorted((tmp_path / "c").glob("psi_*.csv"))]
        assert len(snaps) == 6
        assert all(np.array_equal(s, snaps[0]) for s in snaps)

    def test_missing_file(self, tmp_path):
        assert run("flow", "--input", tmp_path / "nope.csv", "--p", 1.5, "--delta", 0.5, "--out", tmp_path) == 2

    def test_step_flags_are_exclusive(self, tmp_path, pulse_csv):
        assert run("flow", "--input", pulse_csv, "--p", 1.5, "--delta", 0.5, "--dt", 0.1, "--out", tmp_path) == 2
        assert run("flow", "--input", pulse_csv, "--p", 1.5, "--out", tmp_path) == 2

    def test_bad_values_are_usage_errors(self, tmp_path, pulse_csv):
        assert run("flow", "--input", pulse_csv, "--p", 3.0, "--delta", 0.5, "--out", tmp_path) == 2
        assert run("flow", "--input", pulse_csv, "--p", 1.5, "--delta", 0.5, "--steps", -1, "--out", tmp_path) == 2

    def test_divergence_exit_code(self, tmp_path, pulse_csv, monkeypatch, caplog):
        def boom(*args, **kw):
            raise DivergenceError(7)

        monkeypatch.setattr(cli, "evolve_fixed", boom)
        assert run("flow", "--input", pulse_csv, "--p", 1.5, "--dt", 1.0, "--out", tmp_path / "d") == 3
        assert "step 7" in caplog.text


class TestDecompose:
    def test_single_eigenfunction_scenario(self, tmp_path):
        src = tmp_path / "f.csv"
        io.write_csv(src, eigen_image())
        out = tmp_path / "dec.json"
        args = ["decompose", "--input", src, "--p", 1.5, "--operator", "normpower", "--lambda", -0.0269]
        with pytest.warns(RuntimeWarning):
            assert run(*args, "--rank", 20, "--steps", 60, "--out", out) == 0
        d = load_json(out)
        assert d["alphas"][0] ** 2 == pytest.approx(249.1, abs=0.1)
        assert d["ext_times"][0] == pytest.approx(74.3, abs=0.1)
        assert d["shape"] == [32, 32]

    def test_normpower_needs_eigenvalue(self, tmp_path, pulse_csv):
        assert run("decompose", "--input", pulse_csv, "--p", 1.5, "--operator", "normpower", "--out", tmp_path / "x.json") == 2

    def test_blind_matches_prior(self, tmp_path, pulse_csv):
        common = ["--p", 1.01, "--rank", 5, "--eigenvalue", "mu"]
        assert run("decompose", "--input", pulse_csv, *common, "--delta", 0.5, "--steps", 50, "--out", tmp_path / "prior.json") == 0
        assert run("flow", "--input", pulse_csv, "--p", 1.01, "--delta", 0.5, "--steps", 50, "--out", tmp_path / "s") == 0
        assert run("decompose", "--snapshots", tmp_path / "s", "--mode", "blind", *common, "--out", tmp_path / "blind.json") == 0
        a, b = load_json(tmp_path / "prior.json"), load_json(tmp_path / "blind.json")
        assert a["shape"] == b["shape"] and a["p"] == b["p"]
        assert b["delta"] == pytest.approx(a["delta"], rel=1e-10)
        for key in ("alphas", "lambdas", "ext_times"):
            np.testing.assert_allclose(nan_none(b[key]), nan_none(a[key]), rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(np.array(b["modes"]), np.array(a["modes"]), atol=1e-10)

    def test_rank_five_on_pulse(self, tmp_path, pulse_csv):
        out = tmp_path / "p.json"
        assert run("decompose", "--input", pulse_csv, "--p", 1.01, "--rank", 5, "--steps", 50, "--out", out) == 0
        alphas = np.abs(load_json(out)["alphas"])
        assert len(alphas) == 5 and np.all(np.diff(alphas) <= 0)

    def test_posterior_with_known_operator(self, tmp_path, pulse_csv):
        assert run("flow", "--input", pulse_csv, "--p", 1.5, "--eps", 1e-3, "--dt", 0.02, "--steps", 30, "--out", tmp_path / "s") == 0
        for mode in ("posterior", "blind"):
            out = tmp_path / f"{mode}.json"
            assert run("decompose", "--snapshots", tmp_path / "s", "--mode", mode, "--p", 1.5, "--eps", 1e-3,
                       "--rank", 3, "--eigenvalue", "mu", "--out", out) == 0
        a, b = load_json(tmp_path / "posterior.json"), load_json(tmp_path / "blind.json")
        np.testing.assert_allclose(nan_none(a["alphas"]), nan_none(b["alphas"]), rtol=1e-10)

    def test_non_dissipative_exit_code(self, tmp_path, caplog):
        d = tmp_path / "grow"
        d.mkdir()
        for k, scale in enumerate([1.0, 0.5, 0.7, 0.2]):
            io.write_csv(d / f"psi_{k:05d}.csv", scale * np.arange(1.0, 5.0))
        assert run("decompose", "--snapshots", d, "--mode", "blind", "--p", 1.5, "--out", tmp_path / "x.json") == 4
        assert "index 1" in caplog.text

    def test_prior_needs_input(self, tmp_path):
        assert run("decompose", "--snapshots", tmp_path, "--p", 1.5, "--out", tmp_path / "x.json") == 2

    def test_missing_snapshot_dir(self, tmp_path):
        assert run("decompose", "--snapshots", tmp_path / "none", "--mode", "blind", "--p", 1.5, "--out", tmp_path / "x.json") == 2


class TestFilter:
    @pytest.fixture
    def dec_path(self, tmp_path, pulse_csv):
        path = tmp_path / "dec.json"
        assert run("decompose", "--input", pulse_csv, "--p", 1.5, "--rank", 5, "--steps", 50, "--out", path) == 0
        return path

    def test_keep_everything_round_trip(self, tmp_path, dec_path):
        out = tmp_path / "full.csv"
        assert run("filter", "--dec", dec_path, "--keep-T", "0:inf", "--out", out) == 0
        dec = io.load_decomposition(dec_path)
        np.testing.assert_array_equal(io.read_csv(out), reconstruct_flow(dec, 0.0))

    def test_zero_gains(self, tmp_path, dec_path, caplog):
        gains = tmp_path / "h.csv"
        io.write_csv(gains, np.zeros(5))
        out = tmp_path / "z.csv"
        assert run("filter", "--dec", dec_path, "--h", gains, "--out", out) == 0
        assert not np.any(io.read_csv(out))
        assert "empty band" in caplog.text

    def test_gain_length_mismatch(self, tmp_path, dec_path):
        gains = tmp_path / "h.csv"
        io.write_csv(gains, np.ones(3))
        assert run("filter", "--dec", dec_path, "--h", gains, "--out", tmp_path / "z.csv") == 2

    def test_bad_band(self, tmp_path, dec_path):
        assert run("filter", "--dec", dec_path, "--keep-T", "1-2", "--out", tmp_path / "z.csv") == 2

    def test_denoise_recipe(self, tmp_path):
        n = 48
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        clean = np.cos(np.pi * (i + 0.5) / n) * np.cos(np.pi * (j + 0.5) / n)
        noisy = clean + 0.3 * np.random.default_rng(0).standard_normal(clean.shape)
        io.write_csv(tmp_path / "noisy.csv", noisy)
        dec = tmp_path / "dec.json"
        assert run("decompose", "--input", tmp_path / "noisy.csv", "--p", 1.5, "--rank", 5,
                   "--delta", 0.5, "--steps", 100, "--out", dec) == 0
        T = max(t for t in load_json(dec)["ext_times"] if t is not None)
        out = tmp_path / "den.pgm"
        assert run("filter", "--dec", dec, "--keep-T", f"{T * (1 - 1e-12)}:inf", "--out", out) == 0
        assert (tmp_path / "den.pgm.json").exists()
        den = io.read_pgm(out)
        peak = np.ptp(clean)
        psnr = lambda x: 10 * math.log10(peak**2 / np.mean((x - clean) ** 2))
        assert psnr(den) - psnr(noisy) >= 10


class TestParadox:
    def test_rows(self, tmp_path):
        out = tmp_path / "par.csv"
        assert run("paradox", "--p", 1, "--lambda", -1, "--levels", 8, "--out", out) == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == ["dt", "err_dmd", "err_rec_c", "bound", "mu_tilde"]
        err = [float(r["err_dmd"]) for r in rows]
        assert len(rows) == 8 and err[-1] < err[0] / 100
        assert all(float(r["err_rec_c"]) >= float(r["bound"]) for r in rows)
        assert float(rows[-1]["mu_tilde"]) == pytest.approx(limit_mu_tilde(-1, 1), rel=1e-3)


class TestBenchCommands:
    def test_noise_schema_and_seed(self, tmp_path):
        a, b, c = (tmp_path / f"{n}.csv" for n in "abc")
        assert run("bench-noise", "--trials", 30, "--out", a) == 0
        assert run("bench-noise", "--trials", 30, "--out", b) == 0
        assert run("bench-noise", "--trials", 30, "--seed", 7, "--out", c) == 0
        assert a.read_text() == b.read_text() != c.read_text()
        assert a.read_text().splitlines()[0] == ",".join(
            ["method", "snr_db", "root", "mean_re", "mean_im", "cov_xx", "cov_xy", "cov_yy",
             "ellipse_a", "ellipse_b", "ellipse_theta"]
        )

    def test_noise_free_limit(self, tmp_path):
        out = tmp_path / "n.csv"
        assert run("bench-noise", "--trials", 5, "--snr", "300", "--out", out) == 0
        with open(out) as fh:
            for row in csv.DictReader(fh):
                assert float(row["mean_re"]) == pytest.approx(float(row["root"]), abs=1e-12)

    def test_timing(self, tmp_path):
        out = tmp_path / "t.csv"
        assert run("bench-time", "--sizes", "64,256", "--steps", 5, "--rank", 2, "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "size,seconds" and len(lines) == 3


def test_version(capsys):
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["--version"])
    assert "homoflow" in capsys.readouterr().out


def test_no_command_is_usage_error():
    assert cli.main([]) == 2
