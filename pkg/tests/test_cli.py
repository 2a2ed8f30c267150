import math
import subprocess
import sys

import numpy as np
import pytest

from mdsense.cli import EXIT_DOMAIN, EXIT_IO, EXIT_OK, main, read_iq, write_iq
from mdsense.mcleish import McLeishParams, sample_ccs


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def kv(text):
    return dict(line.split(" = ", 1) for line in text.strip().splitlines())


class TestThreshold:
    def test_values(self, capsys):
        code, out, _ = run(capsys, "threshold", "--v", "1", "--pf", "0.1")
        assert code == EXIT_OK
        assert float(kv(out)["lambda_star"]) == pytest.approx(math.sqrt(154.75) * 1.2815515655446004, rel=1e-12)
        _, out, _ = run(capsys, "threshold", "--v", "1", "--pf", "0.5")
        assert abs(float(kv(out)["lambda_star"])) <= 1e-12
        _, out, _ = run(capsys, "threshold", "--v", "1e9", "--pf", "0.1")
        assert float(kv(out)["lambda_star"]) == pytest.approx(2.5631, abs=1e-4)

    def test_gaussian_keyword(self, capsys):
        _, out, _ = run(capsys, "threshold", "--v", "inf")
        assert float(kv(out)["sigma_h0"]) == 2.0

    @pytest.mark.parametrize("argv", [("--v", "1", "--pf", "1.5"), ("--v", "-1"), ("--v", "1", "--pf", "0")])
    def test_domain_errors(self, capsys, argv):
        code, _, err = run(capsys, "threshold", *argv)
        assert code == EXIT_DOMAIN
        assert "mdsense:" in err

    def test_parse_error_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["threshold"])
        assert exc.value.code == 2

    def test_console_script_module(self):
        res = subprocess.run([sys.executable, "-m", "mdsense.cli", "threshold", "--v", "2"],
                             capture_output=True, text=True)
        assert res.returncode == 0
        assert "lambda_star" in res.stdout


class TestConfig:
    def test_file_values_and_override(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# operating point\nv = 1e9\npf = 0.5\n")
        _, out, _ = run(capsys, "threshold", "--config", str(cfg))
        assert abs(float(kv(out)["lambda_star"])) <= 1e-12
        _, out, _ = run(capsys, "threshold", "--config", str(cfg), "--pf", "0.1")
        assert float(kv(out)["lambda_star"]) == pytest.approx(2.5631, abs=1e-4)

    def test_bad_config(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("v 1\n")
        code, _, _ = run(capsys, "threshold", "--config", str(cfg))
        assert code == EXIT_IO

    def test_missing_config(self, capsys, tmp_path):
        code, _, _ = run(capsys, "threshold", "--v", "1", "--config", str(tmp_path / "none.cfg"))
        assert code == EXIT_IO


class TestIq:
    @pytest.mark.parametrize("text", [False, True])
    def test_round_trip(self, tmp_path, text):
        x = sample_ccs(McLeishParams(1.0, 2.0), 257, 1)
        path = tmp_path / "x.iq"
        write_iq(path, x, text=text)
        back = read_iq(path, text=text)
        assert back.shape == x.shape
        assert np.allclose(back, x.astype(np.complex64), rtol=0, atol=1e-6 if text else 0)

    def test_binary_layout(self, tmp_path):
        path = tmp_path / "x.iq"
        write_iq(path, np.array([1 + 2j, -3 + 0.5j]))
        assert np.array_equal(np.fromfile(path, "<f4"), np.array([1, 2, -3, 0.5], np.float32))

    def test_truncated(self, capsys, tmp_path):
        path = tmp_path / "bad.iq"
        path.write_bytes(b"\x00" * 12)
        code, _, _ = run(capsys, "fit-noise", "--in", str(path))
        assert code == EXIT_IO

    def test_missing_input(self, capsys, tmp_path):
        code, _, _ = run(capsys, "fit-noise", "--in", str(tmp_path / "nope.iq"))
        assert code == EXIT_IO

    def test_gen_needs_out(self, capsys):
        code, _, _ = run(capsys, "gen-noise", "--n", "10")
        assert code == EXIT_DOMAIN

    @pytest.mark.slow
    def test_generate_and_fit(self, capsys, tmp_path):
        path = tmp_path / "noise.iq"
        assert run(capsys, "gen-noise", "--v", "1", "--n", "10000000", "--seed", "5", "--out", str(path))[0] == 0
        code, out, _ = run(capsys, "fit-noise", "--in", str(path))
        fit = kv(out)
        assert code == EXIT_OK
        assert float(fit["v"]) == pytest.approx(1.0, rel=0.10)
        assert float(fit["sigma2"]) == pytest.approx(1.0, rel=0.02)
        assert fit["class"] == "mcleish"

    def test_gaussian_file_sentinel(self, capsys, tmp_path):
        path = tmp_path / "g.csv"
        write_iq(path, np.exp(1j * np.linspace(0, 9, 400)), text=True)
        _, out, _ = run(capsys, "fit-noise", "--in", str(path), "--text")
        assert kv(out)["v"] == "inf"
        assert kv(out)["class"] == "gaussian_or_lighter"

    def test_zero_file_is_domain_error(self, capsys, tmp_path):
        path = tmp_path / "z.iq"
        write_iq(path, np.zeros(16, complex))
        code, _, _ = run(capsys, "fit-noise", "--in", str(path))
        assert code == EXIT_DOMAIN


class TestCsv:
    def test_analytic_columns(self, capsys):
        code, out, _ = run(capsys, "analytic", "--v", "1", "--sweep", "pf", "--grid", "0.05,0.1,0.5")
        assert code == EXIT_OK
        lines = [ln for ln in out.splitlines() if not ln.startswith("#")]
        header = lines[0].split(",")
        rows = [dict(zip(header, map(float, ln.split(",")))) for ln in lines[1:]]
        assert len(rows) == 3
        for r in rows:
            assert abs(r["pf_md"] - r["pf_target"]) <= 1e-10
            assert abs(r["pf_ed"] - r["pf_target"]) <= 1e-10
            assert 0 <= r["pd_md"] <= 1 and 0 <= r["pd_ed"] <= 1

    def test_analytic_snr_sweep(self, capsys):
        _, out, _ = run(capsys, "analytic", "--sweep", "snr", "--grid", "-10:0:5", "--mod", "qam16")
        lines = [ln for ln in out.splitlines() if not ln.startswith("#")]
        assert [float(ln.split(",")[0]) for ln in lines[1:]] == [-10.0, -5.0, 0.0]

    def test_bad_grid(self, capsys):
        with pytest.raises(SystemExit):
            main(["roc", "--grid", "a,b"])

    def test_roc_header_and_schema(self, capsys, tmp_path):
        out = tmp_path / "roc.csv"
        code, _, _ = run(capsys, "roc", "--v", "1", "--n", "200", "--trials", "100", "--seed", "4",
                         "--grid", "0.1,0.5", "--out", str(out))
        assert code == EXIT_OK
        text = out.read_text().splitlines()
        assert text[0].startswith("# mdsense ")
        assert any(ln.startswith("# command: roc") for ln in text)
        assert "# seed: 4" in text and "# n: 200" in text and "# trials: 100" in text
        body = [ln for ln in text if not ln.startswith("#")]
        assert body[0] == "x,pd,pf_empirical,ci_halfwidth"
        assert len(body) == 3

    @pytest.mark.parametrize("cmd", ["roc", "pd-snr"])
    def test_replay_byte_identical(self, capsys, tmp_path, cmd):
        first = tmp_path / "a.csv"
        again = tmp_path / "b.csv"
        grid = "0.05,0.2" if cmd == "roc" else "-10,-5"
        cfg = tmp_path / "c.cfg"
        cfg.write_text("trials = 60\nn = 150\nmod = qam16\n")
        assert run(capsys, cmd, "--config", str(cfg), "--seed", "9", "--grid", grid, "--out", str(first))[0] == 0
        assert run(capsys, "replay", str(first), "--out", str(again))[0] == 0
        assert first.read_bytes() == again.read_bytes()

    def test_identical_invocations(self, capsys):
        argv = ("pd-snr", "--n", "100", "--trials", "50", "--grid", "-5,0", "--detector", "ed")
        assert run(capsys, *argv)[1] == run(capsys, *argv)[1]

    def test_replay_without_header(self, capsys, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("x,pd\n1,2\n")
        assert run(capsys, "replay", str(path))[0] == EXIT_IO
