import csv

import pytest

from cafe.cli import main
from cafe.config import format_config, parse_config, parse_entries
from cafe.errors import ConfigError
from cafe.experiments import RunConfig


class TestParseConfig:
    def test_lr(self):
        assert parse_config("lr = 0.001").lr == 0.001

    def test_precedence(self):
        assert parse_config("lr = 0.001\n", {"lr": "0.01"}).lr == 0.01
        assert parse_config("", {}).lr == RunConfig.lr

    def test_comments_and_blanks(self):
        cfg = parse_config("# header\n\nseed = 7  # trailing\nD_h=16\n")
        assert (cfg.seed, cfg.D_h) == (7, 16)

    def test_cafe_n_zero(self):
        with pytest.raises(ConfigError) as err:
            parse_config("encoder = cafe\nN = 0\n")
        assert err.value.line == 2 and "line 2" in str(err.value)

    def test_flag_blamed(self):
        with pytest.raises(ConfigError, match="--N"):
            parse_config("encoder = cafe\n", {"N": "0"})

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as err:
            parse_config("lr = 0.1\nwidth = 3\n")
        assert err.value.line == 2 and "width" in str(err.value)

    def test_unparsable(self):
        with pytest.raises(ConfigError) as err:
            parse_config("seed = three")
        assert err.value.line == 1

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("lr 0.1")

    def test_duplicate(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("lr = 0.1\nlr = 0.2")

    def test_chebyshev_needs_j(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("encoder = chebyshev\nJ = 0")

    def test_unused_counts_zeroed(self):
        cfg = parse_config("encoder = rff")
        assert (cfg.N, cfg.J) == (0, 0)

    def test_explicit_incompatible(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("encoder = rff\nN = 2")

    def test_validation_attributed(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("lr = -1")

    def test_format_roundtrip(self):
        cfg = parse_config("encoder = cafe\nM = 5\nfreqs = 1,2\nscale = 2.5")
        assert parse_config(format_config(cfg)) == cfg

    def test_entries_keep_lines(self):
        assert parse_entries("\nseed = 3")["seed"] == (3, 2)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCli:
    def test_gradcheck_default(self, capsys):
        code, out, _ = run(capsys, "gradcheck")
        assert code == 0 and "PASS" in out
        err = float(out.split("max rel. err = ")[1].split()[0])
        assert err < 1e-6

    def test_spectrum_base_12(self, capsys, tmp_path):
        code, out, _ = run(capsys, "spectrum", "--encoder", "cafe", "--freqs", "1,2", "--N", "2",
                           "--D_h", "8", "--out", str(tmp_path))
        assert code == 0
        assert "{0,1,2,3,4}" in out and "containment: PASS" in out
        assert (tmp_path / "ntk_eigenvalues.csv").exists()

    def test_config_error_exit_2(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("encoder = cafe\nN = 0\n")
        code, _, err = run(capsys, "train", "--config", str(cfg))
        assert code == 2 and "line 2" in err

    def test_missing_checkpoint_exit_2(self, capsys, tmp_path):
        code, _, _ = run(capsys, "eval", "--out", str(tmp_path))
        assert code == 2

    def test_train_then_eval(self, capsys, tmp_path):
        args = ["--task", "func1d", "--iterations", "60", "--D-h", "16", "--size", "64", "--out", str(tmp_path)]
        code, out, _ = run(capsys, "train", *args)
        assert code == 0
        for name in ("model.ckpt", "report.csv", "loss.csv", "config.txt", "prediction.csv"):
            assert (tmp_path / name).exists()
        row = next(csv.DictReader((tmp_path / "report.csv").open()))
        code, out, _ = run(capsys, "eval", "--config", str(tmp_path / "config.txt"))
        assert code == 0
        assert float(out.split("=")[1]) == pytest.approx(float(row["final_psnr_or_iou"]), abs=1e-9)

    def test_rerun_identical_artifacts(self, capsys, tmp_path):
        outs = []
        for name in ("a", "b"):
            args = ["--task", "noiseblock", "--size", "16", "--iterations", "30", "--D_h", "8",
                    "--out", str(tmp_path / name)]
            assert run(capsys, "train", *args)[0] == 0
            outs.append(tmp_path / name)
        for f in ("model.ckpt", "loss.csv", "recon.ppm"):
            assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
        strip = lambda p: [{k: v for k, v in r.items() if k != "seconds"} for r in csv.DictReader(p.open())]
        assert strip(outs[0] / "report.csv") == strip(outs[1] / "report.csv")

    def test_ablate_rows_in_axis_order(self, capsys, tmp_path):
        code, _, _ = run(capsys, "ablate", "--task", "func1d", "--size", "32", "--iterations", "20",
                         "--D_h", "8", "--axis", "N", "--values", "3,1,2", "--out", str(tmp_path))
        assert code == 0
        rows = list(csv.DictReader((tmp_path / "ablate_N.csv").open()))
        assert [r["N"] for r in rows] == ["3", "1", "2"]
        assert [r["run_id"] for r in rows] == ["N=3/seed=0", "N=1/seed=0", "N=2/seed=0"]

    def test_gradcheck_flags(self, capsys):
        code, out, _ = run(capsys, "gradcheck", "--encoder", "rff", "--M", "3", "--D_h", "4")
        assert code == 0 and "rff" in out
