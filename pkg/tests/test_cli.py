import csv
import dataclasses
import json

import mpmath as mp
import pytest

from minkmoments.cli import main
from minkmoments.engine import load_checkpoint, save_checkpoint


@pytest.fixture(scope="module")
def ckpt_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("ckpt")


@pytest.fixture(scope="module")
def plain_ckpt(plain400, ckpt_dir):
    path = ckpt_dir / "plain400.json"
    save_checkpoint(plain400, path)
    return str(path)


@pytest.fixture(scope="module")
def small_ckpt(small64, ckpt_dir):
    path = ckpt_dir / "small64.json"
    save_checkpoint(small64, path)
    return str(path)


@pytest.fixture(scope="module")
def ref_ckpt(reference, ckpt_dir):
    path = ckpt_dir / "reference.json"
    save_checkpoint(reference, path)
    return str(path)


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


class TestCompute:
    def test_small_run(self, tmp_path, capsys):
        out = tmp_path / "m.json"
        code, summary = run_json(capsys, ["compute", "--order", "32", "--digits", "20", "--out", str(out)])
        assert code == 0
        assert summary["converged"] and summary["checkpoint"] == str(out)
        mv = load_checkpoint(out)
        assert mv.N == 32 and mv.values[0] == 1
        assert abs(mp.mpf(summary["m_1"]) - mp.mpf(1) / 2) < 1e-19

    def test_bootstrap_reports_bound(self, tmp_path, capsys):
        out = tmp_path / "b.json"
        argv = ["compute", "--order", "40", "--digits", "20", "--backend", "bootstrap", "--ext", "80",
                "--model", "Shalf", "--out", str(out)]
        code, summary = run_json(capsys, argv)
        assert code == 0
        assert summary["checking_order"] == 60
        assert 0 < mp.mpf(summary["error_bound"]) < 1e-3

    def test_nonconvergence_exit(self, tmp_path, capsys):
        code = main(["compute", "--order", "32", "--digits", "20", "--iters", "2", "--out", str(tmp_path / "x.json")])
        assert code == 3
        assert "non-convergence" in capsys.readouterr().err

    def test_ext_needs_bootstrap(self, capsys):
        assert main(["compute", "--order", "16", "--digits", "10", "--ext", "40"]) == 1


class TestVerify:
    @pytest.mark.parametrize("suite", ["identities", "spectral"])
    def test_suites_pass(self, capsys, plain_ckpt, suite):
        code, payload = run_json(capsys, ["verify", suite, "--checkpoint", plain_ckpt])
        assert code == 0 and payload["result"]["passed"]

    def test_oracle(self, capsys, small_ckpt):
        code, payload = run_json(capsys, ["verify", "oracle", "--level", "14", "--checkpoint", small_ckpt])
        assert code == 0
        assert payload["result"]["orders"] == 65 and payload["result"]["failures"] == []

    def test_asymptotic(self, capsys, ref_ckpt):
        code, payload = run_json(capsys, ["verify", "asymptotic", "--checkpoint", ref_ckpt])
        assert code == 0 and payload["result"]["range"] == [250, 500]

    def test_failure_exit_code(self, capsys, plain400, tmp_path):
        bent = dataclasses.replace(plain400, values=[plain400.values[0]] + [v * (1 + mp.mpf("1e-6")) for v in plain400.values[1:]])
        path = tmp_path / "bent.json"
        save_checkpoint(bent, path)
        code, payload = run_json(capsys, ["verify", "spectral", "--checkpoint", str(path)])
        assert code == 2
        assert payload["result"]["passed"] is False

    def test_bad_range(self, capsys, ref_ckpt):
        assert main(["verify", "asymptotic", "--range", "10:900", "--checkpoint", ref_ckpt]) == 1
        assert main(["verify", "asymptotic", "--range", "bad", "--checkpoint", ref_ckpt]) == 1


class TestOutputs:
    def test_asympt_json(self, capsys, ref_ckpt):
        code, payload = run_json(capsys, ["asympt", "--checkpoint", ref_ckpt])
        assert code == 0
        assert abs(mp.mpf(payload["fit"]["a"]) - mp.mpf("-0.5219010563")) < 0.05
        assert payload["range"] == [100, 400]

    def test_asympt_csv(self, capsys, ref_ckpt, tmp_path):
        path = tmp_path / "t.csv"
        code, payload = run_json(capsys, ["asympt", "--model", "improved", "--range", "100:120",
                                          "--csv", str(path), "--checkpoint", ref_ckpt])
        assert code == 0 and payload["csv"] == str(path)
        rows = list(csv.reader(path.open()))
        assert rows[0][:4] == ["n", "sqrt_n", "m_n", "model"]
        assert len(rows) == 22
        for r in rows[1:]:
            assert abs(mp.mpf(r[3]) / mp.mpf(r[2]) - 1) < 1e-6

    def test_figure1_deterministic(self, capsys, ref_ckpt, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["figure1", "--checkpoint", ref_ckpt, "--out", str(a)]) == 0
        assert main(["figure1", "--checkpoint", ref_ckpt, "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        rows = list(csv.reader(a.open()))
        assert rows[0] == ["n", "sqrt_n", "E0", "Ehalf", "Eint"]
        assert len(rows) == 302
        assert int(rows[1][0]) == 100 and int(rows[-1][0]) == 400

    def test_figure1_range_outside_checkpoint(self, small_ckpt):
        assert main(["figure1", "--checkpoint", small_ckpt]) == 1

    def test_negative(self, capsys, plain_ckpt):
        code, payload = run_json(capsys, ["negative", "--n", "4", "--checkpoint", plain_ckpt])
        assert code == 0
        assert [e["n"] for e in payload["negative_moments"]] == [1, 2, 3, 4]
        assert abs(mp.mpf(payload["negative_moments"][0]["m_neg"]) - mp.mpf(5) / 2) < 1e-30
        assert payload["identities"]["passed"]

    def test_negative_bad_order(self, small_ckpt):
        assert main(["negative", "--n", "0", "--checkpoint", small_ckpt]) == 1

    def test_mz_real_and_complex(self, capsys, plain_ckpt):
        code, payload = run_json(capsys, ["mz", "--z", "2", "--checkpoint", plain_ckpt])
        assert code == 0 and payload["route"] == "stored"
        code, payload = run_json(capsys, ["mz", "--z", "0.5+1j", "--checkpoint", plain_ckpt])
        assert code == 0 and "j" in payload["value"]

    def test_mz_taylor(self, capsys, plain_ckpt):
        code, payload = run_json(capsys, ["mz", "--taylor", "3", "--checkpoint", plain_ckpt])
        assert code == 0 and len(payload["coefficients"]) == 4

    def test_mz_argument_errors(self, plain_ckpt):
        assert main(["mz", "--checkpoint", plain_ckpt]) == 1
        assert main(["mz", "--taylor", "13", "--checkpoint", plain_ckpt]) == 1
        assert main(["mz", "--z", "abc", "--checkpoint", plain_ckpt]) == 1

    def test_mz_precision_limit(self, capsys, small_ckpt):
        assert main(["mz", "--z", "-80", "--checkpoint", small_ckpt]) == 4
        assert "resource limit" in capsys.readouterr().err

    def test_stern_mean(self, capsys, plain_ckpt):
        code, payload = run_json(capsys, ["stern-mean", "--levels", "16", "--checkpoint", plain_ckpt])
        assert code == 0 and payload["levels"] == 16
        assert abs(float(payload["beta"]) + 0.0852) < 1e-3

    def test_stern_mean_levels(self):
        assert main(["stern-mean", "--levels", "3"]) == 1


class TestParser:
    def test_unknown_command(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1

    def test_missing_checkpoint(self, tmp_path):
        assert main(["verify", "identities", "--checkpoint", str(tmp_path / "none.json")]) == 1
