import json

import pytest
from click.testing import CliRunner

from app.core.errors import ConfigError
from app.main import cli
from app.routes.common import parse_overrides

SMALL_SYNTH = [
    "--synth.num_users=30",
    "--synth.num_items=40",
    "--synth.target_links=300",
    "--synth.vocab=20",
    "--synth.mean_bag=4",
    "--synth.seed=5",
]
SMALL_TRAIN = [
    "--sampler.b=32",
    "--sampler.k=2",
    "--model.dim=4",
    "--train.epochs=2",
    "--eval.M=5",
]


def run(*args):
    return CliRunner().invoke(cli, [str(a) for a in args], catch_exceptions=False)


@pytest.fixture(scope="module")
def data_conf(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    result = run("synth", f"--output={out}", *SMALL_SYNTH)
    assert result.exit_code == 0, result.output
    return out / "data.conf"


class TestParseOverrides:
    def test_both_forms(self):
        assert parse_overrides(["--a.b=1", "--c.d", "2"]) == {"a.b": "1", "c.d": "2"}

    def test_value_with_equals(self):
        assert parse_overrides(["--data.links=a=b.tsv"]) == {"data.links": "a=b.tsv"}

    @pytest.mark.parametrize("args", [["stray"], ["--a.b"], ["--a.b", "--c=1"], ["--"]])
    def test_rejected(self, args):
        with pytest.raises(ConfigError):
            parse_overrides(args)


class TestErrors:
    def test_missing_links(self, tmp_path):
        result = run("train", f"--output={tmp_path}")
        assert result.exit_code == 2
        assert "data.links" in result.output

    def test_pairwise_with_stratified(self, tmp_path):
        result = run(
            "train", f"--output={tmp_path}", "--sampler.strategy=stratified", "--loss.kind=log-pair"
        )
        assert result.exit_code == 2
        assert "sampler.strategy" in result.output

    def test_unknown_key(self, tmp_path):
        result = run("train", f"--output={tmp_path}", "--sampler.bogus=1")
        assert result.exit_code == 2
        assert "sampler.bogus" in result.output

    def test_missing_config_file(self, tmp_path):
        result = run("train", "--config", tmp_path / "nope.conf")
        assert result.exit_code == 2

    def test_default_gradcheck_passes(self):
        result = run("gradcheck")
        assert result.exit_code == 0, result.output
        assert "all 48 checks" in result.output

    def test_gradcheck_fault_exits_3(self):
        result = run(
            "gradcheck", "--item-fns=id", "--losses=sg", "--strategies=negative", "--fault=user_table"
        )
        assert result.exit_code == 3
        assert "error:" in result.output


class TestCostSim:
    def test_table(self, tmp_path):
        csv_path = tmp_path / "costs.csv"
        result = run(
            "cost-sim", "--sampler.b=512", "--sampler.k=10", "--sampler.s=4", "--csv", csv_path
        )
        assert result.exit_code == 0, result.output
        lines = result.output.splitlines()
        sns = next(line for line in lines if line.startswith("stratified-ns"))
        assert "65536" in sns and "44" in sns
        rows = csv_path.read_text().splitlines()
        assert rows[0].startswith("strategy,n_f,n_g,n_i")
        assert len(rows) == 6


class TestDataCommands:
    def test_synth_writes_loadable_config(self, data_conf):
        text = data_conf.read_text()
        assert "data.num_users=30" in text
        result = run("ingest", "--config", data_conf)
        assert result.exit_code == 0, result.output
        assert "num_users: 30" in result.output
        assert "degree_slope:" in result.output

    def test_split(self, tmp_path, data_conf):
        result = run("split", "--config", data_conf, f"--output={tmp_path}")
        assert result.exit_code == 0, result.output
        pool = (tmp_path / "test_pool.txt").read_text().split()
        assert len(pool) == 8
        assert (tmp_path / "train.tsv").is_file()
        assert (tmp_path / "features.tsv").is_file()
        assert "split.test_item_fraction=0.2" in (tmp_path / "config.resolved").read_text()


class TestTrainAndEval:
    def test_train_then_eval(self, tmp_path, data_conf):
        run_dir = tmp_path / "run"
        result = run("train", "--config", data_conf, f"--output={run_dir}", *SMALL_TRAIN)
        assert result.exit_code == 0, result.output
        for name in ("trace.jsonl", "timing.jsonl", "summary.csv", "model.ckpt", "config.resolved"):
            assert (run_dir / name).is_file()
        records = [json.loads(line) for line in (run_dir / "trace.jsonl").read_text().splitlines()]
        assert [r["epoch"] for r in records] == [1, 2]
        assert "recall@5" in result.output

        eval_dir = tmp_path / "eval"
        result = run(
            "eval", "--config", data_conf, "--checkpoint", run_dir, f"--output={eval_dir}", "--eval.M=5"
        )
        assert result.exit_code == 0, result.output
        last = (eval_dir / "recall.csv").read_text().splitlines()[-1]
        assert last.startswith("mean,")
        assert float(last.split(",")[1]) == pytest.approx(records[-1]["recall"])

    def test_repeated_runs_are_byte_identical(self, tmp_path, data_conf):
        for name in ("a", "b"):
            result = run(
                "train", "--config", data_conf, f"--output={tmp_path / name}",
                "--sampler.strategy=neg-sharing", *SMALL_TRAIN,
            )
            assert result.exit_code == 0, result.output
        assert (tmp_path / "a" / "trace.jsonl").read_bytes() == (tmp_path / "b" / "trace.jsonl").read_bytes()

    def test_missing_checkpoint(self, tmp_path, data_conf):
        result = run("eval", "--config", data_conf, "--checkpoint", tmp_path / "none")
        assert result.exit_code == 2
        assert "checkpoint" in result.output


class TestSampleAudit:
    def test_dump_and_chi_square(self, tmp_path, data_conf):
        result = run(
            "sample-audit", "--config", data_conf, f"--output={tmp_path}",
            "--sampler.strategy=negative", "--sampler.b=16", "--sampler.k=3",
            "--batches=50", "--chi2",
        )
        assert result.exit_code == 0, result.output
        lines = (tmp_path / "audit.jsonl").read_text().splitlines()
        assert len(lines) == 50
        first = json.loads(lines[0])
        assert first["strategy"] == "negative" and len(first["neg_item_slot"]) == 48
        assert "chi2: statistic=" in result.output

    def test_dense_strategy_dump(self, tmp_path, data_conf):
        result = run(
            "sample-audit", "--config", data_conf, f"--output={tmp_path}",
            "--sampler.strategy=stratified-ns", "--sampler.b=16", "--sampler.s=4", "--batches=3",
        )
        assert result.exit_code == 0, result.output
        record = json.loads((tmp_path / "audit.jsonl").read_text().splitlines()[0])
        assert record["neg_item_slot"] is None
        assert record["n_g"] <= 4
