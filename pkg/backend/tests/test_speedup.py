import numpy as np
import pytest

from app.core.graph import split_holdout
from app.core.speedup import k_sweep, speedup_report, speedup_rows
from app.core.synth import synth_graph
from app.core.tables import write_csv
from app.core.trainer import EvalSet, RunTrace
from app.models import EpochRecordModel, LedgerSnapshotModel, TimingRecordModel
from app.schemas import SplitSpec, TrainConfig


def _trace(strategy, losses, wall_seconds, batches_per_epoch=10):
    trace = RunTrace(strategy=strategy)
    for epoch, loss in enumerate(losses, start=1):
        batches = epoch * batches_per_epoch
        trace.records.append(EpochRecordModel(
            epoch=epoch, batches=batches, train_loss=loss, max_grad_norm=1.0,
            ledger=LedgerSnapshotModel(batches=batches),
        ))
        trace.timings.append(TimingRecordModel(
            epoch=epoch, batches=batches, wall_seconds=wall_seconds * epoch / len(losses),
            seconds_per_batch=0.0, dtype="float64",
        ))
    return trace


@pytest.fixture
def traces():
    return {
        "iid": (_trace("iid", [1.0, 0.6, 0.5], 3.0), 100.0),
        "negative": (_trace("negative", [0.8, 0.5, 0.4], 1.5), 50.0),
        "neg-sharing": (_trace("neg-sharing", [0.9, 0.7, 0.6], 0.3), 10.0),
    }


class TestRunTrace:
    def test_batches_to_reach(self, traces):
        trace = traces["negative"][0]
        assert trace.batches_to_reach(0.5) == 20
        assert trace.batches_to_reach(0.1) is None
        assert trace.min_loss() == 0.4
        assert trace.seconds_per_batch == pytest.approx(0.05)


class TestSpeedupRows:
    def test_reference_is_iid_minimum(self, traces):
        rows = {r.strategy: r for r in speedup_rows(traces, ["iid", "negative", "neg-sharing"])}
        iid = rows["iid"]
        assert (iid.per_iteration_speedup, iid.iteration_speedup, iid.total_speedup) == (1.0, 1.0, 1.0)
        assert iid.iterations_to_reference == 30

        neg = rows["negative"]
        assert neg.iterations_to_reference == 20
        assert neg.per_iteration_speedup == pytest.approx(2.0)
        assert neg.iteration_speedup == pytest.approx(1.5)
        assert neg.total_speedup == pytest.approx(3.0)
        assert neg.analytic_ng_ratio == 2.0

    def test_unreached_reference(self, traces):
        (row,) = speedup_rows(traces, ["neg-sharing"])
        assert not row.reached_reference
        assert row.iterations_to_reference == float("inf")
        assert row.iteration_speedup == 0.0
        assert row.total_speedup == 0.0
        assert row.analytic_ng_ratio == 10.0
        assert row.min_loss == 0.6

    def test_unreached_reference_written_as_inf(self, tmp_path, traces):
        path = tmp_path / "speedup.csv"
        write_csv(path, speedup_rows(traces, ["negative", "neg-sharing"]))
        header, reached, unreached = path.read_text().splitlines()
        column = header.split(",").index("iterations_to_reference")
        assert reached.split(",")[column] == "20"
        assert unreached.split(",")[column] == "inf"

    def test_rows_follow_requested_order(self, traces):
        rows = speedup_rows(traces, ["neg-sharing", "negative"])
        assert [r.strategy for r in rows] == ["neg-sharing", "negative"]


@pytest.mark.slow
class TestEndToEnd:
    @pytest.fixture(scope="class")
    def data(self):
        graph = synth_graph(40, 60, 500, seed=2, vocab=30, mean_bag=5.0)
        holdout = split_holdout(graph, SplitSpec(test_item_fraction=0.2, seed=0))
        return holdout.train, EvalSet(holdout.test_pool, holdout.test_links)

    def test_report(self, data):
        g_train, test = data
        cfg = TrainConfig(
            sampler={"b": 16, "k": 2, "s": 4}, model={"dim": 4},
            train={"epochs": 3, "eval_every": 0}, loss={"lam": 4.0},
        )
        rows = speedup_report(g_train, test, cfg, ["negative", "neg-sharing", "stratified-ns"])
        assert [r.strategy for r in rows] == ["negative", "neg-sharing", "stratified-ns"]
        assert all(r.seconds_per_iteration > 0 for r in rows)
        by_name = {r.strategy: r for r in rows}
        assert by_name["neg-sharing"].analytic_ng_ratio > 1.0

    def test_k_sweep(self, data):
        g_train, test = data
        cfg = TrainConfig(sampler={"b": 16}, model={"dim": 4}, train={"epochs": 2})
        rows = k_sweep(g_train, test, cfg, ks=[1, 3], seeds=[0, 1])
        assert [(r.k, r.seed) for r in rows] == [(1, 0), (1, 1), (3, 0), (3, 1)]
        assert all(0.0 <= r.recall <= 1.0 for r in rows)


@pytest.mark.slow
class TestDeskScale:
    """Directional checks on the 200 x 300 planted-factor benchmark."""

    SEEDS = (0, 1, 2)

    @staticmethod
    def _data(seed):
        graph = synth_graph(200, 300, 6000, seed=seed)
        holdout = split_holdout(graph, SplitSpec(test_item_fraction=0.2, seed=seed))
        return holdout.train, EvalSet(holdout.test_pool, holdout.test_links)

    def test_grid_strategies_beat_iid_when_item_function_dominates(self):
        by_strategy = {"stratified": [], "stratified-ns": [], "neg-sharing": []}
        for seed in self.SEEDS:
            g_train, test = self._data(seed)
            cfg = TrainConfig(
                model={"item_fn": "mlp-bag", "hidden": 256},
                train={"epochs": 30, "eval_every": 0, "g_cost_multiplier": 8},
                seed=seed,
            )
            for row in speedup_report(g_train, test, cfg, list(by_strategy)):
                by_strategy[row.strategy].append(row)

        assert np.median([r.total_speedup for r in by_strategy["stratified"]]) >= 3.0
        assert np.median([r.total_speedup for r in by_strategy["stratified-ns"]]) >= 3.0
        # iteration_speedup = IID batches / strategy batches
        assert np.median([r.iteration_speedup for r in by_strategy["neg-sharing"]]) >= 1 / 0.7

    def test_more_negatives_give_diminishing_returns(self):
        ks = (1, 5, 10)
        recall = {}
        for seed in self.SEEDS:
            g_train, test = self._data(seed)
            cfg = TrainConfig(train={"epochs": 10}, eval={"M": 50}, seed=seed)
            for row in k_sweep(g_train, test, cfg, ks=ks, seeds=[seed]):
                recall[row.k, seed] = row.recall

        means = {k: np.mean([recall[k, s] for s in self.SEEDS]) for k in ks}
        assert means[10] >= means[1]
        flattening = sum(
            recall[10, s] - recall[5, s] < recall[5, s] - recall[1, s] for s in self.SEEDS
        )
        assert flattening >= 2
