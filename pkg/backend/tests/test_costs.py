import numpy as np
import pytest

from app.core.costs import composition, cost_sim, cost_table
from app.core.embeddings import EmbeddingModel
from app.core.errors import ConfigError, ShapeMismatchError
from app.core.ledger import CostLedger
from app.core.samplers import assemble_negative
from app.schemas import ModelSpec


class TestComposition:
    def test_reference_rows(self):
        assert composition("iid", 512, 10, 4) == (5632, 5632, 5632, "vec", 5120)
        assert composition("negative", 512, 10, 4) == (512, 5632, 5632, "vec", 5120)
        assert composition("stratified", 512, 10, 4) == (5632, 128, 5632, "vec", 5120)
        assert composition("neg-sharing", 512, 10, 4) == (512, 512, 262144, "mat", 261632)
        assert composition("stratified-ns", 512, 10, 4) == (512, 128, 65536, "mat", 65024)

    @pytest.mark.parametrize("strategy", ["stratified", "stratified-ns"])
    def test_s_must_divide_b(self, strategy):
        with pytest.raises(ConfigError) as info:
            composition(strategy, 10, 1, 4)
        assert info.value.key == "sampler.s"

    def test_unknown_strategy(self):
        with pytest.raises(ConfigError):
            composition("uniform", 8, 1, 1)


class TestCostTable:
    def test_item_evaluation_speedups(self):
        rows = {r.strategy: r for r in cost_table(512, 10, 4, 1.0, 1.0, 0.0)}
        assert rows["iid"].ng_speedup == 1.0
        assert rows["negative"].ng_speedup == 1.0
        assert rows["neg-sharing"].ng_speedup == 11.0
        assert rows["stratified"].ng_speedup == 44.0
        assert rows["stratified-ns"].ng_speedup == 44.0

    def test_costs_weight_counts(self):
        assert cost_sim(4, 2, 2, 1.0, 10.0, 0.5, "negative") == 4 + 10 * 12 + 0.5 * 12
        rows = cost_table(4, 2, 2, 0.0, 1.0, 0.0, strategies=["neg-sharing"])
        assert [r.cost for r in rows] == [4.0]

    def test_negative_unit_cost(self):
        with pytest.raises(ConfigError):
            cost_sim(4, 1, 1, -1.0, 1.0, 1.0, "iid")


class TestLedger:
    def test_activation_counts_checked(self, tiny_graph):
        model = EmbeddingModel(3, 4, ModelSpec(dim=2))
        batch = assemble_negative([0, 1], [0, 1], [2, 3], 1)
        acts = model.forward(batch.users, batch.items)
        ledger = CostLedger()
        ledger.record(batch, acts)
        short = model.forward(batch.users[:1], batch.items)
        with pytest.raises(ShapeMismatchError):
            ledger.record(batch, short)
        assert ledger.batches == 1

    def test_history_and_snapshot(self):
        ledger = CostLedger(keep_history=True)
        batch = assemble_negative([0], [1], [2, 3], 2)
        ledger.record(batch)
        ledger.end_epoch()
        snap = ledger.snapshot()
        assert (snap.n_f, snap.n_g, snap.n_i_vec, snap.epochs) == (1, 3, 3, 1)
        assert ledger.history[0].negatives == 2
        assert CostLedger().mean_n_g() is None
        np.testing.assert_equal(ledger.mean_n_g(), 3.0)
