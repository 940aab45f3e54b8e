import numpy as np
import pytest

from app.core.embeddings import EmbeddingModel
from app.core.errors import ConfigError, DataError
from app.core.evaluation import recall_at_m, top_m, write_recall_csv
from app.core.graph import InteractionGraph, split_holdout
from app.core.synth import synth_graph
from app.schemas import ModelSpec, SplitSpec


@pytest.fixture
def hand_model():
    model = EmbeddingModel(3, 5, ModelSpec(dim=2, init="zeros"))
    model.params["user_table"][:] = [[1, 0], [0, 1], [1, 1]]
    # item 0 outscores everything but is not in the pool
    model.params["item_table"][:] = [[10, 0], [3, 0], [3, 1], [1, 0], [2, 0]]
    return model


@pytest.fixture
def hand_test():
    pool = np.array([1, 2, 3, 4])
    return pool, InteractionGraph(3, 5, [0, 0, 1], [1, 3, 4])


def brute_force_recall(model, pool, test_links, M):
    out = {}
    for u in range(test_links.num_users):
        held = set(test_links.items_of(u).tolist())
        if not held:
            continue
        scores = {v: float(model.params["user_table"][u] @ model.embed_items([v])[0][0]) for v in pool}
        ranked = sorted(pool, key=lambda v: (-scores[v], v))[:M]
        out[u] = len(held.intersection(ranked)) / len(held)
    return out


class TestTopM:
    def test_ties_prefer_lower_column(self):
        scores = np.array([[1.0, 2.0, 2.0, 0.5]])
        np.testing.assert_array_equal(top_m(scores, 2), [[1, 2]])

    def test_m_clipped_to_width(self):
        assert top_m(np.zeros((2, 3)), 10).shape == (2, 3)


class TestRecallAtM:
    def test_hand_computed(self, hand_model, hand_test):
        pool, links = hand_test
        result = recall_at_m(hand_model, pool, links, M=2)
        np.testing.assert_array_equal(result.users, [0, 1])
        np.testing.assert_allclose(result.recall, [0.5, 0.0])
        assert result.mean == pytest.approx(0.25)

    def test_whole_pool_recalls_everything(self, hand_model, hand_test):
        pool, links = hand_test
        result = recall_at_m(hand_model, pool, links, M=4)
        np.testing.assert_allclose(result.recall, [1.0, 1.0])

    @pytest.mark.parametrize("seed", range(50))
    def test_matches_brute_force_and_monotone(self, seed):
        graph = synth_graph(8, 12, 40, seed=seed)
        holdout = split_holdout(graph, SplitSpec(test_item_fraction=0.4, seed=seed))
        model = EmbeddingModel(8, 12, ModelSpec(dim=3, init_scale=1.0), seed=seed)
        pool = holdout.test_pool.tolist()
        previous = None
        for M in range(1, len(pool) + 1):
            result = recall_at_m(model, holdout.test_pool, holdout.test_links, M)
            expected = brute_force_recall(model, pool, holdout.test_links, M)
            assert result.users.tolist() == sorted(expected)
            np.testing.assert_allclose(result.recall, [expected[u] for u in result.users])
            if previous is not None:
                assert np.all(result.recall >= previous)
            previous = result.recall

    def test_invalid_inputs(self, hand_model, hand_test):
        pool, links = hand_test
        with pytest.raises(ConfigError):
            recall_at_m(hand_model, pool, links, M=0)
        with pytest.raises(DataError):
            recall_at_m(hand_model, [], links, M=1)


def test_recall_csv_has_mean_row(tmp_path, hand_model, hand_test):
    pool, links = hand_test
    path = tmp_path / "recall.csv"
    write_recall_csv(path, recall_at_m(hand_model, pool, links, M=2))
    lines = path.read_text().splitlines()
    assert lines[0] == "user_id,recall"
    assert lines[1:] == ["0,0.5", "1,0.0", "mean,0.25"]
