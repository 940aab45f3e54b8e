import numpy as np
import pytest

from app.core.checkpoint import MAGIC, load_checkpoint, read_checkpoint, save_checkpoint
from app.core.embeddings import EmbeddingModel
from app.core.errors import DataError, ShapeMismatchError
from app.schemas import ModelSpec


@pytest.mark.parametrize("item_fn", ["id", "linear-bag", "mlp-bag"])
@pytest.mark.parametrize("dtype", ["float64", "float32"])
def test_save_then_load_restores_model(tmp_path, tiny_bag_graph, item_fn, dtype):
    spec = ModelSpec(dim=3, item_fn=item_fn, d_in=4, hidden=6, init_scale=0.5, dtype=dtype)
    model = EmbeddingModel(3, 4, spec, tiny_bag_graph.item_features, seed=2)
    path = tmp_path / "model.ckpt"
    save_checkpoint(model, path)

    loaded = load_checkpoint(path, tiny_bag_graph.item_features)
    assert list(loaded.params) == list(model.params)
    for name, block in model.params.items():
        assert loaded.params[name].dtype == block.dtype
        np.testing.assert_array_equal(loaded.params[name], block)
    assert (loaded.spec.item_fn, loaded.spec.dim, loaded.spec.dtype) == (item_fn, 3, dtype)
    np.testing.assert_array_equal(loaded.embed_items([0, 3])[0], model.embed_items([0, 3])[0])


def test_header_fields(tmp_path, tiny_graph):
    model = EmbeddingModel(3, 4, ModelSpec(dim=2), seed=0)
    save_checkpoint(model, tmp_path / "m.ckpt")
    header, blocks = read_checkpoint(tmp_path / "m.ckpt")
    assert (tmp_path / "m.ckpt").read_bytes()[:4] == MAGIC
    assert header["num_users"] == 3 and header["num_items"] == 4
    assert header["vocab"] == 0
    assert blocks["item_table"].shape == (4, 2)


def test_bad_magic(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"XXXX" + bytes(64))
    with pytest.raises(DataError, match="bad magic"):
        read_checkpoint(path)


def test_truncated(tmp_path, tiny_graph):
    path = tmp_path / "m.ckpt"
    save_checkpoint(EmbeddingModel(3, 4, ModelSpec(dim=2)), path)
    data = path.read_bytes()
    path.write_bytes(data[:10])
    with pytest.raises(DataError):
        read_checkpoint(path)
    path.write_bytes(data[:-8])
    with pytest.raises(DataError, match="truncated block"):
        read_checkpoint(path)


def test_wrong_shape_rejected(tmp_path, tiny_graph):
    path = tmp_path / "m.ckpt"
    save_checkpoint(EmbeddingModel(3, 4, ModelSpec(dim=2)), path)
    header, blocks = read_checkpoint(path)
    other = EmbeddingModel(5, 4, ModelSpec(dim=2))
    with pytest.raises(ShapeMismatchError):
        other.load_params(blocks)
