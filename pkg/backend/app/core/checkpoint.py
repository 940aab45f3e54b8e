"""
Model checkpoint: little-endian binary, versioned header then parameter blocks.

    magic  b"NCFE"        4 bytes
    version                u16
    dtype code             u8   (0 float64, 1 float32)
    item_fn code           u8   (0 id, 1 linear-bag, 2 mlp-bag)
    num_users, num_items   u64, u64
    dim, d_in, hidden      u32 x 3
    vocab                  u64
    block count            u32
    per block: name length u16, name utf-8, ndim u8, shape u64 x ndim, data
"""
import struct
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from app.schemas import ModelSpec

from .embeddings import EmbeddingModel
from .errors import DataError

MAGIC = b"NCFE"
VERSION = 1
_DTYPES = {"float64": 0, "float32": 1}
_ITEM_FNS = {"id": 0, "linear-bag": 1, "mlp-bag": 2}
_HEADER = struct.Struct("<4sHBBQQIIIQI")


def _vocab(model: EmbeddingModel) -> int:
    bags = getattr(model.item_fn, "bags", None)
    return 0 if bags is None else int(bags.shape[1])


def save_checkpoint(model: EmbeddingModel, path):
    spec = model.spec
    header = _HEADER.pack(
        MAGIC, VERSION, _DTYPES[spec.dtype], _ITEM_FNS[spec.item_fn],
        model.num_users, model.num_items, spec.dim, spec.d_in, spec.hidden,
        _vocab(model), len(model.params),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        for name, block in model.params.items():
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<B", block.ndim))
            fh.write(struct.pack(f"<{block.ndim}Q", *block.shape))
            fh.write(block.astype(block.dtype.newbyteorder("<"), copy=False).tobytes(order="C"))


def read_checkpoint(path):
    """Returns ``(header dict, OrderedDict of blocks)`` without building a model."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise DataError(f"{path}: truncated checkpoint header")
    (magic, version, dtype_code, fn_code, num_users, num_items,
     dim, d_in, hidden, vocab, count) = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DataError(f"{path}: not a checkpoint (bad magic {magic!r})")
    if version != VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    dtype_name = {v: k for k, v in _DTYPES.items()}[dtype_code]
    header = dict(
        version=version,
        dtype=dtype_name,
        item_fn={v: k for k, v in _ITEM_FNS.items()}[fn_code],
        num_users=num_users,
        num_items=num_items,
        dim=dim,
        d_in=d_in,
        hidden=hidden,
        vocab=vocab,
    )
    dtype = np.dtype(dtype_name).newbyteorder("<")
    offset = _HEADER.size
    blocks = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", data, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}Q", data, offset)
        offset += 8 * ndim
        size = int(np.prod(shape)) if ndim else 1
        nbytes = size * dtype.itemsize
        if offset + nbytes > len(data):
            raise DataError(f"{path}: truncated block '{name}'")
        blocks[name] = np.frombuffer(data, dtype=dtype, count=size, offset=offset).reshape(shape).copy()
        offset += nbytes
    return header, blocks


def load_checkpoint(path, item_features=None) -> EmbeddingModel:
    header, blocks = read_checkpoint(path)
    spec = ModelSpec(
        dim=header["dim"], item_fn=header["item_fn"], d_in=header["d_in"],
        hidden=header["hidden"], dtype=header["dtype"], init="zeros",
    )
    if item_features is not None and header["vocab"] and item_features.shape[1] < header["vocab"]:
        # token ids beyond the data's max id still need rows
        item_features = sp.csr_matrix(item_features, copy=True)
        item_features.resize((header["num_items"], header["vocab"]))
    model = EmbeddingModel(header["num_users"], header["num_items"], spec, item_features)
    model.load_params(blocks)
    return model
