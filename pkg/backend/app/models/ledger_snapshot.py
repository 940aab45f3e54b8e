from pydantic import BaseModel


class LedgerSnapshotModel(BaseModel):
    n_f: int = 0
    n_g: int = 0
    n_i_vec: int = 0
    n_i_mat: int = 0
    batches: int = 0
    epochs: int = 0
