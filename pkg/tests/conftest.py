import numpy as np
import pytest
import torch
from PIL import Image

from outpaint.config import TrainConfig
from outpaint.synthetic import write_synthetic_dataset
from outpaint.training import init_state, save_checkpoint


@pytest.fixture(scope="session")
def scenes4(tmp_path_factory):
    root = tmp_path_factory.mktemp("scenes4")
    write_synthetic_dataset(root, 4, seed=11)
    return root


@pytest.fixture(scope="session")
def untrained_ckpt(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "init.ckpt"
    save_checkpoint(init_state(TrainConfig(seed=3, variant="residual")), path)
    return path


@pytest.fixture
def write_png(tmp_path):
    def _write(name, array, mode=None):
        path = tmp_path / name
        Image.fromarray(np.asarray(array, dtype=np.uint8), mode=mode).save(path)
        return path
    return _write


@pytest.fixture
def batch1(scenes4):
    from outpaint.data import DatasetManifest, iterate_batches
    manifest = DatasetManifest.scan(scenes4)
    return next(iterate_batches(manifest, 1, 0, 1, shuffle=False))


def params_equal(a: torch.nn.Module, b: torch.nn.Module) -> bool:
    sa, sb = a.state_dict(), b.state_dict()
    return sa.keys() == sb.keys() and all(torch.equal(sa[k], sb[k]) for k in sa)
