import pytest
import torch

from exporter_helpers import build_tiny_encoder

torch.set_num_threads(1)


@pytest.fixture(scope="session")
def tiny_encoder():
    return build_tiny_encoder()
