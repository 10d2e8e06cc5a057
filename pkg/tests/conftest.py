import numpy as np
import pytest

from mosgnn.dataio import write_features
from mosgnn.synthetic import two_cluster_features


@pytest.fixture
def feature_file_factory(tmp_path):
    """Write small two-cluster feature files for CLI-level tests."""

    def make(name, n=24, f=6, seed=0, separation=9.0, categories=("synthetic",)):
        features, labels, provenance = two_cluster_features(
            n, f, separation, seed, categories=categories, video=name)
        path = tmp_path / name
        write_features(path, features, labels, provenance)
        return path

    return make
