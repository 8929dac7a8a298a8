import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tgpoison import DatasetFormat, from_edges, uniform_stream

SAMPLE_CSV = """user_id,item_id,timestamp,state_label,f1,f2
0,0,10.0,0,0.5,1.0
1,0,11.5,0,-0.25,2.0
0,1,12.0,1,0.125,3.5
2,1,15.0,0,0.0,0.0
1,1,15.0,0,1.0,-1.0
"""


@pytest.fixture
def bipartite_fmt():
    return DatasetFormat(name="sample", bipartite=True, feature_count=2)


@pytest.fixture
def unipartite_fmt():
    return DatasetFormat(name="sample-uni", bipartite=False, feature_count=2)


@pytest.fixture
def sample_csv():
    return SAMPLE_CSV


@pytest.fixture
def small_stream():
    """20-node unipartite synthetic with activity across the whole range."""
    return uniform_stream(120, n_nodes=20, n_timestamps=40, seed=7, t_max=1000.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
