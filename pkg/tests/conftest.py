import pytest

from wcss.occupancy import BlockPartition, OccupancyProfile


@pytest.fixture
def ref_partition():
    return BlockPartition(256, (64, 64, 64, 64))


@pytest.fixture
def ref_profile(ref_partition):
    return OccupancyProfile.from_block_probs(ref_partition, [0.1, 0.01, 0.1, 0.01])
