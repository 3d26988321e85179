import pytest

from movisim.core import (
    SERVER,
    ConnectivityMap,
    ContentMap,
    NeighborRecord,
    VideoSpec,
    canonical_order,
    has_piece,
)
from movisim.errors import InputError


def test_canonical_order():
    assert canonical_order(3, 7) == -1
    assert canonical_order(7, 3) == 1
    assert canonical_order(5, 5) == 0
    assert sorted([9, 2, 4]) == [2, 4, 9]


def test_has_piece_empty_map():
    cm = ContentMap(10)
    assert not has_piece(cm, 0, 0)
    assert not has_piece(cm, 7, 9)


def test_has_piece_after_add():
    cm = ContentMap(10)
    cm.add(3, 4)
    assert has_piece(cm, 3, 4)
    assert not has_piece(cm, 3, 5)
    assert not has_piece(cm, 4, 4)


def test_server_is_seeder():
    cm = ContentMap(10)
    assert all(has_piece(cm, SERVER, p) for p in range(10))


def test_server_sentinel_is_singleton_and_not_an_int():
    import pickle

    assert pickle.loads(pickle.dumps(SERVER)) is SERVER
    assert not isinstance(SERVER, int)


def test_content_rejects_out_of_range_piece():
    cm = ContentMap(4)
    with pytest.raises(InputError):
        cm.add(0, 4)
    with pytest.raises(InputError):
        cm.add(0, -1)


def test_video_spec_derived_values():
    v = VideoSpec(60, 262144, 524288.0)
    assert v.piece_duration == 4.0
    assert v.duration == 240.0
    assert v.total_bytes == 60 * 262144


@pytest.mark.parametrize("kw", [dict(piece_count=0), dict(piece_size=0), dict(bitrate=0.0)])
def test_video_spec_validation(kw):
    args = dict(piece_count=1, piece_size=1, bitrate=1.0) | kw
    with pytest.raises(InputError):
        VideoSpec(**args)


def test_connectivity_rejects_self_and_duplicates():
    cmap = ConnectivityMap()
    with pytest.raises(InputError):
        cmap.replace(1, [NeighborRecord(1, -50.0)])
    with pytest.raises(InputError):
        cmap.replace(1, [NeighborRecord(2, -50.0), NeighborRecord(2, -60.0)])
    cmap.replace(1, [NeighborRecord(2, -50.0)])
    assert cmap.as_dict() == {1: {2: -50.0}}


def test_neighbor_record_rejects_non_finite_rssi():
    with pytest.raises(InputError):
        NeighborRecord(1, float("nan"))
