import numpy as np
import pytest

from haptotaxis.checkpoint import CheckpointError, checkpoint_load, checkpoint_save
from haptotaxis.grid import Grid
from haptotaxis.model import State


@pytest.fixture
def state():
    g = Grid((2.0, 1.0), (6, 5))
    rng = np.random.default_rng(5)
    return State(g, rng.random(g.shape), rng.random(g.shape) + 0.1, rng.random(g.shape) + 1, rng.random(g.shape), 1.2345)


def test_round_trip_bitwise(tmp_path, state):
    p = tmp_path / "s.bin"
    checkpoint_save(state, p)
    back = checkpoint_load(p, state.grid)
    assert back.grid == state.grid and back.t == state.t
    for name in ("u", "w", "w0", "Uacc"):
        assert getattr(back, name).tobytes() == getattr(state, name).tobytes()


def test_header_bytes(tmp_path, state):
    p = tmp_path / "s.bin"
    checkpoint_save(state, p)
    data = p.read_bytes()
    assert data[:4] == b"HPTX" and data[4] == 1 and data[5] == 2


def test_truncated_rejected(tmp_path, state):
    p = tmp_path / "s.bin"
    checkpoint_save(state, p)
    p.write_bytes(p.read_bytes()[:-20])
    with pytest.raises(CheckpointError, match="truncated"):
        checkpoint_load(p)


def test_bit_flip_rejected(tmp_path, state):
    p = tmp_path / "s.bin"
    checkpoint_save(state, p)
    data = bytearray(p.read_bytes())
    data[60] ^= 0x01
    p.write_bytes(bytes(data))
    with pytest.raises(CheckpointError, match="checksum"):
        checkpoint_load(p)


def test_version_and_magic_rejected(tmp_path, state):
    p = tmp_path / "s.bin"
    checkpoint_save(state, p)
    data = bytearray(p.read_bytes())
    data[4] = 9
    p.write_bytes(bytes(data))
    with pytest.raises(CheckpointError, match="version"):
        checkpoint_load(p)
    p.write_bytes(b"NOPE" + bytes(data[4:]))
    with pytest.raises(CheckpointError, match="magic"):
        checkpoint_load(p)


def test_grid_mismatch_rejected(tmp_path, state):
    p = tmp_path / "s.bin"
    checkpoint_save(state, p)
    with pytest.raises(CheckpointError, match="does not match"):
        checkpoint_load(p, Grid((2.0, 1.0), (6, 6)))
