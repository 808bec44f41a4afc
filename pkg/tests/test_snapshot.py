import numpy as np
import pytest

from cubicheat import snapshot
from cubicheat.errors import ConfigError
from cubicheat.field import Grid, RealField, SpectralField, dft_forward


def test_real_roundtrip(tmp_path):
    g = Grid(2, 16, 3.5)
    f = RealField(g, np.random.default_rng(0).standard_normal(g.shape))
    snapshot.save(tmp_path / "f.chf", f)
    back = snapshot.load(tmp_path / "f.chf")
    assert isinstance(back, RealField) and back.grid == g
    assert np.array_equal(back.values, f.values)


def test_spectral_roundtrip():
    g = Grid(3, 8)
    F = dft_forward(RealField(g, np.random.default_rng(1).standard_normal(g.shape)))
    back = snapshot.loads(snapshot.dumps(F))
    assert isinstance(back, SpectralField)
    assert np.array_equal(back.coeffs, F.coeffs)


def test_header_is_ascii_line():
    g = Grid(1, 8)
    blob = snapshot.dumps(RealField(g, np.zeros(8)))
    head = blob.split(b"\n", 1)[0].decode("ascii").split()
    assert head[:3] == ["CHF1", "1", "8"] and head[4] == "real"
    assert len(blob) == len(blob.split(b"\n", 1)[0]) + 1 + 8 * 8


def test_five_token_header_accepted():
    g = Grid(1, 8)
    body = np.arange(8, dtype="<f8").tobytes()
    f = snapshot.loads(f"CHF1 1 8 {g.L!r} real\n".encode() + body)
    assert np.array_equal(f.values, np.arange(8))


@pytest.mark.parametrize("blob", [b"nonsense", b"XXXX 1 8 1.0 real\n", b"CHF1 1 8 1.0 bogus\n" + bytes(64)])
def test_malformed(blob):
    with pytest.raises(ConfigError):
        snapshot.loads(blob)
