import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from famglm.errors import CorpusLoadError, InvalidTarget, MalformedFile, OutOfRange, UnsupportedFormat
from famglm.ingest import (
    decode_csv_grid,
    decode_pgm,
    encode_pgm,
    load_corpus,
    load_grayscale,
    normalize_pixels,
    read_manifest,
    resize_bilinear,
)


def test_ascii_pgm_example():
    img = decode_pgm(b"P2\n2 2\n255\n0 255\n128 64\n")
    assert img.tolist() == [[0, 255], [128, 64]]
    assert np.allclose(normalize_pixels(img), [[0, 1], [128 / 255, 64 / 255]])


def test_pgm_comments_and_binary():
    img = decode_pgm(b"P5\n# made by hand\n3 1\n# another\n255\n" + bytes([1, 2, 3]))
    assert img.tolist() == [[1, 2, 3]]
    assert decode_pgm(b"P2 # c\n1 1 255 7").tolist() == [[7]]


def test_pgm_maxval_rescaled():
    assert decode_pgm(b"P2\n2 1\n15\n15 5\n").tolist() == [[255, 85]]
    raw = np.array([[0, 65535], [32768, 1]], dtype=">u2").tobytes()
    img = decode_pgm(b"P5\n2 2\n65535\n" + raw)
    assert img[0, 1] == 255.0 and img[0, 0] == 0.0
    assert img[1, 0] == pytest.approx(32768 * 255 / 65535)


@pytest.mark.parametrize("binary", [True, False])
def test_encode_decode_round_trip(rng, binary):
    M = rng.integers(0, 256, (7, 5))
    assert np.array_equal(decode_pgm(encode_pgm(M, binary)), M)
    M16 = rng.integers(0, 1024, (3, 4))
    assert np.allclose(decode_pgm(encode_pgm(M16, binary, maxval=1023)), M16 * 255 / 1023)


def test_pgm_errors():
    with pytest.raises(UnsupportedFormat):
        decode_pgm(b"P6\n1 1\n255\n\x00\x00\x00")
    with pytest.raises(MalformedFile):
        decode_pgm(b"P5\n2 2\n255\n\x00")
    with pytest.raises(MalformedFile):
        decode_pgm(b"P2\n2 2\n255\n1 2 3")
    with pytest.raises(MalformedFile):
        decode_pgm(b"P2\nx 2\n255\n")
    with pytest.raises(MalformedFile):
        decode_pgm(b"P2\n1 1\n10\n11\n")
    with pytest.raises(MalformedFile):
        decode_pgm(b"P2\n1")


def test_csv_grid():
    assert decode_csv_grid("1,2\n3,4\n").tolist() == [[1, 2], [3, 4]]
    with pytest.raises(MalformedFile):
        decode_csv_grid("1,2\n3\n")
    with pytest.raises(MalformedFile):
        decode_csv_grid("1,a\n")
    with pytest.raises(MalformedFile):
        decode_csv_grid("\n")


def test_load_grayscale_dispatch(tmp_path):
    (tmp_path / "a.pgm").write_bytes(encode_pgm(np.array([[9, 8]])))
    (tmp_path / "b.csv").write_text("0.5,250\n")
    (tmp_path / "c.ppm").write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
    (tmp_path / "d.png").write_bytes(b"\x89PNG....")
    assert load_grayscale(tmp_path / "a.pgm").tolist() == [[9, 8]]
    assert load_grayscale(tmp_path / "b.csv").tolist() == [[0.5, 250]]
    with pytest.raises(UnsupportedFormat):
        load_grayscale(tmp_path / "c.ppm")
    with pytest.raises(UnsupportedFormat):
        load_grayscale(tmp_path / "d.png")


def test_normalize_range():
    assert normalize_pixels(np.array([[0.0, 255.0]])).tolist() == [[0.0, 1.0]]
    with pytest.raises(OutOfRange):
        normalize_pixels(np.array([[256.0]]))
    with pytest.raises(OutOfRange):
        normalize_pixels(np.array([[-1.0]]))


def test_resize_examples():
    M = np.array([[0.0, 1.0], [2.0, 3.0]])
    up = resize_bilinear(M, 3, 3)
    assert np.allclose(up, [[0, 0.5, 1], [1, 1.5, 2], [2, 2.5, 3]])
    assert np.array_equal(resize_bilinear(M, 2, 2), M)
    assert resize_bilinear(M, 2, 2) is not M
    assert np.allclose(resize_bilinear(np.array([[0.0, 10.0, 20.0]]), 1, 2), [[0, 20]])
    assert np.allclose(resize_bilinear(np.array([[4.0]]), 2, 3), 4.0)
    assert np.allclose(resize_bilinear(M, 1, 1), [[1.5]])
    with pytest.raises(InvalidTarget):
        resize_bilinear(M, 0, 2)


def test_resize_reproduces_linear_ramps(rng):
    # bilinear interpolation is exact for functions a + b*i + c*j on the corner-aligned grid
    h, w, H, W = 5, 7, 13, 4
    i, j = np.meshgrid(np.linspace(0, 1, h), np.linspace(0, 1, w), indexing="ij")
    I, J = np.meshgrid(np.linspace(0, 1, H), np.linspace(0, 1, W), indexing="ij")
    a, b, c = rng.random(3)
    out = resize_bilinear(a + b * i + c * j, H, W)
    assert np.allclose(out, a + b * I + c * J, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_resize_commutes_with_normalisation(h, w, H, W, seed):
    M = np.random.default_rng(seed).uniform(0, 255, (h, w))
    a = normalize_pixels(resize_bilinear(M, H, W))
    b = resize_bilinear(normalize_pixels(M), H, W)
    assert np.max(np.abs(a - b)) <= 1e-12
    assert np.all(a >= 0) and np.all(a <= 1)


def write_corpus(tmp_path, n=4, shape=(6, 5)):
    rng = np.random.default_rng(0)
    rows = ["path,label,age"]
    for i in range(n):
        M = rng.integers(0, 256, shape)
        if i % 2:
            (tmp_path / f"img{i}.pgm").write_bytes(encode_pgm(M))
            rows.append(f"img{i}.pgm,{i % 2},{30 + i}")
        else:
            (tmp_path / f"img{i}.csv").write_text("\n".join(",".join(map(str, r)) for r in M) + "\n")
            rows.append(f"img{i}.csv,{i % 2},{30 + i}")
    (tmp_path / "manifest.csv").write_text("\n".join(rows) + "\n")
    return tmp_path / "manifest.csv"


def test_manifest_and_corpus(tmp_path):
    path = write_corpus(tmp_path)
    man = read_manifest(path, (6, 5))
    assert man.covariate_names == ("age",)
    data = load_corpus(man)
    assert data.X.shape == (4, 6, 5)
    assert data.y.tolist() == [0, 1, 0, 1]
    assert data.v[:, 0].tolist() == [30, 31, 32, 33]
    assert np.all(data.X >= 0) and np.all(data.X <= 1)
    again = load_corpus(read_manifest(path, (6, 5)))
    assert again.X.tobytes() == data.X.tobytes()


def test_mixed_sizes_resized_to_default(tmp_path):
    (tmp_path / "a.pgm").write_bytes(encode_pgm(np.full((200, 180), 100)))
    (tmp_path / "b.csv").write_text("\n".join(",".join(["50"] * 90) for _ in range(120)) + "\n")
    (tmp_path / "m.csv").write_text("path,label\na.pgm,1\nb.csv,0\n")
    data = load_corpus(read_manifest(tmp_path / "m.csv"))
    assert data.X.shape == (2, 150, 150)
    assert np.allclose(data.X[0], 100 / 255) and np.allclose(data.X[1], 50 / 255)
    assert data.v is None


def test_manifest_errors(tmp_path):
    (tmp_path / "bad.csv").write_text("file,label\nx,1\n")
    with pytest.raises(MalformedFile):
        read_manifest(tmp_path / "bad.csv")
    (tmp_path / "empty.csv").write_text("path,label\n")
    with pytest.raises(MalformedFile):
        read_manifest(tmp_path / "empty.csv")
    (tmp_path / "short.csv").write_text("path,label,age\nx.pgm,1\n")
    with pytest.raises(MalformedFile):
        read_manifest(tmp_path / "short.csv")
    (tmp_path / "nan.csv").write_text("path,label\nx.pgm,yes\n")
    with pytest.raises(MalformedFile):
        read_manifest(tmp_path / "nan.csv")


def test_missing_file_names_entry(tmp_path):
    path = write_corpus(tmp_path)
    (tmp_path / "img2.csv").unlink()
    with pytest.raises(CorpusLoadError) as err:
        load_corpus(read_manifest(path, (6, 5)))
    assert err.value.index == 2
    assert "img2.csv" in str(err.value)


def test_out_of_range_csv_pixels(tmp_path):
    (tmp_path / "a.csv").write_text("0,300\n")
    (tmp_path / "m.csv").write_text("path,label\na.csv,1\n")
    with pytest.raises(CorpusLoadError) as err:
        load_corpus(read_manifest(tmp_path / "m.csv", (1, 2)))
    assert isinstance(err.value.cause, OutOfRange)


def test_normalisation_examples():
    assert np.array_equal(normalize_pixels(np.full((2, 3), 255.0)), np.ones((2, 3)))
    assert np.array_equal(normalize_pixels(np.zeros((2, 3))), np.zeros((2, 3)))
    assert normalize_pixels(np.array([[51.0]]))[0, 0] == pytest.approx(0.2)


def test_resize_column_and_constant():
    assert np.allclose(resize_bilinear(np.array([[0.0], [1.0]]), 3, 1), [[0], [0.5], [1]])
    assert np.allclose(resize_bilinear(np.full((3, 4), 7.5), 11, 2), 7.5)


def test_two_image_manifest(tmp_path):
    (tmp_path / "a.pgm").write_bytes(encode_pgm(np.array([[1, 2], [3, 4]])))
    (tmp_path / "b.pgm").write_bytes(encode_pgm(np.array([[5, 6], [7, 8]]), binary=False))
    (tmp_path / "m.csv").write_text("path,label\na.pgm,1\nb.pgm,0\n")
    data = load_corpus(read_manifest(tmp_path / "m.csv", (2, 2)))
    assert data.n == 2 and data.y.tolist() == [1.0, 0.0]
    assert np.allclose(data.X[1] * 255, [[5, 6], [7, 8]])
