import numpy as np
import pytest

from percept import io
from percept.tda import PersistenceDiagram, lower_star_persistence, rips_persistence


def test_point_stream_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    frames = [rng.normal(size=(7, 3)) for _ in range(4)]
    io.write_point_stream(tmp_path / "f.csv", frames)
    back = io.read_point_stream(tmp_path / "f.csv")
    assert len(back) == 4
    for a, b in zip(frames, back):
        np.testing.assert_array_equal(a, b)


def test_point_stream_errors(tmp_path):
    with pytest.raises(io.DataError):
        io.read_point_stream(tmp_path / "missing.csv")
    (tmp_path / "empty.csv").write_text("t,index,x0,x1\n")
    with pytest.raises(io.DataError):
        io.read_point_stream(tmp_path / "empty.csv")
    (tmp_path / "bad.csv").write_text("t,index,x0,x1\n1,0,a,2\n")
    with pytest.raises(io.DataError):
        io.read_point_stream(tmp_path / "bad.csv")


def test_timeseries_header_optional(tmp_path):
    (tmp_path / "a.csv").write_text("x,y\n1,2\n3,4\n")
    (tmp_path / "b.csv").write_text("1,2\n3,4\n")
    np.testing.assert_array_equal(io.read_timeseries(tmp_path / "a.csv"), [[1, 2], [3, 4]])
    np.testing.assert_array_equal(io.read_timeseries(tmp_path / "b.csv"), [[1, 2], [3, 4]])
    (tmp_path / "c.csv").write_text("x,y\n")
    with pytest.raises(io.DataError):
        io.read_timeseries(tmp_path / "c.csv")


def test_pgm_binary_round_trip(tmp_path):
    img = np.random.default_rng(1).integers(0, 256, size=(5, 7))
    io.write_pgm(tmp_path / "a.pgm", img)
    np.testing.assert_array_equal(io.read_pgm(tmp_path / "a.pgm"), img)


def test_pgm_sixteen_bit(tmp_path):
    img = np.array([[0, 1000], [65535, 7]])
    io.write_pgm(tmp_path / "a.pgm", img, maxval=65535)
    np.testing.assert_array_equal(io.read_pgm(tmp_path / "a.pgm"), img)


def test_pgm_ascii_with_comment(tmp_path):
    (tmp_path / "a.pgm").write_text("P2\n# a comment\n3 2\n9\n1 2 3\n4 5 6\n")
    np.testing.assert_array_equal(io.read_pgm(tmp_path / "a.pgm"), [[1, 2, 3], [4, 5, 6]])


def test_pgm_errors(tmp_path):
    (tmp_path / "a.pgm").write_text("P3\n1 1\n255\n0 0 0\n")
    with pytest.raises(io.DataError):
        io.read_pgm(tmp_path / "a.pgm")
    (tmp_path / "b.pgm").write_text("P2\n3 2\n9\n1 2\n")
    with pytest.raises(io.DataError):
        io.read_pgm(tmp_path / "b.pgm")


def test_image_stack_directory_and_npy(tmp_path):
    imgs = np.random.default_rng(2).integers(0, 200, size=(3, 4, 4))
    d = tmp_path / "stack"
    d.mkdir()
    for i, im in enumerate(imgs):
        io.write_pgm(d / f"img{i:02d}.pgm", im)
    np.testing.assert_array_equal(np.array(io.read_image_stack(d)), imgs)
    np.save(tmp_path / "s.npy", imgs)
    np.testing.assert_array_equal(np.array(io.read_image_stack(tmp_path / "s.npy")), imgs)
    (tmp_path / "none").mkdir()
    with pytest.raises(io.DataError):
        io.read_image_stack(tmp_path / "none")


def test_diagram_json_round_trip_is_bit_identical(tmp_path):
    rng = np.random.default_rng(3)
    ds = [rips_persistence(rng.uniform(size=(12, 2)), max_radius=0.6),
          lower_star_persistence(rng.uniform(size=(5, 5))), PersistenceDiagram.empty()]
    io.write_diagrams(tmp_path / "d.json", ds)
    back = io.read_diagrams(tmp_path / "d.json")
    for a, b in zip(ds, back):
        assert a.births.tobytes() == b.births.tobytes()
        assert a.deaths.tobytes() == b.deaths.tobytes()
        assert a.dims.tolist() == b.dims.tolist()
    io.write_diagrams(tmp_path / "e.json", back)
    assert (tmp_path / "d.json").read_bytes() == (tmp_path / "e.json").read_bytes()


def test_diagram_file_errors(tmp_path):
    (tmp_path / "a.json").write_text('{"frames": []}')
    with pytest.raises(io.DataError):
        io.read_diagrams(tmp_path / "a.json")
    (tmp_path / "b.json").write_text("{not json")
    with pytest.raises(io.DataError):
        io.read_diagrams(tmp_path / "b.json")


def test_csv_image_grid(tmp_path):
    (tmp_path / "a.csv").write_text("1,2,3\n4,5,6\n")
    np.testing.assert_array_equal(io.read_image_stack(tmp_path / "a.csv")[0], [[1, 2, 3], [4, 5, 6]])
    (tmp_path / "b.csv").write_text("1,2,3\n4,5\n")
    with pytest.raises(io.DataError):
        io.read_image_stack(tmp_path / "b.csv")
