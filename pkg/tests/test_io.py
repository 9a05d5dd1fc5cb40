import numpy as np
import pytest

from noneuclid import io


def test_matrix_round_trip(tmp_path):
    A = np.array([[1.0, -2.5e-17], [np.pi, 3.0]])
    p = tmp_path / "A.csv"
    io.write_matrix(p, A)
    assert np.array_equal(io.read_matrix(p), A)


def test_vector_row_or_column(tmp_path):
    p = tmp_path / "v.csv"
    p.write_text("1,2,3\n")
    assert list(io.read_vector(p)) == [1, 2, 3]
    io.write_vector(p, [4.0, 5.0])
    assert list(io.read_vector(p)) == [4, 5]


def test_ragged_rejected(tmp_path):
    p = tmp_path / "A.csv"
    p.write_text("1,2\n3\n")
    with pytest.raises(io.FormatError):
        io.read_matrix(p)


@pytest.mark.parametrize("text", ["", "1,x\n"])
def test_bad_matrix(tmp_path, text):
    p = tmp_path / "A.csv"
    p.write_text(text)
    with pytest.raises(io.FormatError):
        io.read_matrix(p)


def test_vector_rejects_matrix(tmp_path):
    p = tmp_path / "v.csv"
    p.write_text("1,2\n3,4\n")
    with pytest.raises(io.FormatError):
        io.read_vector(p)


def test_keyvalue(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("# comment\nn = 3\nactivation=leaky_relu:0.1  # trailing\n\n")
    assert io.read_keyvalue(p) == {"n": "3", "activation": "leaky_relu:0.1"}
    p.write_text("novalue\n")
    with pytest.raises(io.FormatError):
        io.read_keyvalue(p)
