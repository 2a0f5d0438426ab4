import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stcseg.gridio import GridFormatError, format_grid, parse_grid, read_grid, write_grid


def test_header_and_row_layout():
    text = format_grid(np.arange(6, dtype=float).reshape(2, 3))
    assert text.splitlines() == ["STCGRID 1 2 3", "0 1 2", "3 4 5"]
    vec = format_grid(np.arange(8, dtype=float).reshape(2, 2, 2))
    assert vec.splitlines()[0] == "STCGRID 2 2 2"
    assert vec.splitlines()[1] == "0 1 2 3"  # channels interleaved per pixel


def test_reader_accepts_any_whitespace():
    g = parse_grid("STCGRID 2 1 2\n 1\t2\n\n3   4 \n")
    assert g.shape == (1, 2, 2)
    assert g.tolist() == [[[1, 2], [3, 4]]]


def test_count_mismatch_message():
    text = "STCGRID 2 4 4\n" + " ".join(["1"] * 31) + "\n"
    with pytest.raises(GridFormatError, match="expected 32 values"):
        parse_grid(text)


@pytest.mark.parametrize("text,where", [
    ("", "line 1"),
    ("GRID 1 1 1\n0\n", "line 1"),
    ("STCGRID 1 x 1\n0\n", "line 1"),
    ("STCGRID 1 1 2\n0 abc\n", "line 2"),
])
def test_malformed_inputs_report_line(text, where):
    with pytest.raises(GridFormatError, match=where):
        parse_grid(text)


@settings(max_examples=40)
@given(arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 6), st.sampled_from([1, 2])),
              elements=st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=False)))
def test_text_roundtrip_is_canonical(g):
    text = format_grid(g)
    back = parse_grid(text)
    assert format_grid(back) == text
    assert np.allclose(back.reshape(g.shape), g, rtol=1e-8, atol=0)


def test_file_roundtrip(tmp_path):
    g = np.random.default_rng(0).standard_normal((5, 4, 2))
    p = tmp_path / "g.grid"
    write_grid(p, g)
    first = p.read_bytes()
    write_grid(p, read_grid(p))
    assert p.read_bytes() == first
