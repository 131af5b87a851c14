import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from menusize.svgplot import plot_csv, read_numeric_csv, render


def test_loglog_plot(tmp_path):
    src = tmp_path / "curve.csv"
    src.write_text("C,best_revenue,gap_vs_upper_bound,cert_exact\n1,0,0.49,0.01\n2,0.33,0.16,8e-05\n3,0.331,0.16,1e-08\n")
    out = plot_csv(src, tmp_path / "p.svg", "C", "gap_vs_upper_bound", loglog=True)
    svg = out.read_text()
    assert svg.count("<circle") == 3 and "<polyline" in svg and "1e0" in svg


def test_empty_data_gives_empty_axes(tmp_path):
    src = tmp_path / "e.csv"
    src.write_text("x,y\n")
    svg = plot_csv(src, tmp_path / "e.svg").read_text()
    assert "<circle" not in svg and "<rect" in svg


def test_deterministic_bytes(tmp_path):
    src = tmp_path / "d.csv"
    src.write_text("x,y\n1,2\n3,5\n")
    a = plot_csv(src, tmp_path / "a.svg").read_bytes()
    b = plot_csv(src, tmp_path / "b.svg").read_bytes()
    assert a == b


@pytest.mark.parametrize("text", ["", "x,y\n1\n", "x,y\n1,abc\n"])
def test_malformed_rejected(tmp_path, text):
    src = tmp_path / "m.csv"
    src.write_text(text)
    with pytest.raises(ValueError):
        plot_csv(src, tmp_path / "m.svg")


def test_missing_column(tmp_path):
    src = tmp_path / "m.csv"
    src.write_text("x,y\n1,2\n")
    with pytest.raises(ValueError):
        plot_csv(src, tmp_path / "m.svg", y="z")
    assert read_numeric_csv(src) == (["x", "y"], [["1", "2"]])


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)), max_size=20), st.booleans())
def test_render_never_fails(pts, loglog):
    svg = render([p[0] for p in pts], [p[1] for p in pts], loglog=loglog)
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert "nan" not in svg and "inf" not in svg
