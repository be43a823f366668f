from fractions import Fraction

import numpy as np
import pytest

from nhtransport.errors import InputError
from nhtransport.output import (csv_text, file_sha256, provenance, read_csv, read_series, write_csv,
                                write_json)
from nhtransport.svgplot import LogLogPlot, guide_slopes


def test_csv_header_and_rows(tmp_path):
    header = provenance("abc123", 5)
    path = tmp_path / "a.csv"
    digest = write_csv(path, ["t", "mean_xc"], [(1.0, 0.1), (2.0, 1 / 3)], header)
    raw = path.read_bytes()
    assert raw.startswith(b"# config_hash: abc123\r\n# seed: 5\r\n# version: ")
    assert digest == file_sha256(path)
    meta, t, y = read_series(path)
    assert meta["seed"] == "5"
    assert np.array_equal(t, [1.0, 2.0]) and y[1] == 1 / 3


def test_csv_deterministic():
    rows = [(0.1 * i, np.float64(i) / 7, np.int64(i), True) for i in range(5)]
    a = csv_text(["a", "b", "c", "d"], rows, {"k": "v"})
    assert a == csv_text(["a", "b", "c", "d"], rows, {"k": "v"})
    assert "true" in a


def test_read_series_missing_column(tmp_path):
    path = tmp_path / "b.csv"
    write_csv(path, ["x", "y"], [(1, 2)], {})
    with pytest.raises(InputError):
        read_series(path)


def test_read_csv_empty(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("# only: header\n")
    with pytest.raises(InputError):
        read_csv(path)


def test_json_embeds_provenance(tmp_path):
    import json

    path = tmp_path / "r.json"
    write_json(path, {"slope": np.float64(0.5), "v": np.arange(2)}, provenance("h", 1))
    doc = json.loads(path.read_text())
    assert doc["provenance"]["config_hash"] == "h"
    assert doc["slope"] == 0.5 and doc["v"] == [0, 1]


def test_svg_guides():
    t = np.geomspace(1, 1e4, 20)
    svg = (LogLogPlot("demo").add(t, t ** (1 / 3), "data")
           .guide(Fraction(1, 3), 1.0, 1.0, "t^1/3").guide(1, 10.0, 1.0, log_power=Fraction(-1, 2)).render())
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert guide_slopes(svg) == [Fraction(1, 3), Fraction(1)]
    assert 'class="data"' in svg


def test_svg_rejects_empty():
    with pytest.raises(InputError):
        LogLogPlot().render()
    with pytest.raises(InputError):
        LogLogPlot().add([1.0], [1.0])
