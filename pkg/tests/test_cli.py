import json

import pytest

from hypertraffic.cli import main, read_table


def _gen(tmp_path, *extra, name="s.hstm"):
    out = tmp_path / name
    assert main(["generate", "--out", str(out), *extra]) == 0
    return out


def test_generate_writes_stream_and_sidecar(tmp_path, capsys):
    out = _gen(tmp_path, "--topology", "single-link", "--packets", "2^4", "--balanced")
    assert "packets=16 unique_links=2" in capsys.readouterr().out
    assert out.read_bytes()[:4] == b"HSTM"
    assert (tmp_path / "s.hstm.internal").exists()


def test_generate_bad_spec_is_usage_error(tmp_path):
    rc = main(["generate", "--topology", "single-link", "--packets", "7", "--balanced",
               "--out", str(tmp_path / "x")])
    assert rc == 2
    with pytest.raises(SystemExit) as e:
        main(["generate", "--topology", "mesh", "--packets", "8", "--out", str(tmp_path / "x")])
    assert e.value.code == 2


def test_analyze_and_scaling(tmp_path):
    s = _gen(tmp_path, "--topology", "isolated-links", "--packets", "2^13")
    out = tmp_path / "out"
    assert main(["analyze", str(s), "--base-window", "2^8", "--levels", "4",
                 "--out-dir", str(out)]) == 0
    meta, cols, rows = read_table(out / "level08_quantities.tsv")
    assert cols[0] == "window" and len(rows) == 32 and meta["window_size"] == "256"
    assert all(r[cols.index("unique_links")] == 256 for r in rows)
    _, dcols, drows = read_table(out / "level11_source_fanout.tsv")
    assert dcols == ["bin", "degree", "mean", "std"] and drows == [[0, 1, 1.0, 0.0]]

    assert main(["scaling", str(out)]) == 0
    _, scols, srows = read_table(out / "scaling.tsv")
    fits = {r[0]: dict(zip(scols, r)) for r in srows}
    assert fits["unique_links"]["alpha"] == pytest.approx(1.0)
    assert fits["max_link_packets"]["alpha"] == pytest.approx(0.0)
    assert fits["unique_links"]["verdict"] == "scaling"
    assert (out / "scaling_samples.tsv").exists()


def test_quadrant_uses_sidecar_and_empty_quadrant_gives_none(tmp_path):
    s = _gen(tmp_path, "--topology", "isolated-links", "--packets", "2^12")
    out = tmp_path / "ie"
    assert main(["analyze", str(s), "--base-window", "256", "--levels", "3",
                 "--quadrant", "ie", "--out-dir", str(out)]) == 0
    _, cols, rows = read_table(out / "level08_quantities.tsv")
    assert all(r[1] == 0 for r in rows)
    assert main(["scaling", str(out)]) == 0
    _, scols, srows = read_table(out / "scaling.tsv")
    assert {r[scols.index("verdict")] for r in srows} == {"none"}


def test_reruns_are_byte_identical(tmp_path):
    s = _gen(tmp_path, "--topology", "zipf", "--packets", "2^12", "--population", "2^10")
    outs = []
    for k, threads in enumerate(("1", "3")):
        o = tmp_path / f"o{k}"
        main(["analyze", str(s), "--base-window", "256", "--levels", "3",
              "--threads", threads, "--out-dir", str(o)])
        outs.append({p.name: p.read_bytes() for p in sorted(o.iterdir())})
    assert outs[0] == outs[1] and len(outs[0]) == 3 * 6


def test_json_output(tmp_path):
    s = _gen(tmp_path, "--topology", "single-link", "--packets", "1024", "--format", "csv",
             name="s.csv")
    out = tmp_path / "j"
    assert main(["analyze", str(s), "--base-window", "256", "--levels", "2",
                 "--format", "json", "--distributions", "none", "--out-dir", str(out)]) == 0
    doc = json.loads((out / "level09_quantities.json").read_text())
    assert doc["window_size"] == 512 and doc["rows"][0][1] == 512
    assert main(["scaling", str(out), "--format", "json"]) == 0
    doc = json.loads((out / "scaling.json").read_text())
    row = dict(zip(doc["columns"], doc["rows"][0]))
    assert row["quantity"] == "valid_packets" and row["alpha"] == pytest.approx(1.0)


def test_anonymize_key_gives_same_tables(tmp_path):
    s = _gen(tmp_path, "--topology", "zipf", "--packets", "2^12", "--population", "2^10",
             "--balanced")
    res = []
    for k, extra in enumerate(([], ["--anonymize-key", "0f" * 16])):
        o = tmp_path / f"a{k}"
        assert main(["analyze", str(s), "--base-window", "512", "--levels", "2",
                     "--quadrant", "ei", *extra, "--out-dir", str(o)]) == 0
        res.append({p.name: p.read_bytes() for p in sorted(o.iterdir())})
    assert res[0] == res[1]


def test_input_errors(tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("src,dst\n")
    assert main(["analyze", str(empty), "--out-dir", str(tmp_path / "o")]) == 3
    bad = tmp_path / "b.csv"
    bad.write_text("1,2\nnope\n")
    assert main(["analyze", str(bad), "--out-dir", str(tmp_path / "o")]) == 3
    assert main(["analyze", str(tmp_path / "missing.csv"), "--out-dir", str(tmp_path / "o")]) == 3
    assert main(["scaling", str(tmp_path / "nowhere")]) == 3
    one = tmp_path / "one"
    s = _gen(tmp_path, "--topology", "single-link", "--packets", "512")
    main(["analyze", str(s), "--base-window", "256", "--levels", "1", "--out-dir", str(one)])
    assert main(["scaling", str(one)]) == 3


def test_usage_errors(tmp_path):
    s = _gen(tmp_path, "--topology", "single-link", "--packets", "512")
    o = str(tmp_path / "o")
    assert main(["analyze", str(s), "--base-window", "100", "--out-dir", o]) == 2
    assert main(["analyze", str(s), "--anonymize-key", "abc", "--out-dir", o]) == 2
    assert main(["analyze", str(s), "--allow-src", "1-5", "--deny-src", "3",
                 "--base-window", "256", "--out-dir", o]) == 2
