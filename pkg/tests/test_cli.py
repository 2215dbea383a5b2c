import json
import subprocess
import sys

import pytest

from patlas.cli import main
from patlas.report import sha256_file

from conftest import applicant_row, citation_row, patent_row, write_corpus, write_csv


@pytest.fixture()
def corpus_files(tmp_path):
    patents = [
        patent_row("P1", "F1", "A1", classes="G06N", pub="2015-01-01"),
        patent_row("P2", "F2", "A2", classes="H04L", pub="2015-06-01"),
        patent_row("P3", "F3", "A3", classes="G06N|H04L", pub="2016-01-01"),
    ]
    applicants = [
        applicant_row("A1", country="US", nace="62"),
        applicant_row("A2", country="DE", nace="62"),
        applicant_row("A3", country="CN", nace="20"),
    ]
    citations = [
        citation_row("F2", "F1", citing_applicant="A2", date="2016-06-15"),
        citation_row("F3", "F2", citing_applicant="A3", date="2017-01-15"),
    ]
    return write_corpus(tmp_path, patents, applicants, citations)


def corpus_argv(paths, out):
    p, a, c = paths
    return [
        "--patents", str(p), "--applicants", str(a), "--citations", str(c),
        "--out", str(out),
    ]


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_missing_file_exits_1(tmp_path, capsys):
    rc = main([
        "ingest", "--patents", str(tmp_path / "nope.csv"),
        "--applicants", str(tmp_path / "nope.csv"),
        "--citations", str(tmp_path / "nope.csv"),
        "--out", str(tmp_path / "out"),
    ])
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("patlas: error:")


def test_ingest_artifacts(tmp_path, corpus_files):
    out = tmp_path / "out"
    rc = main(["ingest", *corpus_argv(corpus_files, out)])
    assert rc == 0
    for name in ("summary.json", "families.csv", "violations.csv", "manifest.json"):
        assert (out / name).exists(), name
    summary = json.loads((out / "summary.json").read_text())
    assert summary["patents"] == 3
    assert summary["families"] == 3
    assert summary["missing"]["nace"]["share_exact"] == "0"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["files"]["families.csv"] == sha256_file(out / "families.csv")
    assert "manifest.json" not in manifest["files"]


def test_indices_rca_requires_totals(tmp_path, corpus_files):
    out = tmp_path / "out"
    with pytest.raises(SystemExit) as exc:
        main(["indices", "rca", *corpus_argv(corpus_files, out)])
    assert exc.value.code == 2


def test_indices_rca_table(tmp_path, corpus_files):
    totals = write_csv(
        tmp_path / "totals.csv", "country,total_count",
        ["US,50", "DE,40", "CN,30"],
    )
    out = tmp_path / "out"
    rc = main([
        "indices", "rca", *corpus_argv(corpus_files, out), "--totals", str(totals),
    ])
    assert rc == 0
    lines = (out / "rca.csv").read_text().splitlines()
    assert lines[0] == "country,ai_count,total_count,rca"
    assert {ln.split(",")[0] for ln in lines[1:]} == {"CN", "DE", "US"}


def test_indices_proximity_matrix(tmp_path, corpus_files):
    out = tmp_path / "out"
    rc = main(["indices", "proximity", *corpus_argv(corpus_files, out)])
    assert rc == 0
    lines = (out / "proximity.csv").read_text().splitlines()
    assert lines[0] == "holder,CN,DE,US"
    assert (out / "portfolios.csv").exists()


def test_indices_cr_table(tmp_path, corpus_files):
    out = tmp_path / "out"
    rc = main(["indices", "cr", *corpus_argv(corpus_files, out), "--q", "3"])
    assert rc == 0
    lines = (out / "cr.csv").read_text().splitlines()
    assert lines[0] == "sector,q,cr,n_firms"
    rows = {ln.split(",")[0]: ln.split(",") for ln in lines[1:]}
    assert rows["62"][1] == "3"
    assert float(rows["62"][2]) == 1.0


def test_indices_citations_tables(tmp_path, corpus_files):
    out = tmp_path / "out"
    rc = main(["indices", "citations", *corpus_argv(corpus_files, out)])
    assert rc == 0
    long_lines = (out / "citations_long.csv").read_text().splitlines()
    assert long_lines[0] == "citing,cited,count"
    flows = {(r.split(",")[0], r.split(",")[1]): float(r.split(",")[2]) for r in long_lines[1:]}
    assert flows[("DE", "US")] == 1.0
    assert flows[("CN", "DE")] == 1.0
    share_lines = (out / "foreign_share.csv").read_text().splitlines()
    assert share_lines[0].startswith("country,")


def test_survival_artifacts_with_svg(tmp_path, corpus_files):
    out = tmp_path / "out"
    rc = main([
        "survival", *corpus_argv(corpus_files, out),
        "--window-end", "2023-12", "--svg",
    ])
    assert rc == 0
    assert (out / "survival.csv").exists()
    assert (out / "plateau.csv").exists()
    svgs = sorted(p.name for p in out.glob("survival_*.svg"))
    assert svgs == ["survival_CN.svg", "survival_DE.svg", "survival_US.svg"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert "survival_US.svg" in manifest["files"]


def synth_panel_argv(tmp_path, selection=False):
    data = tmp_path / "data"
    argv = [
        "synth", "panel", "--seed", "42", "--n-countries", "10",
        "--n-years", "3", "--out", str(data),
    ]
    if selection:
        argv += ["--selection", "--delta", "0.0"]
    rc = main(argv)
    assert rc == 0
    return [
        "--patents", str(data / "patents.csv"),
        "--applicants", str(data / "applicants.csv"),
        "--citations", str(data / "citations.csv"),
        "--bilateral", str(data / "bilateral.csv"),
        "--macro", str(data / "macro.csv"),
    ]


def test_synth_panel_writes_dataset(tmp_path):
    data = tmp_path / "data"
    rc = main(["synth", "panel", "--seed", "7", "--n-countries", "6",
               "--n-years", "2", "--out", str(data)])
    assert rc == 0
    for name in ("patents.csv", "applicants.csv", "citations.csv",
                 "bilateral.csv", "macro.csv", "truth.json"):
        assert (data / name).exists(), name
    truth = json.loads((data / "truth.json").read_text())
    assert truth["seed"] == 7 and truth["kind"] == "panel"


def test_synth_corpus_writes_dataset(tmp_path):
    data = tmp_path / "data"
    rc = main(["synth", "corpus", "--seed", "7", "--n-firms", "12",
               "--n-patents", "60", "--out", str(data)])
    assert rc == 0
    for name in ("patents.csv", "applicants.csv", "citations.csv",
                 "totals.csv", "truth.json"):
        assert (data / name).exists(), name


def test_gravity_spec3_table(tmp_path):
    argv = synth_panel_argv(tmp_path)
    out = tmp_path / "out"
    rc = main(["gravity", *argv, "--spec", "3", "--out", str(out)])
    assert rc == 0
    lines = (out / "gravity_spec3.csv").read_text().splitlines()
    names = {ln.split(",")[0] for ln in lines[1:]}
    for required in ("log_ai_orig", "log_ai_dest", "proximity", "log_distance"):
        assert required in names, required
    assert "gravity_spec3.csv" in json.loads((out / "manifest.json").read_text())["files"]


def test_gravity_heckman_tables(tmp_path):
    argv = synth_panel_argv(tmp_path, selection=True)
    out = tmp_path / "out"
    rc = main(["gravity", *argv, "--spec", "2", "--heckman", "--out", str(out)])
    assert rc == 0
    first = (out / "first_stage.csv").read_text().splitlines()
    assert first[0] == "name,estimate,se,z,p,stars"
    heck = (out / "heckman.csv").read_text().splitlines()
    names = {ln.split(",")[0] for ln in heck[1:]}
    assert "imr" in names


def test_report_end_to_end(tmp_path):
    argv = synth_panel_argv(tmp_path, selection=True)
    out = tmp_path / "out"
    rc = main(["report", *argv, "--heckman", "--out", str(out)])
    assert rc == 0
    expected = [
        "summary.json", "cr.csv", "survival.csv", "plateau.csv",
        "gravity_spec1.csv", "gravity_spec2.csv", "gravity_spec3.csv",
        "gravity_spec4.csv", "first_stage.csv", "heckman.csv", "manifest.json",
    ]
    for name in expected:
        assert (out / name).exists(), name
    manifest = json.loads((out / "manifest.json").read_text())
    for name, digest in manifest["files"].items():
        assert sha256_file(out / name) == digest, name


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "patlas", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "ingest" in proc.stdout and "gravity" in proc.stdout
