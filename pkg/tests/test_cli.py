import json
import subprocess
import sys

import pytest

from skewfatou import gallery

CLI = [sys.executable, "-m", "skewfatou.cli"]


def run(*args, cwd=None):
    return subprocess.run(CLI + list(args), capture_output=True, text=True, cwd=cwd)


@pytest.fixture(scope="module")
def maps(tmp_path_factory):
    d = tmp_path_factory.mktemp("maps")
    paths = {}
    for name in ("jonsson_9_6", "jonsson_9_7", "product_dendrite", "product_squares"):
        p = d / f"{name}.json"
        p.write_text(gallery.document(name))
        paths[name] = str(p)
    doc = json.loads(gallery.document("jonsson_9_6"))
    doc["q"] = [r for r in doc["q"] if (r["j"], r["k"]) == (0, 2)]
    w2 = d / "w2.json"
    w2.write_text(json.dumps(doc))
    paths["w2"] = str(w2)
    fam = d / "family.json"
    fam.write_text(gallery.family_document(pixels=(32, 24)))
    paths["family"] = str(fam)
    paths["dir"] = str(d)
    return paths


# ---------------------------------------------------------------------------
# Exit codes
# ---------------------------------------------------------------------------


def test_classify_exit_codes(maps, tmp_path):
    r = run("classify", maps["jonsson_9_6"], "--out", str(tmp_path / "a.json"))
    assert r.returncode == 10
    r = run("classify", maps["product_squares"], "--out", str(tmp_path / "b.json"))
    assert r.returncode == 0


def test_axiom_a_exit_codes(maps, tmp_path):
    assert run("axiom-a", maps["jonsson_9_6"], "--out", str(tmp_path / "a.json")).returncode == 0
    r = run("axiom-a", maps["jonsson_9_7"], "--out", str(tmp_path / "b.json"))
    assert r.returncode == 10
    assert "D_p<->J_p" in r.stdout
    assert run("axiom-a", maps["product_dendrite"], "--out", str(tmp_path / "c.json")).returncode == 10


def test_link_exit_codes(maps, tmp_path):
    r = run("link", maps["w2"], "--samples", "16384", "--out", str(tmp_path / "c.json"))
    assert r.returncode == 0
    cert = json.loads((tmp_path / "c.json").read_text())
    assert cert["certified"] is True
    # connected base: hypotheses unmet
    assert run("link", maps["product_squares"], "--out", str(tmp_path / "d.json")).returncode == 10
    # too shallow for a certificate
    assert run("link", maps["w2"], "--depth", "2", "--samples", "8192",
               "--out", str(tmp_path / "e.json")).returncode == 20


def test_error_exit_on_bad_input(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert run("classify", str(bad)).returncode == 1
    assert run("classify", str(tmp_path / "missing.json")).returncode == 1


# ---------------------------------------------------------------------------
# Reports and artifacts
# ---------------------------------------------------------------------------


def test_classify_report_document(maps, tmp_path):
    out = tmp_path / "rep.json"
    run("classify", maps["jonsson_9_6"], "--out", str(out))
    doc = json.loads(out.read_text())
    assert set(doc) == {"verdict", "checks", "witnesses", "sampling",
                        "gaps", "conclusion", "citations"}
    kinds = {w["kind"] for w in doc["witnesses"]}
    assert {"base-critical-escape", "fiber-critical-escape"} <= kinds


def test_render_ppm(maps, tmp_path):
    out = tmp_path / "img.ppm"
    r = run("render", maps["jonsson_9_6"], "--what", "base", "--out", str(out),
            "--width", "8", "--pixels", "64,48")
    assert r.returncode == 0
    data = out.read_bytes()
    assert data.startswith(b"P6\n64 48\n255\n")
    assert len(data) == len(b"P6\n64 48\n255\n") + 64 * 48 * 3


def test_render_fiber_needs_z(maps, tmp_path):
    r = run("render", maps["jonsson_9_6"], "--what", "fiber",
            "--out", str(tmp_path / "f.ppm"))
    assert r.returncode == 1
    r = run("render", maps["jonsson_9_6"], "--what", "fiber", "--z", "-2",
            "--out", str(tmp_path / "f.ppm"), "--pixels", "32,32")
    assert r.returncode == 0


def test_examples_listing_and_materialize(tmp_path):
    r = run("examples")
    assert r.returncode == 0
    for name in gallery.names():
        assert name in r.stdout
    out = tmp_path / "m.json"
    r = run("examples", "demarco_hruska", "--param", "a=0.3+0.2i",
            "--out", str(out), cwd=str(tmp_path))
    assert r.returncode == 0
    doc = json.loads(out.read_text())
    rec = next(q for q in doc["q"] if q["j"] == 1 and q["k"] == 0)
    assert rec["re"] == pytest.approx(0.3) and rec["im"] == pytest.approx(0.2)


def test_unknown_example_errors(tmp_path):
    assert run("examples", "nope", "--out", str(tmp_path / "x.json")).returncode == 1


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------


def test_sweep_outputs_and_oracle_agreement(maps, tmp_path):
    from conftest import mandelbrot_oracle

    prefix = str(tmp_path / "sw")
    r = run("sweep", maps["family"], "--out", prefix, "--threads", "2")
    assert r.returncode == 0
    ppm = open(prefix + ".ppm", "rb").read()
    assert ppm.startswith(b"P6\n32 24\n255\n")
    assert set(ppm[len(b"P6\n32 24\n255\n"):]) <= {0, 128, 255}

    import csv

    rows = list(csv.DictReader(open(prefix + ".csv")))
    assert len(rows) == 32 * 24
    decided = agree = 0
    for row in rows:
        a = complex(float(row["a_re"]), float(row["a_im"]))
        if row["verdict"] == "undecided":
            continue
        decided += 1
        agree += (row["verdict"] == "connected") == mandelbrot_oracle(a, 3000)
    assert decided / len(rows) >= 0.9
    assert agree / decided >= 0.99


# ---------------------------------------------------------------------------
# Determinism (byte-identical reruns)
# ---------------------------------------------------------------------------


def test_byte_identical_reruns(maps, tmp_path):
    pairs = []
    for i in (1, 2):
        c = tmp_path / f"classify{i}.json"
        a = tmp_path / f"axa{i}.json"
        l = tmp_path / f"link{i}.json"
        p = tmp_path / f"img{i}.ppm"
        s = str(tmp_path / f"sw{i}")
        run("classify", maps["jonsson_9_6"], "--out", str(c))
        run("axiom-a", maps["jonsson_9_6"], "--out", str(a))
        run("link", maps["w2"], "--samples", "16384", "--out", str(l))
        run("render", maps["jonsson_9_6"], "--what", "base", "--out", str(p),
            "--pixels", "48,32", "--width", "8")
        run("sweep", maps["family"], "--out", s, "--threads", "3")
        pairs.append([c.read_bytes(), a.read_bytes(), l.read_bytes(),
                      p.read_bytes(), open(s + ".ppm", "rb").read(),
                      open(s + ".csv", "rb").read()])
    assert pairs[0] == pairs[1]
