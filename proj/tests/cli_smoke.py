#!/usr/bin/env python3
"""Drives the hairsynth CLI end to end at a tiny budget, then talks to
`hairsynth serve` over HTTP."""

import base64
import json
import shutil
import subprocess
import sys
import tempfile
import urllib.error
import urllib.request
from pathlib import Path

CLI = sys.argv[1]


def run(*args):
    res = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if res.returncode != 0:
        sys.exit(f"{' '.join(map(str, args))} failed ({res.returncode}):\n{res.stderr}")
    return res.stdout


def expect_failure(*args):
    res = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    assert res.returncode != 0, f"{args} should fail"
    return res.stderr


def call(port, method, path, body=None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(f"http://127.0.0.1:{port}{path}", data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=60) as r:
            return r.status, json.loads(r.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


def b64(path):
    return base64.b64encode(Path(path).read_bytes()).decode()


def main():
    with tempfile.TemporaryDirectory(prefix="hairsynth_cli_") as d:
        smoke(Path(d))
    print("cli smoke ok")


def smoke(tmp):
    cfg = tmp / "cfg.json"
    cfg.write_text(json.dumps({"image_size": 32, "base_width": 4, "depth": 3, "batch": 4,
                               "stage1": {"epochs": 1}, "e2e": {"epochs": 1},
                               "loss": {"morph_k": 3}, "dataset": {"count": 40, "size": 32}}))

    gen = json.loads(run("dataset", "gen", "--config", cfg, "--seed", 7, "--out", tmp / "syn"))
    assert gen["samples"] == 40 and gen["train"] + gen["test"] + gen["val"] == 40
    run("dataset", "gen", "--config", cfg, "--seed", 7, "--out", tmp / "syn2")
    assert (tmp / "syn" / "manifest.jsonl").read_bytes() == (tmp / "syn2" / "manifest.jsonl").read_bytes()
    run("dataset", "gen", "--config", cfg, "--seed", 8, "--domain", "shifted", "--out", tmp / "real")

    photos = tmp / "photos"
    photos.mkdir()
    for i in range(3):
        shutil.copy(tmp / "real" / "images" / f"{i:06d}.png", photos / f"p{i}.png")
        shutil.copy(tmp / "real" / "masks" / f"{i:06d}.png", photos / f"p{i}_mask.png")
    ing = json.loads(run("dataset", "ingest", "--config", cfg, "--in", photos, "--out", tmp / "ingested"))
    assert ing["ingested"] == 3 and ing["errors"] == 0, ing
    assert (tmp / "ingested" / "manifest.jsonl").exists()

    assert "phase_violation" in expect_failure("train", "e2e", "--config", cfg, "--data", tmp / "real",
                                                "--heldout", tmp / "real", "--out", tmp / "bad")

    s1 = json.loads(run("train", "stage1", "--config", cfg, "--data", tmp / "syn", "--heldout", tmp / "syn",
                        "--out", tmp / "run1"))
    assert s1["main_phase"] == "pretrain-synthetic"
    for f in ("config.json", "loss.csv", "heldout.csv", "checkpoint.bin", "summary.json"):
        assert (tmp / "run1" / f).exists(), f
    e2e = json.loads(run("train", "e2e", "--config", cfg, "--data", tmp / "real", "--heldout", tmp / "real",
                         "--checkpoint", tmp / "run1" / "checkpoint.bin", "--out", tmp / "run2"))
    assert e2e["main_phase"] == "end-to-end" and e2e["stage1_grad_from_stage2"] > 0
    ref = json.loads(run("train", "stage1", "--refine", "--config", cfg, "--data", tmp / "real",
                         "--heldout", tmp / "real", "--checkpoint", tmp / "run1" / "checkpoint.bin",
                         "--out", tmp / "refine"))
    assert ref["main_phase"] == "refine-real", ref
    ini = json.loads(run("train", "init", "--config", cfg, "--data", tmp / "syn", "--heldout", tmp / "syn",
                         "--checkpoint", tmp / "run2" / "checkpoint.bin", "--out", tmp / "run3"))
    assert ini["init_phase"] == "pretrain-synthetic" and ini["main_phase"] == "end-to-end"
    ckpt = tmp / "run3" / "checkpoint.bin"

    run("eval", "--checkpoint", ckpt, "--data", tmp / "real", "--split", "all", "--out", tmp / "eval")
    metrics = json.loads((tmp / "eval" / "metrics.json").read_text())
    assert {"l1", "perceptual", "mse", "psnr_db", "ssim", "fid_proxy"} <= metrics.keys()

    image, mask = tmp / "real" / "images" / "000000.png", tmp / "real" / "masks" / "000000.png"
    run("annotate", "--image", image, "--mask", mask, "--out", tmp / "ann")
    assert json.loads((tmp / "ann" / "strokes.json").read_text())["version"] == 1
    syn = json.loads(run("synth", "--checkpoint", ckpt, "--image", image, "--mask", mask, "--out", tmp / "out"))
    assert syn["timing_ms"]["total"] > 0 and (tmp / "out" / "result.png").exists()
    run("synth", "--checkpoint", ckpt, "--image", image, "--mask", mask, "--init", "--color", 0.5, 0.3, 0.1,
        "--out", tmp / "out_init")

    run("dataset", "gen", "--config", cfg, "--seed", 9, "--count", 8, "--domain", "shifted", "--out", tmp / "held")
    run("ablate", "--config", cfg, "--synthetic", tmp / "syn", "--real", tmp / "real", "--heldout", tmp / "held",
        "--out", tmp / "abl")
    rows = json.loads((tmp / "abl" / "ablation.json").read_text())["rows"]
    assert [r["variant"] for r in rows][-1] == "Ours" and len(rows) == 7

    srv = subprocess.Popen([CLI, "serve", "--checkpoint", ckpt, "--port", "0", "--seed", "3", "--out", tmp / "srv"],
                           stdout=subprocess.PIPE, text=True)
    try:
        port = json.loads(srv.stdout.readline())["port"]
        status, health = call(port, "GET", "/healthz")
        assert status == 200 and health["checkpoint"] and health["phase"] == "end-to-end"
        status, sess = call(port, "POST", "/sessions", {"image": b64(image), "mask": b64(mask)})
        assert status == 201 and sess["revision"] == 0, sess
        sid = sess["id"]
        status, edit = call(port, "POST", f"/sessions/{sid}/edits",
                            {"op": "mask-brush", "points": [[10, 10], [20, 14]], "radius": 3})
        assert status == 200 and edit["revision"] == 1 and edit["mask_pixels"] > sess["mask_pixels"]
        status, edit = call(port, "POST", f"/sessions/{sid}/edits",
                            {"op": "stroke-add", "points": [[10, 10], [14, 12], [18, 13]],
                             "color": [0.9, 0.1, 0.1, 0.5]})
        assert status == 200 and edit["strokes"] == sess["strokes"] + 1
        status, p1 = call(port, "GET", f"/sessions/{sid}/preview")
        assert status == 200 and not p1["cached"] and p1["timing_ms"]["total"] > 0
        status, p2 = call(port, "GET", f"/sessions/{sid}/preview")
        assert status == 200 and p2["cached"] and p2["image"] == p1["image"]
        status, undo = call(port, "POST", f"/sessions/{sid}/edits", {"op": "undo"})
        assert status == 200 and undo["revision"] == 3 and undo["strokes"] == sess["strokes"]
        status, err = call(port, "GET", "/sessions/nope/preview")
        assert status == 404 and err["error"] == "unknown_session"
        status, err = call(port, "POST", f"/sessions/{sid}/edits", {"op": "field-brush", "center": [500, 5],
                                                                     "radius": 4, "angle": 1.0})
        assert status == 400
    finally:
        srv.terminate()
        srv.wait(timeout=10)
    assert srv.returncode == 0, srv.returncode


if __name__ == "__main__":
    main()
