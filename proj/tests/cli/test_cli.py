#!/usr/bin/env python3
"""End-to-end checks of the flarepp executable: outputs, manifests and exit codes.

Usage: test_cli.py PATH_TO_FLAREPP
"""

import csv
import json
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

BIN = None


def run(*args, cwd):
    return subprocess.run([BIN, *map(str, args)], cwd=cwd, capture_output=True, text=True)


def parse_report(text):
    return {k: v for k, v in (line.split("=", 1) for line in text.strip().splitlines())}


class CliTest(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def ok(self, *args):
        r = run(*args, cwd=self.dir)
        self.assertEqual(r.returncode, 0, msg=r.stderr)
        return r

    def prepared(self):
        self.ok("gen", "--preset", "reference", "--scale", "200", "--seed", "7", "--out", "raw")
        self.ok("prepare", "--in", "raw", "--balance", "--out", "prep")
        return self.dir / "prep"

    def test_version(self):
        r = self.ok("--version")
        self.assertRegex(r.stdout.strip(), r"^\d+\.\d+\.\d+$")

    def test_no_subcommand_is_usage_error(self):
        self.assertEqual(run(cwd=self.dir).returncode, 2)
        self.assertEqual(run("frobnicate", cwd=self.dir).returncode, 2)

    def test_gen_counts_rows_and_labels(self):
        self.ok("gen", "--counts", "FQ=100,C=50,M=20", "--seed", "1", "--out", "d")
        with open(self.dir / "d" / "manifest.csv") as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(len(rows), 170)
        by_class = {}
        for row in rows:
            by_class[row["subclass"]] = by_class.get(row["subclass"], 0) + 1
            self.assertEqual(row["label"], "FL" if row["subclass"] in ("M", "X") else "NF")
            self.assertTrue((self.dir / "d" / row["image_path"]).is_file())
        self.assertEqual(by_class, {"FQ": 100, "C": 50, "M": 20})

    def test_gen_is_deterministic(self):
        self.ok("gen", "--counts", "FQ=20,X=5", "--seed", "3", "--out", "a")
        self.ok("gen", "--counts", "FQ=20,X=5", "--seed", "3", "--out", "b")
        self.ok("gen", "--counts", "FQ=20,X=5", "--seed", "4", "--out", "c")
        a = (self.dir / "a" / "manifest.csv").read_text()
        self.assertEqual(a, (self.dir / "b" / "manifest.csv").read_text())
        first = sorted((self.dir / "a" / "images").iterdir())[0].name
        self.assertEqual((self.dir / "a" / "images" / first).read_bytes(),
                         (self.dir / "b" / "images" / first).read_bytes())
        self.assertNotEqual((self.dir / "a" / "images" / first).read_bytes(),
                            (self.dir / "c" / "images" / first).read_bytes())

    def test_gen_zero_counts(self):
        self.ok("gen", "--counts", "FQ=0", "--out", "z")
        lines = (self.dir / "z" / "manifest.csv").read_text().strip().splitlines()
        self.assertEqual(len(lines), 1)

    def test_gen_rejects_bad_input(self):
        self.assertEqual(run("gen", "--counts", "Q=3", "--out", "x", cwd=self.dir).returncode, 2)
        self.assertEqual(run("gen", "--out", "x", cwd=self.dir).returncode, 2)
        self.assertEqual(run("gen", "--counts", "FQ=1", "--threshold", ">=FQ", "--out", "x",
                             cwd=self.dir).returncode, 2)

    def test_prepare_balances_train_only(self):
        prep = self.prepared()
        info = json.loads((prep / "prepare.json").read_text())
        before, after = info["train_before"], info["train_after"]
        for cls in ("M", "X"):
            self.assertEqual(after[cls], 6 * before[cls])
        for cls in ("A", "B", "C"):
            self.assertEqual(after[cls], round(0.3 * before[cls]))
        self.assertEqual(info["threshold"], ">=M")
        with open(prep / "manifest.csv") as f:
            rows = list(csv.DictReader(f))
        aug = [r for r in rows if r["sample_id"].endswith(("-vflip", "-hflip", "-noise", "-blur", "-polarity"))]
        self.assertTrue(aug)
        self.assertTrue(all(r["partition"] in ("1", "2") for r in aug))

    def test_prepare_relabels_for_threshold(self):
        self.ok("gen", "--preset", "reference", "--scale", "400", "--out", "raw")
        self.ok("prepare", "--in", "raw", "--threshold", ">=C", "--out", "prep")
        with open(self.dir / "prep" / "manifest.csv") as f:
            for row in csv.DictReader(f):
                self.assertEqual(row["label"], "FL" if row["subclass"] in ("C", "M", "X") else "NF")

    def test_prepare_missing_partition_is_usage_error(self):
        self.ok("gen", "--counts", "FQ=30,M=10", "--partitions", "1,2,3", "--out", "raw")
        r = run("prepare", "--in", "raw", "--out", "prep", cwd=self.dir)
        self.assertEqual(r.returncode, 2)
        self.assertIn("partition", r.stderr)
        manifest = json.loads((self.dir / "prep" / "manifest.json").read_text())
        self.assertEqual(manifest["exit_code"], 2)

    def test_prepare_bad_threshold_and_missing_input(self):
        self.ok("gen", "--counts", "FQ=5", "--out", "raw")
        self.assertEqual(run("prepare", "--in", "raw", "--threshold", "M", "--out", "p",
                             cwd=self.dir).returncode, 2)
        self.assertEqual(run("prepare", "--in", "nowhere", "--out", "p", cwd=self.dir).returncode, 5)

    def test_metrics_report(self):
        r = self.ok("metrics", "--tp", "973", "--fp", "2969", "--tn", "104192", "--fn", "565")
        rep = parse_report(r.stdout)
        self.assertEqual(list(rep), ["tp", "fp", "tn", "fn", "tss", "hss", "css"])
        tp, fp, tn, fn = 973, 2969, 104192, 565
        tss = tp / (tp + fn) - fp / (fp + tn)
        hss = 2 * (tp * tn - fp * fn) / ((tp + fn) * (fn + tn) + (tp + fp) * (fp + tn))
        self.assertAlmostEqual(float(rep["tss"]), tss, places=4)
        self.assertAlmostEqual(float(rep["hss"]), hss, places=4)
        self.assertAlmostEqual(float(rep["css"]), (tss * hss) ** 0.5, places=4)

    def test_metrics_negative_skill_gives_zero_css(self):
        rep = parse_report(self.ok("metrics", "--tp", "1", "--fp", "9", "--tn", "1", "--fn", "9").stdout)
        self.assertLess(float(rep["tss"]), 0)
        self.assertEqual(float(rep["css"]), 0.0)

    def test_metrics_undefined(self):
        r = run("metrics", "--tp", "0", "--fp", "0", "--tn", "10", "--fn", "0", cwd=self.dir)
        self.assertEqual(r.returncode, 4)
        self.assertIn("undefined", r.stderr)

    def test_curves(self):
        r = self.ok("curves", "--alpha", "0.25,1", "--grid", "11", "--out", "cv")
        files = sorted(p.name for p in (self.dir / "cv").glob("curve_*.csv"))
        self.assertEqual(len(files), 12)
        self.assertIn("curve_M_FL_a0.25.csv", files)
        self.assertIn("curve_FQ_NF_a1.csv", files)
        with open(self.dir / "cv" / "curve_FQ_NF_a1.csv") as f:
            rows = list(csv.reader(f))
        self.assertEqual(len(rows), 12)
        for row in rows[1:]:
            self.assertAlmostEqual(float(row[-1]), float(row[-2]), places=12)
        self.assertEqual(r.stderr, "")

    def test_curves_alpha_outside_range_warns(self):
        r = self.ok("curves", "--alpha", "2", "--grid", "3", "--out", "cv")
        self.assertIn("warning", r.stderr)
        self.assertEqual(run("curves", "--alpha", "0", "--out", "cv", cwd=self.dir).returncode, 2)
        self.assertEqual(run("curves", "--grid", "1", "--out", "cv", cwd=self.dir).returncode, 2)

    def test_train_defaults_recorded(self):
        prep = self.prepared()
        self.ok("train", "--data", prep, "--loss", "bce", "--epochs", "3", "--out", "bce")
        self.ok("train", "--data", prep, "--loss", "bce-pp", "--epochs", "3", "--out", "pp")
        bce = json.loads((self.dir / "bce" / "manifest.json").read_text())["config"]
        pp = json.loads((self.dir / "pp" / "manifest.json").read_text())["config"]
        self.assertEqual((bce["lr"], bce["weight_decay"], bce["batch_size"]), (0.01, 0.01, 64))
        self.assertEqual((pp["lr"], pp["weight_decay"], pp["batch_size"], pp["alpha"]), (0.001, 0.001, 64, 0.75))
        with open(self.dir / "pp" / "epoch_log.csv") as f:
            log = list(csv.DictReader(f))
        self.assertEqual(len(log), 3)
        self.assertEqual(list(log[0]), ["epoch", "train_loss", "val_loss", "val_tss", "val_hss", "val_css", "lr"])

    def test_train_config_file_and_flag_precedence(self):
        prep = self.prepared()
        (self.dir / "c.ini").write_text("# settings\nloss = bce-pp\nlr = 0.05\nbatch_size = 32\nepochs = 2\n")
        self.ok("train", "--data", prep, "--config", "c.ini", "--lr", "0.02", "--out", "t")
        cfg = json.loads((self.dir / "t" / "manifest.json").read_text())["config"]
        self.assertEqual((cfg["lr"], cfg["batch_size"], cfg["epochs"]), (0.02, 32, 2))
        (self.dir / "bad.ini").write_text("learning = 1\n")
        self.assertEqual(run("train", "--data", prep, "--config", "bad.ini", "--out", "u",
                             cwd=self.dir).returncode, 2)

    def test_train_alpha_warning_and_validation(self):
        prep = self.prepared()
        r = self.ok("train", "--data", prep, "--alpha", "0.1", "--epochs", "1", "--out", "t")
        self.assertIn("warning", r.stderr)
        self.assertEqual(run("train", "--data", prep, "--alpha", "-1", "--out", "t", cwd=self.dir).returncode, 2)
        self.assertEqual(run("train", "--data", prep, "--batch-size", "0", "--out", "t", cwd=self.dir).returncode, 2)

    def test_train_divergence_exit_code(self):
        prep = self.prepared()
        r = run("train", "--data", prep, "--loss", "bce", "--lr", "1e300", "--epochs", "3", "--out", "t",
                cwd=self.dir)
        self.assertEqual(r.returncode, 3, msg=r.stderr)

    def test_train_grid(self):
        prep = self.prepared()
        self.ok("train", "--data", prep, "--loss", "bce-pp", "--grid", "--grid-lr", "0.01,0.001",
                "--grid-wd", "0.001", "--grid-batch", "64", "--grid-alpha", "0.5,1", "--epochs", "2",
                "--workers", "2", "--out", "g")
        with open(self.dir / "g" / "leaderboard.csv") as f:
            rows = list(csv.reader(f))
        self.assertEqual(len(rows), 5)
        self.assertTrue((self.dir / "g" / "checkpoint.txt").is_file())

    def test_eval_and_replay(self):
        prep = self.prepared()
        self.ok("train", "--data", prep, "--epochs", "3", "--seed", "5", "--out", "t")
        rep = parse_report(self.ok("eval", "--checkpoint", "t/checkpoint.txt", "--data", prep,
                                   "--split", "val", "--out", "ev").stdout)
        self.assertEqual(set(rep), {"tp", "fp", "tn", "fn", "tss", "hss", "css"})
        self.assertLessEqual(float(rep["css"]), 1.0)
        ckpt = (self.dir / "t" / "checkpoint.txt").read_bytes()
        log = (self.dir / "t" / "epoch_log.csv").read_bytes()
        (self.dir / "t" / "checkpoint.txt").unlink()
        self.ok("replay", "--manifest", "t/manifest.json")
        self.assertEqual((self.dir / "t" / "checkpoint.txt").read_bytes(), ckpt)
        self.assertEqual((self.dir / "t" / "epoch_log.csv").read_bytes(), log)
        self.assertEqual(run("eval", "--checkpoint", "missing.txt", "--data", prep, "--out", "ev",
                             cwd=self.dir).returncode, 5)
        self.assertEqual(run("eval", "--checkpoint", "t/checkpoint.txt", "--data", prep, "--split", "dev",
                             "--out", "ev", cwd=self.dir).returncode, 2)

    def test_manifest_only(self):
        prep = self.prepared()
        self.ok("--manifest-only", "train", "--data", prep, "--out", "t")
        manifest = json.loads((self.dir / "t" / "manifest.json").read_text())
        self.assertTrue(manifest["dry_run"])
        self.assertEqual(manifest["command"], "train")
        self.assertFalse((self.dir / "t" / "checkpoint.txt").exists())


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    BIN = str(Path(sys.argv.pop(1)).resolve())
    unittest.main(verbosity=2)
