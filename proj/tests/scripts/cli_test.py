#!/usr/bin/env python3
# Copyright 2026 The tokplan Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""End-to-end checks of the tokplan command-line tool.

Usage: cli_test.py <tokplan binary> <configs dir>
"""

import filecmp
import json
import math
import os
import shutil
import subprocess
import sys
import tempfile
import time
import unittest

CLI = None
CONFIGS = None


def run(args, cwd, expect=0):
    proc = subprocess.run([CLI] + args, cwd=cwd, capture_output=True, text=True)
    if expect is not None and proc.returncode != expect:
        raise AssertionError(
            f"{' '.join(args)}: exit {proc.returncode}, wanted {expect}\n"
            f"stdout:\n{proc.stdout}\nstderr:\n{proc.stderr}")
    return proc


def read_jsonl(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def write_jsonl(path, records):
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")


def wrap(theta):
    t = math.remainder(theta, 2 * math.pi)
    return math.pi if t == -math.pi else t


def compose(pose, delta):
    x, y, th = pose
    dx, dy, dth = delta
    c, s = math.cos(th), math.sin(th)
    return [x + c * dx - s * dy, y + s * dx + c * dy, wrap(th + dth)]


def stdout_value(text, key):
    for line in text.splitlines():
        parts = line.split()
        if len(parts) == 2 and parts[0] == key:
            return parts[1]
    raise AssertionError(f"no '{key}' in output:\n{text}")


class CliTest(unittest.TestCase):

    def setUp(self):
        self.dir = tempfile.mkdtemp(prefix="tokplan_cli_")

    def tearDown(self):
        shutil.rmtree(self.dir, ignore_errors=True)

    def path(self, *parts):
        return os.path.join(self.dir, *parts)

    # -- usage and codebooks -------------------------------------------------

    def test_usage_errors_exit_one(self):
        run([], self.dir, expect=1)
        run(["no-such-command"], self.dir, expect=1)
        run(["gen-scenarios", "--n", "5", "--out", "s.jsonl"], self.dir, expect=1)  # no seed

    def test_empty_trajectory_file(self):
        open(self.path("empty.jsonl"), "w").close()
        proc = run(["build-codebook", "--trajectories", "empty.jsonl", "--seed", "1",
                    "--out", "cb.json"], self.dir, expect=2)
        self.assertIn("no trajectories", proc.stderr)

    def test_build_codebook(self):
        run(["gen-trajectories", "--seed", "3", "--n", "400", "--out", "corpus.jsonl"], self.dir)
        proc = run(["build-codebook", "--trajectories", "corpus.jsonl", "--seed", "4",
                    "--out", "cb.json"], self.dir)
        self.assertGreater(float(stdout_value(proc.stdout, "min_pairwise_distance")), 0.05)
        proc = run(["build-codebook", "--trajectories", "corpus.jsonl", "--seed", "4",
                    "--k-max", "16", "--out", "cb16.json"], self.dir)
        self.assertEqual(stdout_value(proc.stdout, "tokens"), "16")
        with open(self.path("cb16.json")) as f:
            self.assertEqual(len(json.load(f)["tokens"]), 16)

    # -- tokenization ----------------------------------------------------------

    def test_tokenize_roundtrip(self):
        run(["gen-trajectories", "--seed", "5", "--n", "200", "--out", "corpus.jsonl"], self.dir)
        run(["build-codebook", "--trajectories", "corpus.jsonl", "--seed", "6",
             "--out", "cb.json"], self.dir)
        with open(self.path("cb.json")) as f:
            tokens = json.load(f)["tokens"]
        # Trajectories composed here from codebook deltas, so they are exactly expressible.
        records = []
        for i in range(50):
            pose = [10.0 * i, -3.0 * i, wrap(0.37 * i)]
            poses = [pose]
            for k in range(10):
                pose = compose(pose, tokens[(7 * i + 3 * k) % len(tokens)])
                poses.append(pose)
            records.append({"id": f"r{i}", "poses": poses})
        write_jsonl(self.path("expr.jsonl"), records)
        run(["tokenize", "--trajectories", "expr.jsonl", "--codebook", "cb.json",
             "--out", "ids.jsonl"], self.dir)
        ids = read_jsonl(self.path("ids.jsonl"))
        self.assertEqual(len(ids), 50)
        for i, rec in enumerate(ids):
            self.assertEqual(rec["ids"], [(7 * i + 3 * k) % len(tokens) for k in range(10)])
        run(["detokenize", "--tokens", "ids.jsonl", "--codebook", "cb.json",
             "--out", "back.jsonl"], self.dir)
        back = read_jsonl(self.path("back.jsonl"))
        for a, b in zip(records, back):
            self.assertEqual(a["id"], b["id"])
            self.assertEqual(len(a["poses"]), len(b["poses"]))
            for p, q in zip(a["poses"], b["poses"]):
                self.assertLess(math.hypot(p[0] - q[0], p[1] - q[1]), 1e-9)

    def test_malformed_record_names_line(self):
        run(["gen-trajectories", "--seed", "5", "--n", "50", "--out", "corpus.jsonl"], self.dir)
        run(["build-codebook", "--trajectories", "corpus.jsonl", "--seed", "6",
             "--out", "cb.json"], self.dir)
        with open(self.path("corpus.jsonl")) as f:
            lines = f.read().splitlines()
        lines[2] = '{"id": "broken", "poses": [[0, 0, 0], [1, 0'
        with open(self.path("bad.jsonl"), "w") as f:
            f.write("\n".join(lines[:5]) + "\n")
        proc = run(["tokenize", "--trajectories", "bad.jsonl", "--codebook", "cb.json",
                    "--out", "ids.jsonl"], self.dir, expect=2)
        self.assertIn("bad.jsonl:3:", proc.stderr)

    # -- scenarios and evaluation ---------------------------------------------

    def test_gen_scenarios_deterministic_and_split(self):
        run(["gen-scenarios", "--seed", "3", "--n", "100", "--mix", "0.5", "--out", "a.jsonl"],
            self.dir)
        run(["gen-scenarios", "--seed", "3", "--n", "100", "--mix", "0.5", "--out", "b.jsonl"],
            self.dir)
        self.assertTrue(filecmp.cmp(self.path("a.jsonl"), self.path("b.jsonl"), shallow=False))
        suite = read_jsonl(self.path("a.jsonl"))
        self.assertEqual(sum(sc["complexity"] == "Complex" for sc in suite), 50)

    def test_eval_ground_truth_and_collisions(self):
        run(["gen-scenarios", "--seed", "8", "--n", "40", "--mix", "0.5", "--out", "s.jsonl",
             "--gt-out", "gt.jsonl"], self.dir)
        proc = run(["eval", "--plans", "gt.jsonl", "--scenarios", "s.jsonl", "--out", "gt_eval.json"],
                   self.dir)
        self.assertEqual(float(stdout_value(proc.stdout, "mean_pdms")), 1.0)
        self.assertEqual(float(stdout_value(proc.stdout, "collision_rate")), 0.0)

        # Drive straight into the first obstacle of every scenario that has one.
        suite = read_jsonl(self.path("s.jsonl"))
        plans = read_jsonl(self.path("gt.jsonl"))
        crashed = set()
        for sc, plan in zip(suite, plans):
            if sc["obstacles"]:
                plan["poses"] = sc["obstacles"][0]["poses"][:len(plan["poses"])]
                crashed.add(sc["id"])
        self.assertGreater(len(crashed), 5)
        write_jsonl(self.path("crash.jsonl"), plans)
        run(["eval", "--plans", "crash.jsonl", "--scenarios", "s.jsonl", "--out", "crash.json"],
            self.dir)
        with open(self.path("crash.json")) as f:
            report = json.load(f)
        for row in report["rows"]:
            if row["id"] in crashed:
                self.assertEqual(row["nc"], 0.0, row["id"])
                self.assertEqual(row["pdms"], 0.0, row["id"])
                self.assertTrue(row["collision"], row["id"])
            else:
                self.assertEqual(row["pdms"], 1.0, row["id"])
        self.check_aggregates(report, suite, plans)

    def check_aggregates(self, report, suite, plans):
        """Recomputes the report's aggregates and ADE values from rows and inputs."""
        gts = {sc["id"]: sc["gt"] for sc in suite}
        by_id = {p["id"]: p for p in plans}
        groups = {"all": [], "simple": [], "complex": []}
        for row in report["rows"]:
            pdms = row["nc"] * row["dac"] * (5 * row["ttc"] + 2 * row["comfort"] + 5 * row["ep"]) / 12
            self.assertAlmostEqual(row["pdms"], pdms, delta=1e-12)
            if not row["failed"]:
                plan = by_id[row["id"]]["poses"]
                gt = gts[row["id"]]
                ade = sum(math.hypot(p[0] - g[0], p[1] - g[1])
                          for p, g in zip(plan[1:], gt[1:])) / (len(gt) - 1)
                self.assertAlmostEqual(row["ade"], ade, delta=1e-9)
            groups["all"].append(row)
            groups[row["complexity"].lower()].append(row)
        for key, rows in groups.items():
            if not rows:
                continue
            agg = report["aggregates"][key]
            scored = [r for r in rows if not r["failed"]]
            n, m = len(rows), max(len(scored), 1)
            self.assertEqual(agg["count"], n)
            self.assertAlmostEqual(agg["mean_pdms"], sum(r["pdms"] for r in rows) / n, delta=1e-12)
            self.assertAlmostEqual(agg["mean_total_reward"],
                                   sum(r["r_total"] for r in rows) / n, delta=1e-12)
            self.assertAlmostEqual(agg["collision_rate"],
                                   sum(bool(r["collision"]) for r in scored) / m, delta=1e-12)
            self.assertAlmostEqual(agg["mean_ade"], sum(r["ade"] for r in scored) / m, delta=1e-12)
            self.assertAlmostEqual(agg["mean_rfs"], sum(r["rfs"] for r in scored) / m, delta=1e-12)
            for h in range(3):
                self.assertAlmostEqual(agg["mean_l2"][h],
                                       sum(r["l2"][h] for r in scored) / m, delta=1e-12)

    # -- training runs -------------------------------------------------------

    def quickstart(self, workdir):
        os.makedirs(workdir, exist_ok=True)
        run(["gen-scenarios", "--seed", "1", "--n", "200", "--mix", "0.5",
             "--out", "scenarios.jsonl"], workdir)
        start = time.monotonic()
        run(["sft", "--config", os.path.join(CONFIGS, "quickstart_sft.json")], workdir)
        sft_seconds = time.monotonic() - start
        run(["rft", "--config", os.path.join(CONFIGS, "quickstart_rft.json")], workdir)
        return sft_seconds

    def test_rft_requires_sft_checkpoint(self):
        run(["gen-scenarios", "--seed", "1", "--n", "20", "--out", "scenarios.jsonl"], self.dir)
        proc = run(["rft", "--config", os.path.join(CONFIGS, "quickstart_rft.json")], self.dir,
                   expect=2)
        self.assertIn("SFT checkpoint", proc.stderr)

    def test_report_without_curves(self):
        os.makedirs(self.path("empty_run"))
        proc = run(["report", "--run", "empty_run"], self.dir, expect=2)
        self.assertIn("missing curves file", proc.stderr)

    def test_quickstart_pipeline_is_deterministic(self):
        a, b = self.path("a"), self.path("b")
        sft_seconds = self.quickstart(a)
        self.quickstart(b)
        self.assertLess(sft_seconds, 300)

        with open(os.path.join(a, "runs", "sft", "sft_curve.tsv")) as f:
            rows = [line.split("\t") for line in f.read().splitlines()[1:]]
        losses = [float(r[1]) for r in rows]
        self.assertEqual(len(losses), 20)
        self.assertLess(losses[-1], 0.5 * losses[0])
        self.assertLess(losses[-1], min(losses[:-1]) + 1e-9 + 0.05 * losses[0])

        for run_dir in (a, b):
            run(["eval", "--plans", "runs/rft/plans.jsonl", "--scenarios", "scenarios.jsonl",
                 "--out", "eval.json"], run_dir)
            run(["report", "--run", "runs/rft"], run_dir)

        cmp = filecmp.dircmp(a, b)
        def same(d):
            self.assertFalse(d.left_only or d.right_only or d.diff_files or d.funny_files,
                             f"{d.left}: {d.left_only} {d.right_only} {d.diff_files}")
            for sub in d.subdirs.values():
                same(sub)
        # dircmp compares shallowly by default; compare every file's bytes too.
        same(cmp)
        for root, _, files in os.walk(a):
            for name in files:
                left = os.path.join(root, name)
                right = os.path.join(b, os.path.relpath(left, a))
                self.assertTrue(filecmp.cmp(left, right, shallow=False), left)

        report_dir = os.path.join(a, "runs", "rft", "report")
        for name in ("reward_vs_step.csv", "cot_length_vs_step.csv", "summary.tsv"):
            self.assertTrue(os.path.exists(os.path.join(report_dir, name)), name)
        with open(os.path.join(report_dir, "summary.tsv")) as f:
            table = {line.split("\t")[0]: line.split("\t")[1:] for line in f.read().splitlines()[1:]}
        for key in ("curve_mean_reward", "eval_all_mean_pdms", "eval_simple_mean_reasoning_len"):
            before, after, delta = map(float, table[key])
            self.assertAlmostEqual(after - before, delta, delta=1e-12)
        with open(os.path.join(a, "eval.json")) as f:
            report = json.load(f)
        self.check_aggregates(report, read_jsonl(os.path.join(a, "scenarios.jsonl")),
                              read_jsonl(os.path.join(a, "runs", "rft", "plans.jsonl")))


if __name__ == "__main__":
    if len(sys.argv) < 3:
        sys.exit(__doc__)
    CLI = os.path.abspath(sys.argv[1])
    CONFIGS = os.path.abspath(sys.argv[2])
    unittest.main(argv=sys.argv[:1], verbosity=2)
