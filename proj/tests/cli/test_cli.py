"""End-to-end checks of the equips executable: exit codes, subcommand
consistency with sweep, and NPY interchange with numpy."""

import csv
import json
import os
import subprocess
import sys
import tempfile
import unittest

EQUIPS = os.environ.get("EQUIPS_EXE", "equips")

try:
    import numpy as np
except ImportError:  # numpy interop cases are skipped
    np = None


def run(*args, env=None, cwd=None):
    full_env = dict(os.environ)
    full_env.pop("EQUIPS_THREADS", None)
    if env:
        full_env.update(env)
    return subprocess.run([EQUIPS, *args], capture_output=True, text=True, env=full_env, cwd=cwd)


def distribution_rows(path):
    with open(path, newline="") as f:
        return {float(r["percentile"]): float(r["quantity"]) for r in csv.DictReader(f)}


class CliTest(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def path(self, *parts):
        return os.path.join(self.dir, *parts)

    def write_config(self, name, doc):
        p = self.path(name)
        with open(p, "w") as f:
            json.dump(doc, f)
        return p

    def small_phantom(self, **extra):
        doc = {"input": {"phantom": {"shape": [20, 20, 20], "samples": 16}}, "seed": 5}
        doc.update(extra)
        return doc

    # exit codes

    def test_usage_errors_exit_2(self):
        self.assertEqual(run().returncode, 2)
        self.assertEqual(run("nosuch").returncode, 2)
        self.assertEqual(run("sweep", "--threads", "many").returncode, 2)
        self.assertEqual(run("sweep", "--config", self.path("absent.json")).returncode, 2)

    def test_help_and_version_exit_0(self):
        self.assertEqual(run("--help").returncode, 0)
        r = run("--version")
        self.assertEqual(r.returncode, 0)
        self.assertRegex(r.stdout.strip(), r"^\d+\.\d+\.\d+$")

    def test_invalid_input_exits_2(self):
        r = run("sweep", "--percentiles", "15.9,50,150", "--out", self.path("o"))
        self.assertEqual(r.returncode, 2)
        self.assertIn("150", r.stderr)
        cfg = self.write_config("bad.json", {"unexpected": True})
        self.assertEqual(run("sweep", "--config", cfg).returncode, 2)
        r = run("sweep", "--out", self.path("o"), env={"EQUIPS_THREADS": "zero"})
        self.assertEqual(r.returncode, 2)

    def test_solver_failure_exits_3_with_partial_manifest(self):
        cfg = self.write_config("c.json", self.small_phantom(
            physics={"kind": "conductivity", "k_outside": 0.05},
            solver={"max_iterations": 1},
            outputs={"directory": "out"}))
        r = run("sweep", "--config", cfg)
        self.assertEqual(r.returncode, 3, r.stderr)
        self.assertIn("stage 'simulate'", r.stderr)
        with open(self.path("out", "manifest.json")) as f:
            self.assertTrue(json.load(f)["partial"])

    def test_io_failure_exits_4(self):
        cfg = self.write_config("c.json", {"input": {"probability_map": "missing.npy"}})
        r = run("sweep", "--config", cfg, "--out", self.path("o"))
        self.assertEqual(r.returncode, 4, r.stderr)
        with open(self.path("junk.npy"), "wb") as f:
            f.write(b"not an npy file at all")
        self.assertEqual(run("info", self.path("junk.npy")).returncode, 4)

    # consistency

    def test_threshold_and_simulate_match_sweep(self):
        cfg = self.write_config("c.json", self.small_phantom(outputs={"directory": "out"}))
        r = run("sweep", "--config", cfg)
        self.assertEqual(r.returncode, 0, r.stderr)
        swept = distribution_rows(self.path("out", "distribution.csv"))
        self.assertEqual(len(swept), 3)

        r = run("threshold", "--config", cfg, "--out", self.path("seg"))
        self.assertEqual(r.returncode, 0, r.stderr)
        for q, tag in ((15.9, "15.9"), (50.0, "50"), (84.1, "84.1")):
            seg = self.path("seg", f"seg_q{tag}.npy")
            r = run("simulate", "--config", cfg, "--segmentation", seg, "--percentile", str(q))
            self.assertEqual(r.returncode, 0, r.stderr)
            value = float(r.stdout.strip().splitlines()[-1].split(",")[1])
            self.assertEqual(value, swept[q], tag)

        r = run("simulate", "--config", cfg, "--out", self.path("sim"))
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(distribution_rows(self.path("sim", "simulate.csv")), swept)

    def test_reruns_are_byte_identical(self):
        cfg = self.write_config("c.json", self.small_phantom())
        for name in ("a", "b"):
            self.assertEqual(run("sweep", "--config", cfg, "--out", self.path(name)).returncode, 0)
        for f in ("distribution.csv", "report.json", "umap.npy"):
            with open(self.path("a", f), "rb") as x, open(self.path("b", f), "rb") as y:
                self.assertEqual(x.read(), y.read(), f)

    def test_thread_precedence(self):
        out = self.path("o")
        self.assertEqual(run("sweep", "--out", out, env={"EQUIPS_THREADS": "3"}).returncode, 0)
        self.assertEqual(manifest(out)["threads"], 3)
        cfg = self.write_config("c.json", {"threads": 2})
        self.assertEqual(run("sweep", "--config", cfg, "--out", out,
                             env={"EQUIPS_THREADS": "3"}).returncode, 0)
        self.assertEqual(manifest(out)["threads"], 2)
        self.assertEqual(run("sweep", "--config", cfg, "--out", out, "--threads", "4").returncode, 0)
        self.assertEqual(manifest(out)["threads"], 4)

    def test_fit_and_check(self):
        table = self.path("t.csv")
        with open(table, "w") as f:
            f.write("percentile,quantity\n15.9,8\n50,10\n84.1,12\n")
        r = run("fit", "--samples", table)
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertIn("location 10", r.stdout)
        r = run("check", "--samples", table)
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertIn("monotone yes", r.stdout)
        self.assertEqual(run("check").returncode, 2)

        series = self.path("s.csv")
        with open(series, "w") as f:
            f.write("percentile,time,value\n")
            for t in range(5):
                f.write(f"15.9,{t},1\n50,{t},{3 if t == 2 else 2}\n84.1,{t},2.5\n")
        r = run("check", "--series", series)
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertIn("15.9/84.1 violations 1", r.stdout)

    def test_mesh_writes_binary_stl(self):
        r = run("mesh", "--out", self.path("m"), "--percentiles", "15.9,50,84.1")
        self.assertEqual(r.returncode, 0, r.stderr)
        stl = self.path("m", "mesh_q50.stl")
        size = os.path.getsize(stl)
        with open(stl, "rb") as f:
            f.seek(80)
            count = int.from_bytes(f.read(4), "little")
        self.assertGreater(count, 0)
        self.assertEqual(size, 84 + 50 * count)
        self.assertEqual(run("info", stl).returncode, 0)

    # numpy interchange

    @unittest.skipIf(np is None, "numpy not installed")
    def test_numpy_reads_outputs(self):
        cfg = self.write_config("c.json", self.small_phantom())
        for args in (("probmap",), ("probmap", "--dtype", "float32"), ("umap",), ("threshold",)):
            out = self.path("o" + "_".join(args))
            r = run(*args, "--config", cfg, "--out", out)
            self.assertEqual(r.returncode, 0, r.stderr)
        p64 = np.load(self.path("oprobmap", "probability.npy"))
        p32 = np.load(self.path("oprobmap_--dtype_float32", "probability.npy"))
        u = np.load(self.path("oumap", "umap.npy"))
        self.assertEqual(p64.dtype, np.float64)
        self.assertEqual(p32.dtype, np.float32)
        self.assertEqual(p64.shape, (20, 20, 20))
        self.assertTrue(np.array_equal(p32, p64.astype(np.float32)))
        self.assertTrue(np.allclose(u, 1.0 - np.abs(2.0 * p64 - 1.0), atol=0, rtol=0))
        seg = np.load(self.path("othreshold", "seg_q50.npy"))
        self.assertEqual(seg.dtype, np.uint8)
        self.assertTrue(np.array_equal(seg.astype(bool), p64 >= 0.5))

    @unittest.skipIf(np is None, "numpy not installed")
    def test_numpy_written_map_is_accepted(self):
        rng = np.random.default_rng(3)
        z = np.arange(12)[:, None, None]
        p = np.clip(1.0 - (z + 0.5) / 12 + 0.01 * rng.standard_normal((12, 10, 8)), 0, 1)
        # numpy axis order (z, y, x) maps onto the x-fastest voxel order
        np.save(self.path("p.npy"), p)
        np.save(self.path("p_fortran.npy"), np.asfortranarray(p))
        cfg = self.write_config("c.json", {"input": {"probability_map": "p.npy"}})
        r = run("probmap", "--config", cfg, "--out", self.path("o"))
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertTrue(np.array_equal(np.load(self.path("o", "probability.npy")), p))
        r = run("info", self.path("p_fortran.npy"))
        self.assertEqual(r.returncode, 4)


def manifest(out):
    with open(os.path.join(out, "manifest.json")) as f:
        return json.load(f)


if __name__ == "__main__":
    if len(sys.argv) > 1:
        EQUIPS = sys.argv.pop(1)
    unittest.main(verbosity=2)
