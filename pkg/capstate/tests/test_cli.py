# **************************************************************************
# *
# * Authors:     Grigory Sharov (gsharov@mrc-lmb.cam.ac.uk) [1]
# *
# * [1] MRC Laboratory of Molecular Biology (MRC-LMB)
# *
# * This program is free software; you can redistribute it and/or modify
# * it under the terms of the GNU General Public License as published by
# * the Free Software Foundation; either version 3 of the License, or
# * (at your option) any later version.
# *
# * This program is distributed in the hope that it will be useful,
# * but WITHOUT ANY WARRANTY; without even the implied warranty of
# * MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# * GNU General Public License for more details.
# *
# * You should have received a copy of the GNU General Public License
# * along with this program; if not, write to the Free Software
# * Foundation, Inc., 59 Temple Place, Suite 330, Boston, MA
# * 02111-1307  USA
# *
# *  All comments concerning this program package may be sent to the
# *  e-mail address 'gsharov@mrc-lmb.cam.ac.uk'
# *
# **************************************************************************

import io
import json
import os
import tempfile
import unittest
from contextlib import redirect_stdout

import numpy as np
import pandas as pd

from capstate import main as cli
from capstate.tests import fixtures
from capstate.utils.spec_file import read_channel, write_channel


def run(*argv) -> tuple[int, str]:
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = cli.main(list(argv))
    return code, buffer.getvalue()


class TestCli(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, name: str) -> str:
        return os.path.join(self.tmp.name, name)

    def write_json(self, name: str, doc) -> str:
        path = self.path(name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(doc if isinstance(doc, str) else json.dumps(doc))
        return path

    def test_validate_examples(self):
        for name in sorted(os.listdir(fixtures.EXAMPLES_DIR)):
            code, out = run("validate", "--channel", fixtures.example_path(name))
            self.assertEqual(code, cli.EXIT_OK, msg=name)
            self.assertIn("PASS", out)
        print("[OK] validate examples test")

    def test_validate_failures(self):
        with open(fixtures.example_path("xor_single.json"), encoding="utf-8") as f:
            doc = json.load(f)
        doc["kernel"]["table"][0] = 0.98
        code, out = run("validate", "--channel", self.write_json("bad_row.json", doc))
        self.assertEqual(code, cli.EXIT_FAIL)
        self.assertIn("FAIL", out)

        path = self.path("not_degraded.json")
        write_channel(fixtures.non_degraded_bc(), path)
        self.assertEqual(run("validate", "--channel", path)[0], cli.EXIT_FAIL)
        self.assertEqual(run("region", "--channel", path, "--seed", "0")[0], cli.EXIT_FAIL)
        print("[OK] validate failures test")

    def test_parse_errors(self):
        self.assertEqual(run("validate", "--channel", self.write_json("broken.json", "{\"model\": "))[0],
                         cli.EXIT_PARSE)
        self.assertEqual(run("validate", "--channel", self.path("missing.json"))[0], cli.EXIT_PARSE)
        with open(fixtures.example_path("xor_single.json"), encoding="utf-8") as f:
            doc = json.load(f)
        doc["model"] = "interference"
        self.assertEqual(run("validate", "--channel", self.write_json("model.json", doc))[0], cli.EXIT_PARSE)
        doc["model"] = "single"
        doc["kernel"]["table"] = doc["kernel"]["table"][:-1]
        self.assertEqual(run("capacity", "--channel", self.write_json("short.json", doc))[0], cli.EXIT_PARSE)
        print("[OK] parse errors test")

    def test_usage_errors(self):
        bc = fixtures.example_path("bc_clean_bsc.json")
        self.assertEqual(run("capacity", "--channel", bc)[0], cli.EXIT_USAGE)
        self.assertEqual(run("validate", "--channel", bc, "--model", "mac")[0], cli.EXIT_USAGE)
        self.assertEqual(run("region", "--channel", bc, "--model", "mac")[0], cli.EXIT_USAGE)
        with self.assertRaises(SystemExit) as cm:
            with redirect_stdout(io.StringIO()):
                cli.main(["capacity"])
        self.assertEqual(cm.exception.code, cli.EXIT_USAGE)
        print("[OK] usage errors test")

    def test_canonical_round_trip(self):
        first, second = self.path("first.json"), self.path("second.json")
        for name in ("xor_single.json", "relay_two_hop.json", "mac_adder.json"):
            self.assertEqual(run("validate", "--channel", fixtures.example_path(name),
                                 "--dump-canonical", first)[0], cli.EXIT_OK)
            self.assertEqual(run("validate", "--channel", first, "--dump-canonical", second)[0], cli.EXIT_OK)
            with open(first, encoding="utf-8") as a, open(second, encoding="utf-8") as b:
                self.assertEqual(a.read(), b.read())
            original = read_channel(fixtures.example_path(name))
            np.testing.assert_array_equal(read_channel(second).kernel, original.kernel)
        print("[OK] canonical round trip test")

    def test_capacity(self):
        code, out = run("capacity", "--channel", fixtures.example_path("xor_single.json"))
        self.assertEqual(code, cli.EXIT_OK)
        self.assertIn("C = 1.000000 (exact)", out)

        code, out = run("capacity", "--channel", fixtures.example_path("relay_two_hop.json"),
                        "--seed", "1", "--restarts", "8")
        self.assertEqual(code, cli.EXIT_OK)
        self.assertIn("C >= ", out)
        self.assertIn("binding:", out)
        print("[OK] capacity command test")

    def test_region_reproducible(self):
        tables = []
        for name in ("a.csv", "b.csv"):
            args = ["region", "--channel", fixtures.example_path("mac_adder.json"),
                    "--seed", "1", "--samples", "64", "--out", self.path(name)]
            self.assertEqual(run(*args)[0], cli.EXIT_OK)
            tables.append(pd.read_csv(self.path(name), comment="#"))
        pd.testing.assert_frame_equal(tables[0], tables[1])
        self.assertEqual(list(tables[0].columns), ["region", "r1_bits", "r2_bits", "provenance"])
        self.assertEqual(set(tables[0]["region"]), {"inner", "outer"})
        inner = tables[0][tables[0]["region"] == "inner"]
        self.assertAlmostEqual(float((inner["r1_bits"] + inner["r2_bits"]).max()), 1.5, delta=1e-9)

        with open(self.path("a.csv"), encoding="utf-8") as f:
            header = [line for line in f if line.startswith("#")]
        self.assertIn("# seed: 1\n", header)
        self.assertTrue(any(line.startswith("# version: ") for line in header))
        print("[OK] region reproducibility test")

    def test_bc_region(self):
        out = self.path("bc.csv")
        code, _ = run("region", "--channel", fixtures.example_path("bc_clean_bsc.json"), "--seed", "2",
                      "--lambda-points", "5", "--restarts", "4", "--out", out)
        self.assertEqual(code, cli.EXIT_OK)
        table = pd.read_csv(out, comment="#")
        self.assertTrue((table["region"] == "bc").all())
        self.assertAlmostEqual(float(table["r1_bits"].max()), 1.0, delta=1e-6)
        print("[OK] broadcast region command test")

    def test_simulate(self):
        tables = []
        for name in ("a.csv", "b.csv"):
            args = ["simulate", "--channel", fixtures.example_path("xor_single.json"), "--seed", "3",
                    "--rate", "0.25", "0.5", "--blocklength", "8", "--trials", "20", "--out", self.path(name)]
            self.assertEqual(run(*args)[0], cli.EXIT_OK)
            tables.append(pd.read_csv(self.path(name), comment="#"))
        pd.testing.assert_frame_equal(tables[0], tables[1])
        self.assertEqual(len(tables[0]), 2)
        self.assertEqual(list(tables[0]["nominal_rate"]), [0.25, 0.5])
        for column in ("effective_rate", "error_rate", "wilson_half_width", "union_bound"):
            self.assertIn(column, tables[0].columns)
        print("[OK] simulate command test")

    def test_simulate_broadcast(self):
        out = self.path("bc.csv")
        code, _ = run("simulate", "--channel", fixtures.example_path("bc_clean_bsc.json"), "--seed", "4",
                      "--rate1", "0", "0.75", "--rate2", "0.5", "--blocklength", "8", "--trials", "100",
                      "--lambda-points", "5", "--restarts", "4", "--out", out)
        self.assertEqual(code, cli.EXIT_OK)
        table = pd.read_csv(out, comment="#")
        self.assertEqual(len(table), 2)
        self.assertTrue((table["scheme"] == "bc").all())
        self.assertEqual(list(table["nominal_rate1"]), [0.0, 0.75])
        # 2^10 message pairs against 2^8 noiseless outputs at receiver 1
        self.assertGreaterEqual(float(table["receiver1_error_rate"].iloc[1]), 0.5)
        self.assertIn("receiver2_error_rate", table.columns)
        print("[OK] simulate broadcast command test")

    def test_simulate_relay(self):
        out = self.path("relay.csv")
        code, _ = run("simulate", "--channel", fixtures.example_path("relay_two_hop.json"), "--seed", "5",
                      "--rate", "0", "0.25", "--rate0", "0.25", "--blocklength", "8", "--blocks", "3",
                      "--trials", "50", "--restarts", "4", "--out", out)
        self.assertEqual(code, cli.EXIT_OK)
        table = pd.read_csv(out, comment="#")
        self.assertEqual(len(table), 2)
        self.assertTrue((table["scheme"] == "relay").all())
        self.assertEqual(int(table["units"].iloc[0]), 100)
        self.assertEqual(float(table["error_rate"].iloc[0]), 0.0)
        for column in ("nominal_rate0", "effective_rate0", "event_bin_stage", "holds R0 < I(T1;Y)"):
            self.assertIn(column, table.columns)
        print("[OK] simulate relay command test")

    def test_simulate_mac(self):
        out = self.path("mac.csv")
        code, _ = run("simulate", "--channel", fixtures.example_path("mac_adder.json"), "--seed", "6",
                      "--rate1", "0.25", "--rate2", "0.25", "--blocklength", "8", "--trials", "50",
                      "--samples", "64", "--out", out)
        self.assertEqual(code, cli.EXIT_OK)
        table = pd.read_csv(out, comment="#")
        self.assertEqual(len(table), 1)
        self.assertEqual(table["scheme"].iloc[0], "mac")
        self.assertTrue(bool(table["holds R1 + R2 < I(T1,T2;Y)"].iloc[0]))
        self.assertLessEqual(float(table["error_rate"].iloc[0]), 0.2)
        print("[OK] simulate MAC command test")

    def test_simulate_cap(self):
        code, _ = run("simulate", "--channel", fixtures.example_path("xor_single.json"), "--seed", "0",
                      "--rate", "3", "--blocklength", "8", "--trials", "1")
        self.assertEqual(code, cli.EXIT_CAP)
        print("[OK] simulate cap test")


if __name__ == '__main__':
    unittest.main()
