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

import unittest

import numpy as np

from capstate.channels import (StateChannel, check_bc_degraded, check_relay_degraded,
                               enumerate_strategies, induced_bc_strategy_channel,
                               induced_mac_joint, induced_relay_joint, induced_strategy_channel,
                               strategy_tables)
from capstate.probcore import Factor, JointPmf, assemble_joint, mutual_information
from capstate.tests import fixtures
from capstate.utils.errors import AxisError, CapExceededError, ChannelValidationError


class TestChannels(unittest.TestCase):

    def test_enumerate_strategies(self):
        maps = enumerate_strategies(2, 2)
        self.assertEqual([m.table for m in maps], [(0, 0), (0, 1), (1, 0), (1, 1)])
        self.assertEqual(str(maps[1]), "[0,1]")
        self.assertEqual(maps[2](0), 1)
        self.assertEqual(len(enumerate_strategies(3, 2)), 9)
        self.assertEqual([m.table for m in enumerate_strategies(2, 1)], [(0,), (1,)])
        with self.assertRaises(CapExceededError):
            strategy_tables(4, 7)
        self.assertEqual(strategy_tables(4, 7, cap=4 ** 7).shape, (4 ** 7, 7))
        print("[OK] strategy enumeration test")

    def test_channel_validation(self):
        kernel = np.full((2, 2, 2), 0.5)
        kernel[1, 0] = [0.5, 0.48]
        with self.assertRaises(ChannelValidationError):
            StateChannel(kernel, np.array([0.5, 0.5]))
        with self.assertRaises(ChannelValidationError):
            StateChannel(np.full((2, 3, 2), 0.5), np.array([0.5, 0.5]))
        with self.assertRaises(ValueError):
            StateChannel(np.full((2, 2, 2), 0.5), np.array([0.5, 0.6]))
        ch = fixtures.xor_channel(0.3)
        with self.assertRaises(ValueError):
            ch.kernel[0, 0, 0] = 0.0
        print("[OK] channel validation test")

    def test_induced_strategy_channel(self):
        w = induced_strategy_channel(fixtures.xor_channel(0.5))
        np.testing.assert_allclose(w[1], [1.0, 0.0])
        np.testing.assert_allclose(w[0], [0.5, 0.5])

        w = induced_strategy_channel(fixtures.xor_channel(0.3))
        np.testing.assert_allclose(w, [[0.7, 0.3], [1.0, 0.0], [0.0, 1.0], [0.3, 0.7]], atol=1e-15)

        no_state = StateChannel(fixtures.bsc(0.2)[:, None, :], np.array([1.0]))
        np.testing.assert_array_equal(induced_strategy_channel(no_state), fixtures.bsc(0.2))
        print("[OK] induced strategy channel test")

    def test_induced_bc_channel(self):
        bc = fixtures.clean_bsc_bc()
        np.testing.assert_array_equal(induced_bc_strategy_channel(bc), bc.kernel[:, 0])

        same = fixtures.same_output_bc(fixtures.xor_channel(0.3))
        k = induced_bc_strategy_channel(same)
        w = induced_strategy_channel(fixtures.xor_channel(0.3))
        for t in range(4):
            np.testing.assert_allclose(k[t], np.diag(w[t]), atol=1e-15)

        noisy = fixtures.bc_from_parts(fixtures.xor_channel(0.5).kernel, fixtures.bsc(0.1),
                                       np.array([0.5, 0.5]))
        k = induced_bc_strategy_channel(noisy)
        self.assertAlmostEqual(k[1, 0, 0], 0.9)
        self.assertAlmostEqual(k[1, 0, 1], 0.1)
        print("[OK] induced broadcast channel test")

    def test_strategy_channel_consistency(self):
        """ I(T;Y) on the strategy channel equals I(T;Y) on the full law with X and S. """
        rng = np.random.default_rng(7)
        for _ in range(10):
            ch = fixtures.random_state_channel(rng, x=2, s=2, y=3)
            tables = strategy_tables(2, 2)
            p = rng.dirichlet(np.ones(4))
            small = assemble_joint([Factor(p, (), ("T",)),
                                    Factor(induced_strategy_channel(ch), ("T",), ("Y",))])
            encoder = np.zeros((4, 2, 2))
            for t in range(4):
                for s in range(2):
                    encoder[t, s, tables[t, s]] = 1.0
            full = assemble_joint([Factor(p, (), ("T",)),
                                   Factor(ch.state_pmf.probs, (), ("S",)),
                                   Factor(encoder, ("T", "S"), ("X",)),
                                   Factor(ch.kernel, ("X", "S"), ("Y",))])
            self.assertAlmostEqual(mutual_information(small, {"T"}, {"Y"}),
                                   mutual_information(full, {"T"}, {"Y"}), delta=1e-10)
        print("[OK] strategy channel consistency test")

    def test_induced_relay_joint(self):
        relay = fixtures.two_hop_relay()
        q = JointPmf(("T", "T1"), np.full((2, 2), 0.25))
        j = induced_relay_joint(relay, q)
        self.assertEqual(j.axes, ("T", "T1", "S", "Y1", "Y"))
        np.testing.assert_allclose(j.marginal(("Y",)).probs, [0.5, 0.5])
        np.testing.assert_allclose(j.marginal(("T", "T1")).probs, q.probs, atol=1e-12)

        point = JointPmf(("T", "T1"), [[0.0, 1.0], [0.0, 0.0]])
        j = induced_relay_joint(relay, point)
        self.assertAlmostEqual(float(j.probs[0, 1].sum()), 1.0)

        with self.assertRaises(AxisError):
            induced_relay_joint(relay, JointPmf(("T1", "T"), np.full((2, 2), 0.25)))
        print("[OK] induced relay joint test")

    def test_induced_mac_joint(self):
        p12 = JointPmf(("T1", "T2"), np.full((2, 2), 0.25))
        j = induced_mac_joint(fixtures.adder_mac(), p12)
        np.testing.assert_allclose(j.marginal(("Y",)).probs, [0.25, 0.5, 0.25])

        point = JointPmf(("T1", "T2"), [[0.0, 0.0], [1.0, 0.0]])
        j = induced_mac_joint(fixtures.adder_mac(), point)
        np.testing.assert_allclose(j.marginal(("Y",)).probs, [0.0, 1.0, 0.0])
        print("[OK] induced MAC joint test")

    def test_bc_degradedness(self):
        verdict = check_bc_degraded(fixtures.same_output_bc(fixtures.xor_channel(0.3)))
        self.assertTrue(verdict)
        np.testing.assert_allclose(verdict.kernel, np.eye(2))

        constant = fixtures.bc_from_parts(fixtures.xor_channel(0.3).kernel,
                                          np.array([[0.4, 0.6], [0.4, 0.6]]), np.array([0.7, 0.3]))
        self.assertTrue(check_bc_degraded(constant))

        verdict = check_bc_degraded(fixtures.non_degraded_bc())
        self.assertFalse(verdict)
        self.assertEqual(verdict.witness_axes, ("x", "s", "y1"))
        self.assertEqual(len(verdict.witness), 3)
        self.assertGreater(verdict.residual, 1e-9)
        self.assertIn("FAIL", verdict.describe())
        print("[OK] broadcast degradedness test")

    def test_relay_degradedness(self):
        verdict = check_relay_degraded(fixtures.two_hop_relay())
        self.assertTrue(verdict)
        self.assertEqual(verdict.kernel.shape, (2, 1, 2, 2))

        first = np.random.default_rng(8).dirichlet(np.ones(2), size=(2, 2, 1))
        copy = np.zeros((2, 1, 2, 2))
        copy[:, 0] = np.eye(2)
        self.assertTrue(check_relay_degraded(fixtures.relay_from_parts(first, copy, np.array([1.0]))))

        verdict = check_relay_degraded(fixtures.direct_only_relay())
        self.assertFalse(verdict)
        self.assertEqual(verdict.witness_axes, ("x", "x1", "s", "y1"))
        print("[OK] relay degradedness test")

    def test_degradedness_implication(self):
        """ Degraded broadcast channels give I(T;Y2) <= I(T;Y1) for every strategy law. """
        rng = np.random.default_rng(9)
        for _ in range(50):
            bc = fixtures.random_degraded_bc(rng)
            self.assertTrue(check_bc_degraded(bc))
            k = induced_bc_strategy_channel(bc)
            for _ in range(10):
                j = assemble_joint([Factor(rng.dirichlet(np.ones(k.shape[0])), (), ("T",)),
                                    Factor(k, ("T",), ("Y1", "Y2"))])
                self.assertLessEqual(mutual_information(j, {"T"}, {"Y2"}),
                                     mutual_information(j, {"T"}, {"Y1"}) + 1e-9)
        print("[OK] degradedness implication test")

    def test_relay_markov_identity(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            relay = fixtures.random_degraded_relay(rng)
            self.assertTrue(check_relay_degraded(relay))
            q = JointPmf(("T", "T1"), rng.dirichlet(np.ones(16)).reshape(4, 4))
            j = induced_relay_joint(relay, q)
            self.assertAlmostEqual(mutual_information(j, {"T"}, {"Y", "Y1"}, {"T1", "S"}),
                                   mutual_information(j, {"T"}, {"Y1"}, {"T1", "S"}), delta=1e-9)
        print("[OK] relay Markov identity test")


if __name__ == '__main__':
    unittest.main()
