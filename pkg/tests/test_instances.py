import io
import math

import numpy as np
import pytest

from socrescale import instances
from socrescale.cones import BlockVector, ConeStructure, halfline, lambda_min, soc
from socrescale.exceptions import InstanceFormatError
from socrescale.solver import solve_instance
from socrescale.tsoc import HalfSpace, std_tsoc_volume
from tests.conftest import random_structure

SOC3 = ConeStructure([soc(3)])


class TestRoundTrip:
    def make_instance(self):
        structure = ConeStructure([soc(3), halfline()])
        a = np.array([[1.0, -0.25, 1e-17, 3.0], [0.1, 2.0, -1.0, 0.7]])
        return instances.Instance(
            structure, a,
            b=np.array([0.5, -1.5]),
            c=np.array([1.0, 0.0, 0.0, 2.0]),
            witness={"kind": "primal_interior", "x": [1.0, 0.0, 0.0, 0.1]},
        )

    def test_instance_bits_survive(self):
        inst = self.make_instance()
        text = "\n".join(instances.instance_to_lines(inst))
        back = instances.instance_from_lines(io.StringIO(text))
        assert back.structure == inst.structure
        assert back.a.tolist() == inst.a.tolist()
        assert back.b.tolist() == inst.b.tolist()
        assert back.c.tolist() == inst.c.tolist()
        assert back.witness == inst.witness

    def test_certificate_bits_survive(self):
        cert = instances.Certificate(
            status="dual_nonzero", epsilon=1e-3,
            s=np.array([1.0, -1e-17, 0.3333333333333333]),
            u=np.array([-0.7]),
            stats={"bp_calls": 3, "cuts_per_block": [1, 0]},
        )
        text = "\n".join(instances.certificate_to_lines(cert))
        back = instances.certificate_from_lines(io.StringIO(text))
        assert back.status == cert.status
        assert back.epsilon == cert.epsilon
        assert back.s.tolist() == cert.s.tolist()
        assert back.u.tolist() == cert.u.tolist()
        assert back.stats == cert.stats

    def test_file_io(self, tmp_path):
        inst = self.make_instance()
        path = tmp_path / "inst.json"
        instances.write_instance(inst, str(path))
        again = instances.read_instance(str(path))
        assert again.a.tolist() == inst.a.tolist()


class TestMalformed:
    def test_bad_json(self):
        with pytest.raises(InstanceFormatError, match="line 1"):
            instances.instance_from_lines(["{nope"])

    def test_wrong_version(self):
        with pytest.raises(InstanceFormatError, match="version"):
            instances.instance_from_lines(['{"version": "other/9", "kind": "instance"}'])

    def test_row_count_mismatch(self):
        lines = [
            '{"version": "soc-rescale/1", "kind": "instance", "m": 2, '
            '"blocks": [{"kind": "halfline", "dim": 1}]}',
            '{"A": [1.0]}',
        ]
        with pytest.raises(InstanceFormatError, match="m=2"):
            instances.instance_from_lines(lines)

    def test_row_width_mismatch(self):
        lines = [
            '{"version": "soc-rescale/1", "kind": "instance", "m": 1, '
            '"blocks": [{"kind": "soc", "dim": 3}]}',
            '{"A": [1.0, 2.0]}',
        ]
        with pytest.raises(InstanceFormatError, match="width"):
            instances.instance_from_lines(lines)

    def test_empty(self):
        with pytest.raises(InstanceFormatError, match="empty"):
            instances.instance_from_lines([])

    def test_unknown_record(self):
        lines = [
            '{"version": "soc-rescale/1", "kind": "instance", "m": 0, '
            '"blocks": [{"kind": "halfline", "dim": 1}]}',
            '{"bogus": 1}',
        ]
        with pytest.raises(InstanceFormatError, match="unknown record"):
            instances.instance_from_lines(lines)


class TestGenerators:
    def test_primal_witness_in_kernel(self):
        for seed in range(20):
            structure = random_structure(np.random.default_rng(seed), max_dim=5)
            if structure.total_dim < 2:
                continue
            m = int(np.random.default_rng(seed ^ 9).integers(1, structure.total_dim))
            inst = instances.gen_primal_feasible(seed, m, structure)
            x = np.array(inst.witness["x"])
            assert np.abs(inst.a @ x).max() <= 1e-10 * np.abs(inst.a).max()
            xv = BlockVector(x, structure)
            assert lambda_min(xv) >= 0.05
            assert np.abs(x).max() == pytest.approx(1.0)

    def test_dual_witness_identity(self):
        for seed in range(20):
            structure = random_structure(np.random.default_rng(seed + 31), max_dim=5)
            m = int(np.random.default_rng(seed ^ 5).integers(1, structure.total_dim + 1))
            inst = instances.gen_dual_feasible(seed, m, structure)
            s = np.array(inst.witness["s"])
            u = np.array(inst.witness["u"])
            assert np.abs(inst.a.T @ u + s).max() <= 1e-10 * max(
                1.0, np.abs(inst.a).max())
            assert lambda_min(BlockVector(s, structure)) > 0

    def test_socp_witness_identity(self):
        for seed in range(10):
            structure = random_structure(np.random.default_rng(seed + 77), max_dim=4)
            if structure.total_dim < 2:
                continue
            m = int(np.random.default_rng(seed ^ 3).integers(1, structure.total_dim))
            inst = instances.gen_socp(seed, m, structure)
            x = np.array(inst.witness["x"])
            y = np.array(inst.witness["y"])
            s = np.array(inst.witness["s"])
            assert np.allclose(inst.a @ x, inst.b)
            assert np.allclose(inst.c - inst.a.T @ y, s)
            assert lambda_min(BlockVector(x, structure)) >= 0.1
            assert lambda_min(BlockVector(s, structure)) >= 0.1

    def test_determinism(self):
        structure = ConeStructure([soc(3), halfline()])
        a = instances.gen_primal_feasible(11, 2, structure)
        b = instances.gen_primal_feasible(11, 2, structure)
        assert "\n".join(instances.instance_to_lines(a)) == "\n".join(
            instances.instance_to_lines(b))

    def test_solver_agrees_with_generators(self):
        structure = ConeStructure([soc(3), halfline()])
        primal = instances.gen_primal_feasible(5, 2, structure)
        assert solve_instance(primal, 1e-6).status == "primal_interior"
        dual = instances.gen_dual_feasible(5, structure.total_dim, structure)
        assert solve_instance(dual, 1e-3).status == "dual_nonzero"

    def test_rejects_bad_m(self):
        with pytest.raises(ValueError):
            instances.gen_primal_feasible(0, 5, ConeStructure([soc(3)]))


class TestVerifyCertificate:
    def test_primal_hand_example(self):
        inst = instances.Instance(SOC3, np.array([[0.0, 0.0, 1.0]]))
        cert = instances.Certificate(status="primal_interior",
                                     x=np.array([1.0, 0.0, 0.0]))
        assert instances.verify_certificate(inst, cert).ok

    def test_dual_hand_example(self):
        inst = instances.Instance(SOC3, np.array([[1.0, 0.0, 0.0]]))
        cert = instances.Certificate(status="dual_nonzero",
                                     s=np.array([1.0, 0.0, 0.0]),
                                     u=np.array([-1.0]))
        assert instances.verify_certificate(inst, cert).ok

    def test_dual_multiplier_recovered_when_absent(self):
        inst = instances.Instance(SOC3, np.array([[1.0, 0.0, 0.0]]))
        cert = instances.Certificate(status="dual_nonzero",
                                     s=np.array([1.0, 0.0, 0.0]))
        assert instances.verify_certificate(inst, cert).ok

    def test_zero_vector_fails(self):
        inst = instances.Instance(SOC3, np.array([[0.0, 0.0, 1.0]]))
        cert = instances.Certificate(status="primal_interior", x=np.zeros(3))
        report = instances.verify_certificate(inst, cert)
        assert not report.ok
        assert "INVALID" in report.render()

    def test_wrong_kernel_vector_fails(self):
        inst = instances.Instance(SOC3, np.array([[1.0, 0.0, 0.0]]))
        cert = instances.Certificate(status="primal_interior",
                                     x=np.array([1.0, 0.0, 0.0]))
        assert not instances.verify_certificate(inst, cert).ok

    def test_no_eps_structural(self):
        inst = instances.Instance(SOC3, np.array([[0.0, 0.0, 1.0]]))
        good = instances.Certificate(status="no_eps_interior", epsilon=0.1,
                                     block=0, v_k=1e-4)
        assert instances.verify_certificate(inst, good).ok
        bad = instances.Certificate(status="no_eps_interior", epsilon=0.1,
                                    block=0, v_k=0.5)
        assert not instances.verify_certificate(inst, bad).ok

    def test_tampered_certificate_fails(self):
        structure = ConeStructure([soc(3), halfline()])
        inst = instances.gen_primal_feasible(8, 2, structure)
        result = solve_instance(inst, 1e-6)
        cert = result.to_certificate()
        cert.x = cert.x + 0.5  # breaks the kernel residual
        assert not instances.verify_certificate(inst, cert).ok


class TestMcVolume:
    def test_standard_triangle(self):
        e = np.array([1.0, 0.0])
        est, stderr = instances.mc_volume(HalfSpace(e, e), 2, 1_000_000, seed=3)
        assert est == pytest.approx(1.0, rel=0.02)
        assert stderr < 0.01

    def test_standard_cone(self):
        e = np.array([1.0, 0.0, 0.0])
        est, _ = instances.mc_volume(HalfSpace(e, e), 3, 1_000_000, seed=4)
        assert est == pytest.approx(math.pi / 3.0, rel=0.02)

    def test_degenerate_reproduces_formula(self):
        for d in (2, 3, 4):
            e = np.zeros(d)
            e[0] = 1.0
            est, _ = instances.mc_volume(HalfSpace(e, e), d, 500_000, seed=5)
            assert est == pytest.approx(std_tsoc_volume(d), rel=0.02)

    def test_rejects_non_interior_normal(self):
        with pytest.raises(ValueError):
            instances.mc_volume(HalfSpace([1.0, 1.0], [1.0, 0.0]), 2, 10, seed=0)
