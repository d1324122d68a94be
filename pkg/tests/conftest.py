import numpy as np
import pytest

from socrescale.cones import ConeStructure, halfline, soc


@pytest.fixture
def rng():
    return np.random.default_rng(20240813)


def random_structure(r, max_blocks=5, max_dim=6, p_halfline=0.3):
    n_blocks = int(r.integers(1, max_blocks + 1))
    blocks = []
    for _ in range(n_blocks):
        if r.random() < p_halfline:
            blocks.append(halfline())
        else:
            blocks.append(soc(int(r.integers(2, max_dim + 1))))
    return ConeStructure(blocks)


def random_interior_direction(r, d):
    """Interior point of a single cone block, moderately eccentric."""
    tail = r.standard_normal(d - 1)
    tail /= max(np.linalg.norm(tail), 1e-12)
    tail *= r.uniform(0.0, 0.7)
    return np.concatenate(([1.0], tail)) * r.uniform(0.5, 2.0)


def sample_std_tsoc(r, d, count):
    """Uniform-ish points of the standard truncated cone, as rows.

    Axis coordinate uniform in (0, 1], rotational part uniform in the ball
    of that radius. Not volume-uniform, which no test here requires.
    """
    x0 = r.uniform(0.0, 1.0, size=count)
    directions = r.standard_normal((count, d - 1))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    radii = x0 * r.uniform(0.0, 1.0, size=count) ** (1.0 / max(d - 1, 1))
    pts = np.empty((count, d))
    pts[:, 0] = x0
    pts[:, 1:] = directions / norms * radii[:, None]
    return pts


def thin_witness(structure, r, delta):
    """Interior point with inf-norm 1 whose margin is exactly delta.

    Cone blocks get a rotational part of norm 1 - delta under a unit axis
    coordinate, so the point hugs the boundary; half-lines get delta.
    """
    from socrescale.cones import BlockVector

    data = np.zeros(structure.total_dim)
    for i, b in enumerate(structure.blocks):
        sl = structure.block_slice(i)
        if b.kind == "halfline":
            data[sl.start] = delta
        else:
            tail = r.standard_normal(b.dim - 1)
            tail /= max(np.linalg.norm(tail), 1e-12)
            data[sl.start + 1 : sl.stop] = tail * (1.0 - delta)
            data[sl.start] = 1.0
    return BlockVector(data, structure)


def hostile_primal_instance(seed, structure, delta=1e-3, kernel_dim=2):
    """Feasible instance that forces real cutting work.

    The kernel contains a deliberately near-boundary witness; the rest of
    the matrix comes from a dual-feasible draw, so no other kernel
    direction is comfortably interior.
    """
    from socrescale import instances

    r = np.random.default_rng(seed)
    m = structure.total_dim - kernel_dim
    if m < 1:
        return None
    base = instances.gen_dual_feasible(seed, m, structure)
    x = thin_witness(structure, r, delta)
    xdir = x.data / np.linalg.norm(x.data)
    a = base.a - np.outer(base.a @ xdir, xdir)
    q, rmat = np.linalg.qr(a.T)
    if np.abs(np.diag(rmat)).min() < 1e-8:
        return None
    return instances.Instance(
        structure, q.T,
        witness={"kind": "primal_interior", "x": x.data.tolist()})
