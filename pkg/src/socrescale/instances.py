"""Instance and certificate files, seeded generators, verification.

Files are line-delimited JSON with an explicit version tag. The first
line is a header; each following line is a single-key object carrying one
field (one matrix row per line keeps fixtures diff-able). Reals are
serialized as shortest round-trip decimals, so parse(serialize(x)) is
bit-exact.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from typing import IO, Iterable, List, Optional, Tuple, Union

import numpy as np

from .cones import (
    HALFLINE,
    SOC,
    Block,
    BlockVector,
    ConeStructure,
    block_min_eigs,
    identity,
    inf_norm,
    lambda_min,
    sample_interior,
)
from .exceptions import InstanceFormatError
from .tsoc import HalfSpace
FORMAT_VERSION = "soc-rescale/1"

PRIMAL_INTERIOR = "primal_interior"
DUAL_NONZERO = "dual_nonzero"
NO_EPS_INTERIOR = "no_eps_interior"


@dataclass
class Instance:
    structure: ConeStructure
    a: np.ndarray
    b: Optional[np.ndarray] = None
    c: Optional[np.ndarray] = None
    witness: Optional[dict] = None

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        if self.a.ndim != 2 or self.a.shape[1] != self.structure.total_dim:
            raise ValueError("A must be m x total_dim")
        if self.b is not None:
            self.b = np.asarray(self.b, dtype=float).reshape(-1)
            if self.b.size != self.a.shape[0]:
                raise ValueError("b must have one entry per row of A")
        if self.c is not None:
            self.c = np.asarray(self.c, dtype=float).reshape(-1)
            if self.c.size != self.structure.total_dim:
                raise ValueError("c must have total_dim entries")

    @property
    def m(self) -> int:
        return self.a.shape[0]


@dataclass
class Certificate:
    status: str
    epsilon: Optional[float] = None
    x: Optional[np.ndarray] = None
    s: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None
    block: Optional[int] = None
    v_k: Optional[float] = None
    stats: Optional[dict] = None


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class VerifyReport:
    ok: bool
    checks: List[Check] = field(default_factory=list)

    def render(self) -> str:
        lines = []
        for c in self.checks:
            lines.append(f"[{'pass' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
        lines.append("certificate " + ("VALID" if self.ok else "INVALID"))
        return "\n".join(lines)


# --- serialization ---


def _blocks_to_json(structure: ConeStructure) -> list:
    return [{"kind": b.kind, "dim": b.dim} for b in structure.blocks]


def _blocks_from_json(items) -> ConeStructure:
    blocks = []
    for it in items:
        kind = it.get("kind")
        dim = int(it.get("dim", 1))
        blocks.append(Block(kind, dim))
    return ConeStructure(blocks)


def instance_to_lines(inst: Instance) -> List[str]:
    header = {
        "version": FORMAT_VERSION,
        "kind": "instance",
        "m": inst.m,
        "blocks": _blocks_to_json(inst.structure),
    }
    lines = [json.dumps(header)]
    for row in inst.a:
        lines.append(json.dumps({"A": row.tolist()}))
    if inst.b is not None:
        lines.append(json.dumps({"b": inst.b.tolist()}))
    if inst.c is not None:
        lines.append(json.dumps({"c": inst.c.tolist()}))
    if inst.witness is not None:
        lines.append(json.dumps({"witness": inst.witness}))
    return lines


def _parse_json_line(line: str, lineno: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"line {lineno}: invalid JSON ({exc.msg})")
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"line {lineno}: expected a JSON object")
    return obj


def instance_from_lines(lines: Iterable[str]) -> Instance:
    rows: List[list] = []
    header = None
    b = c = witness = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        obj = _parse_json_line(line, lineno)
        if header is None:
            if obj.get("version") != FORMAT_VERSION:
                raise InstanceFormatError(
                    f"line {lineno}: expected version {FORMAT_VERSION!r}, "
                    f"got {obj.get('version')!r}"
                )
            if obj.get("kind") != "instance":
                raise InstanceFormatError(f"line {lineno}: not an instance file")
            header = obj
        elif "A" in obj:
            rows.append(obj["A"])
        elif "b" in obj:
            b = obj["b"]
        elif "c" in obj:
            c = obj["c"]
        elif "witness" in obj:
            witness = obj["witness"]
        else:
            raise InstanceFormatError(f"line {lineno}: unknown record {obj!r}")
    if header is None:
        raise InstanceFormatError("empty instance file")
    try:
        structure = _blocks_from_json(header["blocks"])
    except (KeyError, ValueError, TypeError) as exc:
        raise InstanceFormatError(f"bad blocks header: {exc}")
    m = int(header["m"])
    if len(rows) != m:
        raise InstanceFormatError(f"header says m={m} but found {len(rows)} rows")
    widths = {len(r) for r in rows}
    if widths and widths != {structure.total_dim}:
        raise InstanceFormatError(
            f"rows have widths {sorted(widths)}, structure needs {structure.total_dim}"
        )
    try:
        return Instance(structure, np.array(rows, dtype=float), b=b, c=c,
                        witness=witness)
    except ValueError as exc:
        raise InstanceFormatError(str(exc))


def certificate_to_lines(cert: Certificate) -> List[str]:
    header = {
        "version": FORMAT_VERSION,
        "kind": "certificate",
        "status": cert.status,
    }
    if cert.epsilon is not None:
        header["epsilon"] = cert.epsilon
    lines = [json.dumps(header)]
    if cert.x is not None:
        lines.append(json.dumps({"x": np.asarray(cert.x).tolist()}))
    if cert.s is not None:
        lines.append(json.dumps({"s": np.asarray(cert.s).tolist()}))
    if cert.u is not None:
        lines.append(json.dumps({"u": np.asarray(cert.u).tolist()}))
    if cert.block is not None:
        lines.append(json.dumps({"block": cert.block, "v_k": cert.v_k}))
    if cert.stats is not None:
        lines.append(json.dumps({"stats": cert.stats}))
    return lines


def certificate_from_lines(lines: Iterable[str]) -> Certificate:
    header = None
    fields: dict = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        obj = _parse_json_line(line, lineno)
        if header is None:
            if obj.get("version") != FORMAT_VERSION:
                raise InstanceFormatError(
                    f"line {lineno}: expected version {FORMAT_VERSION!r}"
                )
            if obj.get("kind") != "certificate":
                raise InstanceFormatError(f"line {lineno}: not a certificate file")
            header = obj
        else:
            fields.update(obj)
    if header is None:
        raise InstanceFormatError("empty certificate file")
    status = header.get("status")
    if status not in (PRIMAL_INTERIOR, DUAL_NONZERO, NO_EPS_INTERIOR):
        raise InstanceFormatError(f"unknown status {status!r}")
    def arr(key):
        return np.array(fields[key], dtype=float) if key in fields else None
    return Certificate(
        status=status,
        epsilon=header.get("epsilon"),
        x=arr("x"),
        s=arr("s"),
        u=arr("u"),
        block=fields.get("block"),
        v_k=fields.get("v_k"),
        stats=fields.get("stats"),
    )


def _open_for(path_or_file: Union[str, IO], mode: str):
    if hasattr(path_or_file, "read") or hasattr(path_or_file, "write"):
        return path_or_file, False
    if path_or_file == "-":
        return (sys.stdin if "r" in mode else sys.stdout), False
    return open(path_or_file, mode), True


def write_instance(inst: Instance, path_or_file: Union[str, IO]) -> None:
    fh, should_close = _open_for(path_or_file, "w")
    try:
        fh.write("\n".join(instance_to_lines(inst)) + "\n")
    finally:
        if should_close:
            fh.close()


def read_instance(path_or_file: Union[str, IO]) -> Instance:
    fh, should_close = _open_for(path_or_file, "r")
    try:
        return instance_from_lines(fh)
    finally:
        if should_close:
            fh.close()


def write_certificate(cert: Certificate, path_or_file: Union[str, IO]) -> None:
    fh, should_close = _open_for(path_or_file, "w")
    try:
        fh.write("\n".join(certificate_to_lines(cert)) + "\n")
    finally:
        if should_close:
            fh.close()


def read_certificate(path_or_file: Union[str, IO]) -> Certificate:
    fh, should_close = _open_for(path_or_file, "r")
    try:
        return certificate_from_lines(fh)
    finally:
        if should_close:
            fh.close()


# --- generators ---


def _as_structure(blocks) -> ConeStructure:
    if isinstance(blocks, ConeStructure):
        return blocks
    return ConeStructure(blocks)


def _interior_unit_witness(structure: ConeStructure, rng: np.random.Generator,
                           min_margin: float = 0.05,
                           max_tries: int = 1000) -> BlockVector:
    """Interior point with inf-norm 1 and lambda_min at least min_margin."""
    for _ in range(max_tries):
        x = sample_interior(structure, rng)
        scale = inf_norm(x)
        x = BlockVector(x.data / scale, structure, copy=False)
        if lambda_min(x) >= min_margin:
            return x
    raise RuntimeError("could not sample a sufficiently interior witness")


def _full_row_rank(a: np.ndarray, tol: float = 1e-10) -> bool:
    r = np.linalg.qr(a.T, mode="r")
    diag = np.abs(np.diag(r))
    return diag.size > 0 and diag.min() > tol * max(diag.max(), 1.0)


def gen_primal_feasible(seed: int, m: int, blocks) -> Instance:
    """Random instance with a strictly interior kernel witness x*.

    Rows are sampled dense, projected orthogonal to x*, then
    re-orthonormalized, so A x* = 0 holds by construction and A has full
    row rank.
    """
    structure = _as_structure(blocks)
    if not 1 <= m < structure.total_dim:
        raise ValueError("need 1 <= m < total_dim to leave room for a witness")
    rng = np.random.default_rng(seed)
    xstar = _interior_unit_witness(structure, rng)
    xdir = xstar.data / np.linalg.norm(xstar.data)
    for _ in range(100):
        basis = rng.standard_normal((m, structure.total_dim))
        basis -= np.outer(basis @ xdir, xdir)
        q = np.linalg.qr(basis.T, mode="reduced")[0]
        a = q.T
        if _full_row_rank(a):
            witness = {"kind": PRIMAL_INTERIOR, "x": xstar.data.tolist()}
            return Instance(structure, a, witness=witness)
    raise RuntimeError("rank collapse while generating a primal-feasible instance")


def gen_dual_feasible(seed: int, m: int, blocks) -> Instance:
    """Random instance whose dual has a strictly interior witness.

    One row of A is solved for so that -A^T u* equals an interior s*;
    then the primal admits no nonzero cone point.
    """
    structure = _as_structure(blocks)
    if m < 1:
        raise ValueError("need at least one row")
    rng = np.random.default_rng(seed)
    sstar = _interior_unit_witness(structure, rng)
    for _ in range(100):
        ustar = rng.standard_normal(m)
        ustar /= np.linalg.norm(ustar)
        j = int(np.argmax(np.abs(ustar)))
        if abs(ustar[j]) < 0.3:
            continue
        a = rng.standard_normal((m, structure.total_dim))
        rest = ustar @ a - ustar[j] * a[j]
        a[j] = (-sstar.data - rest) / ustar[j]
        if _full_row_rank(a):
            witness = {"kind": DUAL_NONZERO, "s": sstar.data.tolist(),
                       "u": ustar.tolist()}
            return Instance(structure, a, witness=witness)
    raise RuntimeError("rank collapse while generating a dual-feasible instance")


def gen_socp(seed: int, m: int, blocks) -> Instance:
    """Standard-form problem with strictly feasible primal and dual points."""
    structure = _as_structure(blocks)
    if not 1 <= m < structure.total_dim:
        raise ValueError("need 1 <= m < total_dim")
    rng = np.random.default_rng(seed)
    for _ in range(100):
        a = rng.standard_normal((m, structure.total_dim))
        if not _full_row_rank(a):
            continue
        xhat = _interior_unit_witness(structure, rng, min_margin=0.1)
        shat = _interior_unit_witness(structure, rng, min_margin=0.1)
        yhat = rng.standard_normal(m)
        b = a @ xhat.data
        c = shat.data + a.T @ yhat
        witness = {"kind": "socp", "x": xhat.data.tolist(),
                   "y": yhat.tolist(), "s": shat.data.tolist()}
        return Instance(structure, a, b=b, c=c, witness=witness)
    raise RuntimeError("rank collapse while generating an SOCP instance")


# --- verification ---


def recover_multiplier(a: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Least-squares u with -A^T u closest to s."""
    return np.linalg.lstsq(a.T, -np.asarray(s, dtype=float), rcond=None)[0]


def verify_certificate(inst: Instance, cert: Certificate,
                       tol: float = 1e-8) -> VerifyReport:
    """Check a certificate against the instance it claims to settle.

    Primal: A x ~ 0 relative to the data scale and x strictly interior.
    Dual: s in the cone up to tol, nonzero, and s ~ -A^T u (u recomputed
    by least squares when absent). No-eps: the ledger value for the named
    block is at or below epsilon^d_k; the semantic claim is not re-proved
    here.
    """
    checks: List[Check] = []
    a = inst.a
    structure = inst.structure

    def add(name, passed, detail):
        checks.append(Check(name, bool(passed), detail))

    if cert.status == PRIMAL_INTERIOR:
        if cert.x is None or cert.x.size != structure.total_dim:
            add("primal vector present", False, "x missing or wrong length")
        else:
            x = BlockVector(cert.x, structure)
            nx = inf_norm(x)
            add("x nonzero", nx > 0.0, f"|x|_inf = {nx:.3e}")
            lam = lambda_min(x)
            add("x interior", lam > 0.0, f"lambda_min(x) = {lam:.3e}")
            scale = np.abs(a).max() * max(nx, np.finfo(float).tiny)
            resid = np.abs(a @ x.data).max() if a.size else 0.0
            add("A x = 0", resid <= tol * scale,
                f"|A x|_inf = {resid:.3e} vs {tol:.0e} * {scale:.3e}")
    elif cert.status == DUAL_NONZERO:
        if cert.s is None or cert.s.size != structure.total_dim:
            add("dual vector present", False, "s missing or wrong length")
        else:
            s = BlockVector(cert.s, structure)
            lam = lambda_min(s)
            add("s in cone", lam >= -tol, f"lambda_min(s) = {lam:.3e}")
            ns = float(np.linalg.norm(s.data))
            add("s nonzero", ns > tol, f"|s| = {ns:.3e}")
            u = cert.u if cert.u is not None else recover_multiplier(a, s.data)
            scale = np.abs(a).max() * max(np.abs(u).max(initial=0.0), 1.0) \
                + np.abs(s.data).max()
            resid = np.abs(s.data + a.T @ u).max()
            add("s = -A^T u", resid <= tol * scale,
                f"|s + A^T u|_inf = {resid:.3e} vs {tol:.0e} * {scale:.3e}")
    elif cert.status == NO_EPS_INTERIOR:
        if cert.block is None or cert.v_k is None or cert.epsilon is None:
            add("declaration fields present", False,
                "block, v_k and epsilon are all required")
        else:
            k = int(cert.block)
            in_range = 0 <= k < structure.n
            add("block index valid", in_range, f"k = {k}")
            if in_range:
                d_k = structure.dim(k)
                threshold = float(cert.epsilon) ** d_k
                add("ledger at threshold", cert.v_k <= threshold,
                    f"v_k = {cert.v_k:.3e} vs eps^d_k = {threshold:.3e}")
    else:
        add("status known", False, f"unknown status {cert.status!r}")

    return VerifyReport(ok=all(c.passed for c in checks), checks=checks)


# --- Monte Carlo volume oracle ---


def mc_volume(region: HalfSpace, d: int, samples: int,
              seed: int) -> Tuple[float, float]:
    """Rejection-sampling estimate of vol(K cap H(w, v)) for one cone block.

    Samples uniformly in the bounding box [0, h] x [-h, h]^(d-1) where
    h = w^T v / (w0 - ||w1||) bounds the axis coordinate over the region.
    Returns (estimate, standard error).
    """
    if d != region.dim:
        raise ValueError("dimension mismatch")
    w = region.w
    v = region.v
    slack = float(w[0]) - float(np.linalg.norm(w[1:]))
    if slack <= 0.0:
        raise ValueError("normal vector must be interior")
    level = region.offset()
    if level <= 0.0:
        raise ValueError("w^T v must be positive")
    height = level / slack
    box_volume = height * (2.0 * height) ** (d - 1)
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = int(samples)
    while remaining > 0:
        chunk = min(remaining, 1_000_000)
        pts = rng.uniform(-height, height, size=(chunk, d))
        pts[:, 0] = (pts[:, 0] + height) / 2.0
        in_cone = np.linalg.norm(pts[:, 1:], axis=1) <= pts[:, 0]
        in_half = pts @ w <= level
        hits += int(np.count_nonzero(in_cone & in_half))
        remaining -= chunk
    rate = hits / samples
    stderr = box_volume * np.sqrt(max(rate * (1.0 - rate), 0.0) / samples)
    return box_volume * rate, float(stderr)
