"""Readers and writers: curves, phases, checkpoints, reports and meshes.

File formats
------------
curve CSV
    Header ``t,x,z``; one row per node; ``t`` must be the uniform grid
    ``i/N`` to within 1e-12.
phase file
    First line ``leading=<0|1>``, then one jump location per line.
checkpoint
    A JSON document holding the system, material parameters, constraints
    and optimizer state. Floats are written with ``repr`` precision, so
    ``read_checkpoint(write_checkpoint(x)) == x`` bit for bit.
report CSV
    Header ``iter,energy,res_area,res_vol,res_phase,step``.
meshes
    Wavefront OBJ with groups ``phaseA`` / ``phaseB``, or legacy ASCII VTK
    with the cell scalar ``phase``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .analysis import ConstraintSet
from .energy import MaterialParams, VesicleSystem
from .geometry import GeneratorCurve, InvalidCurveError
from .phase import PhaseLayout, phase_at

__all__ = [
    "ParseError",
    "RevolvedMesh",
    "revolve_to_mesh",
    "mesh_area",
    "mesh_volume",
    "is_watertight",
    "write_obj",
    "write_vtk",
    "write_mesh",
    "read_curve",
    "write_curve",
    "read_phase",
    "write_phase",
    "Checkpoint",
    "write_checkpoint",
    "read_checkpoint",
    "REPORT_COLUMNS",
    "write_report_csv",
]

UNIFORM_T_TOL = 1e-12
REPORT_COLUMNS = ("iter", "energy", "res_area", "res_vol", "res_phase", "step")


class ParseError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


# --- revolved meshes -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RevolvedMesh:
    vertices: np.ndarray  # (V, 3)
    triangles: np.ndarray  # (F, 3) int
    face_phase: np.ndarray  # (F,) values in {0, 1}

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)


def _midpoint_phase(layout: PhaseLayout, t: float, dt: float) -> int:
    try:
        return phase_at(layout, t)
    except ValueError:
        # midpoint falls exactly on a jump; sample just past it
        return phase_at(layout, min(t + 1e-3 * dt, 1.0))


def revolve_to_mesh(
    curve: GeneratorCurve, layout: PhaseLayout | None = None, angular_segments: int = 64
) -> RevolvedMesh:
    """Tessellate the surface generated by ``curve``.

    Interior nodes become rings of ``angular_segments`` vertices; each pole
    is a single shared vertex, so the mesh is closed. Triangles are wound so
    that normals point outward for counterclockwise generators, and each
    face carries the phase at the parameter midpoint of its band.
    """
    if not curve.is_closed:
        raise InvalidCurveError("only curves closed to the axis at both ends can be revolved into a closed mesh")
    if angular_segments < 8:
        raise ValueError("angular_segments must be at least 8")
    layout = layout if layout is not None else PhaseLayout.constant(1)
    n, m = curve.n_segments, angular_segments
    theta = 2 * np.pi * np.arange(m) / m
    ring_x = curve.x[1:-1, None] * np.cos(theta)[None, :]
    ring_y = curve.x[1:-1, None] * np.sin(theta)[None, :]
    ring_z = np.broadcast_to(curve.z[1:-1, None], ring_x.shape)
    south = np.array([[0.0, 0.0, curve.z[0]]])
    north = np.array([[0.0, 0.0, curve.z[-1]]])
    rings = np.column_stack([ring_x.ravel(), ring_y.ravel(), ring_z.ravel()])
    vertices = np.vstack([south, rings, north])
    n_rings = n - 1
    south_id, north_id = 0, 1 + n_rings * m

    def vid(ring, j):
        return 1 + ring * m + (j % m)

    j = np.arange(m)
    tris = [np.column_stack([np.full(m, south_id), vid(0, j + 1), vid(0, j)])]
    band = [0]
    for r in range(n_rings - 1):
        a, b = vid(r, j), vid(r, j + 1)
        c, d = vid(r + 1, j), vid(r + 1, j + 1)
        tris.append(np.column_stack([a, b, c]))
        tris.append(np.column_stack([b, d, c]))
        band.extend([r + 1, r + 1])
    tris.append(np.column_stack([np.full(m, north_id), vid(n_rings - 1, j), vid(n_rings - 1, j + 1)]))
    band.append(n - 1)
    triangles = np.vstack(tris).astype(np.int64)
    dt = 1.0 / n
    band_phase = {
        k: _midpoint_phase(layout, (k + 0.5) * dt, dt) for k in sorted(set(band))
    }
    face_phase = np.concatenate([np.full(m, band_phase[k], dtype=np.int8) for k in band])
    return RevolvedMesh(vertices, triangles, face_phase)


def mesh_area(mesh: RevolvedMesh) -> float:
    v = mesh.vertices[mesh.triangles]
    cross = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    return float(0.5 * np.sum(np.linalg.norm(cross, axis=1)))


def mesh_volume(mesh: RevolvedMesh) -> float:
    """Signed volume by the divergence theorem (sum of origin tetrahedra)."""
    v = mesh.vertices[mesh.triangles]
    return float(np.sum(np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2]))) / 6.0)


def is_watertight(mesh: RevolvedMesh) -> bool:
    """Every edge is shared by exactly two triangles with opposite orientation."""
    tri = mesh.triangles
    directed = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    undirected = np.sort(directed, axis=1)
    _, counts = np.unique(undirected, axis=0, return_counts=True)
    if not np.all(counts == 2):
        return False
    _, dcounts = np.unique(directed, axis=0, return_counts=True)
    return bool(np.all(dcounts == 1))


def write_obj(mesh: RevolvedMesh, path) -> None:
    lines = ["# revolved axisymmetric surface"]
    lines.extend(f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist())
    for value, group in ((1, "phaseA"), (0, "phaseB")):
        faces = mesh.triangles[mesh.face_phase == value]
        if len(faces) == 0:
            continue
        lines.append(f"g {group}")
        lines.extend(f"f {a + 1} {b + 1} {c + 1}" for a, b, c in faces.tolist())
    Path(path).write_text("\n".join(lines) + "\n")


def write_vtk(mesh: RevolvedMesh, path) -> None:
    out = io.StringIO()
    out.write("# vtk DataFile Version 3.0\nrevolved axisymmetric surface\nASCII\nDATASET POLYDATA\n")
    out.write(f"POINTS {mesh.n_vertices} double\n")
    for x, y, z in mesh.vertices.tolist():
        out.write(f"{x!r} {y!r} {z!r}\n")
    out.write(f"POLYGONS {mesh.n_triangles} {4 * mesh.n_triangles}\n")
    for a, b, c in mesh.triangles.tolist():
        out.write(f"3 {a} {b} {c}\n")
    out.write(f"CELL_DATA {mesh.n_triangles}\nSCALARS phase int 1\nLOOKUP_TABLE default\n")
    out.write("\n".join(str(int(p)) for p in mesh.face_phase) + "\n")
    Path(path).write_text(out.getvalue())


def write_mesh(mesh: RevolvedMesh, path) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".obj":
        write_obj(mesh, path)
    elif suffix == ".vtk":
        write_vtk(mesh, path)
    else:
        raise ValueError(f"unsupported mesh format {suffix!r} (use .obj or .vtk)")


# --- curves and phases -----------------------------------------------------


def write_curve(curve: GeneratorCurve, path) -> None:
    n = curve.n_segments
    with open(path, "w", newline="") as fh:
        fh.write("t,x,z\n")
        for i, (x, z) in enumerate(zip(curve.x.tolist(), curve.z.tolist())):
            fh.write(f"{i / n!r},{x!r},{z!r}\n")


def read_curve(path) -> GeneratorCurve:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "x", "z"]:
            raise ParseError("expected header 't,x,z'", line=1, path=path)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", line=lineno, path=path)
            try:
                rows.append((lineno, *(float(c) for c in row)))
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno, path=path) from None
    if len(rows) < 2:
        raise ParseError("curve file has fewer than two nodes", path=path)
    n = len(rows) - 1
    for i, (lineno, t, _, _) in enumerate(rows):
        if abs(t - i / n) > UNIFORM_T_TOL:
            raise ParseError(f"non-uniform parameter t={t!r}, expected {i / n!r}", line=lineno, path=path)
    data = np.array([r[1:] for r in rows])
    try:
        return GeneratorCurve(data[:, 1], data[:, 2])
    except InvalidCurveError as exc:
        raise ParseError(str(exc), path=path) from None


def write_phase(layout: PhaseLayout, path) -> None:
    lines = [f"leading={layout.leading_value}"] + [repr(t) for t in layout.jumps]
    Path(path).write_text("\n".join(lines) + "\n")


def read_phase(path) -> PhaseLayout:
    lines = Path(path).read_text().splitlines()
    content = [(i, s.strip()) for i, s in enumerate(lines, start=1) if s.strip()]
    if not content:
        raise ParseError("empty phase file", path=path)
    lineno, first = content[0]
    key, _, value = first.partition("=")
    if key.strip() != "leading" or value.strip() not in ("0", "1"):
        raise ParseError("first line must be 'leading=0' or 'leading=1'", line=lineno, path=path)
    jumps = []
    for lineno, text in content[1:]:
        try:
            jumps.append(float(text))
        except ValueError:
            raise ParseError(f"not a number: {text!r}", line=lineno, path=path) from None
    try:
        return PhaseLayout(int(value.strip()), tuple(jumps))
    except ValueError as exc:
        raise ParseError(str(exc), path=path) from None


# --- checkpoints -----------------------------------------------------------


@dataclass(eq=False)
class Checkpoint:
    """Everything needed to resume a minimization run."""

    system: VesicleSystem
    params: MaterialParams
    constraints: ConstraintSet
    multipliers: tuple[float, float, float] = (0.0, 0.0, 0.0)
    penalty: float = 1.0
    iteration: int = 0
    rng_state: dict[str, Any] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Checkpoint):
            return NotImplemented
        return _checkpoint_payload(self) == _checkpoint_payload(other)


def _checkpoint_payload(cp: Checkpoint) -> dict:
    return {
        "format": "axivesicle-checkpoint",
        "version": 1,
        "components": [
            {
                "x": curve.x.tolist(),
                "z": curve.z.tolist(),
                "leading": layout.leading_value,
                "jumps": list(layout.jumps),
            }
            for curve, layout in cp.system
        ],
        "params": asdict(cp.params),
        "constraints": asdict(cp.constraints),
        "optimizer": {
            "multipliers": [float(v) for v in cp.multipliers],
            "penalty": float(cp.penalty),
            "iteration": int(cp.iteration),
            "rng_state": cp.rng_state,
            "config": cp.config,
        },
    }


def write_checkpoint(cp: Checkpoint, path) -> None:
    payload = _checkpoint_payload(cp)
    _reject_nonfinite(payload)
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def _reject_nonfinite(obj) -> None:
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ValueError("checkpoint contains a non-finite number")
    if isinstance(obj, dict):
        for v in obj.values():
            _reject_nonfinite(v)
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            _reject_nonfinite(v)


def read_checkpoint(path) -> Checkpoint:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, path=path) from None
    try:
        if data.get("format") != "axivesicle-checkpoint":
            raise ParseError("not an axivesicle checkpoint", line=1, path=path)
        comps = tuple(
            (
                GeneratorCurve(np.array(c["x"], dtype=float), np.array(c["z"], dtype=float)),
                PhaseLayout(int(c["leading"]), tuple(c["jumps"])),
            )
            for c in data["components"]
        )
        opt = data["optimizer"]
        return Checkpoint(
            system=VesicleSystem(comps),
            params=MaterialParams(**data["params"]),
            constraints=ConstraintSet(**data["constraints"]),
            multipliers=tuple(float(v) for v in opt["multipliers"]),
            penalty=float(opt["penalty"]),
            iteration=int(opt["iteration"]),
            rng_state=opt.get("rng_state", {}),
            config=opt.get("config", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"invalid checkpoint content: {exc}", path=path) from None


# --- reports ---------------------------------------------------------------


def write_report_csv(rows, path) -> None:
    """Write trace rows (tuples in ``REPORT_COLUMNS`` order)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow([row[0], *(repr(float(v)) for v in row[1:])])
