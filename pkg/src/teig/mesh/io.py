"""Plain-text mesh serialization.

Format: header line ``dim n_v n_cells``; then ``n_v`` lines of ``dim``
coordinates plus a 0/1 boundary flag; then ``n_cells`` lines of ``dim+1``
zero-based vertex indices.  Whitespace separated, UTF-8, ``#`` starts a
comment.  Projector tags are not serialized.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .core import Mesh, MeshError

logger = logging.getLogger(__name__)


class MeshFormatError(MeshError):
    """Malformed mesh file; carries the offending line and column."""

    def __init__(self, msg: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {msg}")
        self.line = line
        self.column = column


def write_mesh(mesh: Mesh, path) -> None:
    """Write the mesh in the plain-text format (full float precision)."""
    lines = [f"{mesh.dim} {mesh.n_vertices} {mesh.n_cells}"]
    for v, b in zip(mesh.vertices, mesh.boundary_vertex):
        coords = " ".join(format(c, ".17g") for c in v)
        lines.append(f"{coords} {int(b)}")
    for cell in mesh.cells:
        lines.append(" ".join(str(int(i)) for i in cell))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _tokens(raw_lines):
    """Yield (line_number, [(column, token), ...]) for non-empty lines."""
    for ln, raw in enumerate(raw_lines, start=1):
        body = raw.split("#", 1)[0]
        toks = []
        col = 0
        for tok in body.split():
            col = body.index(tok, col)
            toks.append((col + 1, tok))
            col += len(tok)
        if toks:
            yield ln, toks


def read_mesh(path) -> Mesh:
    """Read a mesh written by :func:`write_mesh`.

    Negative-volume cells are accepted and reoriented (the count is logged
    and recorded on the mesh); structural problems raise
    :class:`MeshFormatError` naming the offending line.
    """
    text = Path(path).read_text(encoding="utf-8")
    stream = _tokens(text.splitlines())

    def next_line(what):
        try:
            return next(stream)
        except StopIteration:
            raise MeshFormatError(f"unexpected end of file, expected {what}",
                                  line=text.count("\n") + 1) from None

    ln, toks = next_line("header")
    if len(toks) != 3:
        raise MeshFormatError("header must be 'dim n_v n_cells'", ln, toks[0][0])
    try:
        dim, n_v, n_cells = (int(t) for _, t in toks)
    except ValueError:
        raise MeshFormatError("header fields must be integers", ln, toks[0][0]) from None
    if dim not in (2, 3):
        raise MeshFormatError(f"dim must be 2 or 3, got {dim}", ln, toks[0][0])
    if n_v <= 0 or n_cells <= 0:
        raise MeshFormatError("vertex and cell counts must be positive", ln, toks[0][0])

    verts = np.empty((n_v, dim))
    flags = np.empty(n_v, dtype=bool)
    for i in range(n_v):
        ln, toks = next_line(f"vertex {i}")
        if len(toks) != dim + 1:
            raise MeshFormatError(
                f"vertex line needs {dim} coordinates and a boundary flag", ln, toks[0][0]
            )
        for d in range(dim):
            col, tok = toks[d]
            try:
                verts[i, d] = float(tok)
            except ValueError:
                raise MeshFormatError(f"bad coordinate {tok!r}", ln, col) from None
        col, tok = toks[dim]
        if tok not in ("0", "1"):
            raise MeshFormatError(f"boundary flag must be 0 or 1, got {tok!r}", ln, col)
        flags[i] = tok == "1"

    cells = np.empty((n_cells, dim + 1), dtype=np.int64)
    for i in range(n_cells):
        ln, toks = next_line(f"cell {i}")
        if len(toks) != dim + 1:
            raise MeshFormatError(f"cell line needs {dim + 1} vertex indices", ln, toks[0][0])
        for d, (col, tok) in enumerate(toks):
            try:
                idx = int(tok)
            except ValueError:
                raise MeshFormatError(f"bad vertex index {tok!r}", ln, col) from None
            if not 0 <= idx < n_v:
                raise MeshFormatError(
                    f"vertex index {idx} out of range [0, {n_v})", ln, col
                )
            cells[i, d] = idx

    try:
        mesh = Mesh.from_arrays(dim, verts, cells)
    except MeshError as exc:
        raise MeshFormatError(str(exc), line=1) from exc
    if mesh.reoriented:
        logger.warning("reoriented %d negative-volume cells", mesh.reoriented)
    if not np.array_equal(mesh.boundary_vertex, flags):
        bad = int(np.nonzero(mesh.boundary_vertex != flags)[0][0])
        raise MeshFormatError(
            f"boundary flag of vertex {bad} disagrees with facet incidence",
            line=2 + bad,
        )
    return mesh
