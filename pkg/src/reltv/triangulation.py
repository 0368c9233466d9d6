"""Ideal triangulations stored as tetrahedra over global edge classes.

Each tetrahedron is a 6-tuple of global edge indices.  Array position k
(0-based) is local slot k+1 in 1-based notation.  Opposite edges are the
position pairs (0,3), (1,4), (2,5) and the faces are the position triples
listed in ``SLOT_FACES``.

Seen as a vertex-labelled tetrahedron 0123, slot s joins the vertices
``SLOT_VERTICES[s]``.  The face triples are then the four triangles, and
each quad in ``SLOT_QUADS`` is the complement of an opposite pair.
"""
from __future__ import annotations

import json
import logging
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from itertools import permutations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import InputError

log = logging.getLogger(__name__)

SLOT_FACES = ((0, 1, 2), (0, 4, 5), (1, 3, 5), (2, 3, 4))
SLOT_QUADS = ((0, 1, 3, 4), (0, 2, 3, 5), (1, 2, 4, 5))
OPPOSITE_SLOT = (3, 4, 5, 0, 1, 2)
SLOT_VERTICES = ((2, 3), (1, 3), (1, 2), (0, 1), (0, 2), (0, 3))

_PAIR_TO_SLOT = {frozenset(p): s for s, p in enumerate(SLOT_VERTICES)}


def _slot_permutations():
    """The 24 slot permutations induced by relabelling tetrahedron vertices."""
    out = []
    for perm in permutations(range(4)):
        img = [0] * 6
        for s, (i, j) in enumerate(SLOT_VERTICES):
            img[s] = _PAIR_TO_SLOT[frozenset((perm[i], perm[j]))]
        out.append(tuple(img))
    return tuple(out)


#: g[s] is the slot that slot s is carried to; apply with ``t[g[s]] = a[s]``.
TET_SYMMETRIES = _slot_permutations()


def apply_symmetry(values: Sequence, g: Sequence[int]) -> tuple:
    out = [None] * 6
    for s in range(6):
        out[g[s]] = values[s]
    return tuple(out)


class TriangulationError(InputError):
    pass


@dataclass(frozen=True)
class EdgeColoring:
    """A color in [0, r-2] for every global edge."""

    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def check(self, num_edges: int, r: int) -> "EdgeColoring":
        if len(self.values) != num_edges:
            raise InputError(f"coloring has {len(self.values)} entries, triangulation has {num_edges} edges")
        bad = [v for v in self.values if not 0 <= v <= r - 2]
        if bad:
            raise InputError(f"colors {bad} outside [0, {r - 2}] for r={r}")
        return self


@dataclass(frozen=True)
class Triangulation:
    num_edges: int
    tets: tuple[tuple[int, ...], ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tets", tuple(tuple(int(e) for e in t) for t in self.tets))

    @property
    def num_tets(self) -> int:
        return len(self.tets)

    @cached_property
    def edge_degrees(self) -> tuple[int, ...]:
        deg = [0] * self.num_edges
        for t in self.tets:
            for e in t:
                deg[e] += 1
        return tuple(deg)

    @cached_property
    def faces(self) -> tuple[tuple[int, int, int], ...]:
        return tuple(tuple(t[s] for s in f) for t in self.tets for f in SLOT_FACES)

    def face_constraints(self) -> list[tuple[int, int, int]]:
        return list(self.faces)

    def incident_slots(self, edge: int) -> list[tuple[int, int]]:
        """(tet, slot) pairs mapped to a global edge."""
        return [(s, k) for s, t in enumerate(self.tets) for k, e in enumerate(t) if e == edge]

    def to_dict(self) -> dict:
        return {"name": self.name, "num_edges": self.num_edges, "tetrahedra": [list(t) for t in self.tets]}


def face_constraints(T: Triangulation) -> list[tuple[int, int, int]]:
    return T.face_constraints()


def parse_triangulation(doc, strict: bool = True) -> Triangulation:
    """Build a Triangulation from a JSON string or an already decoded mapping.

    An edge index that no tetrahedron uses is an error under ``strict`` and a
    warning otherwise.
    """
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise TriangulationError(f"not a JSON document: {exc}") from None
    if not isinstance(doc, Mapping):
        raise TriangulationError("triangulation document must be an object")
    missing = {"num_edges", "tetrahedra"} - set(doc)
    if missing:
        raise TriangulationError(f"missing fields: {sorted(missing)}")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise TriangulationError("name must be a string")
    n = doc["num_edges"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise TriangulationError(f"num_edges must be a positive integer, got {n!r}")
    raw = doc["tetrahedra"]
    if not isinstance(raw, list) or not raw:
        raise TriangulationError("tetrahedra must be a non-empty list")
    tets = []
    for s, t in enumerate(raw):
        if not isinstance(t, list) or len(t) != 6:
            raise TriangulationError(f"tetrahedron {s} must be a list of 6 edge indices")
        for e in t:
            if isinstance(e, bool) or not isinstance(e, int):
                raise TriangulationError(f"tetrahedron {s}: edge index {e!r} is not an integer")
            if not 0 <= e < n:
                raise TriangulationError(f"tetrahedron {s}: edge index {e} outside [0, {n})")
        tets.append(tuple(t))
    used = {e for t in tets for e in t}
    unused = sorted(set(range(n)) - used)
    if unused:
        msg = f"edge indices {unused} are not used by any tetrahedron"
        if strict:
            raise TriangulationError(msg)
        warnings.warn(msg, stacklevel=2)
    return Triangulation(num_edges=n, tets=tuple(tets), name=name)


def load_triangulation(path, strict: bool = True) -> Triangulation:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise TriangulationError(f"cannot read {p}: {exc}") from None
    return parse_triangulation(text, strict=strict)


def dump_triangulation(T: Triangulation) -> str:
    return json.dumps(T.to_dict(), indent=2) + "\n"


# -- mod 2 homology ---------------------------------------------------------

def gf2_rank(rows: Iterable[int]) -> int:
    """Rank over GF(2) of a matrix given as integer bitmask rows."""
    basis: dict[int, int] = {}  # leading bit -> row
    rank = 0
    for v in rows:
        while v:
            top = v.bit_length() - 1
            if top in basis:
                v ^= basis[top]
            else:
                basis[top] = v
                rank += 1
                break
    return rank


def face_pairing(T: Triangulation):
    """Match tetrahedron faces carrying the same edge multiset.

    Returns (pairs, free) with pairs a list of ((tet, face), (tet, face)) and
    free the unmatched faces.  The file format has no gluing maps, so faces
    are paired within each multiset class in input order.  The homology
    ranks below depend only on how many pairs each class has.
    """
    groups = defaultdict(list)
    for s, t in enumerate(T.tets):
        for k, f in enumerate(SLOT_FACES):
            groups[tuple(sorted(t[i] for i in f))].append((s, k))
    pairs, free = [], []
    for key in sorted(groups):
        g = groups[key]
        pairs.extend(zip(g[0::2], g[1::2]))
        if len(g) % 2:
            free.append(g[-1])
    return pairs, free


def boundary_2(T: Triangulation):
    """Mod 2 boundary of the dual 2-cells (interior edges) in terms of glued faces.

    Returns (interior_edges, rows); each row is a bitmask over the interior
    edges giving the multiplicity mod 2 of every edge in that face.
    """
    pairs, free = face_pairing(T)
    on_free = {T.tets[s][i] for s, k in free for i in SLOT_FACES[k]}
    interior = [e for e in range(T.num_edges) if e not in on_free]
    col = {e: j for j, e in enumerate(interior)}
    rows = []
    for (s, k), _ in pairs:
        bits = 0
        for e, m in Counter(T.tets[s][i] for i in SLOT_FACES[k]).items():
            if m % 2 and e in col:
                bits |= 1 << col[e]
        rows.append(bits)
    return interior, rows


def _components(T: Triangulation) -> int:
    parent = list(range(T.num_tets + T.num_edges))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s, t in enumerate(T.tets):
        for e in t:
            a, b = find(s), find(T.num_tets + e)
            if a != b:
                parent[a] = b
    return len({find(s) for s in range(T.num_tets)})


def z2_homology_ranks(T: Triangulation) -> tuple[int, int, int]:
    """Mod 2 Betti numbers (b0, b1, b2) of the truncated manifold.

    Uses the spine dual to the triangulation: one 0-cell per tetrahedron,
    one 1-cell per glued face pair and one 2-cell per edge that does not
    touch an unglued face.  With every face glued the truncated manifold
    deformation retracts onto this complex.
    """
    pairs, _ = face_pairing(T)
    interior, rows = boundary_2(T)
    b0 = _components(T)
    b2 = len(interior) - gf2_rank(rows)
    chi = T.num_tets - len(pairs) + len(interior)
    b1 = b0 + b2 - chi
    return b0, b1, b2


def face_parity_kernel_dim(T: Triangulation) -> int:
    """Dimension of the space of mod 2 edge vectors that are even on every face."""
    rows = []
    for f in T.faces:
        bits = 0
        for e, m in Counter(f).items():
            if m % 2:
                bits |= 1 << e
        rows.append(bits)
    return T.num_edges - gf2_rank(rows)
