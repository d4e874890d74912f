"""Finite atomic filtrations, discrete measures and the integral primitives.

A :class:`Lattice` is a finite rooted tree of "cubes". Its leaves are the
atoms of the underlying set, every cube is identified with the set of atoms
below it, and the children of a cube partition it. Cubes are stored in
breadth-first order, so

* every level is a contiguous block of cube indices,
* the children of a cube are contiguous, and the children of the cubes of
  one level, taken in order, are exactly the next level,
* atoms are numbered left to right, so every cube covers a contiguous range
  ``lo[I]:hi[I]`` of atoms.

Functions on atoms are plain 1-d numpy arrays (or 2-d arrays whose extra
column axis holds a batch of functions).  The external name of a cube is
``"level:index"`` with ``index`` counted within the level.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "StructuralError",
    "Lattice",
    "Measure",
    "ExponentPair",
    "build_lattice",
    "as_function",
    "integrate",
    "integrals",
    "average",
    "averages",
    "lp_norm",
    "weighted_norm",
]


class StructuralError(ValueError):
    """Objects that do not live on the same lattice were combined."""


class Lattice:
    """Finite refining tree of cubes over a set of atoms.

    Use :func:`build_lattice` for uniform or per-level branching, or
    :meth:`Lattice.from_child_counts` for arbitrary trees.
    """

    def __init__(self, child_counts: Sequence[int]):
        counts = np.asarray(child_counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError("child_counts must be a nonempty 1-d sequence")
        if np.any((counts != 0) & (counts < 2)):
            raise ValueError("every branching factor must be >= 2")
        n = int(counts.size)
        if 1 + int(counts.sum()) != n:
            raise ValueError(
                f"child counts describe {1 + int(counts.sum())} cubes, got {n} entries"
            )

        parent = np.full(n, -1, dtype=np.int64)
        level = np.zeros(n, dtype=np.int64)
        child_start = np.zeros(n, dtype=np.int64)
        nxt = 1
        for i in range(n):
            if i >= nxt and i != 0:
                raise ValueError("child_counts do not describe a connected tree")
            c = int(counts[i])
            child_start[i] = nxt
            parent[nxt:nxt + c] = i
            level[nxt:nxt + c] = level[i] + 1
            nxt += c

        self.n_cubes = n
        self.child_count = counts
        self.child_start = child_start
        self.parent = parent
        self.level = level
        self.depth = int(level.max())

        bounds = np.searchsorted(level, np.arange(self.depth + 2))
        self.level_blocks: list[tuple[int, int]] = [
            (int(bounds[k]), int(bounds[k + 1])) for k in range(self.depth + 1)
        ]
        self.level_index = np.arange(n) - bounds[level]

        # Atoms are the leaves in left-to-right (depth-first) order.
        lo = np.zeros(n, dtype=np.int64)
        hi = np.zeros(n, dtype=np.int64)
        leaf_cube: list[int] = []
        stack = [0]
        while stack:
            i = stack.pop()
            if counts[i] == 0:
                lo[i] = len(leaf_cube)
                hi[i] = lo[i] + 1
                leaf_cube.append(i)
            else:
                s = child_start[i]
                stack.extend(range(s + counts[i] - 1, s - 1, -1))
        for i in range(n - 1, -1, -1):
            if counts[i]:
                s = child_start[i]
                lo[i] = lo[s]
                hi[i] = hi[s + counts[i] - 1]
        self.lo = lo
        self.hi = hi
        self.leaf_cube = np.asarray(leaf_cube, dtype=np.int64)
        self.n_atoms = len(leaf_cube)
        self._ids = [f"{int(level[i])}:{int(self.level_index[i])}" for i in range(n)]
        self._index = {s: i for i, s in enumerate(self._ids)}

        # reduceat offsets for the bottom-up pass, one entry per level
        self._reduce_plan = []
        for k in range(self.depth):
            s, e = self.level_blocks[k]
            internal = np.arange(s, e)[counts[s:e] > 0]
            cs, _ = self.level_blocks[k + 1]
            self._reduce_plan.append((internal, child_start[internal] - cs))

        for arr in (counts, child_start, parent, level, lo, hi, self.leaf_cube, self.level_index):
            arr.setflags(write=False)

    @classmethod
    def from_child_counts(cls, child_counts: Sequence[int]) -> Lattice:
        """Tree given by the number of children of each cube in breadth-first order (0 = leaf)."""
        return cls(child_counts)

    def __repr__(self) -> str:
        return f"Lattice(depth={self.depth}, cubes={self.n_cubes}, atoms={self.n_atoms})"

    def __len__(self) -> int:
        return self.n_cubes

    def cube_id(self, i: int) -> str:
        return self._ids[i]

    @property
    def cube_ids(self) -> list[str]:
        return list(self._ids)

    def index(self, cube: int | str) -> int:
        """Resolve a cube given as integer index or ``"level:index"`` string."""
        if isinstance(cube, (str, np.str_)):
            try:
                return self._index[str(cube)]
            except KeyError:
                raise StructuralError(f"cube {cube!r} is not in {self!r}") from None
        if isinstance(cube, (int, np.integer)) and not isinstance(cube, bool):
            if 0 <= cube < self.n_cubes:
                return int(cube)
        raise StructuralError(f"cube {cube!r} is not in {self!r}")

    def children(self, i: int) -> range:
        s = int(self.child_start[i])
        return range(s, s + int(self.child_count[i]))

    def is_leaf(self, i: int) -> bool:
        return self.child_count[i] == 0

    def atoms(self, i: int) -> range:
        return range(int(self.lo[i]), int(self.hi[i]))

    def contains(self, outer: int, inner: int) -> bool:
        """True iff cube ``inner`` is a (not necessarily strict) subset of ``outer``."""
        return self.lo[outer] <= self.lo[inner] and self.hi[inner] <= self.hi[outer] and (
            self.level[inner] >= self.level[outer]
        )

    def ancestors(self, i: int) -> list[int]:
        """Cubes containing ``i`` from ``i`` itself up to the root."""
        out = [i]
        while self.parent[out[-1]] >= 0:
            out.append(int(self.parent[out[-1]]))
        return out

    def descendants(self, i: int) -> list[int]:
        """Cubes contained in ``i`` (including ``i``), breadth-first."""
        out = [i]
        k = 0
        while k < len(out):
            out.extend(self.children(out[k]))
            k += 1
        return out

    def cubes_at_level(self, k: int) -> range:
        s, e = self.level_blocks[k]
        return range(s, e)

    def atom_membership(self) -> np.ndarray:
        """``anc[k, x]`` = cube at level ``k`` containing atom ``x``, or -1."""
        anc = np.full((self.depth + 1, self.n_atoms), -1, dtype=np.int64)
        for k in range(self.depth + 1):
            for c in self.cubes_at_level(k):
                anc[k, self.lo[c]:self.hi[c]] = c
        return anc

    # vectorised tree passes -------------------------------------------------

    def upward(self, base: np.ndarray) -> np.ndarray:
        """Subtree sums: ``out[J] = sum of base[I] over cubes I inside J``.

        ``base`` has the cube axis first; trailing axes are carried along.
        """
        out = np.array(base, dtype=float, copy=True)
        for k in range(self.depth - 1, -1, -1):
            internal, offsets = self._reduce_plan[k]
            cs, ce = self.level_blocks[k + 1]
            out[internal] += np.add.reduceat(out[cs:ce], offsets, axis=0)
        return out

    def downward(self, base: np.ndarray, start_level: int = 0) -> np.ndarray:
        """Path sums: ``out[I] = sum of base[K] over ancestors K of I at level >= start_level``.

        Entries above ``start_level`` are zero.
        """
        base = np.asarray(base, dtype=float)
        out = np.zeros_like(base)
        if start_level > self.depth:
            return out
        s, e = self.level_blocks[start_level]
        out[s:e] = base[s:e]
        for k in range(start_level + 1, self.depth + 1):
            s, e = self.level_blocks[k]
            out[s:e] = out[self.parent[s:e]] + base[s:e]
        return out

    def downward_max(self, base: np.ndarray) -> np.ndarray:
        """Running maximum of ``base`` along root-to-cube paths."""
        out = np.array(base, dtype=float, copy=True)
        for k in range(1, self.depth + 1):
            s, e = self.level_blocks[k]
            out[s:e] = np.maximum(out[self.parent[s:e]], out[s:e])
        return out

    def atom_to_cubes(self, values: np.ndarray) -> np.ndarray:
        """Per-cube array with atom values on the leaves and zeros elsewhere."""
        values = np.asarray(values, dtype=float)
        out = np.zeros((self.n_cubes,) + values.shape[1:])
        out[self.leaf_cube] = values
        return out

    def cubes_to_atoms(self, per_cube: np.ndarray) -> np.ndarray:
        return np.asarray(per_cube)[self.leaf_cube]


def build_lattice(
    depth: int,
    arity: int | Sequence[int] | Callable[[int, int], int] = 2,
) -> Lattice:
    """Lattice in which every cube above ``depth`` splits into ``arity`` children.

    ``arity`` may be an int, a per-level list of length ``depth`` or a callable
    ``(level, index_in_level) -> branching``.
    """
    if isinstance(depth, bool) or not isinstance(depth, (int, np.integer)) or depth < 0:
        raise ValueError(f"depth must be a nonnegative integer, got {depth!r}")
    if callable(arity):
        branch = arity
    elif isinstance(arity, (int, np.integer)):
        branch = lambda k, i: int(arity)  # noqa: E731
    else:
        per_level = [int(a) for a in arity]
        if len(per_level) != depth:
            raise ValueError(f"per-level arity needs {depth} entries, got {len(per_level)}")
        branch = lambda k, i: per_level[k]  # noqa: E731

    counts: list[int] = []
    width = 1
    for k in range(depth + 1):
        nxt = 0
        for i in range(width):
            c = 0 if k == depth else int(branch(k, i))
            if k < depth and c < 2:
                raise ValueError(f"branching factor at {k}:{i} is {c}; must be >= 2")
            counts.append(c)
            nxt += c
        width = nxt
    return Lattice(counts)


@dataclass(frozen=True)
class ExponentPair:
    """Exponent ``p`` in (1, inf) and its Hölder conjugate ``p / (p - 1)``."""

    p: float
    p_conj: float = field(init=False)

    def __post_init__(self):
        p = float(self.p)
        if not (1.0 < p < np.inf):
            raise ValueError(f"p must lie in (1, inf), got {self.p!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "p_conj", p / (p - 1.0))

    def dual(self) -> ExponentPair:
        return ExponentPair(self.p_conj)

    def exponent(self, use_conjugate: bool = False) -> float:
        return self.p_conj if use_conjugate else self.p


class Measure:
    """Nonnegative finite mass on each atom, with cached cube totals."""

    def __init__(self, lattice: Lattice, atom_mass):
        mass = np.array(atom_mass, dtype=float)
        if mass.shape != (lattice.n_atoms,):
            raise StructuralError(
                f"expected {lattice.n_atoms} atom masses, got shape {mass.shape}"
            )
        if not np.all(np.isfinite(mass)) or np.any(mass < 0):
            raise ValueError("atom masses must be finite and nonnegative")
        self.lattice = lattice
        self.atom_mass = mass
        self.cube_total = lattice.upward(lattice.atom_to_cubes(mass))
        mass.setflags(write=False)
        self.cube_total.setflags(write=False)

    def __repr__(self) -> str:
        return f"Measure({self.lattice!r}, total={self.total:g})"

    def __call__(self, cube: int | str) -> float:
        return float(self.cube_total[self.lattice.index(cube)])

    @property
    def total(self) -> float:
        return float(self.cube_total[0])


def as_function(lattice: Lattice, values) -> np.ndarray:
    """Validate ``values`` as a function on the atoms of ``lattice``."""
    f = np.asarray(values, dtype=float)
    if f.ndim == 0 or f.shape[0] != lattice.n_atoms:
        raise StructuralError(f"expected {lattice.n_atoms} atom values, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("function values must be finite")
    return f


def integrals(m: Measure, f) -> np.ndarray:
    """``∫_I f dm`` for every cube ``I`` (bottom-up, one pass)."""
    lat = m.lattice
    f = as_function(lat, f)
    fm = f * m.atom_mass.reshape((-1,) + (1,) * (f.ndim - 1))
    return lat.upward(lat.atom_to_cubes(fm))


def averages(m: Measure, f) -> np.ndarray:
    """Mass-averages of ``f`` over every cube; zero-mass cubes get 0."""
    ints = integrals(m, f)
    tot = m.cube_total.reshape((-1,) + (1,) * (ints.ndim - 1))
    out = np.zeros_like(ints)
    np.divide(ints, tot, out=out, where=np.broadcast_to(tot > 0, ints.shape))
    return out


def integrate(m: Measure, f, cube: int | str) -> float:
    i = m.lattice.index(cube)
    f = as_function(m.lattice, f)
    s = slice(m.lattice.lo[i], m.lattice.hi[i])
    return float(np.dot(f[s], m.atom_mass[s]))


def average(m: Measure, f, cube: int | str) -> float:
    i = m.lattice.index(cube)
    tot = m.cube_total[i]
    return integrate(m, f, i) / tot if tot > 0 else 0.0


def weighted_norm(values, mass, q: float, axis: int = 0):
    """``(Σ |v|^q mass)^{1/q}`` along ``axis``, scaled by ``max |v|`` against under/overflow."""
    v = np.abs(np.asarray(values, dtype=float))
    mass = np.asarray(mass, dtype=float)
    if v.ndim > 1:
        mass = mass.reshape((-1,) + (1,) * (v.ndim - 1))
    s = v.max(axis=axis, keepdims=True, initial=0.0)
    r = np.divide(v, s, out=np.zeros_like(v), where=s > 0)
    out = np.squeeze(s, axis=axis) * np.sum(r**q * mass, axis=axis) ** (1.0 / q)
    return float(out) if np.ndim(out) == 0 else out


def lp_norm(m: Measure, f, e: ExponentPair, use_conjugate: bool = False) -> float:
    """``(Σ |f|^q m)^{1/q}`` with ``q = p`` or its conjugate."""
    f = as_function(m.lattice, f)
    return weighted_norm(f, m.atom_mass, e.exponent(use_conjugate))


def check_same_lattice(*objs) -> Lattice:
    lats = {id(o.lattice): o.lattice for o in objs}
    if len(lats) != 1:
        raise StructuralError("objects are defined on different lattices")
    return next(iter(lats.values()))
