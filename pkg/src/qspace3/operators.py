"""Truncation windows, labeled band operators and representation families."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .context import QContext
from .errors import WindowError

__all__ = ["RepWindow", "LabeledOperator", "RepFamily"]


@dataclass(frozen=True)
class RepWindow:
    """Integer ranges for the quantum-number lattice plus interior policy.

    Edges imposed by the construction itself (a ladder that terminates, a
    constrained label) are *hard*: states there are exact and carry no
    interior margin.  All other edges are artificial truncation cuts; states
    within `margin` of them are excluded from interior verification.
    """

    ranges: tuple          # ((name, (lo, hi)), ...)
    hard_lo: frozenset = frozenset()
    hard_hi: frozenset = frozenset()
    margin: int = 2

    def __post_init__(self):
        if self.margin < 2:
            raise WindowError(f"interior margin must be >= 2, got {self.margin}")
        for name, (lo, hi) in self.ranges:
            if hi < lo:
                raise WindowError(f"empty range for {name}: [{lo}, {hi}]")

    @staticmethod
    def make(ranges: dict, hard_lo=(), hard_hi=(), margin: int = 2):
        return RepWindow(tuple(sorted(ranges.items())),
                         frozenset(hard_lo), frozenset(hard_hi), margin)

    @property
    def range_map(self) -> dict:
        return dict(self.ranges)

    def is_interior(self, coords: dict) -> bool:
        for name, (lo, hi) in self.ranges:
            v = coords.get(name)
            if v is None:
                continue
            if name not in self.hard_lo and v < lo + self.margin:
                return False
            if name not in self.hard_hi and v > hi - self.margin:
                return False
        return True


class LabeledOperator:
    """Sparse band matrix over an ordered list of basis labels.

    Convention: acting on a ket indexed by column j produces amplitudes in
    rows i, i.e. entry (i, j) multiplies |basis[i]> in A|basis[j]>.
    """

    def __init__(self, name, basis, entries, shift=None, index=None):
        self.name = name
        self.basis = tuple(basis)
        self.index = index if index is not None else \
            {s: i for i, s in enumerate(self.basis)}
        self.entries = dict(entries)
        self.shift = shift          # tuple of allowed shift dicts, or None
        self._csr = None

    @property
    def n(self):
        return len(self.basis)

    def to_csr(self):
        if self._csr is None:
            n = self.n
            if self.entries:
                rows, cols, vals = zip(*((i, j, v) for (i, j), v
                                         in self.entries.items()))
                self._csr = sp.csr_matrix(
                    (np.asarray(vals, dtype=float), (rows, cols)), shape=(n, n))
            else:
                self._csr = sp.csr_matrix((n, n))
        return self._csr

    def to_dense(self):
        return self.to_csr().toarray()

    def diagonal(self):
        return self.to_csr().diagonal()

    def adjoint(self):
        ent = {(j, i): v for (i, j), v in self.entries.items()}
        return LabeledOperator(self.name + "^T", self.basis, ent,
                               shift=None, index=self.index)

    def shift_violations(self, coords):
        """Entries whose (row - column) coordinate change is not among the
        declared shift signatures.  Empty when shift is None."""
        bad = []
        if not self.shift:
            return bad
        for (i, j), v in self.entries.items():
            if v == 0.0:
                continue
            delta = {}
            ci, cj = coords[i], coords[j]
            for k in set(ci) | set(cj):
                d = ci.get(k, 0) - cj.get(k, 0)
                if d:
                    delta[k] = d
            if not any(delta == dict(s) for s in self.shift):
                bad.append(((i, j), delta))
        return bad


class RepFamily:
    """A named set of LabeledOperators sharing one basis.

    Immutable after construction; operators are keyed canonically
    ("T3", "T+", "T-", "tau", "X3", ...) regardless of the family flavor.
    """

    def __init__(self, kind, params, operators, window, ctx: QContext, coords):
        self.kind = kind
        self.params = dict(params)
        self.operators = dict(operators)
        self.window = window
        self.ctx = ctx
        self.coords = tuple(coords)
        ops = next(iter(self.operators.values()))
        self.basis = ops.basis
        self.interior = np.array(
            [window.is_interior(c) for c in self.coords], dtype=bool)

    def __getitem__(self, key) -> LabeledOperator:
        return self.operators[key]

    def __contains__(self, key):
        return key in self.operators

    @property
    def n(self):
        return len(self.basis)

    def op_csr(self, key):
        return self.operators[key].to_csr()
