"""The two mutually inverse basis changes: coefficients diagonalizing the
orbital Casimir on the sign-doubled tensor basis, and coefficients
diagonalizing the coordinate X3 on the diagonal-Casimir basis.

Phase convention: the tensor-side coefficients carry an extra (-1)^(m_t)
relative to the bare weighted-function formula.  The truncated Casimir block
has strictly positive off-diagonals, and its eigenvectors alternate in sign
down the m_t chain; the alternating factor is exactly the gauge that makes
the printed three-term recursion hold with positive coefficients on both
neighbors.  All isometry statements are insensitive to it.
"""

import json
import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from .context import QContext
from .errors import CoverageError, DomainError
from .qarith import _qnum
from .qspecial import completeness_sum, p_tilde, p_tilde_table
from .repspace import casimir_eigenvalue, x3_block, r0_from_z0

__all__ = [
    "c_coeff", "d_coeff", "check_t2", "check_x3_recursion",
    "TransformTable", "build_transform", "completeness_check",
]


def c_coeff(l: int, m: int, m_t: int, sigma: int, ctx: QContext):
    """Coefficient of |m_t, m_k, sigma> in the Casimir eigenstate (l, m).

    Vanishes for m_t > min(0, m) and for l < |m| (both valid zeros).
    """
    if sigma not in (1, -1):
        raise DomainError("sigma must be +1 or -1")
    am = abs(m)
    if l < am or m_t > min(0, m):
        return ctx.out(0.0)
    q = ctx.qval()
    norm = _sqrt(1 - q**-2)
    if m >= 0:
        x = sigma * q**(2 * (m_t - m - 1))
        val = norm * q**(m_t - 1 - m) * p_tilde(l, am, x, ctx)
    else:
        x = sigma * q**(2 * (m_t - 1))
        val = norm * q**(m_t - 1) * p_tilde(l, am, x, ctx)
    return ctx.out((-1)**m_t * val)


def _sqrt(v):
    try:
        return math.sqrt(v)
    except TypeError:
        import mpmath as mp
        return mp.sqrt(v)


def d_coeff(M: int, l: int, m: int, nu: int, sigma: int, ctx: QContext):
    """Coefficient of |M, l, m> in the X3 eigenstate with eigenvalue
    sigma r0 q^(2 nu - 1); requires nu <= M and m >= nu - M."""
    if sigma not in (1, -1):
        raise DomainError("sigma must be +1 or -1")
    if nu > M or m < nu - M:
        raise DomainError(
            f"labels must satisfy nu <= M and m >= nu - M, got "
            f"nu={nu}, M={M}, m={m}")
    am = abs(m)
    if l < am:
        return ctx.out(0.0)
    q = ctx.qval()
    norm = _sqrt(1 - q**-2)
    if m >= 0:
        x = sigma * q**(2 * (nu - M - 1 - m))
        val = norm * q**(nu - M - 1 - m) * p_tilde(l, am, x, ctx)
    else:
        x = sigma * q**(2 * (nu - M - 1))
        val = norm * q**(nu - M - 1) * p_tilde(l, am, x, ctx)
    return ctx.out(val)


def check_t2(l: int, m: int, m_t: int, sigma: int, ctx: QContext) -> float:
    """Relative residual of the Casimir three-term recursion in m_t at one
    coefficient site."""
    q = float(ctx.q)
    lhs = (q**(2 * l + 2) + q**(-2 * l)
           - (q * q + 1) * q**(2 * (m + 1) - 4 * m_t)) \
        * c_coeff(l, m, m_t, sigma, ctx)
    up = math.sqrt(max((q**(-4 * m_t) - 1) * (q**(-4 * m_t) - q**(-4 * m)), 0.0))
    dn = math.sqrt(max((q**(4 - 4 * m_t) - 1) * (q**(4 - 4 * m_t) - q**(-4 * m)),
                       0.0))
    rhs = q**(2 * m + 1) * (up * c_coeff(l, m, m_t + 1, sigma, ctx)
                            + dn * c_coeff(l, m, m_t - 1, sigma, ctx))
    return abs(lhs - rhs) / max(1.0, abs(lhs))


def check_x3_recursion(M: int, l: int, m: int, nu: int, sigma: int,
                       ctx: QContext, z0: float = 1.0) -> float:
    """Relative residual of the X3 three-term recursion in l at one
    coefficient site."""
    q = float(ctx.q)
    r0 = r0_from_z0(z0, ctx)
    z = sigma * r0 * q**(2 * nu - 1)

    def qn(a):
        return _qnum(a, q)

    lhs = z * d_coeff(M, l, m, nu, sigma, ctx)
    t1 = math.sqrt(qn(l - m + 1) * qn(l + m + 1) / qn(2 * l + 3)) \
        * d_coeff(M, l + 1, m, nu, sigma, ctx)
    t2 = 0.0
    if l > abs(m):
        t2 = math.sqrt(qn(l + m) * qn(l - m) / qn(2 * l - 1)) \
            * d_coeff(M, l - 1, m, nu, sigma, ctx)
    rhs = r0 * q**(2 * M + m) / math.sqrt(qn(2 * l + 1)) * (t1 + t2)
    return abs(lhs - rhs) / max(1.0, abs(lhs))


# ---------------------------------------------------------------------------
# transform tables
# ---------------------------------------------------------------------------

@dataclass
class TransformTable:
    direction: str                   # "mtk_to_lm" | "lm_to_x3"
    fixed: dict
    row_labels: list
    col_labels: list
    matrix: np.ndarray
    q: float
    truncations: dict
    gram_defect: float
    congruence_defect: float
    meta: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "schema": "qspace3/1",
            "direction": self.direction,
            "fixed": self.fixed,
            "q": self.q,
            "truncations": self.truncations,
            "gram_defect": self.gram_defect,
            "congruence_defect": self.congruence_defect,
            "rows": [list(r) if isinstance(r, tuple) else r
                     for r in self.row_labels],
            "cols": [list(c) if isinstance(c, tuple) else c
                     for c in self.col_labels],
            "meta": self.meta,
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)

    def write_csv(self, fh):
        import csv
        w = csv.writer(fh)
        w.writerow(["row"] + [repr(c) for c in self.col_labels])
        for lab, row in zip(self.row_labels, self.matrix):
            w.writerow([repr(lab)] + [f"{v:.17g}" for v in row])


def _congruence_depth(q: float) -> int:
    """Chain depth pushing the Casimir-form tail below ~1e-9."""
    return 4 + max(8, int(math.ceil(9.5 * math.log(10.0)
                                    / (2.0 * math.log(q)))))


def _casimir_congruence_defect(m, l_values, cd, ctx):
    """max |U^T A2 U - diag(q[l][l+1])| over a depth-cd interior window,
    entrywise normalized by the larger Casimir value involved.

    The quadratic form loses ~q^(2 cd) digits to cancellation in binary64
    (the chain entries grow like q^(-4 m_t) while the coefficients decay),
    so the columns, the block and the form are all evaluated in extended
    precision; the defect is then tail-limited.
    """
    q = float(ctx.q)
    ectx = QContext(q=q, tol_rel=ctx.tol_rel, tail_eps=ctx.tail_eps,
                    max_terms=ctx.max_terms, precision="extended")
    top = min(0, m)
    mts = list(range(top - cd, top + 1))
    am = abs(m)
    with mp.workdps(ectx.dps):
        qm = mp.mpf(q)
        lam = qm - 1 / qm
        norm = mp.sqrt(1 - qm**-2)
        colvecs = {l: [] for l in l_values}
        for sigma in (1, -1):
            for mt in mts:
                if mt > min(0, m):
                    for l in l_values:
                        colvecs[l].append(mp.mpf(0))
                    continue
                if m >= 0:
                    x = sigma * qm**(2 * (mt - m - 1))
                    pref = norm * qm**(mt - 1 - m)
                else:
                    x = sigma * qm**(2 * (mt - 1))
                    pref = norm * qm**(mt - 1)
                tab = p_tilde_table(max(l_values), am, x, ectx)
                for l in l_values:
                    colvecs[l].append((-1)**mt * pref * tab[l])
        n = len(mts)
        diag = [((qm * qm + 1) * qm**(2 * (m + 1) - 4 * mt) - (qm * qm + 1))
                / lam**2 for mt in mts]
        # off[k] couples the ascending pair (mts[k], mts[k]+1)
        off = [qm**(2 * m + 1) * mp.sqrt(
            (qm**(-4 * mt) - 1) * (qm**(-4 * mt) - qm**(-4 * m))) / lam**2
            for mt in mts[:-1]]

        def apply_block(vec):
            out = [mp.mpf(0)] * (2 * n)
            for blk in range(2):
                o = blk * n
                for j in range(n):
                    v = diag[j] * vec[o + j]
                    if j > 0:
                        v += off[j - 1] * vec[o + j - 1]
                    if j + 1 < n:
                        v += off[j] * vec[o + j + 1]
                    out[o + j] = v
            return out

        margin = 2
        keep = [False] * (2 * n)
        for blk in range(2):
            for j in range(margin, n):
                keep[blk * n + j] = True
        lams = {l: casimir_eigenvalue(l, ectx) for l in l_values}
        worst = mp.mpf(0)
        applied = {l: apply_block(colvecs[l]) for l in l_values}
        for la in l_values:
            for lb in l_values:
                s = mp.mpf(0)
                ca = colvecs[la]
                ab = applied[lb]
                for i in range(2 * n):
                    if keep[i]:
                        s += ca[i] * ab[i]
                target = lams[la] if la == lb else mp.mpf(0)
                dev = abs(s - target) / max(lams[la], lams[lb], mp.mpf(1))
                worst = max(worst, dev)
        return float(worst)


def _c_columns(m, l_values, mts, ctx):
    """Coefficient columns over the (sigma, m_t) grid, via stable tables."""
    q = float(ctx.q)
    am = abs(m)
    norm = math.sqrt(1 - q**-2)
    l_top = max(l_values)
    n = len(mts)
    U = np.zeros((2 * n, len(l_values)))
    for blk, sigma in enumerate((1, -1)):
        for j, mt in enumerate(mts):
            if mt > min(0, m):
                continue
            if m >= 0:
                x = sigma * q**(2 * (mt - m - 1))
                pref = norm * q**(mt - 1 - m)
            else:
                x = sigma * q**(2 * (mt - 1))
                pref = norm * q**(mt - 1)
            tab = p_tilde_table(l_top, am, x, ctx)
            sgn = (-1)**mt
            for c, l in enumerate(l_values):
                U[blk * n + j, c] = sgn * pref * tab[l]
    return U


def build_transform(direction, m: int, ctx: QContext, M: int = 0,
                    l_max: int = 40, depth: int = 60, z0: float = 1.0,
                    nu_depth: int = 6) -> TransformTable:
    """Assemble a coefficient table over the sign-doubled basis and measure
    its isometry (Gram) and eigen-reproduction (congruence) defects.

    direction 1 / "mtk_to_lm": columns indexed by l = |m| .. l_max diagonalize
    the fixed-m Casimir chain; rows run over (sigma, m_t).
    direction 2 / "lm_to_x3": columns indexed by (sigma, nu) diagonalize the
    fixed-(M, m) coordinate block; rows run over l.

    The congruence defect is evaluated on a depth-limited interior window
    (deep chain sites cancel beyond binary64 in the quadratic form).
    """
    direction = {1: "mtk_to_lm", 2: "lm_to_x3",
                 "mtk_to_lm": "mtk_to_lm", "lm_to_x3": "lm_to_x3"}.get(direction)
    if direction is None:
        raise DomainError("direction must be 1/'mtk_to_lm' or 2/'lm_to_x3'")
    q = float(ctx.q)
    am = abs(m)
    if l_max < am:
        raise CoverageError(f"l_max={l_max} cannot cover |m|={am}")

    if direction == "mtk_to_lm":
        l_values = list(range(am, l_max + 1))
        top = min(0, m)
        mts = list(range(top - depth, top + 1))
        U = _c_columns(m, l_values, mts, ctx)
        G = U.T @ U
        gram = float(np.abs(G - np.eye(len(l_values))).max())
        # the degree-l eigenvector is concentrated around m_t ~ -(l-|m|)/2,
        # so the congruence window deepens with the covered degree range
        cd = min(depth, (l_max - am + 1) // 2 + _congruence_depth(q))
        cong = _casimir_congruence_defect(m, l_values, cd, ctx)
        rows = [(s, mt) for s in (1, -1) for mt in mts]
        return TransformTable(
            direction, {"m": m}, rows, l_values, U, q,
            {"depth": depth, "l_max": l_max, "congruence_depth": cd},
            gram, cong)

    # lm_to_x3
    r0 = r0_from_z0(z0, ctx)
    nu_top = M + min(0, m)
    nus = list(range(nu_top - nu_depth, nu_top + 1))
    ls = list(range(am, l_max + 1))
    cols = [(s, nu) for s in (1, -1) for nu in nus]
    norm = math.sqrt(1 - q**-2)
    U = np.zeros((len(ls), len(cols)))
    for cidx, (s, nu) in enumerate(cols):
        if m >= 0:
            x = s * q**(2 * (nu - M - 1 - m))
            pref = norm * q**(nu - M - 1 - m)
        else:
            x = s * q**(2 * (nu - M - 1))
            pref = norm * q**(nu - M - 1)
        tab = p_tilde_table(l_max, am, x, ctx)
        for ridx, l in enumerate(ls):
            U[ridx, cidx] = pref * tab[l]
    G = U.T @ U
    gram = float(np.abs(G - np.eye(len(cols))).max())
    E, _ = x3_block(M, m, l_max, r0, ctx)
    A = np.diag(E, 1) + np.diag(E, -1)
    targets = np.array([s * r0 * q**(2 * nu - 1) for (s, nu) in cols])
    C = U.T @ A @ U
    cong = float(np.abs(C - np.diag(targets)).max() / max(abs(targets).max(), 1.0))
    return TransformTable(
        direction, {"M": M, "m": m}, ls, cols, U, q,
        {"l_max": l_max, "nu_depth": nu_depth, "z0": z0, "r0": r0},
        gram, cong)


def completeness_check(m: int, ctx: QContext, l_max: int = 40,
                       mt_depth: int = 4) -> dict:
    """Evaluate the degree-summed completeness for sampled lattice pairs.

    Returns the worst |sum - delta delta| over diagonal and off-diagonal
    samples at l_max, plus the staged defects at l_max/4, l_max/2, l_max
    (convergence profile; expected to decrease monotonically).
    """
    shift = max(m, 0)
    top = min(0, m)
    samples = []
    for mt in range(top, top - mt_depth - 1, -1):
        samples.append(((mt, 1), (mt, 1)))
        samples.append(((mt, -1), (mt, -1)))
    for mt in range(top, top - mt_depth, -1):
        samples.append(((mt, 1), (mt - 1, 1)))
        samples.append(((mt, 1), (mt, -1)))

    def worst_at(lm):
        w = 0.0
        per = []
        for (mta, sa), (mtb, sb) in samples:
            val = completeness_sum(mta - shift, mtb - shift, sa, sb, m,
                                   ctx, l_max=lm)
            target = 1.0 if (mta, sa) == (mtb, sb) else 0.0
            d = abs(float(val) - target)
            per.append({"pair": [[mta, sa], [mtb, sb]], "sum": float(val),
                        "defect": d})
            w = max(w, d)
        return w, per

    stages = []
    for lm in (max(abs(m), l_max // 4), max(abs(m), l_max // 2), l_max):
        w, per = worst_at(lm)
        stages.append({"l_max": lm, "max_defect": w})
    return {
        "schema": "qspace3/1",
        "m": m,
        "l_max": l_max,
        "n_pairs": len(samples),
        "max_defect": stages[-1]["max_defect"],
        "stages": stages,
        "samples": per,
    }
