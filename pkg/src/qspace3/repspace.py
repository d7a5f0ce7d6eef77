"""Operator representations as truncated band matrices.

Ladder operators annihilate states outside the window, so every relation is
exact on interior rows and columns.  All matrix elements are real; bases are
orthonormal, so conjugation is matrix transposition.
"""

import math

import numpy as np
import scipy.sparse as sp
import scipy.linalg as sla

from .context import QContext
from .errors import DomainError, WindowError
from .operators import LabeledOperator, RepFamily, RepWindow
from .qarith import _qnum

__all__ = [
    "build_T_generic", "build_t_special", "build_X_over_R",
    "build_K_generic", "build_K_orbital", "build_T_orb",
    "build_X_T_R_joint", "build_L_basis", "build_L_operators",
    "casimir", "coproduct", "add_spin", "r0_from_z0",
    "t2_block", "t2_block_levels", "x3_block", "x3_block_levels",
    "casimir_eigenvalue",
]

_RAD_CLAMP = -1e-14


def _sqrt_clamped(v):
    if v >= 0.0:
        return math.sqrt(v)
    if v >= _RAD_CLAMP:
        return 0.0
    raise WindowError(f"negative square-root radicand {v}")


def casimir_eigenvalue(l, ctx: QContext) -> float:
    """q [l][l+1], the quadratic Casimir value on the spin-l ladder
    (l may be half-integer)."""
    q = float(ctx.q)
    return q * _qnum(l, q) * _qnum(l + 1, q)


def r0_from_z0(z0: float, ctx: QContext) -> float:
    """Radial scale of the diagonal-Casimir basis matching a coordinate
    eigenvalue scale z0 (r0 = q z0)."""
    return float(ctx.q) * z0


# ---------------------------------------------------------------------------
# ladder families on a single lattice line
# ---------------------------------------------------------------------------

def build_T_generic(d: float, m_bar: float, window, ctx: QContext) -> RepFamily:
    """Ladder representation with highest weight m_bar and parameter d.

    Admissible regimes: d = 1/lam with 2*m_bar + 1 a positive integer (the
    finite-dimensional ladder m = -m_bar .. m_bar, window ignored); d = 0 or
    d < 0 with real m_bar (infinite-dimensional, bounded above by m_bar,
    truncated below by the window range "m").
    """
    q = float(ctx.q)
    lam = ctx.lam
    finite = abs(d - 1.0 / lam) <= 1e-12 / lam
    if d > 0 and not finite:
        raise DomainError(
            f"d > 0 requires d = 1/lam = {1.0 / lam!r}; got {d!r}")
    if finite:
        two = 2 * m_bar
        if abs(two - round(two)) > 1e-9 or m_bar < 0:
            raise DomainError(
                f"finite ladder needs m_bar a non-negative (half-)integer, got {m_bar}")
        d = 1.0 / lam
        ms = [(-m_bar) + k for k in range(int(round(two)) + 1)]
        win = RepWindow.make({"m": (-m_bar, m_bar)},
                             hard_lo=("m",), hard_hi=("m",))
    else:
        if window is None:
            raise DomainError("infinite-dimensional ladder needs a window")
        lo, hi = window.range_map["m"]
        if hi > m_bar + 1e-12:
            raise WindowError(
                f"window top {hi} exceeds the ladder head m_bar = {m_bar}")
        ms = [lo + k for k in range(int(round(hi - lo)) + 1)]
        hard_hi = ("m",) if abs(hi - m_bar) <= 1e-12 else ()
        win = RepWindow.make({"m": (lo, hi)}, hard_hi=hard_hi)

    def ccstar(m):
        return (q**(-2 * m) - q**(-2 * m_bar)) \
            * (q**(2 * (m_bar + 1)) / lam - d * q**(-2 * m)) / (lam * q**4)

    idx = {m: i for i, m in enumerate(ms)}
    T3, Tp, Tm, tau = {}, {}, {}, {}
    for i, m in enumerate(ms):
        T3[(i, i)] = 1.0 / lam - d * q**(-4 * m)
        tau[(i, i)] = d * lam * q**(-4 * m)
        c = _sqrt_clamped(ccstar(m))
        if m + 1 in idx:
            Tp[(idx[m + 1], i)] = c
        if m - 1 in idx:
            Tm[(idx[m - 1], i)] = q * q * _sqrt_clamped(ccstar(m - 1))
    ops = {
        "T3": LabeledOperator("T3", ms, T3, shift=({},)),
        "T+": LabeledOperator("T+", ms, Tp, shift=({"m": 1},)),
        "T-": LabeledOperator("T-", ms, Tm, shift=({"m": -1},)),
        "tau": LabeledOperator("tau", ms, tau, shift=({},)),
    }
    if all(v > 0 for v in tau.values()):
        ops["tau^1/2"] = LabeledOperator(
            "tau^1/2", ms, {k: math.sqrt(v) for k, v in tau.items()},
            shift=({},))
        ops["tau^-1/2"] = LabeledOperator(
            "tau^-1/2", ms, {k: 1.0 / math.sqrt(v) for k, v in tau.items()},
            shift=({},))
    params = {"d": d, "m_bar": m_bar, "m_name": "m"}
    if finite:
        params["casimir_scalar"] = casimir_eigenvalue(m_bar, ctx)
    coords = [{"m": m} for m in ms]
    return RepFamily("T_generic", params, ops, win, ctx, coords)


def build_t_special(window, ctx: QContext) -> RepFamily:
    """The unique ladder with head m_t = 0 solving the coordinate constraints
    (d = -q^2/lam); tau has strictly negative eigenvalues."""
    q = float(ctx.q)
    lam = ctx.lam
    lo, hi = window.range_map["m_t"]
    if hi > 0:
        raise DomainError("no state with positive m_t exists")
    ms = list(range(int(lo), int(hi) + 1))
    idx = {m: i for i, m in enumerate(ms)}
    T3, Tp, Tm, tau = {}, {}, {}, {}
    for i, m in enumerate(ms):
        T3[(i, i)] = (1.0 + q * q * q**(-4 * m)) / lam
        tau[(i, i)] = -q * q * q**(-4 * m)
        if m + 1 in idx:
            Tp[(idx[m + 1], i)] = _sqrt_clamped(q**(-4 * m) - 1.0) / (lam * q)
        if m - 1 in idx:
            Tm[(idx[m - 1], i)] = q / lam * _sqrt_clamped(q**(-4 * (m - 1)) - 1.0)
    win = RepWindow.make({"m_t": (lo, hi)},
                         hard_hi=("m_t",) if hi == 0 else ())
    ops = {
        "T3": LabeledOperator("t3", ms, T3, shift=({},)),
        "T+": LabeledOperator("t+", ms, Tp, shift=({"m_t": 1},)),
        "T-": LabeledOperator("t-", ms, Tm, shift=({"m_t": -1},)),
        "tau": LabeledOperator("tau_t", ms, tau, shift=({},)),
    }
    params = {"d": -q * q / lam, "m_bar": 0.0, "m_name": "m_t",
              "casimir_scalar": -(1 + q * q) / lam**2}
    coords = [{"m_t": m} for m in ms]
    return RepFamily("t_special", params, ops, win, ctx, coords)


def build_X_over_R(sign: int, window, ctx: QContext) -> RepFamily:
    """Homogeneous coordinates X R^-1 on the m_t ladder; the global sign
    labels the two inequivalent irreducible representations."""
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    q = float(ctx.q)
    lo, hi = window.range_map["m_t"]
    if hi > 0:
        raise DomainError("no state with positive m_t exists")
    ms = list(range(int(lo), int(hi) + 1))
    idx = {m: i for i, m in enumerate(ms)}
    s = float(sign)
    sq = math.sqrt(1.0 + q * q)
    X3, Xp, Xm = {}, {}, {}
    for i, m in enumerate(ms):
        X3[(i, i)] = s * q**(2 * m - 1)
        if m + 1 in idx:
            Xp[(idx[m + 1], i)] = -s * q / sq * _sqrt_clamped(1.0 - q**(4 * m))
        if m - 1 in idx:
            Xm[(idx[m - 1], i)] = s / sq * _sqrt_clamped(1.0 - q**(4 * (m - 1)))
    win = RepWindow.make({"m_t": (lo, hi)},
                         hard_hi=("m_t",) if hi == 0 else ())
    ops = {
        "X3R": LabeledOperator("X3/R", ms, X3, shift=({},)),
        "X+R": LabeledOperator("X+/R", ms, Xp, shift=({"m_t": 1},)),
        "X-R": LabeledOperator("X-/R", ms, Xm, shift=({"m_t": -1},)),
    }
    coords = [{"m_t": m} for m in ms]
    return RepFamily("X_over_R", {"sign": sign, "m_name": "m_t"},
                     ops, win, ctx, coords)


def build_K_generic(d_k: float, alpha: float, window, ctx: QContext) -> RepFamily:
    """Non-compact ladder family; admissible iff the quadratic kappa is
    non-negative on the whole window."""
    q = float(ctx.q)
    lam = ctx.lam
    lo, hi = window.range_map["m_k"]
    ms = list(range(int(lo), int(hi) + 1))
    idx = {m: i for i, m in enumerate(ms)}

    def kappa(x):
        return 1.0 / (q * q * lam * lam) - alpha * x + d_k / (lam * q**4) * x * x

    K3, Kp, Km, tau = {}, {}, {}, {}
    for i, m in enumerate(ms):
        K3[(i, i)] = 1.0 / lam - d_k * q**(-4 * m)
        tau[(i, i)] = d_k * lam * q**(-4 * m)
        kv = kappa(q**(-2 * m))
        if kv < _RAD_CLAMP:
            raise WindowError(
                f"kappa < 0 at m_k = {m}: window not admissible for "
                f"(d_k={d_k}, alpha={alpha})")
        if m + 1 in idx:
            Kp[(idx[m + 1], i)] = _sqrt_clamped(kv)
        if m - 1 in idx:
            Km[(idx[m - 1], i)] = -q * q * _sqrt_clamped(kappa(q**(-2 * (m - 1))))
    win = window
    ops = {
        "T3": LabeledOperator("K3", ms, K3, shift=({},)),
        "T+": LabeledOperator("K+", ms, Kp, shift=({"m_k": 1},)),
        "T-": LabeledOperator("K-", ms, Km, shift=({"m_k": -1},)),
        "tau": LabeledOperator("tau_k", ms, tau, shift=({},)),
    }
    coords = [{"m_k": m} for m in ms]
    return RepFamily("K_generic", {"d": d_k, "alpha": alpha, "m_name": "m_k"},
                     ops, win, ctx, coords)


def build_K_orbital(window, ctx: QContext) -> RepFamily:
    """The unique K family entering orbital angular momentum:
    d_k = -1/(lam q^2), alpha = 0, ladder bounded below at m_k = 0."""
    q = float(ctx.q)
    lam = ctx.lam
    lo, hi = window.range_map["m_k"]
    if lo != 0:
        raise WindowError("orbital K ladder starts at m_k = 0")
    win = RepWindow.make({"m_k": (0, hi)}, hard_lo=("m_k",))
    fam = build_K_generic(-1.0 / (lam * q * q), 0.0, win, ctx)
    params = dict(fam.params)
    params.update({"m_under": -1, "casimir_scalar": -(1 + q * q) / lam**2})
    return RepFamily("K_orbital", params, fam.operators, win, ctx, fam.coords)


# ---------------------------------------------------------------------------
# tensor families
# ---------------------------------------------------------------------------

def _torb_window(window):
    rm = window.range_map
    if "m_t" not in rm or "m_k" not in rm:
        raise WindowError("tensor window needs ranges for m_t and m_k")
    (tlo, thi), (klo, khi) = rm["m_t"], rm["m_k"]
    if thi > 0:
        raise DomainError("no state with positive m_t exists")
    if klo < 0:
        raise DomainError("m_k is bounded below by 0")
    hard_hi = ("m_t",) if thi == 0 else ()
    hard_lo = ("m_k",) if klo == 0 else ()
    return RepWindow.make({"m_t": (tlo, thi), "m_k": (klo, khi)},
                          hard_lo=hard_lo, hard_hi=hard_hi), \
        (int(tlo), int(thi)), (int(klo), int(khi))


def build_T_orb(window, ctx: QContext) -> RepFamily:
    """Orbital angular momentum on the tensor basis |m_t, m_k>."""
    q = float(ctx.q)
    lam = ctx.lam
    win, (tlo, thi), (klo, khi) = _torb_window(window)
    basis = [(mt, mk) for mt in range(tlo, thi + 1) for mk in range(klo, khi + 1)]
    idx = {s: i for i, s in enumerate(basis)}
    T3, Tp, Tm, tau = {}, {}, {}, {}
    for i, (mt, mk) in enumerate(basis):
        m = mt + mk
        T3[(i, i)] = (1.0 - q**(-4 * m)) / lam
        tau[(i, i)] = q**(-4 * m)
        if (mt + 1, mk) in idx:
            Tp[(idx[(mt + 1, mk)], i)] = \
                _sqrt_clamped(q**(-4 * mt) - 1.0) / (lam * q)
        if (mt, mk + 1) in idx:
            Tp[(idx[(mt, mk + 1)], i)] = \
                q**(-2 * mt) * _sqrt_clamped(1.0 - q**(-4 * (mk + 1))) / lam
        if (mt - 1, mk) in idx:
            Tm[(idx[(mt - 1, mk)], i)] = \
                q / lam * _sqrt_clamped(q**(-4 * (mt - 1)) - 1.0)
        if (mt, mk - 1) in idx:
            Tm[(idx[(mt, mk - 1)], i)] = \
                q * q / lam * q**(-2 * mt) * _sqrt_clamped(1.0 - q**(-4 * mk))
    ops = {
        "T3": LabeledOperator("T3_orb", basis, T3, shift=({},)),
        "T+": LabeledOperator("T+_orb", basis, Tp,
                              shift=({"m_t": 1}, {"m_k": 1})),
        "T-": LabeledOperator("T-_orb", basis, Tm,
                              shift=({"m_t": -1}, {"m_k": -1})),
        "tau": LabeledOperator("tau_orb", basis, tau, shift=({},)),
    }
    coords = [{"m_t": mt, "m_k": mk} for (mt, mk) in basis]
    return RepFamily("T_orb_tensor", {"d": 1.0 / lam, "m_name": None},
                     ops, win, ctx, coords)


def build_X_T_R_joint(M: int, z0: float, sigma: int, window,
                      ctx: QContext) -> RepFamily:
    """Coordinates, radius and orbital angular momentum on |M, nu, m>.

    nu = m_t + M <= M and m = m_t + m_k >= nu - M label the states; the
    fused sign sigma fixes the coordinate branch (X3 = sigma |z0| q^(2 nu)).
    """
    if sigma not in (1, -1):
        raise DomainError("sigma must be +1 or -1")
    q = float(ctx.q)
    lam = ctx.lam
    rm = dict(window.range_map)
    if "nu" in rm:
        nlo, nhi = rm.pop("nu")
        if nhi > M:
            raise DomainError(f"nu must satisfy nu <= M = {M}")
        rm["m_t"] = (nlo - M, nhi - M)
    if "m_t" not in rm:
        raise WindowError("joint window needs a range for m_t or nu")
    if "m_k" not in rm:
        rm["m_k"] = (0, -rm["m_t"][0])
    win, (tlo, thi), (klo, khi) = _torb_window(RepWindow.make(rm))
    z = sigma * abs(z0)
    sq = math.sqrt(1.0 + q * q)
    basis = []
    coords = []
    for mt in range(tlo, thi + 1):
        for mk in range(klo, khi + 1):
            basis.append((mt + M, mt + mk))
            coords.append({"m_t": mt, "m_k": mk})
    idx = {s: i for i, s in enumerate(basis)}
    X3, Xp, Xm, R2 = {}, {}, {}, {}
    T3, Tp, Tm, tau = {}, {}, {}, {}
    for i, (nu, m) in enumerate(basis):
        X3[(i, i)] = z * q**(2 * nu)
        R2[(i, i)] = q**(4 * M + 2) * z0 * z0
        T3[(i, i)] = (1.0 - q**(-4 * m)) / lam
        tau[(i, i)] = q**(-4 * m)
        if (nu + 1, m + 1) in idx:
            j = idx[(nu + 1, m + 1)]
            Xp[(j, i)] = -q * q * z / sq * _sqrt_clamped(q**(4 * M) - q**(4 * nu))
            Tp[(j, i)] = _sqrt_clamped(q**(4 * (M - nu)) - 1.0) / (q * lam)
        if (nu, m + 1) in idx:
            j = idx[(nu, m + 1)]
            Tp[(j, i)] = Tp.get((j, i), 0.0) + \
                _sqrt_clamped(q**(4 * (M - nu)) - q**(-4 * (m + 1))) / lam
        if (nu - 1, m - 1) in idx:
            j = idx[(nu - 1, m - 1)]
            Xm[(j, i)] = q * z / sq * _sqrt_clamped(q**(4 * M) - q**(4 * (nu - 1)))
            Tm[(j, i)] = q * q / (q * lam) * \
                _sqrt_clamped(q**(4 * (M - nu + 1)) - 1.0)
        if (nu, m - 1) in idx:
            j = idx[(nu, m - 1)]
            Tm[(j, i)] = Tm.get((j, i), 0.0) + \
                q * q / lam * _sqrt_clamped(q**(4 * (M - nu)) - q**(-4 * m))
    ops = {
        "X3": LabeledOperator("X3", basis, X3, shift=({},)),
        "X+": LabeledOperator("X+", basis, Xp, shift=({"m_t": 1},)),
        "X-": LabeledOperator("X-", basis, Xm, shift=({"m_t": -1},)),
        "R2": LabeledOperator("R2", basis, R2, shift=({},)),
        "T3": LabeledOperator("T3_orb", basis, T3, shift=({},)),
        "T+": LabeledOperator("T+_orb", basis, Tp,
                              shift=({"m_t": 1}, {"m_k": 1})),
        "T-": LabeledOperator("T-_orb", basis, Tm,
                              shift=({"m_t": -1}, {"m_k": -1})),
        "tau": LabeledOperator("tau_orb", basis, tau, shift=({},)),
    }
    params = {"M": M, "z0": abs(z0), "sigma": sigma, "d": 1.0 / lam,
              "m_name": None}
    return RepFamily("X_T_R_joint", params, ops, win, ctx, coords)


def build_L_basis(M: int, r0: float, l_max: int, ctx: QContext) -> RepFamily:
    """Coordinates on the basis |M, l, m> where the quadratic Casimir and
    T3_orb are diagonal; 0 <= l <= l_max, |m| <= l."""
    if l_max < 0:
        raise DomainError("l_max must be >= 0")
    q = float(ctx.q)

    def qn(a):
        return _qnum(a, q)

    basis = [(l, m) for l in range(l_max + 1) for m in range(-l, l + 1)]
    idx = {s: i for i, s in enumerate(basis)}
    T2, X3, Xp, Xm = {}, {}, {}, {}
    two = qn(2)
    for i, (l, m) in enumerate(basis):
        T2[(i, i)] = casimir_eigenvalue(l, ctx)
        pref = r0 * q**(2 * M + m)
        if (l + 1, m) in idx:
            X3[(idx[(l + 1, m)], i)] = pref * math.sqrt(
                qn(l + m + 1) * qn(l - m + 1) / (qn(2 * l + 1) * qn(2 * l + 3)))
        if (l - 1, m) in idx:
            X3[(idx[(l - 1, m)], i)] = pref * math.sqrt(
                qn(l + m) * qn(l - m) / (qn(2 * l + 1) * qn(2 * l - 1)))
        if (l + 1, m + 1) in idx:
            Xp[(idx[(l + 1, m + 1)], i)] = pref * q**(-l) * math.sqrt(
                qn(l + m + 1) * qn(l + m + 2) / (two * qn(2 * l + 1) * qn(2 * l + 3)))
        if (l - 1, m + 1) in idx and l - m - 1 >= 1:
            Xp[(idx[(l - 1, m + 1)], i)] = -pref * q**(l + 1) * math.sqrt(
                qn(l - m) * qn(l - m - 1) / (two * qn(2 * l + 1) * qn(2 * l - 1)))
        if (l + 1, m - 1) in idx:
            Xm[(idx[(l + 1, m - 1)], i)] = pref * q**l * math.sqrt(
                qn(l - m + 1) * qn(l - m + 2) / (two * qn(2 * l + 1) * qn(2 * l + 3)))
        if (l - 1, m - 1) in idx and l + m - 1 >= 1:
            Xm[(idx[(l - 1, m - 1)], i)] = -pref * q**(-l - 1) * math.sqrt(
                qn(l + m) * qn(l + m - 1) / (two * qn(2 * l + 1) * qn(2 * l - 1)))
    win = RepWindow.make({"l": (0, l_max), "m": (-l_max, l_max)},
                         hard_lo=("m",), hard_hi=("m",))
    ops = {
        "T2": LabeledOperator("T2_orb", basis, T2, shift=({},)),
        "X3": LabeledOperator("X3", basis, X3,
                              shift=({"l": 1}, {"l": -1})),
        "X+": LabeledOperator("X+", basis, Xp,
                              shift=({"l": 1, "m": 1}, {"l": -1, "m": 1})),
        "X-": LabeledOperator("X-", basis, Xm,
                              shift=({"l": 1, "m": -1}, {"l": -1, "m": -1})),
    }
    coords = [{"l": l, "m": m} for (l, m) in basis]
    return RepFamily("L_basis", {"M": M, "r0": r0, "m_name": None},
                     ops, win, ctx, coords)


# ---------------------------------------------------------------------------
# derived operators
# ---------------------------------------------------------------------------

def casimir(family: RepFamily, ctx: QContext,
            scalar_if_negative: bool = False) -> LabeledOperator:
    """Quadratic Casimir matrix from tau^(1/2) and the ladder product.

    Requires strictly positive tau.  Families whose tau is negative carry a
    fixed scalar value; pass scalar_if_negative=True to receive it as a
    multiple of the identity instead of a DomainError.
    """
    q = float(ctx.q)
    lam = ctx.lam
    tau_d = family["tau"].diagonal()
    n = family.n
    if np.all(tau_d > 0):
        th = sp.diags(np.sqrt(tau_d))
        tmh = sp.diags(1.0 / np.sqrt(tau_d))
        mat = (q * q / lam**2) * th + tmh / lam**2 \
            + tmh @ family.op_csr("T+") @ family.op_csr("T-") \
            - (1 + q * q) / lam**2 * sp.identity(n)
        ent = {(int(i), int(j)): float(v) for (i, j), v
               in mat.todok().items()}
        return LabeledOperator("T2", family.basis, ent, shift=None,
                               index=family["tau"].index)
    if scalar_if_negative and "casimir_scalar" in family.params:
        c = family.params["casimir_scalar"]
        return LabeledOperator("T2", family.basis,
                               {(i, i): c for i in range(n)}, shift=({},),
                               index=family["tau"].index)
    raise DomainError(
        "tau has non-positive eigenvalues; the Casimir square roots are not "
        "real (request the family's scalar value with scalar_if_negative=True)")


def build_L_operators(family: RepFamily, ctx: QContext) -> dict:
    """Rescaled angular momentum components L3, L+, L- on a tau > 0 family."""
    q = float(ctx.q)
    lam = ctx.lam
    tau_d = family["tau"].diagonal()
    if not np.all(tau_d > 0):
        raise DomainError("L operators need positive tau (tau^(-1/2) real)")
    tmh = sp.diags(1.0 / np.sqrt(tau_d))
    sq = math.sqrt(1.0 + q * q)
    n = family.n
    T2 = family.op_csr("T2") if "T2" in family else \
        casimir(family, ctx).to_csr()
    Lp = tmh @ family.op_csr("T+") / (q * q * sq)
    Lm = -tmh @ family.op_csr("T-") / (q**3 * sq)
    L3 = (tmh - sp.identity(n) - lam**2 / (1 + q * q) * T2) / (q * q * (1 - q * q))

    def wrap(name, mat, shift):
        ent = {(int(i), int(j)): float(v) for (i, j), v in mat.todok().items()}
        return LabeledOperator(name, family.basis, ent, shift=shift,
                               index=family["tau"].index)

    return {"L3": wrap("L3", L3, None),
            "L+": wrap("L+", Lp, family["T+"].shift),
            "L-": wrap("L-", Lm, family["T-"].shift)}


def coproduct(rep1: RepFamily, rep2: RepFamily, variant: str,
              ctx: QContext) -> RepFamily:
    """Tensor-product family through the standard or the sign-twisted rule.

    standard: D(T3) = T3 x 1 + tau x T3, D(T+-) = T+- x 1 + tau^(1/2) x T+-
              (first tau positive);
    beta:     D(T+-) = T+- x 1 +- (-tau)^(1/2) x T+- (first tau negative).
    tau is group-like (product of diagonals), so d = lam d1 d2.
    """
    tau1 = rep1["tau"].diagonal()
    if variant == "standard":
        if not np.all(tau1 > 0):
            raise DomainError("standard coproduct needs positive tau in the "
                              "first factor; no definite conjugation otherwise")
        root = np.sqrt(tau1)
        sign_minus = 1.0
    elif variant == "beta":
        if not np.all(tau1 < 0):
            raise DomainError("beta coproduct needs negative tau in the "
                              "first factor; no definite conjugation otherwise")
        root = np.sqrt(-tau1)
        sign_minus = -1.0
    else:
        raise DomainError(f"unknown coproduct variant {variant!r}")

    n1, n2 = rep1.n, rep2.n
    basis = [(a, b) for a in rep1.basis for b in rep2.basis]

    def kron_ent(e1, diag_like, e2, mode):
        """entries of A x I (mode 'left'), diag x B (mode 'right')."""
        out = {}
        if mode == "left":
            for (i, j), v in e1.items():
                for k in range(n2):
                    out[(i * n2 + k, j * n2 + k)] = v
        else:
            for i in range(n1):
                dv = diag_like[i]
                if dv == 0.0:
                    continue
                for (k, kk), v in e2.items():
                    out[(i * n2 + k, i * n2 + kk)] = dv * v
        return out

    def add(d1, d2):
        for k, v in d2.items():
            d1[k] = d1.get(k, 0.0) + v
        return d1

    ops = {}
    t3 = kron_ent(rep1["T3"].entries, None, None, "left")
    add(t3, kron_ent(None, tau1, rep2["T3"].entries, "right"))
    tp = kron_ent(rep1["T+"].entries, None, None, "left")
    add(tp, kron_ent(None, root, rep2["T+"].entries, "right"))
    tm = kron_ent(rep1["T-"].entries, None, None, "left")
    add(tm, kron_ent(None, sign_minus * root, rep2["T-"].entries, "right"))
    tau2 = rep2["tau"].diagonal()
    tau_out = {(i * n2 + k, i * n2 + k): tau1[i] * tau2[k]
               for i in range(n1) for k in range(n2)}

    def merge_shift(s1, s2):
        allowed = []
        for s in (s1 or ()):
            allowed.append(dict(s))
        for s in (s2 or ()):
            allowed.append(dict(s))
        return tuple({tuple(sorted(d.items())): d for d in allowed}.values()) \
            or None

    ops["T3"] = LabeledOperator("T3", basis, t3, shift=({},))
    ops["T+"] = LabeledOperator("T+", basis, tp,
                                shift=merge_shift(rep1["T+"].shift,
                                                  rep2["T+"].shift))
    ops["T-"] = LabeledOperator("T-", basis, tm,
                                shift=merge_shift(rep1["T-"].shift,
                                                  rep2["T-"].shift))
    ops["tau"] = LabeledOperator("tau", basis, tau_out, shift=({},))

    coords = []
    for c1 in rep1.coords:
        for c2 in rep2.coords:
            c = dict(c1)
            for k, v in c2.items():
                c[k if k not in c else k + "'"] = v
            coords.append(c)
    ranges = dict(rep1.window.ranges)
    hard_lo = set(rep1.window.hard_lo)
    hard_hi = set(rep1.window.hard_hi)
    for k, v in rep2.window.ranges:
        kk = k if k not in ranges else k + "'"
        ranges[kk] = v
        if k in rep2.window.hard_lo:
            hard_lo.add(kk)
        if k in rep2.window.hard_hi:
            hard_hi.add(kk)
    win = RepWindow.make(ranges, hard_lo=hard_lo, hard_hi=hard_hi)

    d1 = rep1.params.get("d")
    d2 = rep2.params.get("d")
    d_out = None if d1 is None or d2 is None else ctx.lam * d1 * d2
    params = {"d": d_out, "variant": variant, "m_name": None}
    # group-like check: the product tau diagonal must equal lam*d*q^(-4m_tot)
    n1_name = rep1.params.get("m_name")
    n2_name = rep2.params.get("m_name")
    if d_out is not None and n1_name and n2_name:
        q = float(ctx.q)
        worst = 0.0
        for i, c1 in enumerate(rep1.coords):
            for k, c2 in enumerate(rep2.coords):
                m_tot = c1[n1_name] + c2[n2_name]
                pred = ctx.lam * d_out * q**(-4 * m_tot)
                got = tau_out[(i * n2 + k, i * n2 + k)]
                worst = max(worst, abs(got - pred) / max(1.0, abs(pred)))
        params["group_like_defect"] = worst
    return RepFamily("coproduct", params, ops, win, ctx, coords)


def add_spin(orb: RepFamily, spin: RepFamily, ctx: QContext) -> RepFamily:
    """Couple a finite-dimensional spin ladder to an orbital family through
    the standard rule (orbital tau must be positive)."""
    d_spin = spin.params.get("d")
    if d_spin is None or abs(d_spin - 1.0 / ctx.lam) > 1e-9 / ctx.lam:
        raise DomainError("spin factor must be a finite ladder (d = 1/lam)")
    out = coproduct(orb, spin, "standard", ctx)
    return RepFamily("spin_added", out.params, out.operators, out.window,
                     ctx, out.coords)


# ---------------------------------------------------------------------------
# fixed-m spectral blocks
# ---------------------------------------------------------------------------

def t2_block(m: int, depth: int, ctx: QContext):
    """Symmetric tridiagonal fixed-m block of the orbital Casimir in the m_t
    chain (entries straight from the three-term structure; couplings to
    dropped sites absent).  Returns (diag, offdiag, m_t labels descending)."""
    q = float(ctx.q)
    lam = ctx.lam
    top = min(0, m)
    mts = list(range(top, top - depth - 1, -1))
    n = len(mts)
    D = np.zeros(n)
    E = np.zeros(n - 1)
    for j, mt in enumerate(mts):
        D[j] = ((q * q + 1) * q**(2 * (m + 1) - 4 * mt) - (q * q + 1)) / lam**2
        if j + 1 < n:
            E[j] = q**(2 * m + 1) * _sqrt_clamped(
                (q**(4 - 4 * mt) - 1.0) * (q**(4 - 4 * mt) - q**(-4 * m))) / lam**2
    return D, E, mts


def t2_block_levels(m: int, depth: int, ctx: QContext, n_levels: int = None):
    """Eigenvalues of the fixed-m Casimir block matched to q[l][l+1].

    The truncated single-sign chain carries the parity class l - |m| odd;
    returns [(l, eigenvalue, rel_err)] for the lowest levels.
    """
    D, E, _ = t2_block(m, depth, ctx)
    evs = np.sort(sla.eigvalsh_tridiagonal(D, E))
    if n_levels is None:
        n_levels = len(evs)
    out = []
    am = abs(m)
    for k, v in enumerate(evs[:n_levels]):
        l = am + 1 + 2 * k
        target = casimir_eigenvalue(l, ctx)
        out.append((l, float(v), abs(v - target) / max(1.0, target)))
    return out


def x3_block(M: int, m: int, l_max: int, r0: float, ctx: QContext):
    """Tridiagonal fixed-m block of X3 on the diagonal-Casimir basis.

    Zero diagonal; returns (offdiag, l labels ascending from |m|)."""
    q = float(ctx.q)

    def qn(a):
        return _qnum(a, q)

    ls = list(range(abs(m), l_max + 1))
    E = np.array([r0 * q**(2 * M + m) * math.sqrt(
        qn(l + m + 1) * qn(l - m + 1) / (qn(2 * l + 1) * qn(2 * l + 3)))
        for l in ls[:-1]])
    return E, ls


def x3_block_levels(M: int, m: int, l_max: int, r0: float, ctx: QContext,
                    margin: int = 5):
    """Positive X3 eigenvalues of the truncated block matched against the
    geometric lattice r0 q^(2 nu - 1), nu <= M + min(0, m).

    Only the largest levels are lattice-exact; `margin` levels nearest zero
    are dropped as truncation-distorted.  Returns [(nu, eigenvalue, rel_err)].
    """
    E, ls = x3_block(M, m, l_max, r0, ctx)
    evs = np.sort(sla.eigvalsh_tridiagonal(np.zeros(len(ls)), E))[::-1]
    n_pos = len(ls) // 2
    q = float(ctx.q)
    nu_top = M + min(0, m)
    out = []
    for k in range(max(0, n_pos - margin)):
        nu = nu_top - k
        target = r0 * q**(2 * nu - 1)
        out.append((nu, float(evs[k]), abs(evs[k] - target) / target))
    return out
