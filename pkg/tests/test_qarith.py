import math

import mpmath as mp
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qspace3 import DomainError, PoleError, QContext
from qspace3 import qarith as qa

CTX2 = QContext(q=2.0)
CTX15 = QContext(q=1.5)


class TestQContext:
    def test_rejects_q_not_above_one(self):
        with pytest.raises(DomainError):
            QContext(q=1.0)
        with pytest.raises(DomainError):
            QContext(q=0.5)

    def test_rejects_bad_tolerance_ordering(self):
        with pytest.raises(DomainError):
            QContext(q=1.5, tol_rel=1e-16, tail_eps=1e-14)
        with pytest.raises(DomainError):
            QContext(q=1.5, tol_rel=2.0)

    def test_rejects_small_max_terms(self):
        with pytest.raises(DomainError):
            QContext(q=1.5, max_terms=32)

    def test_lambda_matches_q(self):
        ctx = QContext(q=1.7)
        assert ctx.lam == 1.7 - 1.0 / 1.7


class TestQNum:
    def test_zero_and_one(self):
        assert qa.qnum_sym(0, CTX2) == 0.0
        assert qa.qnum_sym(1, CTX2) == pytest.approx(1.0, rel=1e-15)

    def test_q2_values(self):
        # (q^a - q^-a)/(q - 1/q) at q = 2
        assert qa.qnum_sym(2, CTX2) == pytest.approx(2.5, rel=1e-15)
        assert qa.qnum_sym(3, CTX2) == pytest.approx(5.25, rel=1e-15)

    @given(a=st.floats(min_value=-25, max_value=25),
           q=st.sampled_from([1.1, 1.5, 2.0]))
    def test_odd_in_a(self, a, q):
        ctx = QContext(q=q)
        assert qa.qnum_sym(-a, ctx) == pytest.approx(
            -qa.qnum_sym(a, ctx), rel=1e-12, abs=1e-12)

    def test_classical_limit(self):
        ctx = QContext(q=1.0 + 1e-6)
        for a in range(1, 21):
            assert abs(qa.qnum_sym(a, ctx) - a) <= 1e-4 * a


class TestQFactorial:
    def test_base_cases(self):
        assert qa.qfactorial_sym(0, CTX2) == 1.0
        assert qa.qfactorial_sym(1, CTX2) == pytest.approx(1.0, rel=1e-15)

    def test_q2_product(self):
        # [2][3] = 2.5 * 5.25
        assert qa.qfactorial_sym(3, CTX2) == pytest.approx(13.125, rel=1e-14)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            qa.qfactorial_sym(-1, CTX2)


class TestQBinomial:
    def test_edges(self):
        assert qa.qbinomial_sym(5, 0, CTX15) == 1.0
        assert qa.qbinomial_sym(1, 3, CTX15) == 0.0
        assert qa.qbinomial_sym(-2, 1, CTX15) == 0.0
        assert qa.qbinomial_sym(3, -1, CTX15) == 0.0

    def test_simple_value(self):
        assert qa.qbinomial_sym(2, 1, CTX2) == pytest.approx(2.5, rel=1e-14)

    @given(n=st.integers(min_value=0, max_value=20),
           k=st.integers(min_value=0, max_value=20))
    def test_symmetry(self, n, k):
        if k > n:
            return
        a = qa.qbinomial_sym(n, k, CTX15)
        b = qa.qbinomial_sym(n, n - k, CTX15)
        assert a == pytest.approx(b, rel=1e-13)

    def test_factorial_ratio_oracle(self):
        # independent oracle: explicit product of q-numbers
        q = 1.5
        for n in range(0, 31):
            for k in (0, 1, n // 2, n):
                num = 1.0
                for j in range(k):
                    num *= (q**(n - j) - q**(-(n - j))) / (q**(j + 1) - q**(-(j + 1)))
                assert qa.qbinomial_sym(n, k, CTX15) == pytest.approx(
                    num, rel=5e-14)


class TestPochhammer:
    def test_empty_product(self):
        assert qa.qpochhammer(0.7, 0.3, 0) == 1.0

    def test_unit_argument(self):
        assert qa.qpochhammer(1.0, 0.3, 4) == 0.0

    def test_direct_value(self):
        # (1 - 0.5)(1 - 0.5*0.25)
        assert qa.qpochhammer(0.5, 0.25, 2) == pytest.approx(0.4375, rel=1e-15)

    def test_multi_argument(self):
        single = qa.qpochhammer(0.5, 0.25, 3) * qa.qpochhammer(0.2, 0.25, 3)
        assert qa.qpochhammer([0.5, 0.2], 0.25, 3) == pytest.approx(
            single, rel=1e-15)

    def test_negative_order_rejected(self):
        with pytest.raises(DomainError):
            qa.qpochhammer(0.5, 0.25, -1)


class TestPochhammerInf:
    def test_trivial(self):
        assert qa.qpochhammer_inf(0.0, 0.3, CTX15) == 1.0
        assert qa.qpochhammer_inf(1.0, 0.3, CTX15) == 0.0

    def test_against_long_finite_product(self):
        ctx = CTX15
        q = ctx.q
        a = base = q**-4
        finite = qa.qpochhammer(a, base, ctx.max_terms)
        inf = qa.qpochhammer_inf(a, base, ctx)
        assert abs(inf - finite) <= ctx.tail_eps * abs(finite) * 4

    def test_bad_base_rejected(self):
        with pytest.raises(DomainError):
            qa.qpochhammer_inf(0.5, 1.0, CTX15)
        with pytest.raises(DomainError):
            qa.qpochhammer_inf(0.5, -1.2, CTX15)

    def test_slow_base_hits_term_budget(self):
        from qspace3 import PrecisionError
        ctx = QContext(q=1.5, max_terms=64)
        with pytest.raises(PrecisionError):
            qa.qpochhammer_inf(0.5, 0.9999999, ctx)


class TestBasicHypergeometric:
    def test_zero_argument(self):
        assert qa.basic_hypergeometric([0.5, 0.25], [0.125], 0.5, 0.0,
                                       CTX15) == 1.0

    def test_unit_upper_terminates_immediately(self):
        v = qa.basic_hypergeometric([1.0, 0.25], [0.125], 0.5, 0.7, CTX15)
        assert v == 1.0

    def test_convergent_series_oracle(self):
        # 1phi1 summed by brute force with explicit Pochhammers
        base, a, b, x = 0.4, 0.3, 0.7, 0.2
        total = 0.0
        for k in range(200):
            t = qa.qpochhammer(a, base, k) / qa.qpochhammer(b, base, k)
            t *= (-1)**k * base**(k * (k - 1) / 2)
            t *= x**k / qa.qpochhammer(base, base, k)
            total += t
        got = qa.basic_hypergeometric([a], [b], base, x, CTX15)
        assert got == pytest.approx(total, rel=1e-13)

    def test_base_outside_disk_rejected(self):
        with pytest.raises(DomainError):
            qa.basic_hypergeometric([0.5], [0.25], 1.5, 0.1, CTX15)

    def test_pole_in_lower_parameters(self):
        # lower parameter 1/base makes (b; base)_k vanish at k = 2
        with pytest.raises(PoleError):
            qa.basic_hypergeometric([0.3, 0.7], [2.0], 0.5, 0.1, CTX15)


class TestJacksonIntegral:
    def test_constant_on_unit_interval(self):
        assert qa.jackson_integral(lambda t: 1.0, 1.0, CTX2) == pytest.approx(
            1.0, rel=1e-13)

    def test_zero_endpoint(self):
        assert qa.jackson_integral(lambda t: 1.0, 0.0, CTX2) == 0.0

    def test_linear_q2(self):
        # geometric series oracle: q/(q+1) = 2/3 at q = 2
        assert qa.jackson_integral(lambda t: t, 1.0, CTX2) == pytest.approx(
            2.0 / 3.0, rel=1e-13)

    @pytest.mark.parametrize("q", [1.5, 2.0])
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_monomials_closed_form(self, q, n):
        ctx = QContext(q=q)
        expect = (1 - q**-1) / (1 - q**(-(n + 1)))
        got = qa.jackson_integral(lambda t: t**n, 1.0, ctx)
        assert got == pytest.approx(expect, rel=ctx.tol_rel)

    def test_non_convergence_hits_term_budget(self):
        from qspace3 import PrecisionError
        ctx = QContext(q=1.0 + 1e-6, max_terms=64)
        with pytest.raises(PrecisionError):
            qa.jackson_integral(lambda t: 1.0, 1.0, ctx)


class TestExtendedMode:
    def test_matches_double(self):
        ctxe = QContext(q=1.5, precision="extended")
        v = qa.qnum_sym(7, ctxe)
        assert isinstance(v, mp.mpf)
        assert float(v) == pytest.approx(qa.qnum_sym(7, CTX15), rel=1e-15)

    def test_factorial_extended(self):
        ctxe = QContext(q=2.0, precision="extended")
        assert float(qa.qfactorial_sym(3, ctxe)) == pytest.approx(
            13.125, rel=1e-15)
