import random
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st
from sympy import Rational

from flasque_kit.arith import BaseField, FieldError, FieldTowerSpec, compute_S_Sf
from flasque_kit.brauer import (
    Connector,
    InvariantError,
    LocalInvariantVector,
    check_connector,
    dihedral_connector,
    fraction_from_json,
    fraction_to_json,
    image_of_I,
    invariant_map_I,
    quotient_representatives,
    r_count,
    reduce_mod1,
    validate,
    zero_vector,
)

Q = BaseField.rational()
F = Fraction
Q17 = FieldTowerSpec(BaseField.quadratic(17), 3)


class TestVectors:
    def test_normalization(self):
        v = LocalInvariantVector.make(Q17, {"2:0": F(5, 4), "2:1": F(-1, 4), "3:0": 0})
        assert v.entries == (("2:0", F(1, 4)), ("2:1", F(3, 4)))
        assert v["5:0"] == 0
        assert v.support == ("2:0", "2:1")

    def test_arithmetic(self):
        v = LocalInvariantVector.make(Q17, {"2:0": F(3, 4), "2:1": F(1, 4)})
        assert (v + -v).is_zero
        assert (v + v).entries == (("2:0", F(1, 2)), ("2:1", F(1, 2)))

    def test_unknown_place(self):
        with pytest.raises(FieldError):
            LocalInvariantVector.make(Q17, {"3:1": F(1, 2)})  # 3 is inert in Q(sqrt 17)

    def test_json(self):
        v = LocalInvariantVector.make(Q17, {"2:0": F(3, 4), "2:1": F(1, 4)})
        assert v.to_json() == {"2:0": "3/4", "2:1": "1/4"}
        assert LocalInvariantVector.from_json(Q17, v.to_json()) == v
        assert fraction_from_json(fraction_to_json(F(-7, 3))) == F(-7, 3)
        with pytest.raises(ValueError):
            fraction_from_json("1/0")

    def test_reduce(self):
        assert reduce_mod1(F(-1, 4)) == F(3, 4)
        assert reduce_mod1(3) == 0


class TestValidate:
    def test_examples(self):
        tower = FieldTowerSpec(Q, 3)
        validate(zero_vector(tower))
        validate(LocalInvariantVector.make(tower, {"2:0": F(1, 2), "5:0": F(1, 2)}))
        with pytest.raises(InvariantError):
            validate(LocalInvariantVector.make(tower, {"2:0": F(1, 4), "5:0": F(3, 4)}))  # M/Q is cyclic of degree 2 at 5
        with pytest.raises(InvariantError) as info:
            validate(LocalInvariantVector.make(tower, {"2:0": F(1, 4)}))
        assert "sum" in str(info.value)

    def test_local_degree_kill(self):
        tower = FieldTowerSpec(Q, 3)
        # 7 splits in Q(sqrt 2) and -1 is not a square mod 7: local degree 2
        with pytest.raises(InvariantError) as info:
            validate(LocalInvariantVector.make(tower, {"7:0": F(1, 4), "2:0": F(3, 4)}))
        assert any(p.startswith("7:0") for p in info.value.problems)

    def test_archimedean(self):
        real = FieldTowerSpec(Q, 3)
        validate(LocalInvariantVector.make(real, {"inf:0": F(1, 2), "2:0": F(1, 2)}))
        with pytest.raises(InvariantError):
            validate(LocalInvariantVector.make(real, {"inf:0": F(1, 4), "2:0": F(3, 4)}))
        complex_base = FieldTowerSpec(BaseField.quadratic(-14), 4)
        with pytest.raises(InvariantError) as info:
            validate(LocalInvariantVector.make(complex_base, {"inf:0": F(1, 2), "2:0": F(1, 2)}))
        assert "complex" in info.value.problems[0]

    def test_local_base_has_no_sum_constraint(self):
        tower = FieldTowerSpec(BaseField.padic(3), 3, 3)
        validate(LocalInvariantVector.make(tower, {"3:0": F(1, 4)}))


class TestInvariantMap:
    def test_examples(self):
        S = ("2:0", "2:1")
        v = LocalInvariantVector.make(Q17, {"2:0": F(3, 4), "2:1": F(1, 4)})
        assert invariant_map_I(v, S) == (F(1, 2), F(1, 2))
        assert invariant_map_I(zero_vector(Q17), S) == (0, 0)

    @given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
    def test_homomorphism(self, a, b, c, d):
        S = ("2:0", "2:1")
        v = LocalInvariantVector.make(Q17, {"2:0": F(a, 4), "2:1": F(b, 4)})
        w = LocalInvariantVector.make(Q17, {"2:0": F(c, 4), "2:1": F(d, 4)})
        lhs = invariant_map_I(v + w, S)
        rhs = tuple(reduce_mod1(x + y) for x, y in zip(invariant_map_I(v, S), invariant_map_I(w, S)))
        assert lhs == rhs

    def test_kernel_contains_doubles(self):
        # twice any class has even local invariants times deg/2, so it dies under I
        rep = r_count(Q17)
        for v in rep.representatives:
            assert invariant_map_I(v + v, rep.S) == (0, 0)

    def test_image_enumeration(self):
        assert image_of_I(("x", "y"), ("x", "y")) == [(0, 0), (F(1, 2), F(1, 2))]
        assert len(image_of_I(("x", "y", "z"), ("x",))) == 4
        assert len(image_of_I(("x", "y"), ())) == 4
        assert len(image_of_I(("x", "y"), ("x", "y"), local=True)) == 4
        assert image_of_I((), ()) == [()]


class TestRCount:
    @pytest.mark.parametrize(
        "base,s,a,r",
        [("Q(sqrt 17)", 3, None, 2), ("Q", 3, None, 1), ("Qp:3", 3, 3, 2), ("Q", 3, -15, 4),
         ("Q(sqrt 34)", 4, None, 2), ("Q(sqrt -14)", 4, None, 2)],
    )
    def test_examples(self, base, s, a, r):
        rep = r_count(FieldTowerSpec(BaseField.parse(base), s, a))
        assert rep.r == r
        assert len(rep.representatives) == r
        assert len(set(rep.images())) == r

    def test_sqrt17_representatives(self):
        reps = quotient_representatives(Q17)
        assert [v.to_json() for v in reps] == [{}, {"2:0": "3/4", "2:1": "1/4"}]

    def test_local_representative(self):
        reps = quotient_representatives(FieldTowerSpec(BaseField.padic(3), 3, 3))
        assert [v.to_json() for v in reps] == [{}, {"3:0": "1/4"}]

    def test_empty_sf_is_flagged(self):
        rep = r_count(FieldTowerSpec(BaseField.quadratic(34), 4))
        assert rep.Sf == ()
        assert any("Sf is empty" in t for t in rep.trace)

    def test_degenerate(self):
        rep = r_count(FieldTowerSpec(Q, 3, -1))
        assert rep.r == 1 and rep.S == ()

    def test_text_and_json(self):
        rep = r_count(Q17)
        data = rep.to_json()
        assert data["r"] == 2 and data["S"] == ["2:0", "2:1"]
        assert {p["place"] for p in data["places"]} == {"2:0", "2:1", "inf:0", "inf:1"}
        assert "r  = 2" in rep.to_text()

    @given(st.integers(0, 10**6))
    @settings(max_examples=40)
    def test_count_formula(self, seed):
        rng = random.Random(seed)
        base = rng.choice(["Q", "Q(sqrt 17)", "Q(sqrt 5)", "Q(sqrt 34)", "Q(sqrt -7)", "Q(sqrt 3)"])
        tower = FieldTowerSpec(BaseField.parse(base), rng.choice([3, 4]), rng.choice([None, 3, -3, 5, 6, -15, 7]))
        assume(not tower.degenerate)
        rep = r_count(tower)
        S, Sf = compute_S_Sf(tower)
        expected = 1 if not S else 2 ** (len(S) - 1) if Sf else 2 ** len(S)
        assert rep.r == expected
        for v in rep.representatives:
            validate(v)

    @given(st.integers(0, 10**6), st.sampled_from([3, 5]))
    @settings(max_examples=30)
    def test_invariant_under_square_scaling(self, seed, k):
        rng = random.Random(seed)
        base = rng.choice(["Q", "Q(sqrt 17)", "Q(sqrt 5)", "Q(sqrt -7)"])
        a = rng.choice([3, -3, 6, -15, 7, 10])
        tower = FieldTowerSpec(BaseField.parse(base), rng.choice([3, 4]), a)
        assume(not tower.degenerate)
        assert r_count(FieldTowerSpec(tower.base, tower.s, a * k * k)).r == r_count(tower).r


class TestConnector:
    def test_examples(self):
        c = dihedral_connector(-1, 1)
        assert c.coefficients() == {"q": ["1"], "l": ["-1"], "p": ["-1"]}
        c = dihedral_connector(1, 1)
        assert c.coefficients()["p"] == ["-1", "2"]
        c = dihedral_connector(6, 3)
        assert c.coefficients() == {"q": ["1", "2"], "l": ["-1", "3"], "p": ["-1", "1", "6"]}

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            dihedral_connector(0, 1)
        with pytest.raises(ValueError):
            dihedral_connector(1, 0)

    @given(
        st.fractions(min_value=-100, max_value=100, max_denominator=30).filter(bool),
        st.fractions(min_value=-100, max_value=100, max_denominator=30).filter(bool),
    )
    def test_contract(self, a, b):
        c = dihedral_connector(a, b)
        assert c.q.eval(0) == 1 and c.q.eval(1) == Rational(b.numerator, b.denominator)
        assert c.p.eval(0) == -1 and c.p.eval(1) == Rational(a.numerator, a.denominator)
        assert c.p.rem(c.q).is_zero and c.p.degree() <= 2

    def test_check_catches_tampering(self):
        c = dihedral_connector(6, 3)
        bad = Connector(c.a, c.b, c.q, c.ell, c.p + 1)
        with pytest.raises(AssertionError):
            check_connector(bad)

    def test_json(self):
        assert dihedral_connector(F(-1, 2), 2).to_json()["a"] == "-1/2"
