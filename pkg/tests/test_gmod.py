import random

import pytest
from hypothesis import given, strategies as st
from oracles import SMALL_GROUPS, brute_force_subgroups, cyclic, random_lattice

from flasque_kit.exactlin import FiniteAbelianGroup, IntMatrix, cokernel
from flasque_kit.gmod import (
    FiniteGModule,
    FiniteGroup,
    GLattice,
    GLatticeMap,
    GroupError,
    LatticeError,
    character_lattice,
    coset_representatives,
    direct_sum,
    dual,
    group_from_abelian_invariants,
    ind_copies,
    invariants_sublattice,
    is_cyclic_subgroup,
    permutation_module,
    quasitrivial_cover,
    regular_module,
    restrict,
    subgroup_generators,
    subgroups,
    trivial_lattice,
)
from flasque_kit.paptori import build_XS, family_group

M = IntMatrix.from_rows


class TestGroups:
    def test_abelian_examples(self):
        assert group_from_abelian_invariants([2]).order == 2
        assert group_from_abelian_invariants([2, 4]).order == 8
        V = group_from_abelian_invariants([2, 2])
        assert all(V.element_order(g) <= 2 for g in range(4))

    def test_order_cap(self):
        with pytest.raises(GroupError):
            group_from_abelian_invariants([4, 4, 5])

    def test_rejects_bad_tables(self):
        with pytest.raises(GroupError):
            FiniteGroup(((0, 1), (1, 1)), (("g", 1),))
        with pytest.raises(GroupError):
            FiniteGroup(((0, 1), (1, 0)), ())  # generators do not generate

    @pytest.mark.parametrize("name", sorted(SMALL_GROUPS))
    def test_subgroups_match_brute_force(self, name):
        G = SMALL_GROUPS[name]()
        assert subgroups(G) == brute_force_subgroups(G)

    @pytest.mark.parametrize(
        "factors,count",
        [([2], 2), ([2, 2], 5), ([2, 4], 8), ([8], 4), ([2, 2, 2], 16), ([3, 3], 6), ([4, 4], 15), ([2, 8], 11),
         ([2, 2, 4], 27), ([16], 5), ([12], 6)],
    )
    def test_abelian_subgroup_counts(self, factors, count):
        G = group_from_abelian_invariants(factors)
        subs = subgroups(G)
        assert len(subs) == count
        assert len(set(subs)) == count
        assert subs[0] == (G.identity,) and subs[-1] == tuple(range(G.order))

    def test_nonabelian_counts(self):
        assert len(subgroups(SMALL_GROUPS["S3"]())) == 6
        assert len(subgroups(SMALL_GROUPS["D4"]())) == 10
        assert len(subgroups(SMALL_GROUPS["Q8"]())) == 6

    def test_json_round_trip(self):
        for make in SMALL_GROUPS.values():
            G = make()
            assert FiniteGroup.from_json(G.to_json()) == G

    def test_element_names(self):
        G = family_group(4)
        assert G.element_name(G.identity) == "e"
        names = {G.element_name(g) for g in range(G.order)}
        assert "sigma" in names and "tau^2" in names and "sigma*tau" in names

    def test_cosets_partition(self):
        G = SMALL_GROUPS["D4"]()
        for H in subgroups(G):
            cosets = coset_representatives(G, H)
            covered = sorted(x for _, c in cosets for x in c)
            assert covered == list(range(G.order))
            assert len(cosets) * len(H) == G.order

    def test_subgroup_generators_generate(self):
        G = SMALL_GROUPS["C2xC4"]()
        for H in subgroups(G):
            assert G.closure(subgroup_generators(G, H)) == H


class TestLattices:
    def test_action_must_respect_relations(self):
        G = cyclic(3)
        with pytest.raises(LatticeError):
            GLattice(G, 1, {"g": M([[-1]])})
        with pytest.raises(LatticeError):
            GLattice(G, 1, {"g": M([[2]])})

    def test_permutation_examples(self):
        G = cyclic(2)
        assert permutation_module(G, (0, 1)).action["g"] == M([[1]])
        assert permutation_module(G, (0,)).action["g"] == M([[0, 1], [1, 0]])
        V = group_from_abelian_invariants([2, 2], ["x", "y"])
        diag = next(H for H in subgroups(V) if len(H) == 2 and all(V.element_name(h) in ("e", "x*y") for h in H))
        P = permutation_module(V, diag)
        assert P.rank == 2
        assert P.action["x"] == M([[0, 1], [1, 0]]) and P.action["y"] == M([[0, 1], [1, 0]])
        first = next(H for H in subgroups(V) if len(H) == 2 and V.element_name(H[1]) == "x")
        Px = permutation_module(V, first)
        assert Px.action["x"] == IntMatrix.identity(2) and Px.action["y"] == M([[0, 1], [1, 0]])

    def test_dual_examples(self):
        P = regular_module(SMALL_GROUPS["S3"]())
        assert dual(P).action == P.action
        Zm = character_lattice(cyclic(2), {"g": -1})
        assert dual(Zm).action == Zm.action
        XS = build_XS(2)
        assert dual(XS).rank == 5
        assert dual(dual(XS)) == XS
        assert dual(dual(XS)).labels == XS.labels

    def test_restrict(self):
        XS = build_XS(2)
        G = XS.group
        assert restrict(XS, tuple(range(G.order))).action == XS.action
        triv = restrict(XS, (G.identity,))
        assert triv.group.order == 1
        # restriction to <sigma*tau>: the generator acts by the product of the two matrices
        st_ = next(g for g in range(G.order) if G.element_name(g) == "sigma*tau")
        R = restrict(XS, G.closure([st_]))
        (name, gen), = R.group.generators
        assert R.action[name] == XS.action["sigma"] @ XS.action["tau"]

    def test_invariants_examples(self):
        G = cyclic(2)
        assert invariants_sublattice(character_lattice(G, {"g": -1}), (0, 1)).cols == 0
        assert invariants_sublattice(regular_module(G), (0, 1)) == M([[1], [1]])
        XS = build_XS(2)
        fixed = invariants_sublattice(XS, tuple(range(4)))
        # c and a + tau*a are both fixed: sigma moves a + tau*a by (tau*b - b) + (b - tau*b)
        assert sorted(fixed.columns()) == [(0, 0, 0, 0, 1), (1, 1, 0, 0, 0)]

    def test_direct_sum_and_copies(self):
        G = cyclic(2)
        S = direct_sum(trivial_lattice(G), character_lattice(G, {"g": -1}))
        assert S.rank == 2 and S.action["g"] == M([[1, 0], [0, -1]])
        XS = build_XS(2)
        assert ind_copies(XS, range(4), [4], 1) is XS
        assert ind_copies(XS, range(4), [4], 2).rank == 9
        with pytest.raises(LatticeError):
            ind_copies(XS, range(3), [4], 2)

    def test_map_equivariance_checked(self):
        G = cyclic(2)
        Z, P = trivial_lattice(G), regular_module(G)
        GLatticeMap(Z, P, M([[1], [1]]))
        with pytest.raises(LatticeError):
            GLatticeMap(Z, P, M([[1], [0]]))

    @given(st.integers(0, 10**6))
    def test_random_lattices_round_trip(self, seed):
        rng = random.Random(seed)
        G = SMALL_GROUPS[rng.choice(sorted(SMALL_GROUPS))]()
        X = random_lattice(G, rng)
        assert GLattice.from_json(X.to_json()) == X
        assert dual(dual(X)) == X
        for g in range(G.order):
            assert X.act(g).is_unimodular()

    def test_big_entries_serialize_as_strings(self):
        G = cyclic(2)
        big = 2**60
        X = GLattice(G, 2, {"g": M([[1, big], [0, -1]])})
        data = X.to_json()
        assert data["action"]["g"][0][1] == str(big)
        assert GLattice.from_json(data) == X

    def test_describe_action_uses_labels(self):
        lines = build_XS(2).describe_action("sigma")
        assert lines[0] == "sigma(a) = a - b + tau*b"
        assert lines[2] == "sigma(b) = -b + c"


class TestQuasitrivialCover:
    def _module(self, n, sign, order=2):
        G = cyclic(order)
        return FiniteGModule(G, (n,), {"g": M([[sign]])})

    def test_trivial_action(self):
        c = quasitrivial_cover(self._module(5, 1))
        assert c.P.rank == 1 and c.XT.rank == 1
        assert c.inclusion.matrix == M([[5]])

    def test_sign_mod_two_is_trivial(self):
        c = quasitrivial_cover(self._module(2, -1))
        assert c.P.rank == 1 and c.XT.rank == 1

    def test_inversion_mod_three(self):
        c = quasitrivial_cover(self._module(3, -1))
        assert c.P.rank == 2
        assert c.XT.rank == 2  # a finite-index kernel has full rank

    @pytest.mark.parametrize("n", [3, 4, 5, 6, 8])
    def test_quotient_recovers_module(self, n):
        A = self._module(n, -1)
        c = quasitrivial_cover(A)
        assert cokernel(c.inclusion.matrix) == FiniteAbelianGroup.from_orders(A.invariant_factors)

    def test_two_generator_module(self):
        G = group_from_abelian_invariants([2, 2], ["x", "y"])
        A = FiniteGModule(G, (2, 4), {"x": M([[1, 0], [0, -1]]), "y": M([[1, 2], [0, 1]])})
        c = quasitrivial_cover(A)
        assert cokernel(c.inclusion.matrix) == FiniteAbelianGroup((2, 4))

    def test_ill_defined_action_rejected(self):
        with pytest.raises(LatticeError):
            FiniteGModule(cyclic(2), (2, 3), {"g": M([[1, 1], [0, 1]])})
