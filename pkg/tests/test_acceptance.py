"""The acceptance gate: every criterion at full scale, one test each.

Each test prints its own pass/fail line; `stonesheaf verify-all` runs the
same battery from the command line.  Tolerances are zero everywhere: the
arithmetic is exact rational arithmetic.
"""


from stonesheaf.verify import (check_adelic_exactness, check_catalog,
                               check_degeneration, check_dimension_one,
                               check_equivariance_suite, check_reconstruction,
                               check_ring_sections, check_stalkwise_acyclicity)


def _report(name, fn, **kwargs):
    passed, details = fn(**kwargs)
    print(f"[{'PASS' if passed else 'FAIL'}] {name}: {details}")
    assert passed, details


def test_criterion_1_adelic_exactness():
    _report("adelic exactness, ranks 0-3, 200 cocycles per degree",
            check_adelic_exactness, seed=1, samples=200)


def test_criterion_2_ring_section_agreement():
    _report("sections of the ring sheaves equal the splicing rings",
            check_ring_sections, seed=2)


def test_criterion_3_stalkwise_acyclicity():
    _report("stalk degeneracy pattern and exact stalk complexes",
            check_stalkwise_acyclicity, seed=3, points_per_space=50)


def test_criterion_4_reconstruction():
    _report("reconstruction unit/counit isomorphisms, 100 per space",
            check_reconstruction, seed=4, samples=100)


def test_criterion_5_dimension_one():
    _report("dimension-one suite: pullback/completion, support, splitness, Ext",
            check_dimension_one, seed=5, samples=100)


def test_criterion_6_equivariance():
    _report("averaging (1000 stalk maps), dihedral-block witnesses, generators",
            check_equivariance_suite, seed=6, stalk_samples=1000,
            sheaf_samples=100, cocycles=100)


def test_criterion_7_catalog():
    _report("lattice counts to 50, Weyl orders, 100 functorial chains",
            check_catalog, seed=7, chains=100)


def test_criterion_8_degeneration():
    _report("trivial-group degeneration is bit-for-bit",
            check_degeneration, seed=8, samples=25)
