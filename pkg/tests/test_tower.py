"""Inverse systems: connecting maps, coherent families, ideals."""

import numpy as np
import pytest

from protower.core_algebra import (
    BlockAlgebra,
    StructuralError,
    TruncationError,
    cstar_norm,
    distance,
    one_sided_hausdorff,
    spectrum,
)
from protower.randomness import random_element, stream
from protower.tower import (
    ConnectingMap,
    CoherentElement,
    Tower,
    check_coherence,
    closed_ideal,
    coherent_from_top,
    diag_sequence_element,
    make_product_tower,
    project,
    scalar_element,
    shift_element,
)


def test_product_tower_levels():
    t = make_product_tower(lambda k: k, 3)
    assert t.level(1).block_sizes == (1,)
    assert t.level(2).block_sizes == (1, 2)
    assert t.level(3).block_sizes == (1, 2, 3)
    assert t.horizon == 3
    # lazy growth past the initial horizon
    assert t.level(5).block_sizes == (1, 2, 3, 4, 5)
    assert t.horizon == 5


def test_constant_commutative_tower():
    t = make_product_tower(lambda k: 1, 2)
    assert t.level(1).block_sizes == (1,)
    assert t.level(2).block_sizes == (1, 1)
    assert t.level(2).is_commutative


def test_degenerate_single_level_tower():
    t = make_product_tower([2], 1, lazy=False)
    assert t.horizon == 1
    assert not t.is_lazy
    with pytest.raises(TruncationError):
        t.level(2)


def test_connecting_map_requires_surjective_form():
    a2 = BlockAlgebra((1, 2))
    a1 = BlockAlgebra((1,))
    with pytest.raises(StructuralError):
        ConnectingMap(a2, a1, (None,))
    # reusing a source block is not surjective either
    b2 = BlockAlgebra((2, 2))
    with pytest.raises(StructuralError):
        ConnectingMap(b2, b2, ((0, np.eye(2)), (0, np.eye(2))))


def test_connecting_map_conjugator_checks():
    a = BlockAlgebra((2,))
    with pytest.raises(StructuralError):
        ConnectingMap(a, a, ((0, 2.0 * np.eye(2)),))
    with pytest.raises(StructuralError):
        ConnectingMap(a, BlockAlgebra((3,)), ((0, np.eye(3)),))


def test_composite_maps_consistent():
    t = make_product_tower(lambda k: k, 5)
    rng = stream(21, "composites")
    direct = t.connecting(1, 4)
    stepwise = t.map(1).compose(t.map(2)).compose(t.map(3))
    for _ in range(50):
        x = random_element(t.level(4), rng)
        assert distance(direct.apply(x), stepwise.apply(x)) <= 1e-12


def test_surjectivity_roundtrip():
    t = make_product_tower(lambda k: k, 4)
    rng = stream(22, "sections")
    for p in range(1, 4):
        cmap = t.map(p)
        for _ in range(34):
            y = random_element(t.level(p), rng)
            x = cmap.section(y)
            assert distance(cmap.apply(x), y) <= 1e-12


def test_scalar_element_projects_to_scalar():
    t = make_product_tower(lambda k: k, 3)
    e = scalar_element(t, 2.5)
    for p in (1, 2, 3):
        assert distance(project(e, p), t.level(p).scalar(2.5)) == 0.0


def test_shift_element_levels():
    t = make_product_tower(lambda k: k, 4)
    e = shift_element(t)
    x4 = project(e, 4)
    assert x4.parent.block_sizes == (1, 2, 3, 4)
    assert np.allclose(x4.blocks[2], np.diag([1.0, 2.0], 1))
    assert np.allclose(x4.blocks[3], np.diag([1.0, 2.0, 3.0], 1))
    # projection consistency: pushing level 4 down gives level 2
    assert distance(t.connecting(2, 4).apply(x4), project(e, 2)) <= 1e-14


def test_projection_consistency_random():
    t = make_product_tower(lambda k: k, 5)
    rng = stream(23, "consistency")
    for _ in range(20):
        e = coherent_from_top(t, random_element(t.level(5), rng), 5)
        for p in range(1, 5):
            for q in range(p, 6):
                pushed = t.connecting(p, q).apply(project(e, q))
                assert distance(pushed, project(e, p)) <= 1e-12


def test_check_coherence_passes_and_reports():
    t = make_product_tower(lambda k: k, 4)
    e = shift_element(t)
    report = check_coherence(e, 4)
    assert report.passed
    assert report.worst <= 1e-14

    corrupted = [project(e, p) for p in range(1, 5)]
    bump = t.level(2).zero()
    bumped = list(corrupted)
    noise = np.zeros((2, 2), dtype=complex)
    noise[0, 0] = 1e-3
    bumped[1] = bumped[1] + t.level(2).element(
        [np.array([[0.0]], dtype=complex), noise])
    bad = CoherentElement(t, levels=bumped)
    report = check_coherence(bad, 4)
    assert not report.passed
    # the perturbed block of level 2 is deleted by the map down to level 1,
    # so the defect shows up against level 3
    assert report.residuals[0] == 0.0
    assert report.residuals[1] == pytest.approx(1e-3, rel=1e-6)


def test_generator_required_beyond_explicit_levels():
    t = make_product_tower(lambda k: k, 3)
    e = coherent_from_top(t, t.level(3).identity(), 3)
    with pytest.raises(TruncationError):
        project(e, 4)


def test_norm_monotone_along_chain():
    t = make_product_tower(lambda k: k, 5)
    rng = stream(24, "monotone")
    for _ in range(20):
        e = coherent_from_top(t, random_element(t.level(5), rng), 5)
        norms = [cstar_norm(project(e, p)) for p in range(1, 6)]
        for lo, hi in zip(norms, norms[1:]):
            assert lo <= hi + 1e-12


def test_spectral_nesting_along_chain():
    t = make_product_tower(lambda k: k, 5)
    rng = stream(25, "nesting")
    for _ in range(20):
        e = coherent_from_top(t, random_element(t.level(5), rng), 5)
        spectra = [spectrum(project(e, p)) for p in range(1, 6)]
        for lo, hi in zip(spectra, spectra[1:]):
            assert one_sided_hausdorff(lo, hi) <= 1e-8


def test_closed_ideal_trivial_selectors():
    t = make_product_tower(lambda k: k, 3).finite_prefix(3)
    dec = closed_ideal(t, [frozenset()] * 3)
    assert dec.ideal is None
    assert dec.quotient is t

    full = [frozenset(range(t.level(p).num_blocks)) for p in range(1, 4)]
    dec = closed_ideal(t, full)
    assert dec.ideal is t
    assert dec.quotient is None


def shifted_chain(levels=5):
    """Product-style tower whose level k holds blocks of sizes 1..k+1.

    Same inverse limit as the plain matrix-product tower, but every level
    has at least two blocks, so a block split leaves no level empty.
    """
    base = make_product_tower(lambda k: k, levels + 1)
    return Tower(
        [base.level(p) for p in range(2, levels + 2)],
        [base.map(p) for p in range(2, levels + 1)],
    )


def test_closed_ideal_split():
    t = shifted_chain(5)
    dec = closed_ideal(t, [frozenset({0})] * 5)
    assert dec.ideal.level(1).block_sizes == (1,)
    assert dec.ideal.level(5).block_sizes == (1,)
    assert not dec.ideal.unital
    assert dec.quotient.level(1).block_sizes == (2,)
    assert dec.quotient.level(5).block_sizes == (2, 3, 4, 5, 6)

    # membership oracle at each level: ker(quotient) = image(inclusion)
    rng = stream(26, "ideal-membership")
    for p in range(1, 6):
        inc = dec.inclusion.level_map(p)
        quo = dec.quotient_map.level_map(p)
        for _ in range(10):
            v = random_element(dec.ideal.level(p), rng)
            image = inc.apply(v)
            assert cstar_norm(quo.apply(image)) <= 1e-13
            # anything killed by the quotient is supported on block 0
            w = random_element(t.level(p), rng)
            killed_blocks = [
                w.blocks[i] * 0 if i != 0 else w.blocks[i]
                for i in range(t.level(p).num_blocks)]
            killed = t.level(p).element(killed_blocks)
            assert cstar_norm(quo.apply(killed)) == 0.0


def test_closed_ideal_incoherent_selector():
    t = shifted_chain(3)
    selector = [frozenset({0}), frozenset({1}), frozenset({0})]
    with pytest.raises(StructuralError) as err:
        closed_ideal(t, selector)
    assert "level 1" in str(err.value)


def test_closed_ideal_rejects_empty_side_level():
    t = make_product_tower(lambda k: k, 3).finite_prefix(3)
    # selecting block 0 empties the quotient at level 1
    with pytest.raises(StructuralError):
        closed_ideal(t, [frozenset({0})] * 3)


def test_diag_sequence_element():
    t = make_product_tower(lambda k: 1, 4)
    e = diag_sequence_element(t, [k / (k + 1) for k in range(1, 5)])
    x = project(e, 4)
    values = [b[0, 0].real for b in x.blocks]
    assert values == pytest.approx([1 / 2, 2 / 3, 3 / 4, 4 / 5])
    assert e.selfadjoint


def test_block_map_matrix_matches_apply():
    t = make_product_tower(lambda k: k, 4)
    rng = stream(27, "matrix-form")
    cmap = t.connecting(2, 4)
    m = cmap.matrix()
    for _ in range(10):
        x = random_element(t.level(4), rng)
        vec = np.concatenate([b.reshape(-1) for b in x.blocks])
        pushed = cmap.apply(x)
        vec_pushed = np.concatenate([b.reshape(-1) for b in pushed.blocks])
        assert np.abs(m @ vec - vec_pushed).max() <= 1e-12
