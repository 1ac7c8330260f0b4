"""Coreflector mechanics: bounded parts, induced maps, exactness."""

import pytest

from protower.bounded_functor import (
    apply_functor,
    bounded_part,
    check_exactness,
    kernel_quotient_check,
    quotient_iso_check,
)
from protower.calculus import lift_function, seminorm, uniform_norm
from protower.core_algebra import (
    ExpI,
    PreconditionError,
    cstar_norm,
    distance,
)
from protower.randomness import random_element, random_selfadjoint, stream
from protower.tower import (
    BlockMap,
    Tower,
    TowerHomomorphism,
    closed_ideal,
    coherent_from_top,
    make_product_tower,
    project,
    scalar_element,
    shift_element,
)


def shifted_chain(levels=5, start=2):
    """Finite product-style chain built from base levels start..start+levels-1."""
    base = make_product_tower(lambda k: k, start + levels)
    return Tower(
        [base.level(p) for p in range(start, start + levels)],
        [base.map(p) for p in range(start, start + levels - 1)],
    )


def ideal_sequence(levels=5):
    t = shifted_chain(levels)
    dec = closed_ideal(t, [frozenset({0})] * levels)
    return t, dec


def test_bounded_part_unitary_scalar_shift():
    t = make_product_tower(lambda k: k, 4)
    rng = stream(51, "bounded-part")
    h = coherent_from_top(
        t, random_selfadjoint(t.level(4), rng), 4, selfadjoint=True)
    u = lift_function(h, ExpI(1.0))
    tagged = bounded_part(u, horizon=4)
    assert tagged is not None
    assert tagged.norm_bound == pytest.approx(1.0)

    zero = bounded_part(scalar_element(t, 0.0), horizon=4)
    assert zero is not None and zero.norm_bound == 0.0

    assert bounded_part(shift_element(t), horizon=40, threshold=20.0) is None


def test_apply_functor_identity():
    from protower.tower import identity_homomorphism

    t = make_product_tower(lambda k: k, 4, lazy=False)
    rng = stream(52, "functor-id")
    e = coherent_from_top(t, random_element(t.level(4), rng), 4)
    phi = identity_homomorphism(t, 4)
    image = apply_functor(phi, e, horizon=4)
    for p in range(1, 5):
        assert distance(project(image, p), project(e, p)) <= 1e-13


def test_apply_functor_projection_to_first_level():
    t = make_product_tower(lambda k: k, 4, lazy=False)
    single = Tower([t.level(1)], [])
    from protower.tower import identity_map

    phi = TowerHomomorphism(
        t, single, [identity_map(t.level(1))], level_index=lambda p: 1)
    e = shift_element(t)  # bounded here because the tower is finite
    image = apply_functor(phi, e, horizon=4)
    # the first block of the shift family is the 1x1 zero matrix
    assert cstar_norm(project(image, 1)) == 0.0


def test_apply_functor_rejects_unknown_verdict():
    t = make_product_tower(lambda k: k, 4)  # lazy: no exhaustion certificate
    rng = stream(53, "functor-reject")
    e = coherent_from_top(t, random_element(t.level(4), rng), 4)
    from protower.tower import identity_homomorphism

    with pytest.raises(PreconditionError):
        apply_functor(identity_homomorphism(t, 4), e, horizon=4)


def test_functor_contractive_and_functorial():
    t = shifted_chain(4, start=3)  # levels (1,2,3) .. (1,..,6)
    dec = closed_ideal(t, [frozenset({0})] * 4)
    rng = stream(54, "functorial")
    beta = dec.quotient_map
    for _ in range(20):
        e = coherent_from_top(t, random_element(t.level(4), rng), 4)
        image = apply_functor(beta, e, horizon=4)
        assert image.norm_bound <= uniform_norm(e, 4).bound + 1e-10
        observed = max(seminorm(image, p) for p in range(1, 5))
        assert observed <= uniform_norm(e, 4).bound + 1e-10

    # composite of two block deletions equals the direct deletion
    inner = dec.quotient_map
    dec2 = closed_ideal(dec.quotient, [frozenset({0})] * 4)
    outer = dec2.quotient_map
    combined = outer.compose(inner)
    for _ in range(10):
        e = coherent_from_top(t, random_element(t.level(4), rng), 4)
        one = apply_functor(combined, e, horizon=4)
        two = apply_functor(outer, apply_functor(inner, e, horizon=4), horizon=4)
        for p in range(1, 5):
            assert distance(project(one, p), project(two, p)) <= 1e-12


def test_check_exactness_on_ideal_sequence():
    t, dec = ideal_sequence(5)
    rng = stream(55, "exactness")
    report = check_exactness(
        dec.inclusion, dec.quotient_map, probes=8, horizon=5, tol=1e-10,
        rng=rng)
    assert report.composite_residual <= 1e-12
    assert report.verdict_original
    assert report.verdict_bounded
    assert max(report.level_residuals) <= 1e-10
    for trace in report.traces:
        for n, value in enumerate(trace, start=1):
            assert value <= 2.0 / n**2 + 1e-9
        # O(1/n^2) decay: the tail is much smaller than the head
        assert trace[-1] <= trace[0] / 100 + 1e-12


def test_check_exactness_identity_zero_sequence():
    from protower.tower import identity_homomorphism

    t = shifted_chain(3)
    alpha = identity_homomorphism(t, 3)
    zero_maps = [
        BlockMap(t.level(p), t.level(p), tuple([None] * t.level(p).num_blocks))
        for p in range(1, 4)]
    beta = TowerHomomorphism(t, t, zero_maps)
    rng = stream(56, "identity-zero")
    report = check_exactness(alpha, beta, probes=5, horizon=3, tol=1e-10, rng=rng)
    assert report.verdict_original and report.verdict_bounded
    for trace in report.traces:
        assert trace[-1] <= 2.0 / 50**2 + 1e-9  # recovered at rate 1/n^2


def test_check_exactness_rejects_nonzero_composite():
    from protower.tower import identity_homomorphism

    t = shifted_chain(3)
    alpha = identity_homomorphism(t, 3)
    beta = identity_homomorphism(t, 3)
    with pytest.raises(PreconditionError):
        check_exactness(alpha, beta, probes=1, horizon=3, tol=1e-10,
                        rng=stream(57, "bad"))


def test_exactness_failure_shows_proper_inclusion():
    # alpha hits only part of the kernel of beta: the report must show
    # a strictly smaller image at the top level and fail both verdicts.
    t = shifted_chain(4)
    dec = closed_ideal(t, [frozenset({0})] * 4)
    beta = dec.quotient_map

    single = dec.ideal  # blocks of size 1 at every level
    from protower.tower import identity_map

    def alpha_maps(p: int) -> BlockMap:
        alg = t.level(p)
        routes = [None] * alg.num_blocks
        return BlockMap(single.level(p), alg, tuple(routes))

    alpha = TowerHomomorphism(single, t, alpha_maps)
    rng = stream(58, "remark-pattern")
    report = check_exactness(alpha, beta, probes=4, horizon=4, tol=1e-10, rng=rng)
    assert not report.verdict_original
    assert not report.verdict_bounded
    assert report.image_dims[-1] < report.kernel_dims[-1]


def test_discontinuous_alpha_uses_rational_route():
    t, dec = ideal_sequence(4)
    alpha = TowerHomomorphism(
        dec.ideal, t, lambda p: dec.inclusion.level_map(p), continuous=False)
    rng = stream(59, "discontinuous")
    report = check_exactness(
        alpha, dec.quotient_map, probes=4, horizon=4, tol=1e-10, rng=rng)
    assert report.verdict_original
    for trace in report.traces:
        for n, value in enumerate(trace, start=1):
            assert value <= 2.0 / n**2 + 1e-9


def test_quotient_iso_check_block_ideal():
    t, _ = ideal_sequence(4)
    rng = stream(60, "quotient-iso")
    report = quotient_iso_check(
        t, [frozenset({0})] * 4, horizon=4, tol=1e-10, rng=rng, probes=40)
    assert report.passed
    assert report.max_residual <= 1e-10


def test_quotient_iso_check_trivial_ideal():
    # dividing by the zero ideal changes nothing: exact zeros
    t, _ = ideal_sequence(4)
    report = quotient_iso_check(
        t, [frozenset()] * 4, horizon=4, tol=1e-10,
        rng=stream(66, "trivial-ideal"), probes=10)
    assert report.passed
    assert report.max_residual == 0.0


def test_kernel_quotient_check_levels():
    t = make_product_tower(lambda k: k, 5, lazy=False)
    rng = stream(61, "kernel-quotient")
    for p in (1, 2, 3):
        report = kernel_quotient_check(
            t, p, horizon=5, tol=1e-10, rng=rng, probes=40)
        assert report.passed, f"p={p}: {report.max_residual}"


def test_coreflection_universal_property():
    # a homomorphism from a single-level tower factors through the
    # bounded part: phi equals inclusion-after-induced-map on probes
    t = make_product_tower(lambda k: k, 4, lazy=False)
    top = t.level(4)
    single = Tower([top], [])
    phi = TowerHomomorphism(
        single, t, lambda p: t.connecting(p, 4), level_index=lambda p: 1)
    rng = stream(62, "coreflection")
    for _ in range(100):
        b = random_element(top, rng)
        eb = coherent_from_top(single, b, 1)
        image = apply_functor(phi, eb, horizon=4)
        # factorization through the bounded part: the same levelwise data
        direct = coherent_from_top(t, b, 4)
        for p in range(1, 5):
            assert distance(project(image, p), project(direct, p)) <= 1e-12


def test_algebraic_independence_of_chain_refinement():
    # the same per-level algebras along a thinner cofinal chain give the
    # same uniform norm on shared elements
    base = make_product_tower(lambda k: k, 6, lazy=False)
    thin = Tower(
        [base.level(2), base.level(4), base.level(6)],
        [base.connecting(2, 4), base.connecting(4, 6)],
    )
    rng = stream(63, "refinement")
    for _ in range(20):
        top = random_element(base.level(6), rng)
        full = coherent_from_top(base, top, 6)
        sparse = coherent_from_top(thin, top, 3)
        v1 = uniform_norm(full, horizon=6)
        v2 = uniform_norm(sparse, horizon=3)
        assert v1.is_bounded and v2.is_bounded
        assert abs(v1.bound - v2.bound) <= 1e-10


def test_intersection_law_for_block_subtower():
    # an element of the ideal is ideal-bounded iff ambient-bounded, same M
    t, dec = ideal_sequence(4)
    rng = stream(64, "intersection")
    for _ in range(20):
        inner = coherent_from_top(
            dec.ideal, random_element(dec.ideal.level(4), rng), 4)
        outer = dec.inclusion.apply(inner)
        vi = uniform_norm(inner, horizon=4)
        vo = uniform_norm(outer, horizon=4)
        assert vi.is_bounded and vo.is_bounded
        assert abs(vi.bound - vo.bound) <= 1e-10
