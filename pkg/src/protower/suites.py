"""Bundled verification suites: worked examples and invariant sweeps.

Each function returns check records for the report stream. The same
functions back the command line's `paper-examples` and `selftest`
commands and the acceptance test module, so the pass/fail logic lives in
exactly one place.
"""

from __future__ import annotations

import numpy as np

from .bounded_functor import check_exactness, kernel_quotient_check, quotient_iso_check
from .calculus import (
    is_spectrally_bounded,
    pro_spectrum,
    seminorm,
    uniform_norm,
)
from .core_algebra import (
    Polynomial,
    cstar_norm,
    hausdorff_distance,
    one_sided_hausdorff,
    spectral_radius,
    spectrum,
)
from .gelfand import duality_roundtrip
from .randomness import (
    random_element,
    random_normal,
    random_unitary,
    random_unitary_near_identity,
    stream,
)
from .report import CheckRecord
from .tower import closed_ideal, coherent_from_top, make_product_tower, project
from .unitary import (
    identity_component_check,
    largest_gap_branch,
    single_level_log,
)

__all__ = [
    "shift_example_records",
    "exactness_records",
    "quotient_records",
    "gelfand_records",
    "unitary_suite_records",
    "core_invariant_records",
    "paper_example_records",
    "selftest_records",
]


def shift_example_records(spec, seed: int) -> list[CheckRecord]:
    """The quasinilpotent shift: zero spectrum but unbounded norms."""
    shift = spec.element("shift")
    records = []

    report = pro_spectrum(shift, horizon=200)
    spectrum_ok = (
        len(report.points) == 1
        and abs(report.points[0]) <= 1e-10
        and report.radius <= 1e-10)
    records.append(CheckRecord(
        "shift-spectrum-zero", "quasinilpotent-shift", spectrum_ok,
        {"points": list(report.points), "radius": report.radius,
         "horizon": report.horizon}))

    verdict = uniform_norm(shift, horizon=200, divergence_threshold=100.0)
    seminorm_ok = all(
        abs(seminorm(shift, n + 1) - n) <= 1e-10 for n in (1, 5, 25))
    witness_ok = (
        verdict.is_unbounded
        and abs(verdict.witness_value - (verdict.witness_level - 1)) <= 1e-10)
    records.append(CheckRecord(
        "shift-unbounded-witness", "quasinilpotent-shift",
        witness_ok and seminorm_ok,
        {"witness_level": verdict.witness_level,
         "witness_value": verdict.witness_value,
         "seminorm_identity_sampled": seminorm_ok}))

    spectral = is_spectrally_bounded(shift, horizon=200)
    records.append(CheckRecord(
        "shift-spectrally-bounded-but-not-bounded", "quasinilpotent-shift",
        spectral.is_bounded and spectral.bound == 0.0 and verdict.is_unbounded,
        {"spectral_bound": spectral.bound,
         "spectral_certificate": spectral.certificate,
         "norm_status": verdict.status}))
    return records


def exactness_records(spec, seed: int, probes: int = 20) -> list[CheckRecord]:
    """Block-ideal short exact sequence and the squash approximation trace."""
    tower = spec.tower("wide-product")
    dec = closed_ideal(tower, [frozenset({0})] * tower.horizon)
    rng = stream(seed, "exactness")
    report = check_exactness(
        dec.inclusion, dec.quotient_map, probes=probes,
        horizon=tower.horizon, tol=1e-10, rng=rng)
    records = [CheckRecord(
        "ideal-sequence-exact", "block-ideal-exactness",
        report.verdict_original and report.verdict_bounded,
        {"composite_residual": report.composite_residual,
         "level_residuals": list(report.level_residuals),
         "kernel_dims": list(report.kernel_dims),
         "image_dims": list(report.image_dims),
         "verdict_original": report.verdict_original,
         "verdict_bounded": report.verdict_bounded})]

    trace_ok = bool(report.traces)
    worst_margin = 0.0
    for trace in report.traces:
        for n, value in enumerate(trace, start=1):
            bound = 2.0 / n**2 + 1e-9
            worst_margin = max(worst_margin, value - bound)
            if value > bound:
                trace_ok = False
    head = [list(t[:5]) for t in report.traces[:3]]
    records.append(CheckRecord(
        "squash-approximation-trace", "squash-convergence", trace_ok,
        {"probes": len(report.traces), "trace_length":
            len(report.traces[0]) if report.traces else 0,
         "worst_margin_over_bound": worst_margin,
         "leading_trace_values": head}))
    return records


def quotient_records(spec, seed: int) -> list[CheckRecord]:
    """Quotient isomorphisms: by a block ideal and by seminorm kernels."""
    tower = spec.tower("wide-product")
    rng = stream(seed, "quotient-iso")
    report = quotient_iso_check(
        tower, [frozenset({0})] * tower.horizon, horizon=tower.horizon,
        tol=1e-10, rng=rng, probes=50)
    records = [CheckRecord(
        "block-ideal-quotient-iso", "quotient-isomorphism", report.passed,
        {"max_residual": report.max_residual,
         "hom_residual": report.hom_residual})]
    product = spec.tower("matrix-product")
    product.ensure(5)
    for p in (1, 2, 3):
        rep = kernel_quotient_check(
            product, p, horizon=5, tol=1e-10,
            rng=stream(seed, f"kernel-quotient-{p}"), probes=50)
        records.append(CheckRecord(
            f"seminorm-kernel-quotient-p{p}", "quotient-isomorphism",
            rep.passed,
            {"level": p, "max_residual": rep.max_residual}))
    return records


def gelfand_records(spec, seed: int, probes: int = 100) -> list[CheckRecord]:
    """Both duality round trips plus the evaluation seminorm identity."""
    space = spec.space("five-chain")
    rng = stream(seed, "gelfand-space")
    rep_space = duality_roundtrip(space, space.horizon, 1e-12, rng, probes)
    records = [CheckRecord(
        "covered-space-roundtrip", "five-point-duality", rep_space.passed,
        {"bijection_ok": rep_space.bijection_ok,
         "birth_levels_ok": rep_space.birth_levels_ok,
         "family_ok": rep_space.family_ok,
         "max_residual": rep_space.max_residual})]

    tower = spec.tower("flat-five")
    tower.ensure(5)
    rep_tower = duality_roundtrip(
        tower, 5, 1e-12, stream(seed, "gelfand-tower"), probes)
    records.append(CheckRecord(
        "commutative-tower-roundtrip", "five-point-duality", rep_tower.passed,
        {"max_residual": rep_tower.max_residual}))

    from .gelfand import evaluation_iso

    rng = stream(seed, "gelfand-seminorm")
    worst = 0.0
    for _ in range(probes):
        e = coherent_from_top(tower, random_element(tower.level(5), rng), 5)
        ev = evaluation_iso(tower, e, 5)
        for p in range(1, 6):
            worst = max(worst, abs(
                seminorm(e, p) - max(abs(v) for v in ev.restriction(p))))
    records.append(CheckRecord(
        "evaluation-seminorm-identity", "five-point-duality", worst <= 1e-12,
        {"max_residual": worst, "probes": probes}))
    return records


def unitary_suite_records(seed: int, count: int = 100) -> list[CheckRecord]:
    """Exponential factorizations near the identity and in general."""
    tower = make_product_tower(lambda k: k, 4, lazy=False)
    top = tower.level(4)
    records = []

    rng = stream(seed, "unitary-near-identity")
    near_ok = True
    worst_residual = 0.0
    for _ in range(count):
        u = coherent_from_top(
            tower, random_unitary_near_identity(top, rng, 0.99), 4,
            unitary=True)
        fact = identity_component_check(u, horizon=4, tol=1e-9)
        worst_residual = max(worst_residual, fact.residual)
        if len(fact.factors) != 1 or fact.residual > 1e-9:
            near_ok = False
    records.append(CheckRecord(
        "near-identity-single-exponential", "unitary-clopen-ball", near_ok,
        {"count": count, "worst_residual": worst_residual}))

    rng = stream(seed, "unitary-arbitrary")
    general_ok = True
    norm_ok = True
    worst_residual = 0.0
    worst_norm_dev = 0.0
    for _ in range(count):
        u = coherent_from_top(tower, random_unitary(top, rng), 4, unitary=True)
        for p in range(1, 5):
            x = project(u, p)
            args = np.angle(np.concatenate(
                [np.linalg.eigvals(b) for b in x.blocks]))
            branch, _ = largest_gap_branch(args)
            h = single_level_log(x, branch, tol=1e-9, level=p)
            from .core_algebra import ExpI, apply_function, distance

            res = distance(apply_function(h, ExpI(1.0)), x)
            worst_residual = max(worst_residual, res)
            if res > 1e-9:
                general_ok = False
            dev = abs(seminorm(u, p) - 1.0)
            worst_norm_dev = max(worst_norm_dev, dev)
            if dev > 1e-10:
                norm_ok = False
        fact = identity_component_check(u, horizon=4, tol=1e-9)
        if not fact.valid:
            general_ok = False
    records.append(CheckRecord(
        "levelwise-exponential-factorization", "unitary-levelwise-density",
        general_ok,
        {"count": count, "worst_residual": worst_residual}))
    records.append(CheckRecord(
        "unitary-uniform-norm-one", "unitary-norm", norm_ok,
        {"count": count, "worst_deviation": worst_norm_dev}))
    return records


def core_invariant_records(seed: int, instances: int = 200) -> list[CheckRecord]:
    """Algebraic invariants of the kernel on seeded random input."""
    from .core_algebra import BlockAlgebra, apply_function

    alg = BlockAlgebra((1, 2, 3))
    records = []

    def sweep(name, label, check):
        rng = stream(seed, label)
        failures = 0
        worst = 0.0
        for _ in range(instances):
            margin = check(rng)
            worst = max(worst, margin)
            if margin > 0:
                failures += 1
        records.append(CheckRecord(
            name, "core-invariants", failures == 0,
            {"instances": instances, "failures": failures,
             "worst_margin": worst}))

    def cstar_identity(rng):
        x = random_element(alg, rng)
        n = cstar_norm(x)
        return abs(cstar_norm(x.adjoint() * x) - n * n) - 1e-10 * n * n

    def submultiplicative(rng):
        x, y = random_element(alg, rng), random_element(alg, rng)
        return cstar_norm(x * y) - cstar_norm(x) * cstar_norm(y) - 1e-10

    def involution_isometry(rng):
        x = random_element(alg, rng)
        return abs(cstar_norm(x.adjoint()) - cstar_norm(x)) - 1e-12

    def spectral_mapping(rng):
        x = random_normal(alg, rng)
        f = Polynomial.in_z(rng.uniform(-1, 1, 4) + 1j * rng.uniform(-1, 1, 4))
        lhs = spectrum(apply_function(x, f))
        rhs = np.asarray(f(spectrum(x)))
        return hausdorff_distance(lhs, rhs) - 1e-8

    def normal_norm_radius(rng):
        x = random_normal(alg, rng)
        return abs(cstar_norm(x) - spectral_radius(x)) - 1e-10

    sweep("cstar-identity", "inv-cstar", cstar_identity)
    sweep("submultiplicativity", "inv-submult", submultiplicative)
    sweep("involution-isometry", "inv-isometry", involution_isometry)
    sweep("spectral-mapping", "inv-specmap", spectral_mapping)
    sweep("normal-norm-equals-radius", "inv-radius", normal_norm_radius)

    tower = make_product_tower(lambda k: k, 5, lazy=False)
    rng = stream(seed, "inv-monotone")
    mono_fail = 0
    nest_fail = 0
    for _ in range(instances):
        e = coherent_from_top(tower, random_element(tower.level(5), rng), 5)
        norms = [seminorm(e, p) for p in range(1, 6)]
        if any(lo > hi + 1e-12 for lo, hi in zip(norms, norms[1:])):
            mono_fail += 1
        spectra = [spectrum(project(e, p)) for p in range(1, 6)]
        if any(
            one_sided_hausdorff(lo, hi) > 1e-8
            for lo, hi in zip(spectra, spectra[1:])
        ):
            nest_fail += 1
    records.append(CheckRecord(
        "seminorm-monotonicity", "core-invariants", mono_fail == 0,
        {"instances": instances, "failures": mono_fail}))
    records.append(CheckRecord(
        "spectral-nesting", "core-invariants", nest_fail == 0,
        {"instances": instances, "failures": nest_fail}))
    return records


def paper_example_records(spec, seed: int) -> list[CheckRecord]:
    """The worked-example reproduction bundle."""
    records = []
    records += shift_example_records(spec, seed)
    records += exactness_records(spec, seed)
    records += quotient_records(spec, seed)
    records += gelfand_records(spec, seed)
    return records


def selftest_records(spec, seed: int) -> list[CheckRecord]:
    """Invariant sweeps plus the unitary suite."""
    records = core_invariant_records(seed)
    records += unitary_suite_records(seed)
    return records
