"""Unitary groups of towers: exponentials, logarithms, factorizations.

Every level algebra is a direct sum of matrix blocks, so every level
unitary group is connected and every coherent unitary is levelwise a
single exponential of a self-adjoint element. Globally the obstruction is
the branch choice: one fixed branch angle gives a coherent logarithm, and
when eigenvalues crowd every usable ray the unitary is split into two
exponential factors through a half-logarithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_algebra import (
    AlgebraElement,
    AlgebraError,
    BranchError,
    ExpI,
    PreconditionError,
    _block_eigenvalues,
    _diagonalize_normal,
    apply_function,
    distance,
    is_selfadjoint,
    ray_distance,
)
from .tower import CoherentElement, TowerHomomorphism, project

__all__ = [
    "ExpFactorization",
    "is_unitary",
    "exp_selfadjoint",
    "unitary_log",
    "identity_component_check",
    "pushforward_exp",
    "single_level_log",
    "largest_gap_branch",
]

DEFAULT_LOG_TOL = 1e-9
DEFAULT_BRANCH_MARGIN = 1e-6


def is_unitary(e: CoherentElement, horizon: int, tol: float = 1e-10) -> bool:
    """Whether both u u* and u* u are the identity at every level.

    A positive answer attaches the norm certificate: unitaries have all
    seminorms equal to 1, hence uniform norm 1.
    """
    for p in range(1, e.max_level(horizon) + 1):
        x = project(e, p)
        one = x.parent.identity()
        if distance(x * x.adjoint(), one) > tol:
            return False
        if distance(x.adjoint() * x, one) > tol:
            return False
    e.unitary = True
    if e.norm_bound is None:
        e.norm_bound = 1.0
        e.norm_reason = "unitary element"
    return True


def exp_selfadjoint(
    a: CoherentElement, t: float = 1.0, tol: float = 1e-10
) -> CoherentElement:
    """The unitary family exp(i*t*a) for self-adjoint a.

    Self-adjointness is validated on every level actually produced; the
    result carries the unitarity certificate and stays coherent because
    the exponential commutes with the connecting maps.
    """

    def gen(p: int) -> AlgebraElement:
        x = project(a, p)
        if not is_selfadjoint(x, tol):
            raise PreconditionError(
                f"level {p} is not self-adjoint within {tol}")
        return apply_function(x, ExpI(t), tol)

    return CoherentElement(
        a.tower,
        generator=gen,
        coherence_tol=a.coherence_tol,
        norm_bound=1.0,
        norm_reason="exponential of a self-adjoint element",
        spectral_bound=1.0,
        spectral_reason="exponential of a self-adjoint element",
        unitary=True,
    )


def _branch_shift(args: np.ndarray, branch_angle: float) -> np.ndarray:
    """Shift raw angles into (branch_angle - 2*pi, branch_angle)."""
    return args - 2 * math.pi * np.ceil(
        (args - branch_angle) / (2 * math.pi))


def single_level_log(
    x: AlgebraElement,
    branch_angle: float,
    tol: float = DEFAULT_LOG_TOL,
    level: int | None = None,
) -> AlgebraElement:
    """Self-adjoint h with exp(i*h) = x for a single unitary element.

    Eigenvalues must keep distance tol from the branch ray and modulus 1
    within 10*tol; violations raise BranchError naming the eigenvalue and
    the level (when given).
    """
    where = f" at level {level}" if level is not None else ""
    blocks = []
    for i, b in enumerate(x.blocks):
        v, d = _diagonalize_normal(b, max(tol, 1e-12), i)
        for lam in d:
            if abs(abs(lam) - 1.0) > 10 * tol:
                raise PreconditionError(
                    f"eigenvalue {lam} of block {i}{where} has modulus "
                    f"{abs(lam):.12f}; not unitary")
            if ray_distance(lam, branch_angle) <= tol:
                raise BranchError(
                    f"eigenvalue {lam} of block {i}{where} is within {tol} "
                    f"of the branch ray at angle {branch_angle:.6f}")
        args = _branch_shift(np.angle(d), branch_angle)
        h = v @ np.diag(args.astype(complex)) @ v.conj().T
        blocks.append(0.5 * (h + h.conj().T))
    return AlgebraElement(x.parent, blocks)


def unitary_log(
    u: CoherentElement,
    branch_angle: float = math.pi,
    tol: float = DEFAULT_LOG_TOL,
    horizon: int | None = None,
) -> CoherentElement:
    """Coherent self-adjoint logarithm of a unitary at a fixed branch.

    One fixed branch angle across all levels keeps the logarithm coherent.
    The reassembly exp(i*log) is verified against u within 10*tol on all
    materialized levels before returning. With the branch at pi, uniform
    distance below 1 from the identity is the classical sufficient
    condition; it is measured and implies the margin check passes.
    """
    top = u.max_level(horizon if horizon is not None else u.tower.horizon)
    inside_unit_ball = False
    if branch_angle == math.pi:
        # sufficient condition: sup ||1 - u|| < 1 keeps all eigenvalue
        # arguments inside (-pi/3, pi/3), far from the ray at pi
        inside_unit_ball = max(
            distance(project(u, p), u.tower.level(p).identity())
            for p in range(1, top + 1)) < 1.0
    levels = []
    for p in range(1, top + 1):
        try:
            levels.append(
                single_level_log(project(u, p), branch_angle, tol, level=p))
        except BranchError:
            if inside_unit_ball:
                raise AlgebraError(
                    "distance to the identity is below 1 yet an eigenvalue "
                    f"reached the branch ray at level {p}; the input is not "
                    "unitary within tolerance")
            raise
    log = CoherentElement(
        u.tower,
        levels=levels,
        coherence_tol=u.coherence_tol,
        selfadjoint=True,
        norm_bound=max(abs(branch_angle - 2 * math.pi), abs(branch_angle)),
        norm_reason="arguments lie in the branch window",
        spectral_bound=max(abs(branch_angle - 2 * math.pi), abs(branch_angle)),
        spectral_reason="arguments lie in the branch window",
    )
    worst = 0.0
    back = exp_selfadjoint(log, 1.0)
    for p in range(1, top + 1):
        worst = max(worst, distance(project(back, p), project(u, p)))
    if worst > 10 * tol:
        raise AlgebraError(
            f"logarithm reassembly residual {worst:.3e} exceeds {10 * tol:.3e}")
    return log


def largest_gap_branch(args) -> tuple[float, float]:
    """Midpoint of the largest circular gap of angles, and half that gap.

    The returned angle is the ray farthest from the given spectrum
    arguments, which is the canonical deterministic branch choice; the
    second component is the margin it achieves.
    """
    arr = np.sort(np.mod(np.asarray(args, dtype=float), 2 * math.pi))
    if arr.size == 0:
        return math.pi, math.pi
    gaps = np.diff(arr, append=arr[0] + 2 * math.pi)
    k = int(np.argmax(gaps))
    mid = arr[k] + gaps[k] / 2
    mid = math.remainder(mid, 2 * math.pi)
    return float(mid), float(gaps[k] / 2)


@dataclass
class ExpFactorization:
    """A product of exponentials of self-adjoint elements hitting a target.

    ``factors`` multiply left to right: exp(i*a1) * exp(i*a2) * ... The
    reassembly residual over all levels up to the horizon is recorded;
    ``valid`` states it met the requested tolerance. ``coherent`` records
    whether all factors were produced with one global branch per factor,
    in which case the factors themselves satisfy the coherence relations.
    """

    target: CoherentElement
    factors: tuple[CoherentElement, ...]
    residual: float
    horizon: int
    tol: float
    branch_angles: tuple[float, ...]
    coherent: bool = True

    @property
    def valid(self) -> bool:
        return self.residual <= self.tol

    def product(self) -> CoherentElement:
        """The coherent family prod_j exp(i * factors[j])."""
        factors = self.factors
        tower = self.target.tower

        def gen(p: int) -> AlgebraElement:
            out = tower.level(p).identity()
            for a in factors:
                out = out * apply_function(project(a, p), ExpI(1.0))
            return out

        return CoherentElement(
            tower, generator=gen, unitary=True, norm_bound=1.0,
            norm_reason="product of exponentials of self-adjoint elements")


def _reassembly_residual(
    fact_factors, u: CoherentElement, horizon: int
) -> float:
    worst = 0.0
    for p in range(1, horizon + 1):
        out = u.tower.level(p).identity()
        for a in fact_factors:
            out = out * apply_function(project(a, p), ExpI(1.0))
        worst = max(worst, distance(out, project(u, p)))
    return worst


def _level_args(u: CoherentElement, horizon: int) -> np.ndarray:
    args = []
    for p in range(1, horizon + 1):
        x = project(u, p)
        for i, b in enumerate(x.blocks):
            args.append(np.angle(_block_eigenvalues(b, i)))
    return np.concatenate(args)


def identity_component_check(
    u: CoherentElement,
    horizon: int,
    tol: float = DEFAULT_LOG_TOL,
    branch_margin: float = DEFAULT_BRANCH_MARGIN,
) -> ExpFactorization:
    """Factor a coherent unitary into exponentials of self-adjoint elements.

    Strategy: the identity needs no factors; a single logarithm works
    whenever some global branch ray (pi first, then the largest spectral
    gap) keeps margin ``branch_margin`` from every level eigenvalue; when
    eigenvalues crowd all rays, the unitary is split as
    u = (u * exp(-i*a1)) * exp(i*a1) with a1 half of a best-effort
    logarithm, which compresses the spectrum into a half circle and makes
    the second logarithm safe.
    """
    top = u.max_level(horizon)
    ident_dist = max(
        distance(project(u, p), u.tower.level(p).identity())
        for p in range(1, top + 1))
    if ident_dist <= tol:
        return ExpFactorization(
            target=u, factors=(), residual=ident_dist, horizon=top, tol=tol,
            branch_angles=(), coherent=True)

    args = _level_args(u, top)
    candidates = [math.pi]
    gap_mid, gap_margin = largest_gap_branch(args)
    candidates.append(gap_mid)
    for theta in candidates:
        margin = min(
            ray_distance(complex(math.cos(t), math.sin(t)), theta)
            for t in args)
        if margin >= branch_margin:
            log = unitary_log(u, theta, tol=tol, horizon=top)
            residual = _reassembly_residual((log,), u, top)
            if residual <= tol:
                return ExpFactorization(
                    target=u, factors=(log,), residual=residual, horizon=top,
                    tol=tol, branch_angles=(theta,), coherent=True)

    # crowded spectrum: split through a half-logarithm at the widest gap
    if gap_margin <= 10 * np.finfo(float).eps:
        raise AlgebraError(
            "no branch ray separates the spectrum; eigenvalue arguments: "
            f"{np.sort(args)}")
    half_tol = min(tol, gap_margin / 2)
    best_effort = unitary_log(u, gap_mid, tol=half_tol, horizon=top)
    half = CoherentElement(
        u.tower,
        levels=[0.5 * project(best_effort, p) for p in range(1, top + 1)],
        coherence_tol=u.coherence_tol,
        selfadjoint=True)
    unwind = exp_selfadjoint(half, -1.0)
    w_levels = [
        project(u, p) * project(unwind, p) for p in range(1, top + 1)]
    w = CoherentElement(u.tower, levels=w_levels, unitary=True, norm_bound=1.0,
                        norm_reason="product of unitaries")
    w_branch, w_margin = largest_gap_branch(_level_args(w, top))
    if w_margin < branch_margin:
        raise AlgebraError(
            "splitting failed to open a branch gap; eigenvalue arguments "
            f"of the remainder: {np.sort(_level_args(w, top))}")
    log_w = unitary_log(w, w_branch, tol=tol, horizon=top)
    factors = (log_w, half)
    residual = _reassembly_residual(factors, u, top)
    if residual > tol:
        raise AlgebraError(
            f"two-factor reassembly residual {residual:.3e} exceeds {tol:.3e};"
            f" eigenvalue arguments: {np.sort(args)}")
    return ExpFactorization(
        target=u, factors=factors, residual=residual, horizon=top, tol=tol,
        branch_angles=(w_branch, gap_mid), coherent=True)


def pushforward_exp(
    phi: TowerHomomorphism,
    fact: ExpFactorization,
) -> ExpFactorization:
    """Image of a factorization under a levelwise surjective homomorphism.

    Homomorphisms commute with the continuous calculus of normal elements,
    so phi(exp(i*a)) = exp(i*phi(a)) and the image factors are the images
    of the factors; the reassembly residual cannot grow beyond rounding
    because every level map is a contraction.
    """
    if not phi.is_levelwise_surjective(fact.horizon):
        raise PreconditionError(
            "pushing a factorization forward needs levelwise surjectivity")
    image_target = phi.apply(
        fact.target, unitary=True, norm_bound=1.0,
        norm_reason="surjective image of a unitary")
    image_factors = tuple(
        phi.apply(a, selfadjoint=True) for a in fact.factors)
    residual = _reassembly_residual(image_factors, image_target, fact.horizon)
    return ExpFactorization(
        target=image_target,
        factors=image_factors,
        residual=residual,
        horizon=fact.horizon,
        tol=fact.tol,
        branch_angles=fact.branch_angles,
        coherent=fact.coherent,
    )
