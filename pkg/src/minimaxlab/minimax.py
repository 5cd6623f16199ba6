"""Level estimators, bound assembly, scenario verdicts, and
bump-escape diagnostics.

Only bounds are ever reported for the second level: the lower bound comes
from the balanced-point mechanism and the deviation bound, the upper bound
from the best two-bump path over a translation sweep. Exact minimax values
are never claimed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import ProblemSpec, build_grid, dual_norm_W
from .energy import (energy_J, euler_lagrange_residual, manifold_gradient,
                     mass_I)
from .field import GridFunction, lp_normalize, split_signs
from .groundstate import RadialProfile, profile_on_grid
from .pathlab import PathError, SampledPath, path_max_J, translated_bump_path


def lambda_sharp(l1: float, l1inf: float, p: float) -> float:
    """Compactness threshold: (l1^q + l1inf^q)^(1/q) when l1 > 0, else l1inf."""
    if l1inf <= 0:
        raise ValueError("l1inf must be positive")
    if l1 <= 0:
        return l1inf
    q = p / (p - 2.0)
    return (l1 ** q + l1inf ** q) ** (1.0 / q)


def multiplicity_floor(c: float, l1: float, l1inf: float, p: float,
                       t1_zero: bool, m_cap: int = 64) -> int:
    """Largest bump count m consistent with a critical sequence at level c.

    Escape to m >= 2 bumps requires c strictly above the m-bump floor; m = 1
    is always allowed.
    """
    if l1inf <= 0:
        raise ValueError("l1inf must be positive")
    q = p / (p - 2.0)
    sigma = 1.0 / q

    def floor_level(m: int) -> float:
        if t1_zero or l1 <= 0:
            return (m - 1) ** sigma * l1inf
        return (l1 ** q + (m - 1) * l1inf ** q) ** sigma

    m = 1
    while m < m_cap and c > floor_level(m + 1):
        m += 1
    return m


@dataclass
class Lambda2Bounds:
    lower: float
    upper: float
    witness_y: float
    lam_sharp: float
    lam2inf_target: float
    w_dual_norm: float
    small_well_condition: bool
    sweep: list[dict] = field(default_factory=list)
    crossing_flagged: bool = False

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "witness_y": self.witness_y,
            "lam_sharp": self.lam_sharp,
            "lam2inf_target": self.lam2inf_target,
            "w_dual_norm": self.w_dual_norm,
            "small_well_condition": self.small_well_condition,
            "sweep": self.sweep,
            "crossing_flagged": self.crossing_flagged,
        }


def lambda2_bounds(spec: ProblemSpec, w1: GridFunction, l1: float,
                   winf_profile: RadialProfile, l1inf: float,
                   y_sweep=(4.0, 6.0, 8.0, 10.0, 12.0),
                   samples: int = 512) -> Lambda2Bounds:
    """Assemble the certified interval for the second level.

    Lower bound: balanced-point mechanism (2^sigma l1 when l1 > 0) and, when
    the dual-norm condition applies, 2^sigma l1inf - |W|_q. Upper bound: best
    two-bump path max over lattice translations of the autonomous ground
    state along the first axis.
    """
    grid = w1.grid
    sigma = spec.sigma
    wnorm = dual_norm_W(spec, grid)
    cond = l1 > 0 and wnorm < (2.0 ** sigma - 1.0) * l1inf

    candidates = [l1]
    if l1 > 0:
        candidates.append(2.0 ** sigma * l1)
    if cond:
        candidates.append(2.0 ** sigma * l1inf - wnorm)
    lower = max(candidates)

    winf = profile_on_grid(winf_profile, grid)
    upper = math.inf
    witness = math.nan
    sweep = []
    for y in y_sweep:
        vec = np.zeros(grid.N)
        vec[0] = y
        path = translated_bump_path(w1, winf, vec, spec.p, samples=samples)
        mx, th = path_max_J(path, spec, samples)
        sweep.append({"y": float(y), "path_max": mx, "theta_max": th})
        if mx < upper:
            upper, witness = mx, float(y)

    lam_sharp = lambda_sharp(l1, l1inf, spec.p)
    return Lambda2Bounds(
        lower=lower, upper=upper, witness_y=witness, lam_sharp=lam_sharp,
        lam2inf_target=2.0 ** sigma * l1inf, w_dual_norm=wnorm,
        small_well_condition=cond, sweep=sweep,
        crossing_flagged=lower > upper + 1e-6,
    )


@dataclass
class RadialSecondLevel:
    lam2r_inf: float
    lam2r_lower: float
    lam2r_upper: float
    w_dual_norm: float

    def __iter__(self):
        return iter((self.lam2r_inf, self.lam2r_lower))

    def to_dict(self) -> dict:
        return {"lam2r_inf": self.lam2r_inf, "lam2r_lower": self.lam2r_lower,
                "lam2r_upper": self.lam2r_upper, "w_dual_norm": self.w_dual_norm}


def lambda2_radial(spec: ProblemSpec, excited_profile: RadialProfile) -> RadialSecondLevel:
    """Radial second-level bounds from a one-node shooting witness.

    The deviation bound transfers the autonomous witness level to the
    perturbed radial level from both sides.
    """
    if excited_profile.nodes != 1:
        raise ValueError(f"expected a 1-node profile, got {excited_profile.nodes} sign changes")
    lam2r_inf = excited_profile.level
    grid = build_grid(spec)
    wnorm = dual_norm_W(spec, grid)
    return RadialSecondLevel(lam2r_inf=lam2r_inf,
                             lam2r_lower=lam2r_inf - wnorm,
                             lam2r_upper=lam2r_inf + wnorm,
                             w_dual_norm=wnorm)


def refine_path(path, spec: ProblemSpec, iters: int = 10, samples: int = 33,
                step: float = 1e-3, max_increase: float = 1e-6) -> SampledPath:
    """String-style local improvement of a path: per-sample descent steps,
    retraction to the sphere, and equal-chord reparameterization.

    Only [0, pi) is stored; oddness is exact by reflection. The sampled
    maximum must not increase beyond `max_increase` across iterations.
    """
    sp = path if isinstance(path, SampledPath) else SampledPath.from_path(path, samples, spec.p)
    weight = sp.fields[0].grid.weight

    def sampled_max():
        return max(energy_J(u, spec).total for u in sp.fields)

    current_max = sampled_max()
    for _ in range(iters):
        # descent step on each sample with per-sample backtracking
        new_fields = []
        for u in sp.fields:
            g = manifold_gradient(u, spec)
            J0 = energy_J(u, spec).total
            s = step
            cand = u
            for _ in range(20):
                trial = lp_normalize(GridFunction(u.grid, u.values - s * g.values), spec.p)
                if energy_J(trial, spec).total <= J0 + 1e-12:
                    cand = trial
                    break
                s *= 0.5
            new_fields.append(cand)
        # equal-chord reparameterization over the closed half-loop
        # (last sample connects to the reflection of the first)
        chain = new_fields + [GridFunction(sp.fields[0].grid, -new_fields[0].values)]
        chords = [math.sqrt(float(np.sum((b.values - a.values) ** 2) * weight))
                  for a, b in zip(chain[:-1], chain[1:])]
        cum = np.concatenate([[0.0], np.cumsum(chords)])
        total = cum[-1]
        targets = np.linspace(0.0, total, len(new_fields), endpoint=False)
        resampled = []
        for t in targets:
            j = int(np.searchsorted(cum, t, side="right")) - 1
            j = min(j, len(chain) - 2)
            frac = 0.0 if chords[j] == 0 else (t - cum[j]) / chords[j]
            blend = (1.0 - frac) * chain[j].values + frac * chain[j + 1].values
            resampled.append(lp_normalize(GridFunction(chain[0].grid, blend), spec.p))
        sp = SampledPath(sp.thetas, resampled, spec.p)
        new_max = sampled_max()
        if new_max > current_max + max_increase:
            raise PathError(f"path refinement increased the maximum: "
                            f"{current_max} -> {new_max}")
        current_max = new_max
    return sp


@dataclass
class ProfileDiagnostic:
    """Heuristic bump decomposition of a field on the constraint sphere."""

    count: int
    centers: list[tuple[float, ...]]
    masses: list[float]
    residual: float

    def to_dict(self) -> dict:
        return {"count": self.count, "centers": [list(c) for c in self.centers],
                "masses": self.masses, "residual": self.residual}


def bump_diagnostic(u: GridFunction, spec: ProblemSpec,
                    mass_threshold: float = 0.05,
                    min_separation: float | None = None) -> ProfileDiagnostic:
    """Locate mass bumps of |u|: watershed by descending amplitude from local
    maxima, merging peaks closer than `min_separation` (default: four decay
    lengths of the limit problem)."""
    if min_separation is None:
        min_separation = 4.0 / math.sqrt(spec.Vinf)
    grid = u.grid
    amp = np.abs(u.values)
    total_mass = mass_I(u, spec.p)
    if total_mass == 0.0:
        return ProfileDiagnostic(0, [], [], 0.0)

    floor = 1e-8 * float(amp.max())
    # watershed by flooding: visit nodes by descending amplitude, attach to an
    # already-labeled face neighbor or open a new basin at a local maximum
    flat = amp.ravel()
    active = np.flatnonzero(flat > floor)
    order = active[np.argsort(flat[active])[::-1]]
    labels = np.zeros(flat.shape, dtype=np.int64)
    shape = grid.shape
    strides = np.array([int(np.prod(shape[ax + 1:])) for ax in range(grid.N)])
    peaks = []
    for idx in order:
        multi = np.unravel_index(idx, shape)
        neighbor_label = 0
        best_amp = -1.0
        for ax in range(grid.N):
            for sgn in (-1, 1):
                c = multi[ax] + sgn
                if 0 <= c < shape[ax]:
                    nidx = idx + sgn * strides[ax]
                    lab = labels[nidx]
                    if lab and flat[nidx] > best_amp:
                        best_amp = flat[nidx]
                        neighbor_label = lab
        if neighbor_label:
            labels[idx] = neighbor_label
        else:
            peaks.append(idx)
            labels[idx] = len(peaks)

    # merge peaks closer than the separation scale into the stronger basin
    coords = grid.coords()
    peak_pos = [tuple(float(c[np.unravel_index(i, shape)]) for c in coords) for i in peaks]
    merged = list(range(len(peaks)))  # basin -> surviving basin
    for i in range(len(peaks)):
        for j in range(i):
            if merged[j] != j:
                continue
            d = math.dist(peak_pos[i], peak_pos[j])
            if d < min_separation:
                merged[i] = merged[j]
                break
    label_map = np.zeros(len(peaks) + 1, dtype=np.int64)
    for i, m in enumerate(merged):
        label_map[i + 1] = m + 1
    labels = label_map[labels]

    masses = []
    for b in range(1, len(peaks) + 1):
        sel = labels == b
        masses.append(float(np.sum(flat[sel] ** spec.p) * grid.weight))
    kept = [(m / total_mass, peak_pos[b]) for b, m in enumerate(masses)
            if m >= mass_threshold * total_mass]
    kept.sort(reverse=True)
    fractions = [m for m, _ in kept]
    centers = [c for _, c in kept]
    return ProfileDiagnostic(count=len(kept), centers=centers, masses=fractions,
                             residual=1.0 - sum(fractions))


@dataclass
class NodalityVerdict:
    hypotheses_hold: bool
    nodal: bool
    consistent: bool
    residual: float

    def to_dict(self) -> dict:
        return {"hypotheses_hold": self.hypotheses_hold, "nodal": self.nodal,
                "consistent": self.consistent, "residual": self.residual}


def nodality_check(u: GridFunction, lam: float, l1: float, spec: ProblemSpec,
                   residual_tol: float = 1e-2) -> NodalityVerdict:
    """Sign check: when the first level is nonpositive and the given level
    positive (or strictly so in either slot), an approximate solution must
    change sign."""
    res = euler_lagrange_residual(u, lam, spec)
    if res > residual_tol:
        raise ValueError(f"residual {res} exceeds threshold {residual_tol}; "
                         "not close enough to a solution")
    plus, minus = split_signs(u)
    nodal = mass_I(plus, spec.p) > 1e-10 and mass_I(minus, spec.p) > 1e-10
    hyp = (l1 <= 0 < lam) or (l1 < 0 <= lam)
    return NodalityVerdict(hypotheses_hold=hyp, nodal=nodal,
                           consistent=(not hyp) or nodal, residual=res)


@dataclass
class Verdict:
    id: str
    status: str  # pass | fail | inapplicable
    margin: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"id": self.id, "status": self.status,
                "margin": self.margin, "detail": self.detail}


def verdict(vid: str, applicable: bool, margin: float, detail: str = "",
            tol: float = 0.0) -> Verdict:
    if not applicable:
        return Verdict(vid, "inapplicable", margin, detail)
    return Verdict(vid, "pass" if margin > tol else "fail", margin, detail)


@dataclass
class LevelsReport:
    """All computed level estimates, bounds, margins, and verdicts."""

    sigma: float
    q: float
    w_dual_norm: float
    lam1_inf: float | None = None
    lam1: float | None = None
    lam_sharp: float | None = None
    lam2: Lambda2Bounds | None = None
    lam2_radial: RadialSecondLevel | None = None
    decay: dict | None = None
    extras: dict = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)

    def all_pass(self) -> bool:
        return all(v.status != "fail" for v in self.verdicts)

    def discretization_allowance(self) -> float:
        """Slack for comparing the continuum lower bound against grid upper bounds.

        With W = 0 the grid first level sits below the shooting level by the
        discretization error, and the analytic lower bound 2^sigma l1inf
        overshoots its grid counterpart by exactly 2^sigma times that gap.
        """
        if (self.w_dual_norm == 0.0 and self.lam1 is not None
                and self.lam1_inf is not None):
            return 2.0 ** self.sigma * max(0.0, self.lam1_inf - self.lam1)
        return 0.0

    def check_invariants(self) -> list[str]:
        """Report-level consistency: interval ordering and the threshold chain."""
        problems = []
        allowance = self.discretization_allowance()
        if (self.lam2 is not None
                and self.lam2.lower > self.lam2.upper + allowance + 1e-6):
            problems.append("second-level lower bound exceeds upper bound")
        if self.lam1_inf is not None and self.lam_sharp is not None:
            lo, hi = self.lam1_inf, 2.0 ** self.sigma * self.lam1_inf
            if not (lo - 1e-9 <= self.lam_sharp <= hi + 1e-9):
                problems.append("threshold chain lam1_inf <= lam_sharp <= 2^sigma lam1_inf violated")
        return problems

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "q": self.q,
            "w_dual_norm": self.w_dual_norm,
            "lam1_inf": self.lam1_inf,
            "lam1": self.lam1,
            "lam_sharp": self.lam_sharp,
            "lam2": self.lam2.to_dict() if self.lam2 else None,
            "lam2_radial": self.lam2_radial.to_dict() if self.lam2_radial else None,
            "decay": self.decay,
            "extras": self.extras,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }
