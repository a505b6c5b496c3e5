"""
Distance-generating functions and proximal operators over B x [0, Lambda] x Delta_N.

The prox of the weighted DGF omega = gamma1*omega1(xi) [+ gamma1*lam^2/2] + gamma2*omega2(p)
separates into one problem per block:

    argmin_w  omega(w) + <w, d - omega'(anchor)>

Euclidean blocks reduce to a projection of ``anchor - d/gamma``; shifted-entropy
blocks to a one-dimensional root solve for the normalising multiplier.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp, rel_entr

from .channel import InputDistribution
from .exceptions import ProxError, ValidationError
from .uncertainty import MEMBERSHIP_TOL, PerturbationSet, SetKind
from .utils.validation import validate_positive

logger = logging.getLogger(__name__)

ROOT_XTOL = 1e-15
ROOT_MAXITER = 200
DYKSTRA_TOL = 1e-7
DYKSTRA_MAX_SWEEPS = 10000


class DgfKind(str, Enum):
    EUCLIDEAN = "euclidean"
    SHIFTED_ENTROPY = "shifted_entropy"


@dataclass(frozen=True)
class Geometry:
    """Weighted distance-generating function over the saddle domain."""
    kind: SetKind
    gamma1: float
    gamma2: float
    delta: float = 1e-3
    Lambda: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SetKind(self.kind))
        validate_positive(self.gamma1, "gamma1")
        validate_positive(self.gamma2, "gamma2")
        validate_positive(self.delta, "delta")
        if self.Lambda is not None:
            validate_positive(self.Lambda, "Lambda")

    @property
    def omega1_kind(self) -> DgfKind:
        if self.kind is SetKind.SIMPLEX:
            return DgfKind.SHIFTED_ENTROPY
        return DgfKind.EUCLIDEAN

    @property
    def has_multiplier(self) -> bool:
        return self.Lambda is not None

    def reweighted(self, gamma1: float, gamma2: float) -> "Geometry":
        return Geometry(self.kind, gamma1, gamma2, self.delta, self.Lambda)


@dataclass(frozen=True, eq=False)
class SaddlePoint:
    """z = (xi, [lam], p): perturbation, optional cost multiplier, input distribution."""
    xi: np.ndarray
    p: np.ndarray
    lam: Optional[float] = None

    def __post_init__(self):
        for name in ("xi", "p"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.lam is not None:
            object.__setattr__(self, "lam", float(self.lam))

    def stack(self) -> np.ndarray:
        """Stacked vector (xi-block, [lam], p-block)."""
        parts = [self.xi]
        if self.lam is not None:
            parts.append(np.array([self.lam]))
        parts.append(self.p)
        return np.concatenate(parts)

    def split(self, vector: np.ndarray) -> Tuple[np.ndarray, Optional[float], np.ndarray]:
        """Split a stacked vector laid out like this point into its blocks."""
        s = self.xi.size
        expected = s + self.p.size + (1 if self.lam is not None else 0)
        if vector.shape != (expected,):
            raise ValidationError("step_vector", vector.shape, f"expected length {expected}")
        if self.lam is None:
            return vector[:s], None, vector[s:]
        return vector[:s], float(vector[s]), vector[s + 1:]

    def from_vector(self, vector: np.ndarray) -> "SaddlePoint":
        xi, lam, p = self.split(vector)
        return SaddlePoint(xi, p, lam)

    def to_dict(self) -> dict:
        data = {"xi": self.xi.tolist(), "p": self.p.tolist()}
        if self.lam is not None:
            data["lam"] = self.lam
        return data


def _shifted_entropy(x: np.ndarray, delta: float) -> Tuple[float, np.ndarray]:
    u = x + delta / x.size
    return float(np.sum(u * np.log(u))), 1.0 + np.log(u)


def _shifted_entropy_divergence(w: np.ndarray, z: np.ndarray, delta: float) -> float:
    shift = delta / w.size
    u, v = w + shift, z + shift
    return float(np.sum(rel_entr(u, v) - u + v))


def omega_value_and_grad(z: SaddlePoint, G: Geometry) -> Tuple[float, np.ndarray]:
    """
    Value and gradient of the weighted distance-generating function.

    The gradient is stacked as (xi-block, [lam], p-block).
    """
    if G.omega1_kind is DgfKind.EUCLIDEAN:
        v1, g1 = 0.5 * float(z.xi @ z.xi), z.xi.copy()
    else:
        v1, g1 = _shifted_entropy(z.xi, G.delta)
    v2, g2 = _shifted_entropy(z.p, G.delta)

    value = G.gamma1 * v1 + G.gamma2 * v2
    parts = [G.gamma1 * g1]
    if z.lam is not None:
        value += G.gamma1 * 0.5 * z.lam ** 2
        parts.append(np.array([G.gamma1 * z.lam]))
    parts.append(G.gamma2 * g2)
    return value, np.concatenate(parts)


def bregman_divergence(w: SaddlePoint, z: SaddlePoint, G: Geometry) -> float:
    """V_z(w) = omega(w) - omega(z) - <omega'(z), w - z>, evaluated blockwise."""
    if G.omega1_kind is DgfKind.EUCLIDEAN:
        d = w.xi - z.xi
        v1 = 0.5 * float(d @ d)
    else:
        v1 = _shifted_entropy_divergence(w.xi, z.xi, G.delta)
    value = G.gamma1 * v1 + G.gamma2 * _shifted_entropy_divergence(w.p, z.p, G.delta)
    if w.lam is not None:
        value += G.gamma1 * 0.5 * (w.lam - z.lam) ** 2
    return value


def _entropic_prox(target: np.ndarray, anchor: np.ndarray, gamma: float, delta: float) -> np.ndarray:
    n = anchor.size
    if n == 1:
        return np.ones(1)
    shift = delta / n
    # p_n + shift is proportional to (anchor_n + shift) exp(-target_n / gamma)
    expo = np.log(anchor + shift) - target / gamma

    # no coordinate at zero: the exponentials sum to 1 + delta
    p = np.exp(expo - (logsumexp(expo) - np.log1p(delta))) - shift
    if p.min() >= 0.0:
        return p / p.sum()

    def residual(mu: float) -> float:
        return float(np.maximum(np.exp(expo - mu) - shift, 0.0).sum() - 1.0)

    top = float(expo.max())
    lo = top - np.log1p(shift)
    hi = top - np.log((1.0 + delta) / n)
    width = max(hi - lo, 1.0)
    for _ in range(60):
        if residual(lo) >= 0 >= residual(hi):
            break
        lo, hi = lo - width, hi + width
        width *= 2.0
    else:
        raise ProxError("simplex_entropy", "could not bracket the normalising multiplier",
                        lo=lo, hi=hi)

    mu = brentq(residual, lo, hi, xtol=ROOT_XTOL, maxiter=ROOT_MAXITER)
    p = np.maximum(np.exp(expo - mu) - shift, 0.0)
    return p / p.sum()


def prox_simplex_entropy(target: np.ndarray, anchor: np.ndarray, gamma2: float,
                         delta: float) -> InputDistribution:
    """
    Entropic prox over the simplex.

    Minimises gamma2*omega2(p) + <p, target - gamma2*omega2'(anchor)> with the
    shifted entropy omega2(p) = sum (p_n + delta/N) log(p_n + delta/N).
    """
    validate_positive(gamma2, "gamma2")
    validate_positive(delta, "delta")
    anchor = np.asarray(anchor, dtype=float)
    target = np.asarray(target, dtype=float)
    if target.shape != anchor.shape:
        raise ValidationError("target", target.shape, f"expected shape {anchor.shape}")
    return InputDistribution(_entropic_prox(target, anchor, gamma2, delta))


def _unconstrained(target: np.ndarray, anchor: np.ndarray, gamma: float) -> np.ndarray:
    return (gamma * anchor - target) / gamma


def prox_inf_ball(target: np.ndarray, anchor: np.ndarray, gamma1: float) -> np.ndarray:
    """Euclidean prox over [-1, 1]^S: a componentwise clip."""
    u = _unconstrained(np.asarray(target, float), np.asarray(anchor, float), gamma1)
    return np.clip(u, -1.0, 1.0)


def prox_two_ball(target: np.ndarray, anchor: np.ndarray, gamma1: float) -> np.ndarray:
    """Euclidean prox over the unit 2-ball: radial normalisation outside the ball."""
    u = _unconstrained(np.asarray(target, float), np.asarray(anchor, float), gamma1)
    norm = np.linalg.norm(u)
    if norm <= 1.0:
        return u
    return u / norm


def _dykstra_box_ball(y: np.ndarray) -> np.ndarray:
    x = y.copy()
    p = np.zeros_like(y)
    q = np.zeros_like(y)
    for _ in range(DYKSTRA_MAX_SWEEPS):
        box = np.clip(x + p, 0.0, 1.0)
        p = x + p - box
        v = box + q
        ball = v / max(1.0, np.linalg.norm(v))
        q = box + q - ball
        change = float(np.linalg.norm(ball - x))
        x = ball
        # ball iterate is in the ball; stop once it is also in the box and settled
        box_violation = float(np.max(np.maximum(-x, x - 1.0)))
        if max(box_violation, change) <= DYKSTRA_TOL:
            return np.clip(x, 0.0, 1.0)
    raise ProxError("box_cap_two_ball", "alternating projections did not converge",
                    sweeps=DYKSTRA_MAX_SWEEPS, last_change=change, box_violation=box_violation)


def project_box_cap_two_ball(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {xi : 0 <= xi_s <= 1, ||xi||_2 <= 1}."""
    y = np.asarray(y, dtype=float)
    x = np.clip(y, 0.0, 1.0)
    if np.linalg.norm(x) <= 1.0:
        return x

    # x(nu) = clip(y / (1 + nu), 0, 1) with nu the ball multiplier
    pos = np.maximum(y, 0.0)

    def excess(nu: float) -> float:
        return float(np.sum(np.clip(pos / (1.0 + nu), 0.0, 1.0) ** 2) - 1.0)

    # excess is nonincreasing; at hi no upper clip is active and x = pos / ||pos||
    norm = float(np.linalg.norm(pos))
    hi = norm - 1.0
    if excess(hi) >= 0.0:
        return np.clip(pos / norm, 0.0, 1.0)

    try:
        nu = brentq(excess, 0.0, hi, xtol=ROOT_XTOL, maxiter=ROOT_MAXITER)
    except (ValueError, RuntimeError) as e:
        logger.debug(f"Ball multiplier search failed ({e}); falling back to alternating projections")
        return _dykstra_box_ball(y)

    x = np.clip(pos / (1.0 + nu), 0.0, 1.0)
    return x / max(1.0, np.linalg.norm(x))


def prox_box_cap_two_ball(target: np.ndarray, anchor: np.ndarray, gamma1: float) -> np.ndarray:
    """Euclidean prox over the unit box [0,1]^S intersected with the unit 2-ball."""
    u = _unconstrained(np.asarray(target, float), np.asarray(anchor, float), gamma1)
    return project_box_cap_two_ball(u)


def prox_interval(target: float, anchor: float, gamma: float, Lambda: float) -> float:
    """Prox of gamma*lam^2/2 over [0, Lambda]."""
    u = (gamma * anchor - target) / gamma
    return float(min(max(u, 0.0), Lambda))


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-and-threshold)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    rho = int(np.nonzero(u + (1.0 - css) / ks > 0)[0][-1])
    theta = (1.0 - css[rho]) / (rho + 1.0)
    return np.maximum(v + theta, 0.0)


def euclidean_projection(xi: np.ndarray, kind: SetKind) -> np.ndarray:
    """Euclidean projection onto the perturbation set of the given kind."""
    kind = SetKind(kind)
    xi = np.asarray(xi, dtype=float)
    if kind is SetKind.INF_BALL:
        return np.clip(xi, -1.0, 1.0)
    if kind is SetKind.TWO_BALL:
        return xi / max(1.0, np.linalg.norm(xi))
    if kind is SetKind.SIMPLEX:
        return project_simplex(xi)
    return project_box_cap_two_ball(xi)


def _prox_xi(target: np.ndarray, anchor: np.ndarray, G: Geometry) -> np.ndarray:
    if G.kind is SetKind.INF_BALL:
        return prox_inf_ball(target, anchor, G.gamma1)
    if G.kind is SetKind.TWO_BALL:
        return prox_two_ball(target, anchor, G.gamma1)
    if G.kind is SetKind.BOX_CAP_TWO_BALL:
        return prox_box_cap_two_ball(target, anchor, G.gamma1)
    return _entropic_prox(target, anchor, G.gamma1, G.delta)


def prox_joint(z_anchor: SaddlePoint, step_vector: np.ndarray, G: Geometry) -> SaddlePoint:
    """
    Joint prox Prox_{z_anchor}(step_vector) over the saddle domain.

    Blocks are solved independently: xi by set kind, lam by interval clip,
    p by the entropic simplex prox.
    """
    d_xi, d_lam, d_p = z_anchor.split(np.asarray(step_vector, dtype=float))
    xi = _prox_xi(d_xi, z_anchor.xi, G)
    lam = None
    if z_anchor.lam is not None:
        if G.Lambda is None:
            raise ProxError("joint", "multiplier block present but geometry has no Lambda")
        lam = prox_interval(d_lam, z_anchor.lam, G.gamma1, G.Lambda)
    p = _entropic_prox(d_p, z_anchor.p, G.gamma2, G.delta)
    return SaddlePoint(xi, p, lam)


def domain_violation(z: SaddlePoint, G: Geometry) -> float:
    """How far z lies outside B x [0, Lambda] x Delta_N (0 inside)."""
    v = PerturbationSet(G.kind, z.xi.size).violation(z.xi)
    v = max(v, float(-z.p.min()), abs(float(z.p.sum()) - 1.0))
    if z.lam is not None:
        v = max(v, -z.lam, z.lam - (G.Lambda if G.Lambda is not None else np.inf))
    return max(v, 0.0)


def in_domain(z: SaddlePoint, G: Geometry, tol: float = MEMBERSHIP_TOL) -> bool:
    return domain_violation(z, G) <= tol
