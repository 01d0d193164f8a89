"""Cost functions over pose pairs with exact first and second derivatives.

A pose is a position x (2-vector) plus an orientation vector u
(2-vector, unit length only on the constraint manifold).  Five costs are
defined, each over an ordered pose pair (p, p'):

  translation   Mahalanobis error of the odometry translation r measured
                in frame p:  0.5 (d - r)^T T^-1 (d - r),
                d = Omega(u)^T (x' - x).
  distance      scalar error of the traveled distance against rho = |r|:
                0.5 (1/sigma_e) (|x' - x| - rho)^2.
  rotation      rotational error against the odometry rotation matrix Q.
  compass       rotational error against a measured relative orientation
                Psi (same functional form as rotation).
  home vector   rotational error of the measured direction A from pose p
                toward pose p', expressed in frame p.

The rotational costs come in two functional forms.  With Phi the
orientation matrix of the measurement:

  first   t1 + (1 - t1) |u| |u'| - (Phi u)^T u',   t1 in {0, 1}
  second  1 - (Phi u/|u|)^T (u'/|u'|)

each weighted by gamma/sigma^2 of the respective measurement.  For the
home vector the role of u' is taken by the normalized position
difference delta0 = (x' - x)/|x' - x|, and the first-form offset is
t1 + (1 - t1)|u| since |delta0| = 1 identically.

Every evaluator returns the value together with all gradient and
Hessian blocks over the stacked pose-pair coordinates [x (2), u (2)].
Blocks are written exactly in the form in which they were derived (no
re-simplification), so each term can be checked in isolation against
the finite-difference oracle.  Only the forward mixed block
d^2 f / (dp dp') is stored; the reverse block is always its transpose.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateVectorError, InvalidCovarianceError
from .orvec import omega, omega_bar

# Norm threshold below which normalizing cost paths refuse to evaluate.
DEGENERATE_NORM = 1e-9

# Slices of the stacked per-pose coordinates [x, u].
POS = slice(0, 2)
ORI = slice(2, 4)


@dataclass
class Pose:
    """Planar pose: position x and orientation vector u, world frame.

    u need not be unit during optimization; the unit-length requirement
    is enforced by the solver's constraints, not by this type.
    """

    x: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).copy()
        self.u = np.asarray(self.u, dtype=float).copy()
        if self.x.shape != (2,) or self.u.shape != (2,):
            raise ValueError("pose components must be 2-vectors")

    def copy(self):
        return Pose(self.x, self.u)


@dataclass(frozen=True)
class RotCostConfig:
    """Shape parameters shared by the rotational costs.

    form selects the functional form ('first' or 'second'), t1 the
    offset variant of the first form (ignored by the second), and gamma
    is a common weight factor on all rotational and homing terms.
    """

    form: str = "first"
    t1: int = 1
    gamma: float = 1.0

    def __post_init__(self):
        if self.form not in ("first", "second"):
            raise ValueError(f"unknown rotational cost form {self.form!r}")
        if self.t1 not in (0, 1):
            raise ValueError(f"t1 must be 0 or 1, got {self.t1!r}")
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")


@dataclass
class CostEval:
    """Value and derivative blocks of one cost term over a pose pair.

    grad1/grad2 are the gradients with respect to the stacked
    coordinates [x, u] of the first/second pose; h11, h12, h22 the
    corresponding Hessian blocks, h12 being d^2 f / (dp dp').
    """

    value: float = 0.0
    grad1: np.ndarray = field(default_factory=lambda: np.zeros(4))
    grad2: np.ndarray = field(default_factory=lambda: np.zeros(4))
    h11: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))
    h12: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))
    h22: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))

    @property
    def h21(self):
        return self.h12.T

    def __iadd__(self, other):
        self.value += other.value
        self.grad1 += other.grad1
        self.grad2 += other.grad2
        self.h11 += other.h11
        self.h12 += other.h12
        self.h22 += other.h22
        return self


def _checked_norm(z, what):
    n = float(np.hypot(z[0], z[1]))
    if n <= DEGENERATE_NORM:
        raise DegenerateVectorError(f"{what} has norm {n!r}, below {DEGENERATE_NORM}")
    return n


def _spd_inverse(T):
    """Inverse of a symmetric positive definite 2x2 matrix."""
    T = np.asarray(T, dtype=float)
    scale = max(1.0, float(np.abs(T).max()))
    if abs(T[0, 1] - T[1, 0]) > 1e-12 * scale:
        raise InvalidCovarianceError(f"covariance not symmetric: {T!r}")
    det = T[0, 0] * T[1, 1] - T[0, 1] * T[1, 0]
    if T[0, 0] <= 0.0 or det <= 0.0:
        raise InvalidCovarianceError(f"covariance not positive definite: {T!r}")
    return np.array([[T[1, 1], -T[0, 1]], [-T[1, 0], T[0, 0]]]) / det


def _proj_curvature(a, z0, nz):
    """Curvature matrix S with d/dz [ (I - z0 z0^T)/|z| a ] = -S.

    z0 is z/|z|, nz is |z|, and a is held constant.  S is symmetric.
    """
    return (
        np.outer(a, z0) + np.outer(z0, a) + (z0 @ a) * (np.eye(2) - 3.0 * np.outer(z0, z0))
    ) / nz**2


# ---------------------------------------------------------------------------
# translation and distance


def translation_value(p, pp, T, r):
    """Value-only translation cost (used by merit evaluation)."""
    e = omega(p.u).T @ (pp.x - p.x) - r
    return 0.5 * float(e @ _spd_inverse(T) @ e)


def eval_translation(p, pp, T, r):
    """Mahalanobis translation cost with all derivative blocks.

    Parameters
    ----------
    p, pp : Pose
        First and second pose; the orientation of pp does not enter.
    T : (2, 2) ndarray
        Symmetric positive definite covariance of r.
    r : (2,) ndarray
        Measured translation expressed in the frame of the first pose.
    """
    Tinv = _spd_inverse(T)
    delta = pp.x - p.x
    U = omega(p.u)
    D = omega_bar(delta)
    e = U.T @ delta - r
    w = Tinv @ e

    out = CostEval(value=0.5 * float(e @ w))
    out.grad1[POS] = -U @ w
    out.grad1[ORI] = D @ w
    out.grad2[POS] = U @ w

    UTinv = U @ Tinv
    core = UTinv @ U.T  # U T^-1 U^T
    Ow = omega(w)

    out.h11[POS, POS] = core
    out.h11[POS, ORI] = -(UTinv @ D + Ow)
    out.h11[ORI, POS] = out.h11[POS, ORI].T
    out.h11[ORI, ORI] = D @ Tinv @ D
    out.h12[POS, POS] = -core
    out.h12[ORI, POS] = (UTinv @ D + Ow).T
    out.h22[POS, POS] = core
    return out


def distance_value(p, pp, sigma_e, rho):
    """Value-only traveled-distance cost."""
    nd = _checked_norm(pp.x - p.x, "pose position difference")
    return 0.5 * (nd - rho) ** 2 / sigma_e


def eval_distance(p, pp, sigma_e, rho):
    """Scalar traveled-distance cost with all derivative blocks.

    Weighted by 1/sigma_e.  Orientations do not enter.  Raises
    DegenerateVectorError when the two positions (numerically) coincide.
    """
    if not sigma_e > 0.0:
        raise ValueError(f"sigma_e must be positive, got {sigma_e!r}")
    delta = pp.x - p.x
    nd = _checked_norm(delta, "pose position difference")
    d0 = delta / nd
    winv = 1.0 / sigma_e
    resid = nd - rho

    out = CostEval(value=0.5 * winv * resid**2)
    g = winv * resid * d0
    out.grad1[POS] = -g
    out.grad2[POS] = g

    # d^2/d(delta)^2 [0.5 (|delta| - rho)^2] = I - rho (I - d0 d0^T)/|delta|
    P = (np.eye(2) - np.outer(d0, d0)) / nd
    core = winv * (np.eye(2) - rho * P)
    out.h11[POS, POS] = core
    out.h12[POS, POS] = -core
    out.h22[POS, POS] = core
    return out


# ---------------------------------------------------------------------------
# generic rotational kernel over (u, u'); shared by rotation and compass


def _rot_value(Phi, u, up, cfg):
    if cfg.form == "second":
        nu = _checked_norm(u, "orientation vector")
        nup = _checked_norm(up, "orientation vector")
        return 1.0 - float((Phi @ u) @ up) / (nu * nup)
    if cfg.t1 == 1:
        return 1.0 - float((Phi @ u) @ up)
    nu = _checked_norm(u, "orientation vector")
    nup = _checked_norm(up, "orientation vector")
    return nu * nup - float((Phi @ u) @ up)


def _rot_first(Phi, u, up, t1):
    """First-form rotational kernel: u/u' gradients and Hessian blocks."""
    value = -float((Phi @ u) @ up)
    gu = -(Phi.T @ up)
    gup = -(Phi @ u)
    huu = np.zeros((2, 2))
    huup = -Phi.T.copy()
    hupup = np.zeros((2, 2))
    if t1 == 1:
        value += 1.0
    else:
        nu = _checked_norm(u, "orientation vector")
        nup = _checked_norm(up, "orientation vector")
        u0 = u / nu
        up0 = up / nup
        value += nu * nup
        gu = gu + nup * u0
        gup = gup + nu * up0
        huu = huu + (nup / nu) * (np.eye(2) - np.outer(u0, u0))
        huup = huup + np.outer(u0, up0)
        hupup = hupup + (nu / nup) * (np.eye(2) - np.outer(up0, up0))
    return value, gu, gup, huu, huup, hupup


def _rot_second(Phi, u, up):
    """Second-form (normalized) rotational kernel."""
    nu = _checked_norm(u, "orientation vector")
    nup = _checked_norm(up, "orientation vector")
    u0 = u / nu
    up0 = up / nup
    Pu = (np.eye(2) - np.outer(u0, u0)) / nu
    Pup = (np.eye(2) - np.outer(up0, up0)) / nup

    value = 1.0 - float((Phi @ u0) @ up0)
    gu = -(Pu @ Phi.T @ up0)
    gup = -(Pup @ Phi @ u0)
    huu = _proj_curvature(Phi.T @ up0, u0, nu)
    huup = -Pu @ Phi.T @ Pup
    hupup = _proj_curvature(Phi @ u0, up0, nup)
    return value, gu, gup, huu, huup, hupup


def eval_generic_rotational(Phi, u, up, cfg):
    """Unweighted rotational cost s (first form) or s-bar (second form).

    Returns a CostEval whose position blocks are zero; callers apply
    their own gamma/sigma^2 weight.
    """
    u = np.asarray(u, dtype=float)
    up = np.asarray(up, dtype=float)
    if cfg.form == "second":
        value, gu, gup, huu, huup, hupup = _rot_second(Phi, u, up)
    else:
        value, gu, gup, huu, huup, hupup = _rot_first(Phi, u, up, cfg.t1)
    out = CostEval(value=value)
    out.grad1[ORI] = gu
    out.grad2[ORI] = gup
    out.h11[ORI, ORI] = huu
    out.h12[ORI, ORI] = huup
    out.h22[ORI, ORI] = hupup
    return out


def _weighted_rotational(Phi, u, up, weight, cfg):
    out = eval_generic_rotational(Phi, u, up, cfg)
    out.value *= weight
    out.grad1 *= weight
    out.grad2 *= weight
    out.h11 *= weight
    out.h12 *= weight
    out.h22 *= weight
    return out


def rotation_value(p, pp, Q, sigma, cfg):
    """Value-only rotation cost."""
    return cfg.gamma / sigma**2 * _rot_value(Q, p.u, pp.u, cfg)


def eval_rotation(p, pp, Q, sigma, cfg):
    """Rotational cost against the measured relative rotation matrix Q.

    Q is the orientation matrix of the measured unit rotation vector
    (frame p to frame pp); positions do not enter.
    """
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    return _weighted_rotational(Q, p.u, pp.u, cfg.gamma / sigma**2, cfg)


def compass_value(p, pp, Psi, sigma_c, cfg):
    """Value-only compass cost."""
    return cfg.gamma / sigma_c**2 * _rot_value(Psi, p.u, pp.u, cfg)


def eval_compass(p, pp, Psi, sigma_c, cfg):
    """Compass cost against the measured relative orientation matrix Psi.

    Identical functional form to the rotation cost; Psi comes from a
    visual compass instead of odometry.
    """
    if not sigma_c > 0.0:
        raise ValueError(f"sigma_c must be positive, got {sigma_c!r}")
    return _weighted_rotational(Psi, p.u, pp.u, cfg.gamma / sigma_c**2, cfg)


# ---------------------------------------------------------------------------
# home vector


def home_vector_value(p, pp, A, sigma_h, cfg):
    """Value-only home-vector cost."""
    delta = pp.x - p.x
    nd = _checked_norm(delta, "pose position difference")
    d0 = delta / nd
    w = cfg.gamma / sigma_h**2
    if cfg.form == "second":
        nu = _checked_norm(p.u, "orientation vector")
        return w * (1.0 - float((A @ p.u) @ d0) / nu)
    if cfg.t1 == 1:
        return w * (1.0 - float((A @ p.u) @ d0))
    return w * (_checked_norm(p.u, "orientation vector") - float((A @ p.u) @ d0))


def eval_home_vector(p, pp, A, sigma_h, cfg):
    """Home-vector cost with all derivative blocks.

    A is the orientation matrix of the measured unit direction from
    pose p toward pose pp, expressed in frame p.  The role of the
    second orientation vector of the rotational form is taken by the
    normalized position difference, so this cost couples x, x' and u;
    the orientation of pp never enters.  The first-form offset is
    t1 + (1 - t1)|u|.
    """
    if not sigma_h > 0.0:
        raise ValueError(f"sigma_h must be positive, got {sigma_h!r}")
    u = p.u
    delta = pp.x - p.x
    nd = _checked_norm(delta, "pose position difference")
    d0 = delta / nd
    Pd = (np.eye(2) - np.outer(d0, d0)) / nd
    w = cfg.gamma / sigma_h**2

    out = CostEval()
    if cfg.form == "second":
        nu = _checked_norm(u, "orientation vector")
        u0 = u / nu
        Pu = (np.eye(2) - np.outer(u0, u0)) / nu
        a = A @ u0
        S = _proj_curvature(a, d0, nd)

        out.value = w * (1.0 - float(a @ d0))
        out.grad1[POS] = w * (Pd @ a)
        out.grad2[POS] = -w * (Pd @ a)
        out.grad1[ORI] = -w * (Pu @ A.T @ d0)

        out.h11[POS, POS] = w * S
        out.h11[POS, ORI] = w * (Pd @ A @ Pu)
        out.h11[ORI, POS] = out.h11[POS, ORI].T
        out.h11[ORI, ORI] = w * _proj_curvature(A.T @ d0, u0, nu)
        out.h12[POS, POS] = -w * S
        out.h12[ORI, POS] = -w * (Pu @ A.T @ Pd)
        out.h22[POS, POS] = w * S
        return out

    a = A @ u
    S = _proj_curvature(a, d0, nd)

    out.value = w * (float(cfg.t1) - float(a @ d0))
    out.grad1[POS] = w * (Pd @ a)
    out.grad2[POS] = -w * (Pd @ a)
    out.grad1[ORI] = -w * (A.T @ d0)

    out.h11[POS, POS] = w * S
    out.h11[POS, ORI] = w * (Pd @ A)
    out.h11[ORI, POS] = out.h11[POS, ORI].T
    out.h12[POS, POS] = -w * S
    out.h12[ORI, POS] = -w * (A.T @ Pd)
    out.h22[POS, POS] = w * S

    if cfg.t1 == 0:
        nu = _checked_norm(u, "orientation vector")
        u0 = u / nu
        out.value += w * nu
        out.grad1[ORI] += w * u0
        out.h11[ORI, ORI] += w * (np.eye(2) - np.outer(u0, u0)) / nu
    return out
