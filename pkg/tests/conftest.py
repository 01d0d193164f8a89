"""Shared graph builders for the test suite."""

import numpy as np

from ovsam.costs import Pose
from ovsam.graph import FactorGraph, HomingMeasurement, OdometryMeasurement
from ovsam.orvec import from_angle, omega


def random_spd(rng, lo=0.05, hi=1.0):
    R = omega(from_angle(rng.uniform(-np.pi, np.pi)))
    return (R * rng.uniform(lo, hi, 2)) @ R.T


def spread_positions(rng, n, min_dist=0.4):
    """Random positions with a pairwise distance floor (keeps home vectors
    and distance costs away from their coincident-pose degeneracy)."""
    while True:
        xs = rng.uniform(-2.0, 2.0, (n, 2))
        gaps = np.linalg.norm(xs[:, None, :] - xs[None, :, :], axis=-1)
        if np.all(gaps[np.triu_indices(n, 1)] >= min_dist):
            return xs


def random_graph(rng, n_poses=5, n_homing=4, unit_orientations=False):
    """Valid measurement data over random poses; orientations may be
    non-unit (the optimization state is allowed off the constraint)."""
    xs = spread_positions(rng, n_poses)
    poses = []
    for k in range(n_poses):
        u = from_angle(rng.uniform(-np.pi, np.pi))
        if not unit_orientations:
            u = rng.uniform(0.6, 1.4) * u
        poses.append(Pose(xs[k], u))
    odometry = [
        OdometryMeasurement(
            i1=i,
            i2=i + 1,
            r=rng.uniform(-1.0, 1.0, 2),
            q=from_angle(rng.uniform(-np.pi, np.pi)),
            T=random_spd(rng),
            sigma=rng.uniform(0.2, 1.0),
            sigma_e=rng.uniform(0.2, 1.0),
        )
        for i in range(1, n_poses)
    ]
    pairs = [
        (i1, i2)
        for i1 in range(1, n_poses + 1)
        for i2 in range(1, n_poses + 1)
        if i1 != i2
    ]
    homing = []
    for k in rng.choice(len(pairs), size=min(n_homing, len(pairs)), replace=False):
        i1, i2 = pairs[k]
        homing.append(
            HomingMeasurement(
                i1=i1,
                i2=i2,
                alpha=from_angle(rng.uniform(-np.pi, np.pi)),
                psi=from_angle(rng.uniform(-np.pi, np.pi)),
                sigma_h=rng.uniform(0.2, 1.0),
                sigma_c=rng.uniform(0.2, 1.0),
            )
        )
    graph = FactorGraph(poses, odometry, homing)
    graph.validate()
    return graph


def consistent_graph(rng, n_poses=4, with_homing=True):
    """Every measurement computed exactly from the poses (zero residuals),
    unit orientations, moderate weights."""
    xs = spread_positions(rng, n_poses)
    us = [from_angle(rng.uniform(-np.pi, np.pi)) for _ in range(n_poses)]
    poses = [Pose(x, u) for x, u in zip(xs, us)]
    odometry = [
        OdometryMeasurement(
            i1=i,
            i2=i + 1,
            r=omega(us[i - 1]).T @ (xs[i] - xs[i - 1]),
            q=omega(us[i - 1]).T @ us[i],
            T=0.01 * np.eye(2),
            sigma=0.1,
            sigma_e=0.1,
        )
        for i in range(1, n_poses)
    ]
    homing = []
    if with_homing:
        for i1 in range(3, n_poses + 1):
            i2 = i1 - 2
            delta = xs[i2 - 1] - xs[i1 - 1]
            d0 = delta / np.hypot(*delta)
            homing.append(
                HomingMeasurement(
                    i1=i1,
                    i2=i2,
                    alpha=omega(us[i1 - 1]).T @ d0,
                    psi=omega(us[i1 - 1]).T @ us[i2 - 1],
                    sigma_h=0.1,
                    sigma_c=0.1,
                )
            )
    graph = FactorGraph(poses, odometry, homing)
    graph.validate()
    return graph


def two_pose_graph(theta1=0.3, x1=(0.2, -0.1), r=(0.8, 0.4), rel=0.7):
    """Single odometry measurement; the free pose has the closed-form
    optimum x2* = x1 + Omega(u1) r, u2* = Omega(q) u1."""
    u1 = from_angle(theta1)
    q = from_angle(rel)
    x1 = np.asarray(x1, dtype=float)
    x2 = x1 + omega(u1) @ np.asarray(r, dtype=float)
    poses = [Pose(x1, u1), Pose(x2, omega(q) @ u1)]
    odometry = [
        OdometryMeasurement(
            i1=1, i2=2, r=r, q=q, T=0.01 * np.eye(2), sigma=0.1, sigma_e=0.1
        )
    ]
    graph = FactorGraph(poses, odometry)
    graph.validate()
    return graph
