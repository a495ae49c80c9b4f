import numpy as np
import pytest

import graspopt as g

scipy_optimize = pytest.importorskip("scipy.optimize")
scipy_spatial = pytest.importorskip("scipy.spatial")


@pytest.fixture(scope="module")
def shadow():
    return g.load_hand("shadow22")


@pytest.fixture(scope="module")
def sphere():
    return g.synth_object("sphere", 1000, seed=11)


def test_hand_and_pose(shadow):
    assert shadow.dof == 22
    assert shadow.parameter_count == 29
    assert shadow.joint_limits.shape == (22, 2)
    rest = g.HandPose.rest(shadow)
    assert rest.vector().shape == (29,)
    assert g.keypoints(shadow, rest).shape == (shadow.keypoint_count, 3)


def test_synthetic_sphere_is_exact():
    cloud = g.synth_object("sphere", 500, seed=3, radius=1.0)
    pts, nrm = cloud.points, cloud.normals
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    assert np.allclose(pts, nrm, atol=1e-12)


def test_hungarian_matches_scipy():
    rng = np.random.default_rng(5)
    for _ in range(200):
        n, m = rng.integers(1, 9, size=2)
        c = rng.uniform(0, 10, size=(n, m))
        a = g.hungarian(c)
        rows, cols = scipy_optimize.linear_sum_assignment(c)
        assert len(a.pairs) == min(n, m)
        assert a.total_cost == pytest.approx(c[rows, cols].sum(), rel=1e-12, abs=1e-12)


def test_q1_matches_exact_hull():
    rng = np.random.default_rng(8)
    checked = 0
    for _ in range(10):
        n = rng.normal(size=(4, 3))
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        w = g.contact_wrenches(0.04 * n, n, np.zeros(3), 25.0, 0.5, 4)
        hull = scipy_spatial.ConvexHull(w.T)
        offsets = hull.equations[:, -1]
        exact = max(0.0, float(np.min(-offsets))) if np.all(offsets <= 1e-12) else 0.0
        assert g.q1_from_wrenches(w) == pytest.approx(exact, rel=1e-6, abs=1e-9)
        checked += exact > 0
    assert checked >= 3


def test_double_cover():
    rng = np.random.default_rng(1)
    for _ in range(100):
        r = rng.normal(size=4)
        r /= np.linalg.norm(r)
        assert g.rotation_loss(r, -r) == 0.0


def test_gradient_matches_central_differences(shadow, sphere):
    rng = np.random.default_rng(2)
    pose = g.HandPose.rest(shadow)
    pose.rotation = np.array([0.9, 0.1, -0.3, 0.2]) / np.linalg.norm([0.9, 0.1, -0.3, 0.2])
    lo, hi = shadow.joint_limits.T
    pose.joints = lo + rng.uniform(0.2, 0.8, size=22) * (hi - lo)
    pose.translation = np.array([0.0, -0.1, 0.0])
    value, grad = g.loss_gradient("ab_tta", shadow, pose, reference=pose, cloud=sphere)
    x = pose.vector()
    h = 1e-6
    for k in range(0, 29, 4):
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        fd = (g.loss("ab_tta", shadow, g.pose_from_vector(shadow, xp), reference=pose, cloud=sphere)
              - g.loss("ab_tta", shadow, g.pose_from_vector(shadow, xm), reference=pose, cloud=sphere)) / (2 * h)
        assert grad[k] == pytest.approx(fd, rel=1e-4, abs=1e-7 * max(1.0, np.abs(grad).max()))


def test_refine_reduces_penetration(shadow, sphere):
    gts = g.ground_truth_grasps(shadow, sphere, 2, seed=21)
    assert len(gts) == 2
    for i, gt in enumerate(gts):
        coarse = g.perturb_grasp(shadow, gt, seed=i)
        result = g.refine(shadow, coarse, sphere)
        assert result.final_loss <= result.initial_loss
        assert g.pen_depth(shadow, result.pose, sphere) < g.pen_depth(shadow, coarse, sphere)
        assert np.array_equal(result.pose.translation, coarse.translation)
        assert np.linalg.norm(result.pose.rotation) == pytest.approx(1.0, abs=1e-12)


def test_metrics_floor(shadow, sphere):
    poses = [g.HandPose.rest(shadow)] * 16
    assert g.delta_t(poses, sphere.centroid) == 6.25
    assert g.delta_r(poses) == 6.25
    assert g.delta_q(shadow, poses) == 6.25
    report = g.evaluate_set(shadow, poses[:2], sphere)
    assert set(report) >= {"eta_np", "eta_tb", "mean_q1", "delta_t", "grasps"}


def test_grasp_set_round_trip(tmp_path, shadow):
    rng = np.random.default_rng(4)
    poses = []
    for _ in range(5):
        p = g.HandPose.rest(shadow)
        r = rng.normal(size=4)
        p.rotation = r / np.linalg.norm(r)
        p.translation = rng.uniform(-0.1, 0.1, size=3)
        poses.append(p)
    path = tmp_path / "set.json"
    g.save_grasp_set(path, "shadow22", poses)
    back = g.load_grasp_set(path)
    for a, b in zip(poses, back):
        assert np.abs(a.vector() - b.vector()).max() <= 1e-12


def test_errors_are_typed(shadow):
    with pytest.raises(g.ValidationError):
        g.load_hand("no-such-hand")
    with pytest.raises(g.ValidationError):
        g.load_cloud("/nonexistent/cloud.ply")
    with pytest.raises(g.Error):
        g.loss("nonsense", shadow, g.HandPose.rest(shadow))
