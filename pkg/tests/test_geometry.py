import math

import numpy as np
import pytest

from aessim.geometry import (DriveableSpace, Footprint, Pose, TargetTrack,
                             circumscribed_check, collision_check,
                             driveable_area_check, inscribed_check, sat_check)
from aessim.pathgen import SampledPath


def straight_path(n=101, v=20.0, dt=0.05, y=0.0, psi=0.0):
    t = dt * np.arange(n)
    return SampledPath(t=t, x=v * t * math.cos(psi), y=y + v * t * math.sin(psi),
                       psi=np.full(n, psi), rho=np.zeros(n), v=np.full(n, v))


def oracle_rect_overlap(pose_a, fp_a, pose_b, fp_b, spacing=0.005):
    """Dense point-membership intersection oracle, independent of the SAT."""
    def edge_points(pose, fp):
        corners = fp.corners(pose)
        pts = [corners, np.array([fp.center(pose)])]
        for i in range(4):
            p0, p1 = corners[i], corners[(i + 1) % 4]
            n = max(2, int(np.ceil(np.linalg.norm(p1 - p0) / spacing)))
            frac = np.linspace(0.0, 1.0, n)[:, None]
            pts.append(p0 + frac * (p1 - p0))
        return np.vstack(pts)

    def inside(points, pose, fp):
        cx, cy = fp.center(pose)
        c, s = math.cos(pose.psi), math.sin(pose.psi)
        dx = points[:, 0] - cx
        dy = points[:, 1] - cy
        lx = dx * c + dy * s
        ly = -dx * s + dy * c
        return np.any((np.abs(lx) <= fp.length / 2 + 1e-12)
                      & (np.abs(ly) <= fp.width / 2 + 1e-12))

    return bool(inside(edge_points(pose_a, fp_a), pose_b, fp_b)
                or inside(edge_points(pose_b, fp_b), pose_a, fp_a))


class TestFootprint:
    def test_radii(self):
        fp = Footprint(4.5, 1.8)
        assert fp.circumscribed_radius == pytest.approx(0.5 * math.hypot(4.5, 1.8))
        assert fp.inscribed_radius == pytest.approx(0.9)

    def test_zero_size_allowed(self):
        fp = Footprint(0.0, 0.0)
        assert fp.circumscribed_radius == 0.0

    def test_corners_with_offset(self):
        fp = Footprint(4.0, 2.0, ref_offset=1.0)
        c = fp.corners(Pose(0.0, 0.0, 0.0))
        assert c[:, 0].max() == pytest.approx(3.0)
        assert c[:, 0].min() == pytest.approx(-1.0)
        assert c[:, 1].max() == pytest.approx(1.0)


class TestDriveableSpace:
    def test_corridor_bars_granularity(self):
        space = DriveableSpace.corridor(0, 10, 1.625, -1.625)
        assert all(len(b) >= 7 for b in space.bars)
        for bars in space.bars:
            widths = [hi - lo for hi, lo in bars]
            assert max(widths) <= 0.5 + 1e-12

    def test_straight_path_in_lane(self):
        space = DriveableSpace.corridor(-10, 120, 1.625, -1.625)
        fp = Footprint(4.5, 1.8, ref_offset=1.35)
        assert driveable_area_check(straight_path(), space, fp)

    def test_offset_path_leaves_lane(self):
        space = DriveableSpace.corridor(-10, 120, 1.625, -1.625)
        fp = Footprint(4.5, 1.8, ref_offset=1.35)
        assert not driveable_area_check(straight_path(y=2.0), space, fp)

    def test_path_past_last_station_not_driveable(self):
        space = DriveableSpace.corridor(-10, 50, 1.625, -1.625)
        fp = Footprint(4.5, 1.8, ref_offset=1.35)
        assert not driveable_area_check(straight_path(), space, fp)

    def test_taper_matches_dense_oracle(self):
        # merging lane: left bound tapers from 4 m down to 1 m
        xs = np.arange(0.0, 121.0, 1.0)
        intervals = [[(4.0 - 3.0 * min(1.0, x / 100.0), -1.625)] for x in xs]
        space = DriveableSpace(xs, intervals)
        fp = Footprint(4.5, 1.8, ref_offset=1.35)
        for y_off in (0.0, 0.8, 1.6, 2.4):
            path = straight_path(y=y_off, psi=0.0, n=101, dt=0.05)
            got = driveable_area_check(path, space, fp)
            # dense oracle: corner containment on a 1 ms grid
            tt = np.arange(0.0, path.t[-1], 1e-3)
            ok = True
            for t in tt:
                px = 20.0 * t
                py = y_off
                for dx, dy in ((3.6, 0.9), (3.6, -0.9), (-0.9, 0.9), (-0.9, -0.9)):
                    cx, cy = px + dx, py + dy
                    y_left = 4.0 - 3.0 * min(1.0, max(0.0, cx / 100.0))
                    if not (cx >= 0 and cx <= 120 and -1.625 <= cy <= y_left):
                        ok = False
                        break
                if not ok:
                    break
            assert got == ok

    def test_lateral_extent(self):
        space = DriveableSpace.corridor(0, 100, 1.625, -4.875)
        assert space.lateral_extent("left", 0.0, 0, 100) == pytest.approx(1.625)
        assert space.lateral_extent("right", 0.0, 0, 100) == pytest.approx(4.875)
        assert space.lateral_extent("left", 99.0, 0, 100) == 0.0  # outside

    def test_disjoint_intervals_per_station(self):
        # two lanes separated by a median: membership in either interval
        xs = np.arange(0.0, 21.0, 1.0)
        intervals = [[(4.0, 1.0), (-1.0, -4.0)] for _ in xs]
        space = DriveableSpace(xs, intervals)
        assert space.contains_points(np.array([5.0]), np.array([2.0]))[0]
        assert space.contains_points(np.array([5.0]), np.array([-2.0]))[0]
        assert not space.contains_points(np.array([5.0]), np.array([0.0]))[0]
        assert space.lateral_extent("left", 2.0, 0, 20) == pytest.approx(2.0)
        assert space.lateral_extent("left", 0.0, 0, 20) == 0.0  # in the gap


class TestCircleFilters:
    def test_circumscribed_examples(self):
        a = Footprint(4.0, 3.0)   # r_c = 2.5
        b = Footprint(1.6, 1.2)   # r_c = 1.0
        assert circumscribed_check(Pose(0, 0, 0), a, Pose(10, 0, 0), b)
        assert not circumscribed_check(Pose(0, 0, 0), a, Pose(0, 0, 0), b)
        assert not circumscribed_check(Pose(0, 0, 0), a, Pose(3.49, 0, 0), b)

    def test_inscribed_examples(self):
        a = Footprint(4.5, 1.8)
        assert inscribed_check(Pose(0, 0, 0), a, Pose(0, 0, 0), a)
        b = Footprint(2.0, 2.0)   # r_i = 1.0
        assert not inscribed_check(Pose(0, 0, 0), b, Pose(2.0, 0, 0), b)
        assert inscribed_check(Pose(0, 0, 0), a, Pose(1.5, 0, 0), a)


class TestSat:
    def test_separated_axis_aligned(self):
        fp = Footprint(2.0, 1.0)
        assert not sat_check(Pose(0, 0, 0), fp, Pose(5, 0, 0), fp)

    def test_identical_overlap(self):
        fp = Footprint(2.0, 1.0)
        assert sat_check(Pose(0, 0, 0), fp, Pose(0, 0, 0), fp)

    def test_rotated_case_matches_oracle(self):
        a, b = Footprint(4.5, 1.8), Footprint(0.5, 0.5)
        pa, pb = Pose(0, 0, 0), Pose(2.6, 0.6, math.pi / 4)
        assert sat_check(pa, a, pb, b) == oracle_rect_overlap(pa, a, pb, b)

    def test_touching_counts_as_collision(self):
        fp = Footprint(2.0, 2.0)
        assert sat_check(Pose(0, 0, 0), fp, Pose(2.0, 0, 0), fp)

    def test_filters_never_contradict_sat(self):
        rng = np.random.default_rng(11)
        for _ in range(2000):
            fa = Footprint(float(rng.uniform(0.5, 5)), float(rng.uniform(0.5, 3)))
            fb = Footprint(float(rng.uniform(0.5, 5)), float(rng.uniform(0.5, 3)))
            pa = Pose(0, 0, float(rng.uniform(-3, 3)))
            pb = Pose(float(rng.uniform(-6, 6)), float(rng.uniform(-6, 6)),
                      float(rng.uniform(-3, 3)))
            hit = sat_check(pa, fa, pb, fb)
            if circumscribed_check(pa, fa, pb, fb):
                assert not hit
            if inscribed_check(pa, fa, pb, fb):
                assert hit


class TestCollisionCheck:
    def test_no_targets(self):
        report = collision_check(straight_path(), [], Footprint(4.5, 1.8, 1.35))
        assert not report.collides
        assert report.min_distance == {}

    def test_static_target_contact_time(self):
        fp = Footprint(4.5, 1.8, ref_offset=1.35)
        target = TargetTrack.constant_velocity(
            "blk", Footprint(0.5, 0.5), Pose(20.0, 0.0, 0.0), 0.0, 6.0)
        report = collision_check(straight_path(), [target], fp, dt_check=0.1)
        # front face starts at 1.35 + 2.25 = 3.6 m; target near face at 19.75
        expected = (19.75 - 3.6) / 20.0
        assert report.collides
        assert report.first_collision_time == pytest.approx(expected, abs=1e-3)

    def test_zero_size_point_contact(self):
        fp = Footprint(0.0, 0.0)
        target = TargetTrack.constant_velocity(
            "pt", Footprint(0.0, 0.0), Pose(20.0, 0.0, 0.0), 0.0, 6.0)
        report = collision_check(straight_path(), [target], fp, dt_check=0.1)
        assert report.collides
        assert report.first_collision_time == pytest.approx(1.0, abs=1e-9)

    def test_laterally_clear_target(self):
        fp = Footprint(4.5, 1.8, ref_offset=1.35)
        target = TargetTrack.constant_velocity(
            "side", Footprint(0.5, 0.5), Pose(40.0, 5.0, 0.0), 0.0, 6.0)
        report = collision_check(straight_path(), [target], fp)
        assert not report.collides
        assert report.min_distance["side"] == pytest.approx(5.0, abs=0.1)

    def test_prediction_gap_flagged(self):
        fp = Footprint(4.5, 1.8, ref_offset=1.35)
        target = TargetTrack.constant_velocity(
            "gap", Footprint(0.5, 0.5), Pose(60.0, 0.0, 0.0), 0.0, 1.0)
        report = collision_check(straight_path(), [target], fp)
        assert report.prediction_gap
        assert report.collides  # held at the last pose, still on the path

    def test_rigid_transform_invariance(self):
        fp = Footprint(4.5, 1.8, ref_offset=1.35)
        target = TargetTrack.constant_velocity(
            "vru", Footprint(0.5, 0.5), Pose(50.0, -2.0, math.pi / 2), 1.0, 6.0)
        base = collision_check(straight_path(), [target], fp)

        ang, tx, ty = 0.7, 13.0, -4.0
        c, s = math.cos(ang), math.sin(ang)
        p = straight_path()
        moved_path = SampledPath(
            t=p.t, x=tx + p.x * c - p.y * s, y=ty + p.x * s + p.y * c,
            psi=p.psi + ang, rho=p.rho, v=p.v)
        moved_target = TargetTrack(
            "vru", target.footprint, target.times,
            tx + target.xs * c - target.ys * s,
            ty + target.xs * s + target.ys * c,
            target.psis + ang)
        moved = collision_check(moved_path, [moved_target], fp)
        assert moved.collides == base.collides
        assert moved.min_distance["vru"] == pytest.approx(
            base.min_distance["vru"], abs=1e-9)
        if base.collides:
            assert moved.first_collision_time == pytest.approx(
                base.first_collision_time, abs=1e-6)

    def test_filter_statistics_populated(self):
        fp = Footprint(4.5, 1.8, ref_offset=1.35)
        target = TargetTrack.constant_velocity(
            "blk", Footprint(0.5, 0.5), Pose(20.0, 0.0, 0.0), 0.0, 6.0)
        report = collision_check(straight_path(), [target], fp)
        assert report.resolved_circumscribed > 0
        assert report.sat_evaluations + report.resolved_inscribed >= 1
