#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "lcvlp/camera.hpp"
#include "support.hpp"

using namespace lcvlp;
constexpr double kPi = std::numbers::pi;

namespace {

Eigen::Vector3d random_rodrigues(std::mt19937_64& rng, double max_angle = kPi) {
    std::normal_distribution<double> n(0, 1);
    std::uniform_real_distribution<double> ang(0, max_angle);
    return Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized() * ang(rng);
}

Eigen::Matrix3d quarter_turn_z() {
    Eigen::Matrix3d r;
    r << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    return r;
}

Posed random_upward_pose(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> x(0.5, 5.5), y(0.5, 7.5), z(0.5, 2.0), roll(0, 2 * kPi), tilt(0, 0.5),
        az(-kPi, kPi);
    return testing_support::upward_pose({x(rng), y(rng), z(rng)}, roll(rng), tilt(rng), az(rng));
}

} // namespace

TEST(Rodrigues, ZeroIsIdentity) { EXPECT_EQ(rodrigues_to_matrix(Eigen::Vector3d::Zero().eval()), Eigen::Matrix3d::Identity()); }

TEST(Rodrigues, QuarterTurnAboutZ) {
    EXPECT_LT((rodrigues_to_matrix(Eigen::Vector3d(0, 0, kPi / 2)) - quarter_turn_z()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Rodrigues, AgreesWithAngleAxis) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Vector3d w = random_rodrigues(rng);
        const Eigen::Matrix3d r = rodrigues_to_matrix(w);
        const Eigen::Matrix3d oracle = Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix();
        EXPECT_LT((r - oracle).cwiseAbs().maxCoeff(), 1e-13);
        EXPECT_LT((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
    }
}

TEST(Rodrigues, SmallAngleBranchIsContinuous) {
    const Eigen::Vector3d w(3e-9, -2e-9, 1e-9);
    const Eigen::Matrix3d oracle = Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix();
    EXPECT_LT((rodrigues_to_matrix(w) - oracle).cwiseAbs().maxCoeff(), 1e-16);
}

TEST(Rodrigues, DerivativesMatchCentralDifference) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 300; ++i) {
        const Eigen::Vector3d w = i == 0 ? Eigen::Vector3d::Zero() : random_rodrigues(rng, 3.0);
        const auto d = rodrigues_derivatives(w);
        for (int k = 0; k < 3; ++k) {
            const double h = 1e-6;
            Eigen::Vector3d dw = Eigen::Vector3d::Zero();
            dw(k) = h;
            const Eigen::Matrix3d fd = (rodrigues_to_matrix(Eigen::Vector3d(w + dw)) - rodrigues_to_matrix(Eigen::Vector3d(w - dw))) / (2 * h);
            EXPECT_LT((d[k] - fd).cwiseAbs().maxCoeff(), 1e-8);
        }
    }
}

TEST(MatrixToRodrigues, IdentityAndQuarterTurn) {
    EXPECT_EQ(matrix_to_rodrigues(Eigen::Matrix3d::Identity().eval()), Eigen::Vector3d::Zero());
    EXPECT_LT((matrix_to_rodrigues(quarter_turn_z()) - Eigen::Vector3d(0, 0, kPi / 2)).norm(), 1e-15);
}

TEST(MatrixToRodrigues, RoundTrip) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Vector3d w = random_rodrigues(rng, kPi - 1e-6);
        EXPECT_LT((matrix_to_rodrigues(rodrigues_to_matrix(w)) - w).norm(), 1e-9);
    }
}

TEST(MatrixToRodrigues, NearHalfTurn) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector3d axis = random_rodrigues(rng).normalized();
        const double angle = kPi - 1e-9 * (i % 3);
        const Eigen::Matrix3d r = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
        const Eigen::Vector3d w = matrix_to_rodrigues(r);
        EXPECT_LE(w.norm(), kPi + 1e-12);
        EXPECT_LT((rodrigues_to_matrix(w) - r).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(MatrixToRodrigues, RejectsNonRotations) {
    Eigen::Matrix3d reflection = Eigen::Matrix3d::Identity();
    reflection(2, 2) = -1;
    EXPECT_THROW(matrix_to_rodrigues(reflection), Error);
    EXPECT_THROW(matrix_to_rodrigues(Eigen::Matrix3d(2.0 * Eigen::Matrix3d::Identity())), Error);
    try {
        matrix_to_rodrigues(reflection);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotOrthonormal);
    }
}

TEST(Intrinsics, MakeValidates) {
    EXPECT_THROW(CameraIntrinsicsd::make(0, 800, 320, 240, 640, 480), Error);
    EXPECT_THROW(CameraIntrinsicsd::make(800, 800, 700, 240, 640, 480), Error);
    EXPECT_THROW(CameraIntrinsicsd::make(800, 800, 320, 240, 0, 480), Error);
    EXPECT_NO_THROW(reference_camera());
}

TEST(Project, PrincipalRay) {
    EXPECT_TRUE(project(reference_camera(), Posed::identity(), Eigen::Vector3d(0, 0, 1)).isApprox(Eigen::Vector2d(320, 240)));
}

TEST(Project, OffAxisPoint) {
    EXPECT_LT((project(reference_camera(), Posed::identity(), Eigen::Vector3d(0.1, 0, 1)) - Eigen::Vector2d(400, 240)).norm(), 1e-12);
}

TEST(Project, BehindCameraThrows) {
    try {
        project(reference_camera(), Posed::identity(), Eigen::Vector3d(0, 0, -1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BehindCamera);
    }
}

TEST(Project, MatchesMatrixForm) {
    std::mt19937_64 rng(5);
    const auto k = reference_camera();
    for (int i = 0; i < 100; ++i) {
        const Posed pose = random_upward_pose(rng);
        const Eigen::Vector3d x = camera_center(pose) + Eigen::Vector3d(0.3 - 0.006 * i, 0.2, 1.0);
        const Eigen::Vector3d h = k.matrix() * (pose.rotation() * x + pose.t);
        EXPECT_LT((project(k, pose, x) - h.hnormalized()).norm(), 1e-9);
    }
}

TEST(CameraCenter, Examples) {
    EXPECT_EQ(camera_center(Posed::identity()), Eigen::Vector3d::Zero());
    EXPECT_EQ(camera_center(Posed{Eigen::Vector3d::Zero(), Eigen::Vector3d(1, 2, 3)}), Eigen::Vector3d(-1, -2, -3));
}

TEST(CameraCenter, MapsToCameraOrigin) {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 200; ++i) {
        const Posed pose{random_rodrigues(rng), Eigen::Vector3d::Random() * 5};
        EXPECT_LT((pose.rotation() * camera_center(pose) + pose.t).norm(), 1e-12);
    }
}

TEST(Pose, FromCenterPlacesCameraAndCanonicalKeepsRotation) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector3d c = Eigen::Vector3d::Random() * 3;
        const Eigen::Matrix3d r_cw = rodrigues_to_matrix(random_rodrigues(rng));
        const Posed p = Posed::from_center(r_cw, c);
        EXPECT_LT((camera_center(p) - c).norm(), 1e-12);
        Posed wrapped = p;
        wrapped.omega = p.omega * (1 - 2 * kPi / p.omega.norm());
        EXPECT_LT((wrapped.canonical().rotation() - p.rotation()).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LE(wrapped.canonical().omega.norm(), kPi + 1e-12);
        EXPECT_EQ(Posed::from_vector(p.vector()).omega, p.omega);
    }
}

TEST(BackProject, PrincipalRayHitsCeilingAboveCamera) {
    const auto k = reference_camera();
    EXPECT_LT((back_project_to_plane(k, Posed::identity(), Eigen::Vector2d(320, 240), 3.0) - Eigen::Vector3d(0, 0, 3)).norm(), 1e-15);
}

TEST(BackProject, InvertsProjection) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> dx(-0.8, 0.8);
    const auto k = reference_camera();
    for (int i = 0; i < 1000; ++i) {
        const Posed pose = random_upward_pose(rng);
        const Eigen::Vector3d c = camera_center(pose);
        const Eigen::Vector3d x(c.x() + dx(rng), c.y() + dx(rng), 3.0);
        const Eigen::Vector2d u = project(k, pose, x);
        EXPECT_LT((back_project_to_plane(k, pose, u, 3.0) - x).norm(), 1e-9);
    }
}

TEST(BackProject, HorizontalPrincipalRayIsParallel) {
    // Optical axis along world +x: the principal ray never reaches a horizontal plane.
    Eigen::Matrix3d r_cw;
    r_cw.col(0) = Eigen::Vector3d(0, -1, 0);
    r_cw.col(1) = Eigen::Vector3d(0, 0, -1);
    r_cw.col(2) = Eigen::Vector3d(1, 0, 0);
    const Posed pose = Posed::from_center(r_cw, Eigen::Vector3d(1, 1, 1));
    try {
        back_project_to_plane(reference_camera(), pose, Eigen::Vector2d(320, 240), 3.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParallelRay);
    }
}

TEST(BackProject, PlaneBehindCameraThrows) {
    const Posed down = testing_support::upward_pose(Eigen::Vector3d(0, 0, 1), 0.0, kPi);
    try {
        back_project_to_plane(reference_camera(), down, Eigen::Vector2d(320, 240), 3.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NegativeDepth);
    }
}

TEST(FovBound, Examples) {
    EXPECT_NEAR(fov_bound(reference_camera()), std::sqrt(1.25), 1e-12);
    EXPECT_NEAR(fov_bound(CameraIntrinsicsd::make(1e12, 1e12, 320, 240, 640, 480)), 1.0, 1e-12);
    EXPECT_NEAR(fov_bound(CameraIntrinsicsd::make(300, 300, 300, 300, 600, 600)), std::sqrt(3.0), 1e-12);
}

TEST(Collinearity, PreservedByProjectionAndBackProjection) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> s(-0.5, 0.5), u(0, 1);
    const auto k = reference_camera();
    for (int i = 0; i < 200; ++i) {
        const Posed pose = random_upward_pose(rng);
        const Eigen::Vector3d c = camera_center(pose);
        const Eigen::Vector3d p0(c.x() + s(rng), c.y() + s(rng), 3), p1(c.x() + s(rng), c.y() + s(rng), 3);
        const Eigen::Vector3d p2 = p0 + u(rng) * (p1 - p0);
        Eigen::Matrix3d m;
        m << project(k, pose, p0).homogeneous(), project(k, pose, p1).homogeneous(), project(k, pose, p2).homogeneous();
        const double scale = (project(k, pose, p1) - project(k, pose, p0)).squaredNorm();
        if (scale < 1.0) continue;
        EXPECT_LT(std::abs(m.determinant()) / scale, 1e-6);
    }
}
