#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include "lcvlp/error.hpp"
#include "lcvlp/lame_curve.hpp"

namespace lcvlp {

/// Pinhole intrinsics. Image size is carried for visibility checks and the FoV bound.
template <typename Scalar>
struct CameraIntrinsics {
    Scalar fx{1};
    Scalar fy{1};
    Scalar u0{0};
    Scalar v0{0};
    int width{1};
    int height{1};

    static CameraIntrinsics make(Scalar fx, Scalar fy, Scalar u0, Scalar v0, int width, int height) {
        if (!(fx > Scalar(0)) || !(fy > Scalar(0)))
            throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
        if (width <= 0 || height <= 0)
            throw Error(ErrorCode::InvalidArgument, "image size must be positive");
        if (!(u0 > Scalar(0)) || !(u0 < Scalar(width)) || !(v0 > Scalar(0)) || !(v0 < Scalar(height)))
            throw Error(ErrorCode::InvalidArgument, "principal point must lie inside the image");
        return CameraIntrinsics{fx, fy, u0, v0, width, height};
    }

    Mat3<Scalar> matrix() const {
        Mat3<Scalar> k;
        k << fx, Scalar(0), u0, Scalar(0), fy, v0, Scalar(0), Scalar(0), Scalar(1);
        return k;
    }

    /// K^-1 [u, v, 1]^T.
    template <typename Derived>
    Vec3<Scalar> ray(const Eigen::MatrixBase<Derived>& pixel) const {
        return {(pixel(0) - u0) / fx, (pixel(1) - v0) / fy, Scalar(1)};
    }

    template <typename Derived>
    bool contains(const Eigen::MatrixBase<Derived>& pixel) const {
        return pixel(0) >= Scalar(0) && pixel(0) <= Scalar(width - 1) && pixel(1) >= Scalar(0) &&
               pixel(1) <= Scalar(height - 1);
    }

    bool operator==(const CameraIntrinsics&) const = default;
};

using CameraIntrinsicsd = CameraIntrinsics<double>;

/// Camera intrinsics of the reference simulation: f = 800 px, principal point (320, 240), 640x480.
inline CameraIntrinsicsd reference_camera() { return CameraIntrinsicsd::make(800.0, 800.0, 320.0, 240.0, 640, 480); }

template <typename Scalar>
Mat3<Scalar> skew(const Vec3<Scalar>& v) {
    Mat3<Scalar> m;
    m << Scalar(0), -v(2), v(1), v(2), Scalar(0), -v(0), -v(1), v(0), Scalar(0);
    return m;
}

/// Rotation matrix of a Rodrigues vector (axis * angle).
template <typename Scalar>
Mat3<Scalar> rodrigues_to_matrix(const Vec3<Scalar>& omega) {
    using std::cos;
    using std::sin;
    const Scalar angle = omega.norm();
    const Mat3<Scalar> identity = Mat3<Scalar>::Identity();
    if (angle < Scalar(1e-8)) {
        const Mat3<Scalar> w = skew(omega);
        return identity + w + Scalar(0.5) * w * w;
    }
    const Mat3<Scalar> n = skew(Vec3<Scalar>(omega / angle));
    return identity + sin(angle) * n + (Scalar(1) - cos(angle)) * n * n;
}

/// Partial derivatives dR/d(omega_i), i = 0..2.
template <typename Scalar>
std::array<Mat3<Scalar>, 3> rodrigues_derivatives(const Vec3<Scalar>& omega) {
    std::array<Mat3<Scalar>, 3> d;
    const Scalar angle_sq = omega.squaredNorm();
    const Mat3<Scalar> w = skew(omega);
    if (angle_sq < Scalar(1e-12)) {
        for (int i = 0; i < 3; ++i) {
            const Mat3<Scalar> e = skew(Vec3<Scalar>(Vec3<Scalar>::Unit(i)));
            d[i] = e + Scalar(0.5) * (e * w + w * e);
        }
        return d;
    }
    // Closed form: dR/dw_i = (w_i [w]x + [w x (I - R) e_i]x) R / |w|^2.
    const Mat3<Scalar> r = rodrigues_to_matrix(omega);
    const Mat3<Scalar> i_minus_r = Mat3<Scalar>::Identity() - r;
    for (int i = 0; i < 3; ++i) {
        const Vec3<Scalar> v = omega.cross(Vec3<Scalar>(i_minus_r.col(i)));
        d[i] = (omega(i) * w + skew(v)) * r / angle_sq;
    }
    return d;
}

/// Rodrigues vector of a rotation matrix, with norm in [0, pi].
template <typename Scalar>
Vec3<Scalar> matrix_to_rodrigues(const Mat3<Scalar>& r) {
    using std::abs;
    using std::atan2;
    using std::sqrt;
    const Scalar ortho_err = (r.transpose() * r - Mat3<Scalar>::Identity()).cwiseAbs().maxCoeff();
    if (!(ortho_err <= Scalar(1e-6)) || !(r.determinant() > Scalar(0)))
        throw Error(ErrorCode::NotOrthonormal, "matrix is not a proper rotation");

    const Vec3<Scalar> v{Scalar(0.5) * (r(2, 1) - r(1, 2)), Scalar(0.5) * (r(0, 2) - r(2, 0)),
                         Scalar(0.5) * (r(1, 0) - r(0, 1))};
    const Scalar sin_angle = v.norm();
    const Scalar cos_angle = Scalar(0.5) * (r.trace() - Scalar(1));
    const Scalar angle = atan2(sin_angle, cos_angle);

    if (sin_angle < Scalar(1e-7) && cos_angle > Scalar(0)) {
        return v * (Scalar(1) + angle * angle / Scalar(6));
    }
    if (cos_angle > Scalar(-0.5)) {
        return v * (angle / sin_angle);
    }
    // Near pi: the symmetric part is cos*I + (1 - cos) n n^T.
    const Mat3<Scalar> b = Scalar(0.5) * (r + r.transpose()) - cos_angle * Mat3<Scalar>::Identity();
    int k = 0;
    b.diagonal().maxCoeff(&k);
    Vec3<Scalar> axis = b.col(k);
    axis.normalize();
    if (axis.dot(v) < Scalar(0)) axis = -axis;
    return axis * angle;
}

/// Camera extrinsics: x_camera = R(omega) * x_world + t.
template <typename Scalar>
struct Pose {
    Vec3<Scalar> omega{Vec3<Scalar>::Zero()};
    Vec3<Scalar> t{Vec3<Scalar>::Zero()};

    static Pose identity() { return Pose{}; }

    static Pose from_rotation(const Mat3<Scalar>& r, const Vec3<Scalar>& t) {
        return Pose{matrix_to_rodrigues(r), t};
    }

    /// Pose whose optical center sits at `center` with camera-to-world rotation `r_cw`.
    static Pose from_center(const Mat3<Scalar>& r_cw, const Vec3<Scalar>& center) {
        const Mat3<Scalar> r = r_cw.transpose();
        return Pose{matrix_to_rodrigues(r), -r * center};
    }

    Mat3<Scalar> rotation() const { return rodrigues_to_matrix(omega); }

    /// Same rotation with |omega| <= pi.
    Pose canonical() const { return Pose{matrix_to_rodrigues(rotation()), t}; }

    Eigen::Matrix<Scalar, 6, 1> vector() const {
        Eigen::Matrix<Scalar, 6, 1> p;
        p << omega, t;
        return p;
    }

    static Pose from_vector(const Eigen::Matrix<Scalar, 6, 1>& p) {
        return Pose{p.template head<3>(), p.template tail<3>()};
    }
};

using Posed = Pose<double>;

/// Optical center in world coordinates, c = -R^T t.
template <typename Scalar>
Vec3<Scalar> camera_center(const Pose<Scalar>& pose) {
    return -(pose.rotation().transpose() * pose.t);
}

template <typename Scalar>
Vec2<Scalar> project(const CameraIntrinsics<Scalar>& k, const Pose<Scalar>& pose, const Vec3<Scalar>& x) {
    const Vec3<Scalar> xc = pose.rotation() * x + pose.t;
    if (!(xc(2) > Scalar(1e-9))) throw Error(ErrorCode::BehindCamera, "point is behind the camera");
    return {k.fx * xc(0) / xc(2) + k.u0, k.fy * xc(1) / xc(2) + k.v0};
}

/// Intersects the viewing ray of `pixel` with the plane z = z0.
template <typename Scalar, typename Derived>
Vec3<Scalar> back_project_to_plane(const CameraIntrinsics<Scalar>& k, const Pose<Scalar>& pose,
                                   const Eigen::MatrixBase<Derived>& pixel, Scalar z0) {
    using std::abs;
    const Mat3<Scalar> r = pose.rotation();
    const Vec3<Scalar> d = k.ray(pixel);
    const Scalar denom = r.col(2).dot(d);
    if (!(abs(denom) > Scalar(1e-9))) throw Error(ErrorCode::ParallelRay, "viewing ray is parallel to the plane");
    const Scalar depth = (z0 + r.col(2).dot(pose.t)) / denom;
    if (!(depth > Scalar(0))) throw Error(ErrorCode::NegativeDepth, "plane lies behind the camera");
    Vec3<Scalar> x = r.transpose() * (depth * d - pose.t);
    x(2) = z0;
    return x;
}

/// sqrt(1 + tan^2(ax) + tan^2(ay)) with the half field of view taken from half the image size.
template <typename Scalar>
Scalar fov_bound(const CameraIntrinsics<Scalar>& k) {
    using std::sqrt;
    const Scalar tx = Scalar(k.width) / Scalar(2) / k.fx;
    const Scalar ty = Scalar(k.height) / Scalar(2) / k.fy;
    return sqrt(Scalar(1) + tx * tx + ty * ty);
}

} // namespace lcvlp
