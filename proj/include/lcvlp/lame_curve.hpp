#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lcvlp/error.hpp"

namespace lcvlp {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

/// Power terms |u|^gamma are capped here so that gamma = 100 stays finite off the curve.
inline constexpr double kPowerSaturation = 1e12;

/// Reduces an angle to [0, 2*pi).
template <typename Scalar>
Scalar wrap_two_pi(Scalar angle) {
    using std::fmod;
    const Scalar two_pi = Scalar(2 * std::numbers::pi);
    Scalar r = fmod(angle, two_pi);
    if (r < Scalar(0)) r += two_pi;
    if (r >= two_pi) r = Scalar(0);
    return r;
}

/// Planar Lamé curve |x'/a|^gamma + |y'/b|^gamma = 1 on the ceiling plane z = z0, where (x', y') is
/// the offset from the center expressed in a frame rotated by phi about the world z-axis.
///
/// Always build through make(): it validates the parameters, orders the semi-axes so a >= b and
/// wraps phi into [0, 2*pi).
template <typename Scalar>
struct LameCurve {
    Scalar center_x{0};
    Scalar center_y{0};
    Scalar z0{0};
    Scalar a{1};
    Scalar b{1};
    Scalar gamma{2};
    Scalar phi{0};

    static LameCurve make(Scalar center_x, Scalar center_y, Scalar z0, Scalar a, Scalar b, Scalar gamma,
                          Scalar phi = Scalar(0)) {
        using std::isfinite;
        if (!isfinite(center_x) || !isfinite(center_y) || !isfinite(z0) || !isfinite(phi))
            throw Error(ErrorCode::InvalidCurve, "curve parameters must be finite");
        if (!(a > Scalar(0)) || !(b > Scalar(0)) || !isfinite(a) || !isfinite(b))
            throw Error(ErrorCode::InvalidCurve, "semi-axes must be positive and finite");
        if (!(gamma >= Scalar(1)) || !isfinite(gamma))
            throw Error(ErrorCode::InvalidCurve, "curve order must satisfy gamma >= 1");
        if (a < b) {
            std::swap(a, b);
            phi += Scalar(std::numbers::pi / 2);
        }
        return LameCurve{center_x, center_y, z0, a, b, gamma, wrap_two_pi(phi)};
    }

    Vec3<Scalar> center() const { return {center_x, center_y, z0}; }

    bool operator==(const LameCurve&) const = default;
};

using LameCurved = LameCurve<double>;

namespace detail {

/// |u|^gamma evaluated as exp(gamma * ln|u|), saturated at kPowerSaturation.
template <typename Scalar>
Scalar saturated_power(Scalar u, Scalar gamma) {
    using std::abs;
    using std::exp;
    using std::log;
    const Scalar m = abs(u);
    if (m == Scalar(0)) return Scalar(0);
    const Scalar log_value = gamma * log(m);
    if (log_value > Scalar(std::log(kPowerSaturation))) return Scalar(kPowerSaturation);
    return exp(log_value);
}

/// d|u|^gamma / du, zero where the power saturates. At u = 0 with gamma = 1 the right-hand
/// derivative (+1) is returned.
template <typename Scalar>
Scalar saturated_power_derivative(Scalar u, Scalar gamma) {
    using std::abs;
    using std::exp;
    using std::log;
    const Scalar m = abs(u);
    if (m == Scalar(0)) return gamma == Scalar(1) ? Scalar(1) : Scalar(0);
    if (gamma * log(m) > Scalar(std::log(kPowerSaturation))) return Scalar(0);
    const Scalar d = gamma * exp((gamma - Scalar(1)) * log(m));
    return u > Scalar(0) ? d : -d;
}

/// ln(|cos t|^g / a^g + |sin t|^g / b^g), evaluated without forming the powers.
template <typename Scalar>
Scalar log_polar_sum(const LameCurve<Scalar>& curve, Scalar c, Scalar s) {
    using std::abs;
    using std::exp;
    using std::log;
    constexpr Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();
    const Scalar p = abs(c) > Scalar(0) ? curve.gamma * (log(abs(c)) - log(curve.a)) : neg_inf;
    const Scalar q = abs(s) > Scalar(0) ? curve.gamma * (log(abs(s)) - log(curve.b)) : neg_inf;
    const Scalar m = p > q ? p : q;
    return m + log(exp(p - m) + exp(q - m));
}

} // namespace detail

/// Polar radius of the curve at an angle measured in the curve's own (rotated) frame.
template <typename Scalar>
Scalar polar_radius(const LameCurve<Scalar>& curve, Scalar theta_local) {
    using std::cos;
    using std::exp;
    using std::sin;
    const Scalar t = wrap_two_pi(theta_local);
    const Scalar log_sum = detail::log_polar_sum(curve, cos(t), sin(t));
    return exp(-log_sum / curve.gamma);
}

/// d(rho)/d(theta) in the local frame. At gamma = 1 axis corners the one-sided value from above
/// is returned.
template <typename Scalar>
Scalar polar_radius_derivative(const LameCurve<Scalar>& curve, Scalar theta_local) {
    using std::abs;
    using std::cos;
    using std::exp;
    using std::log;
    using std::sin;
    const Scalar t = wrap_two_pi(theta_local);
    const Scalar c = cos(t);
    const Scalar s = sin(t);
    const Scalar log_sum = detail::log_polar_sum(curve, c, s);
    const Scalar rho = exp(-log_sum / curve.gamma);
    // sgn(x) |x|^(gamma-1) / axis^gamma / S, with the sign at x = 0 taken from the direction of travel.
    auto coefficient = [&](Scalar x, Scalar axis, Scalar sign_at_zero) -> Scalar {
        if (x == Scalar(0)) {
            return curve.gamma == Scalar(1) ? sign_at_zero * exp(-log(axis) - log_sum) : Scalar(0);
        }
        const Scalar v = exp((curve.gamma - Scalar(1)) * log(abs(x)) - curve.gamma * log(axis) - log_sum);
        return x > Scalar(0) ? v : -v;
    };
    const Scalar sign_c = s > Scalar(0) ? Scalar(-1) : Scalar(1);
    const Scalar sign_s = c < Scalar(0) ? Scalar(-1) : Scalar(1);
    return rho * (coefficient(c, curve.a, sign_c) * s - coefficient(s, curve.b, sign_s) * c);
}

/// World point on the curve at a global polar angle about the curve center.
template <typename Scalar>
Vec3<Scalar> point_at(const LameCurve<Scalar>& curve, Scalar theta_global) {
    using std::cos;
    using std::sin;
    const Scalar rho = polar_radius(curve, theta_global - curve.phi);
    return {curve.center_x + rho * cos(theta_global), curve.center_y + rho * sin(theta_global), curve.z0};
}

/// Offset of a world point from the curve center, expressed in the curve's rotated frame.
template <typename Scalar, typename Derived>
Vec2<Scalar> to_local(const LameCurve<Scalar>& curve, const Eigen::MatrixBase<Derived>& point) {
    using std::cos;
    using std::sin;
    const Scalar dx = point(0) - curve.center_x;
    const Scalar dy = point(1) - curve.center_y;
    const Scalar c = cos(curve.phi);
    const Scalar s = sin(curve.phi);
    return {c * dx + s * dy, -s * dx + c * dy};
}

/// Signed algebraic distance: 0 on the curve, negative inside, positive outside. Only the x and y
/// coordinates of the point are used.
template <typename Scalar, typename Derived>
Scalar algebraic_distance(const LameCurve<Scalar>& curve, const Eigen::MatrixBase<Derived>& point) {
    const Vec2<Scalar> local = to_local(curve, point);
    return detail::saturated_power(Scalar(local(0) / curve.a), curve.gamma) +
           detail::saturated_power(Scalar(local(1) / curve.b), curve.gamma) - Scalar(1);
}

/// Gradient of algebraic_distance with respect to the world (x, y) of the point.
template <typename Scalar, typename Derived>
Vec2<Scalar> algebraic_distance_gradient(const LameCurve<Scalar>& curve, const Eigen::MatrixBase<Derived>& point) {
    using std::cos;
    using std::sin;
    const Vec2<Scalar> local = to_local(curve, point);
    const Scalar gx = detail::saturated_power_derivative(Scalar(local(0) / curve.a), curve.gamma) / curve.a;
    const Scalar gy = detail::saturated_power_derivative(Scalar(local(1) / curve.b), curve.gamma) / curve.b;
    const Scalar c = cos(curve.phi);
    const Scalar s = sin(curve.phi);
    return {c * gx - s * gy, s * gx + c * gy};
}

/// M points uniformly spaced in local polar angle, starting at local angle beta.
template <typename Scalar>
std::vector<Vec3<Scalar>> sample_polar(const LameCurve<Scalar>& curve, Scalar beta, int count) {
    if (count < 4) throw Error(ErrorCode::InvalidArgument, "sample_polar needs at least 4 samples");
    std::vector<Vec3<Scalar>> points;
    points.reserve(static_cast<std::size_t>(count));
    const Scalar step = Scalar(2 * std::numbers::pi) / Scalar(count);
    for (int k = 0; k < count; ++k) {
        const Scalar theta_local = wrap_two_pi(Scalar(beta + step * Scalar(k)));
        points.push_back(point_at(curve, Scalar(curve.phi + theta_local)));
    }
    return points;
}

/// d(ell)/d(theta) = sqrt(rho'^2 + rho^2); integrates to the perimeter over a full turn.
template <typename Scalar>
Scalar arc_length_differential(const LameCurve<Scalar>& curve, Scalar theta_local) {
    using std::sqrt;
    const Scalar rho = polar_radius(curve, theta_local);
    const Scalar drho = polar_radius_derivative(curve, theta_local);
    return sqrt(drho * drho + rho * rho);
}

} // namespace lcvlp
