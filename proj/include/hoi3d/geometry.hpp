#pragma once

#include <cmath>

#include <Eigen/Dense>

#include <hoi3d/common.hpp>
#include <hoi3d/pose.hpp>
#include <hoi3d/priors.hpp>

namespace hoi3d {

// Pinhole camera, x right / y down / z forward, optical center at the origin.
struct Camera {
    double focal = 5000.0;
    Eigen::Vector2d principal_point = Eigen::Vector2d::Zero();

    void validate() const { require(focal > 0.0, "camera focal must be positive"); }
};

struct Box2D {
    double u_min = 0.0, v_min = 0.0, u_max = 0.0, v_max = 0.0;

    double width() const { return u_max - u_min; }
    double height() const { return v_max - v_min; }
    double u_mid() const { return 0.5 * (u_min + u_max); }
    double diagonal() const { return std::hypot(width(), height()); }

    void validate() const {
        require(u_min < u_max && v_min < v_max, "degenerate 2D box");
    }
};

inline Box2D union_box(const Box2D& a, const Box2D& b) {
    return Box2D{std::min(a.u_min, b.u_min), std::min(a.v_min, b.v_min),
                 std::max(a.u_max, b.u_max), std::max(a.v_max, b.v_max)};
}

// 3D body summary used by the sphere estimate: joints, depth extremes of the
// recovered body, and the 3D shoulder width the size priors are relative to.
struct BodySummary {
    Joints3D joints3d{};
    double z_min = 0.0;
    double z_max = 0.0;
    double shoulder_width = 0.0;

    void validate() const {
        require(z_min <= z_max, "body depth extremes inverted (z_min > z_max)");
        require(shoulder_width > 0.0, "shoulder width must be positive");
    }
};

enum class Clamped { kNone, kToMin, kToMax };

inline const char* to_string(Clamped c) {
    switch (c) {
        case Clamped::kToMin: return "to_min";
        case Clamped::kToMax: return "to_max";
        default: return "none";
    }
}

struct SphereEstimate {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double radius = 0.0;
    Clamped clamped = Clamped::kNone;
};

inline Eigen::Vector2d project_point(const Camera& cam, const Eigen::Vector3d& p) {
    cam.validate();
    require(p.z() > 0.0, "cannot project point with non-positive depth");
    return Eigen::Vector2d(cam.focal * p.x() / p.z() + cam.principal_point.x(),
                           cam.focal * p.y() / p.z() + cam.principal_point.y());
}

// Sphere center from the object box: the center lies on the mid-vertical
// plane of the box (through the midperpendicular of the top edge) and the
// sphere is tangent to the two planes back-projected from the box's top and
// bottom edges. All three planes pass through the camera center, so the
// system is linear and homogeneous of degree one in the radius. The tangency
// signs follow from requiring z > 0: the solve uses one sign pair and negates
// the solution if it lands behind the camera, which also flips both signed
// distances and leaves the silhouette spanning [v_min, v_max].
inline Eigen::Vector3d solve_sphere_center(const Camera& cam, const Box2D& box,
                                           double radius) {
    cam.validate();
    box.validate();
    require(radius > 0.0, "sphere radius must be positive");

    const double f = cam.focal;
    const double cx = cam.principal_point.x();
    const double cy = cam.principal_point.y();

    const Eigen::Vector3d n_top(0.0, f, -(box.v_min - cy));
    const Eigen::Vector3d n_bot(0.0, f, -(box.v_max - cy));
    const Eigen::Vector3d n_mid(f, 0.0, -(box.u_mid() - cx));

    Eigen::Matrix3d a;
    a.row(0) = n_mid;
    a.row(1) = n_top.normalized();
    a.row(2) = n_bot.normalized();
    Eigen::Vector3d b(0.0, -radius, radius);

    Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
    require(lu.isInvertible(), "singular tangent-plane system");
    Eigen::Vector3d center = lu.solve(b);

    if (center.z() < 0.0) center = -center;
    require(center.z() > 0.0, "sphere center solve produced non-positive depth");
    return center;
}

inline double estimate_radius(const ObjectPrior& prior, const BodySummary& body,
                              const Box2D& box_h, const Box2D& box_o) {
    body.validate();
    double r = prior.ratio * body.shoulder_width;
    if (prior.box_ratio_mode) {
        const double dh = box_h.diagonal();
        const double dob = box_o.diagonal();
        require(dh > 0.0 && dob > 0.0,
                "box_ratio_mode requires boxes with nonzero diagonals");
        r *= dob / dh;
    }
    return r;
}

// Clamp the estimated depth into [gamma_min * z_min, gamma_max * z_max],
// moving to the nearer bound and keeping x/y. Idempotent: a clamped depth
// lies inside the interval, so a second pass returns the input unchanged.
inline SphereEstimate regularize_depth(const SphereEstimate& est,
                                       const ObjectPrior& prior,
                                       const BodySummary& body) {
    require(body.z_min <= body.z_max, "body depth extremes inverted (z_min > z_max)");
    const double lo = prior.gamma_min * body.z_min;
    const double hi = prior.gamma_max * body.z_max;
    require(lo <= hi, "empty depth regularization interval for category '" +
                          prior.category + "'");

    SphereEstimate out = est;
    if (est.center.z() < lo) {
        out.center.z() = lo;
        out.clamped = Clamped::kToMin;
    } else if (est.center.z() > hi) {
        out.center.z() = hi;
        out.clamped = Clamped::kToMax;
    }
    require(out.center.z() > 0.0, "regularized sphere depth is not positive");
    return out;
}

inline SphereEstimate estimate_sphere(const Camera& cam, const Box2D& box_h,
                                      const Box2D& box_o, std::string_view category,
                                      const PriorTable& priors,
                                      const BodySummary& body) {
    const ObjectPrior& prior = priors.lookup(category);
    const double r = estimate_radius(prior, body, box_h, box_o);
    SphereEstimate est;
    est.center = solve_sphere_center(cam, box_o, r);
    est.radius = r;
    est.clamped = Clamped::kNone;
    return regularize_depth(est, prior, body);
}

} // namespace hoi3d
