#pragma once

#include <cmath>
#include <vector>

#include <hoi3d/common.hpp>
#include <hoi3d/geometry.hpp>
#include <hoi3d/pose.hpp>

namespace hoi3d {

inline constexpr int kMapSize = 64;

// Dense channels-first grid, row-major within a channel.
struct Grid {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Grid() = default;
    Grid(int c, int h, int w) : channels(c), height(h), width(w), data(c * h * w, 0.0) {}

    double& at(int c, int y, int x) { return data[(c * height + y) * width + x]; }
    double at(int c, int y, int x) const { return data[(c * height + y) * width + x]; }
};

using SpatialMap = Grid; // 2 x 64 x 64, binary
using PoseMap = Grid;    // 17 x 64 x 64, [0, 1]

// Continuous cell-index coordinate of an image point inside `frame`:
// the center of cell i maps to exactly i.
inline Eigen::Vector2d image_to_cell(const Box2D& frame, const Eigen::Vector2d& p,
                                     int size = kMapSize) {
    return Eigen::Vector2d((p.x() - frame.u_min) / frame.width() * size - 0.5,
                           (p.y() - frame.v_min) / frame.height() * size - 0.5);
}

inline int cell_clamp(double cell_coord, int size) {
    const int c = static_cast<int>(std::floor(cell_coord + 0.5));
    return std::min(size - 1, std::max(0, c));
}

// Two binary channels (human, object) rasterized in the union frame of the
// pair: a cell is 1 when its center lies inside the box. A box too small to
// cover any cell center still marks the cell containing its own center, so
// valid boxes always produce a nonempty channel.
inline SpatialMap make_spatial_map(const Box2D& box_h, const Box2D& box_o,
                                   int size = kMapSize) {
    box_h.validate();
    box_o.validate();
    const Box2D frame = union_box(box_h, box_o);
    frame.validate();

    SpatialMap map(2, size, size);
    const Box2D* boxes[2] = {&box_h, &box_o};
    const double cw = frame.width() / size;
    const double ch = frame.height() / size;
    for (int c = 0; c < 2; ++c) {
        const Box2D& b = *boxes[c];
        bool any = false;
        for (int y = 0; y < size; ++y) {
            const double v = frame.v_min + (y + 0.5) * ch;
            for (int x = 0; x < size; ++x) {
                const double u = frame.u_min + (x + 0.5) * cw;
                if (u >= b.u_min && u <= b.u_max && v >= b.v_min && v <= b.v_max) {
                    map.at(c, y, x) = 1.0;
                    any = true;
                }
            }
        }
        if (!any) {
            const Eigen::Vector2d center(b.u_mid(), 0.5 * (b.v_min + b.v_max));
            const Eigen::Vector2d cc = image_to_cell(frame, center, size);
            map.at(c, cell_clamp(cc.y(), size), cell_clamp(cc.x(), size)) = 1.0;
        }
    }
    return map;
}

// 17 heatmap channels: an unnormalized Gaussian of std `sigma` (in cells)
// with peak value 1 at the joint's cell; invisible joints give a zero channel.
// Joints falling outside the frame are clamped to the border cell.
inline PoseMap make_pose_map(const Pose2D& pose, const Box2D& frame,
                             double sigma = 1.5, int size = kMapSize) {
    frame.validate();
    require(sigma > 0.0, "pose map sigma must be positive");
    PoseMap map(kJointCount, size, size);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int j = 0; j < kJointCount; ++j) {
        if (!pose.visible[j]) continue;
        const Eigen::Vector2d cc = image_to_cell(frame, pose.joints[j], size);
        const int jx = cell_clamp(cc.x(), size);
        const int jy = cell_clamp(cc.y(), size);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const double d2 = double(x - jx) * (x - jx) + double(y - jy) * (y - jy);
                map.at(j, y, x) = std::exp(-d2 * inv);
            }
    }
    return map;
}

// Joint positions in continuous cell coordinates of the union frame, for use
// with the joint attention pooling. Invisible joints are reported too; the
// caller decides whether to use them.
inline std::array<Eigen::Vector2d, kJointCount> joints_to_cells(
    const Pose2D& pose, const Box2D& frame, int size = kMapSize) {
    std::array<Eigen::Vector2d, kJointCount> out;
    for (int j = 0; j < kJointCount; ++j)
        out[j] = image_to_cell(frame, pose.joints[j], size);
    return out;
}

} // namespace hoi3d
