#pragma once

#include <array>
#include <string>

#include <Eigen/Core>

#include <hoi3d/common.hpp>

namespace hoi3d {

inline constexpr int kJointCount = 17;

// Canonical 17-joint order used throughout. It follows the familiar
// nose/eyes/ears/... keypoint order except that the root slot holds the
// pelvis (the volume origin) and the eye slots are treated as pupils
// (the unit-length reference).
enum Joint : int {
    kPelvis = 0,
    kLeftPupil = 1,
    kRightPupil = 2,
    kLeftEar = 3,
    kRightEar = 4,
    kLeftShoulder = 5,
    kRightShoulder = 6,
    kLeftElbow = 7,
    kRightElbow = 8,
    kLeftWrist = 9,
    kRightWrist = 10,
    kLeftHip = 11,
    kRightHip = 12,
    kLeftKnee = 13,
    kRightKnee = 14,
    kLeftAnkle = 15,
    kRightAnkle = 16,
};

inline const std::array<std::string, kJointCount>& part_names() {
    static const std::array<std::string, kJointCount> names = {
        "pelvis",        "left_pupil",    "right_pupil", "left_ear",
        "right_ear",     "left_shoulder", "right_shoulder", "left_elbow",
        "right_elbow",   "left_wrist",    "right_wrist", "left_hip",
        "right_hip",     "left_knee",     "right_knee",  "left_ankle",
        "right_ankle"};
    return names;
}

// A 2D pose: 17 image-plane joints plus per-joint visibility.
struct Pose2D {
    std::array<Eigen::Vector2d, kJointCount> joints{};
    std::array<bool, kJointCount> visible{};

    int count_visible() const {
        int n = 0;
        for (bool v : visible) n += v ? 1 : 0;
        return n;
    }
};

using Joints3D = std::array<Eigen::Vector3d, kJointCount>;

} // namespace hoi3d
