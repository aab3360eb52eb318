#pragma once

#include <array>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <nlohmann/json.hpp>

#include <hoi3d/common.hpp>
#include <hoi3d/geometry.hpp>
#include <hoi3d/pose.hpp>
#include <hoi3d/rng.hpp>

namespace hoi3d {

inline constexpr int kBodyPointCount = 916;
inline constexpr int kSpherePointCount = 312;
inline constexpr int kVolumePointCount = kBodyPointCount + kSpherePointCount;
inline constexpr int kSetCount = kJointCount + 1;
inline constexpr int kObjectLabel = kJointCount + 1; // labels are 1..17 body, 18 object

// Recovered body: mesh vertices (or a template fallback) plus 17 joints in
// the same camera frame.
struct BodyPoints {
    std::vector<Eigen::Vector3d> vertices;
    Joints3D joints{};
};

// Deterministic farthest-point sampling. The start index comes from the seed;
// ties on the max-min distance go to the lowest index.
inline std::vector<int> farthest_point_indices(const std::vector<Eigen::Vector3d>& pts,
                                               int n, std::uint64_t seed) {
    const int total = static_cast<int>(pts.size());
    require(n > 0, "sample count must be positive");
    require(total >= n, "too few points for farthest-point sampling (" +
                            std::to_string(total) + " < " + std::to_string(n) + ")");

    std::vector<int> picked;
    picked.reserve(n);
    Rng rng(seed);
    int current = static_cast<int>(rng.index(static_cast<std::size_t>(total)));
    picked.push_back(current);

    std::vector<double> min_d2(total, std::numeric_limits<double>::infinity());
    for (int step = 1; step < n; ++step) {
        const Eigen::Vector3d& last = pts[current];
        int best = -1;
        double best_d2 = -1.0;
        for (int i = 0; i < total; ++i) {
            const double d2 = (pts[i] - last).squaredNorm();
            if (d2 < min_d2[i]) min_d2[i] = d2;
            if (min_d2[i] > best_d2) {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        current = best;
        picked.push_back(current);
        min_d2[current] = -1.0; // never re-picked
    }
    return picked;
}

inline std::vector<Eigen::Vector3d> downsample_body(const BodyPoints& body,
                                                    int n = kBodyPointCount,
                                                    std::uint64_t seed = 0) {
    const auto idx = farthest_point_indices(body.vertices, n, seed);
    std::vector<Eigen::Vector3d> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(body.vertices[i]);
    return out;
}

// Uniform points on the sphere surface (area-uniform via the z/angle map).
inline std::vector<Eigen::Vector3d> sample_sphere_surface(const SphereEstimate& est,
                                                          int n = kSpherePointCount,
                                                          std::uint64_t seed = 0) {
    require(est.radius > 0.0, "sphere radius must be positive");
    require(n >= 0, "sample count must be non-negative");
    Rng rng(seed);
    std::vector<Eigen::Vector3d> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * rng.uniform();
        const double phi = 2.0 * kPi * rng.uniform();
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        const Eigen::Vector3d dir(s * std::cos(phi), s * std::sin(phi), z);
        out.push_back(est.center + est.radius * dir);
    }
    return out;
}

// Similarity transform x -> scale * R * (x - origin).
struct Similarity {
    double scale = 1.0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
        return scale * (rotation * (p - origin));
    }
};

struct NormalizedFrame {
    Similarity transform;
    std::vector<Eigen::Vector3d> body;
    std::vector<Eigen::Vector3d> sphere;
    Joints3D joints{};
};

// Canonical volume frame: pelvis at the origin, gravity along -z, the
// left->right shoulder direction at zero azimuth (rotated about z only, so
// any out-of-horizontal shoulder tilt is preserved), and the pupil distance
// as the unit length.
inline NormalizedFrame align_and_normalize(const std::vector<Eigen::Vector3d>& body,
                                           const std::vector<Eigen::Vector3d>& sphere,
                                           const Joints3D& joints,
                                           const Eigen::Vector3d& gravity) {
    require(gravity.norm() > 0.0, "gravity vector must be nonzero");
    const Eigen::Vector3d pelvis = joints[kPelvis];
    const double pupil_dist = (joints[kLeftPupil] - joints[kRightPupil]).norm();
    require(pupil_dist > 1e-12, "coincident pupil joints (zero normalization scale)");

    const Eigen::Quaterniond q = Eigen::Quaterniond::FromTwoVectors(
        gravity.normalized(), Eigen::Vector3d(0.0, 0.0, -1.0));
    const Eigen::Matrix3d r1 = q.toRotationMatrix();

    const Eigen::Vector3d shoulder =
        joints[kRightShoulder] - joints[kLeftShoulder];
    require(shoulder.norm() > 1e-12, "coincident shoulder joints");
    const Eigen::Vector3d d = r1 * shoulder;
    const double horiz = std::hypot(d.x(), d.y());
    require(horiz > 1e-9 * shoulder.norm(),
            "shoulder line parallel to gravity (degenerate frame)");
    const double phi = std::atan2(d.y(), d.x());
    const Eigen::Matrix3d r2 =
        Eigen::AngleAxisd(-phi, Eigen::Vector3d::UnitZ()).toRotationMatrix();

    Similarity t;
    t.scale = 1.0 / pupil_dist;
    t.rotation = r2 * r1;
    t.origin = pelvis;

    NormalizedFrame out;
    out.transform = t;
    out.body.reserve(body.size());
    for (const auto& p : body) out.body.push_back(t.apply(p));
    out.sphere.reserve(sphere.size());
    for (const auto& p : sphere) out.sphere.push_back(t.apply(p));
    for (int j = 0; j < kJointCount; ++j) out.joints[j] = t.apply(joints[j]);
    return out;
}

struct Partition {
    std::vector<int> labels;                      // per point, 1..18
    std::array<std::vector<int>, kSetCount> sets; // point indices per set
};

// Body points go to the nearest joint (ties to the lower joint index);
// everything after the first n_body points is the object set.
inline Partition assign_part_sets(const std::vector<Eigen::Vector3d>& points,
                                  int n_body, const Joints3D& joints) {
    require(n_body >= 0 && n_body <= static_cast<int>(points.size()),
            "invalid body point count for partition");
    Partition part;
    part.labels.resize(points.size());
    for (int i = 0; i < static_cast<int>(points.size()); ++i) {
        int label = kObjectLabel;
        if (i < n_body) {
            int best = 0;
            double best_d2 = (points[i] - joints[0]).squaredNorm();
            for (int j = 1; j < kJointCount; ++j) {
                const double d2 = (points[i] - joints[j]).squaredNorm();
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = j;
                }
            }
            label = best + 1;
        }
        part.labels[i] = label;
        part.sets[label - 1].push_back(i);
    }
    return part;
}

struct PcaResult {
    Eigen::MatrixXd projected;   // V x k
    Eigen::MatrixXd components;  // D x k, orthonormal columns, descending variance
    Eigen::VectorXd eigenvalues; // all D, descending
    Eigen::VectorXd mean;        // D
};

// PCA of the rows of `data`. Component signs are fixed so that each
// component's largest-magnitude coordinate (first such index on ties) is
// positive.
inline PcaResult pca_reduce(const Eigen::MatrixXd& data, int k) {
    const int v = static_cast<int>(data.rows());
    const int d = static_cast<int>(data.cols());
    require(k >= 1, "PCA target dimension must be positive");
    require(k <= std::min(v, d), "PCA target dimension " + std::to_string(k) +
                                     " exceeds min(rows, cols) = " +
                                     std::to_string(std::min(v, d)));

    PcaResult res;
    res.mean = data.colwise().mean();
    const Eigen::MatrixXd centered = data.rowwise() - res.mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    require(solver.info() == Eigen::Success, "PCA eigendecomposition failed");

    res.eigenvalues.resize(d);
    res.components.resize(d, k);
    for (int c = 0; c < d; ++c) res.eigenvalues[c] = solver.eigenvalues()[d - 1 - c];
    for (int c = 0; c < k; ++c) {
        Eigen::VectorXd comp = solver.eigenvectors().col(d - 1 - c);
        int arg = 0;
        for (int i = 1; i < d; ++i)
            if (std::abs(comp[i]) > std::abs(comp[arg])) arg = i;
        if (comp[arg] < 0.0) comp = -comp;
        res.components.col(c) = comp;
    }
    res.projected = centered * res.components;
    return res;
}

// The normalized spatial configuration volume: 916 body points followed by
// 312 sphere points, partitioned into 17 part sets plus the object set, each
// set optionally paired with a reduced embedding vector.
struct ConfigurationVolume {
    std::vector<Eigen::Vector3d> points; // body first, then sphere
    std::vector<int> labels;             // 1..17 body part, 18 object
    Joints3D joints{};                   // normalized joints
    std::string category;
    std::vector<std::vector<double>> semantics =
        std::vector<std::vector<double>>(kSetCount); // per set, empty until paired

    std::array<std::vector<int>, kSetCount> sets() const {
        std::array<std::vector<int>, kSetCount> out;
        for (int i = 0; i < static_cast<int>(labels.size()); ++i)
            out[labels[i] - 1].push_back(i);
        return out;
    }
};

inline ConfigurationVolume build_volume(const std::vector<Eigen::Vector3d>& body916,
                                        const std::vector<Eigen::Vector3d>& sphere312,
                                        const Joints3D& normalized_joints,
                                        std::string_view category) {
    require(static_cast<int>(body916.size()) == kBodyPointCount,
            "expected " + std::to_string(kBodyPointCount) + " body points, got " +
                std::to_string(body916.size()));
    require(static_cast<int>(sphere312.size()) == kSpherePointCount,
            "expected " + std::to_string(kSpherePointCount) + " sphere points, got " +
                std::to_string(sphere312.size()));
    ConfigurationVolume vol;
    vol.points = body916;
    vol.points.insert(vol.points.end(), sphere312.begin(), sphere312.end());
    vol.joints = normalized_joints;
    vol.category = std::string(category);
    vol.labels =
        assign_part_sets(vol.points, kBodyPointCount, normalized_joints).labels;
    return vol;
}

using EmbeddingTable = std::map<std::string, Eigen::VectorXd>;

// Whitespace-separated `name v1 ... vD` rows, one per line.
inline EmbeddingTable parse_embedding_table(std::istream& in,
                                            const std::string& source_name) {
    EmbeddingTable table;
    std::string line;
    int row = 0;
    long dim = -1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::istringstream ls(line);
        std::string name;
        ls >> name;
        std::vector<double> vals;
        double x;
        while (ls >> x) vals.push_back(x);
        const std::string where = source_name + ":" + std::to_string(row);
        require(!vals.empty(), where + ": no vector components");
        if (dim < 0) dim = static_cast<long>(vals.size());
        require(static_cast<long>(vals.size()) == dim,
                where + ": inconsistent vector dimension");
        require(table.emplace(name, Eigen::Map<Eigen::VectorXd>(vals.data(),
                                                                vals.size()))
                    .second,
                where + ": duplicate name '" + name + "'");
    }
    require(!table.empty(), source_name + ": empty embedding table");
    return table;
}

inline EmbeddingTable load_embedding_table(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open embedding table '" + path + "'");
    return parse_embedding_table(in, path);
}

// Pair every set with the PCA-reduced embedding of its part name (sets 1..17)
// or of the object category (set 18). The PCA basis comes from the full
// table, so two volumes sharing a category carry identical object semantics.
inline void pair_semantics(ConfigurationVolume& vol, const EmbeddingTable& table,
                           int k) {
    std::vector<std::string> names;
    names.reserve(table.size());
    for (const auto& [name, vec] : table) names.push_back(name);

    const long dim = table.begin()->second.size();
    Eigen::MatrixXd data(static_cast<long>(names.size()), dim);
    for (std::size_t i = 0; i < names.size(); ++i)
        data.row(static_cast<long>(i)) = table.at(names[i]).transpose();
    const PcaResult pca = pca_reduce(data, k);

    auto reduced_row = [&](const std::string& name, const std::string& role) {
        const auto it = std::lower_bound(names.begin(), names.end(), name);
        if (it == names.end() || *it != name)
            fail("embedding table is missing " + role + " '" + name + "'");
        const long r = static_cast<long>(it - names.begin());
        std::vector<double> out(k);
        for (int c = 0; c < k; ++c) out[c] = pca.projected(r, c);
        return out;
    };

    for (int j = 0; j < kJointCount; ++j)
        vol.semantics[j] = reduced_row(part_names()[j], "part name");
    vol.semantics[kObjectLabel - 1] = reduced_row(vol.category, "object category");
}

// ---- serialization ----

inline void write_volume_ply(const ConfigurationVolume& vol, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "cannot write PLY '" + path + "'");
    out << "ply\n"
        << "format ascii 1.0\n"
        << "comment hoi3d spatial configuration volume\n"
        << "element vertex " << vol.points.size() << "\n"
        << "property double x\n"
        << "property double y\n"
        << "property double z\n"
        << "property int part\n"
        << "end_header\n";
    for (std::size_t i = 0; i < vol.points.size(); ++i) {
        const auto& p = vol.points[i];
        out << format_double(p.x()) << ' ' << format_double(p.y()) << ' '
            << format_double(p.z()) << ' ' << vol.labels[i] << "\n";
    }
    require(out.good(), "write failed for PLY '" + path + "'");
}

// Reads the PLY layout produced by write_volume_ply (points + part labels).
inline ConfigurationVolume read_volume_ply(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open PLY '" + path + "'");
    std::string line;
    require(std::getline(in, line) && detail::trim(line) == "ply",
            path + ": not a PLY file");
    long vertex_count = -1;
    std::vector<std::string> properties;
    while (std::getline(in, line)) {
        const std::string t = detail::trim(line);
        if (t == "end_header") break;
        std::istringstream ls(t);
        std::string tok;
        ls >> tok;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            require(fmt == "ascii", path + ": only ascii PLY is supported");
        } else if (tok == "element") {
            std::string what;
            ls >> what >> vertex_count;
            require(what == "vertex", path + ": unexpected element '" + what + "'");
        } else if (tok == "property") {
            std::string type, name;
            ls >> type >> name;
            properties.push_back(name);
        }
    }
    require(vertex_count >= 0, path + ": missing vertex element");
    require(properties == std::vector<std::string>({"x", "y", "z", "part"}),
            path + ": unexpected vertex properties");

    ConfigurationVolume vol;
    vol.points.resize(vertex_count);
    vol.labels.resize(vertex_count);
    for (long i = 0; i < vertex_count; ++i) {
        double x, y, z;
        int part;
        require(static_cast<bool>(in >> x >> y >> z >> part),
                path + ": truncated vertex data at row " + std::to_string(i));
        vol.points[i] = Eigen::Vector3d(x, y, z);
        require(part >= 1 && part <= kObjectLabel,
                path + ": part label out of range at row " + std::to_string(i));
        vol.labels[i] = part;
    }
    return vol;
}

inline nlohmann::json volume_to_json(const ConfigurationVolume& vol) {
    nlohmann::json j;
    j["format"] = "hoi3d-volume";
    j["category"] = vol.category;
    j["part_names"] = part_names();
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : vol.points) pts.push_back({p.x(), p.y(), p.z()});
    j["points"] = std::move(pts);
    j["labels"] = vol.labels;
    nlohmann::json joints = nlohmann::json::array();
    for (const auto& p : vol.joints) joints.push_back({p.x(), p.y(), p.z()});
    j["joints"] = std::move(joints);
    j["semantics"] = vol.semantics;
    return j;
}

inline ConfigurationVolume volume_from_json(const nlohmann::json& j,
                                            const std::string& source_name) {
    require(j.value("format", "") == "hoi3d-volume",
            source_name + ": not a volume JSON document");
    ConfigurationVolume vol;
    vol.category = j.at("category").get<std::string>();
    for (const auto& p : j.at("points"))
        vol.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(),
                                p.at(2).get<double>());
    vol.labels = j.at("labels").get<std::vector<int>>();
    require(vol.labels.size() == vol.points.size(),
            source_name + ": labels/points size mismatch");
    const auto& joints = j.at("joints");
    require(joints.size() == kJointCount, source_name + ": expected 17 joints");
    for (int i = 0; i < kJointCount; ++i)
        vol.joints[i] = Eigen::Vector3d(joints[i].at(0).get<double>(),
                                        joints[i].at(1).get<double>(),
                                        joints[i].at(2).get<double>());
    vol.semantics = j.at("semantics").get<std::vector<std::vector<double>>>();
    require(vol.semantics.size() == kSetCount,
            source_name + ": expected 18 semantic slots");
    return vol;
}

inline void write_volume_json(const ConfigurationVolume& vol, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "cannot write volume JSON '" + path + "'");
    out << volume_to_json(vol).dump(2) << "\n";
    require(out.good(), "write failed for volume JSON '" + path + "'");
}

inline ConfigurationVolume read_volume_json(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open volume JSON '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(path + ": JSON parse error: " + e.what());
    }
    return volume_from_json(j, path);
}

enum class VolumeFormat { kPly, kJson };

inline void write_volume(const ConfigurationVolume& vol, const std::string& path,
                         VolumeFormat format) {
    if (format == VolumeFormat::kPly)
        write_volume_ply(vol, path);
    else
        write_volume_json(vol, path);
}

} // namespace hoi3d
