#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <nlohmann/json.hpp>

#include <hoi3d/common.hpp>
#include <hoi3d/maps2d.hpp>
#include <hoi3d/rng.hpp>
#include <hoi3d/volume.hpp>

namespace hoi3d {

inline constexpr int kPointFeatureDim = 384;
inline constexpr int kHumanFeatureDim = 1024;
inline constexpr int kAttentionInputDim = kPointFeatureDim + kHumanFeatureDim; // 1408
inline constexpr int kAttentionHiddenDim = 512;

// Concatenated 2D feature grid (H x W positions, C channels per position).
struct FeatureGrid2D {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data; // row-major per position, channel fastest

    FeatureGrid2D() = default;
    FeatureGrid2D(int h, int w, int c)
        : height(h), width(w), channels(c), data(h * w * c, 0.0) {}

    double& at(int y, int x, int c) { return data[(y * width + x) * channels + c]; }
    double at(int y, int x, int c) const { return data[(y * width + x) * channels + c]; }
};

// 3D stream features: one 384-vector per volume point and one 1024 human vector.
struct Feature3D {
    Eigen::MatrixXd per_point; // n x 384 (n = 1228 for full volumes)
    Eigen::VectorXd human;     // 1024
};

// 17-way part attention; a point on the probability simplex.
struct PartAttention {
    std::array<double, kJointCount> values{};

    double sum() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }

    void validate() const {
        for (double v : values) require(v >= 0.0, "part attention entry is negative");
        require(std::abs(sum() - 1.0) <= 1e-6, "part attention does not sum to 1");
    }
};

// att2D: softmax over all spatial positions of <global mean feature, f(u,v)>.
inline Grid attention_map_2d(const FeatureGrid2D& f) {
    require(f.height >= 1 && f.width >= 1 && f.channels >= 1,
            "feature grid must be non-empty");
    const int hw = f.height * f.width;
    std::vector<double> g(f.channels, 0.0);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            for (int c = 0; c < f.channels; ++c) g[c] += f.at(y, x, c);
    for (double& v : g) v /= hw;

    Grid att(1, f.height, f.width);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double dot = 0.0;
            for (int c = 0; c < f.channels; ++c) dot += g[c] * f.at(y, x, c);
            att.at(0, y, x) = dot;
            max_logit = std::max(max_logit, dot);
        }
    double denom = 0.0;
    for (double& v : att.data) {
        v = std::exp(v - max_logit);
        denom += v;
    }
    for (double& v : att.data) v /= denom;
    return att;
}

// Distance-kernel pooling of an attention map onto the 17 joints, then
// normalization across joints. Map positions are integer cell indices;
// joints may sit at fractional cell coordinates.
inline PartAttention joint_attention_2d(
    const Grid& att, const std::array<Eigen::Vector2d, kJointCount>& joint_cells) {
    require(att.channels == 1, "attention map must have one channel");
    for (double v : att.data) require(v >= 0.0, "attention map entry is negative");

    std::array<double, kJointCount> pooled{};
    for (int j = 0; j < kJointCount; ++j) {
        double num = 0.0, den = 0.0;
        const double ju = joint_cells[j].x();
        const double jv = joint_cells[j].y();
        for (int y = 0; y < att.height; ++y)
            for (int x = 0; x < att.width; ++x) {
                const double w = 1.0 / (1.0 + std::hypot(x - ju, y - jv));
                num += att.at(0, y, x) * w;
                den += w;
            }
        pooled[j] = num / den;
    }
    double total = 0.0;
    for (double v : pooled) total += v;
    require(total > 0.0, "joint attention pooled to all zeros");

    PartAttention out;
    for (int j = 0; j < kJointCount; ++j) out.values[j] = pooled[j] / total;
    return out;
}

// 1408 -> 512 -> 512 -> 17 head (ReLU between layers, softmax at the end).
class AttentionHead {
public:
    AttentionHead()
        : w1_(kAttentionHiddenDim, kAttentionInputDim), b1_(kAttentionHiddenDim),
          w2_(kAttentionHiddenDim, kAttentionHiddenDim), b2_(kAttentionHiddenDim),
          w3_(kJointCount, kAttentionHiddenDim), b3_(kJointCount) {
        w1_.setZero();
        b1_.setZero();
        w2_.setZero();
        b2_.setZero();
        w3_.setZero();
        b3_.setZero();
    }

    static AttentionHead seeded(std::uint64_t seed) {
        AttentionHead head;
        Rng rng(seed);
        auto init = [&rng](Eigen::MatrixXd& w, Eigen::VectorXd& b) {
            const double s = std::sqrt(6.0 / (w.rows() + w.cols()));
            for (long r = 0; r < w.rows(); ++r)
                for (long c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-s, s);
            b.setZero();
        };
        init(head.w1_, head.b1_);
        init(head.w2_, head.b2_);
        init(head.w3_, head.b3_);
        return head;
    }

    PartAttention evaluate(const Eigen::VectorXd& input) const {
        require(input.size() == kAttentionInputDim,
                "attention head expects a 1408-d input, got " +
                    std::to_string(input.size()));
        const Eigen::VectorXd h1 = (w1_ * input + b1_).cwiseMax(0.0);
        const Eigen::VectorXd h2 = (w2_ * h1 + b2_).cwiseMax(0.0);
        Eigen::VectorXd logits = w3_ * h2 + b3_;
        const double m = logits.maxCoeff();
        PartAttention out;
        double denom = 0.0;
        for (int j = 0; j < kJointCount; ++j) {
            out.values[j] = std::exp(logits[j] - m);
            denom += out.values[j];
        }
        for (int j = 0; j < kJointCount; ++j) out.values[j] /= denom;
        return out;
    }

    // JSON format: {"format":"hoi3d-head","layers":[{"rows":..,"cols":..,
    // "weights":[row-major],"bias":[..]} x3]}
    void save_json(const std::string& path) const {
        nlohmann::json j;
        j["format"] = "hoi3d-head";
        j["layers"] = nlohmann::json::array();
        append_layer(j["layers"], w1_, b1_);
        append_layer(j["layers"], w2_, b2_);
        append_layer(j["layers"], w3_, b3_);
        std::ofstream out(path);
        require(out.good(), "cannot write head weights '" + path + "'");
        out << j.dump() << "\n";
        require(out.good(), "write failed for head weights '" + path + "'");
    }

    static AttentionHead load_json(const std::string& path) {
        std::ifstream in(path);
        require(in.good(), "cannot open head weights '" + path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            fail(path + ": JSON parse error: " + e.what());
        }
        require(j.value("format", "") == "hoi3d-head",
                path + ": not a head weights document");
        const auto& layers = j.at("layers");
        require(layers.size() == 3, path + ": expected 3 layers");
        AttentionHead head;
        read_layer(layers[0], head.w1_, head.b1_, path);
        read_layer(layers[1], head.w2_, head.b2_, path);
        read_layer(layers[2], head.w3_, head.b3_, path);
        return head;
    }

    // Flat binary: magic "H3DW", u32 layer count, then per layer u32 rows,
    // u32 cols, f64 weights row-major, f64 bias. Little-endian.
    void save_binary(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        require(out.good(), "cannot write head weights '" + path + "'");
        out.write("H3DW", 4);
        const std::uint32_t n = 3;
        out.write(reinterpret_cast<const char*>(&n), sizeof(n));
        write_layer(out, w1_, b1_);
        write_layer(out, w2_, b2_);
        write_layer(out, w3_, b3_);
        require(out.good(), "write failed for head weights '" + path + "'");
    }

    static AttentionHead load_binary(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        require(in.good(), "cannot open head weights '" + path + "'");
        char magic[4];
        in.read(magic, 4);
        require(in.good() && std::string(magic, 4) == "H3DW",
                path + ": bad magic for head weights");
        std::uint32_t n = 0;
        in.read(reinterpret_cast<char*>(&n), sizeof(n));
        require(in.good() && n == 3, path + ": expected 3 layers");
        AttentionHead head;
        read_layer_binary(in, head.w1_, head.b1_, path);
        read_layer_binary(in, head.w2_, head.b2_, path);
        read_layer_binary(in, head.w3_, head.b3_, path);
        return head;
    }

    const Eigen::MatrixXd& w1() const { return w1_; }
    const Eigen::VectorXd& b1() const { return b1_; }
    const Eigen::MatrixXd& w2() const { return w2_; }
    const Eigen::VectorXd& b2() const { return b2_; }
    const Eigen::MatrixXd& w3() const { return w3_; }
    const Eigen::VectorXd& b3() const { return b3_; }

private:
    static void append_layer(nlohmann::json& layers, const Eigen::MatrixXd& w,
                             const Eigen::VectorXd& b) {
        nlohmann::json l;
        l["rows"] = w.rows();
        l["cols"] = w.cols();
        std::vector<double> flat(w.size());
        for (long r = 0; r < w.rows(); ++r)
            for (long c = 0; c < w.cols(); ++c) flat[r * w.cols() + c] = w(r, c);
        l["weights"] = std::move(flat);
        l["bias"] = std::vector<double>(b.data(), b.data() + b.size());
        layers.push_back(std::move(l));
    }

    static void read_layer(const nlohmann::json& l, Eigen::MatrixXd& w,
                           Eigen::VectorXd& b, const std::string& path) {
        const long rows = l.at("rows").get<long>();
        const long cols = l.at("cols").get<long>();
        require(rows == w.rows() && cols == w.cols(),
                path + ": layer shape mismatch (expected " + std::to_string(w.rows()) +
                    "x" + std::to_string(w.cols()) + ")");
        const auto flat = l.at("weights").get<std::vector<double>>();
        require(static_cast<long>(flat.size()) == rows * cols,
                path + ": weight count mismatch");
        for (long r = 0; r < rows; ++r)
            for (long c = 0; c < cols; ++c) w(r, c) = flat[r * cols + c];
        const auto bias = l.at("bias").get<std::vector<double>>();
        require(static_cast<long>(bias.size()) == rows, path + ": bias size mismatch");
        for (long r = 0; r < rows; ++r) b[r] = bias[r];
    }

    static void write_layer(std::ofstream& out, const Eigen::MatrixXd& w,
                            const Eigen::VectorXd& b) {
        const std::uint32_t rows = static_cast<std::uint32_t>(w.rows());
        const std::uint32_t cols = static_cast<std::uint32_t>(w.cols());
        out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
        out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
        for (long r = 0; r < w.rows(); ++r)
            for (long c = 0; c < w.cols(); ++c) {
                const double v = w(r, c);
                out.write(reinterpret_cast<const char*>(&v), sizeof(v));
            }
        for (long r = 0; r < b.size(); ++r) {
            const double v = b[r];
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    }

    static void read_layer_binary(std::ifstream& in, Eigen::MatrixXd& w,
                                  Eigen::VectorXd& b, const std::string& path) {
        std::uint32_t rows = 0, cols = 0;
        in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
        in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
        require(in.good() && rows == w.rows() && cols == w.cols(),
                path + ": layer shape mismatch");
        for (std::uint32_t r = 0; r < rows; ++r)
            for (std::uint32_t c = 0; c < cols; ++c) {
                double v;
                in.read(reinterpret_cast<char*>(&v), sizeof(v));
                w(r, c) = v;
            }
        for (std::uint32_t r = 0; r < rows; ++r) {
            double v;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            b[r] = v;
        }
        require(in.good(), path + ": truncated head weights");
    }

    Eigen::MatrixXd w1_, w2_, w3_;
    Eigen::VectorXd b1_, b2_, b3_;
};

// Tile the human feature across points, concatenate with per-point features,
// average over points, and run the head. The tile-then-average collapses to
// concatenating the human vector with the per-point mean, which is what is
// computed here.
inline PartAttention part_attention_3d(const Feature3D& f, const AttentionHead& head) {
    require(f.per_point.cols() == kPointFeatureDim,
            "per-point features must be 384-d");
    require(f.per_point.rows() >= 1, "per-point feature matrix is empty");
    require(f.human.size() == kHumanFeatureDim, "human feature must be 1024-d");
    Eigen::VectorXd input(kAttentionInputDim);
    input.head(kHumanFeatureDim) = f.human;
    input.tail(kPointFeatureDim) = f.per_point.colwise().mean();
    return head.evaluate(input);
}

// Per-point attention: body points inherit their part's attention, object
// points get 1.
inline std::vector<double> assemble_att3d(const PartAttention& part_att,
                                          const std::vector<int>& labels) {
    std::vector<double> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int label = labels[i];
        require(label >= 1 && label <= kObjectLabel, "point label out of range");
        out[i] = (label == kObjectLabel) ? 1.0 : part_att.values[label - 1];
    }
    return out;
}

struct KlResult {
    double value = 0.0;
    std::array<double, kJointCount> grad_a2d{};
    std::array<double, kJointCount> grad_a3d{};
};

// KL(A2D || A3D) with the 0 * ln(0/x) = 0 convention. With epsilon > 0 both
// inputs are smoothed as (a + eps) / (1 + 17 eps) first; with epsilon = 0 a
// zero 3D entry opposite positive 2D mass is an error (infinite loss).
inline KlResult kl_attention_consistency(const PartAttention& a2d,
                                         const PartAttention& a3d,
                                         double epsilon = 0.0) {
    std::array<double, kJointCount> p{}, q{};
    const double norm = 1.0 + kJointCount * epsilon;
    for (int i = 0; i < kJointCount; ++i) {
        p[i] = (a2d.values[i] + epsilon) / norm;
        q[i] = (a3d.values[i] + epsilon) / norm;
    }

    KlResult res;
    for (int i = 0; i < kJointCount; ++i) {
        require(p[i] >= 0.0 && q[i] >= 0.0, "attention entries must be non-negative");
        if (p[i] == 0.0) continue;
        require(q[i] > 0.0,
                "KL divergence is infinite: 3D attention has a zero entry where the "
                "2D attention is positive (enable epsilon smoothing or fix inputs)");
        const double log_ratio = std::log(p[i] / q[i]);
        res.value += p[i] * log_ratio;
        res.grad_a2d[i] = (log_ratio + 1.0) / norm;
        res.grad_a3d[i] = -(p[i] / q[i]) / norm;
    }
    return res;
}

inline FeatureGrid2D reweight_2d(const FeatureGrid2D& f, const Grid& att) {
    require(att.channels == 1 && att.height == f.height && att.width == f.width,
            "attention map shape does not match the feature grid");
    FeatureGrid2D out = f;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            const double a = att.at(0, y, x);
            for (int c = 0; c < f.channels; ++c) out.at(y, x, c) *= a;
        }
    return out;
}

inline Eigen::MatrixXd reweight_3d(const Eigen::MatrixXd& per_point,
                                   const std::vector<double>& att3d) {
    require(static_cast<long>(att3d.size()) == per_point.rows(),
            "att3d length does not match the per-point feature rows");
    Eigen::MatrixXd out = per_point;
    for (long i = 0; i < out.rows(); ++i) out.row(i) *= att3d[i];
    return out;
}

} // namespace hoi3d
