#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <hoi3d/common.hpp>

namespace hoi3d {

// A spatial-stream feature vector with its (possibly multi-label) HOI ids.
struct SpatialFeature {
    std::vector<double> values;
    std::vector<int> hoi_labels; // sorted unique
};

inline double euclidean(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "feature dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

struct TripletResult {
    double value = 0.0;
    std::vector<double> grad_anchor, grad_positive, grad_negative;
};

// Hinge on d(a,p) - d(a,n) + alpha. Subgradient 0 at the hinge point and at
// coincident pairs (where the distance is not differentiable).
inline TripletResult triplet_loss(std::span<const double> anchor,
                                  std::span<const double> positive,
                                  std::span<const double> negative,
                                  double alpha = 0.5) {
    require(anchor.size() == positive.size() && anchor.size() == negative.size(),
            "triplet features must share one dimension");
    const std::size_t dim = anchor.size();
    const double dap = euclidean(anchor, positive);
    const double dan = euclidean(anchor, negative);
    const double arg = dap - dan + alpha;

    TripletResult res;
    res.grad_anchor.assign(dim, 0.0);
    res.grad_positive.assign(dim, 0.0);
    res.grad_negative.assign(dim, 0.0);
    if (arg <= 0.0) return res;

    res.value = arg;
    for (std::size_t i = 0; i < dim; ++i) {
        const double ap = anchor[i] - positive[i];
        const double an = anchor[i] - negative[i];
        if (dap > 0.0) {
            res.grad_anchor[i] += ap / dap;
            res.grad_positive[i] = -ap / dap;
        }
        if (dan > 0.0) {
            res.grad_anchor[i] -= an / dan;
            res.grad_negative[i] = an / dan;
        }
    }
    return res;
}

struct MinedTriplet {
    std::size_t anchor = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;
};

struct MiningResult {
    std::vector<MinedTriplet> triplets;
    std::vector<std::size_t> skipped_anchors;
};

inline bool labels_overlap(const std::vector<int>& a, const std::vector<int>& b) {
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia == *ib) return true;
        if (*ia < *ib)
            ++ia;
        else
            ++ib;
    }
    return false;
}

// Per 2D anchor: the farthest candidate sharing at least one HOI label and
// the nearest candidate with a fully disjoint label set. Anchors missing
// either candidate are skipped and reported. Ties go to the lower index.
inline MiningResult mine_semi_hard(std::span<const SpatialFeature> anchors,
                                   std::span<const SpatialFeature> pool) {
    require(!anchors.empty(), "mining batch is empty");
    MiningResult out;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        long best_pos = -1, best_neg = -1;
        double pos_dist = -1.0;
        double neg_dist = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < pool.size(); ++j) {
            const double d = euclidean(anchors[i].values, pool[j].values);
            if (labels_overlap(anchors[i].hoi_labels, pool[j].hoi_labels)) {
                if (d > pos_dist) {
                    pos_dist = d;
                    best_pos = static_cast<long>(j);
                }
            } else {
                if (d < neg_dist) {
                    neg_dist = d;
                    best_neg = static_cast<long>(j);
                }
            }
        }
        if (best_pos < 0 || best_neg < 0) {
            out.skipped_anchors.push_back(i);
            continue;
        }
        out.triplets.push_back({i, static_cast<std::size_t>(best_pos),
                                static_cast<std::size_t>(best_neg)});
    }
    return out;
}

enum class SemanticMode {
    kPerClassAbs, // sum_i |s2d_i - s3d_i|
    kVectorL2     // || s2d - s3d ||_2
};

struct SemanticResult {
    double value = 0.0;
    std::vector<double> grad_s2d, grad_s3d;
};

inline SemanticResult semantic_consistency(std::span<const double> s2d,
                                           std::span<const double> s3d,
                                           SemanticMode mode = SemanticMode::kPerClassAbs) {
    require(s2d.size() == s3d.size(), "score vectors must share one length");
    const std::size_t m = s2d.size();
    SemanticResult res;
    res.grad_s2d.assign(m, 0.0);
    res.grad_s3d.assign(m, 0.0);
    if (mode == SemanticMode::kPerClassAbs) {
        for (std::size_t i = 0; i < m; ++i) {
            const double d = s2d[i] - s3d[i];
            res.value += std::abs(d);
            const double sign = (d > 0.0) ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            res.grad_s2d[i] = sign;
            res.grad_s3d[i] = -sign;
        }
    } else {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double d = s2d[i] - s3d[i];
            s += d * d;
        }
        res.value = std::sqrt(s);
        if (res.value > 0.0)
            for (std::size_t i = 0; i < m; ++i) {
                const double d = s2d[i] - s3d[i];
                res.grad_s2d[i] = d / res.value;
                res.grad_s3d[i] = -d / res.value;
            }
    }
    return res;
}

struct BceResult {
    double value = 0.0;
    std::vector<double> grad_scores;
};

inline constexpr double kBceClip = 1e-12;

// Mean multi-label binary cross-entropy. Scores are clipped to
// [1e-12, 1 - 1e-12]; the gradient is 0 where clipping is active.
inline BceResult bce_multilabel(std::span<const double> scores,
                                std::span<const double> targets) {
    require(scores.size() == targets.size(), "scores/targets length mismatch");
    require(!scores.empty(), "empty score vector");
    const std::size_t m = scores.size();
    BceResult res;
    res.grad_scores.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double t = targets[i];
        require(t >= 0.0 && t <= 1.0, "targets must lie in [0, 1]");
        const double s = std::clamp(scores[i], kBceClip, 1.0 - kBceClip);
        res.value -= t * std::log(s) + (1.0 - t) * std::log(1.0 - s);
        if (scores[i] > kBceClip && scores[i] < 1.0 - kBceClip)
            res.grad_scores[i] = (s - t) / (s * (1.0 - s)) / static_cast<double>(m);
    }
    res.value /= static_cast<double>(m);
    return res;
}

struct FusedScores {
    std::vector<double> s2d;   // (s2d_H + s2d_O) o s2d_sp
    std::vector<double> s3d;   // s3d_H + s3d_sp
    std::vector<double> total; // s2d + s3d + s_joint
};

inline FusedScores fuse_scores(std::span<const double> s2d_h,
                               std::span<const double> s2d_o,
                               std::span<const double> s2d_sp,
                               std::span<const double> s3d_h,
                               std::span<const double> s3d_sp,
                               std::span<const double> s_joint) {
    const std::size_t m = s2d_h.size();
    require(s2d_o.size() == m && s2d_sp.size() == m && s3d_h.size() == m &&
                s3d_sp.size() == m && s_joint.size() == m,
            "all score vectors must share one length");
    FusedScores out;
    out.s2d.resize(m);
    out.s3d.resize(m);
    out.total.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        out.s2d[i] = (s2d_h[i] + s2d_o[i]) * s2d_sp[i];
        out.s3d[i] = s3d_h[i] + s3d_sp[i];
        out.total[i] = out.s2d[i] + out.s3d[i] + s_joint[i];
    }
    return out;
}

struct LossWeights {
    double tri = 0.001;
    double att = 0.01;
    double sem = 0.01;
    double cls = 1.0;

    void validate() const {
        require(tri >= 0.0 && att >= 0.0 && sem >= 0.0 && cls >= 0.0,
                "loss weights must be non-negative");
    }
};

struct LossValues {
    double l_tri = 0.0;
    double l_att = 0.0;
    double l_sem = 0.0;
    double l_cls_2d = 0.0;
    double l_cls_3d = 0.0;
    double l_cls_joint = 0.0;
};

using GradientMap = std::map<std::string, std::vector<double>>;

struct LossBreakdown {
    LossValues values;
    double total = 0.0;
    GradientMap gradients; // keyed by input name
};

inline void check_finite(double v, const std::string& name) {
    require(std::isfinite(v), "loss component '" + name + "' is not finite");
}

// Weighted total per the breakdown contract. Component gradients are scaled
// by their weight and accumulated per input name, so the gradient of the
// total w.r.t. any upstream input is the weighted sum of component gradients.
inline LossBreakdown total_loss(const LossValues& values, const LossWeights& weights,
                                const std::map<std::string, GradientMap>&
                                    component_gradients = {}) {
    weights.validate();
    check_finite(values.l_tri, "l_tri");
    check_finite(values.l_att, "l_att");
    check_finite(values.l_sem, "l_sem");
    check_finite(values.l_cls_2d, "l_cls_2d");
    check_finite(values.l_cls_3d, "l_cls_3d");
    check_finite(values.l_cls_joint, "l_cls_joint");

    LossBreakdown out;
    out.values = values;
    out.total = weights.tri * values.l_tri + weights.att * values.l_att +
                weights.sem * values.l_sem +
                weights.cls * (values.l_cls_2d + values.l_cls_3d + values.l_cls_joint);

    auto weight_of = [&](const std::string& component) {
        if (component == "l_tri") return weights.tri;
        if (component == "l_att") return weights.att;
        if (component == "l_sem") return weights.sem;
        if (component == "l_cls_2d" || component == "l_cls_3d" ||
            component == "l_cls_joint")
            return weights.cls;
        fail("unknown loss component '" + component + "'");
    };
    for (const auto& [component, grads] : component_gradients) {
        const double w = weight_of(component);
        for (const auto& [input, g] : grads) {
            auto& acc = out.gradients[input];
            if (acc.empty()) acc.assign(g.size(), 0.0);
            require(acc.size() == g.size(),
                    "gradient size mismatch for input '" + input + "'");
            for (std::size_t i = 0; i < g.size(); ++i) acc[i] += w * g[i];
        }
    }
    return out;
}

} // namespace hoi3d
