#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <hoi3d/common.hpp>
#include <hoi3d/pose.hpp>
#include <hoi3d/rng.hpp>

namespace hoi3d {

struct ProcrustesResult {
    Pose2D aligned;                // all 17 joints transformed, src visibility kept
    double residual = 0.0;         // RMS over the joints used
    double scale = 1.0;
    double rotation = 0.0;         // radians
    Eigen::Vector2d translation = Eigen::Vector2d::Zero();
    int joints_used = 0;
};

// Optimal similarity transform (rotation + uniform scale + translation, no
// reflection) from src to dst over the mutually visible joints, minimizing
// the sum of squared distances. The closed form: with both point sets
// centered, theta = atan2(sum cross, sum dot) and scale = |(dot, cross)| /
// sum |src|^2.
inline ProcrustesResult procrustes_align(const Pose2D& src, const Pose2D& dst) {
    std::vector<int> common;
    for (int j = 0; j < kJointCount; ++j)
        if (src.visible[j] && dst.visible[j]) common.push_back(j);
    require(common.size() >= 3, "procrustes needs at least 3 mutually visible joints, got " +
                                    std::to_string(common.size()));

    Eigen::Vector2d cs = Eigen::Vector2d::Zero(), cd = Eigen::Vector2d::Zero();
    for (int j : common) {
        cs += src.joints[j];
        cd += dst.joints[j];
    }
    cs /= static_cast<double>(common.size());
    cd /= static_cast<double>(common.size());

    double dot = 0.0, cross = 0.0, src_var = 0.0;
    for (int j : common) {
        const Eigen::Vector2d a = src.joints[j] - cs;
        const Eigen::Vector2d b = dst.joints[j] - cd;
        dot += a.dot(b);
        cross += a.x() * b.y() - a.y() * b.x();
        src_var += a.squaredNorm();
    }
    require(src_var > 0.0, "zero-variance source pose (all visible joints coincide)");

    ProcrustesResult res;
    res.rotation = std::atan2(cross, dot);
    res.scale = std::hypot(dot, cross) / src_var;
    const double c = std::cos(res.rotation), s = std::sin(res.rotation);
    Eigen::Matrix2d rot;
    rot << c, -s, s, c;
    res.translation = cd - res.scale * (rot * cs);

    res.aligned.visible = src.visible;
    for (int j = 0; j < kJointCount; ++j)
        res.aligned.joints[j] = res.scale * (rot * src.joints[j]) + res.translation;

    double sq = 0.0;
    for (int j : common) sq += (res.aligned.joints[j] - dst.joints[j]).squaredNorm();
    res.residual = std::sqrt(sq / static_cast<double>(common.size()));
    res.joints_used = static_cast<int>(common.size());
    return res;
}

struct KMeansResult {
    Eigen::MatrixXd centers; // k x d
    std::vector<int> assignment;
    int iterations = 0;
};

// Seeded k-means: k-means++ initialization, Lloyd iterations until the max
// center shift drops below tol. An emptied cluster is re-seeded with the
// point farthest from its current center.
inline KMeansResult kmeans(const Eigen::MatrixXd& pts, int k, Rng& rng,
                           int max_iter = 100, double tol = 1e-6) {
    const long n = pts.rows();
    const long d = pts.cols();
    require(k >= 1, "k must be positive");
    require(n >= k, "k exceeds the number of points");

    KMeansResult res;
    res.centers.resize(k, d);
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    res.centers.row(0) = pts.row(static_cast<long>(rng.index(n)));
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (long i = 0; i < n; ++i) {
            const double d2 =
                (pts.row(i) - res.centers.row(c - 1)).squaredNorm();
            min_d2[i] = std::min(min_d2[i], d2);
            total += min_d2[i];
        }
        long pick = -1;
        if (total <= 0.0) {
            pick = static_cast<long>(rng.index(n));
        } else {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            for (long i = 0; i < n; ++i) {
                acc += min_d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) pick = n - 1;
        }
        res.centers.row(c) = pts.row(pick);
    }

    res.assignment.assign(n, 0);
    for (int iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter + 1;
        for (long i = 0; i < n; ++i) {
            int best = 0;
            double best_d2 = (pts.row(i) - res.centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d2 = (pts.row(i) - res.centers.row(c)).squaredNorm();
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = c;
                }
            }
            res.assignment[i] = best;
        }

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
        std::vector<long> counts(k, 0);
        for (long i = 0; i < n; ++i) {
            sums.row(res.assignment[i]) += pts.row(i);
            ++counts[res.assignment[i]];
        }
        double max_shift = 0.0;
        for (int c = 0; c < k; ++c) {
            Eigen::RowVectorXd next;
            if (counts[c] > 0) {
                next = sums.row(c) / static_cast<double>(counts[c]);
            } else {
                long far_i = 0;
                double far_d2 = -1.0;
                for (long i = 0; i < n; ++i) {
                    const double d2 =
                        (pts.row(i) - res.centers.row(res.assignment[i])).squaredNorm();
                    if (d2 > far_d2) {
                        far_d2 = d2;
                        far_i = i;
                    }
                }
                next = pts.row(far_i);
            }
            max_shift = std::max(max_shift, (next - res.centers.row(c)).norm());
            res.centers.row(c) = next;
        }
        if (max_shift < tol) break;
    }

    for (long i = 0; i < n; ++i) {
        int best = 0;
        double best_d2 = (pts.row(i) - res.centers.row(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
            const double d2 = (pts.row(i) - res.centers.row(c)).squaredNorm();
            if (d2 < best_d2) {
                best_d2 = d2;
                best = c;
            }
        }
        res.assignment[i] = best;
    }
    return res;
}

struct AmbiguityRecord {
    std::string sample_id;
    std::vector<double> template_distances; // one per template
    double mean_distance = 0.0;
};

struct ClusterRankResult {
    std::vector<AmbiguityRecord> ranking; // sorted by mean distance, descending
    std::vector<std::string> skipped;     // samples that failed alignment
};

// Per template: align every sample to it, k-means the aligned joint vectors,
// and record each sample's distance to its assigned center. Samples are
// processed in ascending id order so the result does not depend on input
// order; the final ranking sorts by mean distance descending with the id as
// tie-break.
inline ClusterRankResult cluster_and_rank(
    const std::vector<std::pair<std::string, Pose2D>>& samples,
    const std::vector<Pose2D>& templates, int k, std::uint64_t seed) {
    require(!samples.empty(), "empty sample set");
    require(!templates.empty(), "empty template set");
    require(k >= 1, "k must be positive");

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].first < samples[b].first;
    });

    ClusterRankResult out;
    std::vector<std::size_t> usable;
    for (std::size_t oi : order) {
        bool ok = true;
        for (const Pose2D& tpl : templates) {
            try {
                procrustes_align(samples[oi].second, tpl);
            } catch (const Error&) {
                ok = false;
                break;
            }
        }
        if (ok)
            usable.push_back(oi);
        else
            out.skipped.push_back(samples[oi].first);
    }
    require(!usable.empty(), "no sample aligns to every template");
    require(static_cast<int>(usable.size()) >= k,
            "k exceeds the number of usable samples");

    std::vector<AmbiguityRecord> records(usable.size());
    for (std::size_t i = 0; i < usable.size(); ++i)
        records[i].sample_id = samples[usable[i]].first;

    for (std::size_t t = 0; t < templates.size(); ++t) {
        Eigen::MatrixXd aligned(usable.size(), 2 * kJointCount);
        for (std::size_t i = 0; i < usable.size(); ++i) {
            const ProcrustesResult pr =
                procrustes_align(samples[usable[i]].second, templates[t]);
            for (int j = 0; j < kJointCount; ++j) {
                aligned(i, 2 * j) = pr.aligned.joints[j].x();
                aligned(i, 2 * j + 1) = pr.aligned.joints[j].y();
            }
        }
        Rng rng(derive_seed(seed, "template#" + std::to_string(t)));
        const KMeansResult km = kmeans(aligned, k, rng);
        for (std::size_t i = 0; i < usable.size(); ++i) {
            const double dist =
                (aligned.row(i) - km.centers.row(km.assignment[i])).norm();
            records[i].template_distances.push_back(dist);
        }
    }

    for (auto& rec : records) {
        double s = 0.0;
        for (double d : rec.template_distances) s += d;
        rec.mean_distance = s / static_cast<double>(rec.template_distances.size());
    }
    std::sort(records.begin(), records.end(),
              [](const AmbiguityRecord& a, const AmbiguityRecord& b) {
                  if (a.mean_distance != b.mean_distance)
                      return a.mean_distance > b.mean_distance;
                  return a.sample_id < b.sample_id;
              });
    out.ranking = std::move(records);
    return out;
}

// Flags the ceil(fraction * n) samples farthest from the mean embedding,
// breaking distance ties toward the lower index.
inline std::vector<bool> monster_filter(const Eigen::MatrixXd& embeddings,
                                        double fraction = 0.10) {
    const long n = embeddings.rows();
    require(n >= 1, "empty embedding set");
    require(fraction > 0.0 && fraction < 1.0, "fraction must lie in (0, 1)");
    for (long i = 0; i < n; ++i)
        require(embeddings.row(i).allFinite(), "embedding row " + std::to_string(i) +
                                                   " contains non-finite values");

    const Eigen::RowVectorXd mean = embeddings.colwise().mean();
    std::vector<double> dist(n);
    for (long i = 0; i < n; ++i) dist[i] = (embeddings.row(i) - mean).norm();

    std::vector<long> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](long a, long b) {
        if (dist[a] != dist[b]) return dist[a] > dist[b];
        return a < b;
    });

    const long flag_count = static_cast<long>(std::ceil(fraction * static_cast<double>(n)));
    std::vector<bool> flags(n, false);
    for (long i = 0; i < flag_count; ++i) flags[idx[i]] = true;
    return flags;
}

} // namespace hoi3d
