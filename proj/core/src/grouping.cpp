#include "comotion/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "comotion/rng.hpp"

namespace comotion {

namespace {

void validate_affinity(const AffinityMatrix& a) {
    const Eigen::Index n = a.rows();
    if (n < 2 || a.cols() != n) {
        throw std::invalid_argument("affinity matrix must be square with n >= 2");
    }
    if (!a.allFinite()) throw std::invalid_argument("affinity matrix must be finite");
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            if (std::abs(a(i, j) - a(j, i)) > 1e-9) {
                throw std::invalid_argument("affinity matrix must be symmetric");
            }
            if (a(i, j) < -1e-12) {
                throw std::invalid_argument("affinity entries must be nonnegative");
            }
        }
    }
}

struct EmbeddingBasis {
    Eigen::MatrixXd eigenvectors;    // n x n, ascending eigenvalues
    std::vector<bool> zero_degree;   // degree <= floor
};

EmbeddingBasis embedding_basis(const AffinityMatrix& a, double degree_floor) {
    const Eigen::Index n = a.rows();
    const Eigen::VectorXd degree = a.rowwise().sum();

    EmbeddingBasis basis;
    basis.zero_degree.assign(static_cast<std::size_t>(n), false);
    Eigen::VectorXd inv_sqrt(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = degree(i);
        basis.zero_degree[static_cast<std::size_t>(i)] = d <= degree_floor;
        inv_sqrt(i) = 1.0 / std::sqrt(std::max(d, degree_floor));
    }

    // L = D^{-1/2} (D - A) D^{-1/2}, symmetrized against round-off
    Eigen::MatrixXd lap(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double dma = (i == j ? degree(i) : 0.0) - a(i, j);
            lap(i, j) = dma * inv_sqrt(i) * inv_sqrt(j);
        }
    }
    lap = 0.5 * (lap + lap.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
    if (solver.info() != Eigen::Success) {
        throw std::invalid_argument("eigendecomposition failed on affinity input");
    }
    basis.eigenvectors = solver.eigenvectors();
    return basis;
}

Eigen::MatrixXd row_normalized_slice(const EmbeddingBasis& basis, int k) {
    Eigen::MatrixXd emb = basis.eigenvectors.leftCols(k);
    for (Eigen::Index i = 0; i < emb.rows(); ++i) {
        if (basis.zero_degree[static_cast<std::size_t>(i)]) {
            emb.row(i).setZero();
            continue;
        }
        const double norm = emb.row(i).norm();
        if (norm > 0.0) emb.row(i) /= norm;
    }
    return emb;
}

struct KmeansOutcome {
    std::vector<int> labels;
    double wcss = std::numeric_limits<double>::infinity();
    bool valid = false;  // every cluster non-empty
};

KmeansOutcome kmeans_once(const Eigen::MatrixXd& pts, int k, int max_iters, Rng& rng) {
    const Eigen::Index n = pts.rows();
    Eigen::MatrixXd centers(k, pts.cols());

    // k-means++ seeding
    std::vector<double> min_dist2(static_cast<std::size_t>(n),
                                  std::numeric_limits<double>::infinity());
    Eigen::Index first = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n)));
    centers.row(0) = pts.row(first);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d2 = (pts.row(j) - centers.row(c - 1)).squaredNorm();
            auto& slot = min_dist2[static_cast<std::size_t>(j)];
            slot = std::min(slot, d2);
            total += slot;
        }
        Eigen::Index pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            double acc = 0.0;
            pick = n - 1;
            for (Eigen::Index j = 0; j < n; ++j) {
                acc += min_dist2[static_cast<std::size_t>(j)];
                if (acc >= target) {
                    pick = j;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n)));
        }
        centers.row(c) = pts.row(pick);
    }

    KmeansOutcome out;
    out.labels.assign(static_cast<std::size_t>(n), 0);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);

    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (Eigen::Index j = 0; j < n; ++j) {
            int best = 0;
            double best_d2 = (pts.row(j) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d2 = (pts.row(j) - centers.row(c)).squaredNorm();
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = c;
                }
            }
            if (out.labels[static_cast<std::size_t>(j)] != best) {
                out.labels[static_cast<std::size_t>(j)] = best;
                changed = true;
            }
        }
        std::fill(counts.begin(), counts.end(), 0);
        for (const int l : out.labels) ++counts[static_cast<std::size_t>(l)];
        if (std::find(counts.begin(), counts.end(), 0) != counts.end()) {
            return out;  // empty cluster, caller re-draws
        }
        centers.setZero();
        for (Eigen::Index j = 0; j < n; ++j) {
            centers.row(out.labels[static_cast<std::size_t>(j)]) += pts.row(j);
        }
        for (int c = 0; c < k; ++c) centers.row(c) /= counts[static_cast<std::size_t>(c)];
        if (!changed && iter > 0) break;
    }

    out.wcss = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        out.wcss += (pts.row(j) - centers.row(out.labels[static_cast<std::size_t>(j)])).squaredNorm();
    }
    out.valid = true;
    return out;
}

// Fallback when every restart produced an empty cluster: repeatedly split the
// largest cluster at the median projection onto its first principal
// direction. Ties in projection order by index, so identical points split by
// index.
std::vector<int> deterministic_split(const Eigen::MatrixXd& pts, int k) {
    const Eigen::Index n = pts.rows();
    std::vector<int> labels(static_cast<std::size_t>(n), 0);

    for (int next = 1; next < k; ++next) {
        std::vector<std::vector<Eigen::Index>> clusters(static_cast<std::size_t>(next));
        for (Eigen::Index j = 0; j < n; ++j) {
            clusters[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])].push_back(j);
        }
        int largest = 0;
        for (int c = 1; c < next; ++c) {
            if (clusters[static_cast<std::size_t>(c)].size() >
                clusters[static_cast<std::size_t>(largest)].size()) {
                largest = c;
            }
        }
        auto& members = clusters[static_cast<std::size_t>(largest)];

        // first principal direction by power iteration on the member covariance
        const Eigen::Index d = pts.cols();
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
        for (const auto j : members) mean += pts.row(j).transpose();
        mean /= static_cast<double>(members.size());
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
        for (const auto j : members) {
            const Eigen::VectorXd c = pts.row(j).transpose() - mean;
            cov += c * c.transpose();
        }
        Eigen::VectorXd dir = Eigen::VectorXd::Ones(d).normalized();
        for (int it = 0; it < 100; ++it) {
            Eigen::VectorXd nd = cov * dir;
            const double norm = nd.norm();
            if (norm <= 0.0) break;  // zero covariance, projections all equal
            dir = nd / norm;
        }

        std::vector<std::pair<double, Eigen::Index>> order;
        order.reserve(members.size());
        for (const auto j : members) {
            order.emplace_back((pts.row(j).transpose() - mean).dot(dir), j);
        }
        std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return a.second < b.second;
        });
        const std::size_t keep = (order.size() + 1) / 2;
        for (std::size_t idx = keep; idx < order.size(); ++idx) {
            labels[static_cast<std::size_t>(order[idx].second)] = next;
        }
    }
    return labels;
}

std::vector<int> cluster_embedding(const Eigen::MatrixXd& emb, int k,
                                   const GroupingConfig& cfg) {
    KmeansOutcome best;
    for (int restart = 0; restart < cfg.kmeans_restarts; ++restart) {
        Rng rng(derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(restart)));
        KmeansOutcome outcome = kmeans_once(emb, k, cfg.kmeans_max_iters, rng);
        if (outcome.valid && outcome.wcss < best.wcss) best = std::move(outcome);
    }
    if (!best.valid) return deterministic_split(emb, k);
    return best.labels;
}

void validate_grouping_config(const GroupingConfig& cfg, Eigen::Index n) {
    if (cfg.k_min < 2 || cfg.k_min > cfg.k_max || cfg.k_max > 50 ||
        cfg.k_max >= static_cast<int>(n) || cfg.kmeans_restarts < 1 ||
        cfg.kmeans_max_iters < 1 || !(cfg.degree_floor > 0.0)) {
        throw std::invalid_argument("invalid grouping configuration");
    }
}

}  // namespace

AffinityMatrix affinity(std::span<const Vec2> features) {
    const auto n = static_cast<Eigen::Index>(features.size());
    if (n < 2) throw std::invalid_argument("affinity needs at least 2 features");
    AffinityMatrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double dot = features[static_cast<std::size_t>(i)].dot(
                features[static_cast<std::size_t>(j)]);
            const double clamped = std::max(0.0, dot);
            a(i, j) = clamped;
            a(j, i) = clamped;
        }
    }
    return a;
}

AffinityMatrix affinity(const MotionFeatureSet& features) {
    return affinity(std::span<const Vec2>(features.features));
}

Partition spectral_partition(const AffinityMatrix& a, int k, const GroupingConfig& cfg) {
    validate_affinity(a);
    const Eigen::Index n = a.rows();
    if (k < 2 || k >= static_cast<int>(n)) {
        throw std::invalid_argument("spectral_partition requires 2 <= k < n");
    }
    const EmbeddingBasis basis = embedding_basis(a, cfg.degree_floor);
    Partition part;
    part.k = k;
    part.embedding = row_normalized_slice(basis, k);
    part.labels = cluster_embedding(part.embedding, k, cfg);
    part.ch_score = ch_index(part.embedding, part.labels, k);
    return part;
}

double ch_index(const Eigen::MatrixXd& points, const std::vector<int>& labels, int k) {
    const Eigen::Index n = points.rows();
    if (k < 2) throw std::invalid_argument("ch_index requires k >= 2");
    if (n <= k) throw std::invalid_argument("ch_index requires n > k");
    if (labels.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("ch_index label count mismatch");
    }

    const Eigen::Index d = points.cols();
    Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(k, d);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int l = labels[static_cast<std::size_t>(i)];
        if (l < 0 || l >= k) throw std::invalid_argument("ch_index label out of range");
        centroids.row(l) += points.row(i);
        ++counts[static_cast<std::size_t>(l)];
    }
    for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0) {
            throw std::invalid_argument("ch_index requires non-empty clusters");
        }
        centroids.row(c) /= counts[static_cast<std::size_t>(c)];
    }
    const Eigen::RowVectorXd global = points.colwise().mean();

    double tr_within = 0.0, tr_between = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        tr_within += (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)]))
                         .squaredNorm();
    }
    for (int c = 0; c < k; ++c) {
        tr_between += counts[static_cast<std::size_t>(c)] *
                      (centroids.row(c) - global).squaredNorm();
    }
    if (tr_within == 0.0) return kChSentinel;
    // near-perfect separations leave tr(W) at round-off scale; the sentinel
    // bounds those too, keeping scores finite and comparable
    return std::min((tr_between / (k - 1)) / (tr_within / (n - k)), kChSentinel);
}

Partition best_partition(const AffinityMatrix& a, const GroupingConfig& cfg) {
    validate_affinity(a);
    const Eigen::Index n = a.rows();
    validate_grouping_config(cfg, n);

    const Eigen::VectorXd degree = a.rowwise().sum();
    if ((degree.array() <= cfg.degree_floor).all()) {
        throw std::invalid_argument(
            "best_partition: all degrees are zero; the frame pair should be gated out");
    }

    const EmbeddingBasis basis = embedding_basis(a, cfg.degree_floor);
    Partition best;
    best.ch_score = -std::numeric_limits<double>::infinity();
    for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
        Partition candidate;
        candidate.k = k;
        candidate.embedding = row_normalized_slice(basis, k);
        candidate.labels = cluster_embedding(candidate.embedding, k, cfg);
        candidate.ch_score = ch_index(candidate.embedding, candidate.labels, k);
        if (candidate.ch_score > best.ch_score) best = std::move(candidate);
    }
    return best;
}

Partition best_partition(const MotionFeatureSet& features, const GroupingConfig& cfg) {
    if (!features.passes_gate) {
        throw std::invalid_argument("best_partition: feature set is gated out");
    }
    return best_partition(affinity(features), cfg);
}

}  // namespace comotion
