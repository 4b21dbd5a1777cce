#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ofrep/core.hpp"
#include "ofrep/nn.hpp"

namespace ofrep {

struct KMeansConfig {
    std::size_t n_init = 10;
    std::size_t max_iter = 300;
    double tol = 1e-6;  // stop once no centroid moves farther than this
    int threads = 1;
};

/// Points are the columns of a d x n matrix throughout.
struct ClusterModel {
    std::size_t k = 0;
    Matrix centroids;  // d x k, labels ordered by descending cluster size
    double wcss = 0.0;
    std::size_t iterations = 0;
    std::uint64_t seed = 0;
    std::vector<int> labels;           // final assignment of the fitted points
    std::vector<double> wcss_history;  // per Lloyd iteration of the best restart
};

/// k-means++ seeding and Lloyd iterations, best of `n_init` restarts by
/// (WCSS, restart index). Empty clusters are re-seeded at the point farthest
/// from its centroid.
ClusterModel kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansConfig& config = {});

/// Nearest centroid per point; ties go to the lowest label.
std::vector<int> assign(const ClusterModel& model, const Matrix& points);

/// Within-cluster sum of squares of `points` under `labels`.
double wcss(const Matrix& points, const Matrix& centroids, std::span<const int> labels);

struct ElbowResult {
    std::vector<std::size_t> ks;
    std::vector<double> wcss;
    std::size_t k_star = 0;
    /// Gap of wcss(k*) below the chord joining its two neighbours, relative
    /// to the drop between them: 0.5 for a sharp corner, near 0.1 for a
    /// power-law curve, 0 when k* is an endpoint.
    double confidence = 0.0;
    bool low_confidence = false;
    std::vector<ClusterModel> models;
};

/// Gap below which a knee is flagged as low confidence.
inline constexpr double kElbowConfidenceThreshold = 0.25;

/// Fits k = k_min..k_max and picks the knee: the k whose WCSS lies farthest
/// below the chord joining the curve's endpoints. Each fit after the first
/// also tries one extra start from the previous solution plus the farthest
/// point, so the curve never increases.
ElbowResult elbow_select(const Matrix& points, std::size_t k_min, std::size_t k_max, std::uint64_t seed,
                         const KMeansConfig& config = {});

struct PcaResult {
    Matrix projected;        // out_dim x n
    Vector explained_ratio;  // out_dim, non-increasing
    Matrix components;       // d x out_dim, orthonormal columns
    Vector mean;             // d
};

PcaResult pca(const Matrix& points, std::size_t out_dim);

/// Adjusted Rand index of two labelings of the same items.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

std::string cluster_model_json(const ClusterModel& model);
ClusterModel parse_cluster_model_json(const std::string& text, const std::string& origin = "<memory>");
void save_cluster_model(const std::filesystem::path& path, const ClusterModel& model);
ClusterModel load_cluster_model(const std::filesystem::path& path);

/// `sample_id,agent,cluster`.
std::string assignments_csv(std::span<const AgentId> agents, std::span<const int> labels);

/// `k,wcss`.
std::string elbow_csv(const ElbowResult& elbow);

/// `sample_id,agent,cluster,pc1,...`.
std::string pca_csv(const PcaResult& p, std::span<const AgentId> agents, std::span<const int> labels);

}  // namespace ofrep
