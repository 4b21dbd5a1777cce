#include "ofrep/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <json.hpp>

#include "ofrep/common.hpp"
#include "ofrep/csv.hpp"

namespace ofrep {

namespace {

struct Fit {
    Matrix centroids;
    std::vector<int> labels;
    std::vector<double> dist;  // squared distance of each point to its centroid
    double wcss = 0.0;
    std::size_t iterations = 0;
    std::vector<double> history;
};

void nearest(const Matrix& points, const Matrix& centroids, std::vector<int>& labels, std::vector<double>& dist) {
    const auto n = points.cols();
    const auto k = centroids.cols();
    labels.assign(static_cast<std::size_t>(n), 0);
    dist.assign(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double d = (points.col(i) - centroids.col(j)).squaredNorm();
            if (d < best) {
                best = d;
                arg = static_cast<int>(j);
            }
        }
        labels[static_cast<std::size_t>(i)] = arg;
        dist[static_cast<std::size_t>(i)] = best;
    }
}

double total(const std::vector<double>& dist) { return std::accumulate(dist.begin(), dist.end(), 0.0); }

Matrix plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
    const auto n = static_cast<std::size_t>(points.cols());
    Matrix c(points.rows(), static_cast<Eigen::Index>(k));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    c.col(0) = points.col(static_cast<Eigen::Index>(pick(rng)));
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = (points.col(static_cast<Eigen::Index>(i)) - c.col(0)).squaredNorm();
    for (std::size_t j = 1; j < k; ++j) {
        const double sum = total(d2);
        std::size_t chosen = 0;
        if (sum > 0.0) {
            const double u = std::uniform_real_distribution<double>(0.0, sum)(rng);
            double acc = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (u < acc && d2[i] > 0.0) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = pick(rng);
        }
        c.col(static_cast<Eigen::Index>(j)) = points.col(static_cast<Eigen::Index>(chosen));
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], (points.col(static_cast<Eigen::Index>(i)) - c.col(static_cast<Eigen::Index>(j)))
                                        .squaredNorm());
        }
    }
    return c;
}

Fit lloyd(const Matrix& points, Matrix centroids, const KMeansConfig& cfg) {
    const auto k = centroids.cols();
    const auto n = points.cols();
    Fit f;
    f.centroids = std::move(centroids);
    for (std::size_t iter = 0; iter < cfg.max_iter; ++iter) {
        nearest(points, f.centroids, f.labels, f.dist);
        f.history.push_back(total(f.dist));

        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (auto l : f.labels) ++counts[static_cast<std::size_t>(l)];
        // move the worst-served points into empty clusters
        std::vector<bool> used(static_cast<std::size_t>(n), false);
        for (Eigen::Index j = 0; j < k; ++j) {
            if (counts[static_cast<std::size_t>(j)] > 0) continue;
            Eigen::Index far = -1;
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto ui = static_cast<std::size_t>(i);
                if (used[ui] || counts[static_cast<std::size_t>(f.labels[ui])] < 2) continue;
                if (far < 0 || f.dist[ui] > f.dist[static_cast<std::size_t>(far)]) far = i;
            }
            if (far < 0) continue;
            const auto uf = static_cast<std::size_t>(far);
            --counts[static_cast<std::size_t>(f.labels[uf])];
            f.labels[uf] = static_cast<int>(j);
            f.dist[uf] = 0.0;
            counts[static_cast<std::size_t>(j)] = 1;
            used[uf] = true;
        }

        Matrix next = Matrix::Zero(points.rows(), k);
        for (Eigen::Index i = 0; i < n; ++i) next.col(f.labels[static_cast<std::size_t>(i)]) += points.col(i);
        for (Eigen::Index j = 0; j < k; ++j) {
            const auto c = counts[static_cast<std::size_t>(j)];
            if (c > 0) next.col(j) /= static_cast<double>(c);
            else next.col(j) = f.centroids.col(j);
        }
        double shift = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) shift = std::max(shift, (next.col(j) - f.centroids.col(j)).norm());
        f.centroids = std::move(next);
        f.iterations = iter + 1;
        if (shift < cfg.tol) break;
    }
    nearest(points, f.centroids, f.labels, f.dist);
    f.wcss = total(f.dist);
    f.history.push_back(f.wcss);
    return f;
}

void check_points(const Matrix& points, std::size_t k) {
    if (k == 0) throw Error("k must be at least 1");
    if (static_cast<std::size_t>(points.cols()) < k) {
        throw Error(fmt::format("k-means needs at least k={} points, got {}", k, points.cols()));
    }
    if (!points.allFinite()) throw Error("k-means input contains non-finite values");
}

ClusterModel finish(const Matrix& points, Fit best, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> counts(k, 0);
    for (auto l : best.labels) ++counts[static_cast<std::size_t>(l)];
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });

    ClusterModel m;
    m.k = k;
    m.seed = seed;
    m.iterations = best.iterations;
    m.wcss_history = std::move(best.history);
    m.centroids.resize(points.rows(), static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) m.centroids.col(static_cast<Eigen::Index>(j)) = best.centroids.col(static_cast<Eigen::Index>(order[j]));
    std::vector<double> dist;
    nearest(points, m.centroids, m.labels, dist);
    m.wcss = total(dist);
    return m;
}

Fit best_of(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansConfig& cfg,
            const Matrix* warm_start) {
    const std::size_t runs = std::max<std::size_t>(cfg.n_init, 1);
    std::vector<Fit> fits(runs + (warm_start ? 1 : 0));
    parallel_for(fits.size(), cfg.threads, [&](std::size_t r) {
        if (r < runs) {
            Rng rng(derive_seed(seed, r));
            fits[r] = lloyd(points, plus_plus(points, k, rng), cfg);
        } else {
            fits[r] = lloyd(points, *warm_start, cfg);
        }
    });
    std::size_t best = 0;
    for (std::size_t r = 1; r < fits.size(); ++r) {
        if (fits[r].wcss < fits[best].wcss) best = r;
    }
    return std::move(fits[best]);
}

}  // namespace

ClusterModel kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansConfig& config) {
    check_points(points, k);
    return finish(points, best_of(points, k, seed, config, nullptr), k, seed);
}

std::vector<int> assign(const ClusterModel& model, const Matrix& points) {
    if (points.rows() != model.centroids.rows()) {
        throw Error(fmt::format("points have dimension {}, model expects {}", points.rows(), model.centroids.rows()));
    }
    std::vector<int> labels;
    std::vector<double> dist;
    nearest(points, model.centroids, labels, dist);
    return labels;
}

double wcss(const Matrix& points, const Matrix& centroids, std::span<const int> labels) {
    if (labels.size() != static_cast<std::size_t>(points.cols())) throw Error("labels and points differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        s += (points.col(static_cast<Eigen::Index>(i)) - centroids.col(labels[i])).squaredNorm();
    }
    return s;
}

ElbowResult elbow_select(const Matrix& points, std::size_t k_min, std::size_t k_max, std::uint64_t seed,
                         const KMeansConfig& config) {
    if (k_min < 1 || k_max < k_min + 2) throw Error("elbow needs k_min >= 1 and at least three values of k");
    check_points(points, k_max);
    ElbowResult out;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        Matrix warm;
        if (!out.models.empty()) {
            const auto& prev = out.models.back();
            warm.resize(points.rows(), static_cast<Eigen::Index>(k));
            warm.leftCols(static_cast<Eigen::Index>(k - 1)) = prev.centroids;
            std::vector<int> labels;
            std::vector<double> dist;
            nearest(points, prev.centroids, labels, dist);
            const auto far = std::max_element(dist.begin(), dist.end()) - dist.begin();
            warm.col(static_cast<Eigen::Index>(k - 1)) = points.col(far);
        }
        const auto s = derive_seed(seed, k);
        auto m = finish(points, best_of(points, k, s, config, out.models.empty() ? nullptr : &warm), k, s);
        out.ks.push_back(k);
        out.wcss.push_back(m.wcss);
        out.models.push_back(std::move(m));
    }

    const double w0 = out.wcss.front(), w1 = out.wcss.back();
    const double span = static_cast<double>(k_max - k_min);
    double best_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out.ks.size(); ++i) {
        const double chord = w0 + (w1 - w0) * static_cast<double>(out.ks[i] - k_min) / span;
        const double gap = chord - out.wcss[i];
        if (gap > best_gap) {
            best_gap = gap;
            out.k_star = out.ks[i];
        }
    }
    // local chord gap at the knee, relative to the drop across its neighbours
    out.confidence = 0.0;
    const auto i = static_cast<std::size_t>(out.k_star - k_min);
    if (i > 0 && i + 1 < out.ks.size()) {
        const double before = out.wcss[i - 1], after = out.wcss[i + 1];
        if (before > after) out.confidence = (0.5 * (before + after) - out.wcss[i]) / (before - after);
    }
    out.low_confidence = out.confidence < kElbowConfidenceThreshold;
    return out;
}

PcaResult pca(const Matrix& points, std::size_t out_dim) {
    const auto d = points.rows();
    const auto n = points.cols();
    if (n < 2) throw Error("PCA needs at least two points");
    if (out_dim == 0 || static_cast<Eigen::Index>(out_dim) > d) {
        throw Error(fmt::format("PCA output dimension must be in [1, {}]", d));
    }
    PcaResult r;
    r.mean = points.rowwise().mean();
    const Matrix centered = points.colwise() - r.mean;
    const Matrix cov = centered * centered.transpose() / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    if (eig.info() != Eigen::Success) throw Error("PCA eigen-decomposition failed");

    const auto m = static_cast<Eigen::Index>(out_dim);
    const Vector values = eig.eigenvalues().reverse().cwiseMax(0.0);
    const double trace = values.sum();
    r.components = eig.eigenvectors().rowwise().reverse().leftCols(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        Eigen::Index arg = 0;
        r.components.col(j).cwiseAbs().maxCoeff(&arg);
        if (r.components(arg, j) < 0.0) r.components.col(j) *= -1.0;
    }
    r.explained_ratio = trace > 0.0 ? Vector(values.head(m) / trace) : Vector::Zero(m);
    r.projected = r.components.transpose() * centered;
    return r;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw Error("labelings differ in length");
    const auto n = static_cast<double>(a.size());
    if (a.size() < 2) return 1.0;
    auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
    std::map<std::pair<int, int>, double> table;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    double index = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [key, c] : table) index += pairs(c);
    for (const auto& [key, c] : rows) sum_a += pairs(c);
    for (const auto& [key, c] : cols) sum_b += pairs(c);
    const double expected = sum_a * sum_b / pairs(n);
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

std::string cluster_model_json(const ClusterModel& m) {
    nlohmann::json j;
    j["k"] = m.k;
    j["dim"] = m.centroids.rows();
    j["seed"] = m.seed;
    j["wcss"] = m.wcss;
    j["iterations"] = m.iterations;
    auto& cs = j["centroids"] = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.centroids.cols(); ++c) {
        cs.push_back(std::vector<double>(m.centroids.col(c).data(), m.centroids.col(c).data() + m.centroids.rows()));
    }
    return j.dump(1) + "\n";
}

ClusterModel parse_cluster_model_json(const std::string& text, const std::string& origin) {
    try {
        const auto j = nlohmann::json::parse(text);
        ClusterModel m;
        m.k = j.at("k").get<std::size_t>();
        const auto dim = j.at("dim").get<Eigen::Index>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.wcss = j.at("wcss").get<double>();
        m.iterations = j.at("iterations").get<std::size_t>();
        const auto& cs = j.at("centroids");
        if (m.k == 0 || cs.size() != m.k) throw Error("centroid count does not match k");
        m.centroids.resize(dim, static_cast<Eigen::Index>(m.k));
        for (std::size_t c = 0; c < m.k; ++c) {
            const auto v = cs[c].get<std::vector<double>>();
            if (static_cast<Eigen::Index>(v.size()) != dim) throw Error("centroid dimension mismatch");
            m.centroids.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Vector>(v.data(), dim);
        }
        if (!m.centroids.allFinite()) throw Error("non-finite centroid");
        return m;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(fmt::format("{}: malformed cluster model: {}", origin, ex.what()));
    } catch (const Error& ex) {
        throw Error(fmt::format("{}: {}", origin, ex.what()));
    }
}

void save_cluster_model(const std::filesystem::path& path, const ClusterModel& model) {
    csv::write_text(path, cluster_model_json(model));
}

ClusterModel load_cluster_model(const std::filesystem::path& path) {
    return parse_cluster_model_json(csv::read_text(path), path.string());
}

std::string assignments_csv(std::span<const AgentId> agents, std::span<const int> labels) {
    if (agents.size() != labels.size()) throw Error("agents and labels differ in length");
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "sample_id,agent,cluster\n");
    for (std::size_t i = 0; i < labels.size(); ++i) fmt::format_to(std::back_inserter(buf), "{},{},{}\n", i, agents[i], labels[i]);
    return fmt::to_string(buf);
}

std::string elbow_csv(const ElbowResult& e) {
    std::string s = "k,wcss\n";
    for (std::size_t i = 0; i < e.ks.size(); ++i) s += fmt::format("{},{}\n", e.ks[i], csv::format_real(e.wcss[i]));
    return s;
}

std::string pca_csv(const PcaResult& p, std::span<const AgentId> agents, std::span<const int> labels) {
    const auto n = static_cast<std::size_t>(p.projected.cols());
    if (agents.size() != n || labels.size() != n) throw Error("PCA export needs one agent and label per point");
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "sample_id,agent,cluster");
    for (Eigen::Index j = 0; j < p.projected.rows(); ++j) fmt::format_to(std::back_inserter(buf), ",pc{}", j + 1);
    buf.push_back('\n');
    for (std::size_t i = 0; i < n; ++i) {
        fmt::format_to(std::back_inserter(buf), "{},{},{}", i, agents[i], labels[i]);
        for (Eigen::Index j = 0; j < p.projected.rows(); ++j) {
            fmt::format_to(std::back_inserter(buf), ",{}", csv::format_real(p.projected(j, static_cast<Eigen::Index>(i))));
        }
        buf.push_back('\n');
    }
    return fmt::to_string(buf);
}

}  // namespace ofrep
