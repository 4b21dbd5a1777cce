#include "ofrep/eval.hpp"

#include <cmath>

#include <fmt/format.h>

#include "ofrep/common.hpp"
#include "ofrep/csv.hpp"

namespace ofrep {

namespace {

enum class Outcome { Success, Failure, Tie };

Outcome judge(const Matrix& e, const Triplet& t) {
    const auto cols = static_cast<std::size_t>(e.cols());
    if (t.anchor >= cols || t.positive >= cols || t.negative >= cols) {
        throw Error("triplet refers to a window without an embedding");
    }
    const auto a = e.col(static_cast<Eigen::Index>(t.anchor));
    // squared distances order exactly like the distances themselves
    const double d_ap = (a - e.col(static_cast<Eigen::Index>(t.positive))).squaredNorm();
    const double d_an = (a - e.col(static_cast<Eigen::Index>(t.negative))).squaredNorm();
    if (d_an < d_ap) return Outcome::Failure;
    if (d_an == d_ap) return Outcome::Tie;
    return Outcome::Success;
}

void tally(FailureRate& r, Outcome o) {
    ++r.n;
    if (o == Outcome::Failure) ++r.failures;
    if (o == Outcome::Tie) ++r.ties;
}

}  // namespace

double FailureRate::ci_half_width() const {
    if (n == 0) return 0.0;
    const double r = rate();
    return 1.96 * std::sqrt(r * (1.0 - r) / static_cast<double>(n));
}

FailureRate failure_rate(const Matrix& embeddings, std::span<const Triplet> triplets) {
    if (triplets.empty()) throw Error("failure rate needs at least one test triplet");
    FailureRate r;
    for (const auto& t : triplets) tally(r, judge(embeddings, t));
    return r;
}

std::map<AgentId, FailureRate> failure_rate_per_agent(const Matrix& embeddings, std::span<const Triplet> triplets,
                                                      std::span<const AgentId> window_agents) {
    if (triplets.empty()) throw Error("failure rate needs at least one test triplet");
    std::map<AgentId, FailureRate> out;
    for (const auto& t : triplets) {
        if (t.anchor >= window_agents.size()) throw Error("triplet anchor has no agent label");
        tally(out[window_agents[t.anchor]], judge(embeddings, t));
    }
    return out;
}

std::string failure_report_csv(FeatureSet fs, const FailureRate& global,
                               const std::map<AgentId, FailureRate>& per_agent) {
    std::string s = "feature_set,agent,n_anchors,failure_rate,ties\n";
    s += fmt::format("{},ALL,{},{},{}\n", name(fs), global.n, csv::format_real(global.rate()), global.ties);
    for (const auto& [agent, r] : per_agent) {
        s += fmt::format("{},{},{},{},{}\n", name(fs), agent, r.n, csv::format_real(r.rate()), r.ties);
    }
    return s;
}

std::vector<AblationRow> ablation_report(std::span<const Sample> train_windows, std::span<const Triplet> train_triplets,
                                         std::span<const Sample> test_windows, std::span<const Triplet> test_triplets,
                                         const EncoderConfig& encoder, const TrainConfig& config,
                                         std::span<const FeatureSet> feature_sets) {
    std::vector<AblationRow> rows;
    for (const auto fs : feature_sets) {
        const auto norm = fit_normalization(train_windows, fs);
        std::vector<FeatureMatrix> train_x, test_x;
        train_x.reserve(train_windows.size());
        for (const auto& w : train_windows) train_x.push_back(featurize(w, fs, norm));
        test_x.reserve(test_windows.size());
        for (const auto& w : test_windows) test_x.push_back(featurize(w, fs, norm));

        EncoderConfig ec = encoder;
        ec.input_width = width(fs);
        const auto trained = train(train_x, train_triplets, ec, config, norm);
        const Matrix emb = encode_all(trained.params, test_x, config.threads);
        rows.push_back({fs, failure_rate(emb, test_triplets), trained.loss_history});
    }
    return rows;
}

std::string ablation_csv(std::span<const AblationRow> rows) {
    std::string s = "feature_set,n_triplets,failure_rate,ci95_half_width,ties\n";
    for (const auto& r : rows) {
        s += fmt::format("{},{},{},{},{}\n", name(r.feature_set), r.result.n, csv::format_real(r.result.rate()),
                         csv::format_real(r.result.ci_half_width()), r.result.ties);
    }
    return s;
}

}  // namespace ofrep
