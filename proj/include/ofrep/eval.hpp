#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ofrep/core.hpp"
#include "ofrep/nn.hpp"
#include "ofrep/train.hpp"
#include "ofrep/triplets.hpp"

namespace ofrep {

/// Counts of one failure-rate evaluation. A failure is
/// |f(a) - f(n)| < |f(a) - f(p)|; equality is a tie and not a failure.
struct FailureRate {
    std::size_t n = 0;
    std::size_t failures = 0;
    std::size_t ties = 0;

    double rate() const { return n == 0 ? 0.0 : static_cast<double>(failures) / static_cast<double>(n); }
    /// Normal-approximation 95% binomial half-width.
    double ci_half_width() const;
};

/// `embeddings` holds one column per window; triplets index its columns.
FailureRate failure_rate(const Matrix& embeddings, std::span<const Triplet> triplets);

/// Rates restricted to the anchors of each agent; agents with no anchor are
/// absent. `window_agents[i]` is the agent of window i.
std::map<AgentId, FailureRate> failure_rate_per_agent(const Matrix& embeddings, std::span<const Triplet> triplets,
                                                      std::span<const AgentId> window_agents);

/// `feature_set,agent,n_anchors,failure_rate,ties`, global row first with
/// agent `ALL`.
std::string failure_report_csv(FeatureSet fs, const FailureRate& global,
                               const std::map<AgentId, FailureRate>& per_agent);

struct AblationRow {
    FeatureSet feature_set = FeatureSet::Basic;
    FailureRate result;
    std::vector<double> loss_history;
};

/// Trains one encoder per feature set with identical configuration, seeds
/// and triplet indices, and evaluates each on the test triplets.
std::vector<AblationRow> ablation_report(std::span<const Sample> train_windows, std::span<const Triplet> train_triplets,
                                         std::span<const Sample> test_windows, std::span<const Triplet> test_triplets,
                                         const EncoderConfig& encoder, const TrainConfig& config,
                                         std::span<const FeatureSet> feature_sets);

/// `feature_set,n_triplets,failure_rate,ci95_half_width,ties`.
std::string ablation_csv(std::span<const AblationRow> rows);

}  // namespace ofrep
