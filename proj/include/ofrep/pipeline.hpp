#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ofrep/cluster.hpp"
#include "ofrep/core.hpp"
#include "ofrep/eval.hpp"
#include "ofrep/indicators.hpp"
#include "ofrep/nn.hpp"
#include "ofrep/synth.hpp"
#include "ofrep/train.hpp"
#include "ofrep/triplets.hpp"

namespace ofrep::pipeline {

namespace fs = std::filesystem;

/// Every tunable of the file-based pipeline, with desk-scale defaults.
struct Config {
    std::uint64_t seed = 0;
    int threads = 1;

    // generate
    std::size_t n_agents = 30;
    std::int32_t n_days = 25;
    std::string archetype_set = "default";  // default | ablation
    fs::path archetypes_file;               // overrides archetype_set when set
    double jitter = 0.1;
    /// Optional regime switch: this agent trades as `switch_to` from
    /// `switch_day` on.
    std::optional<AgentId> switch_agent;
    std::int32_t switch_day = 0;
    std::string switch_to;

    // windows
    std::size_t stride = kWindowLength;
    std::size_t min_orders_per_day = kMinOrdersPerDay;
    std::size_t min_days = 3;

    // triplets
    double horizon_s = kDefaultHorizonSeconds;
    std::size_t train_triplets = 20000;
    std::size_t test_triplets = 20000;

    // model
    FeatureSet feature_set = FeatureSet::BasicMQS;
    EncoderConfig encoder;
    TrainConfig train;

    // cluster
    std::optional<std::size_t> k;  // unset: elbow
    std::size_t k_min = 2;
    std::size_t k_max = 12;
    std::size_t pca_dim = 2;

    /// 500 epochs on 100,000 training triplets.
    void apply_full_scale();
};

/// Orders, passive fills and ground-truth agent table.
struct GenerateOutputs {
    fs::path orders;
    fs::path passive;
    fs::path agents;
};

MarketConfig market_config(const Config& c);
void generate(const Config& c, const GenerateOutputs& out);

/// The order log sorted by (agent, day, t); window manifests refer to rows
/// of this log.
std::vector<MarketOrder> load_sorted_orders(const fs::path& orders);

/// Window manifest of the agents passing the activity filter, plus a day
/// split.
void windows(const Config& c, const fs::path& orders, const fs::path& windows_out, const fs::path& split_out);

/// Train and test triplets as ids into the window manifest.
void triplets(const Config& c, const fs::path& orders, const fs::path& windows, const fs::path& split,
              const fs::path& train_out, const fs::path& test_out);

struct TrainOutputs {
    fs::path checkpoint;
    fs::path loss_csv;
};

void train(const Config& c, const fs::path& orders, const fs::path& windows, const fs::path& split,
           const fs::path& train_triplets, const TrainOutputs& out, const std::optional<fs::path>& resume = {});

/// Failure-rate report of a checkpoint on test triplets.
void eval(const Config& c, const fs::path& orders, const fs::path& windows, const fs::path& checkpoint,
          const fs::path& test_triplets, const fs::path& report_out);

void ablate(const Config& c, const fs::path& orders, const fs::path& windows, const fs::path& split,
            const fs::path& train_triplets, const fs::path& test_triplets, const fs::path& report_out);

struct ClusterOutputs {
    fs::path model;
    fs::path assignments;
    fs::path elbow;  // written only when k comes from the elbow
    fs::path pca;
};

/// Embeds every manifest window and clusters the embeddings.
void cluster(const Config& c, const fs::path& orders, const fs::path& windows, const fs::path& checkpoint,
             const ClusterOutputs& out);

struct IndicatorOutputs {
    fs::path indicators;
    fs::path summary;
    fs::path ratings;
    fs::path passive_ratio;
    fs::path profiles_dir;  // per-agent profile CSVs
};

void indicators(const Config& c, const fs::path& orders, const fs::path& windows, const fs::path& assignments,
                const fs::path& passive, const IndicatorOutputs& out);

struct ReportInputs {
    fs::path eval_report;
    fs::path ablation;        // optional
    fs::path elbow;           // optional
    fs::path assignments;
    fs::path agents;          // ground truth, optional
    fs::path ratings;         // optional
    fs::path windows;
    fs::path orders;
};

/// Plain-text summary of a run.
void report(const Config& c, const ReportInputs& in, const fs::path& out);

/// Runs every stage into `dir` with the standard file names.
void run_all(const Config& c, const fs::path& dir, bool with_ablation = false);

}  // namespace ofrep::pipeline
