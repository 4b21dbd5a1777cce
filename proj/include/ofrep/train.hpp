#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ofrep/core.hpp"
#include "ofrep/nn.hpp"
#include "ofrep/triplets.hpp"

namespace ofrep {

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    double lr = 0.002;
    std::uint64_t seed = 0;
    /// Write a checkpoint every this many epochs (0 = only at the end).
    std::size_t checkpoint_every = 0;
    /// Directory for checkpoints; empty disables writing them.
    std::filesystem::path checkpoint_dir;
    int threads = 1;

    /// 500 epochs.
    static TrainConfig full_scale();
};

void validate(const TrainConfig& config);

/// Everything needed to resume training or to evaluate a model.
struct Checkpoint {
    EncoderParams params;
    AdamState adam;
    NormalizationStats norm;
    std::uint64_t seed = 0;
    std::size_t epoch = 0;  // completed epochs
    std::vector<double> loss_history;
};

std::string checkpoint_json(const Checkpoint& ckpt);
Checkpoint parse_checkpoint_json(const std::string& text, const std::string& origin = "<memory>");
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrainResult {
    EncoderParams params;
    std::vector<double> loss_history;  // mean triplet loss per epoch
    Checkpoint checkpoint;
};

/// Called after every epoch with (epoch index from 1, mean loss).
using EpochCallback = std::function<void(std::size_t, double)>;

/// Adam over a fixed triplet corpus whose entries index `features`. Each
/// epoch visits the corpus in an order shuffled with a seed derived from
/// (seed, epoch); the final batch may be short. Gradients are batch means.
/// With `resume`, training continues from its epoch counter and state and
/// follows the same trajectory as an uninterrupted run.
TrainResult train(std::span<const FeatureMatrix> features, std::span<const Triplet> corpus,
                  const EncoderConfig& encoder, const TrainConfig& config, const NormalizationStats& norm,
                  const std::optional<Checkpoint>& resume = std::nullopt, const EpochCallback& on_epoch = {});

/// CSV `epoch,mean_loss`.
std::string loss_history_csv(std::span<const double> history);

}  // namespace ofrep
