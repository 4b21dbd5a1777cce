#include "ofrep/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "ofrep/common.hpp"
#include "ofrep/csv.hpp"

namespace ofrep {

namespace {

using nlohmann::json;

// Triplets per gradient task. Fixed so the summation order, and with it
// every bit of the result, is independent of the thread count.
constexpr std::size_t kChunk = 32;

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr int kCheckpointVersion = 1;

json matrix_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
    if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols) {
        throw Error(fmt::format("checkpoint tensor {} has the wrong shape", what));
    }
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw Error(fmt::format("checkpoint tensor {} has the wrong size", what));
    }
    return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

json params_json(const EncoderParams& p) {
    json layers = json::array();
    for (const auto& l : p.layers) {
        layers.push_back({{"W", matrix_json(l.input_weights)},
                          {"U", matrix_json(l.recurrent_weights)},
                          {"b", matrix_json(l.bias)}});
    }
    return layers;
}

void params_from(const json& j, EncoderParams& p) {
    if (!j.is_array() || j.size() != p.layers.size()) throw Error("checkpoint must hold two LSTM layers");
    for (std::size_t k = 0; k < p.layers.size(); ++k) {
        auto& l = p.layers[k];
        const auto& jl = j[k];
        l.input_weights = matrix_from(jl.at("W"), l.input_weights.rows(), l.input_weights.cols(), "W");
        l.recurrent_weights = matrix_from(jl.at("U"), l.recurrent_weights.rows(), l.recurrent_weights.cols(), "U");
        l.bias = matrix_from(jl.at("b"), l.bias.rows(), 1, "b");
    }
}

}  // namespace

TrainConfig TrainConfig::full_scale() {
    TrainConfig c;
    c.epochs = 500;
    return c;
}

void validate(const TrainConfig& c) {
    if (c.batch_size == 0) throw Error("batch_size must be positive");
    if (!(c.lr > 0.0) || !std::isfinite(c.lr)) throw Error("learning rate must be positive and finite");
    if (c.threads < 1) throw Error("threads must be at least 1");
}

std::string checkpoint_json(const Checkpoint& c) {
    const auto& e = c.params.config;
    json j;
    j["version"] = kCheckpointVersion;
    j["encoder"] = {{"input_width", e.input_width}, {"hidden1", e.hidden1}, {"hidden2", e.hidden2},
                    {"margin", e.margin}};
    j["feature_set"] = std::string(name(c.norm.feature_set));
    j["normalization"] = {{"mean", c.norm.mean}, {"scale", c.norm.scale}};
    j["seed"] = c.seed;
    j["epoch"] = c.epoch;
    j["loss_history"] = c.loss_history;
    j["params"] = params_json(c.params);
    j["adam"] = {{"step", c.adam.step},
                 {"first_moment", params_json(c.adam.first_moment)},
                 {"second_moment", params_json(c.adam.second_moment)}};
    return j.dump(1) + "\n";
}

Checkpoint parse_checkpoint_json(const std::string& text, const std::string& origin) {
    try {
        const auto j = json::parse(text);
        if (j.at("version").get<int>() != kCheckpointVersion) throw Error("unsupported checkpoint version");
        EncoderConfig e;
        const auto& je = j.at("encoder");
        e.input_width = je.at("input_width").get<std::size_t>();
        e.hidden1 = je.at("hidden1").get<std::size_t>();
        e.hidden2 = je.at("hidden2").get<std::size_t>();
        e.margin = je.at("margin").get<double>();
        validate(e);

        Checkpoint c;
        c.norm.feature_set = parse_feature_set(j.at("feature_set").get<std::string>());
        c.norm.mean = j.at("normalization").at("mean").get<std::vector<double>>();
        c.norm.scale = j.at("normalization").at("scale").get<std::vector<double>>();
        if (c.norm.mean.size() != width(c.norm.feature_set) || c.norm.scale.size() != width(c.norm.feature_set) ||
            e.input_width != width(c.norm.feature_set)) {
            throw Error("normalization width does not match the feature set");
        }
        c.seed = j.at("seed").get<std::uint64_t>();
        c.epoch = j.at("epoch").get<std::size_t>();
        c.loss_history = j.at("loss_history").get<std::vector<double>>();
        c.params = EncoderParams::zeros(e);
        params_from(j.at("params"), c.params);
        c.adam = AdamState::zeros(e);
        c.adam.step = j.at("adam").at("step").get<std::int64_t>();
        params_from(j.at("adam").at("first_moment"), c.adam.first_moment);
        params_from(j.at("adam").at("second_moment"), c.adam.second_moment);
        return c;
    } catch (const json::exception& ex) {
        throw Error(fmt::format("{}: malformed checkpoint: {}", origin, ex.what()));
    } catch (const Error& ex) {
        throw Error(fmt::format("{}: {}", origin, ex.what()));
    }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    csv::write_text(path, checkpoint_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return parse_checkpoint_json(csv::read_text(path), path.string());
}

TrainResult train(std::span<const FeatureMatrix> features, std::span<const Triplet> corpus,
                  const EncoderConfig& encoder, const TrainConfig& config, const NormalizationStats& norm,
                  const std::optional<Checkpoint>& resume, const EpochCallback& on_epoch) {
    validate(encoder);
    validate(config);
    for (const auto& t : corpus) {
        if (t.anchor >= features.size() || t.positive >= features.size() || t.negative >= features.size()) {
            throw Error("triplet refers to a window outside the feature list");
        }
    }
    if (!corpus.empty() && config.epochs > 0 && features.empty()) throw Error("no features to train on");

    Checkpoint state;
    if (resume) {
        state = *resume;
        const auto& rc = state.params.config;
        if (rc.input_width != encoder.input_width || rc.hidden1 != encoder.hidden1 || rc.hidden2 != encoder.hidden2 ||
            rc.margin != encoder.margin) {
            throw Error("checkpoint encoder shape differs from the requested encoder");
        }
        if (state.seed != config.seed) throw Error("checkpoint seed differs from the training seed");
        if (state.loss_history.size() != state.epoch) throw Error("checkpoint loss history length mismatch");
    } else {
        state.params = init_params(encoder, derive_seed(config.seed, kInitStream));
        state.adam = AdamState::zeros(encoder);
        state.norm = norm;
        state.seed = config.seed;
    }

    const AdamConfig adam{config.lr};
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t epoch = state.epoch; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(config.seed, kShuffleStream, epoch));
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const auto end = std::min(order.size(), begin + config.batch_size);
            const auto n_chunks = (end - begin + kChunk - 1) / kChunk;
            std::vector<LossAndGradient> parts(n_chunks);
            parallel_for(n_chunks, config.threads, [&](std::size_t c) {
                const auto cb = begin + c * kChunk;
                const auto ce = std::min(end, cb + kChunk);
                std::vector<TripletInput> inputs;
                inputs.reserve(ce - cb);
                for (auto i = cb; i < ce; ++i) {
                    const auto& t = corpus[order[i]];
                    inputs.push_back({&features[t.anchor], &features[t.positive], &features[t.negative]});
                }
                parts[c] = backward_batch(state.params, inputs, encoder.margin);
            });
            double batch_loss = 0.0;
            EncoderParams grad = std::move(parts[0].gradient);
            batch_loss += parts[0].loss;
            for (std::size_t c = 1; c < n_chunks; ++c) {
                grad += parts[c].gradient;
                batch_loss += parts[c].loss;
            }
            if (!std::isfinite(batch_loss)) {
                throw Error(fmt::format("non-finite training loss in epoch {} at triplet {}", epoch + 1, begin));
            }
            grad *= 1.0 / static_cast<double>(end - begin);
            adam_step(state.params, grad, state.adam, adam);
            epoch_loss += batch_loss;
        }
        const double mean = corpus.empty() ? 0.0 : epoch_loss / static_cast<double>(corpus.size());
        state.loss_history.push_back(mean);
        state.epoch = epoch + 1;
        if (on_epoch) on_epoch(state.epoch, mean);
        if (!config.checkpoint_dir.empty() && config.checkpoint_every > 0 && state.epoch % config.checkpoint_every == 0) {
            save_checkpoint(config.checkpoint_dir / fmt::format("epoch_{:04d}.json", state.epoch), state);
        }
    }
    if (!state.params.all_finite()) throw Error("training produced non-finite parameters");

    TrainResult out;
    out.params = state.params;
    out.loss_history = state.loss_history;
    out.checkpoint = std::move(state);
    return out;
}

std::string loss_history_csv(std::span<const double> history) {
    std::string s = "epoch,mean_loss\n";
    for (std::size_t i = 0; i < history.size(); ++i) s += fmt::format("{},{}\n", i + 1, csv::format_real(history[i]));
    return s;
}

}  // namespace ofrep
