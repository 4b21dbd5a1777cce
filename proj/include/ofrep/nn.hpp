#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ofrep/core.hpp"

namespace ofrep {

using Vector = Eigen::VectorXd;
using Embedding = Eigen::VectorXd;

/// Two stacked LSTM layers, input -> hidden1 -> hidden2; the embedding is
/// the second layer's last hidden state.
struct EncoderConfig {
    std::size_t input_width = 8;
    std::size_t hidden1 = 100;
    std::size_t hidden2 = 40;
    double margin = 0.5;

    std::size_t embedding_dim() const { return hidden2; }
};

void validate(const EncoderConfig& config);

/// Gate blocks are stacked [input; forget; cell; output] along the rows.
struct LstmLayer {
    Matrix input_weights;      // 4h x in
    Matrix recurrent_weights;  // 4h x h
    Vector bias;               // 4h

    std::size_t hidden() const { return static_cast<std::size_t>(recurrent_weights.cols()); }
};

struct EncoderParams {
    EncoderConfig config;
    std::array<LstmLayer, 2> layers;

    /// All-zero tensors shaped for `config`.
    static EncoderParams zeros(const EncoderConfig& config);

    std::size_t size() const;
    bool all_finite() const;

    /// Visits every scalar in a fixed order (layer, W, U, b; column-major).
    void for_each(const std::function<void(double&)>& fn);
    void for_each(const std::function<void(double)>& fn) const;

    EncoderParams& operator+=(const EncoderParams& other);
    EncoderParams& operator*=(double s);
};

/// Uniform(-1/sqrt(h), 1/sqrt(h)) weights per layer, forget-gate bias 1.
EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed);

/// Embedding of one window; hidden and cell states start at zero.
Embedding encode(const EncoderParams& params, const FeatureMatrix& x);

/// Embeddings of many windows as the columns of a d x n matrix. Work is
/// split into fixed-size chunks so the result does not depend on `threads`.
Matrix encode_all(const EncoderParams& params, std::span<const FeatureMatrix> xs, int threads = 1);

/// max(|a - p|^2 - |a - n|^2 + margin, 0).
double triplet_loss(const Embedding& anchor, const Embedding& positive, const Embedding& negative, double margin);

/// Inputs of one triplet; pointers stay owned by the caller.
struct TripletInput {
    const FeatureMatrix* anchor = nullptr;
    const FeatureMatrix* positive = nullptr;
    const FeatureMatrix* negative = nullptr;
};

struct LossAndGradient {
    double loss = 0.0;
    EncoderParams gradient;
};

/// Exact gradient of triplet_loss(encode(a), encode(p), encode(n)) by
/// backpropagation through time. Zero when the hinge is inactive.
LossAndGradient backward(const EncoderParams& params, const FeatureMatrix& anchor, const FeatureMatrix& positive,
                         const FeatureMatrix& negative, double margin);

/// Summed losses and summed gradients of a list of triplets, evaluated as
/// one batched pass.
LossAndGradient backward_batch(const EncoderParams& params, std::span<const TripletInput> triplets, double margin);

/// Loss only, no gradient bookkeeping.
std::vector<double> triplet_losses(const EncoderParams& params, std::span<const TripletInput> triplets,
                                   double margin);

struct AdamConfig {
    double lr = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    EncoderParams first_moment;
    EncoderParams second_moment;
    std::int64_t step = 0;

    static AdamState zeros(const EncoderConfig& config);
};

/// Bias-corrected Adam update in place. Throws on non-finite gradients
/// without touching params or state.
void adam_step(EncoderParams& params, const EncoderParams& grads, AdamState& state, const AdamConfig& config = {});

struct GradCheckResult {
    double max_relative_error = 0.0;
    double loss = 0.0;
    double margin = 0.0;
    std::size_t n_params = 0;
};

/// Central-difference step used by grad_check.
inline constexpr double kGradCheckStep = 1e-5;

/// Magnitude below which a gradient entry is compared absolutely.
inline constexpr double kGradCheckFloor = 1e-6;

/// Compares backward() against central differences on random parameters and
/// a random 50-step triplet. With `hinge_active` the margin is raised so the
/// hinge argument is at least 0.5; otherwise the positive is a copy of the
/// anchor and the margin is 0, which leaves the hinge flat.
GradCheckResult grad_check(const EncoderConfig& config, std::uint64_t seed, bool hinge_active = true);

}  // namespace ofrep
