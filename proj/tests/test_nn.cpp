#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "ofrep/common.hpp"
#include "ofrep/nn.hpp"

using namespace ofrep;

namespace {

EncoderConfig tiny() { return {2, 3, 2, 0.5}; }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Scalar LSTM step by step, one gate at a time.
std::vector<std::vector<double>> naive_layer(const LstmLayer& L, const std::vector<std::vector<double>>& xs) {
    const std::size_t h = L.hidden();
    const std::size_t in = static_cast<std::size_t>(L.input_weights.cols());
    std::vector<double> hs(h, 0.0), cs(h, 0.0);
    std::vector<std::vector<double>> out;
    for (const auto& x : xs) {
        std::vector<double> nh(h), nc(h);
        for (std::size_t j = 0; j < h; ++j) {
            double z[4];
            for (std::size_t g = 0; g < 4; ++g) {
                const auto row = static_cast<Eigen::Index>(g * h + j);
                double acc = L.bias[row];
                for (std::size_t k = 0; k < in; ++k) acc += L.input_weights(row, static_cast<Eigen::Index>(k)) * x[k];
                for (std::size_t k = 0; k < h; ++k) {
                    acc += L.recurrent_weights(row, static_cast<Eigen::Index>(k)) * hs[k];
                }
                z[g] = acc;
            }
            const double i = sigmoid(z[0]), f = sigmoid(z[1]), g = std::tanh(z[2]), o = sigmoid(z[3]);
            nc[j] = f * cs[j] + i * g;
            nh[j] = o * std::tanh(nc[j]);
        }
        hs = nh;
        cs = nc;
        out.push_back(hs);
    }
    return out;
}

std::vector<double> naive_encode(const EncoderParams& p, const FeatureMatrix& x) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index r = 0; r < x.values.rows(); ++r) {
        std::vector<double> row;
        for (Eigen::Index c = 0; c < x.values.cols(); ++c) row.push_back(x.values(r, c));
        rows.push_back(row);
    }
    return naive_layer(p.layers[1], naive_layer(p.layers[0], rows)).back();
}

EncoderParams randomized(const EncoderConfig& c, std::uint64_t seed) {
    auto p = init_params(c, seed);
    std::mt19937_64 rng(seed + 1);
    std::normal_distribution<double> z(0.0, 0.4);
    for (auto& L : p.layers) {
        for (Eigen::Index i = 0; i < L.bias.size(); ++i) L.bias[i] = z(rng);
    }
    return p;
}

double fd_loss(const EncoderParams& p, const FeatureMatrix& a, const FeatureMatrix& pos, const FeatureMatrix& n,
               double margin) {
    return triplet_loss(encode(p, a), encode(p, pos), encode(p, n), margin);
}

}  // namespace

TEST(Encoder, DefaultEmbeddingHasForty) {
    EncoderConfig c;
    std::mt19937_64 rng(1);
    const auto x = test::random_features(rng, 8);
    EXPECT_EQ(encode(init_params(c, 1), x).size(), 40);
    EXPECT_EQ(c.embedding_dim(), 40u);
}

TEST(Encoder, ZeroParamsGiveZeroEmbedding) {
    std::mt19937_64 rng(2);
    const auto x = test::random_features(rng, 8);
    const auto e = encode(EncoderParams::zeros(EncoderConfig{}), x);
    EXPECT_EQ(e.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Encoder, MatchesScalarReference) {
    std::mt19937_64 rng(3);
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto p = randomized(tiny(), seed);
        const auto x = test::random_features(rng, 2);
        const auto e = encode(p, x);
        const auto ref = naive_encode(p, x);
        ASSERT_EQ(static_cast<std::size_t>(e.size()), ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(e[static_cast<Eigen::Index>(i)], ref[i], 1e-12);
    }
}

TEST(Encoder, EncodeAllIndependentOfThreads) {
    std::mt19937_64 rng(4);
    EncoderConfig c{8, 16, 6, 0.5};
    const auto p = init_params(c, 4);
    std::vector<FeatureMatrix> xs;
    for (int i = 0; i < 77; ++i) xs.push_back(test::random_features(rng, 8));
    const auto one = encode_all(p, xs, 1);
    const auto four = encode_all(p, xs, 4);
    EXPECT_EQ(one, four);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        EXPECT_LT((one.col(static_cast<Eigen::Index>(i)) - encode(p, xs[i])).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Loss, HandExamples) {
    Embedding a(2), p(2), n(2);
    a << 0, 0;
    p << 2, 0;
    n << 1, 0;
    EXPECT_DOUBLE_EQ(triplet_loss(a, p, n, 0.5), 3.5);
    EXPECT_DOUBLE_EQ(triplet_loss(a, a, a, 0.5), 0.5);
    Embedding far(2);
    far << 1, 0;
    EXPECT_DOUBLE_EQ(triplet_loss(a, a, far, 0.5), 0.0);
}

TEST(Backward, MatchesFiniteDifferences) {
    std::mt19937_64 rng(5);
    const auto p = randomized(tiny(), 9);
    const auto a = test::random_features(rng, 2), pos = test::random_features(rng, 2), n = test::random_features(rng, 2);
    const double margin = 2.0;
    const auto g = backward(p, a, pos, n, margin);
    ASSERT_GT(g.loss, 0.0);
    const auto analytic = test::flat(g.gradient);
    auto probe = p;
    std::vector<double*> slots;
    probe.for_each([&](double& v) { slots.push_back(&v); });
    const double eps = 1e-5;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const double saved = *slots[i];
        *slots[i] = saved + eps;
        const double up = fd_loss(probe, a, pos, n, margin);
        *slots[i] = saved - eps;
        const double down = fd_loss(probe, a, pos, n, margin);
        *slots[i] = saved;
        const double numeric = (up - down) / (2 * eps);
        EXPECT_LT(std::abs(numeric - analytic[i]) / std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6}), 1e-4)
            << "parameter " << i;
    }
}

TEST(Backward, InactiveHingeGivesZeroGradient) {
    std::mt19937_64 rng(6);
    const auto p = randomized(tiny(), 2);
    const auto a = test::random_features(rng, 2), n = test::random_features(rng, 2);
    const auto g = backward(p, a, a, n, 0.0);
    EXPECT_EQ(g.loss, 0.0);
    for (double v : test::flat(g.gradient)) EXPECT_EQ(v, 0.0);
}

TEST(Backward, ZeroInputsLeaveFirstInputWeightsUntouched) {
    const auto p = randomized(tiny(), 3);
    FeatureMatrix zero;
    zero.values = Matrix::Zero(50, 2);
    const auto g = backward(p, zero, zero, zero, 0.5);
    EXPECT_EQ(g.gradient.layers[0].input_weights.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Backward, BatchEqualsSumOfSingles) {
    std::mt19937_64 rng(7);
    EncoderConfig c{3, 5, 4, 1.0};
    const auto p = randomized(c, 5);
    std::vector<FeatureMatrix> xs;
    for (int i = 0; i < 12; ++i) xs.push_back(test::random_features(rng, 3));
    std::vector<TripletInput> batch;
    for (int i = 0; i < 4; ++i) batch.push_back({&xs[3 * i], &xs[3 * i + 1], &xs[3 * i + 2]});
    batch.push_back({&xs[0], &xs[0], &xs[5]});
    const auto total = backward_batch(p, batch, c.margin);
    auto sum = EncoderParams::zeros(c);
    double loss = 0;
    for (const auto& t : batch) {
        const auto g = backward(p, *t.anchor, *t.positive, *t.negative, c.margin);
        sum += g.gradient;
        loss += g.loss;
    }
    EXPECT_NEAR(total.loss, loss, 1e-12);
    const auto a = test::flat(total.gradient), b = test::flat(sum);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
    const auto losses = triplet_losses(p, batch, c.margin);
    double l2 = 0;
    for (double v : losses) l2 += v;
    EXPECT_NEAR(l2, loss, 1e-12);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    EncoderConfig c{1, 1, 1, 0.5};
    auto p = EncoderParams::zeros(c);
    auto g = EncoderParams::zeros(c);
    g.for_each([](double& v) { v = 1.0; });
    auto state = AdamState::zeros(c);
    adam_step(p, g, state);
    // m_hat = 1, v_hat = 1
    const double expected = -0.002 * 1.0 / (1.0 + 1e-8);
    for (double v : test::flat(p)) EXPECT_NEAR(v, expected, 1e-12);
    EXPECT_EQ(state.step, 1);
}

TEST(Adam, ZeroGradientDecaysMoments) {
    EncoderConfig c{1, 2, 1, 0.5};
    auto p = init_params(c, 1);
    const auto before = test::flat(p);
    auto state = AdamState::zeros(c);
    state.first_moment.for_each([](double& v) { v = 1.0; });
    state.second_moment.for_each([](double& v) { v = 4.0; });
    state.step = 3;
    auto zeros = EncoderParams::zeros(c);
    auto p2 = p;
    adam_step(p2, zeros, state);
    for (double v : test::flat(state.first_moment)) EXPECT_DOUBLE_EQ(v, 0.9);
    for (double v : test::flat(state.second_moment)) EXPECT_DOUBLE_EQ(v, 4.0 * 0.999);
    auto fresh = AdamState::zeros(c);
    auto p3 = p;
    adam_step(p3, zeros, fresh);
    EXPECT_EQ(test::flat(p3), before);
}

TEST(Adam, DeterministicAndRejectsNonFinite) {
    EncoderConfig c{2, 2, 2, 0.5};
    auto p1 = init_params(c, 1), p2 = init_params(c, 1);
    auto g = init_params(c, 2);
    auto s1 = AdamState::zeros(c), s2 = AdamState::zeros(c);
    adam_step(p1, g, s1);
    adam_step(p2, g, s2);
    EXPECT_EQ(test::flat(p1), test::flat(p2));
    g.layers[0].bias[0] = std::nan("");
    const auto saved = test::flat(p1);
    EXPECT_THROW(adam_step(p1, g, s1), Error);
    EXPECT_EQ(test::flat(p1), saved);
    EXPECT_EQ(s1.step, 1);
}

TEST(GradCheck, SmallNetworkSeeds) {
    for (std::uint64_t seed : {1, 2, 3}) {
        EXPECT_LT(grad_check(tiny(), seed, true).max_relative_error, 1e-4);
        const auto flat = grad_check(tiny(), seed, false);
        EXPECT_EQ(flat.loss, 0.0);
        EXPECT_EQ(flat.max_relative_error, 0.0);
    }
}

TEST(Init, ForgetBiasAndRange) {
    EncoderConfig c{4, 9, 3, 0.5};
    const auto p = init_params(c, 12);
    for (const auto& L : p.layers) {
        const auto h = static_cast<Eigen::Index>(L.hidden());
        const double bound = 1.0 / std::sqrt(static_cast<double>(h));
        EXPECT_LE(L.input_weights.cwiseAbs().maxCoeff(), bound);
        EXPECT_LE(L.recurrent_weights.cwiseAbs().maxCoeff(), bound);
        EXPECT_EQ(L.bias.segment(h, h), Vector::Ones(h));
    }
    EXPECT_EQ(test::flat(init_params(c, 12)), test::flat(p));
}
