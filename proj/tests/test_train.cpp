#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "ofrep/common.hpp"
#include "ofrep/train.hpp"

using namespace ofrep;

namespace {

FeatureMatrix constant(double v, std::size_t width) {
    FeatureMatrix f;
    f.values = Matrix::Constant(kWindowLength, static_cast<Eigen::Index>(width), v);
    return f;
}

/// Windows 0..n-1 belong to agent A, n..2n-1 to agent B.
struct Toy {
    std::vector<FeatureMatrix> features;
    std::vector<Triplet> triplets;
};

Toy separable(std::size_t n, std::size_t count, std::uint64_t seed) {
    Toy t;
    for (std::size_t i = 0; i < n; ++i) t.features.push_back(constant(1.0, 5));
    for (std::size_t i = 0; i < n; ++i) t.features.push_back(constant(-1.0, 5));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t k = 0; k < count; ++k) {
        const bool b = k % 2 == 1;
        const std::size_t own = b ? n : 0, other = b ? 0 : n;
        t.triplets.push_back({own + pick(rng), own + pick(rng), other + pick(rng)});
    }
    return t;
}

Toy noisy_vs_constant(std::size_t count, std::uint64_t seed) {
    Toy t;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < 40; ++i) t.features.push_back(test::random_features(rng, 5));
    t.features.push_back(constant(3.0, 5));
    std::uniform_int_distribution<std::size_t> pick(0, 39);
    for (std::size_t k = 0; k < count; ++k) t.triplets.push_back({pick(rng), pick(rng), 40});
    return t;
}

EncoderConfig small() { return {5, 6, 4, 0.5}; }

TrainConfig quick(std::size_t epochs) {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = 16;
    c.lr = 0.01;
    c.seed = 3;
    return c;
}

NormalizationStats identity_norm() { return {FeatureSet::Basic, std::vector<double>(5, 0.0), std::vector<double>(5, 1.0)}; }

}  // namespace

TEST(Train, ZeroEpochsKeepsInitialParams) {
    const auto toy = separable(4, 32, 1);
    const auto r = train(toy.features, toy.triplets, small(), quick(0), identity_norm());
    EXPECT_TRUE(r.loss_history.empty());
    EXPECT_EQ(test::flat(r.params), test::flat(init_params(small(), derive_seed(quick(0).seed, 1))));
}

TEST(Train, LossFallsAgainstFarNegatives) {
    const auto toy = noisy_vs_constant(200, 2);
    const auto r = train(toy.features, toy.triplets, small(), quick(5), identity_norm());
    ASSERT_EQ(r.loss_history.size(), 5u);
    EXPECT_LT(r.loss_history[4], r.loss_history[0]);
}

TEST(Train, SeparableToyConverges) {
    const auto toy = separable(8, 256, 4);
    auto cfg = quick(30);
    const auto r = train(toy.features, toy.triplets, small(), cfg, identity_norm());
    EXPECT_LT(r.loss_history.back(), 0.05 * small().margin);
}

TEST(Train, ReproducibleAcrossThreads) {
    const auto toy = noisy_vs_constant(150, 5);
    auto cfg = quick(2);
    const auto a = train(toy.features, toy.triplets, small(), cfg, identity_norm());
    cfg.threads = 3;
    const auto b = train(toy.features, toy.triplets, small(), cfg, identity_norm());
    EXPECT_EQ(a.loss_history, b.loss_history);
    EXPECT_EQ(test::flat(a.params), test::flat(b.params));
}

TEST(Train, ResumeFollowsUninterruptedRun) {
    const auto toy = noisy_vs_constant(100, 6);
    const auto dir = test::temp_dir("resume");
    auto cfg = quick(3);
    cfg.checkpoint_every = 1;
    cfg.checkpoint_dir = dir;
    const auto full = train(toy.features, toy.triplets, small(), cfg, identity_norm());
    const auto ckpt = load_checkpoint(dir / "epoch_0001.json");
    EXPECT_EQ(ckpt.epoch, 1u);
    cfg.checkpoint_dir.clear();
    const auto resumed = train(toy.features, toy.triplets, small(), cfg, identity_norm(), ckpt);
    EXPECT_EQ(resumed.loss_history, full.loss_history);
    EXPECT_EQ(test::flat(resumed.params), test::flat(full.params));
}

TEST(Train, ResumeRejectsOtherSeedOrShape) {
    const auto toy = noisy_vs_constant(20, 7);
    const auto r = train(toy.features, toy.triplets, small(), quick(1), identity_norm());
    auto cfg = quick(2);
    cfg.seed = 99;
    EXPECT_THROW(train(toy.features, toy.triplets, small(), cfg, identity_norm(), r.checkpoint), Error);
    EncoderConfig other = small();
    other.hidden1 = 7;
    EXPECT_THROW(train(toy.features, toy.triplets, other, quick(2), identity_norm(), r.checkpoint), Error);
}

TEST(Train, RejectsOutOfRangeTriplet) {
    const auto toy = separable(2, 4, 1);
    const std::vector<Triplet> bad{{0, 1, 9}};
    EXPECT_THROW(train(toy.features, bad, small(), quick(1), identity_norm()), Error);
}

TEST(Checkpoint, JsonRoundTripIsExact) {
    const auto toy = noisy_vs_constant(30, 8);
    const auto r = train(toy.features, toy.triplets, small(), quick(2), identity_norm());
    const auto back = parse_checkpoint_json(checkpoint_json(r.checkpoint));
    EXPECT_EQ(test::flat(back.params), test::flat(r.checkpoint.params));
    EXPECT_EQ(test::flat(back.adam.first_moment), test::flat(r.checkpoint.adam.first_moment));
    EXPECT_EQ(test::flat(back.adam.second_moment), test::flat(r.checkpoint.adam.second_moment));
    EXPECT_EQ(back.adam.step, r.checkpoint.adam.step);
    EXPECT_EQ(back.loss_history, r.checkpoint.loss_history);
    EXPECT_EQ(back.norm.mean, r.checkpoint.norm.mean);
    EXPECT_EQ(back.norm.feature_set, FeatureSet::Basic);
    EXPECT_EQ(checkpoint_json(back), checkpoint_json(r.checkpoint));
    EXPECT_THROW(parse_checkpoint_json("{\"version\": 1}"), Error);
}

TEST(Train, LossCsv) {
    const std::vector<double> h{0.5, 0.25};
    EXPECT_EQ(loss_history_csv(h), "epoch,mean_loss\n1,0.5\n2,0.25\n");
}
