#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "ofrep/eval.hpp"
#include "ofrep/synth.hpp"

using namespace ofrep;

namespace {

/// Columns 0..n-1 belong to agent 1, n..2n-1 to agent 2.
std::vector<Triplet> two_agent_triplets(std::size_t n, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<Triplet> out;
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t own = k % 2 == 0 ? 0 : n, other = k % 2 == 0 ? n : 0;
        out.push_back({own + pick(rng), own + pick(rng), other + pick(rng)});
    }
    return out;
}

}  // namespace

TEST(FailureRate, RandomEmbeddingsNearHalf) {
    const std::size_t n = 10000;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z;
    Matrix emb(40, static_cast<Eigen::Index>(3 * n));
    for (Eigen::Index i = 0; i < emb.size(); ++i) emb.data()[i] = z(rng);
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back({3 * i, 3 * i + 1, 3 * i + 2});
    const auto r = failure_rate(emb, t);
    EXPECT_EQ(r.n, n);
    EXPECT_GE(r.rate(), 0.48);
    EXPECT_LE(r.rate(), 0.52);
    EXPECT_NEAR(r.ci_half_width(), 1.96 * std::sqrt(r.rate() * (1 - r.rate()) / n), 1e-15);
}

TEST(FailureRate, ConstantPerAgentIsPerfect) {
    Matrix emb(3, 20);
    emb.leftCols(10).colwise() = Vector::Constant(3, 1.0);
    emb.rightCols(10).colwise() = Vector::Constant(3, -1.0);
    const auto r = failure_rate(emb, two_agent_triplets(10, 500, 2));
    EXPECT_EQ(r.failures, 0u);
    EXPECT_EQ(r.ties, 0u);
    EXPECT_EQ(r.rate(), 0.0);
}

TEST(FailureRate, CollapsedEmbeddingsAreAllTies) {
    const Matrix emb = Matrix::Constant(4, 20, 0.3);
    const auto r = failure_rate(emb, two_agent_triplets(10, 300, 3));
    EXPECT_EQ(r.rate(), 0.0);
    EXPECT_EQ(r.ties, 300u);
}

TEST(FailureRate, InvariantUnderIsometry) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    Matrix emb(3, 40);
    for (Eigen::Index i = 0; i < emb.size(); ++i) emb.data()[i] = z(rng);
    const auto t = two_agent_triplets(20, 800, 5);
    const auto base = failure_rate(emb, t);
    const double a = 0.7;
    Matrix rot = Matrix::Identity(3, 3);
    rot(0, 0) = std::cos(a);
    rot(0, 1) = -std::sin(a);
    rot(1, 0) = std::sin(a);
    rot(1, 1) = std::cos(a);
    Matrix moved = rot * emb;
    moved.colwise() += Vector::Constant(3, 5.0);
    EXPECT_EQ(failure_rate(moved, t).failures, base.failures);
}

TEST(FailureRate, EmptyListRejected) {
    const Matrix emb = Matrix::Zero(2, 3);
    EXPECT_THROW(failure_rate(emb, std::vector<Triplet>{}), Error);
}

TEST(PerAgent, WeightedAverageIsGlobal) {
    // agent 1 anchors always succeed, agent 2 anchors always fail
    Matrix emb(1, 4);
    emb << 0.0, 5.0, 10.0, 30.0;
    const std::vector<AgentId> agents{1, 1, 2, 2};
    std::vector<Triplet> t;
    for (int i = 0; i < 50; ++i) t.push_back({0, 1, 2});
    for (int i = 0; i < 50; ++i) t.push_back({2, 3, 1});
    const auto per = failure_rate_per_agent(emb, t, agents);
    ASSERT_EQ(per.size(), 2u);
    EXPECT_EQ(per.at(1).rate(), 0.0);
    EXPECT_EQ(per.at(2).rate(), 1.0);
    EXPECT_EQ(failure_rate(emb, t).rate(), 0.5);
}

TEST(PerAgent, SingleAnchorAgentMatchesGlobal) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> z;
    Matrix emb(2, 6);
    for (Eigen::Index i = 0; i < emb.size(); ++i) emb.data()[i] = z(rng);
    const std::vector<AgentId> agents{7, 7, 7, 8, 8, 8};
    std::vector<Triplet> t{{0, 1, 3}, {1, 2, 4}, {2, 0, 5}, {0, 2, 3}};
    const auto per = failure_rate_per_agent(emb, t, agents);
    ASSERT_EQ(per.size(), 1u);
    EXPECT_EQ(per.at(7).failures, failure_rate(emb, t).failures);
    const auto csv = failure_report_csv(FeatureSet::BasicMQS, failure_rate(emb, t), per);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "feature_set,agent,n_anchors,failure_rate,ties");
    EXPECT_NE(csv.find(",ALL,4,"), std::string::npos);
}

TEST(Ablation, IndistinguishableAgentsGiveOverlappingRates) {
    AgentArchetype a = ablation_archetypes().front();
    auto cfg = make_market({a}, 8, 6, 11);
    for (auto& s : cfg.agents) s.jitter = 0.0;
    const auto m = generate(cfg);
    const auto windows = build_all_windows(m.orders, 50);
    const std::set<std::int32_t> train_days{0, 1, 2, 3}, test_days{4, 5};
    const auto train_w = windows_on_days(windows, train_days);
    const auto test_w = windows_on_days(windows, test_days);
    const auto train_t = sample_triplets(train_w, 7200.0, 1500, 1);
    const auto test_t = sample_triplets(test_w, 7200.0, 2000, 2);
    EncoderConfig enc{8, 8, 4, 0.5};
    TrainConfig tc;
    tc.epochs = 2;
    tc.seed = 5;
    const std::vector<FeatureSet> sets{FeatureSet::Basic, FeatureSet::BasicM, FeatureSet::BasicMQS};
    const auto rows = ablation_report(train_w, train_t, test_w, test_t, enc, tc, sets);
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(rows[i].feature_set, sets[i]);
        EXPECT_EQ(rows[i].loss_history.size(), 2u);
        for (std::size_t j = 0; j < i; ++j) {
            EXPECT_LE(std::abs(rows[i].result.rate() - rows[j].result.rate()),
                      rows[i].result.ci_half_width() + rows[j].result.ci_half_width());
        }
    }
    const auto csv = ablation_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "feature_set,n_triplets,failure_rate,ci95_half_width,ties");
}
