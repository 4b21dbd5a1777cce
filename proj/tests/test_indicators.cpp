#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "ofrep/indicators.hpp"
#include "ofrep/synth.hpp"

using namespace ofrep;

namespace {

/// Order-by-order reference, written independently of the library.
std::array<double, kIndicatorCount> reference(const Sample& s) {
    std::array<double, kIndicatorCount> r{};
    const auto& o = s.orders;
    const std::size_t n = o.size();
    double sum_q = 0, sum_qi = 0, signed_q = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double q = static_cast<double>(o[i].q_filled);
        const double qi = static_cast<double>(o[i].q_intended);
        const bool buy = o[i].side == 1;
        const double same = static_cast<double>(buy ? o[i].ask_qty : o[i].bid_qty);
        const double opp = static_cast<double>(buy ? o[i].bid_qty : o[i].ask_qty);
        r[1] += qi / static_cast<double>(n);
        r[2] += q / static_cast<double>(n);
        r[4] += static_cast<double>(o[i].best_ask - o[i].best_bid) / static_cast<double>(n);
        r[5] += same / static_cast<double>(n);
        r[6] += opp / static_cast<double>(n);
        r[7] += same / q / static_cast<double>(n);
        r[8] += opp / q / static_cast<double>(n);
        r[10] += o[i].modif / static_cast<double>(n);
        sum_q += q;
        sum_qi += qi;
        signed_q += buy ? q : -q;
    }
    const double mean_gap = (o[n - 1].t - o[0].t) / static_cast<double>(n - 1);
    r[0] = 60.0 / mean_gap;
    r[3] = sum_q / sum_qi;
    r[9] = std::abs(signed_q) / sum_q;
    return r;
}

Sample uniform_sample() {
    std::mt19937_64 rng(1);
    auto s = test::random_sample(rng);
    for (std::size_t i = 0; i < s.orders.size(); ++i) {
        auto& o = s.orders[i];
        o.t = static_cast<double>(i);
        o.side = 1;
        o.q_intended = 10;
        o.q_filled = 10;
    }
    s.start_time = 0.0;
    return s;
}

}  // namespace

TEST(Indicators, MatchReferenceOnRandomSamples) {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 1000; ++k) {
        const auto s = test::random_sample(rng, 1, 0, 10.0);
        const auto got = indicators(s);
        const auto ref = reference(s);
        for (std::size_t f = 0; f < kIndicatorCount; ++f) {
            EXPECT_NEAR(field(got, f), ref[f], 1e-12 * std::max(1.0, std::abs(ref[f]))) << kIndicatorNames[f];
        }
    }
}

TEST(Indicators, OneSecondSpacingIsSixtyPerMinute) {
    const auto s = uniform_sample();
    EXPECT_DOUBLE_EQ(indicators(s).frequency, 60.0);
}

TEST(Indicators, DirectionExtremes) {
    auto s = uniform_sample();
    EXPECT_EQ(indicators(s).direction, 1.0);
    for (std::size_t i = 0; i < s.orders.size(); i += 2) s.orders[i].side = -1;
    EXPECT_EQ(indicators(s).direction, 0.0);
}

TEST(Indicators, FillRates) {
    auto s = uniform_sample();
    EXPECT_EQ(indicators(s).fill_rate, 1.0);
    for (auto& o : s.orders) o.q_filled = 5;
    EXPECT_EQ(indicators(s).fill_rate, 0.5);
}

TEST(Indicators, BuyUsesAskQueue) {
    auto s = uniform_sample();
    for (auto& o : s.orders) {
        o.bid_qty = 30;
        o.ask_qty = 70;
    }
    const auto x = indicators(s);
    EXPECT_EQ(x.qs, 70.0);
    EXPECT_EQ(x.opp_qs, 30.0);
    EXPECT_EQ(x.rqs, 7.0);
}

TEST(Indicators, ZeroSpanRejected) {
    auto s = uniform_sample();
    for (auto& o : s.orders) o.t = 5.0;
    s.start_time = 5.0;
    EXPECT_THROW(indicators(s), Error);
}

TEST(Quartiles, FivePoints) {
    const auto q = quartiles({5, 1, 4, 2, 3});
    EXPECT_EQ(q.q25, 2.0);
    EXPECT_EQ(q.q50, 3.0);
    EXPECT_EQ(q.q75, 4.0);
    EXPECT_DOUBLE_EQ(percentile({0, 10}, 0.3), 3.0);
}

TEST(Ratings, TercileBoundariesTakeLowerRating) {
    // medians of frequency per cluster: 1, 2, 3, 4 -> terciles at 2 and 3
    std::vector<IndicatorSet> sets;
    std::vector<int> labels;
    for (int c = 0; c < 4; ++c) {
        IndicatorSet s;
        s.frequency = c + 1.0;
        sets.push_back(s);
        labels.push_back(c);
    }
    const auto rows = cluster_summary(sets, labels);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].rating[0], "+");
    EXPECT_EQ(rows[1].rating[0], "+");
    EXPECT_EQ(rows[2].rating[0], "++");
    EXPECT_EQ(rows[3].rating[0], "+++");
    EXPECT_EQ(rows[0].rating[10], "none");
    EXPECT_EQ(ratings_csv(rows).substr(0, 20), "cluster,frequency,or");
}

TEST(Profile, SingleClusterAgent) {
    std::mt19937_64 rng(3);
    std::vector<Sample> samples;
    std::vector<IndicatorSet> sets;
    for (int d = 0; d < 3; ++d) {
        samples.push_back(test::random_sample(rng, 5, d, 600.0));
        sets.push_back(indicators(samples.back()));
    }
    const std::vector<int> labels{2, 2, 2};
    const auto p = agent_profile(5, samples, sets, labels);
    ASSERT_EQ(p.clusters.size(), 1u);
    EXPECT_EQ(p.clusters[0].cluster, 2);
    ASSERT_EQ(p.hour_histogram.size(), 1u);
    EXPECT_EQ(p.hour_histogram.at(2)[0], 3u);
    EXPECT_EQ(profile_hours_csv(p), "cluster,h09,h10,h11,h12,h13,h14,h15,h16\n2,3,0,0,0,0,0,0,0\n");
    EXPECT_THROW(agent_profile(6, samples, sets, labels), Error);
}

TEST(Profile, MorningArchetypeTradesBeforeOnePm) {
    AgentArchetype morning;
    for (const auto& a : default_archetypes()) {
        if (a.session_phase) morning = a;
    }
    auto c = make_market({morning}, 1, 3, 6);
    const auto m = generate(c);
    const auto windows = build_all_windows(m.orders, 50);
    std::vector<IndicatorSet> sets;
    for (const auto& w : windows) sets.push_back(indicators(w));
    const std::vector<int> labels(windows.size(), 0);
    const auto p = agent_profile(windows.front().agent, windows, sets, labels);
    const auto& h = p.hour_histogram.at(0);
    double early = 0, total = 0;
    for (std::size_t i = 0; i < kSessionHours; ++i) {
        total += static_cast<double>(h[i]);
        if (i < 4) early += static_cast<double>(h[i]);
    }
    EXPECT_GT(early / total, 0.8);
}

TEST(Dominant, MajorityWithLowestTie) {
    EXPECT_EQ(dominant_label(std::vector<int>{3, 1, 3, 1, 2}), 1);
    EXPECT_EQ(dominant_label(std::vector<int>{4, 4, 0}), 4);
    EXPECT_THROW(dominant_label(std::vector<int>{}), Error);
}

TEST(Passive, Ratios) {
    std::vector<MarketOrder> orders(100);
    for (auto& o : orders) o.agent = 1;
    std::vector<PassiveFill> fills(300);
    for (auto& f : fills) f.agent = 1;
    EXPECT_EQ(passive_aggressive_ratio(orders, fills, 1), 3.0);
    EXPECT_EQ(passive_aggressive_ratio(orders, {}, 1), 0.0);
    EXPECT_THROW(passive_aggressive_ratio(orders, fills, 2), Error);
}
