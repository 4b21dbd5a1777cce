#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>

#include "fixtures.hpp"
#include "ofrep/indicators.hpp"
#include "ofrep/synth.hpp"

using namespace ofrep;

namespace {

AgentArchetype find(const std::string& name) {
    for (const auto& a : default_archetypes()) {
        if (a.name == name) return a;
    }
    throw Error("no archetype " + name);
}

MarketConfig single(const AgentArchetype& a, std::int32_t days, std::uint64_t seed) {
    MarketConfig c;
    c.n_days = days;
    c.seed = seed;
    AgentSpec s;
    s.id = 1;
    s.archetype = a;
    s.jitter = 0.0;
    c.agents.push_back(s);
    return c;
}

std::vector<double> frequencies(const GeneratedMarket& m, AgentId agent) {
    std::vector<double> out;
    for (const auto& w : build_all_windows(m.orders, kWindowLength)) {
        if (w.agent == agent) out.push_back(indicators(w).frequency);
    }
    return out;
}

}  // namespace

TEST(Generate, SlowAgentStillMeetsDailyFloor) {
    AgentArchetype a;
    a.name = "slow";
    a.trade_rate = 200.0 / 480.0;
    const auto m = generate(single(a, 1, 3));
    EXPECT_GE(m.orders.size(), 200u);
    for (const auto& o : m.orders) {
        EXPECT_EQ(o.agent, 1);
        EXPECT_NO_THROW(validate(o));
    }
}

TEST(Generate, SameSeedSameMarket) {
    auto c = make_market(default_archetypes(), 6, 3, 42);
    const auto a = generate(c);
    const auto b = generate(c, 3);
    EXPECT_EQ(a.orders, b.orders);
    EXPECT_EQ(a.passive, b.passive);
    c.seed = 43;
    EXPECT_NE(generate(c).orders, a.orders);
}

TEST(Generate, OutputSortedByAgentDayTime) {
    const auto m = generate(make_market(default_archetypes(), 6, 2, 1));
    auto sorted = m.orders;
    sort_orders(sorted);
    EXPECT_EQ(sorted, m.orders);
}

TEST(Generate, FullDirectionBiasIsOneSided) {
    AgentArchetype a = find("directional");
    a.direction_bias = 1.0;
    const auto m = generate(single(a, 2, 8));
    const auto windows = build_all_windows(m.orders, kWindowLength);
    ASSERT_FALSE(windows.empty());
    for (const auto& w : windows) EXPECT_EQ(indicators(w).direction, 1.0);
}

TEST(Generate, RegimeSwitchChangesBehavior) {
    auto c = single(find("speculator"), 4, 5);
    c.agents[0].after_switch = find("high_frequency");
    c.agents[0].switch_day = 2;
    const auto m = generate(c);
    std::map<std::int32_t, std::size_t> per_day;
    for (const auto& o : m.orders) ++per_day[o.day];
    EXPECT_GT(per_day[2], 2 * per_day[1]);
    EXPECT_GT(per_day[3], 2 * per_day[0]);
}

TEST(Generate, DistinctRatesSeparateFrequencyQuartiles) {
    MarketConfig c;
    c.n_days = 5;
    c.seed = 17;
    for (AgentId id : {1, 2}) {
        AgentSpec s;
        s.id = id;
        s.archetype = find(id == 1 ? "high_frequency" : "speculator");
        c.agents.push_back(s);
    }
    ASSERT_GE(c.agents[0].archetype.trade_rate, 3.0 * c.agents[1].archetype.trade_rate);
    const auto m = generate(c);
    const auto fast = quartiles(frequencies(m, 1));
    const auto slow = quartiles(frequencies(m, 2));
    EXPECT_GT(fast.q25, slow.q75);
}

TEST(Generate, SessionPhaseConfinesOrders) {
    const auto m = generate(single(find("morning_session"), 2, 2));
    for (const auto& o : m.orders) EXPECT_LE(o.t, 14400.0);
}

TEST(Generate, RejectsInvalidArchetype) {
    AgentArchetype a;
    a.direction_bias = 1.5;
    EXPECT_THROW(validate(a), Error);
    a.direction_bias = 0.5;
    a.trade_rate = 0.0;
    EXPECT_THROW(validate(a), Error);
}

namespace {

std::vector<MarketOrder> daily(AgentId agent, std::size_t per_day, std::int32_t days) {
    std::vector<MarketOrder> v;
    for (std::int32_t d = 0; d < days; ++d) {
        for (std::size_t i = 0; i < per_day; ++i) {
            MarketOrder o;
            o.agent = agent;
            o.day = d;
            o.t = static_cast<double>(i);
            v.push_back(o);
        }
    }
    return v;
}

}  // namespace

TEST(Selection, FloorOnEnoughDays) {
    EXPECT_EQ(select_active_agents(daily(4, 200, 46), 200, 45), std::set<AgentId>{4});
    EXPECT_TRUE(select_active_agents(daily(4, 200, 45), 200, 45).empty());
    EXPECT_TRUE(select_active_agents(daily(4, 199, 60), 200, 45).empty());
    EXPECT_TRUE(select_active_agents({}, 200, 45).empty());
}

TEST(Selection, DefaultCorpusAllQualify) {
    const auto c = make_market(default_archetypes(), 6, 5, 7);
    const auto m = generate(c);
    EXPECT_EQ(select_active_agents(m.orders, kMinOrdersPerDay, 3).size(), 6u);
}

TEST(Archetypes, CsvRoundTrip) {
    const auto dir = test::temp_dir("archetypes");
    const auto v = default_archetypes();
    {
        std::ofstream f(dir / "a.csv");
        f << archetypes_csv(v);
    }
    const auto back = read_archetypes_csv(dir / "a.csv");
    ASSERT_EQ(back.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_EQ(back[i].name, v[i].name);
        EXPECT_EQ(back[i].trade_rate, v[i].trade_rate);
        EXPECT_EQ(back[i].queue_scale, v[i].queue_scale);
        EXPECT_EQ(back[i].session_phase.has_value(), v[i].session_phase.has_value());
    }
}

TEST(Archetypes, AblationSetSharesBasicStatistics) {
    const auto v = ablation_archetypes();
    ASSERT_EQ(v.size(), 4u);
    for (const auto& a : v) {
        EXPECT_EQ(a.trade_rate, v[0].trade_rate);
        EXPECT_EQ(a.size_mean, v[0].size_mean);
        EXPECT_EQ(a.spread_regime, v[0].spread_regime);
        EXPECT_EQ(a.direction_bias, v[0].direction_bias);
    }
}

TEST(Passive, MarketMakerOutranksSpeculator) {
    MarketConfig c;
    c.n_days = 3;
    c.seed = 4;
    for (AgentId id : {1, 2}) {
        AgentSpec s;
        s.id = id;
        s.archetype = find(id == 1 ? "impatient_market_maker" : "speculator");
        c.agents.push_back(s);
    }
    const auto m = generate(c);
    EXPECT_GT(passive_aggressive_ratio(m.orders, m.passive, 1), passive_aggressive_ratio(m.orders, m.passive, 2));
    const auto dir = test::temp_dir("passive");
    {
        std::ofstream f(dir / "p.csv");
        f << passive_csv(m.passive);
    }
    EXPECT_EQ(read_passive_csv(dir / "p.csv"), m.passive);
}
