#include "ofrep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <unordered_set>

#include <fmt/format.h>

#include "ofrep/common.hpp"
#include "ofrep/csv.hpp"

namespace ofrep {

namespace {

constexpr double kBasePrice = 40000.0;  // ticks
constexpr double kPriceVolPerMinute = 1.5;  // ticks
constexpr double kSideSwitchProb = 0.02;
constexpr double kQueueSigma = 0.4;
constexpr double kQueueReactiveRate = 2.5;  // trades/min above which same-side queues shrink
constexpr double kQueueReactiveFactor = 0.6;
constexpr double kFillSigma = 0.08;

void check(bool ok, const AgentArchetype& a, const char* what) {
    if (!ok) throw Error(fmt::format("archetype '{}': {}", a.name, what));
}

double quantize_time(double t) {
    return std::round(t * 1e6) / 1e6;
}

/// Applies the per-agent multiplicative jitter to scale-type parameters.
AgentArchetype jittered(const AgentArchetype& a, double sigma, std::uint64_t seed) {
    if (sigma <= 0.0) return a;
    Rng rng(seed);
    std::normal_distribution<double> z(0.0, sigma);
    AgentArchetype j = a;
    j.trade_rate *= std::exp(z(rng));
    j.size_mean = std::max(1.0, j.size_mean * std::exp(z(rng)));
    j.queue_scale *= std::exp(z(rng));
    j.spread_regime = std::max(1.0, j.spread_regime * std::exp(z(rng)));
    return j;
}

/// Mid-price path of one day on a one-minute grid, shared by all agents.
std::vector<double> day_mid_path(std::uint64_t seed, std::int32_t day) {
    Rng rng(derive_seed(seed, 0x6d6964ULL, static_cast<std::uint64_t>(day)));
    std::normal_distribution<double> step(0.0, kPriceVolPerMinute);
    const auto minutes = static_cast<std::size_t>(kSessionSeconds / 60.0) + 1;
    std::vector<double> path(minutes);
    double p = kBasePrice + 20.0 * day;
    for (auto& v : path) {
        v = p;
        p += step(rng);
    }
    return path;
}

struct AgentDay {
    std::vector<MarketOrder> orders;
    std::vector<PassiveFill> passive;
};

AgentDay simulate_agent_day(const AgentArchetype& a, AgentId agent, std::int32_t day,
                            const std::vector<double>& mid_path, std::uint64_t seed) {
    Rng rng(seed);
    const SessionPhase phase = a.session_phase.value_or(SessionPhase{});
    const double active_minutes = (phase.end - phase.start) / 60.0;

    std::poisson_distribution<long> count_dist(a.trade_rate * active_minutes);
    const auto n = std::max<std::size_t>(kMinOrdersPerDay, static_cast<std::size_t>(count_dist(rng)));

    // Arrival times of a Poisson process conditioned on its count.
    std::uniform_real_distribution<double> when(phase.start, phase.end);
    std::vector<double> times(n);
    for (auto& t : times) t = quantize_time(when(rng));
    std::sort(times.begin(), times.end());

    std::geometric_distribution<long> size_dist(std::min(1.0 / a.size_mean, 1.0 - 1e-12));
    std::normal_distribution<double> fill_dist(a.fill_ratio_mean, kFillSigma);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::poisson_distribution<long> extra_spread(std::max(a.spread_regime - 1.0, 0.0));
    const double same_scale =
        a.queue_scale * (a.trade_rate >= kQueueReactiveRate ? kQueueReactiveFactor : 1.0);
    std::lognormal_distribution<double> same_queue(std::log(same_scale), kQueueSigma);
    std::lognormal_distribution<double> opp_queue(std::log(a.queue_scale * a.impatience), kQueueSigma);

    const double keep_side = 0.5 * (1.0 + a.direction_bias);
    const double switch_prob = a.direction_bias >= 1.0 ? 0.0 : kSideSwitchProb;
    int regime_side = u01(rng) < 0.5 ? 1 : -1;

    AgentDay out;
    out.orders.reserve(n);
    for (double t : times) {
        if (u01(rng) < switch_prob) regime_side = -regime_side;
        MarketOrder o;
        o.day = day;
        o.t = t;
        o.agent = agent;
        o.side = static_cast<std::int8_t>(u01(rng) < keep_side ? regime_side : -regime_side);
        o.q_intended = 1 + size_dist(rng);
        const double fill = std::clamp(fill_dist(rng), 0.05, 1.0);
        o.q_filled = std::clamp<std::int64_t>(std::llround(fill * static_cast<double>(o.q_intended)), 1,
                                              o.q_intended);
        o.modif = static_cast<std::int8_t>(u01(rng) < a.modif_prob ? 1 : 0);
        const std::int64_t spread = 1 + extra_spread(rng);
        const auto minute = std::min(static_cast<std::size_t>(t / 60.0), mid_path.size() - 1);
        const auto mid = static_cast<std::int64_t>(std::floor(mid_path[minute]));
        o.best_bid = mid - spread / 2;
        o.best_ask = o.best_bid + spread;
        const auto same = std::max<std::int64_t>(1, std::llround(same_queue(rng)));
        const auto opposite = std::max<std::int64_t>(1, std::llround(opp_queue(rng)));
        // a buy consumes the ask queue
        if (o.side > 0) {
            o.ask_qty = same;
            o.bid_qty = opposite;
        } else {
            o.bid_qty = same;
            o.ask_qty = opposite;
        }
        out.orders.push_back(o);
    }

    if (a.passive_ratio > 0.0) {
        std::poisson_distribution<long> passive_count(a.passive_ratio * static_cast<double>(n));
        const auto np = static_cast<std::size_t>(passive_count(rng));
        std::uniform_real_distribution<double> anytime(0.0, kSessionSeconds);
        out.passive.reserve(np);
        for (std::size_t i = 0; i < np; ++i) {
            out.passive.push_back({day, quantize_time(anytime(rng)), agent, 1 + size_dist(rng)});
        }
        std::sort(out.passive.begin(), out.passive.end(),
                  [](const PassiveFill& x, const PassiveFill& y) { return x.t < y.t; });
    }
    return out;
}

}  // namespace

void validate(const AgentArchetype& a) {
    check(std::isfinite(a.trade_rate) && a.trade_rate > 0.0, a, "trade_rate must be positive");
    check(std::isfinite(a.size_mean) && a.size_mean >= 1.0, a, "size_mean must be at least 1");
    check(a.fill_ratio_mean > 0.0 && a.fill_ratio_mean <= 1.0, a, "fill_ratio_mean must lie in (0, 1]");
    check(a.direction_bias >= 0.0 && a.direction_bias <= 1.0, a, "direction_bias must lie in [0, 1]");
    check(a.modif_prob >= 0.0 && a.modif_prob <= 1.0, a, "modif_prob must lie in [0, 1]");
    check(std::isfinite(a.spread_regime) && a.spread_regime >= 1.0, a, "spread_regime must be at least 1");
    check(std::isfinite(a.queue_scale) && a.queue_scale > 0.0, a, "queue_scale must be positive");
    check(std::isfinite(a.impatience) && a.impatience > 0.0, a, "impatience must be positive");
    check(std::isfinite(a.passive_ratio) && a.passive_ratio >= 0.0, a, "passive_ratio must be non-negative");
    if (a.session_phase) {
        const auto& p = *a.session_phase;
        check(p.start >= 0.0 && p.end <= kSessionSeconds && p.start < p.end, a,
              "session_phase must be a non-empty window inside the session");
    }
}

void validate(const MarketConfig& config) {
    if (config.n_days < 1) throw Error("market config needs at least one day");
    if (config.agents.empty()) throw Error("market config needs at least one agent");
    std::unordered_set<AgentId> ids;
    for (const auto& spec : config.agents) {
        if (!ids.insert(spec.id).second) throw Error(fmt::format("duplicate agent id {}", spec.id));
        validate(spec.archetype);
        if (spec.after_switch) validate(*spec.after_switch);
        if (spec.after_switch.has_value() != spec.switch_day.has_value()) {
            throw Error(fmt::format("agent {}: after_switch and switch_day must be given together", spec.id));
        }
        if (!(spec.jitter >= 0.0)) throw Error(fmt::format("agent {}: jitter must be non-negative", spec.id));
    }
}

GeneratedMarket generate(const MarketConfig& config, int threads) {
    validate(config);
    const auto n_agents = config.agents.size();
    const auto n_days = static_cast<std::size_t>(config.n_days);

    std::vector<std::vector<double>> paths(n_days);
    parallel_for(n_days, threads,
                 [&](std::size_t d) { paths[d] = day_mid_path(config.seed, static_cast<std::int32_t>(d)); });

    std::vector<AgentDay> cells(n_agents * n_days);
    parallel_for(cells.size(), threads, [&](std::size_t cell) {
        const auto& spec = config.agents[cell / n_days];
        const auto day = static_cast<std::int32_t>(cell % n_days);
        const bool switched = spec.switch_day && day >= *spec.switch_day;
        const auto regime = static_cast<std::uint64_t>(switched ? 1 : 0);
        const auto agent_key = static_cast<std::uint64_t>(static_cast<std::uint32_t>(spec.id));
        const AgentArchetype a = jittered(switched ? *spec.after_switch : spec.archetype, spec.jitter,
                                          derive_seed(config.seed, 0x6a6974ULL + regime, agent_key));
        const auto seed = derive_seed(derive_seed(config.seed, agent_key), static_cast<std::uint64_t>(day));
        cells[cell] = simulate_agent_day(a, spec.id, day, paths[static_cast<std::size_t>(day)], seed);
    });

    GeneratedMarket market;
    for (auto& c : cells) {
        market.orders.insert(market.orders.end(), c.orders.begin(), c.orders.end());
        market.passive.insert(market.passive.end(), c.passive.begin(), c.passive.end());
    }
    sort_orders(market.orders);
    std::stable_sort(market.passive.begin(), market.passive.end(), [](const PassiveFill& a, const PassiveFill& b) {
        if (a.agent != b.agent) return a.agent < b.agent;
        if (a.day != b.day) return a.day < b.day;
        return a.t < b.t;
    });
    return market;
}

std::set<AgentId> select_active_agents(std::span<const MarketOrder> orders, std::size_t min_orders_per_day,
                                       std::size_t min_days) {
    std::map<std::pair<AgentId, std::int32_t>, std::size_t> per_day;
    for (const auto& o : orders) ++per_day[{o.agent, o.day}];
    std::map<AgentId, std::size_t> qualifying_days;
    for (const auto& [key, count] : per_day) {
        if (count >= min_orders_per_day) ++qualifying_days[key.first];
    }
    std::set<AgentId> out;
    for (const auto& [agent, days] : qualifying_days) {
        if (days > min_days) out.insert(agent);
    }
    return out;
}

std::vector<AgentArchetype> default_archetypes() {
    std::vector<AgentArchetype> v;
    {
        AgentArchetype a;
        a.name = "high_frequency";
        a.trade_rate = 3.0;
        a.size_mean = 2.0;
        a.fill_ratio_mean = 0.95;
        a.direction_bias = 0.2;
        a.modif_prob = 0.05;
        a.spread_regime = 1.1;
        a.queue_scale = 40.0;
        a.impatience = 1.0;
        a.passive_ratio = 0.5;
        v.push_back(a);
    }
    {
        AgentArchetype a;
        a.name = "directional";
        a.trade_rate = 1.0;
        a.size_mean = 12.0;
        a.fill_ratio_mean = 0.85;
        a.direction_bias = 0.9;
        a.modif_prob = 0.05;
        a.spread_regime = 2.5;
        a.queue_scale = 60.0;
        a.impatience = 1.0;
        a.passive_ratio = 0.2;
        v.push_back(a);
    }
    {
        AgentArchetype a;
        a.name = "impatient_market_maker";
        a.trade_rate = 1.5;
        a.size_mean = 3.0;
        a.fill_ratio_mean = 1.0;
        a.direction_bias = 0.1;
        a.modif_prob = 0.6;
        a.spread_regime = 1.6;
        a.queue_scale = 25.0;
        a.impatience = 3.0;
        a.passive_ratio = 4.0;
        v.push_back(a);
    }
    {
        AgentArchetype a;
        a.name = "speculator";
        a.trade_rate = 0.7;
        a.size_mean = 6.0;
        a.fill_ratio_mean = 0.7;
        a.direction_bias = 0.4;
        a.modif_prob = 0.0;
        a.spread_regime = 1.0;
        a.queue_scale = 120.0;
        a.impatience = 1.0;
        a.passive_ratio = 0.05;
        v.push_back(a);
    }
    {
        AgentArchetype a;
        a.name = "block_trader";
        a.trade_rate = 0.8;
        a.size_mean = 30.0;
        a.fill_ratio_mean = 0.6;
        a.direction_bias = 0.6;
        a.modif_prob = 0.2;
        a.spread_regime = 2.0;
        a.queue_scale = 80.0;
        a.impatience = 0.7;
        a.passive_ratio = 0.3;
        v.push_back(a);
    }
    {
        AgentArchetype a;
        a.name = "morning_session";
        a.trade_rate = 2.0;
        a.size_mean = 5.0;
        a.fill_ratio_mean = 0.9;
        a.direction_bias = 0.7;
        a.modif_prob = 0.3;
        a.spread_regime = 3.5;
        a.queue_scale = 30.0;
        a.impatience = 1.5;
        a.passive_ratio = 1.0;
        a.session_phase = SessionPhase{0.0, 14400.0};
        v.push_back(a);
    }
    return v;
}

std::vector<AgentArchetype> ablation_archetypes() {
    AgentArchetype base;
    base.trade_rate = 1.5;
    base.size_mean = 5.0;
    base.fill_ratio_mean = 0.9;
    base.direction_bias = 0.5;
    base.spread_regime = 1.5;
    base.impatience = 1.0;
    std::vector<AgentArchetype> v;
    for (const double modif : {0.05, 0.6}) {
        for (const double queue : {15.0, 150.0}) {
            AgentArchetype a = base;
            a.name = fmt::format("modif{}_queue{}", modif, queue);
            a.modif_prob = modif;
            a.queue_scale = queue;
            v.push_back(a);
        }
    }
    return v;
}

MarketConfig make_market(const std::vector<AgentArchetype>& archetypes, std::size_t n_agents, std::int32_t n_days,
                         std::uint64_t seed) {
    if (archetypes.empty()) throw Error("make_market needs at least one archetype");
    MarketConfig config;
    config.n_days = n_days;
    config.seed = seed;
    for (std::size_t i = 0; i < n_agents; ++i) {
        AgentSpec spec;
        spec.id = static_cast<AgentId>(i + 1);
        spec.archetype = archetypes[i % archetypes.size()];
        config.agents.push_back(std::move(spec));
    }
    return config;
}

namespace {
constexpr const char* kArchetypeHeader =
    "name,trade_rate,size_mean,fill_ratio_mean,direction_bias,modif_prob,spread_regime,queue_scale,impatience,"
    "passive_ratio,phase_start,phase_end";
}

std::vector<AgentArchetype> read_archetypes_csv(const std::filesystem::path& path) {
    const auto t = csv::Table::read(path);
    std::vector<AgentArchetype> out;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        AgentArchetype a;
        a.name = t.cell(r, t.column("name"));
        a.trade_rate = t.real(r, t.column("trade_rate"));
        a.size_mean = t.real(r, t.column("size_mean"));
        a.fill_ratio_mean = t.real(r, t.column("fill_ratio_mean"));
        a.direction_bias = t.real(r, t.column("direction_bias"));
        a.modif_prob = t.real(r, t.column("modif_prob"));
        a.spread_regime = t.real(r, t.column("spread_regime"));
        a.queue_scale = t.real(r, t.column("queue_scale"));
        a.impatience = t.real(r, t.column("impatience"));
        if (t.has_column("passive_ratio")) a.passive_ratio = t.real(r, t.column("passive_ratio"));
        if (t.has_column("phase_start") && !t.cell(r, t.column("phase_start")).empty()) {
            a.session_phase = SessionPhase{t.real(r, t.column("phase_start")), t.real(r, t.column("phase_end"))};
        }
        validate(a);
        out.push_back(std::move(a));
    }
    if (out.empty()) throw Error(fmt::format("{}: no archetypes", path.string()));
    return out;
}

std::string archetypes_csv(std::span<const AgentArchetype> archetypes) {
    std::string s = fmt::format("{}\n", kArchetypeHeader);
    for (const auto& a : archetypes) {
        s += fmt::format("{},{},{},{},{},{},{},{},{},{},", a.name, a.trade_rate, a.size_mean, a.fill_ratio_mean,
                         a.direction_bias, a.modif_prob, a.spread_regime, a.queue_scale, a.impatience,
                         a.passive_ratio);
        if (a.session_phase) s += fmt::format("{},{}", a.session_phase->start, a.session_phase->end);
        else s += ",";
        s += "\n";
    }
    return s;
}

std::string passive_csv(std::span<const PassiveFill> fills) {
    std::string s = "day,t,agent,qty\n";
    for (const auto& f : fills) s += fmt::format("{},{},{},{}\n", f.day, f.t, f.agent, f.qty);
    return s;
}

std::vector<PassiveFill> read_passive_csv(const std::filesystem::path& path) {
    const auto t = csv::Table::read(path);
    const auto c_day = t.column("day"), c_t = t.column("t"), c_agent = t.column("agent"), c_qty = t.column("qty");
    std::vector<PassiveFill> out;
    out.reserve(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) {
        out.push_back({static_cast<std::int32_t>(t.integer(r, c_day)), t.real(r, c_t),
                       static_cast<AgentId>(t.integer(r, c_agent)), t.integer(r, c_qty)});
    }
    return out;
}

std::string agents_csv(const MarketConfig& config) {
    std::string s = "agent,archetype,switch_day,after_switch\n";
    for (const auto& spec : config.agents) {
        s += fmt::format("{},{},{},{}\n", spec.id, spec.archetype.name,
                         spec.switch_day ? fmt::format("{}", *spec.switch_day) : std::string{},
                         spec.after_switch ? spec.after_switch->name : std::string{});
    }
    return s;
}

}  // namespace ofrep
