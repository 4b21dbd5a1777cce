#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ofrep/core.hpp"

namespace ofrep {

/// Intraday activity window, seconds since the open.
struct SessionPhase {
    double start = 0.0;
    double end = kSessionSeconds;
};

/// Behavioral parameters of a synthetic trader. The axes follow the
/// per-window indicators so that clusters have recoverable ground truth.
struct AgentArchetype {
    std::string name;
    double trade_rate = 1.0;       // trades per minute while active
    double size_mean = 5.0;        // mean intended size
    double fill_ratio_mean = 0.9;  // mean q_filled / q_intended
    double direction_bias = 0.5;   // 0: balanced sides, 1: one side all day
    double modif_prob = 0.1;
    double spread_regime = 1.5;    // mean spread in ticks
    double queue_scale = 50.0;     // mean same-side best queue
    double impatience = 1.0;       // opposite / same-side queue scale
    double passive_ratio = 0.0;    // passive fills per aggressive trade
    std::optional<SessionPhase> session_phase;
};

void validate(const AgentArchetype& a);

/// One simulated agent. When `switch_day` is set the agent trades as
/// `after_switch` from that day on.
struct AgentSpec {
    AgentId id = 0;
    AgentArchetype archetype;
    std::optional<AgentArchetype> after_switch;
    std::optional<std::int32_t> switch_day;
    /// Multiplicative per-agent jitter (log-normal sigma) applied to rate,
    /// size and queue parameters; 0 makes agents of one archetype identical.
    double jitter = 0.1;
};

struct MarketConfig {
    std::int32_t n_days = 25;
    std::vector<AgentSpec> agents;
    std::uint64_t seed = 0;
};

void validate(const MarketConfig& config);

/// A resting limit order of `agent` filled by someone else's market order.
struct PassiveFill {
    std::int32_t day = 0;
    double t = 0.0;
    AgentId agent = 0;
    std::int64_t qty = 1;

    bool operator==(const PassiveFill&) const = default;
};

struct GeneratedMarket {
    std::vector<MarketOrder> orders;   // sorted by (agent, day, t)
    std::vector<PassiveFill> passive;  // sorted by (agent, day, t)
};

/// Minimum aggressive orders emitted per agent and active day.
inline constexpr std::size_t kMinOrdersPerDay = 200;

/// Deterministic in config; agent-days draw from independent sub-seeds so
/// `threads` does not change the output.
GeneratedMarket generate(const MarketConfig& config, int threads = 1);

/// Agents with at least `min_orders_per_day` orders on more than `min_days`
/// distinct days.
std::set<AgentId> select_active_agents(std::span<const MarketOrder> orders, std::size_t min_orders_per_day,
                                       std::size_t min_days);

/// The six built-in archetypes of the default corpus.
std::vector<AgentArchetype> default_archetypes();

/// Four archetypes with identical basic statistics, differing only in
/// modification probability and queue behavior.
std::vector<AgentArchetype> ablation_archetypes();

/// Assigns archetypes round-robin: agent i gets archetypes[i % size].
MarketConfig make_market(const std::vector<AgentArchetype>& archetypes, std::size_t n_agents,
                         std::int32_t n_days, std::uint64_t seed);

/// Columns: name,trade_rate,size_mean,fill_ratio_mean,direction_bias,
/// modif_prob,spread_regime,queue_scale,impatience,passive_ratio,
/// phase_start,phase_end (empty phase fields mean the full session).
std::vector<AgentArchetype> read_archetypes_csv(const std::filesystem::path& path);
std::string archetypes_csv(std::span<const AgentArchetype> archetypes);

std::string passive_csv(std::span<const PassiveFill> fills);
std::vector<PassiveFill> read_passive_csv(const std::filesystem::path& path);

/// Ground truth: agent id -> archetype name (name of the pre-switch archetype
/// for switching agents), written as `agent,archetype,switch_day,after_switch`.
std::string agents_csv(const MarketConfig& config);

}  // namespace ofrep
