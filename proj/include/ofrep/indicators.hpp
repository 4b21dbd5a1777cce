#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ofrep/core.hpp"
#include "ofrep/synth.hpp"

namespace ofrep {

/// Behavioral indicators of one window.
struct IndicatorSet {
    double frequency = 0.0;   // trades per minute
    double order_size = 0.0;  // mean intended size
    double trade_size = 0.0;  // mean filled size
    double fill_rate = 0.0;
    double spread = 0.0;      // mean ticks
    double qs = 0.0;          // mean same-side best queue
    double opp_qs = 0.0;      // mean opposite best queue
    double rqs = 0.0;         // mean same-side queue / filled size
    double opp_rqs = 0.0;
    double direction = 0.0;
    double modif_frac = 0.0;
};

inline constexpr std::size_t kIndicatorCount = 11;
inline constexpr std::array<std::string_view, kIndicatorCount> kIndicatorNames = {
    "frequency", "order_size", "trade_size", "fill_rate", "spread", "qs",
    "opp_qs",    "rqs",        "opp_rqs",    "direction", "modif_frac"};

double field(const IndicatorSet& s, std::size_t i);

/// The same-side queue of a buy is the ask queue. Throws when the first and
/// last orders share a timestamp.
IndicatorSet indicators(const Sample& sample);

/// Linear interpolation between closest ranks (p in [0, 1]).
double percentile(std::vector<double> values, double p);

struct Quartiles {
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
};

Quartiles quartiles(const std::vector<double>& values);

struct ClusterSummaryRow {
    int cluster = 0;
    std::size_t n = 0;
    std::array<Quartiles, kIndicatorCount> stats{};
    std::array<std::string, kIndicatorCount> rating{};
};

/// Per-cluster quartiles; each median is rated +, ++ or +++ against the
/// terciles of all cluster medians of that indicator (boundary values take
/// the lower rating), or `none` when it is zero. Empty clusters are omitted.
std::vector<ClusterSummaryRow> cluster_summary(std::span<const IndicatorSet> sets, std::span<const int> labels);

/// `cluster,n,<indicator>_q25,<indicator>_q50,<indicator>_q75,...`.
std::string cluster_summary_csv(std::span<const ClusterSummaryRow> rows);

/// `cluster,<indicator>...` with the rating of every median.
std::string ratings_csv(std::span<const ClusterSummaryRow> rows);

/// Session hours 9:00-17:00, one bin each.
inline constexpr std::size_t kSessionHours = 8;
inline constexpr int kOpenHour = 9;

struct ScatterPoint {
    std::int32_t day = 0;
    double hour = 0.0;  // clock hour of the window's first order
    int cluster = 0;
};

struct AgentProfile {
    AgentId agent = 0;
    std::vector<ClusterSummaryRow> clusters;
    std::map<int, std::array<std::size_t, kSessionHours>> hour_histogram;
    std::vector<ScatterPoint> scatter;
};

/// Clock hour (9..17) at which a window starts.
double start_hour(const Sample& s);

AgentProfile agent_profile(AgentId agent, std::span<const Sample> samples, std::span<const IndicatorSet> sets,
                           std::span<const int> labels);

/// Label held by the majority of `labels` (lowest label on ties).
int dominant_label(std::span<const int> labels);

std::string profile_summary_csv(const AgentProfile& p);
std::string profile_hours_csv(const AgentProfile& p);
std::string profile_scatter_csv(const AgentProfile& p);

/// Passive fills per aggressive order of `agent`. Throws when the agent has
/// no aggressive order.
double passive_aggressive_ratio(std::span<const MarketOrder> orders, std::span<const PassiveFill> passive,
                                AgentId agent);

/// `sample_id,agent,cluster,frequency,...,modif_frac`.
std::string indicators_csv(std::span<const Sample> samples, std::span<const int> labels,
                           std::span<const IndicatorSet> sets);

}  // namespace ofrep
