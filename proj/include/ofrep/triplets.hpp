#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ofrep/core.hpp"

namespace ofrep {

/// Default locality horizon: two hours between first-order timestamps.
inline constexpr double kDefaultHorizonSeconds = 7200.0;

/// Anchor, positive and negative as positions in a window list.
struct Triplet {
    std::size_t anchor = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;

    bool operator==(const Triplet&) const = default;
};

struct DaySplit {
    std::set<std::int32_t> train_days;
    std::set<std::int32_t> test_days;
};

/// Shuffles the days and cuts them train_parts:test_parts (default 4:1).
DaySplit split_days(std::span<const std::int32_t> days, std::uint64_t seed, int train_parts = 4,
                    int test_parts = 1);

/// Distinct day indices present in a window list, ascending.
std::vector<std::int32_t> days_of(std::span<const Sample> windows);

/// Windows whose day is in `days`, preserving order.
std::vector<Sample> windows_on_days(std::span<const Sample> windows, const std::set<std::int32_t>& days);

/// Draws `count` temporally local triplets. Anchors are uniform over windows
/// having at least one eligible positive and negative; positives are uniform
/// over same-agent in-horizon windows sharing no order with the anchor;
/// negatives are uniform over other-agent in-horizon windows. Throws when no
/// window qualifies as an anchor.
std::vector<Triplet> sample_triplets(std::span<const Sample> windows, double horizon_s, std::size_t count,
                                     std::uint64_t seed);

/// Independent re-check of every triplet constraint; returns the first
/// violated constraint, if any.
std::optional<std::string> check_triplet(std::span<const Sample> windows, const Triplet& t, double horizon_s);

/// Window manifest `window_id,agent,day,first_row,start_time`; ids are list
/// positions.
std::string windows_csv(std::span<const Sample> windows);

/// Rebuilds the manifest's windows from the agent-day-sorted order log and
/// checks each recorded field against it.
std::vector<Sample> read_windows_csv(const std::filesystem::path& path, std::span<const MarketOrder> sorted_orders);

std::string triplets_csv(std::span<const Triplet> triplets);
std::vector<Triplet> read_triplets_csv(const std::filesystem::path& path, std::size_t n_windows);

std::string split_csv(const DaySplit& split);
DaySplit read_split_csv(const std::filesystem::path& path);

}  // namespace ofrep
