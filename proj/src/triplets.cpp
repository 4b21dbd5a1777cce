#include "ofrep/triplets.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <fmt/format.h>

#include "ofrep/common.hpp"
#include "ofrep/csv.hpp"

namespace ofrep {

DaySplit split_days(std::span<const std::int32_t> days, std::uint64_t seed, int train_parts, int test_parts) {
    std::vector<std::int32_t> unique(days.begin(), days.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    if (unique.size() < 5) throw Error(fmt::format("split_days needs at least 5 days, got {}", unique.size()));
    if (train_parts < 1 || test_parts < 1) throw Error("split ratio parts must be positive");

    Rng rng(seed);
    std::shuffle(unique.begin(), unique.end(), rng);
    const double exact = static_cast<double>(unique.size()) * test_parts / (train_parts + test_parts);
    const auto n_test = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(exact)), 1, unique.size() - 1);

    DaySplit split;
    split.test_days.insert(unique.begin(), unique.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train_days.insert(unique.begin() + static_cast<std::ptrdiff_t>(n_test), unique.end());
    return split;
}

std::vector<std::int32_t> days_of(std::span<const Sample> windows) {
    std::set<std::int32_t> days;
    for (const auto& w : windows) days.insert(w.day);
    return {days.begin(), days.end()};
}

std::vector<Sample> windows_on_days(std::span<const Sample> windows, const std::set<std::int32_t>& days) {
    std::vector<Sample> out;
    for (const auto& w : windows) {
        if (days.contains(w.day)) out.push_back(w);
    }
    return out;
}

namespace {

/// Window positions sorted by start time, with the start times alongside.
struct TimeIndex {
    std::vector<std::size_t> ids;
    std::vector<double> starts;

    std::pair<std::size_t, std::size_t> range(double lo, double hi) const {
        const auto b = std::lower_bound(starts.begin(), starts.end(), lo) - starts.begin();
        const auto e = std::upper_bound(starts.begin(), starts.end(), hi) - starts.begin();
        return {static_cast<std::size_t>(b), static_cast<std::size_t>(e)};
    }
};

struct Candidates {
    const TimeIndex* day = nullptr;
    const TimeIndex* agent = nullptr;
    std::size_t day_begin = 0, day_end = 0;
    std::size_t agent_begin = 0, agent_end = 0;
    std::size_t n_negative = 0;
    std::size_t n_positive = 0;
};

}  // namespace

std::vector<Triplet> sample_triplets(std::span<const Sample> windows, double horizon_s, std::size_t count,
                                     std::uint64_t seed) {
    if (!(horizon_s >= 0.0)) throw Error("triplet horizon must be non-negative");

    std::map<std::int32_t, TimeIndex> by_day;
    std::map<std::pair<std::int32_t, AgentId>, TimeIndex> by_agent_day;
    {
        std::vector<std::size_t> order(windows.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return windows[a].start_time < windows[b].start_time;
        });
        for (auto i : order) {
            const auto& w = windows[i];
            auto& d = by_day[w.day];
            d.ids.push_back(i);
            d.starts.push_back(w.start_time);
            auto& ad = by_agent_day[{w.day, w.agent}];
            ad.ids.push_back(i);
            ad.starts.push_back(w.start_time);
        }
    }

    auto candidates_of = [&](std::size_t a) {
        const auto& w = windows[a];
        Candidates c;
        c.day = &by_day.at(w.day);
        c.agent = &by_agent_day.at({w.day, w.agent});
        std::tie(c.day_begin, c.day_end) = c.day->range(w.start_time - horizon_s, w.start_time + horizon_s);
        std::tie(c.agent_begin, c.agent_end) = c.agent->range(w.start_time - horizon_s, w.start_time + horizon_s);
        const auto same_in_range = c.agent_end - c.agent_begin;
        c.n_negative = (c.day_end - c.day_begin) - same_in_range;
        std::size_t overlapping = 0;
        for (auto k = c.agent_begin; k < c.agent_end; ++k) {
            if (shares_orders(w, windows[c.agent->ids[k]])) ++overlapping;
        }
        c.n_positive = same_in_range - overlapping;
        return c;
    };

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const auto c = candidates_of(i);
        if (c.n_positive > 0 && c.n_negative > 0) eligible.push_back(i);
    }
    if (count == 0) return {};
    if (eligible.empty()) {
        throw Error("no window has both an eligible positive and an eligible negative; cannot sample triplets");
    }

    Rng rng(seed);
    std::vector<Triplet> out;
    out.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        std::uniform_int_distribution<std::size_t> pick_anchor(0, eligible.size() - 1);
        const auto a = eligible[pick_anchor(rng)];
        const auto c = candidates_of(a);
        // Rejection sampling over the in-horizon ranges is uniform on the
        // accepted subsets; both subsets are known to be non-empty.
        std::uniform_int_distribution<std::size_t> pick_pos(c.agent_begin, c.agent_end - 1);
        std::size_t p = 0;
        do {
            p = c.agent->ids[pick_pos(rng)];
        } while (shares_orders(windows[a], windows[p]));
        std::uniform_int_distribution<std::size_t> pick_neg(c.day_begin, c.day_end - 1);
        std::size_t q = 0;
        do {
            q = c.day->ids[pick_neg(rng)];
        } while (windows[q].agent == windows[a].agent);
        out.push_back({a, p, q});
    }
    return out;
}

std::optional<std::string> check_triplet(std::span<const Sample> windows, const Triplet& t, double horizon_s) {
    if (t.anchor >= windows.size() || t.positive >= windows.size() || t.negative >= windows.size()) {
        return "window index out of range";
    }
    const auto& a = windows[t.anchor];
    const auto& p = windows[t.positive];
    const auto& n = windows[t.negative];
    if (a.agent != p.agent) return "positive agent differs from anchor agent";
    if (a.agent == n.agent) return "negative agent equals anchor agent";
    if (a.day != p.day || a.day != n.day) return "triplet spans more than one day";
    if (std::abs(p.start_time - a.start_time) > horizon_s) return "positive outside the locality horizon";
    if (std::abs(n.start_time - a.start_time) > horizon_s) return "negative outside the locality horizon";
    // order-level overlap, checked on timestamps and rows independently of shares_orders
    if (a.first_row < p.first_row + p.orders.size() && p.first_row < a.first_row + a.orders.size()) {
        return "anchor and positive share orders";
    }
    for (const auto& o : a.orders) {
        for (const auto& q : p.orders) {
            if (o == q) return "anchor and positive share orders";
        }
    }
    return std::nullopt;
}

std::string windows_csv(std::span<const Sample> windows) {
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "window_id,agent,day,first_row,start_time\n");
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const auto& w = windows[i];
        fmt::format_to(std::back_inserter(buf), "{},{},{},{},{}\n", i, w.agent, w.day, w.first_row, w.start_time);
    }
    return fmt::to_string(buf);
}

std::vector<Sample> read_windows_csv(const std::filesystem::path& path, std::span<const MarketOrder> sorted_orders) {
    const auto t = csv::Table::read(path);
    const auto c_id = t.column("window_id"), c_agent = t.column("agent"), c_day = t.column("day"),
               c_row = t.column("first_row"), c_start = t.column("start_time");
    std::vector<Sample> out;
    out.reserve(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) {
        if (t.integer(r, c_id) != static_cast<std::int64_t>(r)) {
            throw Error(fmt::format("{}: window ids must be 0..n-1 in order (row {})", path.string(), r + 1));
        }
        const auto row = t.integer(r, c_row);
        if (row < 0) throw Error(fmt::format("{}: negative first_row at row {}", path.string(), r + 1));
        Sample s = window_at(sorted_orders, static_cast<std::size_t>(row));
        if (s.agent != t.integer(r, c_agent) || s.day != t.integer(r, c_day) || s.start_time != t.real(r, c_start)) {
            throw Error(fmt::format("{}: window {} does not match the order log", path.string(), r));
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string triplets_csv(std::span<const Triplet> triplets) {
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "anchor,positive,negative\n");
    for (const auto& t : triplets) fmt::format_to(std::back_inserter(buf), "{},{},{}\n", t.anchor, t.positive, t.negative);
    return fmt::to_string(buf);
}

std::vector<Triplet> read_triplets_csv(const std::filesystem::path& path, std::size_t n_windows) {
    const auto t = csv::Table::read(path);
    const auto c_a = t.column("anchor"), c_p = t.column("positive"), c_n = t.column("negative");
    std::vector<Triplet> out;
    out.reserve(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const auto a = t.integer(r, c_a), p = t.integer(r, c_p), n = t.integer(r, c_n);
        const auto limit = static_cast<std::int64_t>(n_windows);
        if (a < 0 || p < 0 || n < 0 || a >= limit || p >= limit || n >= limit) {
            throw Error(fmt::format("{}: row {} references a window outside the manifest", path.string(), r + 1));
        }
        out.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(p), static_cast<std::size_t>(n)});
    }
    return out;
}

std::string split_csv(const DaySplit& split) {
    std::map<std::int32_t, const char*> rows;
    for (auto d : split.train_days) rows[d] = "train";
    for (auto d : split.test_days) rows[d] = "test";
    std::string s = "day,set\n";
    for (const auto& [d, set] : rows) s += fmt::format("{},{}\n", d, set);
    return s;
}

DaySplit read_split_csv(const std::filesystem::path& path) {
    const auto t = csv::Table::read(path);
    const auto c_day = t.column("day"), c_set = t.column("set");
    DaySplit split;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const auto day = static_cast<std::int32_t>(t.integer(r, c_day));
        const auto& set = t.cell(r, c_set);
        if (set == "train") split.train_days.insert(day);
        else if (set == "test") split.test_days.insert(day);
        else throw Error(fmt::format("{}: row {}: set must be train or test", path.string(), r + 1));
    }
    return split;
}

}  // namespace ofrep
