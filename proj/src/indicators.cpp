#include "ofrep/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

#include "ofrep/common.hpp"
#include "ofrep/csv.hpp"

namespace ofrep {

double field(const IndicatorSet& s, std::size_t i) {
    switch (i) {
        case 0: return s.frequency;
        case 1: return s.order_size;
        case 2: return s.trade_size;
        case 3: return s.fill_rate;
        case 4: return s.spread;
        case 5: return s.qs;
        case 6: return s.opp_qs;
        case 7: return s.rqs;
        case 8: return s.opp_rqs;
        case 9: return s.direction;
        case 10: return s.modif_frac;
        default: throw Error(fmt::format("indicator index {} out of range", i));
    }
}

IndicatorSet indicators(const Sample& sample) {
    validate(sample);
    const auto& o = sample.orders;
    const double n = static_cast<double>(o.size());
    const double span = o.back().t - o.front().t;
    if (!(span > 0.0)) throw Error("window spans zero time; frequency is undefined");

    double intended = 0, filled = 0, spread = 0, qs = 0, opp_qs = 0, rqs = 0, opp_rqs = 0, signed_q = 0, modif = 0;
    for (const auto& x : o) {
        const auto q = static_cast<double>(x.q_filled);
        const auto same = static_cast<double>(x.side > 0 ? x.ask_qty : x.bid_qty);
        const auto opp = static_cast<double>(x.side > 0 ? x.bid_qty : x.ask_qty);
        intended += static_cast<double>(x.q_intended);
        filled += q;
        spread += static_cast<double>(x.best_ask - x.best_bid);
        qs += same;
        opp_qs += opp;
        rqs += same / q;
        opp_rqs += opp / q;
        signed_q += q * x.side;
        modif += x.modif;
    }
    IndicatorSet s;
    const double dt = span / (n - 1.0);
    s.frequency = 60.0 / dt;
    s.order_size = intended / n;
    s.trade_size = filled / n;
    s.fill_rate = filled / intended;
    s.spread = spread / n;
    s.qs = qs / n;
    s.opp_qs = opp_qs / n;
    s.rqs = rqs / n;
    s.opp_rqs = opp_rqs / n;
    s.direction = std::abs(signed_q) / filled;
    s.modif_frac = modif / n;
    return s;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw Error("percentile of an empty list");
    if (!(p >= 0.0 && p <= 1.0)) throw Error("percentile level must be in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

Quartiles quartiles(const std::vector<double>& values) {
    return {percentile(values, 0.25), percentile(values, 0.5), percentile(values, 0.75)};
}

namespace {

std::vector<ClusterSummaryRow> summarize(std::span<const IndicatorSet> sets, std::span<const int> labels) {
    if (sets.size() != labels.size()) throw Error("indicator sets and labels differ in length");
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
    std::vector<ClusterSummaryRow> rows;
    for (const auto& [cluster, idx] : members) {
        ClusterSummaryRow r;
        r.cluster = cluster;
        r.n = idx.size();
        for (std::size_t f = 0; f < kIndicatorCount; ++f) {
            std::vector<double> v;
            v.reserve(idx.size());
            for (auto i : idx) v.push_back(field(sets[i], f));
            r.stats[f] = quartiles(v);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void rate(std::vector<ClusterSummaryRow>& rows) {
    for (std::size_t f = 0; f < kIndicatorCount; ++f) {
        std::vector<double> medians;
        for (const auto& r : rows) medians.push_back(r.stats[f].q50);
        const double lo = percentile(medians, 1.0 / 3.0);
        const double hi = percentile(medians, 2.0 / 3.0);
        for (auto& r : rows) {
            const double m = r.stats[f].q50;
            if (m == 0.0) r.rating[f] = "none";
            else if (m <= lo) r.rating[f] = "+";
            else if (m <= hi) r.rating[f] = "++";
            else r.rating[f] = "+++";
        }
    }
}

std::string summary_rows_csv(std::span<const ClusterSummaryRow> rows) {
    std::string s = "cluster,n";
    for (auto name : kIndicatorNames) s += fmt::format(",{0}_q25,{0}_q50,{0}_q75", name);
    s += '\n';
    for (const auto& r : rows) {
        s += fmt::format("{},{}", r.cluster, r.n);
        for (const auto& q : r.stats) {
            s += fmt::format(",{},{},{}", csv::format_real(q.q25), csv::format_real(q.q50), csv::format_real(q.q75));
        }
        s += '\n';
    }
    return s;
}

}  // namespace

std::vector<ClusterSummaryRow> cluster_summary(std::span<const IndicatorSet> sets, std::span<const int> labels) {
    auto rows = summarize(sets, labels);
    if (!rows.empty()) rate(rows);
    return rows;
}

std::string cluster_summary_csv(std::span<const ClusterSummaryRow> rows) { return summary_rows_csv(rows); }

std::string ratings_csv(std::span<const ClusterSummaryRow> rows) {
    std::string s = "cluster";
    for (auto name : kIndicatorNames) s += fmt::format(",{}", name);
    s += '\n';
    for (const auto& r : rows) {
        s += fmt::format("{}", r.cluster);
        for (const auto& x : r.rating) s += "," + x;
        s += '\n';
    }
    return s;
}

double start_hour(const Sample& s) { return kOpenHour + s.start_time / 3600.0; }

AgentProfile agent_profile(AgentId agent, std::span<const Sample> samples, std::span<const IndicatorSet> sets,
                           std::span<const int> labels) {
    if (samples.size() != sets.size() || samples.size() != labels.size()) {
        throw Error("samples, indicator sets and labels differ in length");
    }
    AgentProfile p;
    p.agent = agent;
    std::vector<IndicatorSet> own_sets;
    std::vector<int> own_labels;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].agent != agent) continue;
        own_sets.push_back(sets[i]);
        own_labels.push_back(labels[i]);
        const double hour = start_hour(samples[i]);
        const auto bin = std::min<std::size_t>(kSessionHours - 1, static_cast<std::size_t>(std::max(0.0, hour - kOpenHour)));
        auto& hist = p.hour_histogram[labels[i]];
        ++hist[bin];
        p.scatter.push_back({samples[i].day, hour, labels[i]});
    }
    if (own_sets.empty()) throw Error(fmt::format("agent {} has no samples", agent));
    p.clusters = summarize(own_sets, own_labels);
    return p;
}

int dominant_label(std::span<const int> labels) {
    if (labels.empty()) throw Error("no labels to take a majority of");
    std::map<int, std::size_t> counts;
    for (auto l : labels) ++counts[l];
    int best = counts.begin()->first;
    for (const auto& [label, c] : counts) {
        if (c > counts[best]) best = label;
    }
    return best;
}

std::string profile_summary_csv(const AgentProfile& p) { return summary_rows_csv(p.clusters); }

std::string profile_hours_csv(const AgentProfile& p) {
    std::string s = "cluster";
    for (std::size_t h = 0; h < kSessionHours; ++h) s += fmt::format(",h{:02d}", kOpenHour + static_cast<int>(h));
    s += '\n';
    for (const auto& [cluster, hist] : p.hour_histogram) {
        s += fmt::format("{}", cluster);
        for (auto c : hist) s += fmt::format(",{}", c);
        s += '\n';
    }
    return s;
}

std::string profile_scatter_csv(const AgentProfile& p) {
    std::string s = "day,hour,cluster\n";
    for (const auto& x : p.scatter) s += fmt::format("{},{},{}\n", x.day, csv::format_real(x.hour), x.cluster);
    return s;
}

double passive_aggressive_ratio(std::span<const MarketOrder> orders, std::span<const PassiveFill> passive,
                                AgentId agent) {
    const auto aggressive = std::count_if(orders.begin(), orders.end(), [&](const auto& o) { return o.agent == agent; });
    if (aggressive == 0) throw Error(fmt::format("agent {} has no aggressive trades", agent));
    const auto n_passive = std::count_if(passive.begin(), passive.end(), [&](const auto& f) { return f.agent == agent; });
    return static_cast<double>(n_passive) / static_cast<double>(aggressive);
}

std::string indicators_csv(std::span<const Sample> samples, std::span<const int> labels,
                           std::span<const IndicatorSet> sets) {
    if (samples.size() != labels.size() || samples.size() != sets.size()) {
        throw Error("samples, labels and indicator sets differ in length");
    }
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "sample_id,agent,cluster");
    for (auto name : kIndicatorNames) fmt::format_to(std::back_inserter(buf), ",{}", name);
    buf.push_back('\n');
    for (std::size_t i = 0; i < samples.size(); ++i) {
        fmt::format_to(std::back_inserter(buf), "{},{},{}", i, samples[i].agent, labels[i]);
        for (std::size_t f = 0; f < kIndicatorCount; ++f) {
            fmt::format_to(std::back_inserter(buf), ",{}", csv::format_real(field(sets[i], f)));
        }
        buf.push_back('\n');
    }
    return fmt::to_string(buf);
}

}  // namespace ofrep
