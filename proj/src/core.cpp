#include "ofrep/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "ofrep/common.hpp"
#include "ofrep/csv.hpp"

namespace ofrep {

void validate(const MarketOrder& o) {
    if (!(o.t >= 0.0 && o.t <= kSessionSeconds)) {
        throw Error(fmt::format("order t={} outside the session [0, {}]", o.t, kSessionSeconds));
    }
    if (o.q_filled <= 0) throw Error(fmt::format("order q_filled={} must be positive", o.q_filled));
    if (o.q_intended < o.q_filled) {
        throw Error(fmt::format("order q_intended={} below q_filled={}", o.q_intended, o.q_filled));
    }
    if (o.side != 1 && o.side != -1) throw Error(fmt::format("order side={} must be +1 or -1", int{o.side}));
    if (o.modif != 0 && o.modif != 1) throw Error(fmt::format("order modif={} must be 0 or 1", int{o.modif}));
    if (o.best_ask <= o.best_bid) {
        throw Error(fmt::format("order spread not positive (bid {} ask {})", o.best_bid, o.best_ask));
    }
    if (o.bid_qty < 0 || o.ask_qty < 0) throw Error("order queue sizes must be non-negative");
}

void validate(const Sample& s) {
    if (s.orders.size() != kWindowLength) {
        throw Error(fmt::format("sample holds {} orders, expected {}", s.orders.size(), kWindowLength));
    }
    for (std::size_t i = 0; i < s.orders.size(); ++i) {
        const auto& o = s.orders[i];
        validate(o);
        if (o.agent != s.agent || o.day != s.day) throw Error("sample mixes agents or days");
        if (i > 0 && o.t < s.orders[i - 1].t) throw Error("sample orders are not time-ordered");
    }
    if (s.start_time != s.orders.front().t) throw Error("sample start_time differs from its first order");
}

bool shares_orders(const Sample& a, const Sample& b) {
    if (a.agent != b.agent || a.day != b.day) return false;
    const auto lo = std::max(a.first_row, b.first_row);
    const auto hi = std::min(a.first_row + a.orders.size(), b.first_row + b.orders.size());
    return lo < hi;
}

std::size_t width(FeatureSet fs) {
    switch (fs) {
        case FeatureSet::Basic: return 5;
        case FeatureSet::BasicM: return 6;
        case FeatureSet::BasicMQS: return 8;
    }
    throw Error("unknown feature set");
}

std::string_view name(FeatureSet fs) {
    switch (fs) {
        case FeatureSet::Basic: return "Basic";
        case FeatureSet::BasicM: return "Basic+M";
        case FeatureSet::BasicMQS: return "Basic+M+QS";
    }
    throw Error("unknown feature set");
}

FeatureSet parse_feature_set(std::string_view text) {
    if (text == "Basic" || text == "basic") return FeatureSet::Basic;
    if (text == "Basic+M" || text == "BasicM" || text == "basic-m") return FeatureSet::BasicM;
    if (text == "Basic+M+QS" || text == "BasicMQS" || text == "basic-m-qs") return FeatureSet::BasicMQS;
    throw Error(fmt::format("unknown feature set '{}' (expected Basic, Basic+M or Basic+M+QS)", text));
}

bool is_log_column(std::size_t column) {
    return column == kInterevent || column == kQuantity || column == kBidQty || column == kAskQty;
}

bool is_standardized_column(std::size_t column) {
    return column != kSide && column != kModif;
}

Matrix feature_columns(const Sample& sample, FeatureSet fs) {
    validate(sample);
    const std::size_t w = width(fs);
    Matrix m(kWindowLength, w);
    const auto& first = sample.orders.front();
    const double mid0 = 0.5 * static_cast<double>(first.best_bid + first.best_ask);
    for (std::size_t i = 0; i < kWindowLength; ++i) {
        const auto& o = sample.orders[i];
        const auto r = static_cast<Eigen::Index>(i);
        m(r, kInterevent) = i == 0 ? 0.0 : o.t - sample.orders[i - 1].t;
        m(r, kQuantity) = static_cast<double>(o.q_filled);
        m(r, kSide) = static_cast<double>(o.side);
        m(r, kBidRel) = static_cast<double>(o.best_bid) - mid0;
        m(r, kAskRel) = static_cast<double>(o.best_ask) - mid0;
        if (w > kModif) m(r, kModif) = static_cast<double>(o.modif);
        if (w > kBidQty) {
            m(r, kBidQty) = static_cast<double>(o.bid_qty);
            m(r, kAskQty) = static_cast<double>(o.ask_qty);
        }
    }
    return m;
}

void transform_columns(Matrix& columns) {
    for (Eigen::Index c = 0; c < columns.cols(); ++c) {
        if (!is_log_column(static_cast<std::size_t>(c))) continue;
        for (Eigen::Index r = 0; r < columns.rows(); ++r) columns(r, c) = std::log1p(columns(r, c));
    }
}

NormalizationStats fit_normalization(std::span<const Sample> training, FeatureSet fs) {
    if (training.empty()) throw Error("fit_normalization needs at least one training sample");
    const std::size_t w = width(fs);
    std::vector<double> sum(w, 0.0);
    std::vector<double> sum_sq(w, 0.0);
    std::vector<Matrix> transformed;
    transformed.reserve(training.size());
    for (const auto& s : training) {
        Matrix m = feature_columns(s, fs);
        transform_columns(m);
        transformed.push_back(std::move(m));
    }
    const double n = static_cast<double>(training.size() * kWindowLength);
    for (const auto& m : transformed) {
        for (std::size_t c = 0; c < w; ++c) sum[c] += m.col(static_cast<Eigen::Index>(c)).sum();
    }
    NormalizationStats stats;
    stats.feature_set = fs;
    stats.mean.assign(w, 0.0);
    stats.scale.assign(w, 1.0);
    for (std::size_t c = 0; c < w; ++c) stats.mean[c] = sum[c] / n;
    for (const auto& m : transformed) {
        for (std::size_t c = 0; c < w; ++c) {
            const auto col = m.col(static_cast<Eigen::Index>(c)).array() - stats.mean[c];
            sum_sq[c] += col.square().sum();
        }
    }
    for (std::size_t c = 0; c < w; ++c) {
        if (!is_standardized_column(c)) {
            stats.mean[c] = 0.0;
            stats.scale[c] = 1.0;
            continue;
        }
        const double sd = std::sqrt(sum_sq[c] / n);
        // constant on the training set
        stats.scale[c] = sd > 1e-12 * std::max(1.0, std::abs(stats.mean[c])) ? sd : 1.0;
    }
    return stats;
}

FeatureMatrix featurize(const Sample& sample, FeatureSet fs, const NormalizationStats& norm) {
    if (norm.feature_set != fs || norm.mean.size() != width(fs) || norm.scale.size() != width(fs)) {
        throw Error(fmt::format("normalization stats fitted for {} cannot featurize {}", name(norm.feature_set),
                                name(fs)));
    }
    FeatureMatrix out;
    out.feature_set = fs;
    out.values = feature_columns(sample, fs);
    transform_columns(out.values);
    for (std::size_t c = 0; c < width(fs); ++c) {
        auto col = out.values.col(static_cast<Eigen::Index>(c));
        col = (col.array() - norm.mean[c]) / norm.scale[c];
    }
    if (!out.values.allFinite()) throw Error("featurize produced non-finite values");
    return out;
}

Matrix unstandardize(const FeatureMatrix& fm, const NormalizationStats& norm) {
    Matrix m = fm.values;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const auto uc = static_cast<std::size_t>(c);
        m.col(c) = m.col(c).array() * norm.scale[uc] + norm.mean[uc];
    }
    return m;
}

std::vector<Sample> build_windows(std::span<const MarketOrder> orders, std::size_t stride, std::size_t first_row) {
    if (stride == 0) throw Error("window stride must be at least 1");
    for (std::size_t i = 1; i < orders.size(); ++i) {
        if (orders[i].agent != orders[0].agent || orders[i].day != orders[0].day) {
            throw Error("build_windows expects the orders of a single agent-day");
        }
        if (orders[i].t < orders[i - 1].t) throw Error("build_windows expects time-ordered orders");
    }
    std::vector<Sample> out;
    for (std::size_t start = 0; start + kWindowLength <= orders.size(); start += stride) {
        Sample s;
        s.orders.assign(orders.begin() + static_cast<std::ptrdiff_t>(start),
                        orders.begin() + static_cast<std::ptrdiff_t>(start + kWindowLength));
        s.agent = s.orders.front().agent;
        s.day = s.orders.front().day;
        s.start_time = s.orders.front().t;
        s.first_row = first_row + start;
        out.push_back(std::move(s));
    }
    return out;
}

void sort_orders(std::vector<MarketOrder>& orders) {
    std::stable_sort(orders.begin(), orders.end(), [](const MarketOrder& a, const MarketOrder& b) {
        if (a.agent != b.agent) return a.agent < b.agent;
        if (a.day != b.day) return a.day < b.day;
        return a.t < b.t;
    });
}

std::vector<Sample> build_all_windows(std::span<const MarketOrder> sorted, std::size_t stride) {
    std::vector<Sample> out;
    std::size_t begin = 0;
    while (begin < sorted.size()) {
        std::size_t end = begin + 1;
        while (end < sorted.size() && sorted[end].agent == sorted[begin].agent &&
               sorted[end].day == sorted[begin].day) {
            ++end;
        }
        if (end < sorted.size()) {
            const auto& a = sorted[end - 1];
            const auto& b = sorted[end];
            if (b.agent < a.agent || (b.agent == a.agent && b.day < a.day)) {
                throw Error("order log is not sorted by (agent, day, t)");
            }
        }
        auto windows = build_windows(sorted.subspan(begin, end - begin), stride, begin);
        std::move(windows.begin(), windows.end(), std::back_inserter(out));
        begin = end;
    }
    return out;
}

Sample window_at(std::span<const MarketOrder> sorted, std::size_t first_row) {
    if (first_row + kWindowLength > sorted.size()) {
        throw Error(fmt::format("window at row {} runs past the end of the order log", first_row));
    }
    auto windows = build_windows(sorted.subspan(first_row, kWindowLength), kWindowLength, first_row);
    return std::move(windows.front());
}

namespace {
constexpr const char* kOrdersHeader = "day,t,agent,side,q_filled,q_intended,modif,best_bid,best_ask,bid_qty,ask_qty";
}

std::vector<MarketOrder> read_orders_csv(const std::filesystem::path& path) {
    const auto table = csv::Table::read(path);
    const std::size_t c_day = table.column("day"), c_t = table.column("t"), c_agent = table.column("agent"),
                      c_side = table.column("side"), c_qf = table.column("q_filled"),
                      c_qi = table.column("q_intended"), c_modif = table.column("modif"),
                      c_bid = table.column("best_bid"), c_ask = table.column("best_ask"),
                      c_bq = table.column("bid_qty"), c_aq = table.column("ask_qty");
    std::vector<MarketOrder> orders;
    orders.reserve(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r) {
        MarketOrder o;
        o.day = static_cast<std::int32_t>(table.integer(r, c_day));
        o.t = table.real(r, c_t);
        o.agent = static_cast<AgentId>(table.integer(r, c_agent));
        o.side = static_cast<std::int8_t>(table.integer(r, c_side));
        o.q_filled = table.integer(r, c_qf);
        o.q_intended = table.integer(r, c_qi);
        o.modif = static_cast<std::int8_t>(table.integer(r, c_modif));
        o.best_bid = table.integer(r, c_bid);
        o.best_ask = table.integer(r, c_ask);
        o.bid_qty = table.integer(r, c_bq);
        o.ask_qty = table.integer(r, c_aq);
        try {
            validate(o);
        } catch (const Error& e) {
            throw Error(fmt::format("{}: row {}: {}", path.string(), r + 1, e.what()));
        }
        orders.push_back(o);
    }
    return orders;
}

std::string orders_csv(std::span<const MarketOrder> orders) {
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "{}\n", kOrdersHeader);
    for (const auto& o : orders) {
        fmt::format_to(std::back_inserter(buf), "{},{},{},{},{},{},{},{},{},{},{}\n", o.day, o.t, o.agent,
                       int{o.side}, o.q_filled, o.q_intended, int{o.modif}, o.best_bid, o.best_ask, o.bid_qty,
                       o.ask_qty);
    }
    return fmt::to_string(buf);
}

void write_orders_csv(const std::filesystem::path& path, std::span<const MarketOrder> orders) {
    csv::write_text(path, orders_csv(orders));
}

}  // namespace ofrep
