#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ofrep/common.hpp"
#include "ofrep/core.hpp"
#include "ofrep/nn.hpp"

namespace ofrep::test {

/// Valid random window of one agent-day, times strictly increasing.
inline Sample random_sample(std::mt19937_64& rng, AgentId agent = 1, std::int32_t day = 0, double t0 = 100.0) {
    std::uniform_real_distribution<double> gap(0.01, 30.0);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<std::int64_t> size(1, 40), queue(1, 500), spread(1, 4), level(900, 1100);
    Sample s;
    s.agent = agent;
    s.day = day;
    double t = t0;
    for (std::size_t i = 0; i < kWindowLength; ++i) {
        MarketOrder o;
        o.day = day;
        o.agent = agent;
        o.t = t;
        t += gap(rng);
        o.side = coin(rng) ? 1 : -1;
        o.q_intended = size(rng);
        o.q_filled = std::uniform_int_distribution<std::int64_t>(1, o.q_intended)(rng);
        o.modif = static_cast<std::int8_t>(coin(rng));
        o.best_bid = level(rng);
        o.best_ask = o.best_bid + spread(rng);
        o.bid_qty = queue(rng);
        o.ask_qty = queue(rng);
        s.orders.push_back(o);
    }
    s.start_time = s.orders.front().t;
    return s;
}

inline FeatureMatrix random_features(std::mt19937_64& rng, std::size_t width) {
    std::normal_distribution<double> z;
    FeatureMatrix f;
    f.values.resize(kWindowLength, static_cast<Eigen::Index>(width));
    for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values.data()[i] = z(rng);
    return f;
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto d = std::filesystem::temp_directory_path() / ("ofrep_test_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

inline std::vector<double> flat(const EncoderParams& p) {
    std::vector<double> v;
    p.for_each([&](double x) { v.push_back(x); });
    return v;
}

}  // namespace ofrep::test
