#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace ofrep {

using AgentId = std::int32_t;

/// Orders per sample window.
inline constexpr std::size_t kWindowLength = 50;

/// Session length in seconds (9:00 to 17:00).
inline constexpr double kSessionSeconds = 28800.0;

/// One executed aggressive trade. Prices are integer ticks; t is seconds
/// since the 9:00 open.
struct MarketOrder {
    std::int32_t day = 0;
    double t = 0.0;
    AgentId agent = 0;
    std::int8_t side = 1;  // +1 buy, -1 sell
    std::int64_t q_filled = 1;
    std::int64_t q_intended = 1;
    std::int8_t modif = 0;
    std::int64_t best_bid = 0;
    std::int64_t best_ask = 1;
    std::int64_t bid_qty = 0;
    std::int64_t ask_qty = 0;

    bool operator==(const MarketOrder&) const = default;
};

/// Throws ofrep::Error naming the violated field.
void validate(const MarketOrder& order);

/// Window of kWindowLength consecutive orders of one agent on one day.
/// `first_row` is the position of orders[0] in the agent-day-sorted order
/// log the window was cut from; two windows of the same agent-day share an
/// order exactly when their row ranges intersect.
struct Sample {
    std::vector<MarketOrder> orders;
    AgentId agent = 0;
    std::int32_t day = 0;
    double start_time = 0.0;
    std::size_t first_row = 0;
};

void validate(const Sample& sample);

/// True when the two windows contain at least one common order.
bool shares_orders(const Sample& a, const Sample& b);

enum class FeatureSet { Basic, BasicM, BasicMQS };

std::size_t width(FeatureSet fs);
std::string_view name(FeatureSet fs);
FeatureSet parse_feature_set(std::string_view text);

/// Column layout shared by every feature set (prefixes of this list).
enum Column : std::size_t {
    kInterevent = 0,
    kQuantity = 1,
    kSide = 2,
    kBidRel = 3,
    kAskRel = 4,
    kModif = 5,
    kBidQty = 6,
    kAskQty = 7,
};

using Matrix = Eigen::MatrixXd;

/// Per-column affine standardization fitted on training windows.
/// Log columns are transformed with log1p before the affine step; side and
/// modif columns keep mean 0 / scale 1.
struct NormalizationStats {
    FeatureSet feature_set = FeatureSet::BasicMQS;
    std::vector<double> mean;
    std::vector<double> scale;
};

struct FeatureMatrix {
    Matrix values;  // kWindowLength x width(feature_set)
    FeatureSet feature_set = FeatureSet::BasicMQS;
};

/// True for the columns that pass through log1p and standardization.
bool is_log_column(std::size_t column);
bool is_standardized_column(std::size_t column);

/// Raw feature values before any transform: interevent time (first 0),
/// filled quantity, side, bid and ask in ticks relative to the first mid,
/// then modif and best-level queue sizes as the feature set requires.
Matrix feature_columns(const Sample& sample, FeatureSet fs);

/// Applies log1p to the heavy-tailed columns in place.
void transform_columns(Matrix& columns);

NormalizationStats fit_normalization(std::span<const Sample> training, FeatureSet fs);

FeatureMatrix featurize(const Sample& sample, FeatureSet fs, const NormalizationStats& norm);

/// Inverse of the affine step of featurize (returns transformed-scale values).
Matrix unstandardize(const FeatureMatrix& fm, const NormalizationStats& norm);

/// Cuts windows orders[i*stride, i*stride+50) from one agent-day sequence.
/// `first_row` offsets the recorded row positions.
std::vector<Sample> build_windows(std::span<const MarketOrder> orders, std::size_t stride,
                                  std::size_t first_row = 0);

/// Sorts a log by (agent, day, t), stable for equal keys.
void sort_orders(std::vector<MarketOrder>& orders);

/// Windows of every agent-day in a sorted log, in log order.
std::vector<Sample> build_all_windows(std::span<const MarketOrder> sorted_orders, std::size_t stride);

/// Rebuilds a sample from its recorded first row in the sorted log.
Sample window_at(std::span<const MarketOrder> sorted_orders, std::size_t first_row);

std::vector<MarketOrder> read_orders_csv(const std::filesystem::path& path);
std::string orders_csv(std::span<const MarketOrder> orders);
void write_orders_csv(const std::filesystem::path& path, std::span<const MarketOrder> orders);

}  // namespace ofrep
