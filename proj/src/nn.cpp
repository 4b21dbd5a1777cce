#include "ofrep/nn.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include <fmt/format.h>

#include "ofrep/common.hpp"

namespace ofrep {

namespace {

constexpr std::size_t kEncodeChunk = 64;

void check_input(const EncoderParams& params, const FeatureMatrix& x) {
    if (x.values.rows() != static_cast<Eigen::Index>(kWindowLength) ||
        x.values.cols() != static_cast<Eigen::Index>(params.config.input_width)) {
        throw Error(fmt::format("encoder expects a {}x{} input, got {}x{}", kWindowLength, params.config.input_width,
                                x.values.rows(), x.values.cols()));
    }
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& z) {
    return 1.0 / (1.0 + (-z).exp());
}

// tanh through the vectorized exp; Eigen's double tanh is scalar.
template <typename Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& z) {
    return 1.0 - 2.0 / ((2.0 * z).exp() + 1.0);
}

/// Inputs of all steps side by side: column t*B + b holds row t of
/// sequence b, so step t is the contiguous block of columns [tB, (t+1)B).
void gather_steps(std::span<const FeatureMatrix* const> seqs, std::size_t width, Matrix& all) {
    const auto B = static_cast<Eigen::Index>(seqs.size());
    const auto T = static_cast<Eigen::Index>(kWindowLength);
    all.resize(static_cast<Eigen::Index>(width), T * B);
    for (Eigen::Index b = 0; b < B; ++b) {
        const Matrix& v = seqs[static_cast<std::size_t>(b)]->values;
        for (Eigen::Index t = 0; t < T; ++t) all.col(t * B + b) = v.row(t).transpose();
    }
}

/// Gate pre-activations -> activations for one contiguous 4h x B step
/// block: sigmoid on i, f, o and tanh on the cell candidate, using
/// tanh(x) = 2 sigmoid(2x) - 1 so one vectorized pass covers all gates.
void activate(double* z, Eigen::Index h, Eigen::Index B) {
    const Eigen::Index rows = 4 * h;
    for (Eigen::Index b = 0; b < B; ++b) {
        double* g = z + b * rows + 2 * h;
        for (Eigen::Index j = 0; j < h; ++j) g[j] *= 2.0;
    }
    Eigen::Map<Eigen::ArrayXd> all(z, rows * B);
    all = sigmoid(all);
    for (Eigen::Index b = 0; b < B; ++b) {
        double* g = z + b * rows + 2 * h;
        for (Eigen::Index j = 0; j < h; ++j) g[j] = 2.0 * g[j] - 1.0;
    }
}

/// Everything the backward pass needs from one layer. Step t occupies the
/// column block [tB, (t+1)B) of each member.
struct LayerTrace {
    Matrix joint;       // [W U b], 4h x (in + h + 1)
    Matrix stacked;     // [x_t; h_{t-1}; 1], (in + h + 1) x TB
    Matrix gates;       // activations, 4h x TB
    Matrix cells;       // h x TB
    Matrix tanh_cells;  // h x TB
    Matrix hidden;      // h x TB
    Eigen::Index steps = 0;
};

/// Per-thread buffers reused across calls; a training run would otherwise
/// allocate and fault in tens of megabytes per batch.
struct Workspace {
    Matrix inputs;
    LayerTrace first;
    LayerTrace second;
    Matrix joint_t;
    Matrix dz;
    Matrix dh, dc, d_stacked, d_joint;
    Matrix d_hidden1;
    Matrix d_emb;
};

Workspace& workspace() {
    thread_local Workspace ws;
    return ws;
}

using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

/// rows x cols view over `buf`, growing it only when too small.
MatrixMap view(Matrix& buf, Eigen::Index rows, Eigen::Index cols) {
    if (buf.size() < rows * cols) buf.resize(rows, cols);
    return MatrixMap(buf.data(), rows, cols);
}

/// Keeps only sequences `keep` (ascending) of a T-step, B-wide column layout,
/// packing them in place to width keep.size().
void compact(Matrix& m, Eigen::Index T, Eigen::Index B, std::span<const Eigen::Index> keep) {
    const auto rows = m.rows();
    const auto kept = static_cast<Eigen::Index>(keep.size());
    for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index k = 0; k < kept; ++k) {
            const double* src = m.data() + (t * B + keep[static_cast<std::size_t>(k)]) * rows;
            double* dst = m.data() + (t * kept + k) * rows;
            if (src != dst) std::copy(src, src + rows, dst);
        }
    }
}

void compact(LayerTrace& tr, Eigen::Index B, std::span<const Eigen::Index> keep) {
    compact(tr.stacked, tr.steps, B, keep);
    compact(tr.gates, tr.steps, B, keep);
    compact(tr.cells, tr.steps, B, keep);
    compact(tr.tanh_cells, tr.steps, B, keep);
}

void layer_forward(const LstmLayer& layer, const Matrix& inputs, Eigen::Index B, LayerTrace& tr) {
    const auto h = static_cast<Eigen::Index>(layer.hidden());
    const auto in = inputs.rows();
    const auto T = inputs.cols() / B;
    tr.steps = T;
    tr.joint.resize(4 * h, in + h + 1);
    tr.joint << layer.input_weights, layer.recurrent_weights, layer.bias;
    tr.stacked.resize(in + h + 1, T * B);
    tr.stacked.topRows(in) = inputs;
    tr.stacked.block(in, 0, h, B).setZero();
    tr.stacked.bottomRows(1).setOnes();
    tr.gates.resize(4 * h, T * B);
    tr.cells.resize(h, T * B);
    tr.tanh_cells.resize(h, T * B);
    tr.hidden.resize(h, T * B);
    for (Eigen::Index t = 0; t < T; ++t) {
        auto z = tr.gates.middleCols(t * B, B);
        z.noalias() = tr.joint * tr.stacked.middleCols(t * B, B);
        activate(z.data(), h, B);
        const double* prev = t > 0 ? tr.cells.data() + (t - 1) * B * h : nullptr;
        double* c = tr.cells.data() + t * B * h;
        for (Eigen::Index b = 0; b < B; ++b) {
            const double* zi = z.data() + b * 4 * h;
            const double* zf = zi + h;
            const double* zg = zi + 2 * h;
            double* cb = c + b * h;
            if (prev) {
                const double* pb = prev + b * h;
                for (Eigen::Index j = 0; j < h; ++j) cb[j] = zf[j] * pb[j] + zi[j] * zg[j];
            } else {
                for (Eigen::Index j = 0; j < h; ++j) cb[j] = zi[j] * zg[j];
            }
        }
        auto tc = tr.tanh_cells.middleCols(t * B, B);
        tc = fast_tanh(tr.cells.middleCols(t * B, B).array()).matrix();
        for (Eigen::Index b = 0; b < B; ++b) {
            const double* zo = z.data() + b * 4 * h + 3 * h;
            const double* tb = tc.data() + b * h;
            double* hb = tr.hidden.data() + (t * B + b) * h;
            for (Eigen::Index j = 0; j < h; ++j) hb[j] = zo[j] * tb[j];
        }
        if (t + 1 < T) tr.stacked.block(in, (t + 1) * B, h, B) = tr.hidden.middleCols(t * B, B);
    }
}

/// BPTT through one layer over the first B sequences of the trace.
/// `external` (h x TB, or h x B for the last step only when
/// `last_step_only`) is the loss gradient arriving at the hidden states from
/// above. Accumulates into `grad` and, when `input_grads` is given, writes
/// d loss / d inputs (in x TB) into it.
void layer_backward(const LstmLayer& layer, const LayerTrace& tr, const Eigen::Ref<const Matrix>& external,
                    bool last_step_only, Eigen::Index B, LstmLayer& grad, Matrix* input_grads_buf, Workspace& ws) {
    const auto h = static_cast<Eigen::Index>(layer.hidden());
    const auto in = layer.input_weights.cols();
    const auto T = tr.steps;
    ws.joint_t = tr.joint.leftCols(in + h).transpose();
    auto dz = view(ws.dz, 4 * h, T * B);
    ws.dh.setZero(h, B);
    ws.dc.setZero(h, B);
    ws.d_stacked.resize(in + h, B);
    std::optional<MatrixMap> input_grads;
    if (input_grads_buf) input_grads.emplace(view(*input_grads_buf, in, T * B));
    for (Eigen::Index t = T; t-- > 0;) {
        if (last_step_only) {
            if (t == T - 1) ws.dh += external;
        } else {
            ws.dh += external.middleCols(t * B, B);
        }
        for (Eigen::Index b = 0; b < B; ++b) {
            const double* __restrict gi = tr.gates.data() + (t * B + b) * 4 * h;
            const double* __restrict gf = gi + h;
            const double* __restrict gg = gi + 2 * h;
            const double* __restrict go = gi + 3 * h;
            const double* __restrict tc = tr.tanh_cells.data() + (t * B + b) * h;
            double* __restrict dzi = dz.data() + (t * B + b) * 4 * h;
            double* __restrict dzf = dzi + h;
            double* __restrict dzg = dzi + 2 * h;
            double* __restrict dzo = dzi + 3 * h;
            const double* __restrict dhb = ws.dh.data() + b * h;
            double* __restrict dcb = ws.dc.data() + b * h;
            for (Eigen::Index j = 0; j < h; ++j) {
                const double dcj = dcb[j] + dhb[j] * go[j] * (1.0 - tc[j] * tc[j]);
                dzi[j] = dcj * gg[j] * gi[j] * (1.0 - gi[j]);
                dzf[j] = dcj * gf[j] * (1.0 - gf[j]);  // times c_{t-1} below
                dzg[j] = dcj * gi[j] * (1.0 - gg[j] * gg[j]);
                dzo[j] = dhb[j] * tc[j] * go[j] * (1.0 - go[j]);
                dcb[j] = dcj * gf[j];
            }
            if (t > 0) {
                const double* __restrict cp = tr.cells.data() + ((t - 1) * B + b) * h;
                for (Eigen::Index j = 0; j < h; ++j) dzf[j] *= cp[j];
            } else {
                for (Eigen::Index j = 0; j < h; ++j) dzf[j] = 0.0;
            }
        }
        if (t > 0 || input_grads) {
            ws.d_stacked.noalias() = ws.joint_t * dz.middleCols(t * B, B);
            ws.dh = ws.d_stacked.bottomRows(h);
            if (input_grads) input_grads->middleCols(t * B, B) = ws.d_stacked.topRows(in);
        }
    }
    ws.d_joint.resize(4 * h, in + h + 1);
    ws.d_joint.noalias() = dz * ConstMatrixMap(tr.stacked.data(), in + h + 1, T * B).transpose();
    grad.input_weights += ws.d_joint.leftCols(in);
    grad.recurrent_weights += ws.d_joint.middleCols(in, h);
    grad.bias += ws.d_joint.col(in + h);
}

/// Embeddings (d x B) of a batch.
Matrix forward_inference(const EncoderParams& params, std::span<const FeatureMatrix* const> seqs) {
    const auto B = static_cast<Eigen::Index>(seqs.size());
    auto& ws = workspace();
    gather_steps(seqs, params.config.input_width, ws.inputs);
    layer_forward(params.layers[0], ws.inputs, B, ws.first);
    layer_forward(params.layers[1], ws.first.hidden, B, ws.second);
    return ws.second.hidden.rightCols(B);
}

std::vector<const FeatureMatrix*> flatten(std::span<const TripletInput> triplets) {
    const auto n = triplets.size();
    std::vector<const FeatureMatrix*> seqs(3 * n);
    for (std::size_t j = 0; j < n; ++j) {
        seqs[j] = triplets[j].anchor;
        seqs[n + j] = triplets[j].positive;
        seqs[2 * n + j] = triplets[j].negative;
    }
    return seqs;
}

void check_triplets(const EncoderParams& params, std::span<const TripletInput> triplets) {
    for (const auto& t : triplets) {
        if (!t.anchor || !t.positive || !t.negative) throw Error("triplet input is missing a window");
        check_input(params, *t.anchor);
        check_input(params, *t.positive);
        check_input(params, *t.negative);
    }
}

void init_layer(LstmLayer& layer, std::size_t in, std::size_t h) {
    const auto H = static_cast<Eigen::Index>(h);
    layer.input_weights = Matrix::Zero(4 * H, static_cast<Eigen::Index>(in));
    layer.recurrent_weights = Matrix::Zero(4 * H, H);
    layer.bias = Vector::Zero(4 * H);
}

}  // namespace

void validate(const EncoderConfig& c) {
    if (c.input_width == 0 || c.hidden1 == 0 || c.hidden2 == 0) {
        throw Error("encoder widths must be positive");
    }
    if (!(c.margin >= 0.0) || !std::isfinite(c.margin)) throw Error("triplet margin must be finite and non-negative");
}

EncoderParams EncoderParams::zeros(const EncoderConfig& config) {
    validate(config);
    EncoderParams p;
    p.config = config;
    init_layer(p.layers[0], config.input_width, config.hidden1);
    init_layer(p.layers[1], config.hidden1, config.hidden2);
    return p;
}

std::size_t EncoderParams::size() const {
    std::size_t n = 0;
    for (const auto& l : layers) {
        n += static_cast<std::size_t>(l.input_weights.size() + l.recurrent_weights.size() + l.bias.size());
    }
    return n;
}

bool EncoderParams::all_finite() const {
    for (const auto& l : layers) {
        if (!l.input_weights.allFinite() || !l.recurrent_weights.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
}

void EncoderParams::for_each(const std::function<void(double&)>& fn) {
    for (auto& l : layers) {
        for (Eigen::Index i = 0; i < l.input_weights.size(); ++i) fn(l.input_weights.data()[i]);
        for (Eigen::Index i = 0; i < l.recurrent_weights.size(); ++i) fn(l.recurrent_weights.data()[i]);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) fn(l.bias.data()[i]);
    }
}

void EncoderParams::for_each(const std::function<void(double)>& fn) const {
    for (const auto& l : layers) {
        for (Eigen::Index i = 0; i < l.input_weights.size(); ++i) fn(l.input_weights.data()[i]);
        for (Eigen::Index i = 0; i < l.recurrent_weights.size(); ++i) fn(l.recurrent_weights.data()[i]);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) fn(l.bias.data()[i]);
    }
}

EncoderParams& EncoderParams::operator+=(const EncoderParams& other) {
    for (std::size_t k = 0; k < layers.size(); ++k) {
        layers[k].input_weights += other.layers[k].input_weights;
        layers[k].recurrent_weights += other.layers[k].recurrent_weights;
        layers[k].bias += other.layers[k].bias;
    }
    return *this;
}

EncoderParams& EncoderParams::operator*=(double s) {
    for (auto& l : layers) {
        l.input_weights *= s;
        l.recurrent_weights *= s;
        l.bias *= s;
    }
    return *this;
}

EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed) {
    EncoderParams p = EncoderParams::zeros(config);
    Rng rng(seed);
    for (auto& layer : p.layers) {
        const auto h = static_cast<Eigen::Index>(layer.hidden());
        const double bound = 1.0 / std::sqrt(static_cast<double>(h));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (Eigen::Index i = 0; i < layer.input_weights.size(); ++i) layer.input_weights.data()[i] = u(rng);
        for (Eigen::Index i = 0; i < layer.recurrent_weights.size(); ++i) layer.recurrent_weights.data()[i] = u(rng);
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias.data()[i] = u(rng);
        layer.bias.segment(h, h).setOnes();
    }
    return p;
}

Embedding encode(const EncoderParams& params, const FeatureMatrix& x) {
    check_input(params, x);
    const FeatureMatrix* seq = &x;
    return forward_inference(params, std::span<const FeatureMatrix* const>(&seq, 1)).col(0);
}

Matrix encode_all(const EncoderParams& params, std::span<const FeatureMatrix> xs, int threads) {
    for (const auto& x : xs) check_input(params, x);
    Matrix out(static_cast<Eigen::Index>(params.config.hidden2), static_cast<Eigen::Index>(xs.size()));
    const std::size_t chunks = (xs.size() + kEncodeChunk - 1) / kEncodeChunk;
    parallel_for(chunks, threads, [&](std::size_t c) {
        const auto begin = c * kEncodeChunk;
        const auto end = std::min(xs.size(), begin + kEncodeChunk);
        std::vector<const FeatureMatrix*> seqs;
        for (auto i = begin; i < end; ++i) seqs.push_back(&xs[i]);
        out.middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) =
            forward_inference(params, seqs);
    });
    return out;
}

double triplet_loss(const Embedding& anchor, const Embedding& positive, const Embedding& negative, double margin) {
    if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
        throw Error(fmt::format("triplet_loss dimension mismatch ({}, {}, {})", anchor.size(), positive.size(),
                                negative.size()));
    }
    const double arg = (anchor - positive).squaredNorm() - (anchor - negative).squaredNorm() + margin;
    return std::max(arg, 0.0);
}

LossAndGradient backward_batch(const EncoderParams& params, std::span<const TripletInput> triplets, double margin) {
    LossAndGradient out;
    out.gradient = EncoderParams::zeros(params.config);
    if (triplets.empty()) return out;
    check_triplets(params, triplets);

    const auto n = static_cast<Eigen::Index>(triplets.size());
    const auto seqs = flatten(triplets);
    auto& ws = workspace();
    gather_steps(seqs, params.config.input_width, ws.inputs);
    layer_forward(params.layers[0], ws.inputs, 3 * n, ws.first);
    layer_forward(params.layers[1], ws.first.hidden, 3 * n, ws.second);
    const auto emb = ws.second.hidden.rightCols(3 * n);

    // Inactive triplets contribute exactly zero, so only active ones are
    // carried through the backward pass.
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto a = emb.col(j);
        const auto p = emb.col(n + j);
        const auto q = emb.col(2 * n + j);
        const double arg = (a - p).squaredNorm() - (a - q).squaredNorm() + margin;
        if (arg <= 0.0) continue;
        out.loss += arg;
        active.push_back(j);
    }
    if (active.empty()) return out;

    const auto m = static_cast<Eigen::Index>(active.size());
    auto d_emb = view(ws.d_emb, emb.rows(), 3 * m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto j = active[static_cast<std::size_t>(k)];
        const auto a = emb.col(j);
        const auto p = emb.col(n + j);
        const auto q = emb.col(2 * n + j);
        d_emb.col(k) = 2.0 * (q - p);
        d_emb.col(m + k) = 2.0 * (p - a);
        d_emb.col(2 * m + k) = 2.0 * (a - q);
    }
    if (m < n) {
        std::vector<Eigen::Index> keep;
        for (Eigen::Index role = 0; role < 3; ++role) {
            for (auto j : active) keep.push_back(role * n + j);
        }
        compact(ws.first, 3 * n, keep);
        compact(ws.second, 3 * n, keep);
    }

    const auto T = ws.first.steps;
    layer_backward(params.layers[1], ws.second, d_emb, true, 3 * m, out.gradient.layers[1], &ws.d_hidden1, ws);
    layer_backward(params.layers[0], ws.first,
                   ConstMatrixMap(ws.d_hidden1.data(), params.layers[1].input_weights.cols(), T * 3 * m), false,
                   3 * m, out.gradient.layers[0], nullptr, ws);
    return out;
}

LossAndGradient backward(const EncoderParams& params, const FeatureMatrix& anchor, const FeatureMatrix& positive,
                         const FeatureMatrix& negative, double margin) {
    const TripletInput t{&anchor, &positive, &negative};
    return backward_batch(params, std::span<const TripletInput>(&t, 1), margin);
}

std::vector<double> triplet_losses(const EncoderParams& params, std::span<const TripletInput> triplets,
                                   double margin) {
    check_triplets(params, triplets);
    const auto seqs = flatten(triplets);
    const Matrix emb = forward_inference(params, seqs);
    const auto n = static_cast<Eigen::Index>(triplets.size());
    std::vector<double> out(triplets.size());
    for (Eigen::Index j = 0; j < n; ++j) {
        out[static_cast<std::size_t>(j)] = triplet_loss(emb.col(j), emb.col(n + j), emb.col(2 * n + j), margin);
    }
    return out;
}

AdamState AdamState::zeros(const EncoderConfig& config) {
    AdamState s;
    s.first_moment = EncoderParams::zeros(config);
    s.second_moment = EncoderParams::zeros(config);
    return s;
}

void adam_step(EncoderParams& params, const EncoderParams& grads, AdamState& state, const AdamConfig& cfg) {
    if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
        state.second_moment.size() != params.size()) {
        throw Error("adam_step shape mismatch");
    }
    if (!grads.all_finite()) throw Error("non-finite gradient; aborting the update");
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        p.array() -= cfg.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
    };
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
        auto& p = params.layers[k];
        const auto& g = grads.layers[k];
        auto& m = state.first_moment.layers[k];
        auto& v = state.second_moment.layers[k];
        update(p.input_weights, g.input_weights, m.input_weights, v.input_weights);
        update(p.recurrent_weights, g.recurrent_weights, m.recurrent_weights, v.recurrent_weights);
        update(p.bias, g.bias, m.bias, v.bias);
    }
}

GradCheckResult grad_check(const EncoderConfig& config, std::uint64_t seed, bool hinge_active) {
    validate(config);
    EncoderParams params = init_params(config, derive_seed(seed, 1));
    Rng rng(derive_seed(seed, 2));
    std::normal_distribution<double> z(0.0, 1.0);
    auto random_input = [&] {
        FeatureMatrix x;
        x.values = Matrix(static_cast<Eigen::Index>(kWindowLength), static_cast<Eigen::Index>(config.input_width));
        for (Eigen::Index i = 0; i < x.values.size(); ++i) x.values.data()[i] = z(rng);
        return x;
    };
    // random biases so no gate sits at its initial symmetric value
    for (auto& layer : params.layers) {
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = 0.5 * z(rng);
    }
    const FeatureMatrix anchor = random_input();
    const FeatureMatrix positive = hinge_active ? random_input() : anchor;
    const FeatureMatrix negative = random_input();

    GradCheckResult result;
    const Embedding ea = encode(params, anchor), ep = encode(params, positive), en = encode(params, negative);
    result.margin = hinge_active ? 0.5 + std::max(0.0, (ea - en).squaredNorm() - (ea - ep).squaredNorm()) : 0.0;

    const auto analytic = backward(params, anchor, positive, negative, result.margin);
    result.loss = analytic.loss;
    std::vector<double> grads;
    analytic.gradient.for_each([&](double g) { grads.push_back(g); });

    auto loss_at = [&](const EncoderParams& p) {
        return triplet_loss(encode(p, anchor), encode(p, positive), encode(p, negative), result.margin);
    };
    std::vector<double*> slots;
    params.for_each([&](double& v) { slots.push_back(&v); });
    result.n_params = slots.size();
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const double saved = *slots[i];
        *slots[i] = saved + kGradCheckStep;
        const double up = loss_at(params);
        *slots[i] = saved - kGradCheckStep;
        const double down = loss_at(params);
        *slots[i] = saved;
        const double numeric = (up - down) / (2.0 * kGradCheckStep);
        const double denom = std::max({std::abs(grads[i]), std::abs(numeric), kGradCheckFloor});
        result.max_relative_error = std::max(result.max_relative_error, std::abs(grads[i] - numeric) / denom);
    }
    return result;
}

}  // namespace ofrep
