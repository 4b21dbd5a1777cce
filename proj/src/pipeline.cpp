#include "ofrep/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "ofrep/common.hpp"
#include "ofrep/csv.hpp"

namespace ofrep::pipeline {

namespace {

constexpr std::uint64_t kMarketStream = 11;
constexpr std::uint64_t kSplitStream = 12;
constexpr std::uint64_t kTrainTripletStream = 13;
constexpr std::uint64_t kTestTripletStream = 14;
constexpr std::uint64_t kTrainStream = 15;
constexpr std::uint64_t kClusterStream = 16;

std::vector<std::size_t> ids_on(std::span<const Sample> windows, const std::set<std::int32_t>& days) {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (days.contains(windows[i].day)) ids.push_back(i);
    }
    return ids;
}

std::vector<Sample> pick(std::span<const Sample> windows, std::span<const std::size_t> ids) {
    std::vector<Sample> out;
    out.reserve(ids.size());
    for (auto i : ids) out.push_back(windows[i]);
    return out;
}

std::vector<AgentId> agents_of(std::span<const Sample> windows) {
    std::vector<AgentId> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(w.agent);
    return out;
}

std::vector<FeatureMatrix> featurize_all(std::span<const Sample> windows, const NormalizationStats& norm) {
    std::vector<FeatureMatrix> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(featurize(w, norm.feature_set, norm));
    return out;
}

struct Corpus {
    std::vector<MarketOrder> orders;
    std::vector<Sample> windows;
};

Corpus load_corpus(const fs::path& orders, const fs::path& windows) {
    Corpus k;
    k.orders = load_sorted_orders(orders);
    k.windows = read_windows_csv(windows, k.orders);
    return k;
}

std::vector<int> read_labels(const fs::path& path, std::size_t n) {
    const auto t = csv::Table::read(path);
    if (t.rows() != n) throw Error(fmt::format("{}: expected {} assignments, got {}", path.string(), n, t.rows()));
    const auto c_id = t.column("sample_id"), c_cluster = t.column("cluster");
    std::vector<int> labels(n);
    for (std::size_t r = 0; r < n; ++r) {
        if (t.integer(r, c_id) != static_cast<std::int64_t>(r)) throw Error(fmt::format("{}: sample ids out of order", path.string()));
        labels[r] = static_cast<int>(t.integer(r, c_cluster));
    }
    return labels;
}

std::vector<AgentArchetype> archetypes_for(const Config& c) {
    if (!c.archetypes_file.empty()) return read_archetypes_csv(c.archetypes_file);
    if (c.archetype_set == "default") return default_archetypes();
    if (c.archetype_set == "ablation") return ablation_archetypes();
    throw Error(fmt::format("unknown archetype set '{}' (default or ablation)", c.archetype_set));
}

}  // namespace

void Config::apply_full_scale() {
    train.epochs = TrainConfig::full_scale().epochs;
    train_triplets = 100000;
    test_triplets = 20000;
}

MarketConfig market_config(const Config& c) {
    const auto archetypes = archetypes_for(c);
    auto m = make_market(archetypes, c.n_agents, c.n_days, derive_seed(c.seed, kMarketStream));
    for (auto& a : m.agents) a.jitter = c.jitter;
    if (c.switch_agent) {
        auto it = std::find_if(m.agents.begin(), m.agents.end(), [&](const AgentSpec& a) { return a.id == *c.switch_agent; });
        if (it == m.agents.end()) throw Error(fmt::format("switch agent {} does not exist", *c.switch_agent));
        auto target = std::find_if(archetypes.begin(), archetypes.end(),
                                   [&](const AgentArchetype& a) { return a.name == c.switch_to; });
        if (target == archetypes.end()) throw Error(fmt::format("unknown archetype '{}' to switch to", c.switch_to));
        it->after_switch = *target;
        it->switch_day = c.switch_day;
    }
    validate(m);
    return m;
}

void generate(const Config& c, const GenerateOutputs& out) {
    const auto m = market_config(c);
    const auto market = ofrep::generate(m, c.threads);
    write_orders_csv(out.orders, market.orders);
    if (!out.passive.empty()) csv::write_text(out.passive, passive_csv(market.passive));
    if (!out.agents.empty()) csv::write_text(out.agents, agents_csv(m));
}

std::vector<MarketOrder> load_sorted_orders(const fs::path& orders) {
    auto all = read_orders_csv(orders);
    sort_orders(all);
    return all;
}

void windows(const Config& c, const fs::path& orders, const fs::path& windows_out, const fs::path& split_out) {
    const auto sorted = load_sorted_orders(orders);
    const auto active = select_active_agents(sorted, c.min_orders_per_day, c.min_days);
    if (active.empty()) throw Error("no agent passes the activity filter");
    std::vector<Sample> ws;
    for (auto& w : build_all_windows(sorted, c.stride)) {
        if (active.contains(w.agent)) ws.push_back(std::move(w));
    }
    if (ws.empty()) throw Error("the order log yields no complete window");
    const auto days = days_of(ws);
    const auto split = split_days(days, derive_seed(c.seed, kSplitStream));
    csv::write_text(windows_out, windows_csv(ws));
    csv::write_text(split_out, split_csv(split));
}

void triplets(const Config& c, const fs::path& orders, const fs::path& windows, const fs::path& split,
              const fs::path& train_out, const fs::path& test_out) {
    const auto corpus = load_corpus(orders, windows);
    const auto sp = read_split_csv(split);
    auto draw = [&](const std::set<std::int32_t>& days, std::size_t count, std::uint64_t stream) {
        const auto ids = ids_on(corpus.windows, days);
        const auto subset = pick(corpus.windows, ids);
        auto ts = sample_triplets(subset, c.horizon_s, count, derive_seed(c.seed, stream));
        for (auto& t : ts) t = {ids[t.anchor], ids[t.positive], ids[t.negative]};
        return ts;
    };
    csv::write_text(train_out, triplets_csv(draw(sp.train_days, c.train_triplets, kTrainTripletStream)));
    csv::write_text(test_out, triplets_csv(draw(sp.test_days, c.test_triplets, kTestTripletStream)));
}

void train(const Config& c, const fs::path& orders, const fs::path& windows, const fs::path& split,
           const fs::path& train_triplets, const TrainOutputs& out, const std::optional<fs::path>& resume) {
    const auto corpus = load_corpus(orders, windows);
    const auto sp = read_split_csv(split);
    const auto ts = read_triplets_csv(train_triplets, corpus.windows.size());
    for (const auto& t : ts) {
        for (auto id : {t.anchor, t.positive, t.negative}) {
            if (!sp.train_days.contains(corpus.windows[id].day)) {
                throw Error("training triplets reference a window outside the training days");
            }
        }
    }
    const auto train_windows = pick(corpus.windows, ids_on(corpus.windows, sp.train_days));

    std::optional<Checkpoint> start;
    if (resume) start = load_checkpoint(*resume);
    const auto norm = start ? start->norm : fit_normalization(train_windows, c.feature_set);
    EncoderConfig ec = c.encoder;
    ec.input_width = width(norm.feature_set);
    TrainConfig tc = c.train;
    tc.seed = derive_seed(c.seed, kTrainStream);
    tc.threads = c.threads;

    const auto features = featurize_all(corpus.windows, norm);
    const auto result = ofrep::train(features, ts, ec, tc, norm, start);
    save_checkpoint(out.checkpoint, result.checkpoint);
    if (!out.loss_csv.empty()) csv::write_text(out.loss_csv, loss_history_csv(result.loss_history));
}

void eval(const Config& c, const fs::path& orders, const fs::path& windows, const fs::path& checkpoint,
          const fs::path& test_triplets, const fs::path& report_out) {
    const auto corpus = load_corpus(orders, windows);
    const auto ckpt = load_checkpoint(checkpoint);
    const auto ts = read_triplets_csv(test_triplets, corpus.windows.size());
    const Matrix emb = encode_all(ckpt.params, featurize_all(corpus.windows, ckpt.norm), c.threads);
    const auto agents = agents_of(corpus.windows);
    csv::write_text(report_out, failure_report_csv(ckpt.norm.feature_set, failure_rate(emb, ts),
                                                   failure_rate_per_agent(emb, ts, agents)));
}

void ablate(const Config& c, const fs::path& orders, const fs::path& windows, const fs::path& split,
            const fs::path& train_triplets, const fs::path& test_triplets, const fs::path& report_out) {
    const auto corpus = load_corpus(orders, windows);
    const auto sp = read_split_csv(split);
    const auto train_ids = ids_on(corpus.windows, sp.train_days);
    const auto test_ids = ids_on(corpus.windows, sp.test_days);
    // re-index the triplets into the per-side window lists
    std::map<std::size_t, std::size_t> train_pos, test_pos;
    for (std::size_t i = 0; i < train_ids.size(); ++i) train_pos[train_ids[i]] = i;
    for (std::size_t i = 0; i < test_ids.size(); ++i) test_pos[test_ids[i]] = i;
    auto remap = [](std::vector<Triplet> ts, const std::map<std::size_t, std::size_t>& pos, const char* side) {
        for (auto& t : ts) {
            auto at = [&](std::size_t id) {
                auto it = pos.find(id);
                if (it == pos.end()) throw Error(fmt::format("{} triplet references a window of the other split", side));
                return it->second;
            };
            t = {at(t.anchor), at(t.positive), at(t.negative)};
        }
        return ts;
    };
    const auto tr = remap(read_triplets_csv(train_triplets, corpus.windows.size()), train_pos, "training");
    const auto te = remap(read_triplets_csv(test_triplets, corpus.windows.size()), test_pos, "test");

    TrainConfig tc = c.train;
    tc.seed = derive_seed(c.seed, kTrainStream);
    tc.threads = c.threads;
    const std::vector<FeatureSet> sets = {FeatureSet::Basic, FeatureSet::BasicM, FeatureSet::BasicMQS};
    const auto rows = ablation_report(pick(corpus.windows, train_ids), tr, pick(corpus.windows, test_ids), te,
                                      c.encoder, tc, sets);
    csv::write_text(report_out, ablation_csv(rows));
}

void cluster(const Config& c, const fs::path& orders, const fs::path& windows, const fs::path& checkpoint,
             const ClusterOutputs& out) {
    const auto corpus = load_corpus(orders, windows);
    const auto ckpt = load_checkpoint(checkpoint);
    const Matrix emb = encode_all(ckpt.params, featurize_all(corpus.windows, ckpt.norm), c.threads);
    KMeansConfig kc;
    kc.threads = c.threads;
    const auto seed = derive_seed(c.seed, kClusterStream);
    ClusterModel model;
    if (c.k) {
        model = kmeans(emb, *c.k, seed, kc);
    } else {
        const auto elbow = elbow_select(emb, c.k_min, c.k_max, seed, kc);
        if (!out.elbow.empty()) csv::write_text(out.elbow, elbow_csv(elbow));
        model = elbow.models[elbow.k_star - c.k_min];
    }
    save_cluster_model(out.model, model);
    const auto agents = agents_of(corpus.windows);
    csv::write_text(out.assignments, assignments_csv(agents, model.labels));
    if (!out.pca.empty()) {
        const auto dim = std::min<std::size_t>(c.pca_dim, static_cast<std::size_t>(emb.rows()));
        csv::write_text(out.pca, pca_csv(pca(emb, dim), agents, model.labels));
    }
}

void indicators(const Config& c, const fs::path& orders, const fs::path& windows, const fs::path& assignments,
                const fs::path& passive, const IndicatorOutputs& out) {
    const auto corpus = load_corpus(orders, windows);
    const auto labels = read_labels(assignments, corpus.windows.size());
    std::vector<IndicatorSet> sets(corpus.windows.size());
    parallel_for(sets.size(), c.threads, [&](std::size_t i) { sets[i] = ofrep::indicators(corpus.windows[i]); });

    csv::write_text(out.indicators, indicators_csv(corpus.windows, labels, sets));
    const auto summary = cluster_summary(sets, labels);
    if (!out.summary.empty()) csv::write_text(out.summary, cluster_summary_csv(summary));
    if (!out.ratings.empty()) csv::write_text(out.ratings, ratings_csv(summary));

    std::set<AgentId> agents;
    for (const auto& w : corpus.windows) agents.insert(w.agent);
    if (!out.profiles_dir.empty()) {
        for (auto a : agents) {
            const auto p = agent_profile(a, corpus.windows, sets, labels);
            const auto stem = out.profiles_dir / fmt::format("agent_{}", a);
            csv::write_text(stem.string() + "_summary.csv", profile_summary_csv(p));
            csv::write_text(stem.string() + "_hours.csv", profile_hours_csv(p));
            csv::write_text(stem.string() + "_scatter.csv", profile_scatter_csv(p));
        }
    }
    if (!out.passive_ratio.empty() && !passive.empty()) {
        const auto fills = read_passive_csv(passive);
        std::string s = "agent,passive_aggressive_ratio\n";
        for (auto a : agents) s += fmt::format("{},{}\n", a, csv::format_real(passive_aggressive_ratio(corpus.orders, fills, a)));
        csv::write_text(out.passive_ratio, s);
    }
}

void report(const Config& c, const ReportInputs& in, const fs::path& out) {
    const auto corpus = load_corpus(in.orders, in.windows);
    const auto labels = read_labels(in.assignments, corpus.windows.size());
    const auto window_agents = agents_of(corpus.windows);
    const std::set<AgentId> distinct(window_agents.begin(), window_agents.end());
    std::string s;
    s += "# Run report\n\n";
    s += fmt::format("seed: {}\nwindows: {}\nagents: {}\n\n", c.seed, corpus.windows.size(), distinct.size());

    const auto ev = csv::Table::read(in.eval_report);
    s += "## Failure rate\n\n";
    for (std::size_t r = 0; r < ev.rows(); ++r) {
        if (ev.cell(r, ev.column("agent")) != "ALL") continue;
        s += fmt::format("{}: r = {} over {} test triplets ({} ties)\n", ev.cell(r, ev.column("feature_set")),
                         ev.cell(r, ev.column("failure_rate")), ev.cell(r, ev.column("n_anchors")),
                         ev.cell(r, ev.column("ties")));
    }
    s += "\nper agent:\n";
    for (std::size_t r = 0; r < ev.rows(); ++r) {
        if (ev.cell(r, ev.column("agent")) == "ALL") continue;
        s += fmt::format("  agent {}: r = {} ({} anchors)\n", ev.cell(r, ev.column("agent")),
                         ev.cell(r, ev.column("failure_rate")), ev.cell(r, ev.column("n_anchors")));
    }

    if (!in.ablation.empty() && fs::exists(in.ablation)) {
        const auto ab = csv::Table::read(in.ablation);
        s += "\n## Feature-set ablation\n\n";
        for (std::size_t r = 0; r < ab.rows(); ++r) {
            s += fmt::format("{}: r = {} +- {}\n", ab.cell(r, ab.column("feature_set")),
                             ab.cell(r, ab.column("failure_rate")), ab.cell(r, ab.column("ci95_half_width")));
        }
    }

    if (!in.elbow.empty() && fs::exists(in.elbow)) {
        const auto el = csv::Table::read(in.elbow);
        s += "\n## Elbow\n\n";
        for (std::size_t r = 0; r < el.rows(); ++r) {
            s += fmt::format("k = {}: wcss = {}\n", el.cell(r, el.column("k")), el.cell(r, el.column("wcss")));
        }
    }

    std::map<int, std::size_t> sizes;
    for (auto l : labels) ++sizes[l];
    s += "\n## Clusters\n\n";
    for (const auto& [l, n] : sizes) s += fmt::format("cluster {}: {} samples\n", l, n);

    std::map<AgentId, std::vector<int>> by_agent;
    for (std::size_t i = 0; i < labels.size(); ++i) by_agent[corpus.windows[i].agent].push_back(labels[i]);
    s += "\ndominant cluster per agent:\n";
    for (const auto& [a, ls] : by_agent) {
        const int d = dominant_label(ls);
        const auto share = static_cast<double>(std::count(ls.begin(), ls.end(), d)) / static_cast<double>(ls.size());
        s += fmt::format("  agent {}: cluster {} ({:.4f} of {} samples)\n", a, d, share, ls.size());
    }

    if (!in.agents.empty() && fs::exists(in.agents)) {
        const auto at = csv::Table::read(in.agents);
        std::map<AgentId, std::string> archetype;
        std::map<AgentId, std::int32_t> switch_day;
        for (std::size_t r = 0; r < at.rows(); ++r) {
            const auto a = static_cast<AgentId>(at.integer(r, at.column("agent")));
            archetype[a] = at.cell(r, at.column("archetype"));
            if (!at.cell(r, at.column("switch_day")).empty()) {
                switch_day[a] = static_cast<std::int32_t>(at.integer(r, at.column("switch_day")));
            }
        }
        std::map<std::string, int> codes;
        std::vector<int> truth;
        std::vector<int> fitted;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const auto a = corpus.windows[i].agent;
            if (switch_day.contains(a)) continue;
            const auto it = archetype.find(a);
            if (it == archetype.end()) continue;
            auto [code, added] = codes.emplace(it->second, static_cast<int>(codes.size()));
            truth.push_back(code->second);
            fitted.push_back(labels[i]);
        }
        if (!truth.empty()) {
            s += fmt::format("\nadjusted Rand index vs archetypes: {:.6f}\n", adjusted_rand_index(truth, fitted));
        }
        for (const auto& [a, day] : switch_day) {
            std::vector<int> before, after;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                if (corpus.windows[i].agent != a) continue;
                (corpus.windows[i].day < day ? before : after).push_back(labels[i]);
            }
            if (before.empty() || after.empty()) continue;
            s += fmt::format("regime agent {}: dominant cluster {} before day {}, {} from it on\n", a,
                             dominant_label(before), day, dominant_label(after));
        }
    }

    if (!in.ratings.empty() && fs::exists(in.ratings)) {
        s += "\n## Cluster ratings\n\n";
        s += csv::read_text(in.ratings);
    }
    csv::write_text(out, s);
}

void run_all(const Config& c, const fs::path& dir, bool with_ablation) {
    const GenerateOutputs gen{dir / "orders.csv", dir / "passive.csv", dir / "agents.csv"};
    generate(c, gen);
    windows(c, gen.orders, dir / "windows.csv", dir / "split.csv");
    triplets(c, gen.orders, dir / "windows.csv", dir / "split.csv", dir / "train_triplets.csv",
             dir / "test_triplets.csv");
    train(c, gen.orders, dir / "windows.csv", dir / "split.csv", dir / "train_triplets.csv",
          {dir / "model.json", dir / "loss.csv"});
    eval(c, gen.orders, dir / "windows.csv", dir / "model.json", dir / "test_triplets.csv", dir / "eval.csv");
    if (with_ablation) {
        ablate(c, gen.orders, dir / "windows.csv", dir / "split.csv", dir / "train_triplets.csv",
               dir / "test_triplets.csv", dir / "ablation.csv");
    }
    cluster(c, gen.orders, dir / "windows.csv", dir / "model.json",
            {dir / "cluster_model.json", dir / "assignments.csv", dir / "elbow.csv", dir / "pca.csv"});
    indicators(c, gen.orders, dir / "windows.csv", dir / "assignments.csv", gen.passive,
               {dir / "indicators.csv", dir / "cluster_summary.csv", dir / "ratings.csv",
                dir / "passive_ratio.csv", dir / "profiles"});
    report(c,
           {dir / "eval.csv", with_ablation ? dir / "ablation.csv" : fs::path{}, dir / "elbow.csv",
            dir / "assignments.csv", gen.agents, dir / "ratings.csv", dir / "windows.csv", gen.orders},
           dir / "report.md");
}

}  // namespace ofrep::pipeline
