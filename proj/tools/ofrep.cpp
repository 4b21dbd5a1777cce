// Command-line front end: one subcommand per pipeline stage.

#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ofrep/common.hpp"
#include "ofrep/nn.hpp"
#include "ofrep/pipeline.hpp"

namespace fs = std::filesystem;
namespace P = ofrep::pipeline;

namespace {

constexpr double kGradCheckTolerance = 1e-4;

/// A file option whose default lives in the run directory.
struct PathOpt {
    std::string value;
    std::string fallback;

    fs::path resolve(const fs::path& dir) const { return value.empty() ? dir / fallback : fs::path(value); }
};

CLI::Option* path_opt(CLI::App* app, const std::string& flags, PathOpt& p, const std::string& what) {
    return app->add_option(flags, p.value, fmt::format("{} (default: <dir>/{})", what, p.fallback));
}

int gradcheck(std::uint64_t seed, int seeds) {
    const ofrep::EncoderConfig tiny{2, 3, 2, 0.5};
    double worst = 0.0;
    for (int s = 0; s < seeds; ++s) {
        for (bool active : {true, false}) {
            const auto r = ofrep::grad_check(tiny, seed + static_cast<std::uint64_t>(s), active);
            fmt::print("seed {} hinge {}: max relative error {:.3e} over {} parameters\n",
                       seed + static_cast<std::uint64_t>(s), active ? "active" : "inactive", r.max_relative_error,
                       r.n_params);
            worst = std::max(worst, r.max_relative_error);
        }
    }
    const bool ok = worst < kGradCheckTolerance;
    fmt::print("gradcheck {}: worst {:.3e} (tolerance {:.0e})\n", ok ? "passed" : "FAILED", worst, kGradCheckTolerance);
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Order-flow representation learning: synthetic markets, triplet LSTM encoder, clustering"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Read options from a TOML/INI key = value file");

    P::Config c;
    std::string dir = ".";
    bool full_scale = false;
    app.add_option("--seed", c.seed, "Seed of all randomness")->capture_default_str();
    app.add_option("--threads", c.threads, "Worker threads; results do not depend on it")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--dir", dir, "Run directory holding the default file names")->capture_default_str();
    app.add_flag("--full-scale", full_scale, "500 epochs on 100,000 training triplets");

    PathOpt orders{"", "orders.csv"}, passive{"", "passive.csv"}, agents{"", "agents.csv"};
    PathOpt windows{"", "windows.csv"}, split{"", "split.csv"};
    PathOpt train_t{"", "train_triplets.csv"}, test_t{"", "test_triplets.csv"};
    PathOpt model{"", "model.json"}, loss{"", "loss.csv"}, eval_out{"", "eval.csv"}, ablation{"", "ablation.csv"};
    PathOpt cmodel{"", "cluster_model.json"}, assignments{"", "assignments.csv"}, elbow{"", "elbow.csv"},
        pca{"", "pca.csv"};
    PathOpt ind{"", "indicators.csv"}, summary{"", "cluster_summary.csv"}, ratings{"", "ratings.csv"},
        pratio{"", "passive_ratio.csv"}, profiles{"", "profiles"}, report_out{"", "report.md"};

    auto add_train_opts = [&](CLI::App* s) {
        s->add_option("--feature-set", c.feature_set, "Basic, Basic+M or Basic+M+QS")
            ->transform(CLI::CheckedTransformer(std::map<std::string, ofrep::FeatureSet>{
                {"Basic", ofrep::FeatureSet::Basic},
                {"Basic+M", ofrep::FeatureSet::BasicM},
                {"Basic+M+QS", ofrep::FeatureSet::BasicMQS}}));
        s->add_option("--epochs", c.train.epochs, "Training epochs")->capture_default_str();
        s->add_option("--batch-size", c.train.batch_size, "Triplets per Adam step")->capture_default_str();
        s->add_option("--lr", c.train.lr, "Adam learning rate")->capture_default_str();
        s->add_option("--margin", c.encoder.margin, "Triplet margin")->capture_default_str();
        s->add_option("--hidden1", c.encoder.hidden1, "First LSTM width")->capture_default_str();
        s->add_option("--hidden2", c.encoder.hidden2, "Embedding dimension")->capture_default_str();
    };

    auto* gen = app.add_subcommand("generate", "Simulate a labeled multi-agent order log");
    gen->add_option("--agents", c.n_agents, "Number of agents")->capture_default_str();
    gen->add_option("--days", c.n_days, "Trading days")->capture_default_str();
    gen->add_option("--archetype-set", c.archetype_set, "default or ablation")->capture_default_str();
    gen->add_option("--archetypes", c.archetypes_file, "Archetype CSV overriding --archetype-set");
    gen->add_option("--jitter", c.jitter, "Per-agent log-normal parameter jitter")->capture_default_str();
    gen->add_option("--switch-agent", c.switch_agent, "Agent that changes archetype mid-sample");
    gen->add_option("--switch-day", c.switch_day, "First day of the new regime")->capture_default_str();
    gen->add_option("--switch-to", c.switch_to, "Archetype name of the new regime");
    path_opt(gen, "-o,--orders", orders, "Order log to write");
    path_opt(gen, "--passive", passive, "Passive fills to write");
    path_opt(gen, "--agents-out", agents, "Ground-truth agent table to write");

    auto* win = app.add_subcommand("windows", "Cut 50-order windows and split days 4:1");
    path_opt(win, "--orders", orders, "Order log");
    win->add_option("--stride", c.stride, "Orders between window starts")->capture_default_str();
    win->add_option("--min-orders", c.min_orders_per_day, "Activity filter: orders per day")->capture_default_str();
    win->add_option("--min-days", c.min_days, "Activity filter: agents need more active days than this")
        ->capture_default_str();
    path_opt(win, "-o,--windows", windows, "Window manifest to write");
    path_opt(win, "--split", split, "Day split to write");

    auto* tri = app.add_subcommand("triplets", "Sample temporally local train and test triplets");
    path_opt(tri, "--orders", orders, "Order log");
    path_opt(tri, "--windows", windows, "Window manifest");
    path_opt(tri, "--split", split, "Day split");
    tri->add_option("--horizon", c.horizon_s, "Locality horizon in seconds")->capture_default_str();
    tri->add_option("--train-count", c.train_triplets, "Training triplets")->capture_default_str();
    tri->add_option("--test-count", c.test_triplets, "Test triplets")->capture_default_str();
    path_opt(tri, "--train-out", train_t, "Training triplets to write");
    path_opt(tri, "--test-out", test_t, "Test triplets to write");

    std::string resume;
    auto* trn = app.add_subcommand("train", "Train the encoder with Adam");
    path_opt(trn, "--orders", orders, "Order log");
    path_opt(trn, "--windows", windows, "Window manifest");
    path_opt(trn, "--split", split, "Day split");
    path_opt(trn, "--triplets", train_t, "Training triplets");
    add_train_opts(trn);
    trn->add_option("--checkpoint-every", c.train.checkpoint_every, "Epochs between checkpoints (0: end only)")
        ->capture_default_str();
    trn->add_option("--checkpoint-dir", c.train.checkpoint_dir, "Directory for periodic checkpoints");
    trn->add_option("--resume", resume, "Continue from this checkpoint");
    path_opt(trn, "-o,--model", model, "Final checkpoint to write");
    path_opt(trn, "--loss", loss, "Loss history CSV to write");

    auto* ev = app.add_subcommand("eval", "Failure rate of a model on test triplets");
    path_opt(ev, "--orders", orders, "Order log");
    path_opt(ev, "--windows", windows, "Window manifest");
    path_opt(ev, "--model", model, "Checkpoint");
    path_opt(ev, "--triplets", test_t, "Test triplets");
    path_opt(ev, "-o,--report", eval_out, "Report CSV to write");

    auto* abl = app.add_subcommand("ablate", "Train and evaluate one encoder per feature set");
    path_opt(abl, "--orders", orders, "Order log");
    path_opt(abl, "--windows", windows, "Window manifest");
    path_opt(abl, "--split", split, "Day split");
    path_opt(abl, "--train-triplets", train_t, "Training triplets");
    path_opt(abl, "--test-triplets", test_t, "Test triplets");
    add_train_opts(abl);
    path_opt(abl, "-o,--report", ablation, "Ablation CSV to write");

    std::size_t k = 0;
    auto* clu = app.add_subcommand("cluster", "K-means on the embeddings of every window");
    path_opt(clu, "--orders", orders, "Order log");
    path_opt(clu, "--windows", windows, "Window manifest");
    path_opt(clu, "--model", model, "Checkpoint");
    clu->add_option("--k", k, "Number of clusters (default: elbow over --k-min..--k-max)");
    clu->add_option("--k-min", c.k_min, "Smallest k of the elbow scan")->capture_default_str();
    clu->add_option("--k-max", c.k_max, "Largest k of the elbow scan")->capture_default_str();
    clu->add_option("--pca-dim", c.pca_dim, "PCA dimensions exported")->capture_default_str();
    path_opt(clu, "--cluster-model", cmodel, "Cluster model JSON to write");
    path_opt(clu, "--assignments", assignments, "Assignments CSV to write");
    path_opt(clu, "--elbow", elbow, "Elbow curve CSV to write");
    path_opt(clu, "--pca", pca, "PCA projection CSV to write");

    auto* indi = app.add_subcommand("indicators", "Behavioral indicators per window and per cluster");
    path_opt(indi, "--orders", orders, "Order log");
    path_opt(indi, "--windows", windows, "Window manifest");
    path_opt(indi, "--assignments", assignments, "Cluster assignments");
    path_opt(indi, "--passive", passive, "Passive fills");
    path_opt(indi, "-o,--indicators", ind, "Indicator CSV to write");
    path_opt(indi, "--summary", summary, "Per-cluster quartiles to write");
    path_opt(indi, "--ratings", ratings, "Per-cluster ratings to write");
    path_opt(indi, "--passive-ratio", pratio, "Passive/aggressive ratios to write");
    path_opt(indi, "--profiles", profiles, "Directory for per-agent profiles");

    auto* rep = app.add_subcommand("report", "Plain-text summary of a run directory");
    path_opt(rep, "--orders", orders, "Order log");
    path_opt(rep, "--windows", windows, "Window manifest");
    path_opt(rep, "--eval", eval_out, "Failure-rate report");
    path_opt(rep, "--ablation", ablation, "Ablation CSV (skipped when absent)");
    path_opt(rep, "--elbow", elbow, "Elbow curve (skipped when absent)");
    path_opt(rep, "--assignments", assignments, "Cluster assignments");
    path_opt(rep, "--agents", agents, "Ground-truth agent table (skipped when absent)");
    path_opt(rep, "--ratings", ratings, "Cluster ratings (skipped when absent)");
    path_opt(rep, "-o,--out", report_out, "Report to write");

    int gc_seeds = 10;
    auto* gc = app.add_subcommand("gradcheck", "Compare backpropagation with central differences");
    gc->add_option("--seeds", gc_seeds, "Consecutive seeds checked from --seed")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (full_scale) c.apply_full_scale();
        if (k > 0) c.k = k;
        const fs::path d = dir;
        if (*gen) {
            P::generate(c, {orders.resolve(d), passive.resolve(d), agents.resolve(d)});
        } else if (*win) {
            P::windows(c, orders.resolve(d), windows.resolve(d), split.resolve(d));
        } else if (*tri) {
            P::triplets(c, orders.resolve(d), windows.resolve(d), split.resolve(d), train_t.resolve(d),
                        test_t.resolve(d));
        } else if (*trn) {
            std::optional<fs::path> from;
            if (!resume.empty()) from = resume;
            P::train(c, orders.resolve(d), windows.resolve(d), split.resolve(d), train_t.resolve(d),
                     {model.resolve(d), loss.resolve(d)}, from);
        } else if (*ev) {
            P::eval(c, orders.resolve(d), windows.resolve(d), model.resolve(d), test_t.resolve(d),
                    eval_out.resolve(d));
        } else if (*abl) {
            P::ablate(c, orders.resolve(d), windows.resolve(d), split.resolve(d), train_t.resolve(d),
                      test_t.resolve(d), ablation.resolve(d));
        } else if (*clu) {
            P::cluster(c, orders.resolve(d), windows.resolve(d), model.resolve(d),
                       {cmodel.resolve(d), assignments.resolve(d), elbow.resolve(d), pca.resolve(d)});
        } else if (*indi) {
            P::indicators(c, orders.resolve(d), windows.resolve(d), assignments.resolve(d), passive.resolve(d),
                          {ind.resolve(d), summary.resolve(d), ratings.resolve(d), pratio.resolve(d),
                           profiles.resolve(d)});
        } else if (*rep) {
            auto optional = [](const fs::path& p) { return fs::exists(p) ? p : fs::path{}; };
            P::report(c,
                      {eval_out.resolve(d), optional(ablation.resolve(d)), optional(elbow.resolve(d)),
                       assignments.resolve(d), optional(agents.resolve(d)), optional(ratings.resolve(d)),
                       windows.resolve(d), orders.resolve(d)},
                      report_out.resolve(d));
        } else if (*gc) {
            return gradcheck(c.seed, gc_seeds);
        }
    } catch (const std::exception& ex) {
        fmt::print(stderr, "error: {}\n", ex.what());
        return 1;
    }
    return 0;
}
