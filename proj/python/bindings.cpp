#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ofrep/cluster.hpp"
#include "ofrep/common.hpp"
#include "ofrep/eval.hpp"
#include "ofrep/indicators.hpp"
#include "ofrep/nn.hpp"
#include "ofrep/pipeline.hpp"

namespace py = pybind11;
using namespace ofrep;
namespace fs = std::filesystem;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexRows = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 3, Eigen::RowMajor>;

std::vector<Triplet> to_triplets(const IndexRows& rows) {
    std::vector<Triplet> out;
    out.reserve(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        if ((rows.row(i).array() < 0).any()) throw ofrep::Error("triplet indices must be non-negative");
        out.push_back({static_cast<std::size_t>(rows(i, 0)), static_cast<std::size_t>(rows(i, 1)),
                       static_cast<std::size_t>(rows(i, 2))});
    }
    return out;
}

py::dict model_dict(const ClusterModel& m) {
    py::dict d;
    d["k"] = m.k;
    d["labels"] = m.labels;
    d["centroids"] = RowMatrix(m.centroids.transpose());
    d["wcss"] = m.wcss;
    d["iterations"] = m.iterations;
    return d;
}

void run_stage(const std::string& name, const pipeline::Config& c, const fs::path& dir) {
    const auto orders = dir / "orders.csv", windows = dir / "windows.csv", split = dir / "split.csv";
    const auto train_t = dir / "train_triplets.csv", test_t = dir / "test_triplets.csv";
    if (name == "generate") {
        pipeline::generate(c, {orders, dir / "passive.csv", dir / "agents.csv"});
    } else if (name == "windows") {
        pipeline::windows(c, orders, windows, split);
    } else if (name == "triplets") {
        pipeline::triplets(c, orders, windows, split, train_t, test_t);
    } else if (name == "train") {
        pipeline::train(c, orders, windows, split, train_t, {dir / "model.json", dir / "loss.csv"});
    } else if (name == "eval") {
        pipeline::eval(c, orders, windows, dir / "model.json", test_t, dir / "eval.csv");
    } else if (name == "ablate") {
        pipeline::ablate(c, orders, windows, split, train_t, test_t, dir / "ablation.csv");
    } else if (name == "cluster") {
        pipeline::cluster(c, orders, windows, dir / "model.json",
                          {dir / "cluster_model.json", dir / "assignments.csv", dir / "elbow.csv", dir / "pca.csv"});
    } else if (name == "indicators") {
        pipeline::indicators(c, orders, windows, dir / "assignments.csv", dir / "passive.csv",
                             {dir / "indicators.csv", dir / "cluster_summary.csv", dir / "ratings.csv",
                              dir / "passive_ratio.csv", dir / "profiles"});
    } else {
        throw ofrep::Error("unknown stage '" + name + "'");
    }
}

}  // namespace

PYBIND11_MODULE(_ofrep, m) {
    m.doc() = "Triplet-loss order-flow encoder, failure rates, clustering and indicators";
    py::register_exception<ofrep::Error>(m, "Error", PyExc_ValueError);

    py::class_<pipeline::Config>(m, "Config")
        .def(py::init<>())
        .def_readwrite("seed", &pipeline::Config::seed)
        .def_readwrite("threads", &pipeline::Config::threads)
        .def_readwrite("n_agents", &pipeline::Config::n_agents)
        .def_readwrite("n_days", &pipeline::Config::n_days)
        .def_readwrite("archetype_set", &pipeline::Config::archetype_set)
        .def_readwrite("jitter", &pipeline::Config::jitter)
        .def_readwrite("switch_agent", &pipeline::Config::switch_agent)
        .def_readwrite("switch_day", &pipeline::Config::switch_day)
        .def_readwrite("switch_to", &pipeline::Config::switch_to)
        .def_readwrite("train_triplets", &pipeline::Config::train_triplets)
        .def_readwrite("test_triplets", &pipeline::Config::test_triplets)
        .def_readwrite("horizon_s", &pipeline::Config::horizon_s)
        .def_readwrite("k", &pipeline::Config::k)
        .def_readwrite("k_min", &pipeline::Config::k_min)
        .def_readwrite("k_max", &pipeline::Config::k_max)
        .def_property(
            "feature_set", [](const pipeline::Config& c) { return std::string(name(c.feature_set)); },
            [](pipeline::Config& c, const std::string& s) { c.feature_set = parse_feature_set(s); })
        .def_property(
            "hidden", [](const pipeline::Config& c) { return py::make_tuple(c.encoder.hidden1, c.encoder.hidden2); },
            [](pipeline::Config& c, std::pair<std::size_t, std::size_t> h) {
                c.encoder.hidden1 = h.first;
                c.encoder.hidden2 = h.second;
            })
        .def_property(
            "margin", [](const pipeline::Config& c) { return c.encoder.margin; },
            [](pipeline::Config& c, double v) { c.encoder.margin = v; })
        .def_property(
            "epochs", [](const pipeline::Config& c) { return c.train.epochs; },
            [](pipeline::Config& c, std::size_t v) { c.train.epochs = v; })
        .def_property(
            "batch_size", [](const pipeline::Config& c) { return c.train.batch_size; },
            [](pipeline::Config& c, std::size_t v) { c.train.batch_size = v; })
        .def_property(
            "lr", [](const pipeline::Config& c) { return c.train.lr; },
            [](pipeline::Config& c, double v) { c.train.lr = v; })
        .def("apply_full_scale", &pipeline::Config::apply_full_scale);

    m.def("run_all", &pipeline::run_all, py::arg("config"), py::arg("dir"), py::arg("with_ablation") = false,
          py::call_guard<py::gil_scoped_release>(), "Run every stage into `dir` with the standard file names.");
    m.def("stage", &run_stage, py::arg("name"), py::arg("config"), py::arg("dir"),
          py::call_guard<py::gil_scoped_release>(),
          "Run one stage (generate, windows, triplets, train, eval, ablate, cluster, indicators) in `dir`.");

    m.def(
        "embed",
        [](const fs::path& checkpoint, const fs::path& orders, const fs::path& windows, int threads) {
            const auto ckpt = load_checkpoint(checkpoint);
            const auto log = pipeline::load_sorted_orders(orders);
            const auto samples = read_windows_csv(windows, log);
            std::vector<FeatureMatrix> xs;
            xs.reserve(samples.size());
            for (const auto& s : samples) xs.push_back(featurize(s, ckpt.norm.feature_set, ckpt.norm));
            return RowMatrix(encode_all(ckpt.params, xs, threads).transpose());
        },
        py::arg("checkpoint"), py::arg("orders"), py::arg("windows"), py::arg("threads") = 1,
        "Embeddings of every manifest window, one row per window.");

    m.def(
        "grad_check",
        [](std::uint64_t seed, std::size_t input_width, std::size_t hidden1, std::size_t hidden2, double margin,
           bool hinge_active) {
            return grad_check({input_width, hidden1, hidden2, margin}, seed, hinge_active).max_relative_error;
        },
        py::arg("seed"), py::arg("input_width") = 2, py::arg("hidden1") = 3, py::arg("hidden2") = 2,
        py::arg("margin") = 0.5, py::arg("hinge_active") = true);

    m.def(
        "triplet_loss",
        [](const Vector& a, const Vector& p, const Vector& n, double margin) { return triplet_loss(a, p, n, margin); },
        py::arg("anchor"), py::arg("positive"), py::arg("negative"), py::arg("margin") = 0.5);

    py::class_<FailureRate>(m, "FailureRate")
        .def_readonly("n", &FailureRate::n)
        .def_readonly("failures", &FailureRate::failures)
        .def_readonly("ties", &FailureRate::ties)
        .def_property_readonly("rate", &FailureRate::rate)
        .def_property_readonly("ci_half_width", &FailureRate::ci_half_width)
        .def("__repr__", [](const FailureRate& r) {
            return "FailureRate(n=" + std::to_string(r.n) + ", rate=" + std::to_string(r.rate()) + ")";
        });

    m.def(
        "failure_rate",
        [](const RowMatrix& embeddings, const IndexRows& triplets) {
            return failure_rate(embeddings.transpose(), to_triplets(triplets));
        },
        py::arg("embeddings"), py::arg("triplets"), "Embeddings are rows; triplets are (anchor, positive, negative) rows.");

    m.def(
        "kmeans",
        [](const RowMatrix& points, std::size_t k, std::uint64_t seed, std::size_t n_init) {
            KMeansConfig cfg;
            cfg.n_init = n_init;
            return model_dict(kmeans(points.transpose(), k, seed, cfg));
        },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0, py::arg("n_init") = 10);

    m.def(
        "elbow",
        [](const RowMatrix& points, std::size_t k_min, std::size_t k_max, std::uint64_t seed) {
            const auto e = elbow_select(points.transpose(), k_min, k_max, seed);
            py::dict d;
            d["ks"] = e.ks;
            d["wcss"] = e.wcss;
            d["k_star"] = e.k_star;
            d["confidence"] = e.confidence;
            d["low_confidence"] = e.low_confidence;
            return d;
        },
        py::arg("points"), py::arg("k_min") = 2, py::arg("k_max") = 12, py::arg("seed") = 0);

    m.def(
        "pca",
        [](const RowMatrix& points, std::size_t out_dim) {
            const auto p = pca(points.transpose(), out_dim);
            return py::make_tuple(RowMatrix(p.projected.transpose()), Vector(p.explained_ratio));
        },
        py::arg("points"), py::arg("out_dim") = 2);

    m.def("adjusted_rand_index", [](const std::vector<int>& a, const std::vector<int>& b) {
        return adjusted_rand_index(a, b);
    });

    m.def("indicator_names", [] {
        std::vector<std::string> out(kIndicatorNames.begin(), kIndicatorNames.end());
        return out;
    });

    m.def(
        "indicators",
        [](const std::vector<double>& t, const std::vector<int>& side, const std::vector<std::int64_t>& q_filled,
           const std::vector<std::int64_t>& q_intended, const std::vector<int>& modif,
           const std::vector<std::int64_t>& best_bid, const std::vector<std::int64_t>& best_ask,
           const std::vector<std::int64_t>& bid_qty, const std::vector<std::int64_t>& ask_qty) {
            const auto n = t.size();
            for (auto size : {side.size(), q_filled.size(), q_intended.size(), modif.size(), best_bid.size(),
                              best_ask.size(), bid_qty.size(), ask_qty.size()}) {
                if (size != n) throw ofrep::Error("indicator columns differ in length");
            }
            Sample s;
            for (std::size_t i = 0; i < n; ++i) {
                MarketOrder o;
                o.t = t[i];
                o.side = static_cast<std::int8_t>(side[i]);
                o.q_filled = q_filled[i];
                o.q_intended = q_intended[i];
                o.modif = static_cast<std::int8_t>(modif[i]);
                o.best_bid = best_bid[i];
                o.best_ask = best_ask[i];
                o.bid_qty = bid_qty[i];
                o.ask_qty = ask_qty[i];
                s.orders.push_back(o);
            }
            if (!s.orders.empty()) s.start_time = s.orders.front().t;
            const auto x = indicators(s);
            py::dict d;
            for (std::size_t f = 0; f < kIndicatorCount; ++f) d[py::str(std::string(kIndicatorNames[f]))] = field(x, f);
            return d;
        },
        py::arg("t"), py::arg("side"), py::arg("q_filled"), py::arg("q_intended"), py::arg("modif"),
        py::arg("best_bid"), py::arg("best_ask"), py::arg("bid_qty"), py::arg("ask_qty"),
        "Indicators of one 50-order window given column arrays.");
}
