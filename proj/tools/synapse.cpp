// synapse: simulate, train and serve networks of magnetic domain-wall
// binary stochastic synapses.

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "synapse/checkpoint.hpp"
#include "synapse/data.hpp"
#include "synapse/learning.hpp"
#include "synapse/remote_backend.hpp"
#include "synapse/server.hpp"

using nlohmann::json;
using namespace synapse;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTransport = 3;

std::filesystem::path default_data_dir() {
    if (const char* env = std::getenv("SYNAPSE_DATA_DIR")) return env;
    return "data";
}

// ---------------------------------------------------------------- manifests

class Manifest {
  public:
    Manifest(std::string command, std::vector<std::string> argv)
        : start_(std::chrono::steady_clock::now()) {
        doc_["command"] = std::move(command);
        doc_["argv"] = std::move(argv);
        doc_["code_version"] = kVersion;
        doc_["inputs"] = json::object();
        doc_["outputs"] = json::array();
    }

    void config(json cfg) { doc_["config"] = std::move(cfg); }
    void seed(std::uint64_t s) { doc_["seeds"]["master"] = s; }
    void input(const std::filesystem::path& path) {
        doc_["inputs"][path.string()] = md5_file(path);
    }
    void output(const std::filesystem::path& path) {
        doc_["outputs"].push_back(path.string());
    }

    void write(const std::filesystem::path& path) {
        doc_["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start_)
                .count();
        std::ofstream out(path);
        if (!out) throw DataError("cannot write manifest " + path.string());
        out << doc_.dump(2) << '\n';
    }

  private:
    json doc_;
    std::chrono::steady_clock::time_point start_;
};

std::filesystem::path manifest_path_for(const std::string& explicit_path,
                                        const std::filesystem::path& anchor) {
    if (!explicit_path.empty()) return explicit_path;
    auto p = anchor;
    p += ".manifest.json";
    return p;
}

// ----------------------------------------------------------------- dataset

BinarizedDataset open_dataset(const std::filesystem::path& data_dir,
                              const std::filesystem::path& cache,
                              std::uint64_t split_seed) {
    return load_or_build(data_dir, cache, split_seed);
}

SynapseBackend* make_backend(const std::string& spec,
                             const PassingProbabilityModel& model,
                             std::optional<std::uint64_t> plumb_seed,
                             std::unique_ptr<SynapseBackend>& holder) {
    if (spec == "in-process") {
        if (plumb_seed)
            holder = std::make_unique<InProcessBackend>(
                InProcessBackend::seed_plumbed(model, *plumb_seed));
        else
            holder = std::make_unique<InProcessBackend>(model);
        return holder.get();
    }
    const auto colon = spec.rfind(':');
    if (colon == std::string::npos)
        throw CLI::ValidationError(
            "--backend must be 'in-process' or 'host:port'");
    const std::string host = spec.substr(0, colon);
    const int port = std::stoi(spec.substr(colon + 1));
    auto remote = std::make_unique<RemoteBackend>(
        host, static_cast<std::uint16_t>(port));
    if (plumb_seed) remote->enable_seed_plumbing(*plumb_seed);
    holder = std::move(remote);
    return holder.get();
}

// ---------------------------------------------------------------- commands

struct DataArgs {
    std::string data_dir = default_data_dir().string();
    std::string cache;
    std::string manifest;
    std::uint64_t split_seed = 0;
    bool fetch = false;
};

int cmd_data(const DataArgs& a, const std::vector<std::string>& argv) {
    const std::filesystem::path dir = a.data_dir;
    const std::filesystem::path cache =
        a.cache.empty() ? dir / "dataset.cache" : std::filesystem::path(a.cache);
    Manifest manifest("data", argv);
    manifest.seed(a.split_seed);
    manifest.config({{"data_dir", dir.string()},
                     {"cache", cache.string()},
                     {"split_seed", a.split_seed},
                     {"fetch", a.fetch}});

    if (a.fetch) fetch_mnist(dir);
    const BinarizedDataset ds = open_dataset(dir, cache, a.split_seed);
    for (const char* const name : kMnistFiles) {
        for (const auto& candidate :
             {dir / name, dir / (std::string(name) + ".gz")})
            if (std::filesystem::exists(candidate)) {
                manifest.input(candidate);
                break;
            }
    }
    manifest.output(cache);
    manifest.write(manifest_path_for(a.manifest, cache));
    std::cout << "dataset ready: " << ds.image_count() << " images, "
              << ds.train_indices.size() << " train / "
              << ds.validation_indices.size() << " validation / "
              << ds.test_indices.size() << " test\n";
    return kExitOk;
}

struct TrainArgs {
    std::string data_dir = default_data_dir().string();
    std::string cache;
    std::string out = "checkpoint.json";
    std::string history;
    std::string manifest;
    std::string rule = "stochastic";
    std::uint32_t k_train = 1;
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 0;
    double learning_rate = 0.0;
    std::size_t batch_size = 50;
    std::size_t patience = 20;
    std::size_t max_epochs = 200;
    bool quiet = false;
};

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv) {
    const std::filesystem::path dir = a.data_dir;
    const std::filesystem::path cache =
        a.cache.empty() ? dir / "dataset.cache" : std::filesystem::path(a.cache);
    const std::filesystem::path history =
        a.history.empty() ? std::filesystem::path(a.out).replace_extension(
                                ".history.csv")
                          : std::filesystem::path(a.history);

    Manifest manifest("train", argv);
    manifest.seed(a.seed);
    TrainConfig cfg;
    cfg.k_train = a.k_train;
    cfg.learning_rate = a.learning_rate;
    cfg.batch_size = a.batch_size;
    cfg.patience = a.patience;
    cfg.max_epochs = a.max_epochs;
    cfg.seed = a.seed;
    cfg.rule = rule_from_name(a.rule);
    manifest.config({{"k_train", cfg.k_train},
                     {"learning_rate", cfg.effective_learning_rate()},
                     {"batch_size", cfg.batch_size},
                     {"patience", cfg.patience},
                     {"max_epochs", cfg.max_epochs},
                     {"seed", cfg.seed},
                     {"rule", a.rule},
                     {"split_seed", a.split_seed},
                     {"cache", cache.string()}});

    const BinarizedDataset ds = open_dataset(dir, cache, a.split_seed);
    if (std::filesystem::exists(cache)) manifest.input(cache);

    PassingProbabilityModel model;
    const TrainResult result =
        train(cfg, ds, model, a.quiet ? nullptr : &std::cerr);

    Checkpoint cp;
    cp.calibration = model;
    cp.net = result.net;
    cp.meta.k_train = cfg.k_train;
    cp.meta.seed = cfg.seed;
    cp.meta.epoch = result.history.best_epoch;
    cp.meta.rule = a.rule;
    cp.meta.learning_rate = cfg.effective_learning_rate();
    cp.meta.adam = cfg.adam;
    save_checkpoint(a.out, cp);
    save_history_csv(history, result.history);

    manifest.output(a.out);
    manifest.output(history);
    manifest.write(manifest_path_for(a.manifest, a.out));
    std::cout << "best epoch " << result.history.best_epoch << " val_loss "
              << result.history.best_val_loss << " -> " << a.out << '\n';
    return kExitOk;
}

struct EvalArgs {
    std::string checkpoint = "checkpoint.json";
    std::string data_dir = default_data_dir().string();
    std::string cache;
    std::string out;
    std::string manifest;
    std::string backend = "in-process";
    std::uint32_t k_test = 1;
    std::size_t repeats = 5;
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 0;
    std::size_t subset = 0;  ///< 0 = full test set
    std::int64_t plumb_seed = -1;
    bool mean_field = false;
};

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& argv) {
    const std::filesystem::path dir = a.data_dir;
    const std::filesystem::path cache =
        a.cache.empty() ? dir / "dataset.cache" : std::filesystem::path(a.cache);
    Manifest manifest("eval", argv);
    manifest.seed(a.seed);
    manifest.config({{"checkpoint", a.checkpoint},
                     {"k_test", a.k_test},
                     {"repeats", a.repeats},
                     {"seed", a.seed},
                     {"backend", a.backend},
                     {"subset", a.subset},
                     {"mean_field", a.mean_field},
                     {"plumb_seed", a.plumb_seed},
                     {"split_seed", a.split_seed}});

    const Checkpoint cp = load_checkpoint(a.checkpoint);
    manifest.input(a.checkpoint);
    const BinarizedDataset ds = open_dataset(dir, cache, a.split_seed);

    const std::vector<std::uint32_t> indices =
        a.subset > 0 ? test_subset_first(ds, a.subset) : ds.test_indices;

    json report{{"checkpoint", a.checkpoint},
                {"k_train", cp.meta.k_train},
                {"k_test", a.k_test},
                {"repeats", a.repeats},
                {"images", indices.size()},
                {"backend", a.backend}};
    if (a.mean_field) {
        report["mean_field_accuracy"] =
            mean_field_accuracy(cp.net, cp.calibration, ds, indices);
    } else {
        std::unique_ptr<SynapseBackend> holder;
        std::optional<std::uint64_t> plumb;
        if (a.plumb_seed >= 0)
            plumb = static_cast<std::uint64_t>(a.plumb_seed);
        SynapseBackend* backend =
            make_backend(a.backend, cp.calibration, plumb, holder);
        const EvalReport r = evaluate(cp.net, cp.calibration, ds, indices,
                                      a.k_test, a.repeats, a.seed, backend);
        report["mean_accuracy"] = r.mean_accuracy;
        report["std_accuracy"] = r.std_accuracy;
        report["batch_stderr"] = r.batch_stderr;
        report["per_repeat_accuracy"] = r.per_repeat_accuracy;
    }

    const std::string text = report.dump(2);
    if (!a.out.empty()) {
        std::ofstream out(a.out);
        if (!out) throw DataError("cannot write report " + a.out);
        out << text << '\n';
        manifest.output(a.out);
        manifest.write(manifest_path_for(a.manifest, a.out));
    } else if (!a.manifest.empty()) {
        manifest.write(a.manifest);
    }
    std::cout << text << '\n';
    return kExitOk;
}

struct SweepArgs {
    std::string data_dir = default_data_dir().string();
    std::string cache;
    std::string out = "sweep.csv";
    std::string manifest;
    std::string rule = "stochastic";
    std::vector<std::uint32_t> k_train{1, 2, 4, 8, 16, 32, 64, 128};
    std::vector<std::uint32_t> k_test{1, 2, 4, 8, 16, 32, 64, 128};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::size_t repeats = 5;
    std::size_t jobs = 1;
    std::size_t max_epochs = 200;
    std::size_t patience = 20;
    std::uint64_t split_seed = 0;
};

int cmd_sweep(const SweepArgs& a, const std::vector<std::string>& argv) {
    const std::filesystem::path dir = a.data_dir;
    const std::filesystem::path cache =
        a.cache.empty() ? dir / "dataset.cache" : std::filesystem::path(a.cache);
    Manifest manifest("sweep", argv);
    manifest.config({{"k_train", a.k_train},
                     {"k_test", a.k_test},
                     {"seeds", a.seeds},
                     {"repeats", a.repeats},
                     {"rule", a.rule},
                     {"jobs", a.jobs},
                     {"max_epochs", a.max_epochs},
                     {"patience", a.patience},
                     {"split_seed", a.split_seed}});

    const BinarizedDataset ds = open_dataset(dir, cache, a.split_seed);
    if (std::filesystem::exists(cache)) manifest.input(cache);
    PassingProbabilityModel model;

    TrainConfig base;
    base.rule = rule_from_name(a.rule);
    base.max_epochs = a.max_epochs;
    base.patience = a.patience;

    // one task per (seed, k_train); each task is self-seeded, so any
    // schedule yields the same cells — merged in grid order below
    struct Task {
        std::uint64_t seed;
        std::uint32_t kt;
    };
    std::vector<Task> tasks;
    for (std::uint64_t seed : a.seeds)
        for (std::uint32_t kt : a.k_train) tasks.push_back({seed, kt});

    std::vector<std::vector<SweepCell>> results(tasks.size());
    auto run_task = [&](std::size_t t) {
        TrainConfig cfg = base;
        cfg.k_train = tasks[t].kt;
        cfg.seed = tasks[t].seed;
        const TrainResult tr = train(cfg, ds, model);
        std::vector<SweepCell> cells;
        for (std::uint32_t ke : a.k_test) {
            const EvalReport rep =
                evaluate(tr.net, model, ds, ds.test_indices, ke, a.repeats,
                         derive_seed(tasks[t].seed, "sweep-eval", ke));
            cells.push_back({tasks[t].kt, ke, tasks[t].seed,
                             rep.mean_accuracy, rep.std_accuracy,
                             rep.batch_stderr});
        }
        return cells;
    };

    const std::size_t jobs = std::max<std::size_t>(1, a.jobs);
    for (std::size_t t = 0; t < tasks.size(); t += jobs) {
        const std::size_t end = std::min(t + jobs, tasks.size());
        std::vector<std::future<std::vector<SweepCell>>> futures;
        for (std::size_t u = t; u < end; ++u)
            futures.push_back(
                std::async(std::launch::async, run_task, u));
        for (std::size_t u = t; u < end; ++u) {
            results[u] = futures[u - t].get();
            std::cerr << "sweep: seed=" << tasks[u].seed
                      << " k_train=" << tasks[u].kt << " done\n";
        }
    }

    std::vector<SweepCell> cells;
    for (auto& r : results)
        cells.insert(cells.end(), r.begin(), r.end());
    save_sweep_csv(a.out, cells);
    manifest.output(a.out);
    manifest.write(manifest_path_for(a.manifest, a.out));
    std::cout << "sweep grid (" << cells.size() << " cells) -> " << a.out
              << '\n';
    return kExitOk;
}

struct AnalyzeArgs {
    std::string checkpoint = "checkpoint.json";
    std::string data_dir = default_data_dir().string();
    std::string cache;
    std::string manifest;
    std::string field_histogram;
    std::string neuron_distribution;
    std::string std_vs_k;
    std::size_t bins = 50;
    std::size_t image_index = 0;  ///< position within the test set
    std::size_t draws = 10000;
    std::uint32_t k_test = 1;
    std::size_t images = 100;
    std::size_t std_draws = 100;
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 0;
    std::vector<std::uint32_t> k_list{1, 2, 4, 8, 16, 32, 64, 128};
};

int cmd_analyze(const AnalyzeArgs& a, const std::vector<std::string>& argv) {
    if (a.field_histogram.empty() && a.neuron_distribution.empty() &&
        a.std_vs_k.empty())
        throw CLI::ValidationError(
            "analyze: pick at least one of --field-histogram, "
            "--neuron-distribution, --std-vs-k");

    Manifest manifest("analyze", argv);
    manifest.seed(a.seed);
    manifest.config({{"checkpoint", a.checkpoint},
                     {"bins", a.bins},
                     {"image_index", a.image_index},
                     {"draws", a.draws},
                     {"k_test", a.k_test},
                     {"k_list", a.k_list},
                     {"images", a.images},
                     {"std_draws", a.std_draws},
                     {"seed", a.seed},
                     {"split_seed", a.split_seed}});
    const Checkpoint cp = load_checkpoint(a.checkpoint);
    manifest.input(a.checkpoint);

    std::filesystem::path anchor = a.checkpoint;

    if (!a.field_histogram.empty()) {
        // density histogram of per-synapse passing probabilities
        std::vector<std::size_t> counts(a.bins, 0);
        for (double h : cp.net.fields_mT) {
            const double f = passing_probability(cp.calibration, h);
            auto bin = static_cast<std::size_t>(f * static_cast<double>(a.bins));
            if (bin >= a.bins) bin = a.bins - 1;
            ++counts[bin];
        }
        std::ofstream out(a.field_histogram);
        if (!out)
            throw DataError("cannot write " + a.field_histogram);
        out << "f_lo,f_hi,count,density\n";
        const double total = static_cast<double>(cp.net.fields_mT.size());
        const double width = 1.0 / static_cast<double>(a.bins);
        for (std::size_t b = 0; b < a.bins; ++b)
            out << b * width << ',' << (b + 1) * width << ',' << counts[b]
                << ',' << static_cast<double>(counts[b]) / (total * width)
                << '\n';
        manifest.output(a.field_histogram);
        anchor = a.field_histogram;
    }

    if (!a.neuron_distribution.empty() || !a.std_vs_k.empty()) {
        const std::filesystem::path dir = a.data_dir;
        const std::filesystem::path cache =
            a.cache.empty() ? dir / "dataset.cache" : std::filesystem::path(a.cache);
        const BinarizedDataset ds = open_dataset(dir, cache, a.split_seed);

        if (!a.neuron_distribution.empty()) {
            // one image presented `draws` times independently
            if (a.image_index >= ds.test_indices.size())
                throw CLI::ValidationError("--image-index out of range");
            const std::uint32_t idx = ds.test_indices[a.image_index];
            InProcessBackend backend(cp.calibration);
            Rng rng = make_stream(a.seed, "neuron-distribution");
            std::ofstream out(a.neuron_distribution);
            if (!out)
                throw DataError("cannot write " + a.neuron_distribution);
            out << "draw";
            for (std::size_t c = 0; c < cp.net.classes; ++c)
                out << ",y_" << c;
            out << "\n";
            out.precision(17);
            for (std::size_t d = 0; d < a.draws; ++d) {
                const ForwardResult fwd =
                    forward_sampled(cp.net, cp.calibration, ds.image(idx),
                                    a.k_test, backend, rng);
                out << d;
                for (double y : fwd.y) out << ',' << y;
                out << '\n';
            }
            manifest.output(a.neuron_distribution);
            anchor = a.neuron_distribution;
        }

        if (!a.std_vs_k.empty()) {
            const std::size_t n =
                std::min(a.images, ds.test_indices.size());
            const std::vector<std::uint32_t> subset(
                ds.test_indices.begin(),
                ds.test_indices.begin() + static_cast<std::ptrdiff_t>(n));
            std::ofstream out(a.std_vs_k);
            if (!out) throw DataError("cannot write " + a.std_vs_k);
            out << "K,mean_output_std\n";
            out.precision(17);
            for (std::uint32_t k : a.k_list)
                out << k << ','
                    << mean_output_std(cp.net, cp.calibration, ds, subset, k,
                                       a.std_draws,
                                       derive_seed(a.seed, "std-vs-k", k))
                    << '\n';
            manifest.output(a.std_vs_k);
            anchor = a.std_vs_k;
        }
    }

    manifest.write(manifest_path_for(a.manifest, anchor));
    return kExitOk;
}

struct ServeArgs {
    std::string bind = "127.0.0.1";
    std::uint16_t port = 0;
    std::uint64_t seed = 0;
    std::string calibration;
    bool trace_mode = false;
    double latency_ms = 0.0;
    double jitter_ms = 0.0;
    double field_jitter = 0.0;
};

std::atomic<bool> g_stop{false};
void handle_signal(int) { g_stop = true; }

int cmd_serve(const ServeArgs& a) {
    ServerConfig cfg;
    cfg.bind_address = a.bind;
    cfg.port = a.port;
    cfg.seed = a.seed;
    cfg.trace_mode = a.trace_mode;
    cfg.latency = {a.latency_ms, a.jitter_ms};
    cfg.field_jitter_mT = a.field_jitter;
    if (!a.calibration.empty())
        cfg.calibration = load_calibration(a.calibration);
    DeviceServer server(cfg);
    server.start();
    std::cout << "listening on " << a.bind << ":" << server.port()
              << std::endl;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop)
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    return kExitOk;
}

// --------------------------------------------------------------- dispatch

int dispatch(const std::vector<std::string>& args);

int cmd_replay(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest " + manifest_path);
    json doc = json::parse(in);
    if (!doc.contains("argv") || !doc["argv"].is_array())
        throw DataError("manifest has no argv record");
    std::vector<std::string> argv =
        doc["argv"].get<std::vector<std::string>>();
    std::cerr << "replaying:";
    for (const auto& a : argv) std::cerr << ' ' << a;
    std::cerr << '\n';
    return dispatch(argv);
}

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{
        "Simulator and training toolkit for networks of domain-wall "
        "binary stochastic synapses"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    DataArgs da;
    auto* data = app.add_subcommand(
        "data", "Prepare the binarized image dataset cache");
    data->add_option("--data-dir", da.data_dir,
                     "Directory with the IDX files (env SYNAPSE_DATA_DIR)");
    data->add_option("--cache", da.cache, "Cache path (default <dir>/dataset.cache)");
    data->add_option("--split-seed", da.split_seed, "Train/validation split seed");
    data->add_flag("--fetch", da.fetch, "Download the canonical archives first");
    data->add_option("--manifest", da.manifest, "Run-manifest path");

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "Train a synapse-field network");
    tr->add_option("--data-dir", ta.data_dir, "Dataset directory");
    tr->add_option("--cache", ta.cache, "Dataset cache path");
    tr->add_option("-o,--out", ta.out, "Checkpoint output path");
    tr->add_option("--history", ta.history, "History CSV path");
    tr->add_option("--rule", ta.rule, "Learning rule: stochastic | mean_field")
        ->check(CLI::IsMember({"stochastic", "mean_field"}));
    tr->add_option("-k,--k-train", ta.k_train, "Samples per synapse during training")
        ->check(CLI::PositiveNumber);
    tr->add_option("--seed", ta.seed, "Master seed");
    tr->add_option("--split-seed", ta.split_seed, "Dataset split seed");
    tr->add_option("--lr", ta.learning_rate,
                   "Learning rate (0 = protocol default for K)");
    tr->add_option("--batch-size", ta.batch_size, "Mini-batch size")
        ->check(CLI::PositiveNumber);
    tr->add_option("--patience", ta.patience, "Early-stop patience (epochs)");
    tr->add_option("--max-epochs", ta.max_epochs, "Epoch cap")
        ->check(CLI::PositiveNumber);
    tr->add_flag("--quiet", ta.quiet, "Suppress per-epoch logging");
    tr->add_option("--manifest", ta.manifest, "Run-manifest path");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
    ev->add_option("-c,--checkpoint", ea.checkpoint, "Checkpoint path");
    ev->add_option("--data-dir", ea.data_dir, "Dataset directory");
    ev->add_option("--cache", ea.cache, "Dataset cache path");
    ev->add_option("-o,--out", ea.out, "Report JSON path (default stdout only)");
    ev->add_option("-k,--k-test", ea.k_test, "Samples per synapse at inference")
        ->check(CLI::PositiveNumber);
    ev->add_option("--repeats", ea.repeats, "Independent test repetitions")
        ->check(CLI::PositiveNumber);
    ev->add_option("--seed", ea.seed, "Master seed");
    ev->add_option("--split-seed", ea.split_seed, "Dataset split seed");
    ev->add_option("--subset", ea.subset,
                   "Evaluate only the first N test images (0 = all)");
    ev->add_option("--backend", ea.backend,
                   "'in-process' or a device service 'host:port'");
    ev->add_option("--plumb-seed", ea.plumb_seed,
                   "Seed-plumbed deterministic sampling (-1 = off)");
    ev->add_flag("--mean-field", ea.mean_field,
                 "Deterministic continuous-weight forward instead of sampling");
    ev->add_option("--manifest", ea.manifest, "Run-manifest path");

    SweepArgs sa;
    auto* sw = app.add_subcommand("sweep", "K_train x K_test x seed grid");
    sw->add_option("--data-dir", sa.data_dir, "Dataset directory");
    sw->add_option("--cache", sa.cache, "Dataset cache path");
    sw->add_option("-o,--out", sa.out, "Grid CSV path");
    sw->add_option("--k-train", sa.k_train, "K_train axis");
    sw->add_option("--k-test", sa.k_test, "K_test axis");
    sw->add_option("--seeds", sa.seeds, "Training seeds");
    sw->add_option("--repeats", sa.repeats, "Test repetitions per cell");
    sw->add_option("--rule", sa.rule, "Learning rule")
        ->check(CLI::IsMember({"stochastic", "mean_field"}));
    sw->add_option("-j,--jobs", sa.jobs, "Concurrent training jobs");
    sw->add_option("--max-epochs", sa.max_epochs, "Epoch cap per model");
    sw->add_option("--patience", sa.patience, "Early-stop patience");
    sw->add_option("--split-seed", sa.split_seed, "Dataset split seed");
    sw->add_option("--manifest", sa.manifest, "Run-manifest path");

    AnalyzeArgs aa;
    auto* an = app.add_subcommand(
        "analyze", "Figure-data exports from a checkpoint");
    an->add_option("-c,--checkpoint", aa.checkpoint, "Checkpoint path");
    an->add_option("--data-dir", aa.data_dir, "Dataset directory");
    an->add_option("--cache", aa.cache, "Dataset cache path");
    an->add_option("--field-histogram", aa.field_histogram,
                   "CSV of the passing-probability histogram");
    an->add_option("--neuron-distribution", aa.neuron_distribution,
                   "CSV of outputs with one image shown --draws times");
    an->add_option("--std-vs-k", aa.std_vs_k,
                   "CSV of mean output std against K");
    an->add_option("--bins", aa.bins, "Histogram bin count")
        ->check(CLI::PositiveNumber);
    an->add_option("--image-index", aa.image_index,
                   "Test-set position for --neuron-distribution");
    an->add_option("--draws", aa.draws, "Forwards per image")
        ->check(CLI::PositiveNumber);
    an->add_option("-k,--k-test", aa.k_test, "Samples per synapse")
        ->check(CLI::PositiveNumber);
    an->add_option("--k-list", aa.k_list, "K axis for --std-vs-k");
    an->add_option("--images", aa.images, "Images averaged for --std-vs-k");
    an->add_option("--std-draws", aa.std_draws,
                   "Forwards per image for --std-vs-k");
    an->add_option("--seed", aa.seed, "Master seed");
    an->add_option("--split-seed", aa.split_seed, "Dataset split seed");
    an->add_option("--manifest", aa.manifest, "Run-manifest path");

    ServeArgs va;
    auto* sv = app.add_subcommand("serve", "Run the device emulator service");
    sv->add_option("--bind", va.bind, "Bind address");
    sv->add_option("-p,--port", va.port, "Port (0 = ephemeral)");
    sv->add_option("--seed", va.seed, "Device noise seed");
    sv->add_option("--calibration", va.calibration, "Calibration JSON path");
    sv->add_flag("--trace-mode", va.trace_mode,
                 "Derive bits from synthesized Kerr traces");
    sv->add_option("--latency-ms", va.latency_ms, "Fixed per-line latency");
    sv->add_option("--jitter-ms", va.jitter_ms, "Uniform latency jitter");
    sv->add_option("--field-jitter", va.field_jitter,
                   "Field-setting error (mT, std of applied field)");

    std::string replay_manifest;
    auto* rp = app.add_subcommand("replay", "Re-run a recorded manifest");
    rp->add_option("manifest", replay_manifest, "Manifest JSON path")
        ->required();

    try {
        // CLI11 consumes the token vector back-to-front
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    if (data->parsed()) return cmd_data(da, args);
    if (tr->parsed()) return cmd_train(ta, args);
    if (ev->parsed()) return cmd_eval(ea, args);
    if (sw->parsed()) return cmd_sweep(sa, args);
    if (an->parsed()) return cmd_analyze(aa, args);
    if (sv->parsed()) return cmd_serve(va);
    if (rp->parsed()) return cmd_replay(replay_manifest);
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return dispatch(args);
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << '\n';
        return kExitTransport;
    } catch (const DeviceError& e) {
        std::cerr << "device error: " << e.what() << '\n';
        return kExitTransport;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}
