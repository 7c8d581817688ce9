// seprank — verification lab and training toolkit for recurrent arithmetic
// circuits and orthogonally parameterized RNNs.
//
// Subcommands: verify, train, frontier, gen, fetch-mnist, list.
// Exit codes: 0 pass, 1 violation, 2 invalid config, 3 cap exceeded,
// 4 dataset missing, 5 checksum mismatch, 6 network failure.

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "seprank/sha256.hpp"
#include "seprank/theorem.hpp"
#include "seprank/train.hpp"

using nlohmann::json;
using namespace seprank;

namespace {

namespace fs = std::filesystem;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCap = 3;
constexpr int kExitData = 4;
constexpr int kExitChecksum = 5;
constexpr int kExitNetwork = 6;

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return j;
}

// Schema guard: unknown keys are rejected outright.
void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
    if (j.contains("schema") && j.at("schema").get<int>() != 1)
        throw ConfigError(where + ": unsupported schema version");
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

void write_text(const fs::path& path, const std::string& text) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

// ---- verify ----------------------------------------------------------------

const std::vector<std::string> kAllChecks = {"theorem-shallow", "theorem-deep", "decomp",
                                             "rearrange",       "bucket",       "repetition",
                                             "min-cut",         "hadamard-bound"};

// Runs one cell body per (index) over a small pool; results land in grid
// order and cell seeds derive from the index, so the schedule and the job
// count never change the report.
void parallel_cells(std::size_t count, unsigned jobs,
                    const std::function<void(std::size_t)>& body) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            body(i);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < std::min<std::size_t>(jobs, count); ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

std::vector<SepRankReport> run_check(const std::string& name, const json& cfg, std::uint64_t seed,
                                     std::size_t cap, unsigned jobs) {
    std::vector<SepRankReport> out;
    Rng rng(seed);
    if (name == "theorem-shallow") {
        check_keys(cfg, {"M", "R", "T", "trials"}, name);
        const auto ms = get_or<std::vector<std::size_t>>(cfg, "M", {2, 3});
        const auto rs = get_or<std::vector<std::size_t>>(cfg, "R", {1, 2, 3, 4, 5});
        const auto ts = get_or<std::vector<std::size_t>>(cfg, "T", {2, 4, 6});
        const auto trials = get_or<std::size_t>(cfg, "trials", 20);
        std::vector<std::array<std::size_t, 3>> cells;
        for (auto m : ms)
            for (auto r : rs)
                for (auto t : ts) {
                    std::size_t grid = 1;
                    for (std::size_t i = 0; i < t; ++i) grid *= m;
                    if (grid > cap)
                        throw CapExceeded("theorem-shallow cell M=" + std::to_string(m) +
                                          " T=" + std::to_string(t) + " over the cap");
                    cells.push_back({m, r, t});
                }
        out.resize(cells.size());
        parallel_cells(cells.size(), jobs, [&](std::size_t i) {
            Rng cell_rng(seed + 0x9e3779b97f4a7c15ull * (i + 1));
            out[i] = verify_theorem_shallow(cells[i][0], cells[i][1], cells[i][2], trials, cell_rng,
                                            cap);
        });
    } else if (name == "theorem-deep") {
        check_keys(cfg, {"cells", "z", "float_trials"}, name);
        const auto cells = get_or<std::vector<std::vector<std::size_t>>>(
            cfg, "cells", {{2, 2, 4}, {3, 3, 4}, {2, 2, 6}});
        const auto z = Rational(get_or<long long>(cfg, "z", 2));
        const auto float_trials = get_or<std::size_t>(cfg, "float_trials", 5);
        for (const auto& cell : cells) {
            if (cell.size() != 3) throw ConfigError("theorem-deep: cells are [M, R, T]");
            const std::size_t t = cell[2];
            const std::uint64_t omega = (t / 2) * (t / 2) + 1;
            out.push_back(
                verify_theorem_deep(cell[0], cell[1], t, z, omega, float_trials, rng, cap));
        }
    } else if (name == "decomp") {
        check_keys(cfg, {"rbar", "M", "T", "trials"}, name);
        const auto rbars = get_or<std::vector<std::size_t>>(cfg, "rbar", {2, 3});
        const auto ms = get_or<std::vector<std::size_t>>(cfg, "M", {2, 3});
        const auto ts = get_or<std::vector<std::size_t>>(cfg, "T", {4, 6});
        const auto trials = get_or<std::size_t>(cfg, "trials", 20);
        std::uniform_int_distribution<int> entry(-3, 3);
        SepRankReport rep;
        rep.check = "decomp";
        rep.exact = true;
        rep.expected = 1;
        for (std::size_t trial = 0; trial < trials; ++trial) {
            const std::size_t rbar = rbars[trial % rbars.size()];
            const std::size_t m = ms[trial % ms.size()];
            const std::size_t t = ts[trial % ts.size()];
            Mat<Rational> z(rbar, m);
            for (auto& v : z.a) v = Rational(entry(rng));
            ++rep.trials;
            rep.m = m;
            rep.r = rbar;
            rep.t = t;
            if (!verify_decomp_identity(z, t)) ++rep.failures;
        }
        rep.measured = rep.failures == 0 ? 1 : 0;
        rep.verdict = rep.failures == 0 ? Verdict::Equal : Verdict::Violation;
        out.push_back(rep);
    } else if (name == "rearrange") {
        check_keys(cfg, {"sets", "vectors", "dim"}, name);
        const auto sets = get_or<std::size_t>(cfg, "sets", 50);
        const auto count = get_or<std::size_t>(cfg, "vectors", 4);
        const auto dim = get_or<std::size_t>(cfg, "dim", 3);
        std::uniform_int_distribution<long long> entry(0, 9);
        SepRankReport rep;
        rep.check = "rearrange";
        rep.exact = true;
        rep.expected = 1;
        for (std::size_t s = 0; s < sets; ++s) {
            std::vector<std::vector<long long>> vecs;
            while (vecs.size() < count) {
                std::vector<long long> v(dim);
                for (auto& x : v) x = entry(rng);
                if (std::find(vecs.begin(), vecs.end(), v) == vecs.end()) vecs.push_back(v);
            }
            std::vector<std::size_t> sigma(count);
            std::iota(sigma.begin(), sigma.end(), 0);
            do {
                bool identity = true;
                for (std::size_t i = 0; i < count; ++i)
                    if (sigma[i] != i) identity = false;
                if (identity) continue;
                ++rep.trials;
                if (!rearrangement_check(vecs, sigma)) ++rep.failures;
            } while (std::next_permutation(sigma.begin(), sigma.end()));
        }
        rep.measured = rep.failures == 0 ? 1 : 0;
        rep.verdict = rep.failures == 0 ? Verdict::Equal : Verdict::Violation;
        out.push_back(rep);
    } else if (name == "bucket") {
        check_keys(cfg, {"rbar", "k"}, name);
        const auto rbars = get_or<std::vector<std::size_t>>(cfg, "rbar", {2, 3});
        const auto ks = get_or<std::vector<std::size_t>>(cfg, "k", {2, 3});
        for (auto rbar : rbars)
            for (auto k : ks) {
                const std::uint64_t omega = k * k + 1;
                SepRankReport rep;
                rep.check = "bucket";
                rep.exact = true;
                rep.r = rbar;
                rep.t = 2 * k;
                rep.expected = 1;
                std::vector<std::size_t> d(k, 1);
                std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos,
                                                                        std::size_t lo) {
                    if (pos == k) {
                        ++rep.trials;
                        if (!verify_unique_argmax(d, omega, rbar)) ++rep.failures;
                        return;
                    }
                    for (std::size_t c = lo; c <= rbar; ++c) {
                        d[pos] = c;
                        rec(pos + 1, c);
                    }
                };
                rec(0, 1);
                rep.measured = rep.failures == 0 ? 1 : 0;
                rep.verdict = rep.failures == 0 ? Verdict::Equal : Verdict::Violation;
                out.push_back(rep);
            }
    } else if (name == "repetition") {
        check_keys(cfg, {"T", "L"}, name);
        const auto ts = get_or<std::vector<std::size_t>>(cfg, "T", {2, 4, 6, 8});
        const auto ls = get_or<std::vector<std::size_t>>(cfg, "L", {1, 2, 3, 4});
        for (auto t : ts)
            for (auto l : ls) {
                SepRankReport rep;
                rep.check = "repetition";
                rep.exact = true;
                rep.t = t;
                rep.l = l;
                rep.trials = 1;
                rep.expected = multiset_coeff(t / 2, l - 1);
                const BigInt nested = repetition_count_nested(t, l);
                rep.measured = nested.fits_ll() ? nested.to_ll() : -1;
                rep.verdict = nested == rep.expected ? Verdict::Equal : Verdict::Violation;
                if (rep.verdict != Verdict::Equal) rep.failures = 1;
                out.push_back(rep);
            }
    } else if (name == "min-cut") {
        check_keys(cfg, {"R", "M", "T", "trials"}, name);
        const auto rs = get_or<std::vector<std::size_t>>(cfg, "R", {1, 2, 4, 100});
        const auto ms = get_or<std::vector<std::size_t>>(cfg, "M", {2});
        const auto ts = get_or<std::vector<std::size_t>>(cfg, "T", {4});
        const auto trials = get_or<std::size_t>(cfg, "trials", 20);
        std::vector<std::array<std::size_t, 3>> cells;
        for (auto r : rs)
            for (auto m : ms)
                for (auto t : ts) cells.push_back({r, m, t});
        out.resize(cells.size());
        parallel_cells(cells.size(), jobs, [&](std::size_t i) {
            Rng cell_rng(seed + 0x9e3779b97f4a7c15ull * (i + 101));
            out[i] = verify_min_cut(cells[i][0], cells[i][1], cells[i][2], trials, cell_rng, 1e-10,
                                    cap);
        });
    } else if (name == "hadamard-bound") {
        check_keys(cfg, {"trials"}, name);
        out.push_back(verify_hadamard_bound(get_or<std::size_t>(cfg, "trials", 200), rng));
    } else {
        throw ConfigError("unknown check: " + name);
    }
    return out;
}

int cmd_verify(const json& cfg, const std::string& out_dir, std::uint64_t seed, bool list_only,
               unsigned jobs) {
    check_keys(cfg, {"schema", "checks", "seed", "cap", "theorem_shallow", "theorem_deep", "decomp",
                     "rearrange", "bucket", "repetition", "min_cut", "hadamard"},
               "verify");
    if (list_only) {
        for (const auto& c : kAllChecks) std::cout << c << "\n";
        return kExitOk;
    }
    const auto checks = get_or<std::vector<std::string>>(cfg, "checks", kAllChecks);
    const auto cap = get_or<std::size_t>(cfg, "cap", kDefaultTensorCap);
    seed = get_or<std::uint64_t>(cfg, "seed", seed);
    auto section = [&](const std::string& name) -> json {
        std::string key = name;
        std::replace(key.begin(), key.end(), '-', '_');
        if (key == "hadamard_bound") key = "hadamard";
        return cfg.contains(key) ? cfg.at(key) : json::object();
    };

    std::vector<SepRankReport> reports;
    for (const auto& name : checks) {
        auto batch = run_check(name, section(name), seed, cap, jobs);
        reports.insert(reports.end(), batch.begin(), batch.end());
    }

    std::string csv = SepRankReport::csv_header() + "\n";
    json jreports = json::array();
    bool violated = false;
    for (const auto& rep : reports) {
        csv += rep.csv_row() + "\n";
        jreports.push_back(rep.to_json());
        std::cout << rep.csv_row() << "\n";
        if (rep.verdict == Verdict::Violation) violated = true;
    }
    json summary{{"config", cfg},   {"resolved", json{{"seed", seed}, {"cap", cap}, {"checks", checks}}},
                 {"reports", jreports}, {"pass", !violated}};
    write_text(fs::path(out_dir) / "report.csv", csv);
    write_text(fs::path(out_dir) / "summary.json", summary.dump(2));
    std::cout << (violated ? "RESULT: violation" : "RESULT: pass") << "\n";
    return violated ? kExitViolation : kExitOk;
}

// ---- train / frontier --------------------------------------------------------

TrainConfig parse_train_config(const json& j, std::uint64_t seed_override) {
    check_keys(j, {"batch_size", "max_iters", "lr_sweep", "gamma", "eps", "eval_every",
                   "quick_eval_samples", "eval_samples", "success_threshold", "stop_at_success",
                   "patience", "seed", "clip_gradients", "clip_norm"},
               "train config");
    TrainConfig tc;
    tc.batch_size = get_or<std::size_t>(j, "batch_size", tc.batch_size);
    tc.max_iters = get_or<std::size_t>(j, "max_iters", tc.max_iters);
    tc.lr_sweep = get_or<std::vector<double>>(j, "lr_sweep", tc.lr_sweep);
    tc.gamma = get_or<double>(j, "gamma", tc.gamma);
    tc.eps = get_or<double>(j, "eps", tc.eps);
    tc.eval_every = get_or<std::size_t>(j, "eval_every", tc.eval_every);
    tc.quick_eval_samples = get_or<std::size_t>(j, "quick_eval_samples", tc.quick_eval_samples);
    tc.eval_samples = get_or<std::size_t>(j, "eval_samples", tc.eval_samples);
    tc.success_threshold = get_or<double>(j, "success_threshold", tc.success_threshold);
    tc.stop_at_success = get_or<bool>(j, "stop_at_success", tc.stop_at_success);
    tc.patience = get_or<std::size_t>(j, "patience", tc.patience);
    tc.seed = get_or<std::uint64_t>(j, "seed", seed_override);
    tc.clip_gradients = get_or<bool>(j, "clip_gradients", tc.clip_gradients);
    tc.clip_norm = get_or<double>(j, "clip_norm", tc.clip_norm);
    return tc;
}

struct ModelSpec {
    std::size_t depth = 2;
    std::size_t channels = 32;
    Nonlin nonlin = Nonlin::ModRelu;
    bool orthogonal = true;
};

ModelSpec parse_model(const json& j) {
    check_keys(j, {"depth", "channels", "nonlinearity", "orthogonal"}, "model");
    ModelSpec spec;
    spec.depth = get_or<std::size_t>(j, "depth", spec.depth);
    spec.channels = get_or<std::size_t>(j, "channels", spec.channels);
    if (j.contains("nonlinearity")) spec.nonlin = nonlin_from_name(j.at("nonlinearity"));
    spec.orthogonal = get_or<bool>(j, "orthogonal", spec.orthogonal);
    return spec;
}

CopyConfig parse_copy(const json& j) {
    check_keys(j, {"m", "B", "n"}, "copy");
    CopyConfig cfg{get_or<std::size_t>(j, "m", 3), get_or<std::size_t>(j, "B", 0),
                   get_or<std::size_t>(j, "n", 8)};
    cfg.validate();
    return cfg;
}

SimConfig parse_sim(const json& j) {
    check_keys(j, {"T", "m", "n"}, "sim");
    SimConfig cfg{get_or<std::size_t>(j, "T", 20), get_or<std::size_t>(j, "m", 4),
                  get_or<std::size_t>(j, "n", 8)};
    cfg.validate();
    return cfg;
}

std::string data_dir_or(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("SEPRANK_DATA_DIR")) return env;
    return "data";
}

struct MnistFilePair {
    fs::path images, labels;
};

MnistFilePair mnist_paths(const std::string& dir, bool train) {
    const char* img = train ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte";
    const char* lbl = train ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte";
    for (const char* suffix : {".gz", ""}) {
        fs::path pi = fs::path(dir) / (std::string(img) + suffix);
        fs::path pl = fs::path(dir) / (std::string(lbl) + suffix);
        if (fs::exists(pi) && fs::exists(pl)) return {pi, pl};
    }
    throw std::runtime_error("MNIST files not found under '" + dir +
                             "'; run `seprank fetch-mnist --out " + dir + "` first");
}

int cmd_train(const json& cfg, const std::string& out_dir, std::uint64_t seed,
              const std::string& data_flag) {
    check_keys(cfg, {"schema", "task", "copy", "sim", "mnist", "model", "train"}, "train");
    const std::string task_name = get_or<std::string>(cfg, "task", "copy");
    TrainConfig tc =
        parse_train_config(cfg.contains("train") ? cfg.at("train") : json::object(), seed);
    ModelSpec spec = parse_model(cfg.contains("model") ? cfg.at("model") : json::object());
    Rng init_rng(tc.seed);
    ExperimentResult result;
    json task_echo;

    if (task_name == "copy" || task_name == "sim") {
        SyntheticTask task;
        std::size_t embed = 0, classes = 0;
        if (task_name == "copy") {
            CopyConfig ccfg = parse_copy(cfg.contains("copy") ? cfg.at("copy") : json::object());
            task = make_copy_task(ccfg);
            embed = ccfg.n + 2;
            classes = ccfg.n + 2;
            task_echo = {{"task", "copy"}, {"m", ccfg.m}, {"B", ccfg.b}, {"n", ccfg.n}};
        } else {
            SimConfig scfg = parse_sim(cfg.contains("sim") ? cfg.at("sim") : json::object());
            task = make_sim_task(scfg);
            embed = scfg.n + 1;
            classes = 3;
            task_echo = {{"task", "sim"}, {"T", scfg.t}, {"m", scfg.m}, {"n", scfg.n}};
        }
        TrainableModel model = init_model(spec.depth, spec.channels, embed, classes, spec.nonlin,
                                          spec.orthogonal, init_rng);
        TrainableModel trained;
        result = train_loop(model, task, tc, &trained);
        write_text(fs::path(out_dir) / "model.json", json(trained).dump(2));
    } else if (task_name == "mnist") {
        const json mj = cfg.contains("mnist") ? cfg.at("mnist") : json::object();
        check_keys(mj, {"data_dir", "subset", "permute_seed", "validation"}, "mnist");
        const std::string dir = mj.contains("data_dir") ? mj.at("data_dir").get<std::string>()
                                                        : data_dir_or(data_flag);
        MnistData train_data, test_data;
        try {
            auto tr = mnist_paths(dir, true);
            auto te = mnist_paths(dir, false);
            train_data = load_mnist_idx(tr.images.string(), tr.labels.string());
            test_data = load_mnist_idx(te.images.string(), te.labels.string());
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitData;
        }
        const std::uint64_t perm_seed = get_or<std::uint64_t>(mj, "permute_seed", 1);
        train_data = permute_pixels(train_data, perm_seed);
        test_data = permute_pixels(test_data, perm_seed);
        std::size_t subset = get_or<std::size_t>(mj, "subset", train_data.count);
        subset = std::min(subset, train_data.count);
        const std::size_t val = std::min(get_or<std::size_t>(mj, "validation", 5000), subset / 4);
        SplitIndices split = validation_split(subset, val, tc.seed);
        DatasetTask dtask;
        dtask.train = &train_data;
        dtask.train_indices = split.train;
        dtask.validation_indices = split.validation;
        dtask.test = &test_data;
        TrainableModel model =
            init_model(spec.depth, spec.channels, 1, 10, spec.nonlin, spec.orthogonal, init_rng);
        TrainableModel trained;
        result = train_loop_dataset(model, dtask, tc, &trained);
        write_text(fs::path(out_dir) / "model.json", json(trained).dump(2));
        task_echo = {{"task", "mnist"}, {"permute_seed", perm_seed}, {"subset", subset}};
    } else {
        throw ConfigError("unknown task: " + task_name);
    }

    json out = result.to_json();
    out["task"] = task_echo;
    out["model"] = {{"depth", spec.depth},
                    {"channels", spec.channels},
                    {"nonlinearity", nonlin_name(spec.nonlin)},
                    {"orthogonal", spec.orthogonal}};
    write_text(fs::path(out_dir) / "result.json", out.dump(2));
    std::cout << "final_metric=" << result.final_metric << " success=" << result.success
              << " iterations=" << result.iterations << "\n";
    return kExitOk;
}

int cmd_frontier(const json& cfg, const std::string& out_dir, std::uint64_t seed, unsigned jobs) {
    check_keys(cfg, {"schema", "task", "archs", "hardness", "copy", "sim", "train", "jobs"},
               "frontier");
    const std::string task_name = get_or<std::string>(cfg, "task", "copy");
    if (task_name != "copy" && task_name != "sim")
        throw ConfigError("frontier: task must be copy or sim");
    TrainConfig base =
        parse_train_config(cfg.contains("train") ? cfg.at("train") : json::object(), seed);
    jobs = get_or<unsigned>(cfg, "jobs", jobs);
    std::vector<std::pair<std::size_t, std::size_t>> archs;
    for (const auto& a : cfg.at("archs")) {
        check_keys(a, {"depth", "channels"}, "arch");
        archs.emplace_back(a.at("depth").get<std::size_t>(), a.at("channels").get<std::size_t>());
    }
    const auto hardness = cfg.at("hardness").get<std::vector<double>>();

    CellTrainer trainer = [&](std::size_t depth, std::size_t channels, double hard) {
        TrainConfig tc = base;
        tc.seed = base.seed + depth * 7919 + channels * 104729 +
                  static_cast<std::uint64_t>(hard) * 15485863;
        SyntheticTask task;
        std::size_t embed = 0, classes = 0;
        if (task_name == "copy") {
            CopyConfig ccfg = parse_copy(cfg.contains("copy") ? cfg.at("copy") : json::object());
            ccfg.b = static_cast<std::size_t>(hard);
            task = make_copy_task(ccfg);
            embed = ccfg.n + 2;
            classes = ccfg.n + 2;
        } else {
            SimConfig scfg = parse_sim(cfg.contains("sim") ? cfg.at("sim") : json::object());
            scfg.t = static_cast<std::size_t>(hard);
            task = make_sim_task(scfg);
            embed = scfg.n + 1;
            classes = 3;
        }
        Rng rng(tc.seed);
        TrainableModel model =
            init_model(depth, channels, embed, classes, Nonlin::ModRelu, true, rng);
        ExperimentResult res = train_loop(model, task, tc);
        FrontierCell cell;
        cell.depth = depth;
        cell.channels = channels;
        cell.params = param_count(depth, channels, embed, classes, Nonlin::ModRelu);
        cell.hardness = hard;
        cell.metric = res.final_metric;
        cell.success = res.success;
        cell.iters = res.iterations;
        cell.seconds = res.seconds;
        return cell;
    };
    auto cells = success_frontier(archs, hardness, trainer, jobs);
    std::string csv = frontier_csv_header() + "\n";
    for (const auto& cell : cells) {
        csv += frontier_csv_row(cell) + "\n";
        std::cout << frontier_csv_row(cell) << "\n";
    }
    write_text(fs::path(out_dir) / "frontier.csv", csv);
    json summary{{"config", cfg}, {"seed", base.seed}};
    summary["frontier_max"] = json::object();
    for (const auto& [depth, channels] : archs)
        summary["frontier_max"][std::to_string(depth)] = frontier_max(cells, depth);
    write_text(fs::path(out_dir) / "frontier.json", summary.dump(2));
    return kExitOk;
}

int cmd_gen(const json& cfg, std::uint64_t seed) {
    check_keys(cfg, {"schema", "task", "copy", "sim", "count", "seed", "out"}, "gen");
    const std::string task_name = get_or<std::string>(cfg, "task", "copy");
    const std::size_t count = get_or<std::size_t>(cfg, "count", 10);
    seed = get_or<std::uint64_t>(cfg, "seed", seed);
    const std::string out = get_or<std::string>(cfg, "out", "dataset.jsonl");
    Rng rng(seed);
    std::vector<TaskSample> samples;
    json header{{"seed", seed}, {"task", task_name}, {"count", count}};
    if (task_name == "copy") {
        CopyConfig ccfg = parse_copy(cfg.contains("copy") ? cfg.at("copy") : json::object());
        header["m"] = ccfg.m;
        header["B"] = ccfg.b;
        header["n"] = ccfg.n;
        for (std::size_t i = 0; i < count; ++i) samples.push_back(gen_copy(ccfg, rng));
    } else if (task_name == "sim") {
        SimConfig scfg = parse_sim(cfg.contains("sim") ? cfg.at("sim") : json::object());
        header["T"] = scfg.t;
        header["m"] = scfg.m;
        header["n"] = scfg.n;
        for (std::size_t i = 0; i < count; ++i) samples.push_back(gen_sim(scfg, rng));
    } else {
        throw ConfigError("gen: task must be copy or sim");
    }
    write_jsonl(out, header, samples);
    std::cout << "wrote " << samples.size() << " samples to " << out << "\n";
    return kExitOk;
}

// ---- fetch-mnist -------------------------------------------------------------

struct MnistRemote {
    const char* name;
    const char* sha256;
};

// Canonical gzip digests of the four original distribution files.
constexpr MnistRemote kMnistFiles[] = {
    {"train-images-idx3-ubyte.gz",
     "440fcabf73cc546fa21475e81ea370265605f56be210a4024d2ca8f203523609"},
    {"train-labels-idx1-ubyte.gz",
     "3552534a0a558bbed6aed32b30c495cca23d567ec52cac8be1a0730e8010255c"},
    {"t10k-images-idx3-ubyte.gz",
     "8d422c7b0a1c1c79245a5bcf07fe86e33eeafee792b84584aec276f5a2dbc4e6"},
    {"t10k-labels-idx1-ubyte.gz",
     "f7ae60f92e00ec6debd23a6088c31dbd2371eca3ffa0defaefb259924204aec6"},
};

int fetch_mnist_impl(const std::string& dest, const std::string& base_url, bool skip_checksum) {
    fs::create_directories(dest);
    std::string url = base_url;
    std::string scheme = "https://";
    if (url.rfind("http://", 0) == 0) scheme = "http://";
    if (url.rfind(scheme, 0) == 0) url = url.substr(scheme.size());
    const auto slash = url.find('/');
    const std::string host = scheme + url.substr(0, slash);
    std::string prefix = slash == std::string::npos ? "/" : url.substr(slash);
    if (prefix.empty() || prefix.back() != '/') prefix += '/';

    for (const auto& file : kMnistFiles) {
        const fs::path target = fs::path(dest) / file.name;
        if (fs::exists(target)) {
            if (skip_checksum || sha256_file(target.string()) == file.sha256) {
                std::cout << file.name << ": present, checksum ok\n";
                continue;
            }
            std::cout << file.name << ": checksum mismatch on disk, re-downloading\n";
        }
        httplib::Client client(host);
        client.set_follow_location(true);
        client.set_read_timeout(120);
        auto res = client.Get(prefix + file.name);
        if (!res || res->status != 200) {
            std::cerr << "error: download failed for " << file.name << " from " << host
                      << " (status " << (res ? res->status : -1) << ")\n";
            return kExitNetwork;
        }
        if (!skip_checksum) {
            const std::string digest = sha256_hex(
                reinterpret_cast<const unsigned char*>(res->body.data()), res->body.size());
            if (digest != file.sha256) {
                std::cerr << "error: checksum mismatch for " << file.name << "\n  want "
                          << file.sha256 << "\n  got  " << digest << "\n";
                return kExitChecksum;
            }
        }
        std::ofstream out(target, std::ios::binary);
        out.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
        std::cout << file.name << ": downloaded, " << res->body.size() << " bytes\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"seprank: separation-rank verification lab and RNN training toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", data_dir_flag;
    std::string base_url = "https://ossci-datasets.s3.amazonaws.com/mnist/";
    std::uint64_t seed = 12345;
    unsigned jobs = 1;
    bool list_flag = false, skip_checksum = false;

    auto* verify = app.add_subcommand("verify", "run theorem/lemma verification suites");
    verify->add_option("--config", config_path, "JSON config path");
    verify->add_option("--seed", seed, "random seed");
    verify->add_option("--jobs", jobs, "worker threads");
    verify->add_option("--out", out_dir, "report directory");
    verify->add_flag("--list", list_flag, "list available checks without running");

    auto* train = app.add_subcommand("train", "train one configuration on copy/sim/mnist");
    train->add_option("--config", config_path, "JSON config path");
    train->add_option("--seed", seed, "random seed");
    train->add_option("--out", out_dir, "result directory");
    train->add_option("--data", data_dir_flag, "dataset directory (or SEPRANK_DATA_DIR)");

    auto* frontier = app.add_subcommand("frontier", "sweep architectures over task hardness");
    frontier->add_option("--config", config_path, "JSON config path")->required();
    frontier->add_option("--seed", seed, "random seed");
    frontier->add_option("--jobs", jobs, "worker threads");
    frontier->add_option("--out", out_dir, "result directory");

    auto* gen = app.add_subcommand("gen", "generate a JSON-lines dataset");
    gen->add_option("--config", config_path, "JSON config path");
    gen->add_option("--seed", seed, "random seed");

    auto* fetch = app.add_subcommand("fetch-mnist", "download the four IDX files with checksums");
    fetch->add_option("--out", data_dir_flag, "destination directory (or SEPRANK_DATA_DIR)");
    fetch->add_option("--base-url", base_url, "mirror base URL");
    fetch->add_flag("--insecure-skip-checksum", skip_checksum, "skip digest verification");

    auto* list = app.add_subcommand("list", "list subcommands and verification checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed())
            return cmd_verify(load_config(config_path), out_dir, seed, list_flag, jobs);
        if (train->parsed())
            return cmd_train(load_config(config_path), out_dir, seed, data_dir_flag);
        if (frontier->parsed()) return cmd_frontier(load_config(config_path), out_dir, seed, jobs);
        if (gen->parsed()) return cmd_gen(load_config(config_path), seed);
        if (fetch->parsed())
            return fetch_mnist_impl(data_dir_or(data_dir_flag), base_url, skip_checksum);
        if (list->parsed()) {
            std::cout << "subcommands: verify, train, frontier, gen, fetch-mnist, list\n";
            std::cout << "verify checks:";
            for (const auto& c : kAllChecks) std::cout << ' ' << c;
            std::cout << "\nexit codes: 0 pass, 1 violation, 2 config, 3 cap, 4 data missing, "
                         "5 checksum, 6 network\n";
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const CapExceeded& e) {
        std::cerr << "cap exceeded: " << e.what() << "\n";
        return kExitCap;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 10;
    }
    return kExitOk;
}
