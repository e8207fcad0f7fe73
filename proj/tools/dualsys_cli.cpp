// Command-line driver: train, metrics, plot.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "dualsys/config.hpp"
#include "dualsys/harness.hpp"

extern char** environ;

namespace fs = std::filesystem;
using namespace dualsys;

namespace {

struct SeedRange {
    std::uint64_t first = 0, last = 0;
};

SeedRange parse_seed_range(const std::string& s) {
    const std::regex re(R"(^\s*(\d+)\s*\.\.\s*(\d+)\s*$)");
    std::smatch m;
    if (!std::regex_match(s, m, re)) throw CLI::ValidationError("--seeds", "expected A..B, got " + s);
    SeedRange r{std::stoull(m[1]), std::stoull(m[2])};
    if (r.last < r.first) throw CLI::ValidationError("--seeds", "empty range " + s);
    return r;
}

struct RunGroup {
    std::map<std::uint64_t, std::vector<double>> seeds;  // seed -> episodic rewards
};

// Groups "<algo>-<reward>-seed<S>.csv" files by (algo, reward).
std::map<std::pair<std::string, std::string>, RunGroup> load_runs(const std::string& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
    const std::regex name(R"(^([a-z0-9_]+)-(dense|sparse)-seed(\d+)\.csv$)");
    std::map<std::pair<std::string, std::string>, RunGroup> groups;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string file = entry.path().filename().string();
        std::smatch m;
        if (!std::regex_match(file, m, name)) continue;
        const auto records = parse_csv(entry.path().string());
        groups[{m[1], m[2]}].seeds[std::stoull(m[3])] = episode_rewards(records);
    }
    if (groups.empty()) throw std::runtime_error("no run CSVs found in " + dir);
    return groups;
}

std::vector<double> seed_mean(const RunGroup& g) {
    std::size_t len = SIZE_MAX;
    for (const auto& [seed, r] : g.seeds) len = std::min(len, r.size());
    std::vector<double> mean(len, 0.0);
    for (const auto& [seed, r] : g.seeds)
        for (std::size_t i = 0; i < len; ++i) mean[i] += r[i] / static_cast<double>(g.seeds.size());
    return mean;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& seeds_arg, const std::string& out_dir, int jobs, bool write_logs, bool quiet) {
    Config base;
    if (!config_path.empty()) apply_config_file(base, config_path);
    apply_environment_overrides(base, environ);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got " + kv);
        base.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    base.validate();

    std::vector<std::uint64_t> seeds;
    if (!seeds_arg.empty()) {
        const SeedRange r = parse_seed_range(seeds_arg);
        for (auto s = r.first; s <= r.last; ++s) seeds.push_back(s);
    } else {
        seeds.push_back(base.seed);
    }
    fs::create_directories(out_dir);

    std::mutex io;
    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors;
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= seeds.size()) return;
            Config c = base;
            c.seed = seeds[i];
            const std::string csv = (fs::path(out_dir) / run_file_name(c)).string();
            try {
                {
                    std::ofstream cfg(fs::path(csv).replace_extension(".cfg"));
                    write_config(cfg, c);
                }
                std::ofstream log;
                if (write_logs) log.open(fs::path(csv).replace_extension(".episodes"));
                const auto records = run_experiment(
                    c,
                    [&](const EpisodeRecord& r) {
                        if (quiet) return;
                        std::lock_guard<std::mutex> lock(io);
                        std::printf("seed %llu episode %d reward %.4f steps %d mf %d mb %d nodes %zu\n",
                                    static_cast<unsigned long long>(c.seed), r.episode, r.reward, r.steps, r.mf, r.mb,
                                    r.nodes);
                    },
                    write_logs ? &log : nullptr);
                emit_csv(records, csv);
                std::lock_guard<std::mutex> lock(io);
                std::printf("wrote %s (%zu episodes)\n", csv.c_str(), records.size());
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(io);
                errors.push_back("seed " + std::to_string(c.seed) + ": " + e.what());
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(seeds.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) std::fprintf(stderr, "error: %s\n", e.c_str());
    return errors.empty() ? 0 : 1;
}

int cmd_metrics(const std::string& dir, std::size_t final_n) {
    const auto groups = load_runs(dir);
    std::vector<std::string> algos;
    for (const auto& [key, g] : groups)
        if (std::find(algos.begin(), algos.end(), key.first) == algos.end()) algos.push_back(key.first);

    std::printf("%-14s", "");
    for (const auto& a : algos) std::printf("%22s", a.c_str());
    std::printf("\n");
    for (const char* reward : {"dense", "sparse"}) {
        bool any = false;
        for (const auto& a : algos) any = any || groups.count({a, reward});
        if (!any) continue;
        std::printf("%s reward\n", reward[0] == 'd' ? "Dense" : "Sparse");
        std::printf("%-14s", "AuC");
        for (const auto& a : algos) {
            auto it = groups.find({a, reward});
            if (it == groups.end()) {
                std::printf("%22s", "-");
                continue;
            }
            const auto mean = seed_mean(it->second);
            std::printf("%22.3f", mean.empty() ? 0.0 : compute_auc(mean));
        }
        std::printf("\n%-14s", "Final Perf.");
        for (const auto& a : algos) {
            auto it = groups.find({a, reward});
            if (it == groups.end()) {
                std::printf("%22s", "-");
                continue;
            }
            const auto mean = seed_mean(it->second);
            if (mean.empty()) {
                std::printf("%22s", "-");
                continue;
            }
            const auto [m, s] = compute_final_perf(mean, std::min(final_n, mean.size()));
            char cell[64];
            std::snprintf(cell, sizeof cell, "%.1f +- %.1f", m, s);
            std::printf("%22s", cell);
        }
        std::printf("\n");
    }
    std::printf("(%zu-episode final window; seeds per run:", final_n);
    for (const auto& [key, g] : groups) std::printf(" %s/%s=%zu", key.first.c_str(), key.second.c_str(), g.seeds.size());
    std::printf(")\n");
    return 0;
}

int cmd_plot(const std::string& dir, const std::string& out, std::size_t window, const std::string& reward) {
    const auto groups = load_runs(dir);
    std::vector<Curve> curves;
    for (const auto& [key, g] : groups) {
        if (!reward.empty() && key.second != reward) continue;
        std::vector<std::vector<double>> per_seed;
        for (const auto& [seed, r] : g.seeds) per_seed.push_back(r);
        const std::string label = reward.empty() ? key.first + " (" + key.second + ")" : key.first;
        curves.push_back(aggregate_curve(label, per_seed, window));
    }
    if (curves.empty()) throw std::runtime_error("no runs match reward mode " + reward);
    emit_plot(curves, out, reward.empty() ? "" : reward + " reward");
    std::printf("wrote %s (%zu curves)\n", out.c_str(), curves.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual-system (model-free / model-based) grasp learning experiments"};
    app.require_subcommand(1);

    auto* train = app.add_subcommand("train", "Train one or more seeds and write per-seed CSVs");
    std::string config_path, algo, reward, seeds_arg, out_dir = "runs";
    int episodes = -1, jobs = 1;
    long long seed = -1;
    std::vector<std::string> overrides;
    bool write_logs = false, quiet = false;
    train->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    train->add_option("--algo", algo, "ddpg|cacla|ddpg_im2c|cacla_im2c|ddpg_la_imagination|ddpg_i2a");
    train->add_option("--reward", reward, "dense|sparse");
    train->add_option("--episodes", episodes, "episode budget");
    auto* seed_opt = train->add_option("--seed", seed, "single seed");
    train->add_option("--seeds", seeds_arg, "seed range A..B")->excludes(seed_opt);
    train->add_option("--out", out_dir, "output directory");
    train->add_option("--jobs", jobs, "seeds trained concurrently")->check(CLI::PositiveNumber);
    train->add_option("--set", overrides, "extra key=value overrides (repeatable)");
    train->add_flag("--episode-logs", write_logs, "also write replayable episode logs");
    train->add_flag("--quiet", quiet, "no per-episode progress lines");

    auto* metrics = app.add_subcommand("metrics", "Print AuC and Final Perf per algorithm and reward mode");
    std::string in_dir;
    std::size_t final_n = 500;
    metrics->add_option("--in", in_dir, "directory of run CSVs")->required();
    metrics->add_option("--final", final_n, "final-performance window")->check(CLI::PositiveNumber);

    auto* plot = app.add_subcommand("plot", "Write an SVG of smoothed learning curves");
    std::string plot_in, plot_out, plot_reward;
    std::size_t window = 250;
    plot->add_option("--in", plot_in, "directory of run CSVs")->required();
    plot->add_option("--out", plot_out, "SVG file")->required();
    plot->add_option("--window", window, "smoothing window (episodes)")->check(CLI::PositiveNumber);
    plot->add_option("--reward", plot_reward, "only plot this reward mode")->check(CLI::IsMember({"dense", "sparse"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            // CLI flags override file and environment values.
            if (!algo.empty()) overrides.push_back("algo=" + algo);
            if (!reward.empty()) overrides.push_back("reward=" + reward);
            if (episodes >= 0) overrides.push_back("episodes=" + std::to_string(episodes));
            if (seed >= 0) overrides.push_back("seed=" + std::to_string(seed));
            return cmd_train(config_path, overrides, seeds_arg, out_dir, jobs, write_logs, quiet);
        }
        if (*metrics) return cmd_metrics(in_dir, final_n);
        if (*plot) return cmd_plot(plot_in, plot_out, window, plot_reward);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
