#pragma once

// Experiment driver: training loops for every algorithm variant, learning
// curve metrics, CSV records and SVG plots.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dualsys/agent.hpp"
#include "dualsys/config.hpp"
#include "dualsys/grasp_env.hpp"

namespace dualsys {

struct EpisodeRecord {
    int episode = 0;
    double reward = 0.0;  // sum of extrinsic rewards
    int steps = 0;
    int mf = 0;
    int mb = 0;
    double model_err = 0.0;  // mean pre-update model error, 0 without a map
    std::size_t nodes = 0;
    std::size_t imagined = 0;

    bool operator==(const EpisodeRecord&) const = default;
};

/// One training run: owns the environment, its RNG stream and the agent.
class Experiment {
public:
    explicit Experiment(const Config& config);

    /// Plays and learns one episode. When log is non-null the episode is
    /// appended to it in the replayable line format.
    EpisodeRecord run_episode(std::ostream* log = nullptr);

    Agent& agent() { return agent_; }
    const Agent& agent() const { return agent_; }
    GraspEnv& env() { return env_; }
    int episodes_done() const { return episode_; }

private:
    Config config_;
    GraspEnv env_;
    Rng env_rng_;
    Agent agent_;
    int episode_ = 0;
};

/// Runs config.episodes episodes. on_episode is called after each one.
std::vector<EpisodeRecord> run_experiment(const Config& config,
                                          const std::function<void(const EpisodeRecord&)>& on_episode = {},
                                          std::ostream* episode_log = nullptr);

/// Fraction of greedy episodes ending in a grasp. The agent's actor acts on
/// encoder(render) in env_config's observation mode; nothing is trained.
double evaluate_success(const Agent& agent, const Network& encoder, const EnvConfig& env_config, int episodes,
                        std::uint64_t seed);

std::vector<double> episode_rewards(std::span<const EpisodeRecord> records);

/// Mean episodic reward divided by the per-episode maximum of 1. Throws on
/// empty input.
double compute_auc(std::span<const double> rewards);
double compute_auc(std::span<const EpisodeRecord> records);

/// Mean and population standard deviation of the last n rewards.
std::pair<double, double> compute_final_perf(std::span<const double> rewards, std::size_t n = 500);
std::pair<double, double> compute_final_perf(std::span<const EpisodeRecord> records, std::size_t n = 500);

/// Centered moving average: point i averages [i - (w-1)/2, i + w/2],
/// truncated at both ends.
std::vector<double> smooth(std::span<const double> values, std::size_t window);

inline const char* csv_header = "episode,reward,steps,mf,mb,model_err,nodes,imagined";

void write_csv(std::ostream& os, std::span<const EpisodeRecord> records);
std::vector<EpisodeRecord> read_csv(std::istream& is);
/// Throws std::runtime_error when the path cannot be written or read.
void emit_csv(std::span<const EpisodeRecord> records, const std::string& path);
std::vector<EpisodeRecord> parse_csv(const std::string& path);

/// Smoothed seed-mean curve with a per-episode band of one population
/// standard deviation across seeds (zero for a single seed).
struct Curve {
    std::string label;
    std::vector<double> mean;
    std::vector<double> band;
};

/// Per-seed series are truncated to the shortest one, smoothed, then
/// combined episode by episode.
Curve aggregate_curve(const std::string& label, const std::vector<std::vector<double>>& per_seed,
                      std::size_t window);

void write_svg(std::ostream& os, std::span<const Curve> curves, const std::string& title = "");
void emit_plot(std::span<const Curve> curves, const std::string& path, const std::string& title = "");

/// "<algo>-<reward>-seed<S>.csv", the name train uses inside --out.
std::string run_file_name(const Config& config);

}  // namespace dualsys
