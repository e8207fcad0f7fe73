#pragma once

// Planar grasping task: a hand moves in a square workspace and must close
// on a target. Closing within the grasp threshold succeeds (+1); arriving
// within the topple radius with an open hand knocks the target over (-1).
// Otherwise the reward is the negative hand-target distance (dense) or 0
// (sparse).

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dualsys/nn.hpp"
#include "dualsys/observation.hpp"

namespace dualsys {

enum class RewardMode { dense, sparse };
enum class ObservationMode { vector, image_sim, image_real };
enum class Outcome { running, grasped, toppled, timeout };

std::string to_string(RewardMode m);
std::string to_string(ObservationMode m);
std::string to_string(Outcome o);
RewardMode reward_mode_from_string(const std::string& s);
ObservationMode observation_mode_from_string(const std::string& s);
Outcome outcome_from_string(const std::string& s);

struct EnvConfig {
    double grasp_threshold = 0.04;
    double topple_radius = 0.08;
    int max_steps = 50;
    double workspace = 1.0;  // half-width of the square
    double gain = 0.1;       // metres per unit action
    double home_x = 0.0;
    double home_y = 0.0;
    double target_min_radius = 0.15;  // graspable annulus around home
    double target_max_radius = 0.5;
    RewardMode reward_mode = RewardMode::dense;
    ObservationMode observation_mode = ObservationMode::vector;
    std::size_t image_size = 16;
    std::uint64_t render_seed = 7;  // fixes the real-like jitter pattern

    /// Throws std::invalid_argument when the geometry is inconsistent.
    void validate() const;
};

struct EnvState {
    std::array<double, 2> hand{0.0, 0.0};
    std::array<double, 2> target{0.0, 0.0};
    double aperture = 1.0;  // < 0 means closed
    int step_count = 0;
    Outcome outcome = Outcome::running;
};

struct StepResult {
    Observation obs;
    double reward = 0.0;
    bool done = false;
    Outcome outcome = Outcome::running;
};

class GraspEnv {
public:
    static constexpr std::size_t action_dim = 3;  // dx, dy, aperture command

    explicit GraspEnv(EnvConfig config = {});

    const EnvConfig& config() const { return config_; }
    const EnvState& state() const { return state_; }
    std::size_t observation_dim() const;

    /// Hand to home, open; target uniform over the graspable annulus.
    Observation reset(Rng& rng);
    /// Starts an episode with an explicit target (used for replay).
    Observation reset_to(std::array<double, 2> target);

    StepResult step(std::span<const double> action);

    Observation render(const EnvState& state, ObservationMode mode) const;
    Observation observe() const { return render(state_, config_.observation_mode); }

    double hand_target_distance() const;

private:
    EnvConfig config_;
    EnvState state_;
    Vec jitter_;  // per-pixel pattern of the real-like renderer
};

// Episode logs: one header line then one line per step.
//   episode <index> target <x> <y>
//   step <t> action <a0> <a1> <a2> reward <r> outcome <name>
struct EpisodeStep {
    int step = 0;
    Action action;
    double reward = 0.0;
    Outcome outcome = Outcome::running;
};

struct EpisodeLog {
    int episode = 0;
    std::array<double, 2> target{0.0, 0.0};
    std::vector<EpisodeStep> steps;
};

void write_episode_log(std::ostream& os, const EpisodeLog& log);
std::vector<EpisodeLog> read_episode_logs(std::istream& is);

/// Re-executes the logged actions and returns the rewards obtained.
std::vector<double> replay_episode(const EpisodeLog& log, const EnvConfig& config);

}  // namespace dualsys
