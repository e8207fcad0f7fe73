#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dualsys/grasp_env.hpp"

namespace dualsys {

enum class Algo { ddpg, cacla, ddpg_im2c, cacla_im2c, ddpg_la_imagination, ddpg_i2a };

std::string to_string(Algo a);
Algo algo_from_string(const std::string& s);

/// Baselines (ddpg, cacla) neither build the map nor arbitrate.
bool uses_map(Algo a);
bool uses_arbitration(Algo a);
/// Split pixel/latent replay and imagined transitions.
bool uses_imagination(Algo a);
bool uses_cacla(Algo a);

/// Every hyperparameter of a run. Defaults follow the reference setup; the
/// desk-scale presets used by the tests override some of them explicitly.
struct Config {
    Algo algo = Algo::ddpg_im2c;
    int episodes = 100;
    std::uint64_t seed = 1;

    std::size_t latent_dim = 32;
    std::size_t encoder_hidden = 64;
    std::vector<std::size_t> ac_hidden{64, 64};
    std::size_t model_hidden = 20;

    double lambda_rec = 0.1;
    double lambda_q = 1.0;
    double plan_lr = 1e-3;        // alpha_plan
    int plan_iterations = 10;     // K
    int max_depth = 6;            // D_max
    double desired_return = 1.0;  // R*
    double e_max = 6.0;
    std::size_t window = 40;  // sigma
    std::size_t lag = 20;     // W
    double gamma = 0.99;
    double tau = 1e-6;
    std::size_t batch = 256;
    double lr_critic = 1e-3;
    double lr_actor = 1e-4;
    double lr_model = 1e-3;
    std::size_t buffer_capacity = 100000;
    std::size_t pixel_capacity = 60000;
    std::size_t latent_capacity = 200000;
    double noise_scale = 0.3;
    int updates_per_step = 1;
    std::size_t learning_starts = 0;  // 0 means "one batch"

    EnvConfig env;

    /// Sets one field from its key (e.g. "gamma", "env.max_steps").
    /// Throws std::invalid_argument on unknown keys or unparsable values.
    void set(const std::string& key, const std::string& value);
    std::map<std::string, std::string> to_map() const;

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;
};

/// Reads "key = value" lines; '#' starts a comment.
void apply_config_text(Config& config, std::istream& is);
void apply_config_file(Config& config, const std::string& path);
/// Applies DUALSYS_<KEY> variables, where KEY is the upper-cased key with
/// '.' replaced by '_' (DUALSYS_ENV_MAX_STEPS sets env.max_steps).
void apply_environment_overrides(Config& config, char** envp);
void write_config(std::ostream& os, const Config& config);

/// Independent RNG stream derived from a run seed (0 env, 1 agent, 2 models).
Rng seeded_stream(std::uint64_t seed, std::uint64_t stream);

}  // namespace dualsys
