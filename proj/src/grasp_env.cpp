#include "dualsys/grasp_env.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dualsys {

std::string to_string(RewardMode m) { return m == RewardMode::dense ? "dense" : "sparse"; }

std::string to_string(ObservationMode m) {
    switch (m) {
        case ObservationMode::vector: return "vector";
        case ObservationMode::image_sim: return "image_sim";
        case ObservationMode::image_real: return "image_real";
    }
    return "vector";
}

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::running: return "running";
        case Outcome::grasped: return "grasped";
        case Outcome::toppled: return "toppled";
        case Outcome::timeout: return "timeout";
    }
    return "running";
}

RewardMode reward_mode_from_string(const std::string& s) {
    if (s == "dense") return RewardMode::dense;
    if (s == "sparse") return RewardMode::sparse;
    throw std::invalid_argument("unknown reward mode: " + s);
}

ObservationMode observation_mode_from_string(const std::string& s) {
    if (s == "vector") return ObservationMode::vector;
    if (s == "image_sim" || s == "image") return ObservationMode::image_sim;
    if (s == "image_real") return ObservationMode::image_real;
    throw std::invalid_argument("unknown observation mode: " + s);
}

Outcome outcome_from_string(const std::string& s) {
    if (s == "running") return Outcome::running;
    if (s == "grasped") return Outcome::grasped;
    if (s == "toppled") return Outcome::toppled;
    if (s == "timeout") return Outcome::timeout;
    throw std::invalid_argument("unknown outcome: " + s);
}

void EnvConfig::validate() const {
    if (!(grasp_threshold > 0.0 && grasp_threshold < topple_radius && topple_radius < workspace))
        throw std::invalid_argument("EnvConfig: need 0 < grasp_threshold < topple_radius < workspace");
    if (max_steps < 1) throw std::invalid_argument("EnvConfig: max_steps must be >= 1");
    if (!(gain > 0.0)) throw std::invalid_argument("EnvConfig: gain must be positive");
    if (!(target_min_radius > grasp_threshold && target_min_radius <= target_max_radius))
        throw std::invalid_argument("EnvConfig: annulus must lie beyond the grasp threshold");
    if (std::abs(home_x) + target_max_radius > workspace || std::abs(home_y) + target_max_radius > workspace)
        throw std::invalid_argument("EnvConfig: annulus must fit inside the workspace");
    if (image_size < 4) throw std::invalid_argument("EnvConfig: image_size must be >= 4");
}

GraspEnv::GraspEnv(EnvConfig config) : config_(config) {
    config_.validate();
    Rng rng(config_.render_seed);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    jitter_.resize(config_.image_size * config_.image_size);
    for (auto& j : jitter_) j = jitter(rng);
    state_.hand = {config_.home_x, config_.home_y};
}

std::size_t GraspEnv::observation_dim() const {
    return config_.observation_mode == ObservationMode::vector ? 5 : config_.image_size * config_.image_size;
}

Observation GraspEnv::reset(Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r2min = config_.target_min_radius * config_.target_min_radius;
    const double r2max = config_.target_max_radius * config_.target_max_radius;
    const double radius = std::sqrt(r2min + (r2max - r2min) * unit(rng));
    const double angle = 2.0 * M_PI * unit(rng);
    return reset_to({config_.home_x + radius * std::cos(angle), config_.home_y + radius * std::sin(angle)});
}

Observation GraspEnv::reset_to(std::array<double, 2> target) {
    state_ = EnvState{};
    state_.hand = {config_.home_x, config_.home_y};
    state_.target = target;
    state_.aperture = 1.0;
    return observe();
}

double GraspEnv::hand_target_distance() const {
    return std::hypot(state_.target[0] - state_.hand[0], state_.target[1] - state_.hand[1]);
}

StepResult GraspEnv::step(std::span<const double> action) {
    if (state_.outcome != Outcome::running) throw std::logic_error("GraspEnv::step after episode end");
    if (action.size() != action_dim) throw std::invalid_argument("GraspEnv::step: action must have 3 entries");
    const double W = config_.workspace;
    for (int k = 0; k < 2; ++k) {
        const double a = std::clamp(action[k], -1.0, 1.0);
        state_.hand[k] = std::clamp(state_.hand[k] + config_.gain * a, -W, W);
    }
    state_.aperture = std::clamp(action[2], -1.0, 1.0);
    state_.step_count += 1;

    StepResult res;
    const double d = hand_target_distance();
    if (d < config_.grasp_threshold && state_.aperture < 0.0) {
        res.reward = 1.0;
        state_.outcome = Outcome::grasped;
    } else if (d < config_.topple_radius && state_.aperture >= 0.0) {
        res.reward = -1.0;
        state_.outcome = Outcome::toppled;
    } else {
        res.reward = config_.reward_mode == RewardMode::dense ? -d : 0.0;
        if (state_.step_count >= config_.max_steps) state_.outcome = Outcome::timeout;
    }
    res.outcome = state_.outcome;
    res.done = state_.outcome != Outcome::running;
    res.obs = observe();
    return res;
}

Observation GraspEnv::render(const EnvState& s, ObservationMode mode) const {
    const double W = config_.workspace;
    auto unit = [W](double x) { return std::clamp((x + W) / (2.0 * W), 0.0, 1.0); };
    if (mode == ObservationMode::vector) {
        return Observation::vector({unit(s.hand[0]), unit(s.hand[1]), unit(s.target[0]), unit(s.target[1]),
                                    (std::clamp(s.aperture, -1.0, 1.0) + 1.0) / 2.0});
    }

    const std::size_t N = config_.image_size;
    const double cell = 2.0 * W / static_cast<double>(N);
    const double sigma = 0.8;  // pixels
    // Blob centres in continuous pixel coordinates (column, row).
    auto to_pixel = [&](double v) { return (v + W) / cell - 0.5; };
    const double tc = to_pixel(s.target[0]), tr = to_pixel(s.target[1]);
    const double hc = to_pixel(s.hand[0]), hr = to_pixel(s.hand[1]);
    const double hand_amp = 0.4 + 0.2 * std::clamp(s.aperture, -1.0, 1.0);
    Vec px(N * N);
    for (std::size_t r = 0; r < N; ++r) {
        for (std::size_t c = 0; c < N; ++c) {
            const double dr_t = static_cast<double>(r) - tr, dc_t = static_cast<double>(c) - tc;
            const double dr_h = static_cast<double>(r) - hr, dc_h = static_cast<double>(c) - hc;
            const double target = 0.8 * std::exp(-(dr_t * dr_t + dc_t * dc_t) / (2.0 * sigma * sigma));
            const double hand = hand_amp * std::exp(-(dr_h * dr_h + dc_h * dc_h) / (2.0 * sigma * sigma));
            double v = std::max(target, hand);
            if (mode == ObservationMode::image_real) v = v + 0.1 + jitter_[r * N + c];
            px[r * N + c] = std::clamp(v, 0.0, 1.0);
        }
    }
    return Observation::image(std::move(px), N, N);
}

// ------------------------------------------------------------ episode logs

void write_episode_log(std::ostream& os, const EpisodeLog& log) {
    const auto old_precision = os.precision(17);
    os << "episode " << log.episode << " target " << log.target[0] << ' ' << log.target[1] << "\n";
    for (const auto& s : log.steps) {
        os << "step " << s.step << " action";
        for (double a : s.action) os << ' ' << a;
        os << " reward " << s.reward << " outcome " << to_string(s.outcome) << "\n";
    }
    os.precision(old_precision);
}

std::vector<EpisodeLog> read_episode_logs(std::istream& is) {
    std::vector<EpisodeLog> logs;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "episode") {
            EpisodeLog log;
            std::string ttag;
            if (!(ls >> log.episode >> ttag >> log.target[0] >> log.target[1]) || ttag != "target")
                throw std::runtime_error("episode log: bad header: " + line);
            logs.push_back(std::move(log));
        } else if (tag == "step") {
            if (logs.empty()) throw std::runtime_error("episode log: step before header");
            EpisodeStep st;
            std::string atag, rtag, otag, outcome;
            st.action.resize(GraspEnv::action_dim);
            if (!(ls >> st.step >> atag >> st.action[0] >> st.action[1] >> st.action[2] >> rtag >> st.reward >>
                  otag >> outcome) ||
                atag != "action" || rtag != "reward" || otag != "outcome")
                throw std::runtime_error("episode log: bad step: " + line);
            st.outcome = outcome_from_string(outcome);
            logs.back().steps.push_back(std::move(st));
        } else {
            throw std::runtime_error("episode log: unknown record: " + line);
        }
    }
    return logs;
}

std::vector<double> replay_episode(const EpisodeLog& log, const EnvConfig& config) {
    GraspEnv env(config);
    env.reset_to(log.target);
    std::vector<double> rewards;
    for (const auto& s : log.steps) rewards.push_back(env.step(s.action).reward);
    return rewards;
}

}  // namespace dualsys
