#pragma once

// Arbitration between the model-free actor and the model-based planner,
// and the per-step training transaction that ties perception, the
// topological map, the local models, the replay buffers and the
// actor-critic together.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dualsys/actor_critic.hpp"
#include "dualsys/config.hpp"
#include "dualsys/itm.hpp"
#include "dualsys/observation.hpp"
#include "dualsys/perception.hpp"
#include "dualsys/planner.hpp"
#include "dualsys/replay.hpp"

namespace dualsys {

enum class DecisionKind { model_free, model_based };

std::string to_string(DecisionKind k);

struct Decision {
    DecisionKind kind = DecisionKind::model_free;
    int horizon = 0;  // H, 0 for model-free decisions
    int node = -1;    // best-matching node, -1 without a map
    std::optional<double> lp;
    bool downgraded = false;  // planner failed, fell back to the actor
};

/// Pure arbitration rule: model-based exactly when lp is defined and >= 0.
DecisionKind arbitrate(std::optional<double> lp);

struct ActionChoice {
    Action action;    // executed: proposal plus exploration noise, clipped
    Action proposal;  // before noise
    Decision decision;
    Vec latent;       // encoding of s_t
    std::vector<LatentTransition> imagined;  // only filled when imagination is on
};

struct StepOutcome {
    Action action;
    double r_ext = 0.0;
    double r_int = 0.0;
    double r_total = 0.0;
    Decision decision;
    std::size_t imagined_count = 0;
    std::optional<double> model_error;  // pre-update error of the matched node
    bool trained = false;               // gradient phase ran
};

/// Model-free and model-based decision counts of one episode.
std::pair<std::size_t, std::size_t> decision_stats(std::span<const Decision> episode);

class Agent {
public:
    Agent(const Config& config, std::size_t obs_dim);

    const Config& config() const { return config_; }

    /// Encodes s, adapts the map on the real latent, arbitrates and returns
    /// the executed action. Draws exploration noise from the agent's RNG.
    ActionChoice select_action(const Observation& s);

    /// Model update at the matched node, intrinsic reward, storage, gradient
    /// phase (skipped until the pixel buffer holds learning_starts records)
    /// and soft target updates.
    StepOutcome train_step(const ActionChoice& choice, const Observation& s, double r_ext,
                           const Observation& s_next, bool terminal);

    /// Deterministic actor output without touching the map.
    Action greedy_action(const Observation& s) const;

    Perception& perception() { return perception_; }
    const Perception& perception() const { return perception_; }
    ActorCritic& actor_critic() { return ac_; }
    const ActorCritic& actor_critic() const { return ac_; }
    /// Null until the first observation for map-based variants.
    ItmMap* map() { return map_ ? &*map_ : nullptr; }
    const ItmMap* map() const { return map_ ? &*map_ : nullptr; }
    void set_map(ItmMap map) { map_.emplace(std::move(map)); }
    /// Model factory used for new map regions.
    LocalModel make_local_model();

    const ReplayBuffer<PixelTransition>& pixel_buffer() const { return pixel_; }
    const ReplayBuffer<LatentTransition>& latent_buffer() const { return latent_; }
    Rng& rng() { return rng_; }

private:
    void ensure_map(std::span<const double> latent);
    void gradient_phase();
    std::vector<LatentSample> encode_batch(const std::vector<const PixelTransition*>& batch) const;

    Config config_;
    Rng rng_;
    std::shared_ptr<Rng> model_rng_;
    Perception perception_;
    ActorCritic ac_;
    std::optional<ItmMap> map_;
    ReplayBuffer<PixelTransition> pixel_;
    ReplayBuffer<LatentTransition> latent_;
};

}  // namespace dualsys
