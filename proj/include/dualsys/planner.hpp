#pragma once

// Adaptive-depth rollouts through the local world models and gradient-based
// plan optimization over the resulting action sequence.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dualsys/actor_critic.hpp"
#include "dualsys/itm.hpp"
#include "dualsys/nn.hpp"

namespace dualsys {

/// A region is reliable when its learning progress is defined and >= 0.
bool region_reliable(const ItmNode& node);

struct RolloutTrace {
    std::vector<Vec> latents;    // H + 1, latents[0] is the real latent
    std::vector<Action> actions; // H, actor proposals (no exploration noise)
    std::vector<double> rewards; // H
    std::vector<int> nodes;      // H, node whose model produced step i
};

struct Rollout {
    RolloutTrace trace;
    std::vector<LatentTransition> imagined;  // one per step
    std::size_t horizon() const { return trace.actions.size(); }
};

/// Unrolls a_i = mu(phi_i), phi_{i+1} = M_n(phi_i, a_i) starting at node n,
/// re-matching the best node after every step without adapting the map,
/// while the current node is reliable and fewer than max_depth steps were
/// taken. Requires the start node to be reliable and max_depth >= 1.
Rollout rollout_with_imagination(std::span<const double> latent, int start_node, const ItmMap& map,
                                 const Network& actor, int max_depth);

/// Horizon of the same traversal, 1 <= H <= max_depth.
int planning_depth(std::span<const double> latent, int start_node, const ItmMap& map, const Network& actor,
                   int max_depth);

struct PlanSettings {
    double desired_return = 1.0;  // R*
    double lr = 1e-3;             // alpha_plan
    int iterations = 10;          // K
};

struct PlanResult {
    std::vector<Action> actions;
    int horizon = 0;
    double final_loss = 0.0;
    std::vector<double> loss_trace;  // loss before each of the K updates
};

struct PlanLossGrad {
    double loss = 0.0;
    double predicted_return = 0.0;
    std::vector<Vec> action_grads;
};

/// (R* - sum_h r_h)^2 for the action sequence unrolled from latent through
/// the given node models, and its gradient w.r.t. every action.
PlanLossGrad plan_loss_grad(std::span<const double> latent, std::span<const int> nodes,
                            std::span<const Action> actions, const ItmMap& map, double desired_return);

class PlanningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// K projected gradient-descent steps on the plan loss, starting from the
/// rollout's actor proposal. The node sequence is the one chosen by the
/// rollout. Throws PlanningError on non-finite values.
PlanResult plan_optimize(const RolloutTrace& rollout, const ItmMap& map, const PlanSettings& settings);

}  // namespace dualsys
