#include "dualsys/planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "dualsys/local_model.hpp"

namespace dualsys {

bool region_reliable(const ItmNode& node) {
    const auto lp = node.progress.learning_progress();
    return lp.has_value() && *lp >= 0.0;
}

Rollout rollout_with_imagination(std::span<const double> latent, int start_node, const ItmMap& map,
                                 const Network& actor, int max_depth) {
    if (max_depth < 1) throw std::invalid_argument("rollout: max depth must be >= 1");
    if (!region_reliable(map.node(start_node)))
        throw std::invalid_argument("rollout: start node must have learning progress >= 0");

    Rollout out;
    RolloutTrace& tr = out.trace;
    tr.latents.emplace_back(latent.begin(), latent.end());
    int n = start_node;
    int depth = 0;
    while (region_reliable(map.node(n)) && depth < max_depth) {
        const Vec& phi = tr.latents.back();
        Action a = actor.forward(phi);
        ModelPrediction p = model_predict(map.node(n).model, phi, a);
        out.imagined.push_back(LatentTransition{phi, a, p.reward, p.next_latent});
        tr.actions.push_back(std::move(a));
        tr.rewards.push_back(p.reward);
        tr.nodes.push_back(n);
        tr.latents.push_back(std::move(p.next_latent));
        n = map.best_match(tr.latents.back());
        ++depth;
    }
    return out;
}

int planning_depth(std::span<const double> latent, int start_node, const ItmMap& map, const Network& actor,
                   int max_depth) {
    return static_cast<int>(rollout_with_imagination(latent, start_node, map, actor, max_depth).horizon());
}

PlanLossGrad plan_loss_grad(std::span<const double> latent, std::span<const int> nodes,
                            std::span<const Action> actions, const ItmMap& map, double desired_return) {
    if (nodes.size() != actions.size() || actions.empty())
        throw std::invalid_argument("plan loss: need one node per action and H >= 1");
    const std::size_t H = actions.size();
    const std::size_t dz = latent.size();

    // Forward unroll, keeping tapes for backpropagation through time.
    std::vector<Tape> dyn_tapes(H), rew_tapes(H);
    Vec phi(latent.begin(), latent.end());
    PlanLossGrad out;
    for (std::size_t h = 0; h < H; ++h) {
        const LocalModel& m = map.node(nodes[h]).model;
        const Vec input = concat(phi, actions[h]);
        out.predicted_return += m.reward.forward(input, rew_tapes[h])[0];
        phi = m.dynamics.forward(input, dyn_tapes[h]);
    }
    const double gap = desired_return - out.predicted_return;
    out.loss = gap * gap;
    const std::array<double, 1> dreward{-2.0 * gap};

    out.action_grads.assign(H, Vec{});
    Vec latent_grad(dz, 0.0);  // dL / d phi_{h+1}
    for (std::size_t h = H; h-- > 0;) {
        const LocalModel& m = map.node(nodes[h]).model;
        Vec in_grad = m.reward.backward(rew_tapes[h], dreward, nullptr);
        if (h + 1 < H) {
            const Vec dyn_grad = m.dynamics.backward(dyn_tapes[h], latent_grad, nullptr);
            for (std::size_t k = 0; k < in_grad.size(); ++k) in_grad[k] += dyn_grad[k];
        }
        latent_grad.assign(in_grad.begin(), in_grad.begin() + static_cast<std::ptrdiff_t>(dz));
        out.action_grads[h].assign(in_grad.begin() + static_cast<std::ptrdiff_t>(dz), in_grad.end());
    }
    return out;
}

PlanResult plan_optimize(const RolloutTrace& rollout, const ItmMap& map, const PlanSettings& settings) {
    if (rollout.actions.empty()) throw std::invalid_argument("plan_optimize: horizon must be >= 1");
    PlanResult res;
    res.horizon = static_cast<int>(rollout.actions.size());
    res.actions = rollout.actions;
    const Vec& start = rollout.latents.front();
    auto evaluate = [&] {
        try {
            return plan_loss_grad(start, rollout.nodes, res.actions, map, settings.desired_return);
        } catch (const NumericError& e) {
            throw PlanningError(std::string("plan_optimize: ") + e.what());
        }
    };
    for (int k = 0; k < settings.iterations; ++k) {
        const PlanLossGrad lg = evaluate();
        if (!std::isfinite(lg.loss)) throw PlanningError("plan_optimize: non-finite plan loss");
        res.loss_trace.push_back(lg.loss);
        for (std::size_t h = 0; h < res.actions.size(); ++h) {
            for (std::size_t j = 0; j < res.actions[h].size(); ++j) {
                const double next = res.actions[h][j] - settings.lr * lg.action_grads[h][j];
                if (!std::isfinite(next)) throw PlanningError("plan_optimize: non-finite action update");
                res.actions[h][j] = std::clamp(next, -1.0, 1.0);
            }
        }
    }
    res.final_loss = evaluate().loss;
    if (!std::isfinite(res.final_loss)) throw PlanningError("plan_optimize: non-finite plan loss");
    return res;
}

}  // namespace dualsys
