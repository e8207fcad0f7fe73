#pragma once

// Off-policy actor-critic learners (DDPG and off-policy CACLA) over latent
// states. The critic reads the concatenation [latent, action]; the actor
// maps a latent to a tanh-bounded action.

#include <cstddef>
#include <span>
#include <vector>

#include "dualsys/nn.hpp"
#include "dualsys/observation.hpp"

namespace dualsys {

/// Real-world experience as it is stored in the pixel replay buffer.
struct PixelTransition {
    Observation s;
    Action a;
    double r_total = 0.0;  // r_ext + r_int at storage time
    double r_ext = 0.0;
    Observation s_next;
    bool terminal = false;
};

/// Imagined experience harvested from a local-model rollout.
struct LatentTransition {
    Vec latent;
    Action action;
    double reward = 0.0;
    Vec next_latent;
};

/// What a critic/actor update consumes: latents already resolved (pixel
/// records re-encoded, imagined records as stored).
struct LatentSample {
    Vec latent;
    Action action;
    double reward = 0.0;
    Vec next_latent;  // encoded with the target encoder for pixel records
    bool terminal = false;
};

struct TdQuantities {
    double target = 0.0;     // y
    double advantage = 0.0;  // delta
};

struct LossGrad {
    double loss = 0.0;
    Gradients grads;
};

struct ActorCritic {
    Network critic;
    Network actor;
    Network target_critic;
    Network target_actor;
    AdamState critic_opt;
    AdamState actor_opt;

    ActorCritic() = default;
    ActorCritic(Network critic_net, Network actor_net);

    /// Critic [dz+da] -> hidden relu -> 1 linear; actor dz -> hidden relu -> da tanh.
    static ActorCritic create(std::size_t latent_dim, std::size_t action_dim,
                              std::span<const std::size_t> hidden, Rng& rng);

    std::size_t latent_dim() const { return actor.input_dim(); }
    std::size_t action_dim() const { return actor.output_dim(); }

    double q(std::span<const double> latent, std::span<const double> action) const;
    double target_q(std::span<const double> latent, std::span<const double> action) const;
    Action act(std::span<const double> latent) const;
    Action target_act(std::span<const double> latent) const;
};

Vec concat(std::span<const double> a, std::span<const double> b);

/// y = r + gamma * Q'(next, mu'(next)), or y = r at terminal transitions.
double critic_target(double reward, std::span<const double> next_latent, const ActorCritic& ac,
                     double gamma, bool terminal = false);

/// y as above and delta = y - Q(latent, mu(latent)).
TdQuantities td_quantities(const LatentSample& sample, const ActorCritic& ac, double gamma);

/// Mean squared TD error over the batch and its gradient w.r.t. the critic.
LossGrad critic_loss_grad(std::span<const LatentSample> batch, const ActorCritic& ac, double gamma);
void critic_update(std::span<const LatentSample> batch, ActorCritic& ac, double gamma, double lr);

/// L = -(1/n) sum_i Q(phi_i, mu(phi_i)) and its gradient w.r.t. the actor.
LossGrad ddpg_actor_loss_grad(std::span<const LatentSample> batch, const ActorCritic& ac);
void ddpg_actor_update(std::span<const LatentSample> batch, ActorCritic& ac, double lr);

/// L = (1/n) sum_{i : delta_i > 0} ||a_i - mu(phi_i)||^2; zero when no
/// advantage is strictly positive.
LossGrad cacla_actor_loss_grad(std::span<const LatentSample> batch, std::span<const double> advantages,
                               const ActorCritic& ac);

/// One Adam step on the gated loss. When no advantage is strictly positive
/// nothing changes (parameters and optimizer state). Returns whether a step
/// was taken.
bool cacla_actor_update(std::span<const LatentSample> batch, std::span<const double> advantages,
                        ActorCritic& ac, double lr);
bool cacla_actor_update(std::span<const LatentSample> batch, ActorCritic& ac, double gamma, double lr);

/// clip(mu(latent) + noise_scale * N(0, I), -1, 1).
Action act_with_noise(std::span<const double> latent, const Network& actor, double noise_scale, Rng& rng);

/// Adds noise_scale * N(0, I) to an arbitrary proposal, then clips.
Action add_exploration_noise(Action proposal, double noise_scale, Rng& rng);

void soft_update_targets(ActorCritic& ac, double tau);

}  // namespace dualsys
