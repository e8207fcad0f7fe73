#include "dualsys/actor_critic.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace dualsys {

ActorCritic::ActorCritic(Network critic_net, Network actor_net)
    : critic(std::move(critic_net)),
      actor(std::move(actor_net)),
      target_critic(critic),
      target_actor(actor),
      critic_opt(critic),
      actor_opt(actor) {
    if (critic.input_dim() != actor.input_dim() + actor.output_dim() || critic.output_dim() != 1)
        throw std::invalid_argument("ActorCritic: critic must map [latent, action] to a scalar");
}

ActorCritic ActorCritic::create(std::size_t latent_dim, std::size_t action_dim,
                                std::span<const std::size_t> hidden, Rng& rng) {
    std::vector<std::size_t> critic_sizes{latent_dim + action_dim};
    std::vector<std::size_t> actor_sizes{latent_dim};
    std::vector<Activation> acts;
    for (std::size_t h : hidden) {
        critic_sizes.push_back(h);
        actor_sizes.push_back(h);
        acts.push_back(Activation::relu);
    }
    critic_sizes.push_back(1);
    actor_sizes.push_back(action_dim);
    std::vector<Activation> critic_acts = acts;
    critic_acts.push_back(Activation::linear);
    std::vector<Activation> actor_acts = acts;
    actor_acts.push_back(Activation::tanh);
    Network critic_net = Network::mlp(critic_sizes, critic_acts, rng);
    Network actor_net = Network::mlp(actor_sizes, actor_acts, rng);
    return ActorCritic(std::move(critic_net), std::move(actor_net));
}

Vec concat(std::span<const double> a, std::span<const double> b) {
    Vec out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

double ActorCritic::q(std::span<const double> latent, std::span<const double> action) const {
    return critic.forward(concat(latent, action))[0];
}

double ActorCritic::target_q(std::span<const double> latent, std::span<const double> action) const {
    return target_critic.forward(concat(latent, action))[0];
}

Action ActorCritic::act(std::span<const double> latent) const { return actor.forward(latent); }

Action ActorCritic::target_act(std::span<const double> latent) const {
    return target_actor.forward(latent);
}

double critic_target(double reward, std::span<const double> next_latent, const ActorCritic& ac,
                     double gamma, bool terminal) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("critic_target: gamma outside [0, 1]");
    if (terminal) return reward;
    const Action next_action = ac.target_act(next_latent);
    return reward + gamma * ac.target_q(next_latent, next_action);
}

TdQuantities td_quantities(const LatentSample& sample, const ActorCritic& ac, double gamma) {
    TdQuantities td;
    td.target = critic_target(sample.reward, sample.next_latent, ac, gamma, sample.terminal);
    td.advantage = td.target - ac.q(sample.latent, ac.act(sample.latent));
    return td;
}

LossGrad critic_loss_grad(std::span<const LatentSample> batch, const ActorCritic& ac, double gamma) {
    if (batch.empty()) throw std::invalid_argument("critic update: empty batch");
    LossGrad out;
    out.grads = ac.critic.zero_gradients();
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    Tape tape;
    for (const auto& s : batch) {
        const double y = critic_target(s.reward, s.next_latent, ac, gamma, s.terminal);
        const double q = ac.critic.forward(concat(s.latent, s.action), tape)[0];
        const double diff = q - y;
        out.loss += diff * diff * inv_n;
        const std::array<double, 1> g{2.0 * diff * inv_n};
        ac.critic.backward(tape, g, &out.grads);
    }
    return out;
}

void critic_update(std::span<const LatentSample> batch, ActorCritic& ac, double gamma, double lr) {
    LossGrad lg = critic_loss_grad(batch, ac, gamma);
    adam_step(ac.critic, lg.grads, ac.critic_opt, lr);
}

LossGrad ddpg_actor_loss_grad(std::span<const LatentSample> batch, const ActorCritic& ac) {
    if (batch.empty()) throw std::invalid_argument("actor update: empty batch");
    LossGrad out;
    out.grads = ac.actor.zero_gradients();
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    const std::size_t dz = ac.latent_dim();
    Tape actor_tape, critic_tape;
    for (const auto& s : batch) {
        const Vec& a = ac.actor.forward(s.latent, actor_tape);
        const double q = ac.critic.forward(concat(s.latent, a), critic_tape)[0];
        out.loss -= q * inv_n;
        const std::array<double, 1> g{-inv_n};
        const Vec input_grad = ac.critic.backward(critic_tape, g, nullptr);
        const std::span<const double> action_grad(input_grad.data() + dz, ac.action_dim());
        ac.actor.backward(actor_tape, action_grad, &out.grads);
    }
    return out;
}

void ddpg_actor_update(std::span<const LatentSample> batch, ActorCritic& ac, double lr) {
    LossGrad lg = ddpg_actor_loss_grad(batch, ac);
    adam_step(ac.actor, lg.grads, ac.actor_opt, lr);
}

LossGrad cacla_actor_loss_grad(std::span<const LatentSample> batch, std::span<const double> advantages,
                               const ActorCritic& ac) {
    if (batch.empty()) throw std::invalid_argument("actor update: empty batch");
    if (advantages.size() != batch.size())
        throw std::invalid_argument("cacla: one advantage per sample required");
    LossGrad out;
    out.grads = ac.actor.zero_gradients();
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    Tape tape;
    Vec g;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!(advantages[i] > 0.0)) continue;
        const Vec& mu = ac.actor.forward(batch[i].latent, tape);
        g.assign(mu.size(), 0.0);
        for (std::size_t k = 0; k < mu.size(); ++k) {
            const double diff = mu[k] - batch[i].action[k];
            out.loss += diff * diff * inv_n;
            g[k] = 2.0 * diff * inv_n;
        }
        ac.actor.backward(tape, g, &out.grads);
    }
    return out;
}

bool cacla_actor_update(std::span<const LatentSample> batch, std::span<const double> advantages,
                        ActorCritic& ac, double lr) {
    bool any = false;
    for (double d : advantages) any = any || d > 0.0;
    if (!any) return false;
    LossGrad lg = cacla_actor_loss_grad(batch, advantages, ac);
    adam_step(ac.actor, lg.grads, ac.actor_opt, lr);
    return true;
}

bool cacla_actor_update(std::span<const LatentSample> batch, ActorCritic& ac, double gamma, double lr) {
    Vec advantages;
    advantages.reserve(batch.size());
    for (const auto& s : batch) advantages.push_back(td_quantities(s, ac, gamma).advantage);
    return cacla_actor_update(batch, advantages, ac, lr);
}

Action add_exploration_noise(Action proposal, double noise_scale, Rng& rng) {
    if (noise_scale < 0.0) throw std::invalid_argument("exploration noise scale must be >= 0");
    if (noise_scale > 0.0) {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (auto& x : proposal) x += noise_scale * normal(rng);
    }
    return clip_action(std::move(proposal));
}

Action act_with_noise(std::span<const double> latent, const Network& actor, double noise_scale, Rng& rng) {
    return add_exploration_noise(actor.forward(latent), noise_scale, rng);
}

void soft_update_targets(ActorCritic& ac, double tau) {
    soft_update(ac.target_critic, ac.critic, tau);
    soft_update(ac.target_actor, ac.actor, tau);
}

}  // namespace dualsys
