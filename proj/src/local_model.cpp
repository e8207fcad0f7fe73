#include "dualsys/local_model.hpp"

#include <array>
#include <stdexcept>

#include "dualsys/actor_critic.hpp"

namespace dualsys {

LocalModel::LocalModel(Network dynamics_net, Network reward_net)
    : dynamics(std::move(dynamics_net)),
      reward(std::move(reward_net)),
      dynamics_opt(dynamics),
      reward_opt(reward) {
    if (dynamics.input_dim() != reward.input_dim() || reward.output_dim() != 1 ||
        dynamics.input_dim() <= dynamics.output_dim())
        throw std::invalid_argument("LocalModel: heads must share the [latent, action] input");
}

LocalModel LocalModel::create(std::size_t latent_dim, std::size_t action_dim, std::size_t hidden, Rng& rng) {
    const std::array<Activation, 2> acts{Activation::tanh, Activation::linear};
    const std::array<std::size_t, 3> dyn_sizes{latent_dim + action_dim, hidden, latent_dim};
    const std::array<std::size_t, 3> rew_sizes{latent_dim + action_dim, hidden, 1};
    Network dyn = Network::mlp(dyn_sizes, acts, rng);
    Network rew = Network::mlp(rew_sizes, acts, rng);
    return LocalModel(std::move(dyn), std::move(rew));
}

ModelPrediction model_predict(const LocalModel& model, std::span<const double> latent,
                              std::span<const double> action) {
    const Vec input = concat(latent, action);
    if (input.size() != model.dynamics.input_dim())
        throw std::invalid_argument("model_predict: latent/action dims do not match the model");
    ModelPrediction p;
    p.next_latent = model.dynamics.forward(input);
    p.reward = model.reward.forward(input)[0];
    return p;
}

double model_error(const LocalModel& model, std::span<const double> latent, std::span<const double> action,
                   double r_ext, std::span<const double> next_latent) {
    const ModelPrediction p = model_predict(model, latent, action);
    if (next_latent.size() != p.next_latent.size())
        throw std::invalid_argument("model_error: next latent dim mismatch");
    double e = 0.0;
    for (std::size_t k = 0; k < p.next_latent.size(); ++k) {
        const double d = p.next_latent[k] - next_latent[k];
        e += d * d;
    }
    e += (p.reward - r_ext) * (p.reward - r_ext);
    return e;
}

ModelLossGrad model_loss_grad(const LocalModel& model, std::span<const double> latent,
                              std::span<const double> action, double r_ext,
                              std::span<const double> next_latent) {
    const Vec input = concat(latent, action);
    if (input.size() != model.dynamics.input_dim() || next_latent.size() != model.latent_dim())
        throw std::invalid_argument("model_update: dims do not match the model");
    ModelLossGrad out;
    out.dynamics = model.dynamics.zero_gradients();
    out.reward = model.reward.zero_gradients();

    Tape tape;
    const Vec& pred = model.dynamics.forward(input, tape);
    Vec g(pred.size());
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double d = pred[k] - next_latent[k];
        out.loss += d * d;
        g[k] = 2.0 * d;
    }
    model.dynamics.backward(tape, g, &out.dynamics);

    const double r = model.reward.forward(input, tape)[0];
    const double dr = r - r_ext;
    out.loss += dr * dr;
    const std::array<double, 1> gr{2.0 * dr};
    model.reward.backward(tape, gr, &out.reward);
    return out;
}

double model_update(LocalModel& model, std::span<const double> latent, std::span<const double> action,
                    double r_ext, std::span<const double> next_latent, double lr) {
    ModelLossGrad lg = model_loss_grad(model, latent, action, r_ext, next_latent);
    adam_step(model.dynamics, lg.dynamics, model.dynamics_opt, lr);
    adam_step(model.reward, lg.reward, model.reward_opt, lr);
    return lg.loss;
}

}  // namespace dualsys
