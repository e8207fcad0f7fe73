#pragma once

#include <cstddef>
#include <span>

#include "dualsys/nn.hpp"

namespace dualsys {

/// Latent world model owned by one map region: a next-latent head and an
/// extrinsic-reward head, both reading [latent, action].
struct LocalModel {
    Network dynamics;
    Network reward;
    AdamState dynamics_opt;
    AdamState reward_opt;

    LocalModel() = default;
    LocalModel(Network dynamics_net, Network reward_net);

    /// [dz+da] -> hidden tanh -> dz linear, and [dz+da] -> hidden tanh -> 1 linear.
    static LocalModel create(std::size_t latent_dim, std::size_t action_dim, std::size_t hidden, Rng& rng);

    std::size_t latent_dim() const { return dynamics.output_dim(); }
    std::size_t action_dim() const { return dynamics.input_dim() - dynamics.output_dim(); }
};

struct ModelPrediction {
    Vec next_latent;
    double reward = 0.0;
};

ModelPrediction model_predict(const LocalModel& model, std::span<const double> latent,
                              std::span<const double> action);

/// ||M(phi, a) - phi_next||^2 + (R(phi, a) - r_ext)^2.
double model_error(const LocalModel& model, std::span<const double> latent, std::span<const double> action,
                   double r_ext, std::span<const double> next_latent);

struct ModelLossGrad {
    double loss = 0.0;
    Gradients dynamics;
    Gradients reward;
};

ModelLossGrad model_loss_grad(const LocalModel& model, std::span<const double> latent,
                              std::span<const double> action, double r_ext,
                              std::span<const double> next_latent);

/// One Adam step on the single-transition model loss. Returns the error
/// measured before the step.
double model_update(LocalModel& model, std::span<const double> latent, std::span<const double> action,
                    double r_ext, std::span<const double> next_latent, double lr);

}  // namespace dualsys
