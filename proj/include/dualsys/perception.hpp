#pragma once

// Dense autoencoder producing the latent state shared by the critic, the
// actor, the topological map and the local world models. The encoder is
// trained jointly on reconstruction and value prediction.

#include <cstddef>
#include <span>
#include <vector>

#include "dualsys/actor_critic.hpp"
#include "dualsys/nn.hpp"
#include "dualsys/observation.hpp"

namespace dualsys {

class Perception {
public:
    Perception() = default;
    /// The target encoder starts as an exact copy of the encoder.
    Perception(Network encoder, Network decoder);

    /// encoder: obs -> hidden relu -> latent linear; decoder mirrored.
    static Perception create(std::size_t obs_dim, std::size_t latent_dim, std::size_t hidden, Rng& rng);

    std::size_t obs_dim() const { return encoder_.input_dim(); }
    std::size_t latent_dim() const { return encoder_.output_dim(); }

    Vec encode(const Observation& s) const;
    Vec encode_target(const Observation& s) const;
    Vec decode(std::span<const double> latent) const;

    const Network& encoder() const { return encoder_; }
    const Network& decoder() const { return decoder_; }
    const Network& target_encoder() const { return target_encoder_; }
    Network& encoder() { return encoder_; }
    Network& decoder() { return decoder_; }
    Network& target_encoder() { return target_encoder_; }
    AdamState& encoder_opt() { return encoder_opt_; }
    AdamState& decoder_opt() { return decoder_opt_; }

    void soft_update_target(double tau) { soft_update(target_encoder_, encoder_, tau); }

private:
    Network encoder_;
    Network decoder_;
    Network target_encoder_;
    AdamState encoder_opt_;
    AdamState decoder_opt_;
};

enum class CombinedMode { joint, encoder_only };

struct CombinedSettings {
    double lambda_rec = 0.1;
    double lambda_q = 1.0;
    double gamma = 0.99;
    double lr = 1e-3;
};

struct CombinedLossGrad {
    double loss = 0.0;
    double rec_loss = 0.0;  // mean ||g(f(s)) - s||^2
    double q_loss = 0.0;    // mean (y - Q(f(s), a))^2
    Gradients encoder;
    Gradients decoder;
    Gradients critic;
};

using PixelBatch = std::span<const PixelTransition* const>;

/// lambda_rec * L_rec + lambda_q * L_Q averaged over the batch. Targets y use
/// the target encoder, target actor and target critic and are held constant.
CombinedLossGrad combined_loss_grad(PixelBatch batch, const Perception& perception, const ActorCritic& ac,
                                    const CombinedSettings& settings);

/// One Adam step on the combined loss. joint moves encoder, decoder and
/// critic; encoder_only leaves the critic (and its optimizer) untouched.
void combined_update(PixelBatch batch, Perception& perception, ActorCritic& ac,
                     const CombinedSettings& settings, CombinedMode mode);

struct ObservationPair {
    Observation sim;
    Observation real;
};

struct AlignSettings {
    int epochs = 200;
    std::size_t batch = 512;
    double lr = 1e-3;
};

struct AlignReport {
    double initial_mean_distance = 0.0;
    double final_mean_distance = 0.0;
    std::vector<double> epoch_loss;  // mean L_Transfer before each epoch
};

/// Mean over pairs of 0.5 * ||f(sim) - f(real)||^2, and its encoder gradient
/// (both branches go through the same encoder).
LossGrad transfer_loss_grad(std::span<const ObservationPair> pairs, const Network& encoder);

double mean_latent_distance(std::span<const ObservationPair> pairs, const Network& encoder);

/// Minibatch Adam descent on L_Transfer over shuffled pairs.
AlignReport align_encoders(std::span<const ObservationPair> pairs, Network& encoder,
                           const AlignSettings& settings, Rng& rng);

}  // namespace dualsys
