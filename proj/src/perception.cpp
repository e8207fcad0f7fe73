#include "dualsys/perception.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dualsys {

Perception::Perception(Network encoder, Network decoder)
    : encoder_(std::move(encoder)),
      decoder_(std::move(decoder)),
      target_encoder_(encoder_),
      encoder_opt_(encoder_),
      decoder_opt_(decoder_) {
    if (encoder_.output_dim() != decoder_.input_dim())
        throw std::invalid_argument("Perception: encoder output must match decoder input");
    if (decoder_.output_dim() != encoder_.input_dim())
        throw std::invalid_argument("Perception: decoder output must match observation dim");
}

Perception Perception::create(std::size_t obs_dim, std::size_t latent_dim, std::size_t hidden, Rng& rng) {
    const std::array<std::size_t, 3> enc_sizes{obs_dim, hidden, latent_dim};
    const std::array<std::size_t, 3> dec_sizes{latent_dim, hidden, obs_dim};
    const std::array<Activation, 2> acts{Activation::relu, Activation::linear};
    Network enc = Network::mlp(enc_sizes, acts, rng);
    Network dec = Network::mlp(dec_sizes, acts, rng);
    return Perception(std::move(enc), std::move(dec));
}

Vec Perception::encode(const Observation& s) const {
    if (s.size() != obs_dim()) throw std::invalid_argument("encode: observation dim mismatch");
    return encoder_.forward(s.values);
}

Vec Perception::encode_target(const Observation& s) const {
    if (s.size() != obs_dim()) throw std::invalid_argument("encode: observation dim mismatch");
    return target_encoder_.forward(s.values);
}

Vec Perception::decode(std::span<const double> latent) const {
    if (latent.size() != latent_dim()) throw std::invalid_argument("decode: latent dim mismatch");
    return decoder_.forward(latent);
}

CombinedLossGrad combined_loss_grad(PixelBatch batch, const Perception& perception, const ActorCritic& ac,
                                    const CombinedSettings& settings) {
    if (batch.empty()) throw std::invalid_argument("combined_update: empty batch");
    CombinedLossGrad out;
    out.encoder = perception.encoder().zero_gradients();
    out.decoder = perception.decoder().zero_gradients();
    out.critic = ac.critic.zero_gradients();

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    const std::size_t dz = perception.latent_dim();
    const bool want_rec = settings.lambda_rec != 0.0;
    const bool want_q = settings.lambda_q != 0.0;

    Tape enc_tape, dec_tape, critic_tape;
    Vec latent_grad(dz);
    Vec rec_grad;
    for (const PixelTransition* t : batch) {
        const Vec& latent = perception.encoder().forward(t->s.values, enc_tape);
        std::fill(latent_grad.begin(), latent_grad.end(), 0.0);

        const Vec& recon = perception.decoder().forward(latent, dec_tape);
        double rec = 0.0;
        rec_grad.assign(recon.size(), 0.0);
        for (std::size_t i = 0; i < recon.size(); ++i) {
            const double diff = recon[i] - t->s.values[i];
            rec += diff * diff;
            rec_grad[i] = settings.lambda_rec * 2.0 * diff * inv_n;
        }
        out.rec_loss += rec * inv_n;
        if (want_rec) {
            const Vec g = perception.decoder().backward(dec_tape, rec_grad, &out.decoder);
            for (std::size_t k = 0; k < dz; ++k) latent_grad[k] += g[k];
        }

        const double y = critic_target(t->r_total, perception.encode_target(t->s_next), ac, settings.gamma,
                                       t->terminal);
        const double q = ac.critic.forward(concat(latent, t->a), critic_tape)[0];
        const double diff = q - y;
        out.q_loss += diff * diff * inv_n;
        if (want_q) {
            const std::array<double, 1> g{settings.lambda_q * 2.0 * diff * inv_n};
            const Vec in_grad = ac.critic.backward(critic_tape, g, &out.critic);
            for (std::size_t k = 0; k < dz; ++k) latent_grad[k] += in_grad[k];
        }

        if (want_rec || want_q) perception.encoder().backward(enc_tape, latent_grad, &out.encoder);
    }
    out.loss = settings.lambda_rec * out.rec_loss + settings.lambda_q * out.q_loss;
    return out;
}

void combined_update(PixelBatch batch, Perception& perception, ActorCritic& ac,
                     const CombinedSettings& settings, CombinedMode mode) {
    if (batch.empty()) throw std::invalid_argument("combined_update: empty batch");
    if (settings.lambda_rec == 0.0 && settings.lambda_q == 0.0) return;
    CombinedLossGrad lg = combined_loss_grad(batch, perception, ac, settings);
    adam_step(perception.encoder(), lg.encoder, perception.encoder_opt(), settings.lr);
    adam_step(perception.decoder(), lg.decoder, perception.decoder_opt(), settings.lr);
    if (mode == CombinedMode::joint) adam_step(ac.critic, lg.critic, ac.critic_opt, settings.lr);
}

namespace {

template <typename PairAt>
LossGrad transfer_loss_grad_impl(std::size_t count, PairAt pair_at, const Network& encoder) {
    LossGrad out;
    out.grads = encoder.zero_gradients();
    const double inv_n = 1.0 / static_cast<double>(count);
    Tape sim_tape, real_tape;
    Vec g;
    for (std::size_t i = 0; i < count; ++i) {
        const ObservationPair& p = pair_at(i);
        const Vec& zs = encoder.forward(p.sim.values, sim_tape);
        const Vec& zr = encoder.forward(p.real.values, real_tape);
        g.resize(zs.size());
        double sq = 0.0;
        for (std::size_t k = 0; k < zs.size(); ++k) {
            const double d = zs[k] - zr[k];
            sq += d * d;
            g[k] = d * inv_n;
        }
        out.loss += 0.5 * sq * inv_n;
        encoder.backward(sim_tape, g, &out.grads);
        for (auto& x : g) x = -x;
        encoder.backward(real_tape, g, &out.grads);
    }
    return out;
}

double transfer_loss(std::span<const ObservationPair> pairs, const Network& encoder) {
    double total = 0.0;
    for (const auto& p : pairs) {
        const Vec zs = encoder.forward(p.sim.values);
        const Vec zr = encoder.forward(p.real.values);
        double sq = 0.0;
        for (std::size_t k = 0; k < zs.size(); ++k) sq += (zs[k] - zr[k]) * (zs[k] - zr[k]);
        total += 0.5 * sq;
    }
    return total / static_cast<double>(pairs.size());
}

}  // namespace

LossGrad transfer_loss_grad(std::span<const ObservationPair> pairs, const Network& encoder) {
    if (pairs.empty()) throw std::invalid_argument("transfer loss: empty pair set");
    return transfer_loss_grad_impl(
        pairs.size(), [&](std::size_t i) -> const ObservationPair& { return pairs[i]; }, encoder);
}

double mean_latent_distance(std::span<const ObservationPair> pairs, const Network& encoder) {
    if (pairs.empty()) throw std::invalid_argument("mean_latent_distance: empty pair set");
    double total = 0.0;
    for (const auto& p : pairs) {
        const Vec zs = encoder.forward(p.sim.values);
        const Vec zr = encoder.forward(p.real.values);
        double sq = 0.0;
        for (std::size_t k = 0; k < zs.size(); ++k) sq += (zs[k] - zr[k]) * (zs[k] - zr[k]);
        total += std::sqrt(sq);
    }
    return total / static_cast<double>(pairs.size());
}

AlignReport align_encoders(std::span<const ObservationPair> pairs, Network& encoder,
                           const AlignSettings& settings, Rng& rng) {
    if (pairs.empty()) throw std::invalid_argument("align_encoders: empty pair set");
    if (settings.batch == 0) throw std::invalid_argument("align_encoders: batch must be positive");
    for (const auto& p : pairs)
        if (p.sim.size() != encoder.input_dim() || p.real.size() != encoder.input_dim())
            throw std::invalid_argument("align_encoders: observation dim mismatch");

    AlignReport report;
    report.initial_mean_distance = mean_latent_distance(pairs, encoder);
    AdamState opt(encoder);
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 0; epoch < settings.epochs; ++epoch) {
        report.epoch_loss.push_back(transfer_loss(pairs, encoder));
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += settings.batch) {
            const std::size_t stop = std::min(order.size(), start + settings.batch);
            LossGrad lg = transfer_loss_grad_impl(
                stop - start,
                [&](std::size_t i) -> const ObservationPair& { return pairs[order[start + i]]; }, encoder);
            adam_step(encoder, lg.grads, opt, settings.lr);
        }
    }
    report.final_mean_distance = mean_latent_distance(pairs, encoder);
    return report;
}

}  // namespace dualsys
