#include "dualsys/agent.hpp"

#include <random>
#include <stdexcept>

#include "dualsys/local_model.hpp"

namespace dualsys {

std::string to_string(DecisionKind k) { return k == DecisionKind::model_based ? "model_based" : "model_free"; }

DecisionKind arbitrate(std::optional<double> lp) {
    return lp.has_value() && *lp >= 0.0 ? DecisionKind::model_based : DecisionKind::model_free;
}

std::pair<std::size_t, std::size_t> decision_stats(std::span<const Decision> episode) {
    std::size_t mf = 0, mb = 0;
    for (const auto& d : episode) (d.kind == DecisionKind::model_based ? mb : mf) += 1;
    return {mf, mb};
}

namespace {

std::size_t pixel_capacity(const Config& c) { return uses_imagination(c.algo) ? c.pixel_capacity : c.buffer_capacity; }

}  // namespace

Agent::Agent(const Config& config, std::size_t obs_dim)
    : config_(config),
      rng_(seeded_stream(config.seed, 1)),
      model_rng_(std::make_shared<Rng>(seeded_stream(config.seed, 2))),
      pixel_(pixel_capacity(config)),
      latent_(config.latent_capacity) {
    config_.validate();
    perception_ = Perception::create(obs_dim, config_.latent_dim, config_.encoder_hidden, rng_);
    ac_ = ActorCritic::create(config_.latent_dim, GraspEnv::action_dim, config_.ac_hidden, rng_);
}

LocalModel Agent::make_local_model() {
    return LocalModel::create(config_.latent_dim, GraspEnv::action_dim, config_.model_hidden, *model_rng_);
}

void Agent::ensure_map(std::span<const double> latent) {
    if (map_) return;
    Vec w1(latent.begin(), latent.end());
    Vec w2 = w1;
    std::normal_distribution<double> jitter(0.0, 0.1);
    for (auto& x : w2) x += jitter(rng_);
    ItmSettings settings;
    settings.e_max = config_.e_max;
    settings.window = config_.window;
    settings.lag = config_.lag;
    auto models = model_rng_;
    const Config cfg = config_;
    map_.emplace(std::move(w1), std::move(w2), settings, [models, cfg]() {
        return LocalModel::create(cfg.latent_dim, GraspEnv::action_dim, cfg.model_hidden, *models);
    });
}

ActionChoice Agent::select_action(const Observation& s) {
    ActionChoice out;
    out.latent = perception_.encode(s);
    out.proposal = ac_.act(out.latent);

    if (uses_map(config_.algo)) {
        ensure_map(out.latent);
        const AdaptEvent ev = map_->adapt(out.latent);
        Decision& d = out.decision;
        d.node = ev.best;
        d.lp = map_->node(ev.best).progress.learning_progress();
        if (arbitrate(d.lp) == DecisionKind::model_based) {
            Rollout rollout =
                rollout_with_imagination(out.latent, ev.best, *map_, ac_.actor, config_.max_depth);
            if (uses_imagination(config_.algo)) out.imagined = rollout.imagined;
            if (uses_arbitration(config_.algo)) {
                try {
                    const PlanResult plan = plan_optimize(
                        rollout.trace, *map_,
                        PlanSettings{config_.desired_return, config_.plan_lr, config_.plan_iterations});
                    d.kind = DecisionKind::model_based;
                    d.horizon = plan.horizon;
                    out.proposal = plan.actions.front();
                } catch (const PlanningError&) {
                    d.downgraded = true;
                    out.imagined.clear();
                }
            }
        }
    }
    out.action = add_exploration_noise(out.proposal, config_.noise_scale, rng_);
    return out;
}

Action Agent::greedy_action(const Observation& s) const { return ac_.act(perception_.encode(s)); }

StepOutcome Agent::train_step(const ActionChoice& choice, const Observation& s, double r_ext,
                              const Observation& s_next, bool terminal) {
    StepOutcome out;
    out.action = choice.action;
    out.r_ext = r_ext;
    out.decision = choice.decision;

    if (map_ && choice.decision.node >= 0 && map_->contains(choice.decision.node)) {
        ItmNode& node = map_->node(choice.decision.node);
        const Vec next_latent = perception_.encode(s_next);
        const double err = model_update(node.model, choice.latent, choice.action, r_ext, next_latent, config_.lr_model);
        node.progress.record(err);
        out.model_error = err;
        out.r_int = node.progress.intrinsic_reward();
    }
    out.r_total = out.r_ext + out.r_int;

    pixel_.store(PixelTransition{s, choice.action, out.r_total, r_ext, s_next, terminal});
    if (uses_imagination(config_.algo)) {
        for (const auto& t : choice.imagined) latent_.store(t);
        out.imagined_count = choice.imagined.size();
    }

    const std::size_t starts = config_.learning_starts ? config_.learning_starts : config_.batch;
    if (pixel_.size() >= starts && config_.updates_per_step > 0) {
        for (int u = 0; u < config_.updates_per_step; ++u) gradient_phase();
        out.trained = true;
        soft_update_targets(ac_, config_.tau);
        perception_.soft_update_target(config_.tau);
    }
    return out;
}

std::vector<LatentSample> Agent::encode_batch(const std::vector<const PixelTransition*>& batch) const {
    std::vector<LatentSample> out;
    out.reserve(batch.size());
    for (const PixelTransition* t : batch)
        out.push_back(LatentSample{perception_.encode(t->s), t->a, t->r_total, perception_.encode_target(t->s_next),
                                   t->terminal});
    return out;
}

void Agent::gradient_phase() {
    const auto batch = pixel_.sample(config_.batch, rng_);
    const CombinedSettings cs{config_.lambda_rec, config_.lambda_q, config_.gamma, config_.lr_critic};
    const bool split = uses_imagination(config_.algo);
    combined_update(batch, perception_, ac_, cs, split ? CombinedMode::encoder_only : CombinedMode::joint);

    std::vector<LatentSample> samples = encode_batch(batch);
    if (split) {
        if (!latent_.empty()) {
            for (const LatentTransition* t : latent_.sample(config_.batch, rng_))
                samples.push_back(LatentSample{t->latent, t->action, t->reward, t->next_latent, false});
        }
        critic_update(samples, ac_, config_.gamma, config_.lr_critic);
    }
    if (uses_cacla(config_.algo))
        cacla_actor_update(samples, ac_, config_.gamma, config_.lr_actor);
    else
        ddpg_actor_update(samples, ac_, config_.lr_actor);
}

}  // namespace dualsys
