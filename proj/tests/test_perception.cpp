#include <cmath>
#include <vector>

#include "doctest.h"
#include "dualsys/grasp_env.hpp"
#include "dualsys/perception.hpp"
#include "fixtures.hpp"
#include "loss_oracles.hpp"
#include "oracle.hpp"

using namespace dualsys;

namespace {

struct Fixture {
    Perception perception;
    ActorCritic ac;
    std::vector<PixelTransition> data;
    std::vector<const PixelTransition*> batch;
};

Fixture make_fixture(std::uint64_t seed, std::size_t obs_dim = 6, std::size_t dz = 3, std::size_t n = 4) {
    Rng rng(seed);
    Fixture f;
    f.perception = Perception::create(obs_dim, dz, 7, rng);
    // Make the target encoder differ from the online one.
    Rng rng2(seed + 500);
    f.perception.target_encoder() = Perception::create(obs_dim, dz, 7, rng2).encoder();
    const std::vector<std::size_t> hidden{6};
    f.ac = ActorCritic::create(dz, 2, hidden, rng);
    for (std::size_t i = 0; i < n; ++i) {
        PixelTransition t;
        t.s = fixtures::unit_obs(obs_dim, rng);
        t.a = fixtures::uniform_vec(2, rng);
        t.r_ext = fixtures::uniform_vec(1, rng)[0];
        t.r_total = t.r_ext + 0.1;
        t.s_next = fixtures::unit_obs(obs_dim, rng);
        t.terminal = i == 1;
        f.data.push_back(t);
    }
    for (const auto& t : f.data) f.batch.push_back(&t);
    return f;
}

long double oracle_combined(const Fixture& f, const CombinedSettings& cs) {
    return oracle::combined_loss(f.perception, f.ac, f.data, cs);
}

std::vector<ObservationPair> render_pairs(std::size_t n, std::uint64_t seed) {
    EnvConfig cfg;
    cfg.image_size = 8;
    GraspEnv env(cfg);
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-0.9, 0.9), ap(-1.0, 1.0);
    std::vector<ObservationPair> out;
    for (std::size_t i = 0; i < n; ++i) {
        EnvState st;
        st.hand = {u(rng), u(rng)};
        st.target = {u(rng), u(rng)};
        st.aperture = ap(rng);
        out.push_back({env.render(st, ObservationMode::image_sim), env.render(st, ObservationMode::image_real)});
    }
    return out;
}

}  // namespace

TEST_CASE("encode: identity layer returns the observation") {
    const Perception p(fixtures::identity(2), fixtures::identity(2));
    const Vec z = p.encode(Observation::vector({0.2, 0.8}));
    CHECK(z == Vec{0.2, 0.8});
}

TEST_CASE("encode: deterministic and delegates to the encoder network") {
    Rng rng(3);
    const Perception p = Perception::create(10, 4, 16, rng);
    const Observation s = fixtures::unit_obs(10, rng);
    CHECK(p.encode(s) == p.encode(s));
    CHECK(p.encode(s) == p.encoder().forward(s.values));
    CHECK_THROWS_AS(p.encode(fixtures::unit_obs(9, rng)), std::invalid_argument);
}

TEST_CASE("decode: zero decoder maps the zero latent to zero") {
    const std::vector<std::size_t> sizes{3, 5, 6};
    const std::vector<Activation> acts{Activation::relu, Activation::linear};
    Rng rng(1);
    const Perception p(Network::mlp(std::vector<std::size_t>{6, 5, 3}, acts, rng), Network::zeros(sizes, acts));
    const Vec r = p.decode(Vec(3, 0.0));
    CHECK(r.size() == 6);
    for (double x : r) CHECK(x == 0.0);
    CHECK_THROWS_AS(p.decode(Vec(2, 0.0)), std::invalid_argument);
}

TEST_CASE("decode: output length equals observation length") {
    for (std::size_t obs : {5u, 64u, 256u}) {
        Rng rng(obs);
        const Perception p = Perception::create(obs, 8, 12, rng);
        CHECK(p.decode(Vec(8, 0.1)).size() == obs);
    }
}

TEST_CASE("decode(encode(s)) overfits one sample") {
    Rng rng(2);
    Perception p = Perception::create(5, 4, 16, rng);
    const std::vector<std::size_t> hidden{8};
    ActorCritic ac = ActorCritic::create(4, 3, hidden, rng);
    PixelTransition t{fixtures::unit_obs(5, rng), Vec{0.1, 0.2, 0.3}, 0.0, 0.0, fixtures::unit_obs(5, rng), true};
    const std::vector<const PixelTransition*> batch{&t};
    const CombinedSettings cs{1.0, 0.0, 0.99, 1e-3};
    for (int i = 0; i < 5000; ++i) combined_update(batch, p, ac, cs, CombinedMode::joint);
    const Vec r = p.decode(p.encode(t.s));
    double err = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) err += (r[i] - t.s.values[i]) * (r[i] - t.s.values[i]);
    CHECK(err < 1e-3);
}

TEST_CASE("combined: zero weights change nothing") {
    Fixture f = make_fixture(4);
    const auto he = f.perception.encoder().param_hash();
    const auto hd = f.perception.decoder().param_hash();
    const auto hc = f.ac.critic.param_hash();
    combined_update(f.batch, f.perception, f.ac, CombinedSettings{0.0, 0.0, 0.99, 1e-2}, CombinedMode::joint);
    CHECK(f.perception.encoder().param_hash() == he);
    CHECK(f.perception.decoder().param_hash() == hd);
    CHECK(f.ac.critic.param_hash() == hc);
}

TEST_CASE("combined: encoder_only leaves the critic bit-identical") {
    Fixture f = make_fixture(5);
    const auto hc = f.ac.critic.param_hash();
    const auto he = f.perception.encoder().param_hash();
    combined_update(f.batch, f.perception, f.ac, CombinedSettings{}, CombinedMode::encoder_only);
    CHECK(f.ac.critic.param_hash() == hc);
    CHECK(f.ac.critic_opt.step == 0);
    CHECK(f.perception.encoder().param_hash() != he);
    combined_update(f.batch, f.perception, f.ac, CombinedSettings{}, CombinedMode::joint);
    CHECK(f.ac.critic.param_hash() != hc);
}

TEST_CASE("combined: empty batch is rejected") {
    Fixture f = make_fixture(6);
    std::vector<const PixelTransition*> empty;
    CHECK_THROWS_AS(combined_update(empty, f.perception, f.ac, CombinedSettings{}, CombinedMode::joint),
                    std::invalid_argument);
}

TEST_CASE("combined: gradient is 0.1 grad L_rec + grad L_Q (central differences)") {
    const CombinedSettings cs{0.1, 1.0, 0.99, 1e-3};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Fixture f = make_fixture(seed + 10);
        const CombinedLossGrad lg = combined_loss_grad(f.batch, f.perception, f.ac, cs);
        CHECK(lg.loss == doctest::Approx(static_cast<double>(oracle_combined(f, cs))).epsilon(1e-12));
        const auto L = [&] { return oracle_combined(f, cs); };
        CHECK(max_relative_error(lg.encoder, oracle::fd_gradient(f.perception.encoder(), L)) < 1e-4);
        CHECK(max_relative_error(lg.decoder, oracle::fd_gradient(f.perception.decoder(), L)) < 1e-4);
        CHECK(max_relative_error(lg.critic, oracle::fd_gradient(f.ac.critic, L)) < 1e-4);

        // The weighted sum of the separate gradients.
        const auto rec = combined_loss_grad(f.batch, f.perception, f.ac, CombinedSettings{1.0, 0.0, 0.99, 1e-3});
        const auto q = combined_loss_grad(f.batch, f.perception, f.ac, CombinedSettings{0.0, 1.0, 0.99, 1e-3});
        Gradients sum = rec.encoder;
        sum.scale(0.1);
        sum.add(q.encoder);
        CHECK(max_relative_error(lg.encoder, sum) < 1e-12);
    }
}

TEST_CASE("combined: single-sample loss decreases monotonically after 100 steps") {
    Fixture f = make_fixture(77, 6, 3, 1);
    const CombinedSettings cs{0.1, 1.0, 0.99, 1e-3};
    double prev = combined_loss_grad(f.batch, f.perception, f.ac, cs).loss;
    int increases = 0;
    for (int i = 0; i < 600; ++i) {
        combined_update(f.batch, f.perception, f.ac, cs, CombinedMode::joint);
        const double now = combined_loss_grad(f.batch, f.perception, f.ac, cs).loss;
        if (i >= 100 && now > prev) ++increases;
        prev = now;
    }
    CHECK(increases == 0);
}

TEST_CASE("transfer: identical renderers give zero loss") {
    auto pairs = render_pairs(10, 1);
    for (auto& p : pairs) p.real = p.sim;
    Rng rng(1);
    const Network enc = Perception::create(64, 4, 16, rng).encoder();
    CHECK(transfer_loss_grad(pairs, enc).loss == 0.0);
    CHECK(mean_latent_distance(pairs, enc) == 0.0);
}

TEST_CASE("transfer: gradient through both branches matches central differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto pairs = render_pairs(3, seed);
        Rng rng(seed + 40);
        Network enc = Network::mlp(std::vector<std::size_t>{64, 6, 3},
                                   std::vector<Activation>{Activation::tanh, Activation::linear}, rng);
        const LossGrad lg = transfer_loss_grad(pairs, enc);
        CHECK(lg.loss == doctest::Approx(static_cast<double>(oracle::transfer_loss(pairs, enc))).epsilon(1e-12));
        CHECK(max_relative_error(lg.grads, oracle::fd_gradient(enc, [&] { return oracle::transfer_loss(pairs, enc); })) <
              1e-4);
    }
}

TEST_CASE("transfer: empty pair set is rejected") {
    Rng rng(1);
    Network enc = Perception::create(64, 4, 16, rng).encoder();
    std::vector<ObservationPair> none;
    CHECK_THROWS_AS(align_encoders(none, enc, AlignSettings{}, rng), std::invalid_argument);
}

TEST_CASE("transfer: single pair latents coincide after enough steps") {
    const auto pairs = render_pairs(1, 9);
    Rng rng(2);
    Network enc = Perception::create(64, 4, 16, rng).encoder();
    const AlignReport rep = align_encoders(pairs, enc, AlignSettings{3000, 1, 1e-3}, rng);
    const Vec a = enc.forward(pairs[0].sim.values);
    const Vec b = enc.forward(pairs[0].real.values);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) < 1e-3);
    CHECK(rep.final_mean_distance < rep.initial_mean_distance);
}

TEST_CASE("transfer: alignment shrinks the paired latent distance") {
    const auto pairs = render_pairs(300, 3);
    Rng rng(5);
    Network enc = Perception::create(64, 8, 32, rng).encoder();
    const AlignReport rep = align_encoders(pairs, enc, AlignSettings{40, 64, 1e-3}, rng);
    CHECK(rep.epoch_loss.size() == 40);
    CHECK(rep.final_mean_distance < 0.5 * rep.initial_mean_distance);
    CHECK(rep.final_mean_distance == doctest::Approx(mean_latent_distance(pairs, enc)));
}
