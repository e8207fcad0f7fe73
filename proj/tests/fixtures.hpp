#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "dualsys/nn.hpp"
#include "dualsys/observation.hpp"

namespace fixtures {

using dualsys::Activation;
using dualsys::Network;
using dualsys::Rng;
using dualsys::Vec;

inline Vec uniform_vec(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vec v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

inline dualsys::Observation unit_obs(std::size_t n, Rng& rng) {
    return dualsys::Observation::vector(uniform_vec(n, rng, 0.0, 1.0));
}

inline Network net(std::vector<std::size_t> sizes, std::vector<Activation> acts, std::uint64_t seed) {
    Rng rng(seed);
    return Network::mlp(sizes, acts, rng);
}

/// Single linear layer with explicit weights.
inline Network linear(std::size_t in, std::size_t out, Vec weight, Vec bias) {
    dualsys::Layer l;
    l.in = in;
    l.out = out;
    l.weight = std::move(weight);
    l.bias = std::move(bias);
    l.act = Activation::linear;
    return Network({l});
}

inline Network identity(std::size_t n) {
    Vec w(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) w[i * n + i] = 1.0;
    return linear(n, n, w, Vec(n, 0.0));
}

}  // namespace fixtures
