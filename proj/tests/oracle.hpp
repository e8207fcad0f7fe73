#pragma once

// Independent extended-precision re-evaluation of networks and losses for
// finite-difference checks. Everything here is written straight from the
// formulas and shares no code with the library beyond reading parameters.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "dualsys/nn.hpp"

namespace oracle {

using LVec = std::vector<long double>;
using dualsys::Activation;
using dualsys::Gradients;
using dualsys::Network;

inline LVec widen(std::span<const double> v) { return LVec(v.begin(), v.end()); }

inline LVec eval(const Network& net, LVec x) {
    for (const auto& l : net.layers()) {
        LVec y(l.out);
        for (std::size_t i = 0; i < l.out; ++i) {
            long double z = l.bias[i];
            for (std::size_t j = 0; j < l.in; ++j) z += static_cast<long double>(l.weight[i * l.in + j]) * x[j];
            switch (l.act) {
                case Activation::linear: y[i] = z; break;
                case Activation::tanh: y[i] = std::tanh(z); break;
                case Activation::relu: y[i] = z > 0 ? z : 0; break;
            }
        }
        x = std::move(y);
    }
    return x;
}

/// Smallest |pre-activation| over the relu units of net at input x. Central
/// differences are only meaningful when this is well above the step size.
inline long double relu_margin(const Network& net, LVec x) {
    long double margin = INFINITY;
    for (const auto& l : net.layers()) {
        LVec y(l.out);
        for (std::size_t i = 0; i < l.out; ++i) {
            long double z = l.bias[i];
            for (std::size_t j = 0; j < l.in; ++j) z += static_cast<long double>(l.weight[i * l.in + j]) * x[j];
            switch (l.act) {
                case Activation::linear: y[i] = z; break;
                case Activation::tanh: y[i] = std::tanh(z); break;
                case Activation::relu:
                    margin = std::min(margin, std::abs(z));
                    y[i] = z > 0 ? z : 0;
                    break;
            }
        }
        x = std::move(y);
    }
    return margin;
}

inline LVec cat(const LVec& a, const LVec& b) {
    LVec out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline long double sq_dist(const LVec& a, const LVec& b) {
    long double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

/// Central differences of an extended-precision loss w.r.t. every
/// parameter of net (restored afterwards).
inline Gradients fd_gradient(Network& net, const std::function<long double()>& loss, double step = 1e-5) {
    Gradients g = net.zero_gradients();
    auto blocks = net.param_blocks();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t i = 0; i < blocks[b].size(); ++i) {
            const double saved = blocks[b][i];
            const double up_x = saved + step, down_x = saved - step;
            blocks[b][i] = up_x;
            const long double up = loss();
            blocks[b][i] = down_x;
            const long double down = loss();
            blocks[b][i] = saved;
            // Divide by the step actually taken after rounding.
            g.blocks[b][i] = static_cast<double>((up - down) / (static_cast<long double>(up_x) - down_x));
        }
    }
    return g;
}

/// Central differences w.r.t. a plain vector of doubles.
inline std::vector<double> fd_vector(std::vector<double>& x, const std::function<long double()>& loss,
                                     double step = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        const double up_x = saved + step, down_x = saved - step;
        x[i] = up_x;
        const long double up = loss();
        x[i] = down_x;
        const long double down = loss();
        x[i] = saved;
        g[i] = static_cast<double>((up - down) / (static_cast<long double>(up_x) - down_x));
    }
    return g;
}

inline double max_rel(std::span<const double> a, std::span<const double> n) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - n[i]) / std::max({std::abs(a[i]), std::abs(n[i]), 1e-8}));
    return worst;
}

}  // namespace oracle
