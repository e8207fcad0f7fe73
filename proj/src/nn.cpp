#include "dualsys/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dualsys {

std::string to_string(Activation act) {
    switch (act) {
        case Activation::linear: return "linear";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
    }
    return "linear";
}

Activation activation_from_string(const std::string& name) {
    if (name == "linear") return Activation::linear;
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    throw std::invalid_argument("unknown activation: " + name);
}

// ---------------------------------------------------------------- Gradients

void Gradients::set_zero() {
    for (auto& b : blocks) std::fill(b.begin(), b.end(), 0.0);
}

void Gradients::scale(double factor) {
    for (auto& b : blocks)
        for (auto& x : b) x *= factor;
}

void Gradients::add(const Gradients& other, double factor) {
    if (other.blocks.size() != blocks.size())
        throw std::invalid_argument("Gradients::add: block count mismatch");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (other.blocks[i].size() != blocks[i].size())
            throw std::invalid_argument("Gradients::add: block size mismatch");
        for (std::size_t j = 0; j < blocks[i].size(); ++j) blocks[i][j] += factor * other.blocks[i][j];
    }
}

bool Gradients::all_finite() const {
    for (const auto& b : blocks)
        for (double x : b)
            if (!std::isfinite(x)) return false;
    return true;
}

double Gradients::max_abs() const {
    double m = 0.0;
    for (const auto& b : blocks)
        for (double x : b) m = std::max(m, std::abs(x));
    return m;
}

// ------------------------------------------------------------------ Network

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) { validate(); }

void Network::validate() const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        if (l.in == 0 || l.out == 0) throw std::invalid_argument("Network: zero-sized layer");
        if (l.weight.size() != l.in * l.out || l.bias.size() != l.out)
            throw std::invalid_argument("Network: parameter storage does not match layer dims");
        if (i > 0 && layers_[i - 1].out != l.in)
            throw std::invalid_argument("Network: consecutive layer dims are not chain-compatible");
        for (double x : l.weight)
            if (!std::isfinite(x)) throw std::invalid_argument("Network: non-finite weight");
        for (double x : l.bias)
            if (!std::isfinite(x)) throw std::invalid_argument("Network: non-finite bias");
    }
}

namespace {

std::vector<Layer> make_layers(std::span<const std::size_t> sizes, std::span<const Activation> acts) {
    if (sizes.size() < 2 || acts.size() + 1 != sizes.size())
        throw std::invalid_argument("mlp: need sizes.size() == acts.size() + 1 >= 2");
    std::vector<Layer> layers;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        Layer l;
        l.in = sizes[i];
        l.out = sizes[i + 1];
        l.weight.assign(l.in * l.out, 0.0);
        l.bias.assign(l.out, 0.0);
        l.act = acts[i];
        layers.push_back(std::move(l));
    }
    return layers;
}

inline double activate(Activation act, double z) {
    switch (act) {
        case Activation::tanh: return std::tanh(z);
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::linear: break;
    }
    return z;
}

// Derivative expressed through the post-activation value y.
inline double activation_slope(Activation act, double y) {
    switch (act) {
        case Activation::tanh: return 1.0 - y * y;
        case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
        case Activation::linear: break;
    }
    return 1.0;
}

}  // namespace

Network Network::mlp(std::span<const std::size_t> sizes, std::span<const Activation> acts, Rng& rng) {
    auto layers = make_layers(sizes, acts);
    for (auto& l : layers) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& x : l.weight) x = dist(rng);
        for (auto& x : l.bias) x = dist(rng);
    }
    return Network(std::move(layers));
}

Network Network::zeros(std::span<const std::size_t> sizes, std::span<const Activation> acts) {
    return Network(make_layers(sizes, acts));
}

std::size_t Network::input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
std::size_t Network::output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }

std::size_t Network::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

bool Network::same_shape(const Network& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (layers_[i].in != other.layers_[i].in || layers_[i].out != other.layers_[i].out) return false;
    return true;
}

std::vector<std::span<double>> Network::param_blocks() {
    std::vector<std::span<double>> out;
    out.reserve(2 * layers_.size());
    for (auto& l : layers_) {
        out.emplace_back(l.weight);
        out.emplace_back(l.bias);
    }
    return out;
}

std::vector<std::span<const double>> Network::param_blocks() const {
    std::vector<std::span<const double>> out;
    out.reserve(2 * layers_.size());
    for (const auto& l : layers_) {
        out.emplace_back(l.weight);
        out.emplace_back(l.bias);
    }
    return out;
}

Gradients Network::zero_gradients() const {
    Gradients g;
    g.blocks.reserve(2 * layers_.size());
    for (const auto& l : layers_) {
        g.blocks.emplace_back(l.weight.size(), 0.0);
        g.blocks.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

Vec Network::forward(std::span<const double> input) const {
    Tape tape;
    forward(input, tape);
    return std::move(tape.acts.back());
}

const Vec& Network::forward(std::span<const double> input, Tape& tape) const {
    if (layers_.empty()) throw std::invalid_argument("forward: empty network");
    if (input.size() != input_dim())
        throw std::invalid_argument("forward: input dim " + std::to_string(input.size()) +
                                    " does not match network input dim " +
                                    std::to_string(input_dim()));
    tape.acts.resize(layers_.size() + 1);
    tape.acts[0].assign(input.begin(), input.end());
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const Layer& l = layers_[li];
        const Vec& x = tape.acts[li];
        Vec& y = tape.acts[li + 1];
        y.resize(l.out);
        for (std::size_t r = 0; r < l.out; ++r) {
            const double* row = l.weight.data() + r * l.in;
            double z = l.bias[r];
            for (std::size_t c = 0; c < l.in; ++c) z += row[c] * x[c];
            y[r] = activate(l.act, z);
        }
    }
    return tape.acts.back();
}

Vec Network::backward(const Tape& tape, std::span<const double> output_grad, Gradients* grads) const {
    if (tape.acts.size() != layers_.size() + 1)
        throw std::invalid_argument("backward: tape does not belong to this network");
    if (output_grad.size() != output_dim())
        throw std::invalid_argument("backward: output_grad dim does not match network output dim");
    if (grads && grads->blocks.size() != 2 * layers_.size())
        throw std::invalid_argument("backward: gradient buffer shape mismatch");

    Vec upstream(output_grad.begin(), output_grad.end());
    Vec delta;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const Layer& l = layers_[li];
        const Vec& x = tape.acts[li];
        const Vec& y = tape.acts[li + 1];
        delta.resize(l.out);
        for (std::size_t r = 0; r < l.out; ++r) {
            delta[r] = upstream[r] * activation_slope(l.act, y[r]);
            if (!std::isfinite(delta[r]))
                throw NumericError("backward: non-finite gradient at layer " +
                                         std::to_string(li) + ", unit " + std::to_string(r));
        }
        if (grads) {
            Vec& dw = grads->blocks[2 * li];
            Vec& db = grads->blocks[2 * li + 1];
            for (std::size_t r = 0; r < l.out; ++r) {
                const double d = delta[r];
                if (d == 0.0) continue;
                double* row = dw.data() + r * l.in;
                for (std::size_t c = 0; c < l.in; ++c) row[c] += d * x[c];
                db[r] += d;
            }
        }
        upstream.assign(l.in, 0.0);
        for (std::size_t r = 0; r < l.out; ++r) {
            const double d = delta[r];
            if (d == 0.0) continue;
            const double* row = l.weight.data() + r * l.in;
            for (std::size_t c = 0; c < l.in; ++c) upstream[c] += row[c] * d;
        }
    }
    return upstream;
}

std::uint64_t Network::param_hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xffU;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& l : layers_) {
        mix(l.in);
        mix(l.out);
        for (double x : l.weight) mix(std::bit_cast<std::uint64_t>(x));
        for (double x : l.bias) mix(std::bit_cast<std::uint64_t>(x));
    }
    return h;
}

GradientBundle backward(const Network& net, std::span<const double> input,
                        std::span<const double> output_grad) {
    Tape tape;
    net.forward(input, tape);
    GradientBundle out;
    out.params = net.zero_gradients();
    out.input = net.backward(tape, output_grad, &out.params);
    return out;
}

// --------------------------------------------------------------- optimizers

AdamState::AdamState(const Network& net) : m(net.zero_gradients()), v(net.zero_gradients()) {}

void adam_step(Network& params, const Gradients& grads, AdamState& state, double lr) {
    auto blocks = params.param_blocks();
    if (grads.blocks.size() != blocks.size() || state.m.blocks.size() != blocks.size() ||
        state.v.blocks.size() != blocks.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    for (std::size_t b = 0; b < blocks.size(); ++b)
        if (grads.blocks[b].size() != blocks[b].size() || state.m.blocks[b].size() != blocks[b].size() ||
            state.v.blocks[b].size() != blocks[b].size())
            throw std::invalid_argument("adam_step: shape mismatch");

    state.step += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        auto p = blocks[b];
        const Vec& g = grads.blocks[b];
        Vec& m = state.m.blocks[b];
        Vec& v = state.v.blocks[b];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

void soft_update(Network& target, const Network& source, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("soft_update: tau must lie in [0, 1]");
    if (!target.same_shape(source)) throw std::invalid_argument("soft_update: shape mismatch");
    auto dst = target.param_blocks();
    auto src = source.param_blocks();
    for (std::size_t b = 0; b < dst.size(); ++b)
        for (std::size_t i = 0; i < dst[b].size(); ++i)
            dst[b][i] = tau * src[b][i] + (1.0 - tau) * dst[b][i];
}

// ------------------------------------------------------ finite differences

Gradients numeric_gradient(Network& net, const std::function<double()>& loss, double step) {
    Gradients g = net.zero_gradients();
    auto blocks = net.param_blocks();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t i = 0; i < blocks[b].size(); ++i) {
            const double saved = blocks[b][i];
            blocks[b][i] = saved + step;
            const double up = loss();
            blocks[b][i] = saved - step;
            const double down = loss();
            blocks[b][i] = saved;
            g.blocks[b][i] = (up - down) / (2.0 * step);
        }
    }
    return g;
}

double max_relative_error(const Gradients& analytic, const Gradients& numeric) {
    if (analytic.blocks.size() != numeric.blocks.size())
        throw std::invalid_argument("max_relative_error: shape mismatch");
    double worst = 0.0;
    for (std::size_t b = 0; b < analytic.blocks.size(); ++b) {
        if (analytic.blocks[b].size() != numeric.blocks[b].size())
            throw std::invalid_argument("max_relative_error: shape mismatch");
        for (std::size_t i = 0; i < analytic.blocks[b].size(); ++i) {
            const double a = analytic.blocks[b][i];
            const double n = numeric.blocks[b][i];
            const double denom = std::max({std::abs(a), std::abs(n), 1e-8});
            worst = std::max(worst, std::abs(a - n) / denom);
        }
    }
    return worst;
}

double finite_diff_check(const Network& net, std::span<const double> input, const OutputLoss& loss,
                         double step) {
    Tape tape;
    const Vec& out = net.forward(input, tape);
    const Vec out_grad = loss.gradient(out);
    Gradients analytic = net.zero_gradients();
    net.backward(tape, out_grad, &analytic);

    Network probe = net;
    Gradients numeric = numeric_gradient(
        probe, [&] { return loss.value(probe.forward(input)); }, step);
    return max_relative_error(analytic, numeric);
}

// ---------------------------------------------------------------- snapshots

void save_network(std::ostream& os, const Network& net) {
    const auto old_precision = os.precision(17);
    os << "dualsys-net 1\n";
    os << "layers " << net.layers().size() << "\n";
    for (const auto& l : net.layers()) {
        os << "layer " << l.in << ' ' << l.out << ' ' << to_string(l.act) << "\n";
        for (std::size_t i = 0; i < l.weight.size(); ++i) os << (i ? " " : "") << l.weight[i];
        os << "\n";
        for (std::size_t i = 0; i < l.bias.size(); ++i) os << (i ? " " : "") << l.bias[i];
        os << "\n";
    }
    os << "end\n";
    os.precision(old_precision);
}

Network load_network(std::istream& is) {
    std::string tag;
    int version = 0;
    if (!(is >> tag >> version) || tag != "dualsys-net" || version != 1)
        throw std::runtime_error("load_network: bad header");
    std::size_t count = 0;
    if (!(is >> tag >> count) || tag != "layers") throw std::runtime_error("load_network: bad layer count");
    std::vector<Layer> layers(count);
    for (auto& l : layers) {
        std::string act;
        if (!(is >> tag >> l.in >> l.out >> act) || tag != "layer")
            throw std::runtime_error("load_network: bad layer header");
        l.act = activation_from_string(act);
        l.weight.resize(l.in * l.out);
        l.bias.resize(l.out);
        for (auto& x : l.weight)
            if (!(is >> x)) throw std::runtime_error("load_network: truncated weights");
        for (auto& x : l.bias)
            if (!(is >> x)) throw std::runtime_error("load_network: truncated biases");
    }
    if (!(is >> tag) || tag != "end") throw std::runtime_error("load_network: missing end marker");
    return Network(std::move(layers));
}

}  // namespace dualsys
