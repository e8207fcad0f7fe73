#pragma once

// Small dense feedforward networks with exact reverse-mode gradients.
//
// A Network is a chain of fully connected layers y = act(W x + b). All
// arithmetic is double precision. Evaluation is const and keeps no hidden
// state; intermediate activations live in a caller-owned Tape so the same
// network can be evaluated repeatedly without allocation churn.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualsys {

using Vec = std::vector<double>;
using Rng = std::mt19937_64;

enum class Activation { linear, tanh, relu };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

/// Raised when a forward or backward pass produces a non-finite value.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    Vec weight;  // row-major, out x in
    Vec bias;    // out
    Activation act = Activation::linear;

    double& w(std::size_t row, std::size_t col) { return weight[row * in + col]; }
    double w(std::size_t row, std::size_t col) const { return weight[row * in + col]; }
};

/// Post-activation outputs of every layer; acts[0] is the input.
struct Tape {
    std::vector<Vec> acts;

    const Vec& output() const { return acts.back(); }
};

/// Gradient (or any other per-parameter quantity) laid out block by block:
/// blocks[2*i] mirrors layer i's weight, blocks[2*i+1] its bias.
struct Gradients {
    std::vector<Vec> blocks;

    void set_zero();
    void scale(double factor);
    void add(const Gradients& other, double factor = 1.0);
    bool all_finite() const;
    double max_abs() const;
};

class Network {
public:
    Network() = default;
    explicit Network(std::vector<Layer> layers);

    /// Fully connected chain with uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    /// sizes has one more entry than acts.
    static Network mlp(std::span<const std::size_t> sizes, std::span<const Activation> acts,
                       Rng& rng);
    static Network zeros(std::span<const std::size_t> sizes, std::span<const Activation> acts);

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t param_count() const;
    bool empty() const { return layers_.empty(); }

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }

    bool same_shape(const Network& other) const;

    /// Parameter blocks in the Gradients layout.
    std::vector<std::span<double>> param_blocks();
    std::vector<std::span<const double>> param_blocks() const;
    Gradients zero_gradients() const;

    Vec forward(std::span<const double> input) const;
    const Vec& forward(std::span<const double> input, Tape& tape) const;

    /// Accumulates d(output_grad . output)/d(params) into grads (may be null)
    /// and returns the gradient w.r.t. the input. The tape must come from
    /// forward() on this network.
    Vec backward(const Tape& tape, std::span<const double> output_grad, Gradients* grads) const;

    /// Deterministic FNV-1a hash of all parameter bits, for bit-identity checks.
    std::uint64_t param_hash() const;

private:
    void validate() const;

    std::vector<Layer> layers_;
};

struct GradientBundle {
    Gradients params;
    Vec input;
};

/// Gradients of (output_grad . net(input)) w.r.t. parameters and input.
GradientBundle backward(const Network& net, std::span<const double> input,
                        std::span<const double> output_grad);

struct AdamState {
    Gradients m;
    Gradients v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    explicit AdamState(const Network& net);
};

void adam_step(Network& params, const Gradients& grads, AdamState& state, double lr);

/// target <- tau * source + (1 - tau) * target, entrywise.
void soft_update(Network& target, const Network& source, double tau);

/// Central-difference gradient of a scalar loss w.r.t. every parameter of net.
/// loss() must read net's current parameters; they are restored afterwards.
Gradients numeric_gradient(Network& net, const std::function<double()>& loss, double step = 1e-5);

/// max |a - n| / max(|a|, |n|, 1e-8) over all entries.
double max_relative_error(const Gradients& analytic, const Gradients& numeric);

/// Output-level loss used by finite_diff_check: value and d value / d output.
struct OutputLoss {
    std::function<double(std::span<const double>)> value;
    std::function<Vec(std::span<const double>)> gradient;
};

/// Compares backward() against central differences for loss(net(input)).
double finite_diff_check(const Network& net, std::span<const double> input, const OutputLoss& loss,
                         double step = 1e-5);

// Snapshot format (text, one network per record):
//   dualsys-net 1
//   layers <L>
//   layer <in> <out> <activation>
//   <out*in weights, row-major>
//   <out biases>
//   ... repeated per layer
//   end
void save_network(std::ostream& os, const Network& net);
Network load_network(std::istream& is);

}  // namespace dualsys
