#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "peelnet/linalg.hpp"

namespace peelnet {

enum class Activation { Linear, Tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Topology of a feedforward network: input width R plus one size per
/// weight layer. A "1-5-3" structure with R = 1 has three weight layers
/// of 1, 5 and 3 neurons.
struct NetworkSpec {
    int input_dim = 1;
    std::vector<int> layer_sizes;
    std::vector<Activation> activations;  // one per layer

    int num_layers() const { return static_cast<int>(layer_sizes.size()); }
    int output_dim() const { return layer_sizes.back(); }

    /// Total number of weights and biases,
    /// K = sum_l N^l * (N^{l-1} + 1) with N^0 = R.
    int param_count() const;

    /// Throws ShapeError unless all sizes >= 1, at least two layers, and
    /// one activation per layer.
    void validate() const;

    bool operator==(const NetworkSpec&) const = default;
};

/// K for an arbitrary size list (usable on single-layer structures that
/// NetworkSpec itself rejects).
int param_count(int input_dim, const std::vector<int>& layer_sizes);

/// All layers linear.
NetworkSpec linear_spec(int input_dim, std::vector<int> layer_sizes);

/// Interior layers tanh, first and output layers linear: the configuration
/// used by the training and reproduction runs.
NetworkSpec tanh_hidden_spec(int input_dim, std::vector<int> layer_sizes);

/// Parse a structure string such as "1-5-3" into layer sizes.
std::vector<int> parse_structure(const std::string& text);

/// Weight matrices W^l (N^l x N^{l-1}) and bias vectors b^l per layer.
struct NetworkParams {
    NetworkSpec spec;
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
};

/// Per-layer net inputs n^l = W^l a^{l-1} + b^l and outputs a^l = f^l(n^l)
/// for one sample; activations[0] is the input a^0 = u.
struct ForwardTrace {
    std::vector<Vector> net_inputs;    // n^1 .. n^{n_l}
    std::vector<Vector> activations;   // a^0 .. a^{n_l}

    const Vector& prediction() const { return activations.back(); }
};

/// Zero-initialized parameters for a spec.
NetworkParams zero_params(const NetworkSpec& spec);

/// Parameters with weights drawn uniform in [-0.5, 0.5) from the given seed.
NetworkParams random_params(const NetworkSpec& spec, std::uint64_t seed);

ForwardTrace forward(const NetworkParams& params, const Vector& input);

/// Canonical parameter vector: per layer, W^l row-major then b^l.
Vector flatten(const NetworkParams& params);
NetworkParams unflatten(const NetworkSpec& spec, const Vector& flat);

/// Backpropagated sensitivities s^l seeded at the output layer with
/// Fdot^{n_l}(n^{n_l}) (t - a) and propagated through
/// s^l = Fdot^l(n^l) .* (W^{l+1}^T s^{l+1}). Equal to -d(0.5 ||t - a||^2)/dn^l.
std::vector<Vector> sensitivities(const NetworkParams& params, const ForwardTrace& trace,
                                  const Vector& target);

/// Jacobian of the stacked errors e = t - a with respect to the flattened
/// parameters: one row per scalar error component (sample-major, output
/// components in order), K columns in flatten order.
Matrix error_jacobian(const NetworkParams& params, const std::vector<Vector>& inputs);

/// Stacked errors t_i - a(u_i) in the same row order as error_jacobian.
Vector stacked_errors(const NetworkParams& params, const std::vector<Vector>& inputs,
                      const std::vector<Vector>& targets);

}  // namespace peelnet
