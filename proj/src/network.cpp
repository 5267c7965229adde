#include "peelnet/network.hpp"

#include <cmath>
#include <cstdlib>

#include "peelnet/rng.hpp"

namespace peelnet {

std::string to_string(Activation a) {
    return a == Activation::Linear ? "linear" : "tanh";
}

Activation activation_from_string(const std::string& name) {
    if (name == "linear") return Activation::Linear;
    if (name == "tanh") return Activation::Tanh;
    throw ShapeError("unknown activation: " + name);
}

int param_count(int input_dim, const std::vector<int>& layer_sizes) {
    int k = 0;
    int prev = input_dim;
    for (int n : layer_sizes) {
        k += n * (prev + 1);
        prev = n;
    }
    return k;
}

int NetworkSpec::param_count() const {
    return peelnet::param_count(input_dim, layer_sizes);
}

void NetworkSpec::validate() const {
    if (input_dim < 1) {
        throw ShapeError("network spec: input_dim must be >= 1");
    }
    if (layer_sizes.size() < 2) {
        throw ShapeError("network spec: at least two layers required");
    }
    for (int n : layer_sizes) {
        if (n < 1) {
            throw ShapeError("network spec: every layer size must be >= 1");
        }
    }
    if (activations.size() != layer_sizes.size()) {
        throw ShapeError("network spec: one activation per layer required");
    }
}

NetworkSpec linear_spec(int input_dim, std::vector<int> layer_sizes) {
    NetworkSpec spec;
    spec.input_dim = input_dim;
    spec.activations.assign(layer_sizes.size(), Activation::Linear);
    spec.layer_sizes = std::move(layer_sizes);
    spec.validate();
    return spec;
}

NetworkSpec tanh_hidden_spec(int input_dim, std::vector<int> layer_sizes) {
    NetworkSpec spec;
    spec.input_dim = input_dim;
    spec.activations.assign(layer_sizes.size(), Activation::Tanh);
    spec.activations.front() = Activation::Linear;
    spec.activations.back() = Activation::Linear;
    spec.layer_sizes = std::move(layer_sizes);
    spec.validate();
    return spec;
}

std::vector<int> parse_structure(const std::string& text) {
    std::vector<int> sizes;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t dash = text.find('-', pos);
        const std::string token = text.substr(pos, dash == std::string::npos ? dash : dash - pos);
        char* end = nullptr;
        const long value = std::strtol(token.c_str(), &end, 10);
        if (token.empty() || end == token.c_str() || *end != '\0') {
            throw ShapeError("structure string: bad token '" + token + "' in '" + text + "'");
        }
        sizes.push_back(static_cast<int>(value));
        if (dash == std::string::npos) break;
        pos = dash + 1;
    }
    return sizes;
}

NetworkParams zero_params(const NetworkSpec& spec) {
    spec.validate();
    NetworkParams p;
    p.spec = spec;
    int prev = spec.input_dim;
    for (int n : spec.layer_sizes) {
        p.weights.push_back(Matrix::Zero(n, prev));
        p.biases.push_back(Vector::Zero(n));
        prev = n;
    }
    return p;
}

NetworkParams random_params(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    return unflatten(spec, rng::uniform_weights(seed, spec.param_count()));
}

namespace {

Vector apply_activation(Activation act, const Vector& n) {
    if (act == Activation::Linear) return n;
    return n.array().tanh();
}

// Diagonal of Fdot^l(n^l), expressed through the layer output a^l
// (tanh' = 1 - tanh^2).
Vector activation_derivative(Activation act, const Vector& a) {
    if (act == Activation::Linear) return Vector::Ones(a.size());
    return 1.0 - a.array().square();
}

}  // namespace

ForwardTrace forward(const NetworkParams& params, const Vector& input) {
    if (input.size() != params.spec.input_dim) {
        throw ShapeError("forward: input size " + std::to_string(input.size()) + ", expected " +
                         std::to_string(params.spec.input_dim));
    }
    ForwardTrace trace;
    trace.activations.push_back(input);
    Vector a = input;
    for (int l = 0; l < params.spec.num_layers(); ++l) {
        Vector n = params.weights[l] * a + params.biases[l];
        a = apply_activation(params.spec.activations[l], n);
        trace.net_inputs.push_back(std::move(n));
        trace.activations.push_back(a);
    }
    return trace;
}

Vector flatten(const NetworkParams& params) {
    Vector flat(params.spec.param_count());
    int k = 0;
    for (int l = 0; l < params.spec.num_layers(); ++l) {
        const Matrix& w = params.weights[l];
        for (int i = 0; i < w.rows(); ++i) {
            for (int j = 0; j < w.cols(); ++j) {
                flat[k++] = w(i, j);
            }
        }
        const Vector& b = params.biases[l];
        flat.segment(k, b.size()) = b;
        k += static_cast<int>(b.size());
    }
    return flat;
}

NetworkParams unflatten(const NetworkSpec& spec, const Vector& flat) {
    spec.validate();
    if (flat.size() != spec.param_count()) {
        throw ShapeError("unflatten: vector length " + std::to_string(flat.size()) +
                         ", expected K = " + std::to_string(spec.param_count()));
    }
    NetworkParams p = zero_params(spec);
    int k = 0;
    for (int l = 0; l < spec.num_layers(); ++l) {
        Matrix& w = p.weights[l];
        for (int i = 0; i < w.rows(); ++i) {
            for (int j = 0; j < w.cols(); ++j) {
                w(i, j) = flat[k++];
            }
        }
        p.biases[l] = flat.segment(k, p.biases[l].size());
        k += static_cast<int>(p.biases[l].size());
    }
    return p;
}

std::vector<Vector> sensitivities(const NetworkParams& params, const ForwardTrace& trace,
                                  const Vector& target) {
    const int nl = params.spec.num_layers();
    if (target.size() != params.spec.output_dim()) {
        throw ShapeError("sensitivities: target arity mismatch");
    }
    std::vector<Vector> s(nl);
    const Vector error = target - trace.prediction();
    s[nl - 1] =
        activation_derivative(params.spec.activations[nl - 1], trace.activations[nl]).cwiseProduct(error);
    for (int l = nl - 2; l >= 0; --l) {
        const Vector back = params.weights[l + 1].transpose() * s[l + 1];
        s[l] = activation_derivative(params.spec.activations[l], trace.activations[l + 1])
                   .cwiseProduct(back);
    }
    return s;
}

Matrix error_jacobian(const NetworkParams& params, const std::vector<Vector>& inputs) {
    if (inputs.empty()) {
        throw ShapeError("error_jacobian: at least one sample required");
    }
    const int nl = params.spec.num_layers();
    const int n_out = params.spec.output_dim();
    const int k_total = params.spec.param_count();
    Matrix jac(static_cast<int>(inputs.size()) * n_out, k_total);

    for (std::size_t sample = 0; sample < inputs.size(); ++sample) {
        const ForwardTrace trace = forward(params, inputs[sample]);
        // S^l (N^l x N_out): column o holds the sensitivity of output o with
        // respect to n^l, so d a_o / d w^l_ij = S^l(i, o) * a^{l-1}(j).
        std::vector<Matrix> s(nl);
        s[nl - 1] =
            Matrix(activation_derivative(params.spec.activations[nl - 1], trace.activations[nl])
                       .asDiagonal());
        for (int l = nl - 2; l >= 0; --l) {
            const Matrix back = params.weights[l + 1].transpose() * s[l + 1];
            s[l] = activation_derivative(params.spec.activations[l], trace.activations[l + 1])
                       .asDiagonal() *
                   back;
        }
        const int row0 = static_cast<int>(sample) * n_out;
        int k = 0;
        for (int l = 0; l < nl; ++l) {
            const Vector& a_prev = trace.activations[l];
            const int n = params.spec.layer_sizes[l];
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < a_prev.size(); ++j) {
                    // e = t - a, hence the leading minus.
                    jac.block(row0, k, n_out, 1) = -s[l].row(i).transpose() * a_prev[j];
                    ++k;
                }
            }
            for (int i = 0; i < n; ++i) {
                jac.block(row0, k, n_out, 1) = -s[l].row(i).transpose();
                ++k;
            }
        }
    }
    return jac;
}

Vector stacked_errors(const NetworkParams& params, const std::vector<Vector>& inputs,
                      const std::vector<Vector>& targets) {
    if (inputs.size() != targets.size()) {
        throw ShapeError("stacked_errors: inputs/targets size mismatch");
    }
    const int n_out = params.spec.output_dim();
    Vector e(static_cast<int>(inputs.size()) * n_out);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (targets[i].size() != n_out) {
            throw ShapeError("stacked_errors: target arity mismatch at sample " + std::to_string(i));
        }
        e.segment(static_cast<int>(i) * n_out, n_out) =
            targets[i] - forward(params, inputs[i]).prediction();
    }
    return e;
}

}  // namespace peelnet
