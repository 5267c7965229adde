#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "peelnet/data.hpp"
#include "peelnet/network.hpp"

namespace peelnet {

struct TrainConfig {
    int max_epochs = 2000;
    double lambda_init = 0.005;
    double lambda_up = 10.0;
    double lambda_down = 0.1;
    double lambda_max = 1e10;
    double min_gradient = 1e-7;   // on ||J^T e||_inf
    double mse_goal = 0.0;
    int gamma_stall_epochs = 10;
    double gamma_stall_tol = 1e-4;
    int max_inflations_per_epoch = 40;
    std::uint64_t seed = 0;
    // When false, mu stays 0 and nu stays 1: plain damped Levenberg-Marquardt
    // on the sum of squared errors (the gamma-stall criterion is then inert).
    bool bayesian = true;

    void validate() const;
};

struct TrainState {
    int epoch = 0;
    double sse = 0;        // E_D
    double ssw = 0;        // E_w
    double mu = 0;
    double nu = 1;
    double gamma = 0;
    double lambda = 0;
    double grad_norm = 0;  // ||J^T e||_inf
    int error_count = 0;   // Q = n_t * N_out
    int param_count = 0;   // K
};

enum class StopReason { MaxEpochs, Gradient, GammaStall, LambdaMax, MseGoal };

std::string to_string(StopReason r);

struct EpochRecord {
    int epoch = 0;
    double mse = 0;
    double sse = 0;
    double ssw = 0;
    double mu = 0;
    double nu = 1;
    double gamma = 0;
    double lambda = 0;
    double grad_norm = 0;
};

struct TrainReport {
    TrainState final_state;
    StopReason stop_reason = StopReason::MaxEpochs;
    // history[i] is the state after i accepted updates; history[0] is the
    // initial state, with mu/nu/gamma those in force entering the epoch.
    std::vector<EpochRecord> history;
};

/// Training aborted on a non-finite loss; carries the last finite state.
class DivergedError : public std::runtime_error {
  public:
    DivergedError(const std::string& what, TrainReport partial)
        : std::runtime_error(what), partial_report(std::move(partial)) {}
    TrainReport partial_report;
};

struct TrainResult {
    NetworkParams params;
    TrainReport report;
};

/// Regularized performance index F = mu * E_w + nu * E_D.
double objective(double mu, double nu, double ssw_value, double sse_value);

/// Sum of squared errors / sum of squared weights.
double sse(const Vector& errors);
double ssw(const Vector& flat_params);

struct HyperparameterUpdate {
    double mu = 0;
    double nu = 1;
    double gamma = 0;
};

/// Evidence-framework update: gamma = K - mu_prev * tr(H*^-1) (gamma = K
/// when mu_prev is 0), clamped to [0, K]; then mu* = gamma / (2 E_w) and
/// nu* = (Q - gamma) / (2 E_D). Throws HyperparameterError when nu* <= 0.
HyperparameterUpdate update_hyperparameters(double ssw_value, double sse_value,
                                            const Matrix& hessian, double mu_prev, int param_count,
                                            int error_count);

/// One damped Gauss-Newton step on F: solves
/// [nu J^T J + (mu + lambda) I] d = nu J^T e + mu w and returns w - d.
/// With mu = 0, nu = 1 this is the classic damped least-squares update.
/// Propagates SingularMatrixError from the solve; the training loop treats
/// that as a rejected step and inflates lambda.
Vector lm_step_vector(const Vector& flat_params, const Matrix& jacobian, const Vector& errors,
                      double lambda, double mu, double nu);

/// lm_step_vector applied to a network's flattened parameters.
NetworkParams lm_step(const NetworkParams& params, const Matrix& jacobian, const Vector& errors,
                      double lambda, double mu, double nu);

/// Full training loop: damped Gauss-Newton steps on F with acceptance on
/// F-decrease, lambda inflation on rejection, evidence updates of mu/nu/gamma
/// after each accepted step, and the five stopping criteria (max epochs,
/// gradient, gamma stall, lambda cap, MSE goal).
TrainResult train(const NetworkSpec& spec, const SampleSet& data, const TrainConfig& config);

/// Same loop starting from the given parameters instead of seeded random ones.
TrainResult train_from(NetworkParams params, const SampleSet& data, const TrainConfig& config);

/// Log of the quadratic-approximation normalization factor:
/// (K/2) log 2pi - 0.5 log det H* - F(w*). Diagnostic only; throws
/// SingularMatrixError when H* is not positive definite.
double log_evidence(const TrainState& state, const Matrix& hessian);

}  // namespace peelnet
