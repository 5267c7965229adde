#include "peelnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

#include "peelnet/linalg.hpp"

namespace peelnet {

void TrainConfig::validate() const {
    if (max_epochs < 1) throw ShapeError("train config: max_epochs must be >= 1");
    if (lambda_init <= 0) throw ShapeError("train config: lambda_init must be > 0");
    if (lambda_up <= 1) throw ShapeError("train config: lambda_up must be > 1");
    if (lambda_down <= 0 || lambda_down >= 1) {
        throw ShapeError("train config: lambda_down must be in (0, 1)");
    }
    if (lambda_max <= 0) throw ShapeError("train config: lambda_max must be > 0");
    if (gamma_stall_epochs < 1) throw ShapeError("train config: gamma_stall_epochs must be >= 1");
    if (max_inflations_per_epoch < 1) {
        throw ShapeError("train config: max_inflations_per_epoch must be >= 1");
    }
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::MaxEpochs: return "max_epochs";
        case StopReason::Gradient: return "gradient";
        case StopReason::GammaStall: return "gamma_stall";
        case StopReason::LambdaMax: return "lambda_max";
        case StopReason::MseGoal: return "mse_goal";
    }
    return "unknown";
}

double objective(double mu, double nu, double ssw_value, double sse_value) {
    return mu * ssw_value + nu * sse_value;
}

double sse(const Vector& errors) {
    return errors.squaredNorm();
}

double ssw(const Vector& flat_params) {
    return flat_params.squaredNorm();
}

HyperparameterUpdate update_hyperparameters(double ssw_value, double sse_value,
                                            const Matrix& hessian, double mu_prev, int param_count,
                                            int error_count) {
    if (ssw_value <= 0 || sse_value <= 0) {
        throw ShapeError("update_hyperparameters: E_w and E_D must be positive");
    }
    const double k = static_cast<double>(param_count);
    double gamma = k;
    if (mu_prev > 0) {
        gamma = k - mu_prev * linalg::trace(linalg::inverse_spd(hessian));
    }
    gamma = std::clamp(gamma, 0.0, k);
    const double remaining = static_cast<double>(error_count) - gamma;
    if (remaining <= 0) {
        throw HyperparameterError("effective parameters gamma = " + std::to_string(gamma) +
                                  " >= error count Q = " + std::to_string(error_count) +
                                  " (over-parameterized fit)");
    }
    HyperparameterUpdate out;
    out.gamma = gamma;
    out.mu = gamma / (2.0 * ssw_value);
    out.nu = remaining / (2.0 * sse_value);
    return out;
}

namespace {

Vector damped_step(const Matrix& jtj, const Vector& jte, const Vector& flat, double lambda,
                   double mu, double nu) {
    Matrix a = nu * jtj;
    a.diagonal().array() += mu + lambda;
    const Vector g = nu * jte + mu * flat;
    return flat - linalg::solve_spd(a, g);
}

}  // namespace

Vector lm_step_vector(const Vector& flat_params, const Matrix& jacobian, const Vector& errors,
                      double lambda, double mu, double nu) {
    if (jacobian.cols() != flat_params.size() || jacobian.rows() != errors.size()) {
        throw ShapeError("lm_step: Jacobian dims do not match parameters/errors");
    }
    const Matrix jtj = jacobian.transpose() * jacobian;
    const Vector jte = jacobian.transpose() * errors;
    return damped_step(jtj, jte, flat_params, lambda, mu, nu);
}

NetworkParams lm_step(const NetworkParams& params, const Matrix& jacobian, const Vector& errors,
                      double lambda, double mu, double nu) {
    return unflatten(params.spec,
                     lm_step_vector(flatten(params), jacobian, errors, lambda, mu, nu));
}

TrainResult train(const NetworkSpec& spec, const SampleSet& data, const TrainConfig& config) {
    return train_from(random_params(spec, config.seed), data, config);
}

TrainResult train_from(NetworkParams params, const SampleSet& data, const TrainConfig& config) {
    config.validate();
    params.spec.validate();
    if (data.inputs.empty()) {
        throw ShapeError("train: empty dataset");
    }
    if (data.inputs.size() != data.targets.size()) {
        throw ShapeError("train: inputs/targets size mismatch");
    }

    const int n_t = data.size();
    const int n_out = params.spec.output_dim();
    const int q = n_t * n_out;
    const int k = params.spec.param_count();

    Vector flat = flatten(params);
    double mu = 0.0;
    double nu = 1.0;
    double gamma = static_cast<double>(k);
    double lambda = config.lambda_init;
    int stall_count = 0;

    TrainReport report;
    StopReason reason = StopReason::MaxEpochs;

    Vector errors = stacked_errors(params, data.inputs, data.targets);
    double sse_cur = sse(errors);
    double ssw_cur = ssw(flat);

    for (int epoch = 0;; ++epoch) {
        const Matrix jacobian = error_jacobian(params, data.inputs);
        const Vector jte = jacobian.transpose() * errors;
        const double grad_norm = jte.size() ? jte.cwiseAbs().maxCoeff() : 0.0;
        const double mse = sse_cur / n_t;

        if (!std::isfinite(sse_cur) || !std::isfinite(ssw_cur) || !std::isfinite(grad_norm)) {
            // report still holds the last finite state.
            throw DivergedError("training diverged at epoch " + std::to_string(epoch),
                                std::move(report));
        }

        report.history.push_back({epoch, mse, sse_cur, ssw_cur, mu, nu, gamma, lambda, grad_norm});
        report.final_state = {epoch, sse_cur, ssw_cur, mu, nu, gamma, lambda, grad_norm, q, k};

        if (grad_norm <= config.min_gradient) {
            reason = StopReason::Gradient;
            break;
        }
        if (mse <= config.mse_goal) {
            reason = StopReason::MseGoal;
            break;
        }
        if (config.bayesian && stall_count >= config.gamma_stall_epochs) {
            reason = StopReason::GammaStall;
            break;
        }
        if (epoch >= config.max_epochs) {
            reason = StopReason::MaxEpochs;
            break;
        }

        const Matrix jtj = jacobian.transpose() * jacobian;
        const double f_cur = objective(mu, nu, ssw_cur, sse_cur);

        bool accepted = false;
        Vector flat_next;
        double sse_next = 0;
        double ssw_next = 0;
        for (int inflation = 0; inflation <= config.max_inflations_per_epoch; ++inflation) {
            bool solved = true;
            Vector candidate;
            try {
                candidate = damped_step(jtj, jte, flat, lambda, mu, nu);
            } catch (const SingularMatrixError&) {
                solved = false;
            }
            if (solved) {
                const NetworkParams trial = unflatten(params.spec, candidate);
                const Vector trial_errors = stacked_errors(trial, data.inputs, data.targets);
                const double trial_sse = sse(trial_errors);
                const double trial_ssw = ssw(candidate);
                const double f_trial = objective(mu, nu, trial_ssw, trial_sse);
                if (std::isfinite(f_trial) && f_trial < f_cur) {
                    flat_next = std::move(candidate);
                    errors = trial_errors;
                    sse_next = trial_sse;
                    ssw_next = trial_ssw;
                    accepted = true;
                    break;
                }
            }
            lambda *= config.lambda_up;
            if (lambda > config.lambda_max) break;
        }

        if (!accepted) {
            lambda = std::min(lambda, config.lambda_max);
            reason = StopReason::LambdaMax;
            report.final_state.lambda = lambda;
            break;
        }

        flat = std::move(flat_next);
        params = unflatten(params.spec, flat);
        sse_cur = sse_next;
        ssw_cur = ssw_next;
        lambda = std::max(lambda * config.lambda_down, 1e-20);

        // Evidence update at the accepted point; gamma uses the Hessian from
        // the Jacobian the step was computed with. Skipped on an exact fit
        // (the MSE-goal check fires on the next pass).
        if (config.bayesian && sse_cur > 0 && ssw_cur > 0) {
            Matrix hessian = nu * jtj;
            hessian.diagonal().array() += mu;
            const HyperparameterUpdate update =
                update_hyperparameters(ssw_cur, sse_cur, hessian, mu, k, q);
            if (std::abs(update.gamma - gamma) < config.gamma_stall_tol) {
                ++stall_count;
            } else {
                stall_count = 0;
            }
            mu = update.mu;
            nu = update.nu;
            gamma = update.gamma;
        }
    }

    report.stop_reason = reason;
    return {std::move(params), std::move(report)};
}

double log_evidence(const TrainState& state, const Matrix& hessian) {
    Eigen::LLT<Matrix> llt(hessian);
    if (llt.info() != Eigen::Success) {
        throw SingularMatrixError("log_evidence: Hessian not positive definite");
    }
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double f = objective(state.mu, state.nu, state.ssw, state.sse);
    const double k = static_cast<double>(state.param_count);
    return 0.5 * k * std::log(2.0 * std::numbers::pi) - 0.5 * log_det - f;
}

}  // namespace peelnet
