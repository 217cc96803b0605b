#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "mmrmx/trial_data.hpp"

namespace mmrmx {

enum class DropoutKind { None, Mcar, Mar };

const char* dropout_kind_name(DropoutKind k);

// One point of a simulation grid. Outcomes follow
//   Y_ij = alpha_j + X_i' beta_j + W_i tau_j + eps_ij,
//   eps_i ~ N(0, Sigma(rho)) interchangeable,
// with beta_j = beta_base for j < J and beta_J = b * beta_base, covariates
// Unif(-1, 1), and treatment Bernoulli(treat_prob).
struct ScenarioConfig {
    int n = 400;
    int K = 2;
    int J = 3;
    Eigen::VectorXd alpha;      // length J
    Eigen::VectorXd beta_base;  // length K
    double b = 1.0;
    Eigen::VectorXd tau;        // length J
    double rho = 0.0;
    double delta = 0.0;
    DropoutKind dropout_kind = DropoutKind::None;
    double treat_prob = 0.5;
    int n_reps = 1000;
    double alpha_level = 0.05;
    std::uint64_t seed = 0;

    // Throws ConfigError naming the offending field.
    void validate() const;

    Eigen::VectorXd beta_at(int j) const {  // 0-based timepoint
        return (j == J - 1) ? (b * beta_base).eval() : beta_base;
    }
};

struct CovarianceSpec {
    Eigen::MatrixXd sigma;
};

// Unit-diagonal interchangeable correlation: Sigma_jj = 1, Sigma_jj' = rho.
// Requires rho in [0, 1) so the matrix stays positive definite.
CovarianceSpec interchangeable_covariance(int J, double rho);

// Simulates a fully observed trial of cfg.n subjects. Covariate, treatment
// and residual draws come from separate streams keyed by rep_seed, so the
// same (cfg, rep_seed) is bit-reproducible and dropout can be layered on
// afterwards without disturbing the outcome draws.
TrialDataset simulate_full_trial(const ScenarioConfig& cfg, std::uint64_t rep_seed);

// Monotone MCAR dropout: T_i geometric with per-timepoint hazard delta,
// truncated to {1, ..., J+1}; outcomes at j >= T_i are removed.
TrialDataset apply_mcar_dropout(const TrialDataset& ds, double delta,
                                std::uint64_t rep_seed);

// Monotone MAR dropout: same mechanism with per-subject hazard
//   delta_i = delta + 0.1 * X_i1  (treated)
//   delta_i = delta - 0.1 * X_i1  (control).
TrialDataset apply_mar_dropout(const TrialDataset& ds, double delta,
                               std::uint64_t rep_seed);

}  // namespace mmrmx
