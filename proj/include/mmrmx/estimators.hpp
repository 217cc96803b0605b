#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mmrmx/trial_data.hpp"

namespace mmrmx {

enum class SeKind { ModelBased, Sandwich };

struct ModelSpec {
    ModelVariant variant = ModelVariant::Mmrm;
    bool centering = true;
    double tol = 1e-8;
    int max_iter = 200;
    SeKind se_kind = SeKind::ModelBased;
    double alpha_level = 0.05;
};

// Maximum-likelihood fit of one of the three models. theta_hat is laid out
// [alpha_1..alpha_J | betas | tau_1..tau_J]; tau_J is always the last
// entry. sigma_hat is J x J (1 x 1 for Ancova).
struct FitResult {
    Eigen::VectorXd theta_hat;
    Eigen::MatrixXd sigma_hat;
    Eigen::MatrixXd cov_theta;
    double tau_J = 0.0;
    double se_tau_J = 0.0;
    double z = 0.0;
    double p_value = 1.0;
    bool converged = false;
    int iterations = 0;
    int n_used = 0;
};

// ---------------------------------------------------------------------------
// Score-equation building blocks. These operate on explicit per-subject
// design matrices (J rows each) and zero-padded outcome vectors; they are
// the reference implementations the optimized fit kernel is tested against.
// ---------------------------------------------------------------------------

// J x J weight with the inverse of sigma's leading j x j block embedded in
// the top-left corner and zeros elsewhere. Throws NonPositiveDefinite when
// the leading block has an eigenvalue <= 1e-10.
Eigen::MatrixXd omega_j(const Eigen::MatrixXd& sigma, int j);

// Weighted-least-squares solve of the mean score equation at a fixed sigma:
// theta = (sum_i Z_i' Omega_i Z_i)^-1 sum_i Z_i' Omega_i Y_i.
Eigen::VectorXd gls_step(const TrialDataset& ds, const std::vector<Eigen::MatrixXd>& Z,
                         const Eigen::MatrixXd& sigma);

// Pairwise available-case residual cross products:
// sigma_jj' = |C_jj'|^-1 sum_{i in C_jj'} R_j R_j'.
Eigen::MatrixXd sigma_step(const TrialDataset& ds, const std::vector<Eigen::MatrixXd>& Z,
                           const Eigen::VectorXd& theta);

// Empirical information sum_i Z_i' Omega_i Z_i (unnormalized; its inverse
// is the model-based covariance of theta_hat without a 1/n factor).
Eigen::MatrixXd fisher_information(const TrialDataset& ds,
                                   const std::vector<Eigen::MatrixXd>& Z,
                                   const Eigen::MatrixXd& sigma_hat);

Eigen::MatrixXd model_based_covariance(const Eigen::MatrixXd& info);

// I^-1 (sum_i Z_i' Omega_i R_i R_i' Omega_i Z_i) I^-1.
Eigen::MatrixXd sandwich_covariance(const TrialDataset& ds,
                                    const std::vector<Eigen::MatrixXd>& Z,
                                    const Eigen::MatrixXd& sigma_hat,
                                    const Eigen::VectorXd& theta_hat);

struct WaldTest {
    double z = 0.0;
    double p_value = 1.0;
    bool reject = false;
};

// z = tau_hat / se against the standard normal; rejects iff p < alpha_level.
WaldTest wald_test(double tau_hat, double se, double alpha_level);

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

// Production fit. Ancova solves complete-case least squares in closed form;
// Mmrm and MmrmInteract alternate the two score equations from Sigma = I
// until the largest parameter change drops below spec.tol (non-convergence
// is flagged, not thrown). Uses a block-structured assembly that avoids
// materializing per-subject design matrices.
FitResult fit(const TrialDataset& ds, const ModelSpec& spec);

// Reference fit composed literally from design_matrices, gls_step,
// sigma_step and the inference operations above. Kept for testing and
// benchmarking against fit().
FitResult fit_reference(const TrialDataset& ds, const ModelSpec& spec);

// Flat JSON serialization of a FitResult (field names as in the struct).
std::string fit_result_json(const FitResult& r, int indent = -1);

}  // namespace mmrmx
