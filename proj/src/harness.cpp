#include "mmrmx/harness.hpp"

#include <cmath>

#include "mmrmx/rng.hpp"

namespace mmrmx {

const EstimatorSummary& ScenarioResult::summary(ModelVariant v) const {
    for (std::size_t e = 0; e < kEstimators.size(); ++e)
        if (kEstimators[e] == v) return by_estimator[e];
    throw Error("InvalidArgument", "unknown estimator");
}

ReplicationRecord run_replication(const ScenarioConfig& cfg, int rep_index,
                                  int scenario_id) {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep_index));

    ReplicationRecord rec;
    rec.scenario_id = scenario_id;
    rec.rep_index = rep_index;

    TrialDataset ds = simulate_full_trial(cfg, rep_seed);
    switch (cfg.dropout_kind) {
        case DropoutKind::None: break;
        case DropoutKind::Mcar: ds = apply_mcar_dropout(ds, cfg.delta, rep_seed); break;
        case DropoutKind::Mar: ds = apply_mar_dropout(ds, cfg.delta, rep_seed); break;
    }

    for (std::size_t e = 0; e < kEstimators.size(); ++e) {
        EstimatorOutcome& out = rec.by_estimator[e];
        ModelSpec spec;
        spec.variant = kEstimators[e];
        spec.alpha_level = cfg.alpha_level;
        try {
            const FitResult fr = fit(ds, spec);
            out.tau_hat = fr.tau_J;
            out.se = fr.se_tau_J;
            out.p_value = fr.p_value;
            out.reject = fr.p_value < cfg.alpha_level;
            out.converged = fr.converged;
            out.n_used = fr.n_used;
        } catch (const Error& err) {
            out.failed = true;
            out.error = err.kind();
        }
    }
    return rec;
}

ScenarioResult aggregate(const ScenarioConfig& cfg, int scenario_id,
                         const std::vector<ReplicationRecord>& recs) {
    ScenarioResult result;
    result.cfg = cfg;
    result.scenario_id = scenario_id;
    const int n_reps = static_cast<int>(recs.size());

    for (std::size_t e = 0; e < kEstimators.size(); ++e) {
        EstimatorSummary& s = result.by_estimator[e];
        double sum_tau = 0.0, sum_tau2 = 0.0, sum_se = 0.0;
        for (const auto& rec : recs) {
            const EstimatorOutcome& out = rec.by_estimator[e];
            if (out.failed || !out.converged) {
                ++s.n_fail;
                continue;
            }
            ++s.denominator;
            s.n_reject += out.reject ? 1 : 0;
            sum_tau += out.tau_hat;
            sum_tau2 += out.tau_hat * out.tau_hat;
            sum_se += out.se;
        }
        if (s.denominator > 0) {
            s.rejection_rate = static_cast<double>(s.n_reject) / s.denominator;
            s.mean_tau = sum_tau / s.denominator;
            s.mean_se = sum_se / s.denominator;
            const double var =
                sum_tau2 / s.denominator - s.mean_tau * s.mean_tau;
            s.sd_tau = std::sqrt(std::max(0.0, var));
        }
        s.mc_se = std::sqrt(s.rejection_rate * (1.0 - s.rejection_rate) / n_reps);
    }
    return result;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, int workers, int scenario_id) {
    cfg.validate();
    std::vector<ReplicationRecord> recs(cfg.n_reps);
#pragma omp parallel for schedule(dynamic) num_threads(workers > 0 ? workers : 1)
    for (int r = 0; r < cfg.n_reps; ++r) recs[r] = run_replication(cfg, r, scenario_id);
    return aggregate(cfg, scenario_id, recs);
}

ScenarioResult run_scenario_serial(const ScenarioConfig& cfg, int scenario_id) {
    cfg.validate();
    std::vector<ReplicationRecord> recs(cfg.n_reps);
    for (int r = 0; r < cfg.n_reps; ++r) recs[r] = run_replication(cfg, r, scenario_id);
    return aggregate(cfg, scenario_id, recs);
}

std::vector<ScenarioResult> run_grid(const std::vector<ScenarioConfig>& grid,
                                     int workers) {
    if (grid.empty()) throw ConfigError("scenario grid is empty");
    std::vector<ScenarioResult> out;
    out.reserve(grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s)
        out.push_back(run_scenario(grid[s], workers, static_cast<int>(s)));
    return out;
}

// ---------------------------------------------------------------------------
// Asymptotic limits
// ---------------------------------------------------------------------------

AsymptoticReport asymptotic_check(const ScenarioConfig& cfg, int n_large) {
    if (cfg.dropout_kind != DropoutKind::None && cfg.delta != 0.0)
        throw ConfigError("asymptotic_check requires a no-dropout configuration");
    if (n_large < 100000) throw ConfigError("asymptotic_check requires n_large >= 1e5");

    ScenarioConfig big = cfg;
    big.n = n_large;
    big.dropout_kind = DropoutKind::None;
    const TrialDataset ds = simulate_full_trial(big, derive_seed(big.seed, 0));

    const int n = ds.n();
    const int K = ds.K;
    const int J = ds.J;

    // Sample moments: V[X] and C[X, Y_j].
    Eigen::VectorXd xbar = Eigen::VectorXd::Zero(K);
    Eigen::VectorXd ybar = Eigen::VectorXd::Zero(J);
    double treated = 0.0;
    for (const auto& s : ds.subjects) {
        xbar += s.covariates;
        ybar += s.outcomes;
        treated += s.treatment;
    }
    xbar /= n;
    ybar /= n;
    Eigen::MatrixXd vx = Eigen::MatrixXd::Zero(K, K);
    Eigen::MatrixXd cxy = Eigen::MatrixXd::Zero(K, J);
    for (const auto& s : ds.subjects) {
        const Eigen::VectorXd xc = s.covariates - xbar;
        vx.noalias() += xc * xc.transpose();
        cxy.noalias() += xc * (s.outcomes - ybar).transpose();
    }
    vx /= n;
    cxy /= n;
    const double pi1 = treated / n;
    const double pi0 = 1.0 - pi1;

    ModelSpec ms;
    ms.variant = ModelVariant::Mmrm;
    const FitResult mmrm = fit(ds, ms);
    ms.variant = ModelVariant::MmrmInteract;
    const FitResult mmrmx = fit(ds, ms);

    AsymptoticReport rep;
    rep.n = n;

    // (a) per-timepoint limits for the interaction model.
    const Eigen::MatrixXd beta_limit = vx.llt().solve(cxy);  // K x J
    rep.beta_mmrmx.resize(K, J);
    for (int j = 0; j < J; ++j)
        rep.beta_mmrmx.col(j) = mmrmx.theta_hat.segment(J + j * K, K);
    rep.max_beta_interact_gap = (rep.beta_mmrmx - beta_limit).cwiseAbs().maxCoeff();

    // (b) the shared-coefficient limit at the fitted covariance.
    const Eigen::VectorXd sig_inv_one =
        mmrm.sigma_hat.llt().solve(Eigen::VectorXd::Ones(J));
    const Eigen::VectorXd beta_shared_limit =
        beta_limit * sig_inv_one / sig_inv_one.sum();
    rep.beta_mmrm = mmrm.theta_hat.segment(J, K);
    rep.max_beta_shared_gap = (rep.beta_mmrm - beta_shared_limit).cwiseAbs().maxCoeff();
    rep.mmrm_beta_vs_final_cov_gap =
        (rep.beta_mmrm - beta_limit.col(J - 1)).cwiseAbs().maxCoeff();

    // (c) block-inversion SE identity.
    const auto rel_gap = [&](const FitResult& fr) {
        const double se_limit =
            std::sqrt(fr.sigma_hat(J - 1, J - 1) / (n * pi0 * pi1));
        return std::fabs(fr.se_tau_J - se_limit) / se_limit;
    };
    rep.se_tau_rel_gap_mmrm = rel_gap(mmrm);
    rep.se_tau_rel_gap_mmrmx = rel_gap(mmrmx);
    return rep;
}

// ---------------------------------------------------------------------------
// Default grids
// ---------------------------------------------------------------------------

ScenarioConfig default_scenario() {
    ScenarioConfig cfg;
    cfg.n = 400;
    cfg.K = 2;
    cfg.J = 3;
    cfg.alpha = Eigen::VectorXd::Zero(3);
    cfg.beta_base = Eigen::VectorXd::Constant(2, 5.0);
    cfg.b = 1.0;
    cfg.tau = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    cfg.rho = 0.0;
    cfg.delta = 0.0;
    cfg.dropout_kind = DropoutKind::None;
    cfg.treat_prob = 0.5;
    cfg.n_reps = 1000;
    cfg.alpha_level = 0.05;
    cfg.seed = 0;
    return cfg;
}

namespace {

std::vector<ScenarioConfig> build_grid(const std::vector<double>& deltas,
                                       const std::vector<double>& rhos,
                                       const std::vector<double>& bs, double tau,
                                       DropoutKind kind, int n_reps,
                                       std::uint64_t base_seed) {
    std::vector<ScenarioConfig> grid;
    int index = 0;
    for (double b : bs)
        for (double rho : rhos)
            for (double delta : deltas) {
                ScenarioConfig cfg = default_scenario();
                cfg.tau.setConstant(tau);
                cfg.b = b;
                cfg.rho = rho;
                cfg.delta = delta;
                cfg.dropout_kind = kind;
                cfg.n_reps = n_reps;
                cfg.seed = derive_seed(base_seed, static_cast<std::uint64_t>(index));
                grid.push_back(cfg);
                ++index;
            }
    return grid;
}

}  // namespace

std::vector<ScenarioConfig> default_power_grid(int n_reps, std::uint64_t base_seed) {
    return build_grid({0.0, 0.1, 0.2, 0.3}, {0.0, 0.3, 0.6, 0.9}, {0.8, 1.0, 1.2},
                      1.0 / 3.0, DropoutKind::Mcar, n_reps, base_seed);
}

std::vector<ScenarioConfig> default_error_grid(int n_reps, std::uint64_t base_seed) {
    // MAR hazards delta +- 0.1*X1 need delta > 0.1.
    return build_grid({0.15, 0.2, 0.25, 0.3}, {0.0, 0.3, 0.6, 0.9}, {0.8, 1.0, 1.2},
                      0.0, DropoutKind::Mar, n_reps, base_seed);
}

}  // namespace mmrmx
