#include "mmrmx/dgp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "mmrmx/rng.hpp"

namespace mmrmx {

const char* dropout_kind_name(DropoutKind k) {
    switch (k) {
        case DropoutKind::None: return "none";
        case DropoutKind::Mcar: return "mcar";
        case DropoutKind::Mar: return "mar";
    }
    return "?";
}

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError("field '" + field + "' " + why);
    };
    if (n < 4) fail("n", "must be >= 4");
    if (K < 1) fail("K", "must be >= 1");
    if (J < 1) fail("J", "must be >= 1");
    if (alpha.size() != J) fail("alpha", "must have length J");
    if (beta_base.size() != K) fail("beta_base", "must have length K");
    if (tau.size() != J) fail("tau", "must have length J");
    if (!(rho >= 0.0 && rho < 1.0)) fail("rho", "must lie in [0, 1)");
    if (!(treat_prob > 0.0 && treat_prob < 1.0)) fail("treat_prob", "must lie in (0, 1)");
    if (!(alpha_level >= 0.0 && alpha_level <= 1.0)) fail("alpha_level", "must lie in [0, 1]");
    if (n_reps < 1) fail("n_reps", "must be >= 1");
    if (!(delta >= 0.0 && delta < 1.0)) fail("delta", "must lie in [0, 1)");
    if (dropout_kind == DropoutKind::Mar && !(delta > 0.1 && delta < 0.9))
        fail("delta", "must lie in (0.1, 0.9) under MAR dropout");
}

CovarianceSpec interchangeable_covariance(int J, double rho) {
    if (J < 1) throw ConfigError("field 'J' must be >= 1");
    if (!(rho >= 0.0 && rho < 1.0))
        throw InvalidCorrelation("rho = " + std::to_string(rho) + " outside [0, 1)");
    CovarianceSpec spec;
    spec.sigma = Eigen::MatrixXd::Constant(J, J, rho);
    spec.sigma.diagonal().setOnes();
    return spec;
}

TrialDataset simulate_full_trial(const ScenarioConfig& cfg, std::uint64_t rep_seed) {
    cfg.validate();

    const auto cov = interchangeable_covariance(cfg.J, cfg.rho);
    const Eigen::MatrixXd chol = cov.sigma.llt().matrixL();

    SplitMix64 rng_x = stream_rng(rep_seed, Stream::Covariates);
    SplitMix64 rng_w = stream_rng(rep_seed, Stream::Treatment);
    SplitMix64 rng_e = stream_rng(rep_seed, Stream::Residuals);

    Eigen::MatrixXd betas(cfg.K, cfg.J);
    for (int j = 0; j < cfg.J; ++j) betas.col(j) = cfg.beta_at(j);

    TrialDataset ds;
    ds.K = cfg.K;
    ds.J = cfg.J;
    ds.subjects.resize(cfg.n);

    Eigen::VectorXd z(cfg.J);
    for (int i = 0; i < cfg.n; ++i) {
        Subject& s = ds.subjects[i];
        s.id = i + 1;
        s.covariates.resize(cfg.K);
        for (int k = 0; k < cfg.K; ++k) s.covariates[k] = 2.0 * rng_x.next_unit() - 1.0;
        s.treatment = rng_w.next_unit() < cfg.treat_prob ? 1 : 0;
        for (int j = 0; j < cfg.J; ++j) z[j] = rng_e.next_normal();
        const Eigen::VectorXd eps = chol * z;
        s.outcomes = cfg.alpha + betas.transpose() * s.covariates +
                     static_cast<double>(s.treatment) * cfg.tau + eps;
        s.observed.assign(cfg.J, 1);
        s.dropout_time = cfg.J + 1;
    }

    ds.validate();
    return ds;
}

namespace {

// First failure time with per-trial hazard `hazard`, truncated so anything
// past J maps to J+1 (fully observed). One uniform per subject regardless
// of hazard keeps stream positions aligned across dropout mechanisms.
int geometric_dropout_time(double u, double hazard, int J) {
    if (hazard <= 0.0) return J + 1;
    const int t = 1 + static_cast<int>(std::floor(std::log1p(-u) / std::log1p(-hazard)));
    return t > J ? J + 1 : t;
}

TrialDataset censor(const TrialDataset& ds, const std::vector<int>& dropout_times) {
    TrialDataset out = ds;
    for (int i = 0; i < out.n(); ++i) {
        Subject& s = out.subjects[i];
        s.dropout_time = dropout_times[i];
        for (int j = 0; j < out.J; ++j) {
            if (j + 1 >= s.dropout_time) {
                s.outcomes[j] = 0.0;
                s.observed[j] = 0;
            }
        }
    }
    return out;
}

}  // namespace

TrialDataset apply_mcar_dropout(const TrialDataset& ds, double delta,
                                std::uint64_t rep_seed) {
    if (!(delta >= 0.0 && delta < 1.0))
        throw InvalidHazard("delta = " + std::to_string(delta) + " outside [0, 1)");
    SplitMix64 rng = stream_rng(rep_seed, Stream::Dropout);
    std::vector<int> times(ds.n());
    for (int i = 0; i < ds.n(); ++i)
        times[i] = geometric_dropout_time(rng.next_unit(), delta, ds.J);
    return censor(ds, times);
}

TrialDataset apply_mar_dropout(const TrialDataset& ds, double delta,
                               std::uint64_t rep_seed) {
    SplitMix64 rng = stream_rng(rep_seed, Stream::Dropout);
    std::vector<int> times(ds.n());
    for (int i = 0; i < ds.n(); ++i) {
        const Subject& s = ds.subjects[i];
        const double x1 = s.covariates[0];
        const double hazard = s.treatment == 1 ? delta + 0.1 * x1 : delta - 0.1 * x1;
        if (!(hazard > 0.0 && hazard < 1.0))
            throw InvalidHazard("subject " + std::to_string(s.id) + ": hazard " +
                                std::to_string(hazard) + " outside (0, 1)");
        times[i] = geometric_dropout_time(rng.next_unit(), hazard, ds.J);
    }
    return censor(ds, times);
}

}  // namespace mmrmx
