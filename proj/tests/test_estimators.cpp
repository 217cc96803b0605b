#include <cmath>

#include "doctest.h"
#include "mmrmx/dgp.hpp"
#include "mmrmx/harness.hpp"
#include "mmrmx/estimators.hpp"
#include "mmrmx/rng.hpp"
#include "support/oracles.hpp"

using namespace mmrmx;

namespace {

TrialDataset sim(int n, int K, int J, double rho, double delta, std::uint64_t seed,
                 double tau = 1.0 / 3.0, double b = 1.0) {
    ScenarioConfig cfg = default_scenario();
    cfg.n = n;
    cfg.K = K;
    cfg.J = J;
    cfg.alpha = Eigen::VectorXd::Zero(J);
    cfg.beta_base = Eigen::VectorXd::Constant(K, 5.0);
    cfg.b = b;
    cfg.tau = Eigen::VectorXd::Constant(J, tau);
    cfg.rho = rho;
    cfg.seed = seed;
    TrialDataset ds = simulate_full_trial(cfg, derive_seed(seed, 0));
    if (delta > 0.0) ds = apply_mcar_dropout(ds, delta, derive_seed(seed, 0));
    return ds;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

// ---------------------------------------------------------------------------
// omega_j
// ---------------------------------------------------------------------------

TEST_CASE("omega_j embeds the inverse leading block") {
    const Eigen::MatrixXd eye3 = Eigen::MatrixXd::Identity(3, 3);

    Eigen::MatrixXd o = omega_j(eye3, 2);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, 3);
    expected(0, 0) = expected(1, 1) = 1.0;
    CHECK(max_abs(o - expected) < 1e-14);

    CHECK(max_abs(omega_j(eye3, 3) - eye3) < 1e-14);

    Eigen::MatrixXd s(2, 2);
    s << 1.0, 0.5, 0.5, 1.0;
    o = omega_j(s, 2);
    // Analytic 2x2 inverse: det = 0.75.
    CHECK(o(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(o(0, 1) == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
    CHECK(o(1, 0) == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
    CHECK(o(1, 1) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

    Eigen::MatrixXd degenerate(2, 2);
    degenerate << 1.0, 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(omega_j(degenerate, 2), NonPositiveDefinite);
    CHECK_NOTHROW(omega_j(degenerate, 1));
}

// ---------------------------------------------------------------------------
// gls_step
// ---------------------------------------------------------------------------

TEST_CASE("gls_step with identity sigma and no dropout is pooled OLS") {
    const TrialDataset ds = sim(40, 2, 3, 0.5, 0.0, 31);
    const auto Z = design_matrices(ds, ModelVariant::Mmrm, false);
    const Eigen::VectorXd theta =
        gls_step(ds, Z, Eigen::MatrixXd::Identity(3, 3));

    // Oracle: QR on the stacked rows.
    const int p = static_cast<int>(Z[0].cols());
    Eigen::MatrixXd X(ds.n() * 3, p);
    Eigen::VectorXd y(ds.n() * 3);
    for (int i = 0; i < ds.n(); ++i) {
        X.middleRows(3 * i, 3) = Z[i];
        y.segment(3 * i, 3) = ds.subjects[i].outcomes;
    }
    const Eigen::VectorXd ols = X.colPivHouseholderQr().solve(y);
    CHECK(max_abs(theta - ols) < 1e-9);
}

TEST_CASE("gls_step recovers theta exactly on noiseless data") {
    ScenarioConfig cfg = default_scenario();
    cfg.n = 30;
    cfg.K = 1;
    cfg.J = 2;
    cfg.alpha = Eigen::VectorXd::Zero(2);
    cfg.beta_base = Eigen::VectorXd::Constant(1, 2.0);
    cfg.b = 0.5;
    cfg.tau = Eigen::VectorXd::Constant(2, 0.25);
    cfg.seed = 17;
    TrialDataset ds = simulate_full_trial(cfg, 4);
    // Strip the noise, leaving the exact MmrmInteract mean surface.
    Eigen::MatrixXd betas(cfg.K, cfg.J);
    for (int j = 0; j < cfg.J; ++j) betas.col(j) = cfg.beta_at(j);
    for (auto& s : ds.subjects)
        s.outcomes = cfg.alpha + betas.transpose() * s.covariates +
                     static_cast<double>(s.treatment) * cfg.tau;

    const auto Z = design_matrices(ds, ModelVariant::MmrmInteract, false);
    const Eigen::VectorXd theta = gls_step(ds, Z, Eigen::MatrixXd::Identity(2, 2));
    Eigen::VectorXd truth(6);
    truth << 0.0, 0.0, 2.0, 1.0, 0.25, 0.25;
    CHECK(max_abs(theta - truth) < 1e-10);
}

TEST_CASE("gls_step matches a generic WLS solver on observed rows under dropout") {
    const TrialDataset ds = sim(30, 2, 2, 0.0, 0.35, 77);
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.3, 0.4, 0.4, 0.9;
    for (ModelVariant v : {ModelVariant::Mmrm, ModelVariant::MmrmInteract}) {
        const auto Z = design_matrices(ds, v, false);
        const Eigen::VectorXd theta = gls_step(ds, Z, sigma);
        const Eigen::VectorXd oracle = oracles::wls_observed_rows(ds, Z, sigma);
        CHECK(max_abs(theta - oracle) < 1e-8);
    }
}

// ---------------------------------------------------------------------------
// sigma_step
// ---------------------------------------------------------------------------

TEST_CASE("sigma_step at the truth is consistent") {
    const TrialDataset ds = sim(100000, 2, 3, 0.6, 0.0, 53);
    const auto Z = design_matrices(ds, ModelVariant::Mmrm, false);
    Eigen::VectorXd truth(2 * 3 + 2);
    truth << 0, 0, 0, 5, 5, 1.0 / 3, 1.0 / 3, 1.0 / 3;
    const Eigen::MatrixXd sigma = sigma_step(ds, Z, truth);
    const Eigen::MatrixXd target = interchangeable_covariance(3, 0.6).sigma;
    CHECK(max_abs(sigma - target) < 0.02);
}

TEST_CASE("sigma_step at J=1 is the mean squared residual") {
    const TrialDataset ds = sim(50, 1, 1, 0.0, 0.0, 3, 0.2);
    const auto Z = design_matrices(ds, ModelVariant::Mmrm, false);
    Eigen::VectorXd theta(3);
    theta << 0.1, 4.0, 0.2;
    const Eigen::MatrixXd sigma = sigma_step(ds, Z, theta);
    double ss = 0.0;
    for (int i = 0; i < ds.n(); ++i)
        ss += std::pow(ds.subjects[i].outcomes[0] - (Z[i] * theta)[0], 2);
    CHECK(sigma(0, 0) == doctest::Approx(ss / ds.n()).epsilon(1e-12));
}

TEST_CASE("sigma_step rejects rank-deficient residual covariance") {
    // Two complete subjects with residual vectors (1,1) and (-1,-1).
    TrialDataset ds;
    ds.K = 1;
    ds.J = 2;
    for (int i = 0; i < 2; ++i) {
        Subject s;
        s.id = i + 1;
        s.covariates = Eigen::VectorXd::Zero(1);
        s.treatment = i;
        s.outcomes = Eigen::VectorXd::Constant(2, i == 0 ? 1.0 : -1.0);
        s.observed = {1, 1};
        s.dropout_time = 3;
        ds.subjects.push_back(s);
    }
    const auto Z = design_matrices(ds, ModelVariant::Mmrm, false);
    const Eigen::VectorXd theta = Eigen::VectorXd::Zero(5);
    CHECK_THROWS_AS(sigma_step(ds, Z, theta), NonPositiveDefinite);
}

TEST_CASE("sigma_step reports empty overlap pairs") {
    TrialDataset ds = sim(8, 1, 2, 0.0, 0.0, 41);
    for (auto& s : ds.subjects) {
        s.dropout_time = 2;
        s.observed[1] = 0;
        s.outcomes[1] = 0.0;
    }
    const auto Z = design_matrices(ds, ModelVariant::Mmrm, false);
    CHECK_THROWS_AS(sigma_step(ds, Z, Eigen::VectorXd::Zero(5)), EmptyOverlap);
}

TEST_CASE("zero-padded and row-deleted assemblies agree") {
    const TrialDataset ds = sim(40, 2, 3, 0.4, 0.3, 19);
    Eigen::MatrixXd sigma = interchangeable_covariance(3, 0.5).sigma;
    const auto Z = design_matrices(ds, ModelVariant::Mmrm, false);

    const Eigen::MatrixXd info = fisher_information(ds, Z, sigma);

    // Row-deleted assembly: observed rows only, no padding.
    const int p = static_cast<int>(Z[0].cols());
    Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i < ds.n(); ++i) {
        const int m = ds.subjects[i].observed_count();
        if (m == 0) continue;
        const Eigen::MatrixXd w = sigma.topLeftCorner(m, m).inverse();
        direct += Z[i].topRows(m).transpose() * w * Z[i].topRows(m);
    }
    CHECK(max_abs(info - direct) < 1e-9 * std::max(1.0, max_abs(direct)));
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

TEST_CASE("J=1 fits coincide across all three variants") {
    for (std::uint64_t seed : {101, 102, 103}) {
        const TrialDataset ds = sim(80, 2, 1, 0.0, 0.3, seed, 0.25);
        ModelSpec spec;
        spec.variant = ModelVariant::Ancova;
        const FitResult a = fit(ds, spec);
        spec.variant = ModelVariant::Mmrm;
        const FitResult m = fit(ds, spec);
        spec.variant = ModelVariant::MmrmInteract;
        const FitResult x = fit(ds, spec);

        for (const FitResult* r : {&m, &x}) {
            CHECK(max_abs(r->theta_hat - a.theta_hat) < 1e-8);
            CHECK(max_abs(r->sigma_hat - a.sigma_hat) < 1e-8);
            CHECK(max_abs(r->cov_theta - a.cov_theta) < 1e-8);
            CHECK(r->tau_J == doctest::Approx(a.tau_J).epsilon(1e-10));
            CHECK(r->se_tau_J == doctest::Approx(a.se_tau_J).epsilon(1e-8));
            CHECK(r->p_value == doctest::Approx(a.p_value).epsilon(1e-8));
            CHECK(r->n_used == a.n_used);
        }
    }
}

TEST_CASE("complete-data MmrmInteract collapses to per-timepoint OLS") {
    const TrialDataset ds = sim(60, 2, 3, 0.7, 0.0, 23, 1.0 / 3.0, 0.8);
    ModelSpec spec;
    spec.variant = ModelVariant::MmrmInteract;
    spec.centering = false;
    const FitResult x = fit(ds, spec);
    CHECK(x.converged);

    const Eigen::MatrixXd coef = oracles::per_timepoint_ols(ds);  // (K+2) x J
    for (int j = 0; j < ds.J; ++j) {
        CHECK(x.theta_hat[j] == doctest::Approx(coef(0, j)).epsilon(1e-6));
        for (int k = 0; k < ds.K; ++k)
            CHECK(x.theta_hat[ds.J + j * ds.K + k] ==
                  doctest::Approx(coef(1 + k, j)).epsilon(1e-6));
        CHECK(x.theta_hat[x.theta_hat.size() - ds.J + j] ==
              doctest::Approx(coef(1 + ds.K, j)).epsilon(1e-6));
    }

    spec.variant = ModelVariant::Ancova;
    const FitResult a = fit(ds, spec);
    CHECK(std::fabs(x.tau_J - a.tau_J) < 1e-6);
}

TEST_CASE("fit matches the brute-force likelihood maximizer on complete data") {
    for (ModelVariant v : {ModelVariant::Mmrm, ModelVariant::MmrmInteract}) {
        const TrialDataset ds = sim(30, 1, 2, 0.5, 0.0, 311, 0.3, 0.7);
        ModelSpec spec;
        spec.variant = v;
        spec.centering = false;
        const FitResult fr = fit(ds, spec);
        REQUIRE(fr.converged);

        const auto oracle =
            oracles::ml_oracle_complete(ds, v, fr.theta_hat, fr.sigma_hat);
        CHECK(max_abs(fr.theta_hat - oracle.theta) < 1e-4);
        CHECK(max_abs(fr.sigma_hat - oracle.sigma) < 1e-4);
    }
}

TEST_CASE("fit agrees with the reference implementation") {
    for (ModelVariant v :
         {ModelVariant::Ancova, ModelVariant::Mmrm, ModelVariant::MmrmInteract}) {
        for (double delta : {0.0, 0.3}) {
            const TrialDataset ds = sim(60, 2, 3, 0.6, delta, 1234, 0.3, 0.8);
            ModelSpec spec;
            spec.variant = v;
            const FitResult a = fit(ds, spec);
            const FitResult b = fit_reference(ds, spec);
            REQUIRE(a.converged);
            REQUIRE(b.converged);
            CHECK(max_abs(a.theta_hat - b.theta_hat) < 1e-6);
            CHECK(max_abs(a.sigma_hat - b.sigma_hat) < 1e-6);
            CHECK(max_abs(a.cov_theta - b.cov_theta) < 1e-6);
            CHECK(a.n_used == b.n_used);

            spec.se_kind = SeKind::Sandwich;
            const FitResult as = fit(ds, spec);
            const FitResult bs = fit_reference(ds, spec);
            CHECK(as.se_tau_J == doctest::Approx(bs.se_tau_J).epsilon(1e-6));
        }
    }
}

TEST_CASE("relabeling the arms negates tau and keeps its standard error") {
    const TrialDataset ds = sim(70, 2, 3, 0.5, 0.25, 61);
    TrialDataset flipped = ds;
    for (auto& s : flipped.subjects) s.treatment = 1 - s.treatment;

    for (ModelVariant v :
         {ModelVariant::Ancova, ModelVariant::Mmrm, ModelVariant::MmrmInteract}) {
        ModelSpec spec;
        spec.variant = v;
        const FitResult orig = fit(ds, spec);
        const FitResult swap = fit(flipped, spec);
        CHECK(swap.tau_J == doctest::Approx(-orig.tau_J).epsilon(1e-7));
        CHECK(swap.se_tau_J == doctest::Approx(orig.se_tau_J).epsilon(1e-7));
    }
}

TEST_CASE("covariate translation leaves inference unchanged") {
    const TrialDataset ds = sim(70, 2, 3, 0.5, 0.2, 67);
    TrialDataset shifted = ds;
    for (auto& s : shifted.subjects) s.covariates[0] += 10.0;

    for (ModelVariant v :
         {ModelVariant::Ancova, ModelVariant::Mmrm, ModelVariant::MmrmInteract}) {
        ModelSpec spec;
        spec.variant = v;
        spec.centering = false;
        const FitResult orig = fit(ds, spec);
        const FitResult moved = fit(shifted, spec);
        CHECK(moved.tau_J == doctest::Approx(orig.tau_J).epsilon(1e-8));
        CHECK(moved.se_tau_J == doctest::Approx(orig.se_tau_J).epsilon(1e-8));
        CHECK(moved.p_value == doctest::Approx(orig.p_value).epsilon(1e-8));
        // Intercepts absorb the shift.
        CHECK(std::fabs(moved.theta_hat[0] - orig.theta_hat[0]) > 1e-3);

        // With centering the whole fit is translation invariant.
        spec.centering = true;
        const FitResult c0 = fit(ds, spec);
        const FitResult c1 = fit(shifted, spec);
        CHECK(max_abs(c0.theta_hat - c1.theta_hat) < 1e-8);
    }
}

TEST_CASE("non-convergence is flagged, not thrown") {
    const TrialDataset ds = sim(50, 2, 3, 0.6, 0.2, 71);
    ModelSpec spec;
    spec.variant = ModelVariant::Mmrm;
    spec.max_iter = 1;
    const FitResult r = fit(ds, spec);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.theta_hat.size() == 8);
}

TEST_CASE("degenerate designs raise the documented errors") {
    TrialDataset ds = sim(30, 2, 2, 0.0, 0.0, 83);
    for (auto& s : ds.subjects) s.covariates[1] = 2.5;  // constant covariate
    ModelSpec spec;
    spec.variant = ModelVariant::Mmrm;
    CHECK_THROWS_AS(fit(ds, spec), SingularNormalEquations);

    // Too few complete cases for ancova.
    TrialDataset tiny = sim(40, 2, 2, 0.0, 0.0, 90);
    for (int i = 0; i < tiny.n(); ++i)
        if (i >= 3) {
            tiny.subjects[i].dropout_time = 2;
            tiny.subjects[i].observed[1] = 0;
            tiny.subjects[i].outcomes[1] = 0.0;
        }
    spec.variant = ModelVariant::Ancova;
    CHECK_THROWS_AS(fit(tiny, spec), InsufficientData);
}

TEST_CASE("subjects with no observed outcomes are retained but do not contribute") {
    TrialDataset ds = sim(50, 2, 3, 0.4, 0.0, 97);
    for (int i = 0; i < 5; ++i) {
        ds.subjects[i].dropout_time = 1;
        ds.subjects[i].observed.assign(3, 0);
        ds.subjects[i].outcomes.setZero();
    }
    TrialDataset without = ds;
    without.subjects.erase(without.subjects.begin(), without.subjects.begin() + 5);

    ModelSpec spec;
    spec.variant = ModelVariant::Mmrm;
    spec.centering = false;  // centering means differ between the two datasets
    const FitResult with_empty = fit(ds, spec);
    const FitResult dropped = fit(without, spec);
    CHECK(with_empty.n_used == 45);
    CHECK(max_abs(with_empty.theta_hat - dropped.theta_hat) < 1e-9);
    CHECK(max_abs(with_empty.sigma_hat - dropped.sigma_hat) < 1e-9);
}

TEST_CASE("estimated variance ordering: shared beta never beats interactions") {
    // Large complete-data fit; with b != 1 the shared-coefficient model is
    // misspecified and pays for it in se(tau_J).
    const TrialDataset unstable = sim(50000, 2, 3, 0.6, 0.0, 131, 1.0 / 3.0, 0.8);
    ModelSpec spec;
    spec.variant = ModelVariant::Mmrm;
    const FitResult m_unstable = fit(unstable, spec);
    spec.variant = ModelVariant::MmrmInteract;
    const FitResult x_unstable = fit(unstable, spec);
    CHECK(m_unstable.se_tau_J > x_unstable.se_tau_J * 1.01);

    const TrialDataset stable = sim(50000, 2, 3, 0.6, 0.0, 137, 1.0 / 3.0, 1.0);
    spec.variant = ModelVariant::Mmrm;
    const FitResult m_stable = fit(stable, spec);
    spec.variant = ModelVariant::MmrmInteract;
    const FitResult x_stable = fit(stable, spec);
    CHECK(m_stable.se_tau_J >= x_stable.se_tau_J * 0.999);
    CHECK(m_stable.se_tau_J == doctest::Approx(x_stable.se_tau_J).epsilon(0.02));
}
