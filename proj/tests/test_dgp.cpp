#include <cmath>

#include "doctest.h"
#include "mmrmx/dgp.hpp"
#include "mmrmx/harness.hpp"
#include "mmrmx/rng.hpp"

using namespace mmrmx;

TEST_CASE("interchangeable covariance") {
    CHECK((interchangeable_covariance(3, 0.0).sigma - Eigen::MatrixXd::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() == 0.0);

    const Eigen::MatrixXd s = interchangeable_covariance(2, 0.5).sigma;
    CHECK(s(0, 0) == 1.0);
    CHECK(s(0, 1) == 0.5);
    CHECK(s(1, 0) == 0.5);
    CHECK(s(1, 1) == 1.0);

    CHECK_THROWS_AS(interchangeable_covariance(3, 1.0), InvalidCorrelation);
    CHECK_THROWS_AS(interchangeable_covariance(3, -0.1), InvalidCorrelation);
}

TEST_CASE("simulated trials have the configured dimensions") {
    const ScenarioConfig cfg = default_scenario();  // n=400, K=2, J=3
    const TrialDataset ds = simulate_full_trial(cfg, 7);
    CHECK(ds.n() == 400);
    CHECK(ds.J == 3);
    CHECK(ds.K == 2);
    for (const auto& s : ds.subjects) CHECK(s.dropout_time == 4);
}

TEST_CASE("identical (cfg, rep_seed) reproduce bit-identical datasets") {
    ScenarioConfig cfg = default_scenario();
    cfg.n = 50;
    cfg.rho = 0.6;
    const TrialDataset a = simulate_full_trial(cfg, 123);
    const TrialDataset b = simulate_full_trial(cfg, 123);
    const TrialDataset c = simulate_full_trial(cfg, 124);
    bool identical = true, differs = false;
    for (int i = 0; i < a.n(); ++i) {
        identical = identical && (a.subjects[i].outcomes == b.subjects[i].outcomes) &&
                    (a.subjects[i].covariates == b.subjects[i].covariates) &&
                    (a.subjects[i].treatment == b.subjects[i].treatment);
        differs = differs || (a.subjects[i].outcomes != c.subjects[i].outcomes);
    }
    CHECK(identical);
    CHECK(differs);
}

TEST_CASE("pure-noise scenario has zero mean, unit variance") {
    ScenarioConfig cfg = default_scenario();
    cfg.n = 200000;
    cfg.beta_base.setZero();
    cfg.tau.setZero();
    cfg.seed = 5;
    const TrialDataset ds = simulate_full_trial(cfg, 1);
    for (int j = 0; j < cfg.J; ++j) {
        double s = 0, s2 = 0;
        for (const auto& subj : ds.subjects) {
            s += subj.outcomes[j];
            s2 += subj.outcomes[j] * subj.outcomes[j];
        }
        const double mean = s / cfg.n;
        const double var = s2 / cfg.n - mean * mean;
        CHECK(std::fabs(mean) < 0.02);
        CHECK(var == doctest::Approx(1.0).epsilon(0.02));
    }
}

TEST_CASE("arm difference converges to tau at the final timepoint") {
    ScenarioConfig cfg = default_scenario();
    cfg.n = 1000000;
    cfg.beta_base.setZero();
    cfg.rho = 0.0;
    cfg.seed = 8;
    const TrialDataset ds = simulate_full_trial(cfg, 0);
    double s1 = 0, s0 = 0;
    int n1 = 0, n0 = 0;
    for (const auto& s : ds.subjects) {
        if (s.treatment) {
            s1 += s.outcomes[cfg.J - 1];
            ++n1;
        } else {
            s0 += s.outcomes[cfg.J - 1];
            ++n0;
        }
    }
    CHECK(s1 / n1 - s0 / n0 == doctest::Approx(1.0 / 3.0).epsilon(0.03));
    CHECK(std::fabs(s1 / n1 - s0 / n0 - 1.0 / 3.0) < 0.01);
}

TEST_CASE("residual covariance matches the target entrywise") {
    ScenarioConfig cfg = default_scenario();
    cfg.n = 100000;
    cfg.rho = 0.6;
    cfg.seed = 2;
    const TrialDataset ds = simulate_full_trial(cfg, 3);
    const Eigen::MatrixXd target = interchangeable_covariance(cfg.J, cfg.rho).sigma;

    Eigen::MatrixXd betas(cfg.K, cfg.J);
    for (int j = 0; j < cfg.J; ++j) betas.col(j) = cfg.beta_at(j);

    Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(cfg.J, cfg.J);
    for (const auto& s : ds.subjects) {
        const Eigen::VectorXd resid = s.outcomes - cfg.alpha -
                                      betas.transpose() * s.covariates -
                                      static_cast<double>(s.treatment) * cfg.tau;
        ss.noalias() += resid * resid.transpose();
    }
    CHECK(((ss / cfg.n) - target).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("mcar dropout") {
    ScenarioConfig cfg = default_scenario();
    cfg.n = 100000;
    cfg.seed = 4;
    const TrialDataset full = simulate_full_trial(cfg, 9);

    SUBCASE("zero hazard leaves the dataset unchanged") {
        const TrialDataset out = apply_mcar_dropout(full, 0.0, 9);
        for (int i = 0; i < full.n(); ++i) {
            CHECK(out.subjects[i].dropout_time == cfg.J + 1);
            CHECK(out.subjects[i].outcomes == full.subjects[i].outcomes);
        }
    }

    SUBCASE("geometric tail frequencies match closed forms") {
        const TrialDataset out = apply_mcar_dropout(full, 0.3, 9);
        int none = 0, complete = 0;
        for (const auto& s : out.subjects) {
            none += s.dropout_time == 1;
            complete += s.dropout_time == cfg.J + 1;
        }
        CHECK(static_cast<double>(none) / cfg.n == doctest::Approx(0.3).epsilon(0.034));
        CHECK(std::fabs(static_cast<double>(none) / cfg.n - 0.3) < 0.01);
        CHECK(std::fabs(static_cast<double>(complete) / cfg.n - 0.343) < 0.01);
    }

    SUBCASE("dropout time is uncorrelated with covariates") {
        const TrialDataset out = apply_mcar_dropout(full, 0.3, 9);
        for (int k = 0; k < cfg.K; ++k) {
            double sx = 0, st = 0, sxx = 0, stt = 0, sxt = 0;
            for (const auto& s : out.subjects) {
                const double x = s.covariates[k];
                const double t = s.dropout_time;
                sx += x;
                st += t;
                sxx += x * x;
                stt += t * t;
                sxt += x * t;
            }
            const double n = cfg.n;
            const double corr = (sxt / n - sx / n * st / n) /
                                std::sqrt((sxx / n - sx * sx / (n * n)) *
                                          (stt / n - st * st / (n * n)));
            CHECK(std::fabs(corr) < 3.0 / std::sqrt(n));
        }
    }

    SUBCASE("outcome draws are untouched by the dropout stream") {
        const TrialDataset out = apply_mcar_dropout(full, 0.3, 9);
        for (int i = 0; i < full.n(); ++i)
            for (int j = 0; j < out.subjects[i].observed_count(); ++j)
                CHECK(out.subjects[i].outcomes[j] == full.subjects[i].outcomes[j]);
    }
}

TEST_CASE("mar dropout") {
    ScenarioConfig cfg = default_scenario();
    cfg.n = 100000;
    cfg.seed = 6;
    const TrialDataset full = simulate_full_trial(cfg, 10);

    SUBCASE("marginal first-time dropout fraction averages to delta") {
        const TrialDataset out = apply_mar_dropout(full, 0.3, 10);
        int none = 0;
        for (const auto& s : out.subjects) none += s.dropout_time == 1;
        CHECK(std::fabs(static_cast<double>(none) / cfg.n - 0.3) < 0.01);
    }

    SUBCASE("treated completers skew to low X1, control completers to high X1") {
        const TrialDataset out = apply_mar_dropout(full, 0.3, 10);
        double s1 = 0, s0 = 0;
        int n1 = 0, n0 = 0;
        for (const auto& s : out.subjects) {
            if (s.dropout_time != cfg.J + 1) continue;
            if (s.treatment) {
                s1 += s.covariates[0];
                ++n1;
            } else {
                s0 += s.covariates[0];
                ++n0;
            }
        }
        CHECK(s1 / n1 < s0 / n0);
    }

    SUBCASE("zero first covariate gives arm-independent hazard") {
        TrialDataset flat = full;
        flat.subjects.resize(20000);
        for (auto& s : flat.subjects) s.covariates[0] = 0.0;
        const TrialDataset out = apply_mar_dropout(flat, 0.3, 11);
        double drop1 = 0, drop0 = 0;
        int n1 = 0, n0 = 0;
        for (const auto& s : out.subjects) {
            (s.treatment ? n1 : n0)++;
            (s.treatment ? drop1 : drop0) += s.dropout_time == 1;
        }
        const double f1 = drop1 / n1, f0 = drop0 / n0;
        const double se = std::sqrt(0.3 * 0.7 * (1.0 / n1 + 1.0 / n0));
        CHECK(std::fabs(f1 - f0) < 3.0 * se);
    }

    SUBCASE("hazards outside (0,1) are rejected") {
        TrialDataset bad = full;
        bad.subjects.resize(10);
        bad.subjects[0].covariates[0] = 0.95;
        bad.subjects[0].treatment = 1;
        CHECK_THROWS_AS(apply_mar_dropout(bad, 0.05, 12), InvalidHazard);
    }

    SUBCASE("per-arm hazard is delta plus-or-minus 0.1 X1") {
        // At X1 = 0.5 and delta = 0.3 the hazards are 0.35 (treated) and
        // 0.25 (control); the first-time dropout fraction estimates them.
        TrialDataset fixed = full;
        fixed.subjects.resize(40000);
        for (auto& s : fixed.subjects) s.covariates[0] = 0.5;
        const TrialDataset out = apply_mar_dropout(fixed, 0.3, 14);
        double drop1 = 0, drop0 = 0;
        int n1 = 0, n0 = 0;
        for (const auto& s : out.subjects) {
            (s.treatment ? n1 : n0)++;
            (s.treatment ? drop1 : drop0) += s.dropout_time == 1;
        }
        CHECK(drop1 / n1 == doctest::Approx(0.35).epsilon(0.035));
        CHECK(drop0 / n0 == doctest::Approx(0.25).epsilon(0.045));
    }
}

TEST_CASE("scenario config validation names the offending field") {
    ScenarioConfig cfg = default_scenario();
    cfg.rho = 1.0;
    try {
        cfg.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("rho") != std::string::npos);
    }

    cfg = default_scenario();
    cfg.dropout_kind = DropoutKind::Mar;
    cfg.delta = 0.05;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.delta = 0.3;
    CHECK_NOTHROW(cfg.validate());
}
