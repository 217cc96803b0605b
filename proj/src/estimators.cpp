#include "mmrmx/estimators.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "json.hpp"
#include "mmrmx/rng.hpp"

namespace mmrmx {

namespace {

constexpr double kEigFloor = 1e-10;
constexpr double kRankTol = 1e-12;

// Inverse of the leading m x m block, with the spec's eigenvalue floor.
Eigen::MatrixXd leading_block_inverse(const Eigen::MatrixXd& sigma, int m) {
    const Eigen::MatrixXd block = sigma.topLeftCorner(m, m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block);
    if (eig.eigenvalues().minCoeff() <= kEigFloor)
        throw NonPositiveDefinite("leading " + std::to_string(m) + "x" + std::to_string(m) +
                                  " block of sigma has min eigenvalue " +
                                  std::to_string(eig.eigenvalues().minCoeff()));
    return block.llt().solve(Eigen::MatrixXd::Identity(m, m));
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                          const char* what) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
    if (ldlt.info() != Eigen::Success || d.minCoeff() <= kRankTol * d.maxCoeff())
        throw SingularNormalEquations(std::string(what) +
                                      ": normal equations are rank deficient");
    return ldlt.solve(b);
}

Eigen::MatrixXd invert_information(const Eigen::MatrixXd& info) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
    if (ldlt.info() != Eigen::Success || d.minCoeff() <= kRankTol * d.maxCoeff())
        throw SingularInformation("information matrix is singular");
    Eigen::MatrixXd inv =
        ldlt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
    return ((inv + inv.transpose()) / 2.0).eval();
}

void check_sigma_pd(const Eigen::MatrixXd& sigma) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    if (eig.eigenvalues().minCoeff() <= kEigFloor)
        throw NonPositiveDefinite("assembled sigma has min eigenvalue " +
                                  std::to_string(eig.eigenvalues().minCoeff()));
}

// ---------------------------------------------------------------------------
// Block-structured fit kernel.
//
// The design matrices of all three models are functions of (X_i, W_i, j)
// only, so every term of the score equations collapses into per-group
// moments: with G_m the subjects observed exactly m timepoints and
// V_m = (leading m x m block of sigma)^-1,
//   sum_i Z_i' Omega_i Z_i  and  sum_i Z_i' Omega_i Y_i
// reduce to combinations of V_m with sum_{G_m} X, sum_{G_m} X X', and the
// treated-arm versions. This is what makes desk-scale Monte Carlo grids
// cheap: assembly is O(n (J^2 + JK)) per iteration instead of
// O(n J^2 p + n J p^2).
// ---------------------------------------------------------------------------

struct Kernel {
    int n = 0, J = 0, K = 0, p = 0;
    ModelVariant variant = ModelVariant::Mmrm;
    Eigen::MatrixXd X;   // n x K, centered when requested
    Eigen::MatrixXd Y;   // n x J, zero-padded
    std::vector<int> W;  // treatment
    std::vector<int> m;  // observed counts
    std::vector<std::vector<int>> groups;  // by m = 1..J
    std::vector<double> count_m, count1_m;
    std::vector<Eigen::VectorXd> sx_m, sxw_m;
    std::vector<Eigen::MatrixXd> sxx_m;
    Eigen::MatrixXd pair_counts;  // J x J overlap counts
    int n_used = 0;
    int tau0 = 0;  // column offset of the tau block

    Kernel(const TrialDataset& ds, ModelVariant v, bool centering) {
        n = ds.n();
        J = ds.J;
        K = ds.K;
        variant = v;
        p = design_cols(v, J, K);
        tau0 = p - J;

        const Eigen::VectorXd shift =
            centering ? covariate_means(ds) : Eigen::VectorXd::Zero(K).eval();

        X.resize(n, K);
        Y = Eigen::MatrixXd::Zero(n, J);
        W.resize(n);
        m.resize(n);
        groups.assign(J + 1, {});
        count_m.assign(J + 1, 0.0);
        count1_m.assign(J + 1, 0.0);
        sx_m.assign(J + 1, Eigen::VectorXd::Zero(K));
        sxw_m.assign(J + 1, Eigen::VectorXd::Zero(K));
        sxx_m.assign(J + 1, Eigen::MatrixXd::Zero(K, K));

        for (int i = 0; i < n; ++i) {
            const Subject& s = ds.subjects[i];
            X.row(i) = (s.covariates - shift).transpose();
            W[i] = s.treatment;
            m[i] = s.observed_count();
            for (int j = 0; j < m[i]; ++j) Y(i, j) = s.outcomes[j];
            if (m[i] == 0) continue;  // contributes nothing to the likelihood
            groups[m[i]].push_back(i);
            count_m[m[i]] += 1.0;
            count1_m[m[i]] += s.treatment;
            sx_m[m[i]] += X.row(i).transpose();
            if (s.treatment) sxw_m[m[i]] += X.row(i).transpose();
            sxx_m[m[i]] += X.row(i).transpose() * X.row(i);
            ++n_used;
        }

        pair_counts = Eigen::MatrixXd::Zero(J, J);
        for (int mm = 1; mm <= J; ++mm)
            pair_counts.topLeftCorner(mm, mm).array() += count_m[mm];
    }

    std::vector<Eigen::MatrixXd> block_inverses(const Eigen::MatrixXd& sigma) const {
        std::vector<Eigen::MatrixXd> V(J + 1);
        for (int mm = 1; mm <= J; ++mm)
            if (!groups[mm].empty()) V[mm] = leading_block_inverse(sigma, mm);
        return V;
    }

    // Bread matrix sum_i Z_i' Omega_i Z_i.
    Eigen::MatrixXd information(const std::vector<Eigen::MatrixXd>& V) const {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
        for (int mm = 1; mm <= J; ++mm) {
            if (groups[mm].empty()) continue;
            const Eigen::MatrixXd& Vm = V[mm];
            const Eigen::VectorXd rowsum = Vm.rowwise().sum();
            const double s1 = rowsum.sum();

            A.block(0, 0, mm, mm) += count_m[mm] * Vm;
            A.block(0, tau0, mm, mm) += count1_m[mm] * Vm;
            A.block(tau0, 0, mm, mm) += count1_m[mm] * Vm;
            A.block(tau0, tau0, mm, mm) += count1_m[mm] * Vm;

            if (variant == ModelVariant::Mmrm || variant == ModelVariant::Ancova) {
                A.block(0, J, mm, K) += rowsum * sx_m[mm].transpose();
                A.block(J, 0, K, mm) += sx_m[mm] * rowsum.transpose();
                A.block(J, J, K, K) += s1 * sxx_m[mm];
                A.block(J, tau0, K, mm) += sxw_m[mm] * rowsum.transpose();
                A.block(tau0, J, mm, K) += rowsum * sxw_m[mm].transpose();
            } else {
                for (int j = 0; j < mm; ++j) {
                    for (int jp = 0; jp < mm; ++jp) {
                        const double w = Vm(j, jp);
                        A.block(j, J + jp * K, 1, K) += w * sx_m[mm].transpose();
                        A.block(J + j * K, jp, K, 1) += w * sx_m[mm];
                        A.block(J + j * K, J + jp * K, K, K) += w * sxx_m[mm];
                        A.block(J + j * K, tau0 + jp, K, 1) += w * sxw_m[mm];
                        A.block(tau0 + jp, J + j * K, 1, K) += w * sxw_m[mm].transpose();
                    }
                }
            }
        }
        return A;
    }

    Eigen::VectorXd gls(const std::vector<Eigen::MatrixXd>& V) const {
        const Eigen::MatrixXd A = information(V);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
        Eigen::VectorXd u(J);
        for (int mm = 1; mm <= J; ++mm) {
            for (int i : groups[mm]) {
                u.head(mm).noalias() = V[mm] * Y.row(i).head(mm).transpose();
                b.segment(0, mm) += u.head(mm);
                if (W[i]) b.segment(tau0, mm) += u.head(mm);
                if (variant == ModelVariant::MmrmInteract) {
                    for (int j = 0; j < mm; ++j)
                        b.segment(J + j * K, K) += u[j] * X.row(i).transpose();
                } else {
                    b.segment(J, K) += u.head(mm).sum() * X.row(i).transpose();
                }
            }
        }
        return solve_spd(A, b, variant_name(variant));
    }

    // Per-timepoint coefficient matrix implied by theta (K x J).
    Eigen::MatrixXd beta_matrix(const Eigen::VectorXd& theta) const {
        Eigen::MatrixXd B(K, J);
        if (variant == ModelVariant::MmrmInteract)
            for (int j = 0; j < J; ++j) B.col(j) = theta.segment(J + j * K, K);
        else
            B.colwise() = theta.segment(J, K);
        return B;
    }

    // Observed-prefix residuals for one subject.
    void residual(const Eigen::VectorXd& theta, const Eigen::MatrixXd& B, int i,
                  Eigen::VectorXd& r) const {
        const int mm = m[i];
        for (int j = 0; j < mm; ++j)
            r[j] = Y(i, j) - theta[j] - X.row(i).dot(B.col(j)) -
                   (W[i] ? theta[tau0 + j] : 0.0);
    }

    Eigen::MatrixXd sigma_update(const Eigen::VectorXd& theta) const {
        for (int j = 0; j < J; ++j)
            for (int jp = j; jp < J; ++jp)
                if (pair_counts(j, jp) == 0.0)
                    throw EmptyOverlap("no subject observed at both times " +
                                       std::to_string(j + 1) + " and " +
                                       std::to_string(jp + 1));
        const Eigen::MatrixXd B = beta_matrix(theta);
        Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(J, J);
        Eigen::VectorXd r(J);
        for (int mm = 1; mm <= J; ++mm)
            for (int i : groups[mm]) {
                residual(theta, B, i, r);
                ss.topLeftCorner(mm, mm) += r.head(mm) * r.head(mm).transpose();
            }
        const Eigen::MatrixXd sigma = ss.cwiseQuotient(pair_counts);
        check_sigma_pd(sigma);
        return sigma;
    }

    Eigen::MatrixXd meat(const Eigen::VectorXd& theta,
                         const std::vector<Eigen::MatrixXd>& V) const {
        const Eigen::MatrixXd B = beta_matrix(theta);
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(p, p);
        Eigen::VectorXd r(J), u(J), g(p);
        for (int mm = 1; mm <= J; ++mm)
            for (int i : groups[mm]) {
                residual(theta, B, i, r);
                u.head(mm).noalias() = V[mm] * r.head(mm);
                g.setZero();
                g.segment(0, mm) = u.head(mm);
                if (W[i]) g.segment(tau0, mm) = u.head(mm);
                if (variant == ModelVariant::MmrmInteract) {
                    for (int j = 0; j < mm; ++j)
                        g.segment(J + j * K, K) = u[j] * X.row(i).transpose();
                } else {
                    g.segment(J, K) = u.head(mm).sum() * X.row(i).transpose();
                }
                M.noalias() += g * g.transpose();
            }
        return M;
    }
};

void finalize_inference(FitResult& res, const Eigen::MatrixXd& info,
                        const Eigen::MatrixXd& meat, SeKind se_kind, double alpha) {
    const Eigen::MatrixXd bread_inv = invert_information(info);
    if (se_kind == SeKind::Sandwich) {
        const Eigen::MatrixXd cov = bread_inv * meat * bread_inv;
        res.cov_theta = (cov + cov.transpose()) / 2.0;
    } else {
        res.cov_theta = bread_inv;
    }
    const int last = static_cast<int>(res.theta_hat.size()) - 1;
    res.tau_J = res.theta_hat[last];
    res.se_tau_J = std::sqrt(std::max(0.0, res.cov_theta(last, last)));
    const WaldTest w = wald_test(res.tau_J, res.se_tau_J, alpha);
    res.z = w.z;
    res.p_value = w.p_value;
}

// Complete-case least squares at the final timepoint.
FitResult fit_ancova(const TrialDataset& ds, const ModelSpec& spec) {
    const Eigen::VectorXd shift =
        spec.centering ? covariate_means(ds) : Eigen::VectorXd::Zero(ds.K).eval();
    const int p = 2 + ds.K;

    std::vector<int> cc;
    int treated = 0;
    for (int i = 0; i < ds.n(); ++i)
        if (ds.subjects[i].dropout_time == ds.J + 1) {
            cc.push_back(i);
            treated += ds.subjects[i].treatment;
        }
    const int ncc = static_cast<int>(cc.size());
    if (ncc < ds.K + 3)
        throw InsufficientData("ancova: " + std::to_string(ncc) +
                               " complete cases, need at least " + std::to_string(ds.K + 3));
    if (treated == 0 || treated == ncc)
        throw InsufficientData("ancova: complete cases cover only one arm");

    Eigen::MatrixXd Xr(ncc, p);
    Eigen::VectorXd y(ncc);
    for (int r = 0; r < ncc; ++r) {
        const Subject& s = ds.subjects[cc[r]];
        Xr(r, 0) = 1.0;
        Xr.block(r, 1, 1, ds.K) = (s.covariates - shift).transpose();
        Xr(r, 1 + ds.K) = s.treatment;
        y[r] = s.outcomes[ds.J - 1];
    }

    const Eigen::MatrixXd XtX = Xr.transpose() * Xr;
    FitResult res;
    res.theta_hat = solve_spd(XtX, Xr.transpose() * y, "ancova");
    const Eigen::VectorXd resid = y - Xr * res.theta_hat;
    const double s2 = resid.squaredNorm() / ncc;
    if (s2 <= kEigFloor)
        throw NonPositiveDefinite("ancova: residual variance " + std::to_string(s2));
    res.sigma_hat = Eigen::MatrixXd::Constant(1, 1, s2);
    res.converged = true;
    res.iterations = 1;
    res.n_used = ncc;

    const Eigen::MatrixXd info = XtX / s2;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
    if (spec.se_kind == SeKind::Sandwich) {
        for (int r = 0; r < ncc; ++r) {
            const Eigen::VectorXd g = Xr.row(r).transpose() * (resid[r] / s2);
            meat.noalias() += g * g.transpose();
        }
    }
    finalize_inference(res, info, meat, spec.se_kind, spec.alpha_level);
    return res;
}

TrialDataset reduce_to_final_timepoint(const TrialDataset& ds) {
    TrialDataset out;
    out.K = ds.K;
    out.J = 1;
    for (const auto& s : ds.subjects) {
        if (s.dropout_time != ds.J + 1) continue;
        Subject r;
        r.id = s.id;
        r.covariates = s.covariates;
        r.treatment = s.treatment;
        r.outcomes = Eigen::VectorXd::Constant(1, s.outcomes[ds.J - 1]);
        r.observed = {1};
        r.dropout_time = 2;
        out.subjects.push_back(std::move(r));
    }
    return out;
}

}  // namespace

Eigen::MatrixXd omega_j(const Eigen::MatrixXd& sigma, int j) {
    const int J = static_cast<int>(sigma.rows());
    if (j < 1 || j > J)
        throw Error("InvalidArgument", "omega_j: j must lie in 1..J");
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(J, J);
    omega.topLeftCorner(j, j) = leading_block_inverse(sigma, j);
    return omega;
}

Eigen::VectorXd gls_step(const TrialDataset& ds, const std::vector<Eigen::MatrixXd>& Z,
                         const Eigen::MatrixXd& sigma) {
    const int p = static_cast<int>(Z.front().cols());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    std::map<int, Eigen::MatrixXd> omega_cache;
    for (int i = 0; i < ds.n(); ++i) {
        const int m = ds.subjects[i].observed_count();
        if (m == 0) continue;
        auto it = omega_cache.find(m);
        if (it == omega_cache.end())
            it = omega_cache.emplace(m, omega_j(sigma, m)).first;
        const Eigen::MatrixXd& omega = it->second;
        const Eigen::MatrixXd zt_omega = Z[i].transpose() * omega;
        A.noalias() += zt_omega * Z[i];
        b.noalias() += zt_omega * ds.subjects[i].outcomes;  // zero-padded Y
    }
    return solve_spd(A, b, "gls_step");
}

Eigen::MatrixXd sigma_step(const TrialDataset& ds, const std::vector<Eigen::MatrixXd>& Z,
                           const Eigen::VectorXd& theta) {
    const int J = ds.J;
    Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(J, J);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(J, J);
    for (int i = 0; i < ds.n(); ++i) {
        const int m = ds.subjects[i].observed_count();
        if (m == 0) continue;
        const Eigen::VectorXd r =
            ds.subjects[i].outcomes.head(m) - (Z[i].topRows(m) * theta);
        ss.topLeftCorner(m, m) += r * r.transpose();
        counts.topLeftCorner(m, m).array() += 1.0;
    }
    for (int j = 0; j < J; ++j)
        for (int jp = j; jp < J; ++jp)
            if (counts(j, jp) == 0.0)
                throw EmptyOverlap("no subject observed at both times " +
                                   std::to_string(j + 1) + " and " + std::to_string(jp + 1));
    const Eigen::MatrixXd sigma = ss.cwiseQuotient(counts);
    check_sigma_pd(sigma);
    return sigma;
}

Eigen::MatrixXd fisher_information(const TrialDataset& ds,
                                   const std::vector<Eigen::MatrixXd>& Z,
                                   const Eigen::MatrixXd& sigma_hat) {
    const int p = static_cast<int>(Z.front().cols());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
    std::map<int, Eigen::MatrixXd> omega_cache;
    for (int i = 0; i < ds.n(); ++i) {
        const int m = ds.subjects[i].observed_count();
        if (m == 0) continue;
        auto it = omega_cache.find(m);
        if (it == omega_cache.end())
            it = omega_cache.emplace(m, omega_j(sigma_hat, m)).first;
        A.noalias() += Z[i].transpose() * it->second * Z[i];
    }
    return A;
}

Eigen::MatrixXd model_based_covariance(const Eigen::MatrixXd& info) {
    return invert_information(info);
}

Eigen::MatrixXd sandwich_covariance(const TrialDataset& ds,
                                    const std::vector<Eigen::MatrixXd>& Z,
                                    const Eigen::MatrixXd& sigma_hat,
                                    const Eigen::VectorXd& theta_hat) {
    const Eigen::MatrixXd info = fisher_information(ds, Z, sigma_hat);
    const Eigen::MatrixXd bread_inv = invert_information(info);
    const int p = static_cast<int>(Z.front().cols());
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
    std::map<int, Eigen::MatrixXd> omega_cache;
    for (int i = 0; i < ds.n(); ++i) {
        const int m = ds.subjects[i].observed_count();
        if (m == 0) continue;
        auto it = omega_cache.find(m);
        if (it == omega_cache.end())
            it = omega_cache.emplace(m, omega_j(sigma_hat, m)).first;
        const Eigen::VectorXd r = ds.subjects[i].outcomes - Z[i] * theta_hat;
        const Eigen::VectorXd g = Z[i].transpose() * (it->second * r);
        meat.noalias() += g * g.transpose();
    }
    const Eigen::MatrixXd cov = bread_inv * meat * bread_inv;
    return ((cov + cov.transpose()) / 2.0).eval();
}

WaldTest wald_test(double tau_hat, double se, double alpha_level) {
    if (!(se > 0.0) || !std::isfinite(se))
        throw InvalidSe("standard error must be positive, got " + std::to_string(se));
    WaldTest w;
    w.z = tau_hat / se;
    w.p_value = two_sided_p(w.z);
    w.reject = w.p_value < alpha_level;
    return w;
}

FitResult fit(const TrialDataset& ds, const ModelSpec& spec) {
    ds.validate();
    if (spec.variant == ModelVariant::Ancova) return fit_ancova(ds, spec);

    Kernel kernel(ds, spec.variant, spec.centering);
    if (kernel.n_used == 0) throw InsufficientData("no subject has any observed outcome");

    FitResult res;
    res.n_used = kernel.n_used;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(ds.J, ds.J);
    Eigen::VectorXd theta_prev;

    for (int it = 1; it <= spec.max_iter; ++it) {
        const std::vector<Eigen::MatrixXd> V = kernel.block_inverses(sigma);
        const Eigen::VectorXd theta = kernel.gls(V);
        const Eigen::MatrixXd sigma_new = kernel.sigma_update(theta);

        double delta = (sigma_new - sigma).cwiseAbs().maxCoeff();
        if (theta_prev.size() > 0)
            delta = std::max(delta, (theta - theta_prev).cwiseAbs().maxCoeff());
        else
            delta = std::numeric_limits<double>::infinity();

        theta_prev = theta;
        sigma = sigma_new;
        res.iterations = it;
        if (delta < spec.tol) {
            res.converged = true;
            break;
        }
    }

    res.theta_hat = theta_prev;
    res.sigma_hat = sigma;
    const std::vector<Eigen::MatrixXd> V = kernel.block_inverses(sigma);
    const Eigen::MatrixXd info = kernel.information(V);
    const Eigen::MatrixXd meat = spec.se_kind == SeKind::Sandwich
                                     ? kernel.meat(res.theta_hat, V)
                                     : Eigen::MatrixXd();
    finalize_inference(res, info, meat, spec.se_kind, spec.alpha_level);
    return res;
}

FitResult fit_reference(const TrialDataset& ds, const ModelSpec& spec) {
    ds.validate();

    // Center once against the full-dataset grand mean so every path (this
    // one, the kernel, and the Ancova reduction) shares the same shift.
    TrialDataset work = ds;
    if (spec.centering) {
        const Eigen::VectorXd shift = covariate_means(ds);
        for (auto& s : work.subjects) s.covariates -= shift;
    }

    const bool ancova = spec.variant == ModelVariant::Ancova;
    if (ancova) {
        work = reduce_to_final_timepoint(work);
        if (work.n() < ds.K + 3)
            throw InsufficientData("ancova: too few complete cases");
    }

    const std::vector<Eigen::MatrixXd> Z =
        design_matrices(work, ancova ? ModelVariant::Ancova : spec.variant, false);

    FitResult res;
    for (const auto& s : work.subjects)
        if (s.observed_count() > 0) ++res.n_used;

    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(work.J, work.J);
    Eigen::VectorXd theta_prev;
    for (int it = 1; it <= spec.max_iter; ++it) {
        const Eigen::VectorXd theta = gls_step(work, Z, sigma);
        const Eigen::MatrixXd sigma_new = sigma_step(work, Z, theta);
        double delta = (sigma_new - sigma).cwiseAbs().maxCoeff();
        if (theta_prev.size() > 0)
            delta = std::max(delta, (theta - theta_prev).cwiseAbs().maxCoeff());
        else
            delta = std::numeric_limits<double>::infinity();
        theta_prev = theta;
        sigma = sigma_new;
        res.iterations = it;
        if (delta < spec.tol) {
            res.converged = true;
            break;
        }
    }

    res.theta_hat = theta_prev;
    res.sigma_hat = sigma;
    const Eigen::MatrixXd info = fisher_information(work, Z, sigma);
    const Eigen::MatrixXd meat_cov =
        spec.se_kind == SeKind::Sandwich
            ? sandwich_covariance(work, Z, sigma, res.theta_hat)
            : model_based_covariance(info);
    res.cov_theta = meat_cov;
    const int last = static_cast<int>(res.theta_hat.size()) - 1;
    res.tau_J = res.theta_hat[last];
    res.se_tau_J = std::sqrt(std::max(0.0, res.cov_theta(last, last)));
    const WaldTest w = wald_test(res.tau_J, res.se_tau_J, spec.alpha_level);
    res.z = w.z;
    res.p_value = w.p_value;
    return res;
}

std::string fit_result_json(const FitResult& r, int indent) {
    nlohmann::json j;
    j["theta_hat"] = std::vector<double>(r.theta_hat.data(),
                                         r.theta_hat.data() + r.theta_hat.size());
    auto matrix_json = [](const Eigen::MatrixXd& m) {
        std::vector<std::vector<double>> rows;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            std::vector<double> row(m.cols());
            for (Eigen::Index c = 0; c < m.cols(); ++c) row[c] = m(i, c);
            rows.push_back(std::move(row));
        }
        return rows;
    };
    j["sigma_hat"] = matrix_json(r.sigma_hat);
    j["cov_theta"] = matrix_json(r.cov_theta);
    j["tau_J"] = r.tau_J;
    j["se_tau_J"] = r.se_tau_J;
    j["z"] = r.z;
    j["p_value"] = r.p_value;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["n_used"] = r.n_used;
    return j.dump(indent);
}

}  // namespace mmrmx
