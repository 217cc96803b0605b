#include "mmrmx/trial_data.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace mmrmx {

namespace {

std::string subj_label(std::int64_t id) { return "subject " + std::to_string(id); }

}  // namespace

void TrialDataset::validate() const {
    if (subjects.empty()) throw Error("InvalidDataset", "dataset has no subjects");
    if (K < 1 || J < 1) throw Error("InvalidDataset", "K and J must be >= 1");

    int treated = 0, control = 0;
    for (const auto& s : subjects) {
        if (s.covariates.size() != K)
            throw InconsistentBaseline(subj_label(s.id) + ": covariate count " +
                                       std::to_string(s.covariates.size()) +
                                       " differs from dataset K=" + std::to_string(K));
        if (s.treatment != 0 && s.treatment != 1)
            throw Error("InvalidDataset", subj_label(s.id) + ": treatment must be 0 or 1");
        if (s.outcomes.size() != J || static_cast<int>(s.observed.size()) != J)
            throw Error("InvalidDataset", subj_label(s.id) + ": outcome length differs from J");
        if (s.dropout_time < 1 || s.dropout_time > J + 1)
            throw Error("InvalidDataset",
                        subj_label(s.id) + ": dropout_time outside {1,...,J+1}");
        for (int j = 0; j < J; ++j) {
            const bool should = (j + 1) < s.dropout_time;
            if (static_cast<bool>(s.observed[j]) != should)
                throw NonMonotoneMissingness(
                    subj_label(s.id) + ": observed mask inconsistent with dropout_time at time " +
                    std::to_string(j + 1));
        }
        (s.treatment == 1 ? treated : control)++;
    }
    if (treated == 0) throw EmptyArm("no treated subjects");
    if (control == 0) throw EmptyArm("no control subjects");
}

TrialDataset from_long_records(const std::vector<LongRecord>& records) {
    if (records.empty()) throw Error("InvalidDataset", "no records");

    int J = 0;
    const int K = static_cast<int>(records.front().covariates.size());
    for (const auto& r : records) {
        if (r.time < 1) throw Error("InvalidDataset", "times must be >= 1");
        J = std::max(J, r.time);
    }

    // Group by subject, keeping first-appearance order.
    std::vector<std::int64_t> order;
    std::map<std::int64_t, std::vector<const LongRecord*>> by_subject;
    for (const auto& r : records) {
        auto [it, inserted] = by_subject.try_emplace(r.subject_id);
        if (inserted) order.push_back(r.subject_id);
        it->second.push_back(&r);
    }

    TrialDataset ds;
    ds.K = K;
    ds.J = J;
    ds.subjects.reserve(order.size());

    for (std::int64_t id : order) {
        const auto& rows = by_subject[id];
        Subject s;
        s.id = id;
        s.treatment = rows.front()->treatment;
        s.covariates = rows.front()->covariates;
        s.outcomes = Eigen::VectorXd::Zero(J);
        s.observed.assign(J, 0);

        std::vector<std::uint8_t> seen(J, 0);
        for (const LongRecord* r : rows) {
            if (r->treatment != s.treatment)
                throw InconsistentBaseline(subj_label(id) + ": treatment varies across rows");
            if (r->covariates.size() != K || (r->covariates - s.covariates).cwiseAbs().maxCoeff() != 0.0)
                throw InconsistentBaseline(subj_label(id) + ": covariates vary across rows");
            const int t = r->time - 1;
            if (seen[t]) throw CsvError(subj_label(id) + ": duplicate row for time " +
                                        std::to_string(r->time));
            seen[t] = 1;
            if (r->outcome) {
                s.outcomes[t] = *r->outcome;
                s.observed[t] = 1;
            }
        }

        // Monotone dropout: the observed pattern must be a prefix.
        int last_observed = -1;
        for (int j = 0; j < J; ++j)
            if (s.observed[j]) last_observed = j;
        for (int j = 0; j <= last_observed; ++j)
            if (!s.observed[j])
                throw NonMonotoneMissingness(
                    subj_label(id) + ": outcome observed at time " +
                    std::to_string(last_observed + 1) + " but missing at time " +
                    std::to_string(j + 1));
        s.dropout_time = last_observed + 2;
        ds.subjects.push_back(std::move(s));
    }

    ds.validate();
    return ds;
}

std::vector<LongRecord> to_long_records(const TrialDataset& ds) {
    std::vector<LongRecord> out;
    out.reserve(static_cast<std::size_t>(ds.n()) * ds.J);
    for (const auto& s : ds.subjects) {
        for (int j = 0; j < ds.J; ++j) {
            LongRecord r;
            r.subject_id = s.id;
            r.treatment = s.treatment;
            r.covariates = s.covariates;
            r.time = j + 1;
            if (s.observed[j]) r.outcome = s.outcomes[j];
            out.push_back(std::move(r));
        }
    }
    return out;
}

DropoutIndicators dropout_indicators(const TrialDataset& ds) {
    DropoutIndicators ind;
    ind.d = Eigen::MatrixXi::Zero(ds.n(), ds.J);
    ind.none_observed.assign(ds.n(), 0);
    for (int i = 0; i < ds.n(); ++i) {
        const int m = ds.subjects[i].observed_count();
        if (m == 0)
            ind.none_observed[i] = 1;
        else
            ind.d(i, m - 1) = 1;
    }
    return ind;
}

OverlapSets overlap_sets(const TrialDataset& ds) {
    OverlapSets sets;
    sets.J = ds.J;
    sets.idx.assign(ds.J, std::vector<std::vector<int>>(ds.J));
    for (int i = 0; i < ds.n(); ++i) {
        const int m = ds.subjects[i].observed_count();
        for (int j = 0; j < m; ++j)
            for (int jp = 0; jp < m; ++jp) sets.idx[j][jp].push_back(i);
    }
    for (int j = 0; j < ds.J; ++j)
        for (int jp = j; jp < ds.J; ++jp)
            if (sets.idx[j][jp].empty()) sets.empty_pairs.emplace_back(j + 1, jp + 1);
    return sets;
}

const char* variant_name(ModelVariant v) {
    switch (v) {
        case ModelVariant::Ancova: return "ancova";
        case ModelVariant::Mmrm: return "mmrm";
        case ModelVariant::MmrmInteract: return "mmrmx";
    }
    return "?";
}

int design_cols(ModelVariant v, int J, int K) {
    switch (v) {
        case ModelVariant::Ancova: return 2 + K;
        case ModelVariant::Mmrm: return 2 * J + K;
        case ModelVariant::MmrmInteract: return J * (2 + K);
    }
    return 0;
}

Eigen::MatrixXd design_rows(const Eigen::VectorXd& x, int treatment, ModelVariant v, int J) {
    const int K = static_cast<int>(x.size());
    const double w = static_cast<double>(treatment);
    switch (v) {
        case ModelVariant::Ancova: {
            Eigen::MatrixXd Z(1, 2 + K);
            Z(0, 0) = 1.0;
            Z.block(0, 1, 1, K) = x.transpose();
            Z(0, 1 + K) = w;
            return Z;
        }
        case ModelVariant::Mmrm: {
            Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(J, 2 * J + K);
            for (int j = 0; j < J; ++j) {
                Z(j, j) = 1.0;
                Z.block(j, J, 1, K) = x.transpose();
                Z(j, J + K + j) = w;
            }
            return Z;
        }
        case ModelVariant::MmrmInteract: {
            Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(J, J * (2 + K));
            for (int j = 0; j < J; ++j) {
                Z(j, j) = 1.0;
                Z.block(j, J + j * K, 1, K) = x.transpose();
                Z(j, J + J * K + j) = w;
            }
            return Z;
        }
    }
    throw Error("InvalidModel", "unknown model variant");
}

Eigen::VectorXd covariate_means(const TrialDataset& ds) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(ds.K);
    for (const auto& s : ds.subjects) mean += s.covariates;
    return mean / static_cast<double>(ds.n());
}

std::vector<Eigen::MatrixXd> design_matrices(const TrialDataset& ds, ModelVariant v,
                                             bool centering) {
    const Eigen::VectorXd shift =
        centering ? covariate_means(ds) : Eigen::VectorXd::Zero(ds.K).eval();
    std::vector<Eigen::MatrixXd> out;
    out.reserve(ds.subjects.size());
    for (const auto& s : ds.subjects)
        out.push_back(design_rows(s.covariates - shift, s.treatment, v, ds.J));
    return out;
}

}  // namespace mmrmx
