#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "mmrmx/errors.hpp"

namespace mmrmx {

// ---------------------------------------------------------------------------
// Data model for longitudinal trial datasets with monotone dropout.
//
// Outcome j (1-based) of a subject is observed iff j < dropout_time, with
// dropout_time in {1, ..., J+1}; dropout_time == J+1 means fully observed.
// Missing outcomes are carried as an explicit presence mask; the stored
// value at a missing slot is 0 and is only ever touched by zero-padded
// matrix assembly.
// ---------------------------------------------------------------------------

struct Subject {
    std::int64_t id = 0;
    Eigen::VectorXd covariates;       // length K
    int treatment = 0;                // 0 or 1
    Eigen::VectorXd outcomes;         // length J; 0.0 where missing
    std::vector<std::uint8_t> observed;  // length J presence mask
    int dropout_time = 0;             // T in {1, ..., J+1}

    // Number of observed outcomes (the observed prefix length T-1).
    int observed_count() const { return dropout_time - 1; }
};

struct TrialDataset {
    std::vector<Subject> subjects;
    int K = 0;
    int J = 0;

    int n() const { return static_cast<int>(subjects.size()); }

    // Enforces monotone missingness, mask/dropout_time consistency, shared
    // dimensions, and non-empty arms. Throws on violation.
    void validate() const;
};

struct LongRecord {
    std::int64_t subject_id = 0;
    int treatment = 0;
    Eigen::VectorXd covariates;
    int time = 0;  // 1-based
    std::optional<double> outcome;
};

// Builds a validated dataset from long-format records. Rows may arrive in
// any order; a subject's missing rows count as missing outcomes. Subjects
// keep their order of first appearance.
TrialDataset from_long_records(const std::vector<LongRecord>& records);

// Inverse of from_long_records: one row per (subject, time), missing
// outcomes carried as empty optionals.
std::vector<LongRecord> to_long_records(const TrialDataset& ds);

// ---------------------------------------------------------------------------
// Dropout bookkeeping
// ---------------------------------------------------------------------------

// d(i, j) = 1 iff subject i was last observed at time j+1 (0-based column).
// Subjects with no observed outcomes have an all-zero row and are flagged.
struct DropoutIndicators {
    Eigen::MatrixXi d;
    std::vector<std::uint8_t> none_observed;
};

DropoutIndicators dropout_indicators(const TrialDataset& ds);

// Index sets C[j][j'] of subjects observed at both times j+1 and j'+1
// (0-based access). Symmetric; empty pairs are listed, not fatal.
struct OverlapSets {
    int J = 0;
    std::vector<std::vector<std::vector<int>>> idx;  // idx[j][j']
    std::vector<std::pair<int, int>> empty_pairs;

    const std::vector<int>& at(int j, int jp) const { return idx[j][jp]; }
    bool any_empty() const { return !empty_pairs.empty(); }
};

OverlapSets overlap_sets(const TrialDataset& ds);

// ---------------------------------------------------------------------------
// Design matrices
// ---------------------------------------------------------------------------

enum class ModelVariant { Ancova, Mmrm, MmrmInteract };

const char* variant_name(ModelVariant v);

// Number of mean-model columns: 2+K (Ancova), 2J+K (Mmrm), J(2+K)
// (MmrmInteract).
int design_cols(ModelVariant v, int J, int K);

// Per-subject design matrix with one row per timepoint (a single row for
// Ancova) and the parameter layout [alphas | betas | taus]:
//   Mmrm row j:         [e_j | X | W e_j]
//   MmrmInteract row j:  [e_j | e_j (x) X | W e_j]
//   Ancova:             [1 | X | W]
// With centering on, covariates are grand-mean centered across subjects.
std::vector<Eigen::MatrixXd> design_matrices(const TrialDataset& ds, ModelVariant v,
                                             bool centering);

// Grand mean of the covariates over subjects (one entry per covariate).
Eigen::VectorXd covariate_means(const TrialDataset& ds);

// Single-subject design row block given (possibly centered) covariates and
// treatment; used by both the public builder and the fit kernels.
Eigen::MatrixXd design_rows(const Eigen::VectorXd& x, int treatment, ModelVariant v,
                            int J);

}  // namespace mmrmx
