// Benchmark: OpenMP replication loop against the serial reference, and the
// block-structured fit kernel against the literal score-equation path.

#include <chrono>
#include <cstdio>
#include <thread>

#include "mmrmx/csv.hpp"
#include "mmrmx/harness.hpp"
#include "mmrmx/rng.hpp"

using namespace mmrmx;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    int reps = 400;
    if (argc > 1) reps = std::atoi(argv[1]);
    const int hw = std::max(1u, std::thread::hardware_concurrency());

    ScenarioConfig cfg = default_scenario();
    cfg.delta = 0.3;
    cfg.rho = 0.9;
    cfg.b = 0.8;
    cfg.dropout_kind = DropoutKind::Mcar;
    cfg.n_reps = reps;
    cfg.seed = 1;

    std::printf("scenario: n=%d J=%d K=%d delta=%.2f rho=%.2f b=%.2f reps=%d\n",
                cfg.n, cfg.J, cfg.K, cfg.delta, cfg.rho, cfg.b, cfg.n_reps);

    auto t0 = std::chrono::steady_clock::now();
    const ScenarioResult serial = run_scenario_serial(cfg);
    const double t_serial = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const ScenarioResult parallel = run_scenario(cfg, hw);
    const double t_parallel = seconds_since(t0);

    const bool identical =
        results_csv_string({serial}) == results_csv_string({parallel});
    std::printf("replication loop: serial %.3fs | openmp(%d) %.3fs | speedup %.2fx | "
                "identical results: %s\n",
                t_serial, hw, t_parallel, t_serial / t_parallel,
                identical ? "yes" : "NO");

    // Fit kernel vs reference score-equation path on one dataset.
    TrialDataset ds = simulate_full_trial(cfg, derive_seed(cfg.seed, 0));
    ds = apply_mcar_dropout(ds, cfg.delta, derive_seed(cfg.seed, 0));
    for (ModelVariant v : {ModelVariant::Mmrm, ModelVariant::MmrmInteract}) {
        ModelSpec spec;
        spec.variant = v;
        const int n_fits = 200;
        t0 = std::chrono::steady_clock::now();
        double acc = 0.0;
        for (int i = 0; i < n_fits; ++i) acc += fit(ds, spec).tau_J;
        const double t_fast = seconds_since(t0) / n_fits;
        t0 = std::chrono::steady_clock::now();
        for (int i = 0; i < 20; ++i) acc += fit_reference(ds, spec).tau_J;
        const double t_ref = seconds_since(t0) / 20;
        std::printf("fit kernel (%s): %.3f ms | reference %.3f ms | speedup %.1fx "
                    "(acc %.3f)\n",
                    variant_name(v), 1e3 * t_fast, 1e3 * t_ref, t_ref / t_fast, acc);
    }
    return identical ? 0 : 1;
}
