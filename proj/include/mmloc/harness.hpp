#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmloc/crlb.hpp"
#include "mmloc/ensemble.hpp"
#include "mmloc/geometry.hpp"
#include "mmloc/neural_estimators.hpp"

namespace mmloc {

enum class EstimatorKind { wls, wlsnet, lsnet, fp, ewlsnet };

std::string estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(const std::string& name);

struct RunConfig {
    Scenario scenario;
    NoiseModel noise;
    EstimatorKind estimator = EstimatorKind::wls;
    int trials = 1000;
    double rho = 1.0;  // reported alongside results; sigmas are already scaled
    int na = 6;
    std::uint64_t master_seed = 0;
    bool with_mapping = false;   // run the reflection stage per trial
    bool keep_trials = false;    // retain per-trial errors in the report
    bool measure_time = false;   // fill wall_clock (non-deterministic field)
    double max_failure_fraction = 0.10;
};

struct MetricsReport {
    double rmse_u = 0.0;
    double rmse_udot = 0.0;
    std::vector<double> rmse_s;  // per scatterer-bearing receiver, ascending
    std::vector<int> mapped_rrhs;
    double crlb_pos = 0.0;
    double crlb_vel = 0.0;
    std::vector<double> crlb_s;
    Eigen::VectorXd mean_error;  // signed mean of [u - u°; udot - udot°]
    double wall_clock_per_estimate = 0.0;
    int trials = 0;
    int failures = 0;
    bool velocity_valid = false;  // false when the reduced solve was used
    std::vector<double> trial_pos_error;  // filled when keep_trials
    std::vector<double> trial_vel_error;
};

// Nets used by the learned estimators; unused entries may stay null.
struct EstimatorAssets {
    const TrainedNet* net = nullptr;            // wlsnet / lsnet / fp
    const TrainedEnsemble* ensemble = nullptr;  // ewlsnet
};

// Runs cfg.trials independent trials.  Each trial draws its noise from a
// child generator keyed by (master_seed, trial index), so schedules do not
// matter; per-trial results land in slot arrays and are reduced serially
// with compensated summation.  The parallel entry point distributes trials
// over OpenMP threads and returns bit-identical results to the serial one.
//
// Noise slots are drawn for the scenario's full receiver set and the first
// 4*na-2 layout entries are used, so runs with different na (or scaled
// sigmas) and the same master seed see matched draws.
MetricsReport monte_carlo(const RunConfig& cfg, const EstimatorAssets& assets = {});
MetricsReport monte_carlo_serial(const RunConfig& cfg,
                                 const EstimatorAssets& assets = {});

struct BenchResult {
    double t_wls = 0.0;       // seconds per estimate (median)
    double t_wlsnet = 0.0;
    double t_ewlsnet = 0.0;
    int repetitions = 0;
};

// Medians over >= 1000 repetitions on one identical synthesized input.
BenchResult bench_timing(const Scenario& sc, const NoiseModel& noise, int na,
                         const TrainedNet& net, const TrainedEnsemble& ens,
                         std::uint64_t seed, int repetitions = 1000);

// Serializes a report; see emit_report for the column contract.
struct ReportRow {
    std::string estimator;
    std::string scenario;
    double rho = 1.0;
    int na = 0;
    MetricsReport metrics;
};

void emit_report_csv(const std::vector<ReportRow>& rows, const std::string& path);
void emit_report_json(const std::vector<ReportRow>& rows, const std::string& path);
std::vector<ReportRow> read_report_json(const std::string& path);

}  // namespace mmloc
