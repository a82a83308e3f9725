#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wyimvc/dataset.hpp"
#include "wyimvc/model.hpp"

namespace wyimvc {

// Exact-tier solver block of the config file.
struct SolverSettings {
    int max_iters = 500;
    double tol = 1e-8;
    double kappa_total = 0.5;  // split uniformly over the bipartitions
    std::uint64_t seed = 0;

    void validate() const;
};

struct ExperimentConfig {
    std::string dataset_dir;  // empty -> use the synthetic generator
    SyntheticSpec synthetic;
    std::uint64_t data_seed = 0;  // seed for the synthetic draw
    std::vector<double> rates = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    // view_dims always come from the data; clusters too unless the config
    // overrides them with a positive [model] clusters value
    ModelConfig model;
    bool clusters_from_config = false;
    SolverSettings solver;
    std::string output = "results.csv";

    void validate() const;
};

// INI-style file: [section] headers, `key = value` lines, '#' comments.
// Sections: [experiment], [synthetic], [model], [solver]. Unknown keys are
// rejected.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(std::istream& in, const std::string& origin);

// WYIMVC_SEEDS (whitespace-separated list) and WYIMVC_OUTPUT replace the
// corresponding config fields when set
void apply_env_overrides(ExperimentConfig& cfg);

struct AccuracyRecord {
    std::string dataset;
    double missing_rate = 0.0;
    std::string seed;  // a number, or "mean"/"std" on summary rows
    double accuracy = 0.0;
    int epochs = 0;
    double wall_time_s = 0.0;
};

inline constexpr const char* kRecordHeader = "dataset,missing_rate,seed,accuracy,epochs,wall_time_s";

void write_record(std::ostream& os, const AccuracyRecord& r);
std::vector<AccuracyRecord> load_records_csv(const std::string& path);

// One (rate, seed) training cell: mask, train, predict, score.
AccuracyRecord run_cell(const MultiviewDataset& base, const ExperimentConfig& cfg, double rate,
                        std::uint64_t seed);

// Full sweep; rows are streamed to csv and flushed as they complete, so an
// abort still leaves the finished cells on disk. Per rate, two summary rows
// (mean and sample std over seeds) follow the seed rows.
std::vector<AccuracyRecord> run_experiment(const ExperimentConfig& cfg, std::ostream& csv);

}  // namespace wyimvc
