#pragma once

#include <string>

#include "equifuse/config.hpp"
#include "equifuse/dataset_io.hpp"
#include "equifuse/sampling.hpp"

namespace equifuse {

// Seeded 8:1:1 split by record index.
struct SplitIndices {
  std::vector<int> train, val, test;
};
SplitIndices split_dataset(int n_records, std::uint64_t seed);

// Trains the configured pipeline with Adam on the non-frozen groups, writes
// <out_dir>/report.json and <out_dir>/checkpoint.json, and returns the
// report. Deterministic given (config, seed, dataset); wall_clock_sec is the
// only field that varies between identical runs.
nlohmann::json train_run(const RunConfig& cfg);

// Metrics of a stored checkpoint over one split ("train", "val" or "test").
// No parameter mutation. Empty splits raise DataError.
nlohmann::json evaluate_run(const RunConfig& cfg,
                            const std::string& checkpoint_path,
                            const std::string& split);

// Prediction in the dataset file format: dynamics consumes the last T frames
// of each input trajectory and writes F predicted frames; design rewrites
// each record with predicted categories and backbone.
void predict_run(const RunConfig& cfg, const std::string& checkpoint_path,
                 const std::string& input_path, const std::string& output_path);

// The architecture/prompt ablation matrix: seven variants sharing the seed
// and dataset, one report per row plus a combined CSV
// (variant, seed, metric, value) at <out_dir>/ablation.csv. A failing row is
// recorded and the matrix continues.
nlohmann::json ablate_run(const RunConfig& base, const std::string& out_dir);

// Row labels of the ablation matrix, in execution order.
const std::vector<std::string>& ablation_row_names();
// Per-row config derivation, exposed for wiring tests.
RunConfig ablation_row_config(const RunConfig& base, const std::string& row);

}  // namespace equifuse
