#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emoscale/data.hpp"
#include "emoscale/model.hpp"
#include "emoscale/splits.hpp"

namespace emoscale {

/// sqrt(mean((p - t)^2)); InputError on empty or mismatched inputs.
double rmse(std::span<const double> preds, std::span<const double> targets);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population
};
MeanStd mean_and_std(std::span<const double> values);

struct FoldScore {
    std::size_t fold = 0;
    std::string label;  // "fold 2", or "subject 3 video 5" for across_time sequences
    std::size_t windows = 0;
    double arousal_rmse = 0.0;
    double valence_rmse = 0.0;
};

struct FlaggedFold {
    std::size_t fold = 0;
    std::string reason;
};

struct ScenarioResult {
    Scenario scenario = Scenario::across_time;
    std::vector<FoldScore> folds;
    std::vector<FlaggedFold> flagged;
    bool evaluated = false;  // false when every fold was skipped
    double arousal_rmse = 0.0;
    double arousal_std = 0.0;
    double valence_rmse = 0.0;
    double valence_std = 0.0;
};

using Predictor = std::function<Prediction(const Sample&)>;

struct EvalOptions {
    std::size_t seq_len = 128;
    std::size_t hop = 1000;
    SplitOptions split;  // split.seq_len is overwritten with seq_len
};

/// Scores `predictor` on every fold's test windows, standardized with that
/// fold's training statistics. Folds without test windows are skipped and
/// flagged. Aggregates are the mean and population std over folds, or over
/// per-trial test sequences for across_time.
ScenarioResult evaluate_scenario(const Predictor& predictor, std::span<const Trial> trials, Scenario scenario,
                                 std::uint64_t seed, const EvalOptions& options);

// Clamped model inference; the checkpoint's seq_len must match options.seq_len.
ScenarioResult evaluate_scenario(const ModelParams& params, std::span<const Trial> trials, Scenario scenario,
                                 std::uint64_t seed, const EvalOptions& options);

inline constexpr const char* kStdDefinition =
    "STD is the population standard deviation of per-fold RMSE values "
    "(per test sequence for the across-time scenario)";

struct EvalReport {
    std::vector<ScenarioResult> rows;
    std::optional<double> overall_rmse;  // mean scenario RMSE over both dimensions
};

EvalReport assemble_report(std::vector<ScenarioResult> rows);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);

/// Plain-text table: Scenarios type | Arousal RMSE | Arousal STD | Valence RMSE | Valence STD.
std::string format_table(const EvalReport& report);

struct RunManifest {
    ModelConfig config;
    std::uint64_t data_seed = 0;
    std::uint64_t train_seed = 0;
    std::string dataset;
    std::string scenario;
    std::size_t fold = 0;
    std::size_t epochs = 0;
    std::size_t batch_size = 0;
    std::size_t hop = 0;
    std::string checkpoint;
    std::string timestamp;
};

nlohmann::json manifest_to_json(const RunManifest& manifest);

}  // namespace emoscale
