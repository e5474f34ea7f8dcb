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
#include "emoscale/tensor.hpp"

namespace emoscale {

/// Mean over all elements of (pred - target)^2; shapes must match exactly.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

struct AdamWHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

struct AdamWState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t step_count = 0;
    AdamWHyper hyper;

    static AdamWState for_parameters(std::span<const NamedTensor> params, const AdamWHyper& hyper = {});
};

/// One decoupled-weight-decay Adam update applied in place:
///   theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)
/// Throws TrainingAborted naming the parameter if a gradient is non-finite;
/// nothing is modified in that case.
void adamw_step(std::span<NamedTensor> params, std::span<const std::vector<double>> grads, AdamWState& state);

struct ScheduleConfig {
    double lr_max = 1e-3;
    double lr_min = 1e-6;
    std::size_t t0 = 1;      // first cycle length in optimizer steps
    std::size_t t_mult = 1;

    void validate() const;
};

/// Cosine annealing with warm restarts, evaluated per optimizer step.
double cosine_warm_restart_lr(std::size_t step, const ScheduleConfig& sched);

struct TrainReport {
    std::vector<double> epoch_loss;  // mean training MSE per epoch
    std::vector<std::optional<double>> val_rmse;  // empty optional when no validation data
    std::size_t steps = 0;
    double seconds = 0.0;
    std::string checkpoint;
};

void to_json(nlohmann::json& j, const TrainReport& r);

struct TrainOptions {
    std::size_t epochs = 10;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    ScheduleConfig schedule{1e-3, 1e-6, 0, 1};  // t0 == 0 means one epoch's worth of steps
    AdamWHyper optimizer;
    std::function<void(std::size_t epoch, double loss, std::optional<double> val_rmse)> on_epoch;
};

struct TrainResult {
    ModelParams params;
    TrainReport report;
};

/// Shuffled mini-batch AdamW training of a freshly initialized model
/// (config.seed seeds the weights, options.seed the shuffling).
TrainResult train(std::span<const Sample> train_set, std::span<const Sample> val_set, const ModelConfig& config,
                  const TrainOptions& options);

/// Continues training from existing parameters.
TrainResult train(std::span<const Sample> train_set, std::span<const Sample> val_set, ModelParams params,
                  const TrainOptions& options);

/// Loss and gradients of the mean batch MSE, summed over samples in order.
double batch_gradients(std::span<const Sample> batch, const ModelParams& params, std::span<const NamedTensor> named,
                       std::vector<std::vector<double>>& grads);

// Overall RMSE of clamped predictions across both dimensions.
double validation_rmse(std::span<const Sample> samples, const ModelParams& params);

struct GradCheckGroup {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    bool frozen = false;  // reported as "no gradient"
};

struct GradCheckReport {
    std::vector<GradCheckGroup> groups;
    double worst = 0.0;
    bool passed = false;
};

struct GradCheckOptions {
    double eps = 1e-5;
    double tolerance = 1e-4;
    std::uint64_t seed = 0;
    std::size_t max_entries_per_group = 12;  // 0 checks every entry
};

/// |analytic - numeric| / max(|analytic|, |numeric|, kGradCheckFloor)
double gradcheck_relative_error(double analytic, double numeric);
inline constexpr double kGradCheckFloor = 1e-7;

/// Central finite differences of mse_loss(forward(x)) against backward,
/// for a random window and target. Never throws on mismatch; eps <= 0 is a ParameterError.
GradCheckReport grad_check(const ModelConfig& config, const GradCheckOptions& options);

}  // namespace emoscale
