#include "emoscale/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "emoscale/errors.hpp"

namespace emoscale {

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) {
        throw DimensionError("mse_loss: prediction " + shape_to_string(pred.shape()) + " vs target " +
                             shape_to_string(target.shape()));
    }
    Tensor diff = sub(pred, target);
    return mean(mul(diff, diff));
}

AdamWState AdamWState::for_parameters(std::span<const NamedTensor> params, const AdamWHyper& hyper) {
    AdamWState s;
    s.hyper = hyper;
    for (const auto& p : params) {
        s.m.emplace_back(p.tensor.numel(), 0.0);
        s.v.emplace_back(p.tensor.numel(), 0.0);
    }
    return s;
}

void adamw_step(std::span<NamedTensor> params, std::span<const std::vector<double>> grads, AdamWState& state) {
    if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw DimensionError("adamw_step: parameter, gradient and state counts differ");
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        const std::size_t n = params[k].tensor.numel();
        if (grads[k].size() != n || state.m[k].size() != n || state.v[k].size() != n) {
            throw DimensionError("adamw_step: size mismatch for " + params[k].name);
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(grads[k][i])) {
                throw TrainingAborted("non-finite gradient in parameter " + params[k].name + " at index " + std::to_string(i));
            }
        }
    }
    const auto& h = state.hyper;
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double correction1 = 1.0 - std::pow(h.beta1, t);
    const double correction2 = 1.0 - std::pow(h.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto theta = params[k].tensor.mutable_data();
        auto& m = state.m[k];
        auto& v = state.v[k];
        const auto& g = grads[k];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
            v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            theta[i] -= h.lr * (m_hat / (std::sqrt(v_hat) + h.eps) + h.weight_decay * theta[i]);
        }
    }
}

void ScheduleConfig::validate() const {
    if (!(lr_max >= lr_min && lr_min >= 0.0)) throw ParameterError("schedule requires lr_max >= lr_min >= 0");
    if (t0 < 1) throw ParameterError("schedule requires T0 >= 1");
    if (t_mult < 1) throw ParameterError("schedule requires T_mult >= 1");
}

double cosine_warm_restart_lr(std::size_t step, const ScheduleConfig& sched) {
    sched.validate();
    std::size_t cycle_len = sched.t0;
    std::size_t t_cur = step;
    if (sched.t_mult == 1) {
        t_cur = step % cycle_len;
    } else {
        while (t_cur >= cycle_len) {
            t_cur -= cycle_len;
            cycle_len *= sched.t_mult;
        }
    }
    const double frac = static_cast<double>(t_cur) / static_cast<double>(cycle_len);
    return sched.lr_min + 0.5 * (sched.lr_max - sched.lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

void to_json(nlohmann::json& j, const TrainReport& r) {
    nlohmann::json val = nlohmann::json::array();
    for (const auto& v : r.val_rmse) val.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    j = nlohmann::json{{"epoch_loss", r.epoch_loss},
                       {"val_rmse", val},
                       {"steps", r.steps},
                       {"seconds", r.seconds},
                       {"checkpoint", r.checkpoint}};
}

double batch_gradients(std::span<const Sample> batch, const ModelParams& params, std::span<const NamedTensor> named,
                       std::vector<std::vector<double>>& grads) {
    std::vector<Tensor> preds;
    std::vector<double> targets;
    preds.reserve(batch.size());
    for (const auto& s : batch) {
        preds.push_back(forward(s.window, params));
        targets.push_back(s.valence);
        targets.push_back(s.arousal);
    }
    Tensor loss = mse_loss(stack(preds), Tensor::from({batch.size(), 2}, std::move(targets)));
    GradientMap gm = backward(loss);
    grads.resize(named.size());
    for (std::size_t k = 0; k < named.size(); ++k) {
        if (const auto* g = gm.find(named[k].tensor)) {
            grads[k] = *g;
        } else {
            grads[k].assign(named[k].tensor.numel(), 0.0);
        }
    }
    return loss.item();
}

double validation_rmse(std::span<const Sample> samples, const ModelParams& params) {
    if (samples.empty()) throw InputError("validation_rmse: no samples");
    double sq = 0.0;
    for (const auto& s : samples) {
        const auto p = predict(s.window, params);
        sq += (p.valence - s.valence) * (p.valence - s.valence) + (p.arousal - s.arousal) * (p.arousal - s.arousal);
    }
    return std::sqrt(sq / (2.0 * static_cast<double>(samples.size())));
}

TrainResult train(std::span<const Sample> train_set, std::span<const Sample> val_set, const ModelConfig& config,
                  const TrainOptions& options) {
    return train(train_set, val_set, init_model(config), options);
}

TrainResult train(std::span<const Sample> train_set, std::span<const Sample> val_set, ModelParams params,
                  const TrainOptions& options) {
    if (train_set.empty()) throw InputError("train: empty training set");
    if (options.batch_size == 0) throw ParameterError("train: batch size must be positive");
    const auto start = std::chrono::steady_clock::now();

    const std::size_t n = train_set.size();
    const std::size_t steps_per_epoch = (n + options.batch_size - 1) / options.batch_size;
    ScheduleConfig sched = options.schedule;
    if (sched.t0 == 0) sched.t0 = steps_per_epoch;
    sched.validate();

    auto named = params.named_parameters();
    AdamWState state = AdamWState::for_parameters(named, options.optimizer);
    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    std::vector<std::vector<double>> grads;
    std::vector<Sample> batch;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < steps_per_epoch; ++b) {
            batch.clear();
            for (std::size_t i = b * options.batch_size; i < std::min(n, (b + 1) * options.batch_size); ++i)
                batch.push_back(train_set[order[i]]);
            const double loss = batch_gradients(batch, params, named, grads);
            if (!std::isfinite(loss)) {
                throw TrainingAborted("non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(b));
            }
            loss_sum += loss * static_cast<double>(batch.size());
            state.hyper.lr = cosine_warm_restart_lr(result.report.steps, sched);
            try {
                adamw_step(named, grads, state);
            } catch (const TrainingAborted& e) {
                throw TrainingAborted(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", step " +
                                      std::to_string(b) + ")");
            }
            ++result.report.steps;
        }
        const double epoch_loss = loss_sum / static_cast<double>(n);
        result.report.epoch_loss.push_back(epoch_loss);
        std::optional<double> val;
        if (!val_set.empty()) val = validation_rmse(val_set, params);
        result.report.val_rmse.push_back(val);
        if (options.on_epoch) options.on_epoch(epoch, epoch_loss, val);
    }
    result.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.params = std::move(params);
    return result;
}

double gradcheck_relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const ModelConfig& base, const GradCheckOptions& options) {
    if (!(options.eps > 0.0)) throw ParameterError("grad_check: eps must be positive");
    if (!(options.tolerance > 0.0)) throw ParameterError("grad_check: tolerance must be positive");
    ModelConfig config = base;
    config.seed = options.seed;
    ModelParams params = init_model(config);

    std::mt19937_64 rng(options.seed ^ 0x67726164ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> score(kScoreMin, kScoreMax);
    std::vector<double> window(config.seq_len * kSignalChannels);
    for (auto& v : window) v = normal(rng);
    const Tensor x = Tensor::from({config.seq_len, kSignalChannels}, std::move(window));
    const Tensor target = Tensor::from({2}, {score(rng), score(rng)});

    auto named = params.named_parameters();
    const GradientMap analytic = backward(mse_loss(forward(x, params), target));
    auto loss_at = [&] {
        NoGradGuard guard;
        return mse_loss(forward(x, params), target).item();
    };

    GradCheckReport report;
    report.passed = true;
    for (auto& p : named) {
        GradCheckGroup group;
        group.name = p.name;
        const auto* g = analytic.find(p.tensor);
        std::vector<std::size_t> idx(p.tensor.numel());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        if (options.max_entries_per_group != 0 && idx.size() > options.max_entries_per_group) {
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(options.max_entries_per_group);
            std::sort(idx.begin(), idx.end());
        }
        auto values = p.tensor.mutable_data();
        for (auto i : idx) {
            const double saved = values[i];
            values[i] = saved + options.eps;
            const double plus = loss_at();
            values[i] = saved - options.eps;
            const double minus = loss_at();
            values[i] = saved;
            const double numeric = (plus - minus) / (2.0 * options.eps);
            const double a = g ? (*g)[i] : 0.0;
            group.max_rel_error = std::max(group.max_rel_error, gradcheck_relative_error(a, numeric));
            ++group.checked;
        }
        report.worst = std::max(report.worst, group.max_rel_error);
        report.groups.push_back(group);
    }
    for (std::size_t s = 0; s < params.branches.size(); ++s) {
        const auto& proj = params.branches[s].gaussian;
        GradCheckGroup group;
        group.name = "scale" + std::to_string(config.scales[s]) + ".gaussian";
        group.frozen = !analytic.contains(proj.weights) && !analytic.contains(proj.offsets);
        if (!group.frozen) report.passed = false;
        report.groups.push_back(group);
    }
    if (!(report.worst < options.tolerance)) report.passed = false;
    return report;
}

}  // namespace emoscale
