#include "emoscale/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "emoscale/errors.hpp"

namespace emoscale {

double rmse(std::span<const double> preds, std::span<const double> targets) {
    if (preds.empty() || preds.size() != targets.size()) {
        throw InputError("rmse: need equal, non-zero lengths (got " + std::to_string(preds.size()) + " and " +
                         std::to_string(targets.size()) + ")");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) sq += (preds[i] - targets[i]) * (preds[i] - targets[i]);
    return std::sqrt(sq / static_cast<double>(preds.size()));
}

MeanStd mean_and_std(std::span<const double> values) {
    if (values.empty()) throw InputError("mean_and_std: no values");
    MeanStd out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(var / static_cast<double>(values.size()));
    return out;
}

namespace {

FoldScore score(std::span<const Sample> samples, std::span<const Prediction> preds, std::size_t fold, std::string label) {
    std::vector<double> pv, pa, tv, ta;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        pv.push_back(preds[i].valence);
        pa.push_back(preds[i].arousal);
        tv.push_back(samples[i].valence);
        ta.push_back(samples[i].arousal);
    }
    return {fold, std::move(label), samples.size(), rmse(pa, ta), rmse(pv, tv)};
}

}  // namespace

ScenarioResult evaluate_scenario(const Predictor& predictor, std::span<const Trial> trials, Scenario scenario,
                                 std::uint64_t seed, const EvalOptions& options) {
    SplitOptions split = options.split;
    split.seq_len = options.seq_len;
    ScenarioResult result;
    result.scenario = scenario;

    const std::size_t folds = fold_count(scenario, trials, split);
    for (std::size_t f = 0; f < folds; ++f) {
        const FoldPlan plan = scenario_split(trials, scenario, f, seed, split);
        const auto train = collect_windows(trials, plan.train, options.seq_len, options.hop);
        const auto test_raw = collect_windows(trials, plan.test, options.seq_len, options.hop);
        if (test_raw.empty()) {
            result.flagged.push_back({f, "no test windows"});
            continue;
        }
        if (train.empty()) {
            result.flagged.push_back({f, "no training windows for standardization statistics"});
            continue;
        }
        const auto test = standardize(test_raw, compute_channel_stats(train));
        std::vector<Prediction> preds;
        preds.reserve(test.size());
        for (const auto& s : test) preds.push_back(predictor(s));

        if (scenario == Scenario::across_time) {
            // one logical fold per test sequence (trial)
            std::map<std::pair<int, int>, std::vector<std::size_t>> by_trial;
            for (std::size_t i = 0; i < test.size(); ++i) by_trial[{test[i].origin.subject_id, test[i].origin.video_id}].push_back(i);
            for (const auto& [key, idx] : by_trial) {
                std::vector<Sample> s;
                std::vector<Prediction> p;
                for (auto i : idx) {
                    s.push_back(test[i]);
                    p.push_back(preds[i]);
                }
                result.folds.push_back(score(s, p, f, "subject " + std::to_string(key.first) + " video " + std::to_string(key.second)));
            }
        } else {
            result.folds.push_back(score(test, preds, f, "fold " + std::to_string(f)));
        }
    }
    if (!result.folds.empty()) {
        std::vector<double> a, v;
        for (const auto& fs : result.folds) {
            a.push_back(fs.arousal_rmse);
            v.push_back(fs.valence_rmse);
        }
        const auto ma = mean_and_std(a), mv = mean_and_std(v);
        result.evaluated = true;
        result.arousal_rmse = ma.mean;
        result.arousal_std = ma.std;
        result.valence_rmse = mv.mean;
        result.valence_std = mv.std;
    }
    return result;
}

ScenarioResult evaluate_scenario(const ModelParams& params, std::span<const Trial> trials, Scenario scenario,
                                 std::uint64_t seed, const EvalOptions& options) {
    if (params.config.seq_len != options.seq_len) {
        throw InputError("checkpoint seq_len " + std::to_string(params.config.seq_len) + " does not match windowing seq_len " +
                         std::to_string(options.seq_len));
    }
    return evaluate_scenario([&](const Sample& s) { return predict(s.window, params); }, trials, scenario, seed, options);
}

EvalReport assemble_report(std::vector<ScenarioResult> rows) {
    EvalReport report;
    report.rows = std::move(rows);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : report.rows) {
        if (!r.evaluated) continue;
        sum += r.arousal_rmse + r.valence_rmse;
        n += 2;
    }
    if (n > 0) report.overall_rmse = sum / static_cast<double>(n);
    return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    nlohmann::json flagged = nlohmann::json::array();
    for (const auto& r : report.rows) {
        for (const char* dim : {"arousal", "valence"}) {
            const bool arousal = std::string(dim) == "arousal";
            nlohmann::json folds = nlohmann::json::array();
            for (const auto& f : r.folds) {
                folds.push_back({{"fold", f.fold},
                                 {"label", f.label},
                                 {"windows", f.windows},
                                 {"rmse", arousal ? f.arousal_rmse : f.valence_rmse}});
            }
            nlohmann::json row{{"scenario", to_string(r.scenario)}, {"dimension", dim}, {"folds", folds}};
            row["rmse"] = r.evaluated ? nlohmann::json(arousal ? r.arousal_rmse : r.valence_rmse) : nlohmann::json(nullptr);
            row["std"] = r.evaluated ? nlohmann::json(arousal ? r.arousal_std : r.valence_std) : nlohmann::json(nullptr);
            rows.push_back(std::move(row));
        }
        for (const auto& f : r.flagged) flagged.push_back({{"scenario", to_string(r.scenario)}, {"fold", f.fold}, {"reason", f.reason}});
    }
    return {{"format", "emoscale-eval-report"},
            {"version", 1},
            {"std_definition", kStdDefinition},
            {"rows", rows},
            {"flagged", flagged},
            {"overall_rmse", report.overall_rmse ? nlohmann::json(*report.overall_rmse) : nlohmann::json(nullptr)},
            {"overall_label", "mean scenario RMSE"}};
}

EvalReport report_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "emoscale-eval-report") throw ParseError("report: unrecognized format tag");
        std::vector<ScenarioResult> results;
        std::map<Scenario, std::size_t> index;
        auto slot = [&](Scenario s) -> ScenarioResult& {
            auto [it, inserted] = index.emplace(s, results.size());
            if (inserted) {
                results.emplace_back();
                results.back().scenario = s;
            }
            return results[it->second];
        };
        for (const auto& row : doc.at("rows")) {
            auto& r = slot(parse_scenario(row.at("scenario").get<std::string>()));
            const auto dim = row.at("dimension").get<std::string>();
            if (dim != "arousal" && dim != "valence") throw ParseError("report: unknown dimension " + dim);
            const bool arousal = dim == "arousal";
            r.evaluated = !row.at("rmse").is_null();
            if (r.evaluated) {
                (arousal ? r.arousal_rmse : r.valence_rmse) = row.at("rmse").get<double>();
                (arousal ? r.arousal_std : r.valence_std) = row.at("std").get<double>();
            }
            const auto& folds = row.at("folds");
            if (r.folds.size() < folds.size()) r.folds.resize(folds.size());
            for (std::size_t i = 0; i < folds.size(); ++i) {
                auto& f = r.folds[i];
                f.fold = folds[i].at("fold").get<std::size_t>();
                f.label = folds[i].at("label").get<std::string>();
                f.windows = folds[i].at("windows").get<std::size_t>();
                (arousal ? f.arousal_rmse : f.valence_rmse) = folds[i].at("rmse").get<double>();
            }
        }
        for (const auto& fl : doc.at("flagged")) {
            slot(parse_scenario(fl.at("scenario").get<std::string>()))
                .flagged.push_back({fl.at("fold").get<std::size_t>(), fl.at("reason").get<std::string>()});
        }
        EvalReport report;
        report.rows = std::move(results);
        if (!doc.at("overall_rmse").is_null()) report.overall_rmse = doc.at("overall_rmse").get<double>();
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
}

std::string format_table(const EvalReport& report) {
    std::ostringstream out;
    auto cell = [&](bool ok, double v) {
        if (ok)
            out << std::setw(14) << std::fixed << std::setprecision(4) << v;
        else
            out << std::setw(14) << "n/a";
    };
    out << std::left << std::setw(26) << "Scenarios type" << std::right << std::setw(14) << "Arousal RMSE"
        << std::setw(14) << "Arousal STD" << std::setw(14) << "Valence RMSE" << std::setw(14) << "Valence STD" << '\n';
    for (const auto& r : report.rows) {
        out << std::left << std::setw(26) << display_name(r.scenario) << std::right;
        cell(r.evaluated, r.arousal_rmse);
        cell(r.evaluated, r.arousal_std);
        cell(r.evaluated, r.valence_rmse);
        cell(r.evaluated, r.valence_std);
        out << '\n';
    }
    out << "Mean scenario RMSE: ";
    if (report.overall_rmse)
        out << std::fixed << std::setprecision(4) << *report.overall_rmse;
    else
        out << "n/a";
    out << '\n';
    for (const auto& r : report.rows)
        for (const auto& f : r.flagged) out << "flagged: " << to_string(r.scenario) << " fold " << f.fold << ": " << f.reason << '\n';
    out << kStdDefinition << '\n';
    return out.str();
}

nlohmann::json manifest_to_json(const RunManifest& m) {
    return {{"config", m.config},       {"data_seed", m.data_seed}, {"train_seed", m.train_seed},
            {"dataset", m.dataset},     {"scenario", m.scenario},   {"fold", m.fold},
            {"epochs", m.epochs},       {"batch_size", m.batch_size}, {"hop", m.hop},
            {"checkpoint", m.checkpoint}, {"timestamp", m.timestamp}};
}

}  // namespace emoscale
