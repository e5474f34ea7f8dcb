#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "emoscale/checkpoint.hpp"
#include "emoscale/data.hpp"
#include "emoscale/errors.hpp"
#include "emoscale/evaluation.hpp"
#include "emoscale/model.hpp"
#include "emoscale/splits.hpp"
#include "emoscale/synth.hpp"
#include "emoscale/training.hpp"

namespace emoscale::cli {

namespace fs = std::filesystem;

namespace {

struct SynthArgs {
    std::uint64_t seed = 7;
    std::size_t subjects = 4;
    std::size_t videos = 8;
    double duration = 60.0;
    std::string out;
};

struct TrainArgs {
    std::string data;
    std::string preset = "desk";
    std::size_t epochs = 10;
    std::size_t batch = 16;
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 0;
    std::size_t hop = 1000;
    std::string scenario = "across_time";
    std::size_t fold = 0;
    double lr = 1e-3;
    std::string out;
};

struct EvalArgs {
    std::string checkpoint;
    std::string data;
    std::size_t hop = 1000;
    std::uint64_t seed = 0;
    std::vector<std::string> scenarios;
    std::string out;
    std::string table;
};

struct GradcheckArgs {
    std::string preset = "desk";
    double tol = 1e-4;
    double eps = 1e-5;
    std::uint64_t seed = 0;
    std::size_t entries = 0;
};

struct ReportArgs {
    std::string in;
};

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write " + path.string());
    f << doc.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

int do_synth(const SynthArgs& a, std::ostream& out) {
    const auto trials = synth_dataset(a.seed, a.subjects, a.videos, a.duration);
    write_dataset(a.out, trials);
    write_json(fs::path(a.out) / "synth.json", {{"generator", "emoscale-synth"},
                                                {"seed", a.seed},
                                                {"subjects", a.subjects},
                                                {"videos", a.videos},
                                                {"duration_s", a.duration}});
    out << "wrote " << trials.size() << " trials to " << a.out << '\n';
    return kExitOk;
}

// Gradient checks run at finite-difference scale; "desk-full" keeps the training desk dimensions.
ModelConfig gradcheck_preset(const std::string& name) {
    if (name == "desk" || name == "gradcheck") return ModelConfig::gradcheck();
    if (name == "desk-full") return ModelConfig::desk();
    return ModelConfig::preset(name);
}

int do_train(const TrainArgs& a, std::ostream& out) {
    ModelConfig config = ModelConfig::preset(a.preset);
    config.seed = a.seed;
    const auto trials = load_dataset(a.data);
    const Scenario scenario = parse_scenario(a.scenario);
    SplitOptions split;
    split.seq_len = config.seq_len;
    const FoldPlan plan = scenario_split(trials, scenario, a.fold, a.split_seed, split);

    std::vector<std::string> warnings;
    const auto train_raw = collect_windows(trials, plan.train, config.seq_len, a.hop, &warnings);
    const auto val_raw = collect_windows(trials, plan.test, config.seq_len, a.hop, &warnings);
    for (const auto& w : warnings) out << "warning: " << w << '\n';
    if (train_raw.empty()) throw InputError("no training windows for " + a.scenario + " fold " + std::to_string(a.fold));
    const ChannelStats stats = compute_channel_stats(train_raw);
    const auto train_set = standardize(train_raw, stats);
    const auto val_set = standardize(val_raw, stats);

    TrainOptions opts;
    opts.epochs = a.epochs;
    opts.batch_size = a.batch;
    opts.seed = a.seed;
    opts.schedule.lr_max = a.lr;
    opts.schedule.t0 = 0;
    opts.optimizer.lr = a.lr;
    opts.on_epoch = [&](std::size_t epoch, double loss, std::optional<double> val) {
        out << "epoch " << epoch + 1 << "/" << a.epochs << "  train_mse " << std::setprecision(6) << loss;
        if (val) out << "  val_rmse " << *val;
        out << '\n';
    };
    out << "training on " << train_set.size() << " windows, validating on " << val_set.size() << '\n';
    auto result = train(train_set, val_set, config, opts);

    const fs::path ckpt(a.out);
    if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
    save_checkpoint(ckpt, result.params);
    result.report.checkpoint = ckpt.string();

    RunManifest manifest;
    manifest.config = config;
    manifest.train_seed = a.seed;
    manifest.dataset = fs::absolute(a.data).string();
    if (fs::exists(fs::path(a.data) / "synth.json")) {
        const auto synth = read_json(fs::path(a.data) / "synth.json");
        manifest.data_seed = synth.at("seed").get<std::uint64_t>();
    }
    manifest.scenario = to_string(scenario);
    manifest.fold = a.fold;
    manifest.epochs = a.epochs;
    manifest.batch_size = a.batch;
    manifest.hop = a.hop;
    manifest.checkpoint = ckpt.string();
    manifest.timestamp = utc_timestamp();
    auto manifest_doc = manifest_to_json(manifest);
    manifest_doc["split_seed"] = a.split_seed;
    manifest_doc["lr"] = a.lr;
    write_json(ckpt.string() + ".manifest.json", manifest_doc);
    write_json(ckpt.string() + ".train.json", result.report);
    out << "checkpoint written to " << ckpt.string() << '\n';
    return kExitOk;
}

int do_eval(const EvalArgs& a, std::ostream& out) {
    const ModelParams params = load_checkpoint(a.checkpoint);
    const auto trials = load_dataset(a.data);
    EvalOptions opts;
    opts.seq_len = params.config.seq_len;
    opts.hop = a.hop;

    std::vector<Scenario> scenarios;
    if (a.scenarios.empty()) {
        scenarios.assign(kScenarios.begin(), kScenarios.end());
    } else {
        for (const auto& s : a.scenarios) scenarios.push_back(parse_scenario(s));
    }
    std::vector<ScenarioResult> rows;
    for (auto s : scenarios) rows.push_back(evaluate_scenario(params, trials, s, a.seed, opts));
    const EvalReport report = assemble_report(std::move(rows));
    const std::string table = format_table(report);
    if (!a.out.empty()) write_json(a.out, report_to_json(report));
    if (!a.table.empty()) {
        std::ofstream f(a.table);
        if (!f) throw InputError("cannot write " + a.table);
        f << table;
    }
    out << table;
    return kExitOk;
}

int do_gradcheck(const GradcheckArgs& a, std::ostream& out) {
    GradCheckOptions opts;
    opts.eps = a.eps;
    opts.tolerance = a.tol;
    opts.seed = a.seed;
    opts.max_entries_per_group = a.entries;
    const auto start = std::chrono::steady_clock::now();
    const auto report = grad_check(gradcheck_preset(a.preset), opts);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& g : report.groups) {
        out << std::left << std::setw(34) << g.name << std::right;
        if (g.frozen)
            out << "  no gradient\n";
        else
            out << "  max_rel_err " << std::scientific << std::setprecision(3) << g.max_rel_error << "  (" << g.checked
                << " entries)\n";
    }
    out << "worst " << std::scientific << std::setprecision(3) << report.worst << " tolerance " << a.tol << " in "
        << std::fixed << std::setprecision(1) << secs << " s: " << (report.passed ? "PASS" : "FAIL") << '\n';
    return report.passed ? kExitOk : kExitInternalError;
}

int do_report(const ReportArgs& a, std::ostream& out) {
    out << format_table(report_from_json(read_json(a.in)));
    return kExitOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-scale transformer valence/arousal regression from physiological signals", "emoscale"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic dataset directory");
    synth_cmd->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
    synth_cmd->add_option("--subjects", synth.subjects, "Number of subjects")->capture_default_str();
    synth_cmd->add_option("--videos", synth.videos, "Videos per subject")->capture_default_str();
    synth_cmd->add_option("--duration", synth.duration, "Trial length in seconds")->capture_default_str();
    synth_cmd->add_option("--out", synth.out, "Output directory")->required();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train a model on one scenario fold");
    train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
    train_cmd->add_option("--preset", tr.preset, "paper | desk | gradcheck")->capture_default_str();
    train_cmd->add_option("--epochs", tr.epochs)->capture_default_str();
    train_cmd->add_option("--batch", tr.batch)->capture_default_str();
    train_cmd->add_option("--seed", tr.seed, "Initialization and shuffling seed")->capture_default_str();
    train_cmd->add_option("--split-seed", tr.split_seed, "Seed for across-subject grouping")->capture_default_str();
    train_cmd->add_option("--hop", tr.hop, "Window hop in samples")->capture_default_str();
    train_cmd->add_option("--scenario", tr.scenario)->capture_default_str();
    train_cmd->add_option("--fold", tr.fold)->capture_default_str();
    train_cmd->add_option("--lr", tr.lr, "Peak learning rate")->capture_default_str();
    train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on every scenario");
    eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();
    eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
    eval_cmd->add_option("--hop", ev.hop)->capture_default_str();
    eval_cmd->add_option("--seed", ev.seed, "Seed for across-subject grouping")->capture_default_str();
    eval_cmd->add_option("--scenario", ev.scenarios, "Restrict to these scenarios");
    eval_cmd->add_option("--out", ev.out, "EvalReport JSON path");
    eval_cmd->add_option("--table", ev.table, "Plain-text table path");

    GradcheckArgs gc;
    auto* grad_cmd = app.add_subcommand("gradcheck", "Compare backward gradients with finite differences");
    grad_cmd->add_option("--preset", gc.preset, "desk | desk-full | paper")->capture_default_str();
    grad_cmd->add_option("--tol", gc.tol)->capture_default_str();
    grad_cmd->add_option("--eps", gc.eps)->capture_default_str();
    grad_cmd->add_option("--seed", gc.seed)->capture_default_str();
    grad_cmd->add_option("--entries", gc.entries, "Entries checked per parameter tensor (0 = all)")->capture_default_str();

    ReportArgs rp;
    auto* report_cmd = app.add_subcommand("report", "Pretty-print a saved EvalReport");
    report_cmd->add_option("--in", rp.in)->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitInputError;
    }

    try {
        if (*synth_cmd) return do_synth(synth, out);
        if (*train_cmd) return do_train(tr, out);
        if (*eval_cmd) return do_eval(ev, out);
        if (*grad_cmd) return do_gradcheck(gc, out);
        if (*report_cmd) return do_report(rp, out);
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const RangeError& e) {
        err << "range error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const ParameterError& e) {
        err << "parameter error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternalError;
    }
    return kExitInternalError;
}

}  // namespace emoscale::cli
