#include "emoscale/splits.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "emoscale/errors.hpp"

namespace emoscale {

namespace {

Segment whole(const std::vector<Trial>::size_type index, const Trial& t) { return {index, 0, t.signal_length()}; }

std::vector<int> shuffled_subjects(std::span<const Trial> trials, std::uint64_t seed) {
    std::set<int> ids;
    for (const auto& t : trials) ids.insert(t.subject_id);
    std::vector<int> subjects(ids.begin(), ids.end());
    std::mt19937_64 rng(seed);
    std::shuffle(subjects.begin(), subjects.end(), rng);
    return subjects;
}

}  // namespace

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::across_time: return "across_time";
        case Scenario::across_subject: return "across_subject";
        case Scenario::across_elicitor: return "across_elicitor";
        case Scenario::across_version: return "across_version";
    }
    return "?";
}

Scenario parse_scenario(const std::string& text) {
    std::string key = text;
    std::replace(key.begin(), key.end(), '-', '_');
    for (auto s : kScenarios)
        if (to_string(s) == key) return s;
    throw ParameterError("unknown scenario '" + text + "'");
}

std::string display_name(Scenario s) {
    switch (s) {
        case Scenario::across_time: return "Across-time scenario";
        case Scenario::across_subject: return "Across-subject scenario";
        case Scenario::across_elicitor: return "Across-elicitor scenario";
        case Scenario::across_version: return "Across-version scenario";
    }
    return "?";
}

std::size_t fold_count(Scenario scenario, std::span<const Trial> trials, const SplitOptions& options) {
    switch (scenario) {
        case Scenario::across_time: return 1;
        case Scenario::across_subject: {
            std::set<int> ids;
            for (const auto& t : trials) ids.insert(t.subject_id);
            return std::min(options.subject_groups, ids.size());
        }
        case Scenario::across_elicitor: return 4;
        case Scenario::across_version: return 2;
    }
    return 0;
}

FoldPlan scenario_split(std::span<const Trial> trials, Scenario scenario, std::size_t fold_index, std::uint64_t seed,
                        const SplitOptions& options) {
    const std::size_t folds = fold_count(scenario, trials, options);
    if (fold_index >= folds) {
        throw ParameterError("fold " + std::to_string(fold_index) + " invalid for " + to_string(scenario) + " (" +
                             std::to_string(folds) + " folds)");
    }
    FoldPlan plan;
    plan.scenario = scenario;
    plan.fold_index = fold_index;

    switch (scenario) {
        case Scenario::across_time: {
            if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0)) {
                throw ParameterError("train_fraction must lie in (0, 1)");
            }
            for (std::size_t i = 0; i < trials.size(); ++i) {
                const std::size_t n = trials[i].signal_length();
                const auto cut = static_cast<std::size_t>(std::floor(options.train_fraction * static_cast<double>(n)));
                if (cut > 0) plan.train.push_back({i, 0, cut});
                // one-window gap so no test window overlaps a train window
                const std::size_t test_begin = cut + options.seq_len;
                if (test_begin < n) plan.test.push_back({i, test_begin, n});
            }
            break;
        }
        case Scenario::across_subject: {
            auto subjects = shuffled_subjects(trials, seed);
            std::set<int> test_subjects;
            for (std::size_t k = 0; k < subjects.size(); ++k)
                if (k % folds == fold_index) test_subjects.insert(subjects[k]);
            for (std::size_t i = 0; i < trials.size(); ++i)
                (test_subjects.contains(trials[i].subject_id) ? plan.test : plan.train).push_back(whole(i, trials[i]));
            break;
        }
        case Scenario::across_elicitor: {
            const Quadrant held_out = kQuadrants[fold_index];
            for (std::size_t i = 0; i < trials.size(); ++i)
                (trials[i].quadrant == held_out ? plan.test : plan.train).push_back(whole(i, trials[i]));
            break;
        }
        case Scenario::across_version: {
            std::map<std::pair<int, Quadrant>, std::vector<std::size_t>> groups;
            for (std::size_t i = 0; i < trials.size(); ++i) groups[{trials[i].subject_id, trials[i].quadrant}].push_back(i);
            std::vector<std::size_t> version_a, version_b;
            for (auto& [key, idx] : groups) {
                if (idx.size() < 2) continue;  // unpaired trials are not eligible
                std::sort(idx.begin(), idx.end(),
                          [&](std::size_t x, std::size_t y) { return trials[x].video_id < trials[y].video_id; });
                version_a.push_back(idx[0]);
                version_b.push_back(idx[1]);
            }
            const auto& train = fold_index == 0 ? version_a : version_b;
            const auto& test = fold_index == 0 ? version_b : version_a;
            std::vector<std::size_t> tr(train), te(test);
            std::sort(tr.begin(), tr.end());
            std::sort(te.begin(), te.end());
            for (auto i : tr) plan.train.push_back(whole(i, trials[i]));
            for (auto i : te) plan.test.push_back(whole(i, trials[i]));
            break;
        }
    }
    return plan;
}

std::vector<Sample> collect_windows(std::span<const Trial> trials, std::span<const Segment> segments, std::size_t seq_len,
                                    std::size_t hop, std::vector<std::string>* warnings) {
    std::vector<Sample> out;
    for (const auto& seg : segments) {
        if (seg.trial >= trials.size()) throw InputError("segment refers to trial " + std::to_string(seg.trial) + " out of range");
        auto set = make_windows(trials[seg.trial], seq_len, hop, seg.begin, seg.end);
        for (auto& s : set.samples) out.push_back(std::move(s));
        if (warnings) warnings->insert(warnings->end(), set.warnings.begin(), set.warnings.end());
    }
    return out;
}

}  // namespace emoscale
