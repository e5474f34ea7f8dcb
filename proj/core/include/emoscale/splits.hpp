#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emoscale/data.hpp"

namespace emoscale {

enum class Scenario { across_time, across_subject, across_elicitor, across_version };

inline constexpr std::array<Scenario, 4> kScenarios{Scenario::across_time, Scenario::across_subject,
                                                    Scenario::across_elicitor, Scenario::across_version};

std::string to_string(Scenario s);
// Accepts "across_time" and "across-time" spellings.
Scenario parse_scenario(const std::string& text);
// "Across-time scenario" etc.
std::string display_name(Scenario s);

/// Half-open range of signal samples [begin, end) within trials[trial].
struct Segment {
    std::size_t trial = 0;
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const Segment&) const = default;
};

struct FoldPlan {
    Scenario scenario = Scenario::across_time;
    std::size_t fold_index = 0;
    std::vector<Segment> train;
    std::vector<Segment> test;
};

struct SplitOptions {
    std::size_t seq_len = 128;        // across_time gap between train and test parts
    std::size_t subject_groups = 5;   // across_subject group count (capped at the subject count)
    double train_fraction = 0.7;      // across_time share of each trial used for training
};

std::size_t fold_count(Scenario scenario, std::span<const Trial> trials, const SplitOptions& options = {});

/// Train/test segments for one fold of a scenario:
///  - across_time: one fold; the first 70% of each trial trains, the rest after a one-window gap tests.
///  - across_subject: subjects are shuffled with `seed` into groups; group `fold_index` tests.
///  - across_elicitor: four folds; trials of quadrant `fold_index` test.
///  - across_version: two folds; per subject and quadrant the lower video id is version A and the
///    next is version B. Fold 0 trains on A and tests on B, fold 1 the reverse.
FoldPlan scenario_split(std::span<const Trial> trials, Scenario scenario, std::size_t fold_index, std::uint64_t seed,
                        const SplitOptions& options = {});

/// Windows of every segment in order; warnings from short segments are appended to `warnings`.
std::vector<Sample> collect_windows(std::span<const Trial> trials, std::span<const Segment> segments, std::size_t seq_len,
                                    std::size_t hop, std::vector<std::string>* warnings = nullptr);

}  // namespace emoscale
