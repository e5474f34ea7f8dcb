#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "emoscale/tensor.hpp"

namespace emoscale {

inline constexpr double kRawAnnotationLimit = 26225.0;
inline constexpr std::int64_t kAnnotationPeriodMs = 50;  // 20 Hz
inline constexpr std::array<const char*, 8> kChannelNames{"ecg",      "bvp", "emg_coru", "emg_trap",
                                                          "emg_zygo", "gsr", "rsp",      "skt"};

enum class Quadrant { HVHA, HVLA, LVHA, LVLA };

inline constexpr std::array<Quadrant, 4> kQuadrants{Quadrant::HVHA, Quadrant::HVLA, Quadrant::LVHA, Quadrant::LVLA};

std::string to_string(Quadrant q);
Quadrant parse_quadrant(const std::string& text);

/// One subject watching one video.
struct Trial {
    int subject_id = 0;
    int video_id = 0;
    Quadrant quadrant = Quadrant::HVHA;
    Tensor signals;                 // [N_sig, 8] at 1000 Hz, channel order kChannelNames
    std::int64_t signal_start_ms = 0;
    Tensor annotations;             // [N_ann, 2] (valence, arousal) on the [0.5, 9.5] scale
    std::vector<std::int64_t> annotation_ms;

    std::size_t signal_length() const { return signals.dim(0); }
    std::size_t annotation_count() const { return annotations.dim(0); }
};

struct SampleOrigin {
    int subject_id = 0;
    int video_id = 0;
    std::size_t start_index = 0;
    std::int64_t end_ms = 0;
};

struct Sample {
    Tensor window;  // [seq_len, 8]
    double valence = 5.0;
    double arousal = 5.0;
    SampleOrigin origin;
};

/// Maps a raw joystick value in [-26225, 26225] onto [0.5, 9.5].
double scale_annotation(double raw);
double unscale_annotation(double scaled);

struct TrialInfo {
    int subject_id = 0;
    int video_id = 0;
    Quadrant quadrant = Quadrant::HVHA;
};

/// Reads a physiology file (`time_ms,ecg,...,skt`, 1 row per ms) and an
/// annotation file (`time_ms,valence,arousal`, raw units, 1 row per 50 ms).
Trial load_trial(const std::filesystem::path& physio_path, const std::filesystem::path& annotation_path,
                 const TrialInfo& info = {});
void write_trial(const std::filesystem::path& physio_path, const std::filesystem::path& annotation_path,
                 const Trial& trial);

// Dataset directory: meta.csv plus physio/ and annotations/ subdirectories.
void write_dataset(const std::filesystem::path& dir, std::span<const Trial> trials);
std::vector<Trial> load_dataset(const std::filesystem::path& dir);

struct ChannelStats {
    std::array<double, 8> mean{};
    std::array<double, 8> std{};
};

ChannelStats compute_channel_stats(std::span<const Trial> trials);
ChannelStats compute_channel_stats(std::span<const Sample> samples);

// (x - mean) / std per channel; channels with zero std are only centered.
Tensor standardize(const Tensor& signal, const ChannelStats& stats);
Trial standardize(const Trial& trial, const ChannelStats& stats);
std::vector<Sample> standardize(std::span<const Sample> samples, const ChannelStats& stats);

struct WindowSet {
    std::vector<Sample> samples;
    std::vector<std::string> warnings;
};

/// Windows starting at begin, begin+hop, ... fully inside [begin, end) of the
/// trial signal. Each target is the latest annotation at or before the
/// window's final sample time. Too-short ranges yield a warning, not an error.
WindowSet make_windows(const Trial& trial, std::size_t seq_len, std::size_t hop, std::size_t begin = 0,
                       std::size_t end = static_cast<std::size_t>(-1));

}  // namespace emoscale
