#include "emoscale/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "emoscale/errors.hpp"
#include "emoscale/model.hpp"

namespace emoscale {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag, int subject, int video) {
    return mix(mix(mix(seed ^ tag) + static_cast<std::uint64_t>(subject)) + static_cast<std::uint64_t>(video));
}

double quantize(double v) { return std::round(v * 1e4) / 1e4; }

double drift(double centre, double period, const double* phase, double t) {
    const double v = centre + 1.2 * std::sin(kTwoPi * t / period + phase[0]) +
                     0.4 * std::sin(kTwoPi * 3.1 * t / period + phase[1]);
    return std::clamp(v, kScoreMin, kScoreMax);
}

}  // namespace

double LatentTrajectory::valence(double t) const { return drift(valence_centre, valence_period, valence_phase, t); }
double LatentTrajectory::arousal(double t) const { return drift(arousal_centre, arousal_period, arousal_phase, t); }

LatentTrajectory synth_trajectory(std::uint64_t seed, int subject_id, int video_id) {
    std::mt19937_64 rng(stream_seed(seed, 0x7472616aULL, subject_id, video_id));
    std::uniform_real_distribution<double> period(20.0, 45.0);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    const Quadrant q = kQuadrants[static_cast<std::size_t>((video_id - 1) % 4)];
    LatentTrajectory tr;
    tr.valence_centre = (q == Quadrant::HVHA || q == Quadrant::HVLA) ? 7.0 : 3.0;
    tr.arousal_centre = (q == Quadrant::HVHA || q == Quadrant::LVHA) ? 7.0 : 3.0;
    tr.valence_period = period(rng);
    tr.arousal_period = period(rng);
    tr.valence_phase[0] = phase(rng);
    tr.valence_phase[1] = phase(rng);
    tr.arousal_phase[0] = phase(rng);
    tr.arousal_phase[1] = phase(rng);
    return tr;
}

std::vector<Trial> synth_dataset(std::uint64_t seed, std::size_t n_subjects, std::size_t n_videos, double duration_s) {
    if (!(duration_s > 0.0)) throw ParameterError("synth_dataset: duration must be positive");
    const auto n_sig = static_cast<std::size_t>(std::llround(duration_s * 1000.0));
    const std::size_t n_ann = n_sig / static_cast<std::size_t>(kAnnotationPeriodMs);
    if (n_ann == 0) throw ParameterError("synth_dataset: duration shorter than one annotation period");

    constexpr std::array<double, 8> noise_sd{0.05, 0.05, 0.1, 0.1, 0.1, 0.02, 0.05, 0.01};
    std::vector<Trial> trials;
    for (std::size_t s = 1; s <= n_subjects; ++s) {
        const int subject = static_cast<int>(s);
        std::mt19937_64 subject_rng(stream_seed(seed, 0x7375626aULL, subject, 0));
        std::normal_distribution<double> offset_dist(0.0, 0.3);
        std::uniform_real_distribution<double> gain_dist(0.8, 1.2);
        std::array<double, 8> offset{}, gain{};
        for (std::size_t c = 0; c < 8; ++c) {
            offset[c] = offset_dist(subject_rng);
            gain[c] = gain_dist(subject_rng);
        }

        for (std::size_t v = 1; v <= n_videos; ++v) {
            const int video = static_cast<int>(v);
            const auto traj = synth_trajectory(seed, subject, video);
            std::mt19937_64 noise_rng(stream_seed(seed, 0x6e6f6973ULL, subject, video));
            std::normal_distribution<double> unit(0.0, 1.0);

            Trial trial;
            trial.subject_id = subject;
            trial.video_id = video;
            trial.quadrant = kQuadrants[(v - 1) % 4];

            std::vector<double> sig(n_sig * 8);
            double phi_hr = 0.0, phi_rsp = 0.0, phi_coru = 0.0, phi_trap = 0.0, phi_zygo = 0.0;
            constexpr double dt = 1e-3;
            for (std::size_t i = 0; i < n_sig; ++i) {
                const double t = static_cast<double>(i) * dt;
                const double u = (traj.valence(t) - 5.0) / 4.5;
                const double w = (traj.arousal(t) - 5.0) / 4.5;
                std::array<double, 8> x{
                    (1.0 + 0.3 * w) * std::sin(phi_hr) + 0.4 * w,
                    (0.8 + 0.2 * u) * std::sin(phi_hr - 0.6) + 0.5 * u,
                    (0.3 + 0.25 * (1.0 - u)) * std::sin(phi_coru) - 0.6 * u,
                    (0.3 + 0.2 * (1.0 + w)) * std::sin(phi_trap) + 0.5 * w,
                    (0.3 + 0.25 * (1.0 + u)) * std::sin(phi_zygo) + 0.6 * u,
                    2.0 + 0.8 * w + 0.3 * std::sin(kTwoPi * 0.05 * t),
                    (1.0 + 0.2 * w) * std::sin(phi_rsp),
                    33.0 + 0.5 * u + 0.2 * w,
                };
                for (std::size_t c = 0; c < 8; ++c)
                    sig[i * 8 + c] = quantize(offset[c] + gain[c] * x[c] + noise_sd[c] * unit(noise_rng));
                phi_hr += kTwoPi * (1.1 + 0.25 * w) * dt;
                phi_rsp += kTwoPi * (0.25 + 0.1 * w) * dt;
                phi_coru += kTwoPi * (30.0 + 10.0 * w) * dt;
                phi_trap += kTwoPi * 25.0 * dt;
                phi_zygo += kTwoPi * 35.0 * dt;
            }
            trial.signals = Tensor::from({n_sig, 8}, std::move(sig));

            std::vector<double> ann(n_ann * 2);
            for (std::size_t k = 0; k < n_ann; ++k) {
                const auto ms = static_cast<std::int64_t>(k) * kAnnotationPeriodMs;
                const double t = static_cast<double>(ms) / 1000.0;
                trial.annotation_ms.push_back(ms);
                ann[k * 2] = traj.valence(t);
                ann[k * 2 + 1] = traj.arousal(t);
            }
            trial.annotations = Tensor::from({n_ann, 2}, std::move(ann));
            trials.push_back(std::move(trial));
        }
    }
    return trials;
}

}  // namespace emoscale
