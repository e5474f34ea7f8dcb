#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "emoscale/data.hpp"

namespace emoscale {

/// Latent valence/arousal of a synthetic trial at time t (seconds).
///
/// Video v (1-based) elicits quadrant (v - 1) mod 4 in the order HVHA, HVLA,
/// LVHA, LVLA. High and low levels centre on 7 and 3. Around that centre each
/// dimension drifts as c + 1.2 sin(2pi t/P + a) + 0.4 sin(2pi 3.1 t/P + b),
/// with P in [20, 45] s and phases a, b drawn per trial from the seed.
struct LatentTrajectory {
    double valence_centre = 5.0;
    double arousal_centre = 5.0;
    double valence_period = 30.0;
    double arousal_period = 30.0;
    double valence_phase[2] = {0.0, 0.0};
    double arousal_phase[2] = {0.0, 0.0};

    double valence(double t) const;
    double arousal(double t) const;
};

LatentTrajectory synth_trajectory(std::uint64_t seed, int subject_id, int video_id);

/// Seeded stand-in for a recording session.
///
/// Channels are sinusoids plus Gaussian noise whose levels, amplitudes and
/// frequencies follow the latent state (u = (valence-5)/4.5, w = (arousal-5)/4.5):
///   ecg       (1 + 0.3w) sin(phi_hr) + 0.4w,          heart rate 1.1 + 0.25w Hz
///   bvp       (0.8 + 0.2u) sin(phi_hr - 0.6) + 0.5u
///   emg_coru  (0.3 + 0.25(1-u)) sin(phi_30Hz+10w) - 0.6u
///   emg_trap  (0.3 + 0.2(1+w)) sin(phi_25Hz) + 0.5w
///   emg_zygo  (0.3 + 0.25(1+u)) sin(phi_35Hz) + 0.6u
///   gsr       2 + 0.8w + 0.3 sin(2pi 0.05 t)
///   rsp       (1 + 0.2w) sin(phi_rsp),                breathing 0.25 + 0.1w Hz
///   skt       33 + 0.5u + 0.2w
/// Each subject applies its own per-channel offset and gain. Values are
/// quantized to 1e-4. Annotations sample the latent state every 50 ms.
std::vector<Trial> synth_dataset(std::uint64_t seed, std::size_t n_subjects, std::size_t n_videos, double duration_s);

}  // namespace emoscale
