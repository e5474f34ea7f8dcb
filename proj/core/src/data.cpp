#include "emoscale/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

#include "emoscale/errors.hpp"

namespace emoscale {

namespace fs = std::filesystem;

namespace {

const std::string kPhysioHeader = "time_ms,ecg,bvp,emg_coru,emg_trap,emg_zygo,gsr,rsp,skt";
const std::string kAnnotationHeader = "time_ms,valence,arousal";
const std::string kMetaHeader = "subject_id,video_id,quadrant";

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

// Line-oriented CSV reader tracking 1-based row numbers (header is row 1).
class CsvReader {
public:
    CsvReader(const fs::path& path) : path_(path), text_(read_file(path)) {}

    bool next(std::string_view& line) {
        while (pos_ < text_.size()) {
            auto nl = text_.find('\n', pos_);
            if (nl == std::string::npos) nl = text_.size();
            line = std::string_view(text_).substr(pos_, nl - pos_);
            pos_ = nl + 1;
            ++row_;
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (!line.empty()) return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what, std::size_t column) const {
        throw ParseError(path_.string() + ": row " + std::to_string(row_) + ", column " + std::to_string(column) + ": " + what);
    }

    void expect_header(const std::string& header) {
        std::string_view line;
        if (!next(line)) fail("missing header", 1);
        auto want = split_fields(header);
        auto got = split_fields(line);
        for (std::size_t i = 0; i < want.size(); ++i) {
            if (i >= got.size()) fail("missing column '" + std::string(want[i]) + "'", i + 1);
            if (got[i] != want[i]) {
                fail("expected column '" + std::string(want[i]) + "', found '" + std::string(got[i]) + "'", i + 1);
            }
        }
        if (got.size() != want.size()) fail("unexpected extra column", want.size() + 1);
    }

    template <typename T>
    T field(std::string_view text, std::size_t column) const {
        T value{};
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || ptr != text.data() + text.size()) {
            fail("cannot parse '" + std::string(text) + "'", column);
        }
        return value;
    }

    std::size_t row() const { return row_; }

private:
    fs::path path_;
    std::string text_;
    std::size_t pos_ = 0;
    std::size_t row_ = 0;
};

void append_double(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

std::string trial_file_name(int subject, int video) {
    return "sub" + std::to_string(subject) + "_vid" + std::to_string(video) + ".csv";
}

}  // namespace

std::string to_string(Quadrant q) {
    switch (q) {
        case Quadrant::HVHA: return "HVHA";
        case Quadrant::HVLA: return "HVLA";
        case Quadrant::LVHA: return "LVHA";
        case Quadrant::LVLA: return "LVLA";
    }
    return "?";
}

Quadrant parse_quadrant(const std::string& text) {
    for (auto q : kQuadrants)
        if (to_string(q) == text) return q;
    throw ParseError("unknown quadrant '" + text + "'");
}

double scale_annotation(double raw) {
    if (!(raw >= -kRawAnnotationLimit && raw <= kRawAnnotationLimit)) {
        std::ostringstream msg;
        msg << "annotation value " << raw << " outside [-26225, 26225]";
        throw RangeError(msg.str());
    }
    return 0.5 + 9.0 * (raw + kRawAnnotationLimit) / (2.0 * kRawAnnotationLimit);
}

double unscale_annotation(double scaled) {
    return (scaled - 0.5) / 9.0 * (2.0 * kRawAnnotationLimit) - kRawAnnotationLimit;
}

Trial load_trial(const fs::path& physio_path, const fs::path& annotation_path, const TrialInfo& info) {
    Trial trial;
    trial.subject_id = info.subject_id;
    trial.video_id = info.video_id;
    trial.quadrant = info.quadrant;

    {
        CsvReader csv(physio_path);
        csv.expect_header(kPhysioHeader);
        std::vector<double> values;
        std::string_view line;
        std::int64_t prev = 0;
        std::size_t rows = 0;
        while (csv.next(line)) {
            auto fields = split_fields(line);
            if (fields.size() != 9) csv.fail("expected 9 columns, found " + std::to_string(fields.size()), std::min<std::size_t>(fields.size() + 1, 9));
            auto t = csv.field<std::int64_t>(fields[0], 1);
            if (rows == 0) {
                trial.signal_start_ms = t;
            } else if (t <= prev) {
                csv.fail("timestamps are not increasing", 1);
            } else if (t != prev + 1) {
                csv.fail("sampling rate mismatch: expected one row per millisecond", 1);
            }
            prev = t;
            for (std::size_t c = 1; c < 9; ++c) values.push_back(csv.field<double>(fields[c], c + 1));
            ++rows;
        }
        if (rows == 0) throw ParseError(physio_path.string() + ": no signal rows");
        trial.signals = Tensor::from({rows, 8}, std::move(values));
    }
    {
        CsvReader csv(annotation_path);
        csv.expect_header(kAnnotationHeader);
        std::vector<double> values;
        std::string_view line;
        while (csv.next(line)) {
            auto fields = split_fields(line);
            if (fields.size() != 3) csv.fail("expected 3 columns, found " + std::to_string(fields.size()), std::min<std::size_t>(fields.size() + 1, 3));
            auto t = csv.field<std::int64_t>(fields[0], 1);
            if (!trial.annotation_ms.empty()) {
                const auto prev = trial.annotation_ms.back();
                if (t <= prev) csv.fail("timestamps are not increasing", 1);
                if (t != prev + kAnnotationPeriodMs) csv.fail("sampling rate mismatch: expected one row per 50 ms", 1);
            }
            trial.annotation_ms.push_back(t);
            for (std::size_t c = 1; c < 3; ++c) {
                const double raw = csv.field<double>(fields[c], c + 1);
                try {
                    values.push_back(scale_annotation(raw));
                } catch (const RangeError& e) {
                    throw RangeError(annotation_path.string() + ": row " + std::to_string(csv.row()) + ", column " +
                                     std::to_string(c + 1) + ": " + e.what());
                }
            }
        }
        if (trial.annotation_ms.empty()) throw ParseError(annotation_path.string() + ": no annotation rows");
        trial.annotations = Tensor::from({trial.annotation_ms.size(), 2}, std::move(values));
    }
    const double ratio = static_cast<double>(trial.signal_length()) / static_cast<double>(trial.annotation_count());
    if (std::abs(ratio - 50.0) > 1.0) {
        throw ParseError("rate mismatch between " + physio_path.string() + " and " + annotation_path.string() +
                         ": signal/annotation row ratio " + std::to_string(ratio) + " (expected 50)");
    }
    return trial;
}

void write_trial(const fs::path& physio_path, const fs::path& annotation_path, const Trial& trial) {
    std::string text = kPhysioHeader + "\n";
    auto sig = trial.signals.data();
    for (std::size_t r = 0; r < trial.signal_length(); ++r) {
        text += std::to_string(trial.signal_start_ms + static_cast<std::int64_t>(r));
        for (std::size_t c = 0; c < 8; ++c) {
            text += ',';
            append_double(text, sig[r * 8 + c]);
        }
        text += '\n';
    }
    write_text(physio_path, text);

    text = kAnnotationHeader + "\n";
    auto ann = trial.annotations.data();
    for (std::size_t r = 0; r < trial.annotation_count(); ++r) {
        text += std::to_string(trial.annotation_ms[r]);
        for (std::size_t c = 0; c < 2; ++c) {
            text += ',';
            append_double(text, unscale_annotation(ann[r * 2 + c]));
        }
        text += '\n';
    }
    write_text(annotation_path, text);
}

void write_dataset(const fs::path& dir, std::span<const Trial> trials) {
    fs::create_directories(dir / "physio");
    fs::create_directories(dir / "annotations");
    std::string meta = kMetaHeader + "\n";
    for (const auto& t : trials) {
        meta += std::to_string(t.subject_id) + "," + std::to_string(t.video_id) + "," + to_string(t.quadrant) + "\n";
        const auto name = trial_file_name(t.subject_id, t.video_id);
        write_trial(dir / "physio" / name, dir / "annotations" / name, t);
    }
    write_text(dir / "meta.csv", meta);
}

std::vector<Trial> load_dataset(const fs::path& dir) {
    CsvReader csv(dir / "meta.csv");
    csv.expect_header(kMetaHeader);
    std::map<std::pair<int, int>, Quadrant> roster;
    std::string_view line;
    while (csv.next(line)) {
        auto fields = split_fields(line);
        if (fields.size() != 3) csv.fail("expected 3 columns, found " + std::to_string(fields.size()), fields.size() + 1);
        const int subject = csv.field<int>(fields[0], 1);
        const int video = csv.field<int>(fields[1], 2);
        Quadrant q;
        try {
            q = parse_quadrant(std::string(fields[2]));
        } catch (const ParseError& e) {
            csv.fail(e.what(), 3);
        }
        if (!roster.emplace(std::make_pair(subject, video), q).second) csv.fail("duplicate trial", 1);
    }
    std::vector<Trial> trials;
    for (const auto& [key, q] : roster) {
        const auto name = trial_file_name(key.first, key.second);
        trials.push_back(load_trial(dir / "physio" / name, dir / "annotations" / name, {key.first, key.second, q}));
    }
    return trials;
}

namespace {

template <typename RowsFn>
ChannelStats stats_over(RowsFn&& for_each_signal) {
    std::array<double, 8> sum{}, sum_sq{};
    double count = 0.0;
    // two passes for numerical stability
    for_each_signal([&](std::span<const double> s) {
        for (std::size_t i = 0; i < s.size(); ++i) sum[i % 8] += s[i];
        count += static_cast<double>(s.size() / 8);
    });
    if (count == 0.0) throw InputError("channel statistics need at least one signal row");
    ChannelStats st;
    for (std::size_t c = 0; c < 8; ++c) st.mean[c] = sum[c] / count;
    for_each_signal([&](std::span<const double> s) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double d = s[i] - st.mean[i % 8];
            sum_sq[i % 8] += d * d;
        }
    });
    for (std::size_t c = 0; c < 8; ++c) st.std[c] = std::sqrt(sum_sq[c] / count);
    return st;
}

}  // namespace

ChannelStats compute_channel_stats(std::span<const Trial> trials) {
    return stats_over([&](auto&& fn) {
        for (const auto& t : trials) fn(t.signals.data());
    });
}

ChannelStats compute_channel_stats(std::span<const Sample> samples) {
    return stats_over([&](auto&& fn) {
        for (const auto& s : samples) fn(s.window.data());
    });
}

Tensor standardize(const Tensor& signal, const ChannelStats& stats) {
    if (signal.rank() != 2 || signal.dim(1) != 8) {
        throw DimensionError("standardize: expected [N, 8] signal, got " + shape_to_string(signal.shape()));
    }
    std::vector<double> out(signal.values());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::size_t c = i % 8;
        out[i] -= stats.mean[c];
        if (stats.std[c] > 0.0) out[i] /= stats.std[c];
    }
    return Tensor::from(signal.shape(), std::move(out));
}

Trial standardize(const Trial& trial, const ChannelStats& stats) {
    Trial out = trial;
    out.signals = standardize(trial.signals, stats);
    return out;
}

std::vector<Sample> standardize(std::span<const Sample> samples, const ChannelStats& stats) {
    std::vector<Sample> out(samples.begin(), samples.end());
    for (auto& s : out) s.window = standardize(s.window, stats);
    return out;
}

WindowSet make_windows(const Trial& trial, std::size_t seq_len, std::size_t hop, std::size_t begin, std::size_t end) {
    if (seq_len == 0 || hop == 0) throw ParameterError("make_windows: seq_len and hop must be positive");
    WindowSet out;
    end = std::min(end, trial.signal_length());
    const std::string who = "subject " + std::to_string(trial.subject_id) + " video " + std::to_string(trial.video_id);
    if (begin >= end || end - begin < seq_len) {
        out.warnings.push_back(who + ": range [" + std::to_string(begin) + ", " + std::to_string(end) +
                               ") shorter than seq_len " + std::to_string(seq_len) + "; skipped");
        return out;
    }
    const std::size_t count = (end - begin - seq_len) / hop + 1;
    auto sig = trial.signals.data();
    auto ann = trial.annotations.data();
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t start = begin + w * hop;
        const std::int64_t end_ms = trial.signal_start_ms + static_cast<std::int64_t>(start + seq_len - 1);
        auto it = std::upper_bound(trial.annotation_ms.begin(), trial.annotation_ms.end(), end_ms);
        if (it == trial.annotation_ms.begin()) {
            out.warnings.push_back(who + ": window ending at " + std::to_string(end_ms) + " ms precedes the first annotation; skipped");
            continue;
        }
        const std::size_t a = static_cast<std::size_t>(std::distance(trial.annotation_ms.begin(), it)) - 1;
        Sample s;
        s.window = Tensor::from({seq_len, 8}, std::vector<double>(sig.begin() + start * 8, sig.begin() + (start + seq_len) * 8));
        s.valence = ann[a * 2];
        s.arousal = ann[a * 2 + 1];
        s.origin = {trial.subject_id, trial.video_id, start, end_ms};
        out.samples.push_back(std::move(s));
    }
    return out;
}

}  // namespace emoscale
