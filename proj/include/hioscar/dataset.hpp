#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hioscar {

/// One subject's labelled multichannel stream. channels[c][t].
struct Recording {
    std::string subject_id;
    std::vector<std::vector<double>> channels;
    std::vector<std::string> channel_names;
    double sample_rate_hz = 0.0;
    std::vector<std::string> labels;  // one per timestep

    std::size_t channel_count() const { return channels.size(); }
    std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }
    void validate() const;
};

struct Window {
    std::vector<std::vector<double>> data;  // C x L
    std::string label;
    std::string subject_id;
    std::int64_t window_id = 0;

    std::size_t channel_count() const { return data.size(); }
    std::size_t length() const { return data.empty() ? 0 : data.front().size(); }
};

struct Fold {
    std::vector<std::string> train_subjects;
    std::vector<std::string> test_subjects;
};

struct FoldPlan {
    std::vector<Fold> folds;
};

/// Maps logical roles onto CSV columns. Parsed from a key = value text file:
///
///     subject = subject
///     label = activity
///     timestamp = time        (optional)
///     channels = acc_x, acc_y, acc_z   (optional; default: every other column)
///     sample_rate_hz = 100
struct CsvSchema {
    std::string subject_column = "subject";
    std::string label_column = "label";
    std::optional<std::string> timestamp_column;
    std::vector<std::string> channel_columns;
    double sample_rate_hz = 0.0;

    static CsvSchema parse(const std::string& text);
    static CsvSchema load(const std::filesystem::path& path);
};

/// Reads one CSV file, or every *.csv in a directory in name order. Emits one
/// Recording per contiguous run of rows sharing (subject, label).
std::vector<Recording> load_recordings(const std::filesystem::path& path, const CsvSchema& schema);
std::vector<Recording> parse_recordings_csv(const std::string& text, const CsvSchema& schema,
                                            const std::string& source_name = "<memory>");

/// Linear interpolation onto a uniform grid at target_hz. Output sample j sits
/// at source position j * source_hz / target_hz, clamped to the last sample.
Recording resample(const Recording& rec, double target_hz);

std::size_t window_length(double window_seconds, double sample_rate_hz);
std::size_t window_stride(std::size_t length, double overlap_fraction);

/// Slides a window over rec. Windows without a strict-majority label are dropped.
/// Ids are assigned consecutively starting at first_id (dropped windows consume no id).
std::vector<Window> make_windows(const Recording& rec, double window_seconds, double overlap_fraction,
                                 std::int64_t first_id = 0);

/// Windows every recording with globally unique, consecutive ids.
std::vector<Window> make_windows(const std::vector<Recording>& recs, double window_seconds, double overlap_fraction);

std::vector<std::string> distinct_subjects(const std::vector<Window>& windows);
std::vector<std::string> distinct_labels(const std::vector<Window>& windows);

FoldPlan subject_kfold(const std::vector<Window>& windows, std::size_t subjects_per_fold, std::uint64_t seed);

struct ClassSplit {
    std::vector<Window> id_windows;
    std::vector<Window> ood_windows;
};

ClassSplit hold_out_classes(const std::vector<Window>& windows, const std::set<std::string>& ood_classes);

/// Selects the windows whose subject is in the given set, preserving order.
std::vector<Window> select_subjects(const std::vector<Window>& windows, const std::vector<std::string>& subjects);

/// Per-channel z-score statistics. Fit on training windows only.
class ChannelNormalizer {
public:
    static ChannelNormalizer fit(const std::vector<Window>& windows);

    void apply(Window& window) const;
    void apply(std::vector<Window>& windows) const;

    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& stddev() const { return stddev_; }

private:
    std::vector<double> mean_;
    std::vector<double> stddev_;
};

// Window archive: a self-describing text file plus a manifest.csv with
// (window_id, subject, label). Numbers use shortest round-trip formatting,
// so identical inputs give identical bytes.
struct WindowArchive {
    std::vector<std::string> channel_names;
    double sample_rate_hz = 0.0;
    std::vector<Window> windows;
};

void write_window_archive(const std::filesystem::path& directory, const WindowArchive& archive);
WindowArchive read_window_archive(const std::filesystem::path& directory);

}  // namespace hioscar
