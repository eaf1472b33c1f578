#include "hioscar/dataset.hpp"

#include "hioscar/common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace hioscar {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArgumentError("cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

std::vector<std::string> split_trimmed(std::string_view text, char delimiter) {
    auto parts = split(text, delimiter);
    for (auto& part : parts) {
        part = trim(part);
    }
    return parts;
}

double infer_rate(const std::vector<double>& timestamps) {
    std::vector<double> steps;
    for (std::size_t i = 1; i < timestamps.size(); ++i) {
        const double dt = timestamps[i] - timestamps[i - 1];
        if (dt > 0.0) {
            steps.push_back(dt);
        }
    }
    if (steps.empty()) {
        return 0.0;
    }
    std::nth_element(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(steps.size() / 2), steps.end());
    return 1.0 / steps[steps.size() / 2];
}

}  // namespace

void Recording::validate() const {
    if (channels.empty()) {
        throw ArgumentError("recording of subject '" + subject_id + "' has no channels");
    }
    if (sample_rate_hz <= 0.0) {
        throw ArgumentError("recording sample rate must be positive");
    }
    const std::size_t t = channels.front().size();
    if (t == 0) {
        throw ArgumentError("recording of subject '" + subject_id + "' is empty");
    }
    for (const auto& row : channels) {
        if (row.size() != t) {
            throw ArgumentError("recording channels have unequal lengths");
        }
    }
    if (labels.size() != t) {
        throw ArgumentError("recording label count does not match sample count");
    }
}

CsvSchema CsvSchema::parse(const std::string& text) {
    CsvSchema schema;
    bool has_subject = false;
    bool has_label = false;
    std::size_t line_number = 0;
    for (const auto& raw : lines_of(text)) {
        ++line_number;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw SchemaError("schema line " + std::to_string(line_number) + ": expected key = value");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key == "subject") {
            schema.subject_column = value;
            has_subject = true;
        } else if (key == "label") {
            schema.label_column = value;
            has_label = true;
        } else if (key == "timestamp") {
            schema.timestamp_column = value;
        } else if (key == "channels") {
            schema.channel_columns = split_trimmed(value, ',');
        } else if (key == "sample_rate_hz") {
            try {
                schema.sample_rate_hz = parse_double(value);
            } catch (const ParseError&) {
                throw SchemaError("schema: sample_rate_hz is not a number: '" + value + "'");
            }
        } else {
            throw SchemaError("schema line " + std::to_string(line_number) + ": unknown key '" + key + "'");
        }
    }
    if (!has_subject) {
        throw SchemaError("schema does not name the \"subject\" column");
    }
    if (!has_label) {
        throw SchemaError("schema does not name the \"label\" column");
    }
    return schema;
}

CsvSchema CsvSchema::load(const fs::path& path) {
    if (!fs::exists(path)) {
        throw SchemaError("schema file not found: " + path.string());
    }
    return parse(read_file(path));
}

std::vector<Recording> parse_recordings_csv(const std::string& text, const CsvSchema& schema,
                                            const std::string& source_name) {
    const auto lines = lines_of(text);
    std::size_t header_index = 0;
    while (header_index < lines.size() && trim(lines[header_index]).empty()) {
        ++header_index;
    }
    if (header_index == lines.size()) {
        warn(source_name + ": empty file, no recordings");
        return {};
    }

    const auto header = split_trimmed(lines[header_index], ',');
    std::unordered_map<std::string, std::size_t> column_of;
    for (std::size_t i = 0; i < header.size(); ++i) {
        column_of.emplace(header[i], i);
    }
    const auto require = [&](const std::string& role, const std::string& name) {
        const auto it = column_of.find(name);
        if (it == column_of.end()) {
            throw SchemaError(source_name + ": missing " + role + " column \"" + name + "\"");
        }
        return it->second;
    };
    const std::size_t subject_col = require("subject", schema.subject_column);
    const std::size_t label_col = require("label", schema.label_column);
    std::optional<std::size_t> time_col;
    if (schema.timestamp_column) {
        time_col = require("timestamp", *schema.timestamp_column);
    }

    std::vector<std::string> channel_names = schema.channel_columns;
    if (channel_names.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i != subject_col && i != label_col && (!time_col || i != *time_col)) {
                channel_names.push_back(header[i]);
            }
        }
    }
    if (channel_names.empty()) {
        throw SchemaError(source_name + ": no channel columns");
    }
    std::vector<std::size_t> channel_cols;
    for (const auto& name : channel_names) {
        channel_cols.push_back(require("channel", name));
    }

    std::vector<Recording> recordings;
    std::vector<std::vector<double>> timestamps;
    for (std::size_t line_index = header_index + 1; line_index < lines.size(); ++line_index) {
        if (trim(lines[line_index]).empty()) {
            continue;
        }
        const auto fields = split_trimmed(lines[line_index], ',');
        const std::string where = source_name + ":" + std::to_string(line_index + 1);
        if (fields.size() != header.size()) {
            throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                             std::to_string(fields.size()));
        }
        const std::string& subject = fields[subject_col];
        const std::string& label = fields[label_col];
        if (recordings.empty() || recordings.back().subject_id != subject || recordings.back().labels.back() != label) {
            Recording rec;
            rec.subject_id = subject;
            rec.channel_names = channel_names;
            rec.channels.assign(channel_cols.size(), {});
            rec.sample_rate_hz = schema.sample_rate_hz;
            recordings.push_back(std::move(rec));
            timestamps.emplace_back();
        }
        Recording& rec = recordings.back();
        for (std::size_t c = 0; c < channel_cols.size(); ++c) {
            try {
                rec.channels[c].push_back(parse_double(fields[channel_cols[c]]));
            } catch (const ParseError&) {
                throw ParseError(where + ": column \"" + channel_names[c] + "\" is not numeric: '" +
                                 fields[channel_cols[c]] + "'");
            }
        }
        rec.labels.push_back(label);
        if (time_col) {
            try {
                timestamps.back().push_back(parse_double(fields[*time_col]));
            } catch (const ParseError&) {
                throw ParseError(where + ": timestamp is not numeric: '" + fields[*time_col] + "'");
            }
        }
    }

    if (recordings.empty()) {
        warn(source_name + ": no data rows, no recordings");
    }
    for (std::size_t i = 0; i < recordings.size(); ++i) {
        if (recordings[i].sample_rate_hz <= 0.0) {
            const double inferred = time_col ? infer_rate(timestamps[i]) : 0.0;
            if (inferred <= 0.0) {
                throw SchemaError(source_name + ": sample_rate_hz not declared and not inferable from timestamps");
            }
            recordings[i].sample_rate_hz = inferred;
        }
    }
    return recordings;
}

std::vector<Recording> load_recordings(const fs::path& path, const CsvSchema& schema) {
    if (!fs::exists(path)) {
        throw ArgumentError("input path does not exist: " + path.string());
    }
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".csv") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    std::vector<Recording> all;
    for (const auto& file : files) {
        auto recs = parse_recordings_csv(read_file(file), schema, file.filename().string());
        std::move(recs.begin(), recs.end(), std::back_inserter(all));
    }
    return all;
}

Recording resample(const Recording& rec, double target_hz) {
    if (!(target_hz > 0.0)) {
        throw ArgumentError("resample: target_hz must be positive");
    }
    rec.validate();
    const std::size_t t_in = rec.length();
    const double ratio = rec.sample_rate_hz / target_hz;
    const auto t_out = static_cast<std::size_t>(std::llround(static_cast<double>(t_in) * target_hz / rec.sample_rate_hz));

    Recording out;
    out.subject_id = rec.subject_id;
    out.channel_names = rec.channel_names;
    out.sample_rate_hz = target_hz;
    out.channels.assign(rec.channel_count(), std::vector<double>(t_out));
    out.labels.resize(t_out);

    const double last = static_cast<double>(t_in - 1);
    for (std::size_t j = 0; j < t_out; ++j) {
        const double pos = std::min(static_cast<double>(j) * ratio, last);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, t_in - 1);
        const double frac = pos - static_cast<double>(lo);
        for (std::size_t c = 0; c < rec.channel_count(); ++c) {
            const auto& src = rec.channels[c];
            out.channels[c][j] = frac == 0.0 ? src[lo] : src[lo] + frac * (src[hi] - src[lo]);
        }
        out.labels[j] = rec.labels[std::min(static_cast<std::size_t>(std::llround(pos)), t_in - 1)];
    }
    return out;
}

std::size_t window_length(double window_seconds, double sample_rate_hz) {
    if (!(window_seconds > 0.0) || !(sample_rate_hz > 0.0)) {
        throw ArgumentError("window length and sample rate must be positive");
    }
    const auto length = static_cast<std::size_t>(std::llround(window_seconds * sample_rate_hz));
    if (length == 0) {
        throw ArgumentError("window shorter than one sample");
    }
    return length;
}

std::size_t window_stride(std::size_t length, double overlap_fraction) {
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
        throw ArgumentError("overlap_fraction must lie in [0, 1)");
    }
    const auto stride = static_cast<std::size_t>(std::llround(static_cast<double>(length) * (1.0 - overlap_fraction)));
    return std::max<std::size_t>(stride, 1);
}

std::vector<Window> make_windows(const Recording& rec, double window_seconds, double overlap_fraction,
                                 std::int64_t first_id) {
    rec.validate();
    const std::size_t length = window_length(window_seconds, rec.sample_rate_hz);
    const std::size_t stride = window_stride(length, overlap_fraction);
    const std::size_t total = rec.length();
    std::vector<Window> windows;
    if (total < length) {
        return windows;
    }
    const std::size_t count = (total - length) / stride + 1;
    std::int64_t next_id = first_id;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t begin = i * stride;
        std::map<std::string, std::size_t> votes;
        for (std::size_t t = begin; t < begin + length; ++t) {
            ++votes[rec.labels[t]];
        }
        const auto best = std::max_element(votes.begin(), votes.end(),
                                           [](const auto& a, const auto& b) { return a.second < b.second; });
        if (2 * best->second <= length) {
            continue;
        }
        Window w;
        w.label = best->first;
        w.subject_id = rec.subject_id;
        w.window_id = next_id++;
        w.data.reserve(rec.channel_count());
        for (const auto& row : rec.channels) {
            w.data.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(begin),
                                row.begin() + static_cast<std::ptrdiff_t>(begin + length));
        }
        windows.push_back(std::move(w));
    }
    return windows;
}

std::vector<Window> make_windows(const std::vector<Recording>& recs, double window_seconds, double overlap_fraction) {
    std::vector<Window> all;
    for (const auto& rec : recs) {
        auto windows = make_windows(rec, window_seconds, overlap_fraction, static_cast<std::int64_t>(all.size()));
        std::move(windows.begin(), windows.end(), std::back_inserter(all));
    }
    return all;
}

std::vector<std::string> distinct_subjects(const std::vector<Window>& windows) {
    std::set<std::string> subjects;
    for (const auto& w : windows) {
        subjects.insert(w.subject_id);
    }
    return {subjects.begin(), subjects.end()};
}

std::vector<std::string> distinct_labels(const std::vector<Window>& windows) {
    std::set<std::string> labels;
    for (const auto& w : windows) {
        labels.insert(w.label);
    }
    return {labels.begin(), labels.end()};
}

FoldPlan subject_kfold(const std::vector<Window>& windows, std::size_t subjects_per_fold, std::uint64_t seed) {
    if (subjects_per_fold == 0) {
        throw ArgumentError("subjects_per_fold must be positive");
    }
    auto subjects = distinct_subjects(windows);
    if (subjects.size() < 2 * subjects_per_fold) {
        throw ArgumentError("subject_kfold: " + std::to_string(subjects.size()) + " subjects, need at least " +
                            std::to_string(2 * subjects_per_fold));
    }
    Rng rng(seed);
    rng.shuffle(subjects);

    FoldPlan plan;
    for (std::size_t start = 0; start < subjects.size(); start += subjects_per_fold) {
        const std::size_t end = std::min(start + subjects_per_fold, subjects.size());
        Fold fold;
        for (std::size_t i = 0; i < subjects.size(); ++i) {
            (i >= start && i < end ? fold.test_subjects : fold.train_subjects).push_back(subjects[i]);
        }
        std::sort(fold.train_subjects.begin(), fold.train_subjects.end());
        std::sort(fold.test_subjects.begin(), fold.test_subjects.end());
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

ClassSplit hold_out_classes(const std::vector<Window>& windows, const std::set<std::string>& ood_classes) {
    const auto labels = distinct_labels(windows);
    for (const auto& name : ood_classes) {
        if (!std::binary_search(labels.begin(), labels.end(), name)) {
            std::string known;
            for (const auto& l : labels) {
                known += (known.empty() ? "" : ", ") + l;
            }
            throw ArgumentError("unknown OOD class '" + name + "'; known classes: " + known);
        }
    }
    ClassSplit split;
    for (const auto& w : windows) {
        (ood_classes.count(w.label) ? split.ood_windows : split.id_windows).push_back(w);
    }
    return split;
}

std::vector<Window> select_subjects(const std::vector<Window>& windows, const std::vector<std::string>& subjects) {
    const std::set<std::string> wanted(subjects.begin(), subjects.end());
    std::vector<Window> out;
    for (const auto& w : windows) {
        if (wanted.count(w.subject_id)) {
            out.push_back(w);
        }
    }
    return out;
}

ChannelNormalizer ChannelNormalizer::fit(const std::vector<Window>& windows) {
    if (windows.empty()) {
        throw ArgumentError("ChannelNormalizer::fit: no windows");
    }
    const std::size_t channels = windows.front().channel_count();
    std::vector<double> sum(channels, 0.0);
    std::vector<double> count(channels, 0.0);
    for (const auto& w : windows) {
        if (w.channel_count() != channels) {
            throw ArgumentError("ChannelNormalizer::fit: inconsistent channel counts");
        }
        for (std::size_t c = 0; c < channels; ++c) {
            for (const double v : w.data[c]) {
                sum[c] += v;
            }
            count[c] += static_cast<double>(w.data[c].size());
        }
    }
    ChannelNormalizer norm;
    norm.mean_.resize(channels);
    norm.stddev_.resize(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        norm.mean_[c] = sum[c] / count[c];
    }
    std::vector<double> sq(channels, 0.0);
    for (const auto& w : windows) {
        for (std::size_t c = 0; c < channels; ++c) {
            for (const double v : w.data[c]) {
                const double d = v - norm.mean_[c];
                sq[c] += d * d;
            }
        }
    }
    for (std::size_t c = 0; c < channels; ++c) {
        const double sd = std::sqrt(sq[c] / count[c]);
        // Constant channels pass through centred but unscaled.
        norm.stddev_[c] = sd > 0.0 ? sd : 1.0;
    }
    return norm;
}

void ChannelNormalizer::apply(Window& window) const {
    if (window.channel_count() != mean_.size()) {
        throw ArgumentError("ChannelNormalizer::apply: channel count mismatch");
    }
    for (std::size_t c = 0; c < mean_.size(); ++c) {
        for (double& v : window.data[c]) {
            v = (v - mean_[c]) / stddev_[c];
        }
    }
}

void ChannelNormalizer::apply(std::vector<Window>& windows) const {
    for (auto& w : windows) {
        apply(w);
    }
}

void write_window_archive(const fs::path& directory, const WindowArchive& archive) {
    fs::create_directories(directory);
    std::ofstream out(directory / "windows.txt", std::ios::binary);
    std::ofstream manifest(directory / "manifest.csv", std::ios::binary);
    if (!out || !manifest) {
        throw ArgumentError("cannot write window archive in " + directory.string());
    }
    const std::size_t length = archive.windows.empty() ? 0 : archive.windows.front().length();
    out << "hioscar-windows 1\n";
    out << "channels " << archive.channel_names.size() << ' ' << "length " << length << ' ' << "sample_rate_hz "
        << format_double(archive.sample_rate_hz) << ' ' << "count " << archive.windows.size() << '\n';
    for (std::size_t i = 0; i < archive.channel_names.size(); ++i) {
        out << (i ? "," : "") << archive.channel_names[i];
    }
    out << '\n';
    manifest << "window_id,subject,label\n";
    for (const auto& w : archive.windows) {
        out << w.window_id << ',' << w.subject_id << ',' << w.label << '\n';
        for (const auto& row : w.data) {
            for (std::size_t t = 0; t < row.size(); ++t) {
                out << (t ? "," : "") << format_double(row[t]);
            }
            out << '\n';
        }
        manifest << w.window_id << ',' << w.subject_id << ',' << w.label << '\n';
    }
}

WindowArchive read_window_archive(const fs::path& directory) {
    const fs::path file = directory / "windows.txt";
    if (!fs::exists(file)) {
        throw ArgumentError("window archive not found: " + file.string());
    }
    const auto lines = lines_of(read_file(file));
    const auto fail = [&](std::size_t line, const std::string& what) {
        return FormatError(file.string() + ":" + std::to_string(line + 1) + ": " + what);
    };
    if (lines.size() < 3 || lines[0] != "hioscar-windows 1") {
        throw fail(0, "not a window archive");
    }
    std::istringstream meta(lines[1]);
    std::string key;
    std::size_t channels = 0;
    std::size_t length = 0;
    std::size_t count = 0;
    std::string rate_text;
    meta >> key >> channels >> key >> length >> key >> rate_text >> key >> count;
    if (!meta) {
        throw fail(1, "bad archive header");
    }
    WindowArchive archive;
    archive.sample_rate_hz = parse_double(rate_text);
    archive.channel_names = channels ? split(lines[2], ',') : std::vector<std::string>{};
    if (archive.channel_names.size() != channels) {
        throw fail(2, "channel name count mismatch");
    }
    std::size_t line = 3;
    for (std::size_t i = 0; i < count; ++i) {
        if (line + channels >= lines.size() + (channels ? 0 : 1)) {
            throw fail(line, "truncated archive");
        }
        const auto head = split(lines[line], ',');
        if (head.size() != 3) {
            throw fail(line, "bad window header");
        }
        Window w;
        w.window_id = std::stoll(head[0]);
        w.subject_id = head[1];
        w.label = head[2];
        ++line;
        for (std::size_t c = 0; c < channels; ++c, ++line) {
            std::vector<double> row;
            row.reserve(length);
            for (const auto& field : split(lines[line], ',')) {
                row.push_back(parse_double(field));
            }
            if (row.size() != length) {
                throw fail(line, "window row has wrong length");
            }
            w.data.push_back(std::move(row));
        }
        archive.windows.push_back(std::move(w));
    }
    return archive;
}

}  // namespace hioscar
