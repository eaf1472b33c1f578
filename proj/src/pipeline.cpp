#include "hioscar/pipeline.hpp"

#include "hioscar/common.hpp"
#include "hioscar/eval.hpp"
#include "hioscar/hierarchy.hpp"
#include "hioscar/inference.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace hioscar {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArgumentError("missing " + path.string() + " (run the earlier stages first)");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ArgumentError("cannot write " + path.string());
    }
    out << text;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

fs::path resolve(const fs::path& base, const std::string& value) {
    fs::path p(value);
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

std::string fixed(double value) { return format_double(value); }

// Manifest rows carry everything later stages need about a window.
std::vector<Window> read_manifest(const fs::path& path) {
    std::vector<Window> rows;
    std::istringstream in(read_text(path));
    std::string line;
    std::getline(in, line);
    if (trim(line) != "window_id,subject,label") {
        throw FormatError(path.string() + ": bad manifest header");
    }
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split(trim(line), ',');
        if (fields.size() != 3) {
            throw FormatError(path.string() + ": bad manifest row '" + line + "'");
        }
        Window w;
        w.window_id = std::stoll(fields[0]);
        w.subject_id = fields[1];
        w.label = fields[2];
        rows.push_back(std::move(w));
    }
    return rows;
}

json fold_plan_to_json(const FoldPlan& plan) {
    json folds = json::array();
    for (const auto& f : plan.folds) {
        folds.push_back({{"train_subjects", f.train_subjects}, {"test_subjects", f.test_subjects}});
    }
    return {{"folds", folds}};
}

FoldPlan fold_plan_from_json(const json& doc) {
    FoldPlan plan;
    for (const auto& f : doc.at("folds")) {
        plan.folds.push_back(
            {f.at("train_subjects").get<std::vector<std::string>>(), f.at("test_subjects").get<std::vector<std::string>>()});
    }
    return plan;
}

// Features of one fold, grouped by role.
struct FoldView {
    std::vector<std::vector<double>> train_id_x;
    std::vector<std::string> train_id_y;
    std::vector<std::vector<double>> train_all_x;
    std::vector<std::string> train_all_y;
    std::vector<std::vector<double>> test_id_x;
    std::vector<std::string> test_id_y;
    std::vector<std::int64_t> test_id_ids;
    std::vector<std::vector<double>> test_ood_x;
    std::vector<std::string> test_ood_y;
};

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

RunConfig RunConfig::from_json(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    static const std::set<std::string> known{"data", "schema", "window_seconds", "overlap", "target_hz",
                                             "features", "train", "head_mode", "hierarchy_import",
                                             "subjects_per_fold", "repeats", "ood_classes", "lambda_hat", "knn_k",
                                             "sweep_window_seconds", "output", "seed"};
    for (const auto& [key, value] : doc.items()) {
        if (!known.count(key)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    RunConfig cfg;
    try {
        if (doc.contains("data")) cfg.data = resolve(base_dir, doc["data"].get<std::string>());
        if (doc.contains("schema")) cfg.schema = resolve(base_dir, doc["schema"].get<std::string>());
        cfg.window_seconds = doc.value("window_seconds", cfg.window_seconds);
        cfg.overlap = doc.value("overlap", cfg.overlap);
        cfg.target_hz = doc.value("target_hz", cfg.target_hz);
        if (doc.contains("features")) {
            const auto& f = doc["features"];
            cfg.features.kind = feature_kind_from_string(f.value("kind", std::string("handcrafted")));
            cfg.features.ecdf_points = f.value("ecdf_points", cfg.features.ecdf_points);
            if (f.contains("external_path") && !f["external_path"].is_null()) {
                cfg.features.external_path = resolve(base_dir, f["external_path"].get<std::string>());
            }
        }
        if (doc.contains("train")) {
            const auto& t = doc["train"];
            auto& tc = cfg.train;
            tc.learning_rate = t.value("learning_rate", tc.learning_rate);
            tc.adam_beta1 = t.value("adam_beta1", tc.adam_beta1);
            tc.adam_beta2 = t.value("adam_beta2", tc.adam_beta2);
            tc.adam_epsilon = t.value("adam_epsilon", tc.adam_epsilon);
            tc.max_epochs = t.value("max_epochs", tc.max_epochs);
            tc.early_stop_patience = t.value("early_stop_patience", tc.early_stop_patience);
            tc.batch_size = t.value("batch_size", tc.batch_size);
            tc.validation_fraction = t.value("validation_fraction", tc.validation_fraction);
            tc.hidden_sizes = t.value("hidden_sizes", tc.hidden_sizes);
            tc.dropout_rate = t.value("dropout_rate", tc.dropout_rate);
        }
        if (doc.contains("head_mode")) cfg.head_mode = head_mode_from_string(doc["head_mode"].get<std::string>());
        if (doc.contains("hierarchy_import") && !doc["hierarchy_import"].is_null()) {
            cfg.hierarchy_import = resolve(base_dir, doc["hierarchy_import"].get<std::string>());
        }
        cfg.subjects_per_fold = doc.value("subjects_per_fold", cfg.subjects_per_fold);
        cfg.repeats = doc.value("repeats", cfg.repeats);
        if (doc.contains("ood_classes")) {
            const auto classes = doc["ood_classes"].get<std::vector<std::string>>();
            cfg.ood_classes = {classes.begin(), classes.end()};
        }
        cfg.lambda_hat = doc.value("lambda_hat", cfg.lambda_hat);
        cfg.knn_k = doc.value("knn_k", cfg.knn_k);
        cfg.sweep_window_seconds = doc.value("sweep_window_seconds", cfg.sweep_window_seconds);
        if (doc.contains("output")) cfg.output = resolve(base_dir, doc["output"].get<std::string>());
        cfg.seed = doc.value("seed", cfg.seed);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig RunConfig::load(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(doc, fs::absolute(path).parent_path());
}

ojson RunConfig::to_json() const {
    ojson doc;
    doc["data"] = data.string();
    doc["schema"] = schema.string();
    doc["window_seconds"] = window_seconds;
    doc["overlap"] = overlap;
    doc["target_hz"] = target_hz;
    doc["features"] = {{"kind", hioscar::to_string(features.kind)},
                       {"ecdf_points", features.ecdf_points},
                       {"external_path", features.external_path ? ojson(features.external_path->string()) : ojson()}};
    doc["train"] = {{"learning_rate", train.learning_rate},
                    {"adam_beta1", train.adam_beta1},
                    {"adam_beta2", train.adam_beta2},
                    {"adam_epsilon", train.adam_epsilon},
                    {"max_epochs", train.max_epochs},
                    {"early_stop_patience", train.early_stop_patience},
                    {"batch_size", train.batch_size},
                    {"validation_fraction", train.validation_fraction},
                    {"hidden_sizes", train.hidden_sizes},
                    {"dropout_rate", train.dropout_rate}};
    doc["head_mode"] = hioscar::to_string(head_mode);
    doc["hierarchy_import"] = hierarchy_import ? ojson(hierarchy_import->string()) : ojson();
    doc["subjects_per_fold"] = subjects_per_fold;
    doc["repeats"] = repeats;
    doc["ood_classes"] = std::vector<std::string>(ood_classes.begin(), ood_classes.end());
    doc["lambda_hat"] = lambda_hat;
    doc["knn_k"] = knn_k;
    doc["sweep_window_seconds"] = sweep_window_seconds;
    doc["output"] = output.string();
    doc["seed"] = seed;
    return doc;
}

std::string RunConfig::hash() const {
    auto doc = to_json();
    doc.erase("output");
    return hex64(fnv1a64(doc.dump()));
}

void RunConfig::validate() const {
    if (data.empty() || !fs::exists(data)) {
        throw ConfigError("data path does not exist: '" + data.string() + "'");
    }
    if (schema.empty() || !fs::exists(schema)) {
        throw ConfigError("schema file does not exist: '" + schema.string() + "'");
    }
    if (!(window_seconds > 0.0) || !(target_hz > 0.0)) {
        throw ConfigError("window_seconds and target_hz must be positive");
    }
    if (!(overlap >= 0.0 && overlap < 1.0)) {
        throw ConfigError("overlap must lie in [0, 1)");
    }
    features.validate();
    if (features.external_path && !fs::exists(*features.external_path)) {
        throw ConfigError("embedding file does not exist: " + features.external_path->string());
    }
    train.validate();
    if (hierarchy_import && !fs::exists(*hierarchy_import)) {
        throw ConfigError("hierarchy file does not exist: " + hierarchy_import->string());
    }
    if (subjects_per_fold == 0 || repeats == 0 || knn_k == 0) {
        throw ConfigError("subjects_per_fold, repeats and knn_k must be positive");
    }
    if (!(lambda_hat >= 0.0 && lambda_hat <= 1.0)) {
        throw ConfigError("lambda_hat must lie in [0, 1]");
    }
}

// ---------------------------------------------------------------------------
// Pipeline

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)) {
    if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0') {
        config_.output = root;
    }
    config_.validate();
}

fs::path Pipeline::fold_dir(std::size_t fold) const { return config_.output / ("fold_" + std::to_string(fold)); }

fs::path Pipeline::run_dir(std::size_t fold, std::size_t repeat) const {
    return fold_dir(fold) / ("repeat_" + std::to_string(repeat));
}

std::uint64_t Pipeline::run_seed(std::size_t fold, std::size_t repeat) const {
    return splitmix64(splitmix64(config_.seed) ^ (static_cast<std::uint64_t>(fold) << 32) ^ repeat);
}

std::size_t Pipeline::fold_count() const {
    return fold_plan_from_json(json::parse(read_text(config_.output / "folds.json"))).folds.size();
}

void Pipeline::prepare() {
    const auto schema = CsvSchema::load(config_.schema);
    const auto recordings = load_recordings(config_.data, schema);
    if (recordings.empty()) {
        throw ArgumentError("no recordings found in " + config_.data.string());
    }
    std::vector<Recording> resampled;
    resampled.reserve(recordings.size());
    for (const auto& rec : recordings) {
        resampled.push_back(resample(rec, config_.target_hz));
    }
    WindowArchive archive;
    archive.channel_names = recordings.front().channel_names;
    archive.sample_rate_hz = config_.target_hz;
    archive.windows = make_windows(resampled, config_.window_seconds, config_.overlap);
    if (archive.windows.empty()) {
        throw ArgumentError("no windows produced; recordings shorter than " + fixed(config_.window_seconds) + " s");
    }
    write_window_archive(config_.output / "prepare", archive);
    std::cout << "prepare: " << recordings.size() << " recordings, " << archive.windows.size() << " windows of "
              << archive.windows.front().length() << " samples x " << archive.channel_names.size() << " channels\n";
}

void Pipeline::features() {
    const auto archive = read_window_archive(config_.output / "prepare");
    const auto plan = subject_kfold(archive.windows, config_.subjects_per_fold, config_.seed);
    write_text(config_.output / "folds.json", fold_plan_to_json(plan).dump(2) + "\n");

    const auto labels = distinct_labels(archive.windows);
    for (const auto& c : config_.ood_classes) {
        if (!std::binary_search(labels.begin(), labels.end(), c)) {
            throw ConfigError("OOD class '" + c + "' does not occur in the data");
        }
    }

    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        const auto train_windows = select_subjects(archive.windows, plan.folds[f].train_subjects);
        const auto split = hold_out_classes(train_windows, config_.ood_classes);
        if (split.id_windows.empty()) {
            throw ArgumentError("fold " + std::to_string(f) + " has no in-distribution training windows");
        }
        std::vector<Window> windows = archive.windows;
        if (config_.features.kind != FeatureKind::external) {
            // Statistics come from training-subject ID windows only.
            ChannelNormalizer::fit(split.id_windows).apply(windows);
        }
        auto feats = extract_features(windows, config_.features, archive.channel_names);

        const std::set<std::string> train_subjects(plan.folds[f].train_subjects.begin(),
                                                   plan.folds[f].train_subjects.end());
        std::vector<FeatureVector> train_id;
        for (std::size_t i = 0; i < windows.size(); ++i) {
            if (train_subjects.count(windows[i].subject_id) && !config_.ood_classes.count(windows[i].label)) {
                train_id.push_back(feats[i]);
            }
        }
        const auto scaler = FeatureScaler::fit(train_id);
        scaler.apply(feats);
        write_text(fold_dir(f) / "features.csv", format_features(feats));
        write_text(fold_dir(f) / "scaler.json",
                   json({{"mean", scaler.mean()}, {"scale", scaler.scale()}}).dump() + "\n");
    }
    std::cout << "features: " << plan.folds.size() << " folds, kind " << hioscar::to_string(config_.features.kind)
              << "\n";
}

namespace {

FoldView load_fold(const Pipeline& pipeline, std::size_t fold) {
    const auto& cfg = pipeline.config();
    const auto manifest = read_manifest(cfg.output / "prepare" / "manifest.csv");
    const auto plan = fold_plan_from_json(json::parse(read_text(cfg.output / "folds.json")));
    if (fold >= plan.folds.size()) {
        throw ArgumentError("fold " + std::to_string(fold) + " does not exist");
    }
    const auto feats = parse_embeddings(read_text(pipeline.fold_dir(fold) / "features.csv"), manifest, "features.csv");
    const std::set<std::string> train(plan.folds[fold].train_subjects.begin(), plan.folds[fold].train_subjects.end());
    FoldView view;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const auto& w = manifest[i];
        const bool is_ood = cfg.ood_classes.count(w.label) > 0;
        if (train.count(w.subject_id)) {
            view.train_all_x.push_back(feats[i].values);
            view.train_all_y.push_back(w.label);
            if (!is_ood) {
                view.train_id_x.push_back(feats[i].values);
                view.train_id_y.push_back(w.label);
            }
        } else if (is_ood) {
            view.test_ood_x.push_back(feats[i].values);
            view.test_ood_y.push_back(w.label);
        } else {
            view.test_id_x.push_back(feats[i].values);
            view.test_id_y.push_back(w.label);
            view.test_id_ids.push_back(w.window_id);
        }
    }
    return view;
}

Hierarchy load_fold_hierarchy(const Pipeline& pipeline, std::size_t fold, const std::string& name = "hierarchy") {
    return parse_hierarchy(read_text(pipeline.fold_dir(fold) / (name + ".json")));
}

FeatureScaler load_scaler(const Pipeline& pipeline, std::size_t fold) {
    const auto doc = json::parse(read_text(pipeline.fold_dir(fold) / "scaler.json"));
    return FeatureScaler::from_moments(doc.at("mean").get<std::vector<double>>(),
                                       doc.at("scale").get<std::vector<double>>());
}

// Drops test windows whose class the fold's hierarchy has never seen.
void keep_known(const Hierarchy& h, std::vector<std::vector<double>>& x, std::vector<std::string>& y,
                std::vector<std::int64_t>* ids, std::size_t fold) {
    std::size_t kept = 0;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!h.find_leaf(y[i])) {
            ++dropped;
            continue;
        }
        if (kept != i) {
            x[kept] = std::move(x[i]);
            y[kept] = std::move(y[i]);
            if (ids) {
                (*ids)[kept] = (*ids)[i];
            }
        }
        ++kept;
    }
    x.resize(kept);
    y.resize(kept);
    if (ids) {
        ids->resize(kept);
    }
    if (dropped) {
        warn("fold " + std::to_string(fold) + ": " + std::to_string(dropped) +
             " test windows of classes unseen in training were skipped");
    }
}

ojson summary_json(std::span<const double> values) {
    const auto s = summarize(values);
    return {{"mean", s.mean}, {"std", s.stddev}, {"n", s.n}};
}

// Flat CSV report: one row per fold x repeat x metric plus mean/std rows.
std::string metric_csv(const std::string& hash, const std::vector<std::string>& metrics,
                       const std::vector<std::tuple<std::size_t, std::size_t, std::vector<double>>>& runs) {
    std::string out = "config_hash,fold,repeat,metric,value\n";
    for (const auto& [fold, repeat, values] : runs) {
        for (std::size_t m = 0; m < metrics.size(); ++m) {
            out += hash + "," + std::to_string(fold) + "," + std::to_string(repeat) + "," + metrics[m] + "," +
                   fixed(values[m]) + "\n";
        }
    }
    for (std::size_t m = 0; m < metrics.size(); ++m) {
        std::vector<double> column;
        for (const auto& run : runs) {
            column.push_back(std::get<2>(run)[m]);
        }
        const auto s = summarize(column);
        out += hash + ",all,mean," + metrics[m] + "," + fixed(s.mean) + "\n";
        out += hash + ",all,std," + metrics[m] + "," + fixed(s.stddev) + "\n";
    }
    return out;
}

}  // namespace

void Pipeline::hierarchy() {
    const std::size_t folds = fold_count();
    for (std::size_t f = 0; f < folds; ++f) {
        const auto view = load_fold(*this, f);
        Hierarchy h;
        if (config_.hierarchy_import) {
            h = import_hierarchy(*config_.hierarchy_import);
            std::set<std::string> expected(view.train_id_y.begin(), view.train_id_y.end());
            const std::set<std::string> actual(h.classes().begin(), h.classes().end());
            if (expected != actual) {
                throw ArgumentError("imported hierarchy leaves do not match the training classes of fold " +
                                    std::to_string(f));
            }
        } else {
            h = hac_build(class_centroids(std::span<const std::vector<double>>(view.train_id_x), view.train_id_y));
        }
        write_text(fold_dir(f) / "hierarchy.json", export_hierarchy(h, HierarchyFormat::json_tree));
        write_text(fold_dir(f) / "hierarchy.dot", export_hierarchy(h, HierarchyFormat::dot));

        if (!config_.ood_classes.empty() && !config_.hierarchy_import) {
            // Reference tree over every training-subject class, OOD included;
            // used only to score localization.
            const auto reference =
                hac_build(class_centroids(std::span<const std::vector<double>>(view.train_all_x), view.train_all_y));
            write_text(fold_dir(f) / "reference_hierarchy.json", export_hierarchy(reference, HierarchyFormat::json_tree));
            write_text(fold_dir(f) / "reference_hierarchy.dot", export_hierarchy(reference, HierarchyFormat::dot));
        }
        if (config_.hierarchy_import) {
            std::cout << export_hierarchy(h, HierarchyFormat::json_tree);
        }
        std::cout << "hierarchy: fold " << f << ", " << h.leaf_count() << " classes, " << h.size() << " nodes\n";
    }
}

void Pipeline::train() {
    const std::size_t folds = fold_count();
    for (std::size_t f = 0; f < folds; ++f) {
        const auto view = load_fold(*this, f);
        const auto h = load_fold_hierarchy(*this, f);
        const auto data = [&] {
            LabelledFeatures d;
            d.x = view.train_id_x;
            for (const auto& label : view.train_id_y) {
                d.y.push_back(h.leaf_of(label));
            }
            return d;
        }();
        const auto scaler = load_scaler(*this, f);
        for (std::size_t r = 0; r < config_.repeats; ++r) {
            TrainConfig tc = config_.train;
            tc.seed = run_seed(f, r);
            const auto result = hioscar::train(data, h, tc, config_.head_mode);

            Checkpoint checkpoint{result.params, hierarchy_fingerprint(h), config_.features, scaler};
            const auto dir = run_dir(f, r);
            fs::create_directories(dir);
            save_checkpoint(dir / "checkpoint.json", checkpoint);

            std::string log = "epoch,train_loss,validation_loss\n";
            for (const auto& e : result.log) {
                log += std::to_string(e.epoch) + "," + fixed(e.train_loss) + "," + fixed(e.validation_loss) + "\n";
            }
            write_text(dir / "train_log.csv", log);

            if (config_.head_mode == HeadMode::hierarchical) {
                const auto record = record_entropies(data.x, result.params, h);
                write_text(dir / "entropies.json", serialize_entropy_record(record));
                write_text(dir / "thresholds.json", serialize_thresholds(thresholds_at(record, config_.lambda_hat)));
            }
            std::cout << "train: fold " << f << " repeat " << r << ", " << result.log.size() << " epochs, best "
                      << result.best_epoch << "\n";
        }
    }
}

void Pipeline::eval_id() {
    const std::size_t folds = fold_count();
    const std::string hash = config_.hash();
    ojson runs = ojson::array();
    std::vector<std::tuple<std::size_t, std::size_t, std::vector<double>>> rows;
    std::vector<double> scores;
    for (std::size_t f = 0; f < folds; ++f) {
        auto view = load_fold(*this, f);
        const auto h = load_fold_hierarchy(*this, f);
        keep_known(h, view.test_id_x, view.test_id_y, &view.test_id_ids, f);
        if (view.test_id_x.empty()) {
            throw ArgumentError("fold " + std::to_string(f) + " has no in-distribution test windows");
        }
        for (std::size_t r = 0; r < config_.repeats; ++r) {
            const auto dir = run_dir(f, r);
            const auto checkpoint = load_checkpoint(dir / "checkpoint.json", h);
            std::vector<std::string> predictions;
            std::vector<OpenSetOutput> outputs;
            const bool hierarchical = checkpoint.params.mode == HeadMode::hierarchical;
            const auto thresholds =
                hierarchical ? parse_thresholds(read_text(dir / "thresholds.json")) : ThresholdTable{};
            for (const auto& x : view.test_id_x) {
                if (hierarchical) {
                    const auto out = open_set_predict(x, checkpoint.params, h, thresholds);
                    predictions.push_back(h.class_name(out.closed_set_leaf));
                    outputs.push_back(out);
                } else {
                    const auto c = classify(x, checkpoint.params, h);
                    predictions.push_back(h.class_name(c.leaf));
                    outputs.push_back({c.leaf, true, c.ood_score, c.leaf, h.depth(c.leaf)});
                }
            }
            write_text(dir / "predictions_id.csv", format_prediction_records(view.test_id_ids, outputs));
            const auto report = macro_f1(predictions, view.test_id_y, h.classes());
            runs.push_back({{"fold", f},
                            {"repeat", r},
                            {"macro_f1", report.macro_f1},
                            {"per_class_f1", report.per_class_f1},
                            {"classes", report.classes},
                            {"confusion", report.confusion}});
            rows.emplace_back(f, r, std::vector<double>{report.macro_f1});
            scores.push_back(report.macro_f1);
        }
    }
    ojson doc;
    doc["config_hash"] = hash;
    doc["head_mode"] = hioscar::to_string(config_.head_mode);
    doc["runs"] = runs;
    doc["aggregate"] = {{"macro_f1", summary_json(scores)}};
    write_text(config_.output / "reports" / "eval_id.json", doc.dump(2) + "\n");
    write_text(config_.output / "reports" / "eval_id.csv", metric_csv(hash, {"macro_f1"}, rows));
    const auto s = summarize(scores);
    std::cout << "eval-id: macro-F1 " << fixed(s.mean) << " (" << fixed(s.stddev) << ") over " << s.n << " runs\n";
}

void Pipeline::eval_ood() {
    if (config_.ood_classes.empty()) {
        throw ConfigError("eval-ood needs ood_classes");
    }
    const std::size_t folds = fold_count();
    const std::string hash = config_.hash();
    const std::vector<std::string> metrics{"auroc", "detection_error", "id_macro_f1", "knn_auroc",
                                           "knn_detection_error"};
    ojson runs = ojson::array();
    std::vector<std::tuple<std::size_t, std::size_t, std::vector<double>>> rows;
    for (std::size_t f = 0; f < folds; ++f) {
        auto view = load_fold(*this, f);
        const auto h = load_fold_hierarchy(*this, f);
        keep_known(h, view.test_id_x, view.test_id_y, &view.test_id_ids, f);
        if (view.test_ood_x.empty()) {
            warn("fold " + std::to_string(f) + " has no OOD test windows; skipped");
            continue;
        }
        if (view.test_id_x.empty()) {
            throw ArgumentError("fold " + std::to_string(f) + " has no in-distribution test windows");
        }
        // Distance baseline over the same feature space.
        const std::size_t k = std::min(config_.knn_k, view.train_id_x.size());
        std::vector<double> knn_id;
        std::vector<double> knn_ood;
        for (const auto& x : view.test_id_x) {
            knn_id.push_back(knn_ood_score(x, view.train_id_x, k));
        }
        for (const auto& x : view.test_ood_x) {
            knn_ood.push_back(knn_ood_score(x, view.train_id_x, k));
        }
        const double knn_auc = auroc(knn_id, knn_ood);
        const double knn_de = detection_error(knn_id, knn_ood);

        for (std::size_t r = 0; r < config_.repeats; ++r) {
            const auto checkpoint = load_checkpoint(run_dir(f, r) / "checkpoint.json", h);
            const auto report =
                ood_set_evaluate(checkpoint.params, h, view.test_id_x, view.test_id_y, view.test_ood_x, view.test_ood_y);
            runs.push_back({{"fold", f},
                            {"repeat", r},
                            {"ood_classes", std::vector<std::string>(report.ood_classes.begin(), report.ood_classes.end())},
                            {"n_id", report.n_id},
                            {"n_ood", report.n_ood},
                            {"auroc", report.auroc},
                            {"detection_error", report.detection_error},
                            {"id_macro_f1", report.id_macro_f1},
                            {"knn_auroc", knn_auc},
                            {"knn_detection_error", knn_de}});
            rows.emplace_back(f, r,
                              std::vector<double>{report.auroc, report.detection_error, report.id_macro_f1, knn_auc,
                                                  knn_de});
        }
    }
    if (rows.empty()) {
        throw ArgumentError("no fold has OOD test windows");
    }
    ojson aggregate;
    for (std::size_t m = 0; m < metrics.size(); ++m) {
        std::vector<double> column;
        for (const auto& row : rows) {
            column.push_back(std::get<2>(row)[m]);
        }
        aggregate[metrics[m]] = summary_json(column);
    }
    ojson doc;
    doc["config_hash"] = hash;
    doc["ood_classes"] = std::vector<std::string>(config_.ood_classes.begin(), config_.ood_classes.end());
    doc["runs"] = runs;
    doc["aggregate"] = aggregate;
    write_text(config_.output / "reports" / "eval_ood.json", doc.dump(2) + "\n");
    write_text(config_.output / "reports" / "eval_ood.csv", metric_csv(hash, metrics, rows));
    std::cout << "eval-ood: AUROC " << fixed(aggregate["auroc"]["mean"].get<double>()) << ", detection error "
              << fixed(aggregate["detection_error"]["mean"].get<double>()) << "\n";
}

void Pipeline::localize() {
    if (config_.ood_classes.empty()) {
        throw ConfigError("localize needs ood_classes");
    }
    if (config_.hierarchy_import) {
        throw CapabilityError("localize scores cumulative cosine distance, which an imported hierarchy cannot provide");
    }
    if (config_.head_mode != HeadMode::hierarchical) {
        throw CapabilityError("localize needs a hierarchical head");
    }
    const std::size_t folds = fold_count();
    const std::string hash = config_.hash();
    const auto grid = default_lambda_grid();
    std::string csv = "config_hash,fold,lambda_hat,mean_distance,mean_depth\n";
    ojson fold_docs = ojson::array();
    for (std::size_t f = 0; f < folds; ++f) {
        const auto view = load_fold(*this, f);
        if (view.test_ood_x.empty()) {
            warn("fold " + std::to_string(f) + " has no OOD test windows; skipped");
            continue;
        }
        const auto h = load_fold_hierarchy(*this, f);
        const auto reference = load_fold_hierarchy(*this, f, "reference_hierarchy");
        std::vector<double> distance(grid.size(), 0.0);
        std::vector<double> depth(grid.size(), 0.0);
        for (std::size_t r = 0; r < config_.repeats; ++r) {
            const auto dir = run_dir(f, r);
            const auto checkpoint = load_checkpoint(dir / "checkpoint.json", h);
            const auto record = parse_entropy_record(read_text(dir / "entropies.json"));
            const auto report =
                localization_sweep(view.test_ood_x, view.test_ood_y, checkpoint.params, h, record, reference, grid);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                distance[i] += report.per_lambda[i].mean_distance / static_cast<double>(config_.repeats);
                depth[i] += report.per_lambda[i].mean_depth / static_cast<double>(config_.repeats);
            }
        }
        ojson points = ojson::array();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            csv += hash + "," + std::to_string(f) + "," + fixed(grid[i]) + "," + fixed(distance[i]) + "," +
                   fixed(depth[i]) + "\n";
            points.push_back({{"lambda_hat", grid[i]}, {"mean_distance", distance[i]}, {"mean_depth", depth[i]}});
        }
        fold_docs.push_back({{"fold", f}, {"per_lambda", points}});
    }
    ojson doc;
    doc["config_hash"] = hash;
    doc["mapping_rule"] = kMappingRule;
    doc["folds"] = fold_docs;
    write_text(config_.output / "reports" / "localize.json", doc.dump(2) + "\n");
    write_text(config_.output / "reports" / "localize.csv", csv);
    std::cout << "localize: " << grid.size() << " lambda values per fold\n";
}

void Pipeline::run_through_train() {
    prepare();
    features();
    hierarchy();
    train();
}

void Pipeline::sweep_window() {
    const std::string hash = config_.hash();
    std::string csv = "config_hash,window_seconds,macro_f1_mean,macro_f1_std,runs\n";
    ojson entries = ojson::array();
    for (const double seconds : config_.sweep_window_seconds) {
        RunConfig sub = config_;
        sub.window_seconds = seconds;
        sub.output = config_.output / "sweep_window" / ("w_" + fixed(seconds));
        Pipeline run(sub);
        run.config_.output = sub.output;  // ignore the env override inside the sweep
        run.run_through_train();
        run.eval_id();
        const auto report = json::parse(read_text(sub.output / "reports" / "eval_id.json"));
        const auto& agg = report.at("aggregate").at("macro_f1");
        csv += hash + "," + fixed(seconds) + "," + fixed(agg.at("mean").get<double>()) + "," +
               fixed(agg.at("std").get<double>()) + "," + std::to_string(agg.at("n").get<std::size_t>()) + "\n";
        entries.push_back({{"window_seconds", seconds},
                           {"macro_f1_mean", agg.at("mean").get<double>()},
                           {"macro_f1_std", agg.at("std").get<double>()}});
    }
    ojson doc;
    doc["config_hash"] = hash;
    doc["windows"] = entries;
    write_text(config_.output / "reports" / "sweep_window.json", doc.dump(2) + "\n");
    write_text(config_.output / "reports" / "sweep_window.csv", csv);
}

std::string Pipeline::export_artifact(const std::string& what, std::size_t fold, const std::string& format) const {
    if (what == "hierarchy" || what == "reference-hierarchy") {
        const auto h = load_fold_hierarchy(*this, fold, what == "hierarchy" ? "hierarchy" : "reference_hierarchy");
        if (format == "json") {
            return export_hierarchy(h, HierarchyFormat::json_tree);
        }
        if (format == "dot") {
            return export_hierarchy(h, HierarchyFormat::dot);
        }
        throw ConfigError("unknown hierarchy format '" + format + "' (expected json or dot)");
    }
    if (what == "features") {
        return read_text(fold_dir(fold) / "features.csv");
    }
    throw ConfigError("unknown export target '" + what + "' (expected hierarchy, reference-hierarchy or features)");
}

}  // namespace hioscar
