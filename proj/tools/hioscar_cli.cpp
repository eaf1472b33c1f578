// hioscar: command-line driver for the staged pipeline.
//
//   hioscar <stage> --config run.json [overrides...]
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 capability error.

#include "hioscar/common.hpp"
#include "hioscar/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kCapability = 4 };

struct Overrides {
    std::string config;
    std::optional<std::string> data;
    std::optional<std::string> schema;
    std::optional<double> window_seconds;
    std::optional<double> overlap;
    std::optional<double> target_hz;
    std::optional<std::string> feature_kind;
    std::optional<std::size_t> ecdf_points;
    std::optional<std::string> embeddings;
    std::optional<std::string> head_mode;
    std::optional<std::string> hierarchy_import;
    std::optional<std::size_t> subjects_per_fold;
    std::optional<std::size_t> repeats;
    std::vector<std::string> ood_classes;
    std::optional<double> lambda_hat;
    std::optional<std::size_t> knn_k;
    std::vector<double> sweep_windows;
    std::optional<std::string> output;
    std::optional<std::uint64_t> seed;
    std::optional<double> learning_rate;
    std::optional<std::size_t> max_epochs;
    std::optional<std::size_t> patience;
    std::optional<std::size_t> batch_size;
    std::vector<std::size_t> hidden;
    std::optional<double> dropout;
};

void add_run_flags(CLI::App& cmd, Overrides& o) {
    cmd.add_option("-c,--config", o.config, "run configuration (JSON)");
    cmd.add_option("--data", o.data, "CSV file or directory of CSV files");
    cmd.add_option("--schema", o.schema, "column mapping file");
    cmd.add_option("--window-seconds", o.window_seconds);
    cmd.add_option("--overlap", o.overlap);
    cmd.add_option("--target-hz", o.target_hz);
    cmd.add_option("--features", o.feature_kind, "handcrafted | ecdf | external");
    cmd.add_option("--ecdf-points", o.ecdf_points);
    cmd.add_option("--embeddings", o.embeddings, "external embedding file");
    cmd.add_option("--head-mode", o.head_mode, "hierarchical | flat");
    cmd.add_option("--hierarchy-import", o.hierarchy_import, "json tree or parent,child edge list");
    cmd.add_option("--subjects-per-fold", o.subjects_per_fold);
    cmd.add_option("--repeats", o.repeats);
    cmd.add_option("--ood-class", o.ood_classes, "class held out as OOD (repeatable)");
    cmd.add_option("--lambda-hat", o.lambda_hat);
    cmd.add_option("--knn-k", o.knn_k);
    cmd.add_option("--sweep-window", o.sweep_windows, "window lengths in seconds for sweep-window");
    cmd.add_option("-o,--output", o.output, "output directory (env HIOSCAR_OUTPUT_ROOT wins)");
    cmd.add_option("--seed", o.seed);
    cmd.add_option("--learning-rate", o.learning_rate);
    cmd.add_option("--max-epochs", o.max_epochs);
    cmd.add_option("--patience", o.patience);
    cmd.add_option("--batch-size", o.batch_size);
    cmd.add_option("--hidden", o.hidden, "hidden layer widths");
    cmd.add_option("--dropout", o.dropout);
}

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

hioscar::RunConfig build_config(const Overrides& o) {
    json doc = json::object();
    fs::path base = fs::current_path();
    if (!o.config.empty()) {
        std::ifstream in(o.config, std::ios::binary);
        if (!in) {
            throw hioscar::ConfigError("cannot open config " + o.config);
        }
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw hioscar::ConfigError(o.config + ": " + e.what());
        }
        base = fs::absolute(o.config).parent_path();
    }
    if (!doc.is_object()) {
        throw hioscar::ConfigError("config must be a JSON object");
    }
    // Command-line paths are relative to the working directory.
    if (o.data) doc["data"] = absolute(*o.data);
    if (o.schema) doc["schema"] = absolute(*o.schema);
    if (o.window_seconds) doc["window_seconds"] = *o.window_seconds;
    if (o.overlap) doc["overlap"] = *o.overlap;
    if (o.target_hz) doc["target_hz"] = *o.target_hz;
    if (o.feature_kind) doc["features"]["kind"] = *o.feature_kind;
    if (o.ecdf_points) doc["features"]["ecdf_points"] = *o.ecdf_points;
    if (o.embeddings) doc["features"]["external_path"] = absolute(*o.embeddings);
    if (o.head_mode) doc["head_mode"] = *o.head_mode;
    if (o.hierarchy_import) doc["hierarchy_import"] = absolute(*o.hierarchy_import);
    if (o.subjects_per_fold) doc["subjects_per_fold"] = *o.subjects_per_fold;
    if (o.repeats) doc["repeats"] = *o.repeats;
    if (!o.ood_classes.empty()) doc["ood_classes"] = o.ood_classes;
    if (o.lambda_hat) doc["lambda_hat"] = *o.lambda_hat;
    if (o.knn_k) doc["knn_k"] = *o.knn_k;
    if (!o.sweep_windows.empty()) doc["sweep_window_seconds"] = o.sweep_windows;
    if (o.output) doc["output"] = absolute(*o.output);
    if (o.seed) doc["seed"] = *o.seed;
    if (o.learning_rate) doc["train"]["learning_rate"] = *o.learning_rate;
    if (o.max_epochs) doc["train"]["max_epochs"] = *o.max_epochs;
    if (o.patience) doc["train"]["early_stop_patience"] = *o.patience;
    if (o.batch_size) doc["train"]["batch_size"] = *o.batch_size;
    if (!o.hidden.empty()) doc["train"]["hidden_sizes"] = o.hidden;
    if (o.dropout) doc["train"]["dropout_rate"] = *o.dropout;
    return hioscar::RunConfig::from_json(doc, base);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical open-set classification of windowed time series"};
    app.require_subcommand(1);

    Overrides o;
    std::size_t fold = 0;
    std::string what = "hierarchy";
    std::string format = "json";
    std::string destination;

    struct Stage {
        const char* name;
        const char* help;
        void (hioscar::Pipeline::*run)();
    };
    const Stage stages[] = {
        {"prepare", "load, resample and window the recordings", &hioscar::Pipeline::prepare},
        {"features", "assign folds and extract per-window features", &hioscar::Pipeline::features},
        {"hierarchy", "build or import the per-fold class hierarchy", &hioscar::Pipeline::hierarchy},
        {"train", "train heads and fit entropy thresholds", &hioscar::Pipeline::train},
        {"eval-id", "closed-set macro-F1 on test subjects", &hioscar::Pipeline::eval_id},
        {"eval-ood", "AUROC and detection error for held-out classes", &hioscar::Pipeline::eval_ood},
        {"localize", "cumulative cosine distance across the lambda grid", &hioscar::Pipeline::localize},
        {"sweep-window", "rerun the pipeline for several window lengths", &hioscar::Pipeline::sweep_window},
    };
    std::vector<std::pair<CLI::App*, const Stage*>> commands;
    for (const auto& stage : stages) {
        auto* cmd = app.add_subcommand(stage.name, stage.help);
        add_run_flags(*cmd, o);
        commands.emplace_back(cmd, &stage);
    }
    auto* exporter = app.add_subcommand("export", "write a stored artifact to stdout or a file");
    add_run_flags(*exporter, o);
    exporter->add_option("--what", what, "hierarchy | reference-hierarchy | features");
    exporter->add_option("--fold", fold);
    exporter->add_option("--format", format, "json | dot");
    exporter->add_option("--to", destination, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        hioscar::Pipeline pipeline(build_config(o));
        if (exporter->parsed()) {
            const auto text = pipeline.export_artifact(what, fold, format);
            if (destination.empty()) {
                std::cout << text;
            } else {
                std::ofstream(destination, std::ios::binary) << text;
            }
            return kOk;
        }
        for (const auto& [cmd, stage] : commands) {
            if (cmd->parsed()) {
                (pipeline.*(stage->run))();
            }
        }
        return kOk;
    } catch (const hioscar::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const hioscar::CapabilityError& e) {
        std::cerr << "capability error: " << e.what() << "\n";
        return kCapability;
    } catch (const hioscar::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kData;
    } catch (const hioscar::Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
}
