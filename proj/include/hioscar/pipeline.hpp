#pragma once

// Stage orchestration behind the command-line tool. Every stage reads the
// artifacts of the previous one from the output directory, so stages can be
// rerun independently:
//
//   prepare    -> prepare/windows.txt, prepare/manifest.csv
//   features   -> folds.json, fold_<i>/features.csv
//   hierarchy  -> fold_<i>/hierarchy.{json,dot} (+ reference_hierarchy.* with OOD classes)
//   train      -> fold_<i>/repeat_<r>/{checkpoint.json, thresholds.json, entropies.json, train_log.csv}
//   eval-id / eval-ood / localize / sweep-window -> reports/*.{json,csv}

#include "hioscar/dataset.hpp"
#include "hioscar/features.hpp"
#include "hioscar/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hioscar {

struct RunConfig {
    std::filesystem::path data;
    std::filesystem::path schema;
    double window_seconds = 10.0;
    double overlap = 0.5;
    double target_hz = 30.0;
    FeatureConfig features;
    TrainConfig train;
    HeadMode head_mode = HeadMode::hierarchical;
    std::optional<std::filesystem::path> hierarchy_import;
    std::size_t subjects_per_fold = 2;
    std::size_t repeats = 5;
    std::set<std::string> ood_classes;
    double lambda_hat = 0.99;
    std::size_t knn_k = 10;
    std::vector<double> sweep_window_seconds{2.0, 5.0, 10.0};
    std::filesystem::path output = "hioscar_out";
    std::uint64_t seed = 0;

    /// Relative paths resolve against base_dir. Unknown keys are rejected.
    static RunConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
    static RunConfig load(const std::filesystem::path& path);

    nlohmann::ordered_json to_json() const;
    /// Hash of everything except the output location.
    std::string hash() const;
    void validate() const;
};

/// Environment variable that overrides RunConfig::output.
inline constexpr const char* kOutputRootEnv = "HIOSCAR_OUTPUT_ROOT";

class Pipeline {
public:
    explicit Pipeline(RunConfig config);

    const RunConfig& config() const { return config_; }
    const std::filesystem::path& output() const { return config_.output; }

    void prepare();
    void features();
    void hierarchy();
    void train();
    void eval_id();
    void eval_ood();
    void localize();
    void sweep_window();

    /// what: "hierarchy" | "reference-hierarchy" | "features"; format: "json" | "dot" (hierarchies).
    std::string export_artifact(const std::string& what, std::size_t fold, const std::string& format) const;

    /// prepare -> features -> hierarchy -> train.
    void run_through_train();

    std::size_t fold_count() const;
    std::filesystem::path fold_dir(std::size_t fold) const;
    std::filesystem::path run_dir(std::size_t fold, std::size_t repeat) const;
    std::uint64_t run_seed(std::size_t fold, std::size_t repeat) const;

private:
    RunConfig config_;
};

}  // namespace hioscar
