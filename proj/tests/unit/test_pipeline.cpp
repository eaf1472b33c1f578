#include "hioscar/common.hpp"
#include "hioscar/pipeline.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hioscar;
using namespace hioscar::testing;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kActivities{"cycle", "drag", "sit", "walk"};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

struct CliResult {
    int code;
    std::string output;
};

CliResult run_cli(const std::string& args, const std::string& env = "") {
    const auto log = fs::temp_directory_path() / "hioscar_cli_output.txt";
    const std::string cmd = env + " " + HIOSCAR_CLI_PATH + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

// A small workspace: 4 subjects, csv + schema + config.
struct Workspace {
    fs::path root;
    explicit Workspace(const std::string& name, std::uint64_t seed = 1) : root(fs::temp_directory_path() / name) {
        fs::remove_all(root);
        spit(root / "data.csv", activity_csv(4, kActivities, 24.0, 20.0, seed));
        spit(root / "schema.txt", "subject = subject\nlabel = activity\ntimestamp = time\nchannels = acc_x, acc_y, acc_z\n");
        write_config("run.json", "");
    }
    fs::path write_config(const std::string& name, const std::string& extra) {
        std::string body = R"({"data":"data.csv","schema":"schema.txt","window_seconds":4,"target_hz":10,)"
                           R"("repeats":2,"ood_classes":["drag"],"output":"out","seed":3,)"
                           R"("train":{"learning_rate":0.01,"max_epochs":15,"hidden_sizes":[8]})";
        body += extra + "}";
        spit(root / name, body);
        return root / name;
    }
    std::string config(const std::string& name = "run.json") const { return "-c " + (root / name).string(); }
    ~Workspace() { fs::remove_all(root); }
};

void run_all(const Workspace& ws, const std::string& cfg = "run.json", const std::string& env = "") {
    for (const char* stage : {"prepare", "features", "hierarchy", "train", "eval-id", "eval-ood", "localize"}) {
        const auto r = run_cli(std::string(stage) + " " + ws.config(cfg), env);
        INFO(stage << ": " << r.output);
        REQUIRE(r.code == 0);
    }
}

}  // namespace

TEST_CASE("run config defaults and parsing") {
    const RunConfig defaults;
    CHECK(defaults.window_seconds == 10.0);
    CHECK(defaults.overlap == 0.5);
    CHECK(defaults.target_hz == 30.0);
    CHECK(defaults.repeats == 5);
    CHECK(defaults.train.learning_rate == 1e-4);
    CHECK(defaults.train.max_epochs == 250);
    CHECK(defaults.train.early_stop_patience == 5);

    const auto doc = nlohmann::json::parse(R"({"data":"d.csv","window_seconds":2,"ood_classes":["x"],
        "features":{"kind":"ecdf","ecdf_points":7},"train":{"hidden_sizes":[4,4]}})");
    const auto cfg = RunConfig::from_json(doc, "/base");
    CHECK(cfg.data == fs::path("/base/d.csv"));
    CHECK(cfg.window_seconds == 2.0);
    CHECK(cfg.features.kind == FeatureKind::ecdf);
    CHECK(cfg.features.ecdf_points == 7);
    CHECK(cfg.train.hidden_sizes == std::vector<std::size_t>{4, 4});
    CHECK(cfg.ood_classes == std::set<std::string>{"x"});

    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"windw_seconds":2})"), "/"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"repeats":"five"})"), "/"), ConfigError);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);  // /base/d.csv does not exist

    auto moved = cfg;
    moved.output = "/elsewhere";
    CHECK(moved.hash() == cfg.hash());
    moved.seed = 9;
    CHECK(moved.hash() != cfg.hash());
}

TEST_CASE("prepare writes an archive and is idempotent") {
    Workspace ws("hioscar_cli_prepare");
    const auto first = run_cli("prepare " + ws.config());
    REQUIRE(first.code == 0);
    CHECK(first.output.find("16 recordings") != std::string::npos);
    const auto archive = slurp(ws.root / "out/prepare/windows.txt");
    const auto manifest = slurp(ws.root / "out/prepare/manifest.csv");
    CHECK(manifest.rfind("window_id,subject,label\n", 0) == 0);
    // 24 s at 10 Hz, 4 s windows, 2 s stride: 11 windows per segment.
    CHECK(line_count(manifest) == 1 + 16 * 11);
    REQUIRE(run_cli("prepare " + ws.config()).code == 0);
    CHECK(slurp(ws.root / "out/prepare/windows.txt") == archive);
}

TEST_CASE("exit codes") {
    Workspace ws("hioscar_cli_errors");
    spit(ws.root / "bad_schema.txt", "subject = subject\nlabel = nope\n");
    const auto bad = ws.write_config("bad.json", R"(,"schema":"bad_schema.txt")");
    const auto schema_error = run_cli("prepare -c " + bad.string());
    CHECK(schema_error.code == 3);
    CHECK(schema_error.output.find("schema") != std::string::npos);
    CHECK(schema_error.output.find("nope") != std::string::npos);

    CHECK(run_cli("prepare -c " + (ws.root / "missing.json").string()).code == 2);
    ws.write_config("typo.json", R"(,"overlapp":0.5)");
    CHECK(run_cli("prepare " + ws.config("typo.json")).code == 2);
    CHECK(run_cli("frobnicate").code == 2);
    CHECK(run_cli("train " + ws.config()).code == 3);  // nothing prepared yet

    spit(ws.root / "tree.csv", "parent,child\nroot,moving\nroot,sit\nmoving,cycle\nmoving,walk\n");
    ws.write_config("imported.json", R"(,"hierarchy_import":"tree.csv")");
    for (const char* stage : {"prepare", "features", "hierarchy"}) {
        const auto r = run_cli(std::string(stage) + " " + ws.config("imported.json"));
        INFO(r.output);
        REQUIRE(r.code == 0);
        if (std::string(stage) == "hierarchy") CHECK(r.output.find("\"walk\"") != std::string::npos);
    }
    REQUIRE(run_cli("train " + ws.config("imported.json")).code == 0);
    CHECK(run_cli("eval-id " + ws.config("imported.json")).code == 0);
    const auto capability = run_cli("localize " + ws.config("imported.json"));
    CHECK(capability.code == 4);
}

TEST_CASE("full pipeline reports, determinism and output-root override") {
    Workspace ws("hioscar_cli_full");
    run_all(ws);
    const auto out = ws.root / "out";
    const auto plan = nlohmann::json::parse(slurp(out / "folds.json"));
    REQUIRE(plan["folds"].size() == 2);
    const std::string hash = nlohmann::json::parse(slurp(out / "reports/eval_id.json"))["config_hash"];

    // 2 folds x 2 repeats = 4 runs; one metric plus mean/std rows.
    const auto id_csv = slurp(out / "reports/eval_id.csv");
    CHECK(line_count(id_csv) == 1 + 4 * 1 + 2);
    CHECK(id_csv.find(hash + ",all,mean,macro_f1,") != std::string::npos);
    const auto ood_csv = slurp(out / "reports/eval_ood.csv");
    CHECK(line_count(ood_csv) == 1 + 4 * 5 + 2 * 5);
    CHECK(line_count(slurp(out / "reports/localize.csv")) == 1 + 2 * 21);
    const auto ood = nlohmann::json::parse(slurp(out / "reports/eval_ood.json"));
    CHECK(ood["runs"].size() == 4);
    CHECK(ood["runs"][0]["ood_classes"] == nlohmann::json::array({"drag"}));

    const auto dot = run_cli("export " + ws.config() + " --what hierarchy --format dot --fold 1");
    CHECK(dot.code == 0);
    CHECK(dot.output.find("digraph") != std::string::npos);
    CHECK(dot.output == slurp(out / "fold_1/hierarchy.dot"));
    CHECK(run_cli("export " + ws.config() + " --what reference-hierarchy --fold 0").output.find("\"drag\"") !=
          std::string::npos);
    CHECK(run_cli("export " + ws.config() + " --what hierarchy --format svg").code == 2);

    // Same config into a second root via the environment: identical bytes.
    const auto second = ws.root / "second";
    run_all(ws, "run.json", std::string(kOutputRootEnv) + "=" + second.string());
    for (const char* report : {"eval_id.json", "eval_id.csv", "eval_ood.json", "eval_ood.csv", "localize.json",
                               "localize.csv"}) {
        CAPTURE(report);
        CHECK(slurp(second / "reports" / report) == slurp(out / "reports" / report));
    }
    CHECK(slurp(second / "fold_0/repeat_1/checkpoint.json") == slurp(out / "fold_0/repeat_1/checkpoint.json"));

    // A checkpoint paired with a different hierarchy is refused.
    spit(out / "fold_0/hierarchy.json", "r,x\nr,walk\nx,cycle\nx,sit\n");
    const auto refused = run_cli("eval-id " + ws.config());
    CHECK(refused.code == 3);
    CHECK(refused.output.find("refusing to evaluate") != std::string::npos);
}

TEST_CASE("test-subject data never reaches training artifacts") {
    Workspace ws("hioscar_cli_leak");
    run_all(ws);
    const auto out = ws.root / "out";
    const auto plan = nlohmann::json::parse(slurp(out / "folds.json"));
    const auto test_subjects = plan["folds"][0]["test_subjects"].get<std::vector<std::string>>();

    // Rewrite sensor values of fold-0 test subjects only.
    std::istringstream in(slurp(ws.root / "data.csv"));
    std::string line, rewritten;
    std::getline(in, line);
    rewritten = line + "\n";
    Rng rng(77);
    while (std::getline(in, line)) {
        auto f = split(line, ',');
        if (std::find(test_subjects.begin(), test_subjects.end(), f[1]) != test_subjects.end()) {
            for (int c = 3; c < 6; ++c) f[c] = format_double(parse_double(f[c]) * 3.0 + rng.normal());
        }
        rewritten += f[0] + "," + f[1] + "," + f[2] + "," + f[3] + "," + f[4] + "," + f[5] + "\n";
    }
    const auto before_cp = slurp(out / "fold_0/repeat_0/checkpoint.json");
    const auto before_th = slurp(out / "fold_0/repeat_1/thresholds.json");
    const auto before_h = slurp(out / "fold_0/hierarchy.json");
    const auto before_eval = slurp(out / "reports/eval_id.csv");
    spit(ws.root / "data.csv", rewritten);
    run_all(ws);
    CHECK(slurp(out / "folds.json") == plan.dump(2) + "\n");
    CHECK(slurp(out / "fold_0/hierarchy.json") == before_h);
    CHECK(slurp(out / "fold_0/repeat_0/checkpoint.json") == before_cp);
    CHECK(slurp(out / "fold_0/repeat_1/thresholds.json") == before_th);
    // The test data did change, so the evaluation is allowed to move.
    CHECK(slurp(out / "reports/eval_id.csv") != before_eval);
}
