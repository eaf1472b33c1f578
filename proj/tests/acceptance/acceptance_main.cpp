// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include "hioscar/common.hpp"
#include "hioscar/eval.hpp"
#include "hioscar/hierarchy.hpp"
#include "hioscar/inference.hpp"
#include "hioscar/model.hpp"
#include "hioscar/pipeline.hpp"
#include "support/finite_difference.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

using namespace hioscar;
using namespace hioscar::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::vector<std::size_t> iota_n(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

// ---------------------------------------------------------------------------

Outcome gradient_check() {
    const auto start = Clock::now();
    Rng rng(20240601);
    double worst = 0.0;
    for (int instance = 0; instance < 50; ++instance) {
        const std::size_t k = 2 + rng.below(5);
        const auto h = random_tree(k, rng);
        LabelledFeatures data;
        for (std::size_t i = 0; i < 6; ++i) {
            data.x.push_back({rng.normal(), rng.normal(), rng.normal(), rng.normal()});
            data.y.push_back(static_cast<NodeId>(i < k ? i : rng.below(k)));
        }
        const auto params = HeadParameters::initialize(4, {5}, h.size(), 0.2, HeadMode::hierarchical, rng.next());
        const auto weights = ClassWeights::inverse_frequency(data.y, k);
        worst = std::max(worst, max_gradient_error(params, data, iota_n(data.size()), weights, h, 1e-5));
    }
    const double elapsed = seconds_since(start);
    return {worst < 1e-4 && elapsed < 10.0,
            "max relative error " + num(worst) + " over 50 instances, " + num(elapsed) + " s"};
}

Outcome path_normalization() {
    Rng rng(7);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto h = random_tree(2 + rng.below(15), rng);
        std::vector<double> z(h.size());
        for (auto& v : z) v = rng.normal() * std::pow(10.0, rng.uniform(-1.0, 2.0));
        const auto p = pairwise_softmax(z, h);
        double sum = 0.0;
        for (NodeId leaf = 0; leaf < static_cast<NodeId>(h.leaf_count()); ++leaf) sum += path_likelihood(p, h, leaf);
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return {worst <= 1e-9, "max |sum - 1| = " + num(worst) + " over 1000 assignments"};
}

Outcome hac_oracle() {
    Rng rng(3);
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + rng.below(7);
        const std::size_t f = 2 + rng.below(6);
        std::vector<ClassCentroid> cents;
        for (std::size_t i = 0; i < k; ++i) {
            std::vector<double> v(f);
            for (auto& x : v) x = rng.normal();
            cents.push_back({class_label(i), v, 1});
        }
        rng.shuffle(cents);
        const auto got = merge_sequence(hac_build(cents));
        const auto expected = greedy_hac(cents);
        bool same = got.size() == expected.size();
        for (std::size_t i = 0; same && i < got.size(); ++i) {
            same = got[i].left == expected[i].left && got[i].right == expected[i].right &&
                   std::abs(got[i].distance - expected[i].distance) <= 1e-12;
        }
        mismatches += same ? 0 : 1;
    }
    return {mismatches == 0, std::to_string(mismatches) + " of 100 merge sequences differ from the oracle"};
}

Outcome auroc_oracle() {
    Rng rng(5);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(199);
        const std::size_t n_ood = 1 + rng.below(n - 1);
        std::vector<double> id, ood;
        const bool ties = trial % 3 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = ties ? std::floor(rng.uniform(0.0, 8.0)) : rng.normal();
            (i < n_ood ? ood : id).push_back(i < n_ood ? s + 0.7 : s);
        }
        worst = std::max(worst, std::abs(auroc(id, ood) - pair_count_auroc(id, ood)));
    }
    std::vector<double> id(50), ood(50);
    for (std::size_t i = 0; i < 50; ++i) {
        id[i] = rng.uniform(0.0, 1.0);
        ood[i] = rng.uniform(2.0, 3.0);
    }
    const double de = detection_error(id, ood);
    return {worst <= 1e-12 && std::abs(de - 0.025) <= 1e-12,
            "max |rank - pairs| = " + num(worst) + ", separated detection error " + num(de)};
}

// Six Gaussian classes in 16 dimensions, 400 windows each, split 3:1.
struct Benchmark {
    std::vector<std::vector<double>> train_x, test_x, ood_x;
    std::vector<std::string> train_y, test_y, ood_y;
    Hierarchy h;
    LabelledFeatures train_set;
};

Benchmark gaussian_benchmark() {
    const std::vector<std::string> names{"a", "b", "c", "d", "e", "held_out"};
    const double sigma = 1.0;
    const double scale = 5.0;  // mean separation scale * sqrt(2) ~ 7.1 sigma
    auto means = orthogonal_means(6, 16, scale);
    Rng rng(2024);
    const auto data = gaussian_clusters(means, names, 400, sigma, rng);
    Benchmark b;
    for (std::size_t i = 0; i < data.x.size(); ++i) {
        const bool test = i % 4 == 3;
        if (data.y[i] == "held_out") {
            if (test) {
                b.ood_x.push_back(data.x[i]);
                b.ood_y.push_back(data.y[i]);
            }
        } else if (test) {
            b.test_x.push_back(data.x[i]);
            b.test_y.push_back(data.y[i]);
        } else {
            b.train_x.push_back(data.x[i]);
            b.train_y.push_back(data.y[i]);
        }
    }
    b.h = hac_build(class_centroids(std::span<const std::vector<double>>(b.train_x), b.train_y));
    b.train_set.x = b.train_x;
    for (const auto& y : b.train_y) b.train_set.y.push_back(b.h.leaf_of(y));
    return b;
}

TrainConfig benchmark_config() {
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.seed = 11;
    return cfg;
}

struct EndToEnd {
    OodReport report;
    HeadParameters params;
    double seconds = 0.0;
};

EndToEnd run_benchmark(const Benchmark& b, HeadMode mode) {
    const auto start = Clock::now();
    const auto result = train(b.train_set, b.h, benchmark_config(), mode);
    EndToEnd out;
    out.params = result.params;
    out.report = ood_set_evaluate(result.params, b.h, b.test_x, b.test_y, b.ood_x, b.ood_y);
    out.seconds = seconds_since(start);
    return out;
}

Outcome entropy_and_stopping(const Benchmark& b, const HeadParameters& params) {
    const auto record = record_entropies(b.train_x, params, b.h);
    auto grid = default_lambda_grid();
    std::reverse(grid.begin(), grid.end());
    std::vector<ThresholdTable> tables;
    for (double lambda : grid) tables.push_back(thresholds_at(record, lambda));

    std::size_t bound_violations = 0;
    std::size_t monotone_violations = 0;
    std::vector<std::vector<double>> samples = b.test_x;
    samples.insert(samples.end(), b.ood_x.begin(), b.ood_x.end());
    for (const auto& x : samples) {
        const auto p = pairwise_softmax(forward(params, x), b.h);
        for (NodeId n : b.h.internal_nodes()) {
            const double e = decision_entropy(p, b.h, n);
            if (!(e >= 0.0 && e <= std::log(2.0))) ++bound_violations;
        }
        int previous = 1 << 20;
        for (const auto& table : tables) {
            const int depth = open_set_from_probabilities(p, b.h, table).stopped_at_depth;
            if (depth > previous) ++monotone_violations;
            previous = depth;
        }
    }
    return {bound_violations == 0 && monotone_violations == 0,
            std::to_string(samples.size()) + " samples x 21 lambdas: " + std::to_string(bound_violations) +
                " entropy bound violations, " + std::to_string(monotone_violations) + " depth increases"};
}

// The OOD class sits midway between ID classes a and b; c and d form a pair on
// the far side, so the root split stays confident for OOD windows.
Outcome localization_u_shape() {
    const std::size_t f = 8;
    auto axis = [&](std::initializer_list<std::pair<std::size_t, double>> parts) {
        std::vector<double> v(f, 0.0);
        for (auto [i, x] : parts) v[i] = x;
        return v;
    };
    const std::vector<std::vector<double>> means{
        axis({{0, 4.0}, {4, 1.0}}),              // a
        axis({{1, 4.0}, {4, 1.0}}),              // b
        axis({{0, -2.0}, {1, -2.0}, {2, 4.0}}),  // c
        axis({{0, -2.0}, {1, -2.0}, {3, 4.0}}),  // d
        axis({{0, 3.0}, {1, 3.0}, {4, 1.0}}),    // ood, between a and b
    };
    const std::vector<std::string> names{"a", "b", "c", "d", "ood"};
    Rng rng(8);
    const auto data = gaussian_clusters(means, names, 300, 1.0, rng);
    std::vector<std::vector<double>> id_x, ood_x;
    std::vector<std::string> id_y, ood_y;
    for (std::size_t i = 0; i < data.x.size(); ++i) {
        if (data.y[i] == "ood") {
            ood_x.push_back(data.x[i]);
            ood_y.push_back(data.y[i]);
        } else {
            id_x.push_back(data.x[i]);
            id_y.push_back(data.y[i]);
        }
    }
    const auto deployment = hac_build(class_centroids(std::span<const std::vector<double>>(id_x), id_y));
    const auto reference = hac_build(class_centroids(std::span<const std::vector<double>>(data.x), data.y));
    LabelledFeatures train_set;
    train_set.x = id_x;
    for (const auto& y : id_y) train_set.y.push_back(deployment.leaf_of(y));
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.hidden_sizes = {64};
    cfg.seed = 4;
    const auto params = train(train_set, deployment, cfg).params;
    const auto record = record_entropies(id_x, params, deployment);
    const auto report =
        localization_sweep(ood_x, ood_y, params, deployment, record, reference, default_lambda_grid());

    const auto& pts = report.per_lambda;
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].mean_distance < pts[best].mean_distance) best = i;
    }
    const bool interior = pts[best].mean_distance < pts.front().mean_distance &&
                          pts[best].mean_distance < pts.back().mean_distance;
    return {interior, "distance at lambda 0 / " + num(pts[best].lambda_hat) + " / 1: " +
                          num(pts.front().mean_distance) + " / " + num(pts[best].mean_distance) + " / " +
                          num(pts.back().mean_distance)};
}

Outcome flat_ablation(const Benchmark& b, const EndToEnd& hierarchical) {
    const auto flat = run_benchmark(b, HeadMode::flat);
    const auto weights = ClassWeights::inverse_frequency(b.train_set.y, b.h.leaf_count());
    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < b.train_set.size(); ++i) {
        const auto z = forward(flat.params, b.train_set.x[i]);
        const NodeId y = b.train_set.y[i];
        // Whatever the flat objective adds beyond weighted cross-entropy is its off-path term.
        const double off_path = sample_loss(z, y, weights, b.h, HeadMode::flat) - flat_loss(flat_softmax(z), y, weights);
        if (off_path != 0.0) ++nonzero;
    }
    const double gap = std::abs(flat.report.id_macro_f1 - hierarchical.report.id_macro_f1);
    return {nonzero == 0 && gap <= 0.05,
            "off-path loss nonzero on " + std::to_string(nonzero) + " samples; macro-F1 flat " +
                num(flat.report.id_macro_f1) + " vs hierarchical " + num(hierarchical.report.id_macro_f1)};
}

// --- full pipeline runs ---------------------------------------------------

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

RunConfig pipeline_config(const fs::path& root, const std::string& output) {
    RunConfig cfg;
    cfg.data = root / "data.csv";
    cfg.schema = root / "schema.txt";
    cfg.window_seconds = 4.0;
    cfg.target_hz = 10.0;
    cfg.repeats = 2;
    cfg.ood_classes = {"drag"};
    cfg.train.learning_rate = 1e-2;
    cfg.train.max_epochs = 20;
    cfg.train.hidden_sizes = {16};
    cfg.output = root / output;
    cfg.seed = 5;
    return cfg;
}

void run_pipeline(const RunConfig& cfg) {
    Pipeline p(cfg);
    p.run_through_train();
    p.eval_id();
    p.eval_ood();
    p.localize();
}

Outcome determinism_and_leakage() {
    unsetenv(kOutputRootEnv);
    const fs::path root = fs::temp_directory_path() / "hioscar_acceptance_pipeline";
    fs::remove_all(root);
    const std::vector<std::string> activities{"cycle", "drag", "sit", "walk"};
    spit(root / "data.csv", activity_csv(4, activities, 30.0, 20.0, 9));
    spit(root / "schema.txt", "subject = subject\nlabel = activity\ntimestamp = time\nchannels = acc_x, acc_y, acc_z\n");

    std::ostringstream sink;
    auto* old_buf = std::cout.rdbuf(sink.rdbuf());  // keep stage chatter out of the verdict lines

    const auto first = pipeline_config(root, "run_a");
    const auto second = pipeline_config(root, "run_b");
    run_pipeline(first);
    run_pipeline(second);
    std::size_t differing_reports = 0;
    const std::vector<std::string> reports{"eval_id.json", "eval_id.csv",   "eval_ood.json",
                                           "eval_ood.csv", "localize.json", "localize.csv"};
    for (const auto& r : reports) {
        if (slurp(first.output / "reports" / r) != slurp(second.output / "reports" / r)) ++differing_reports;
    }

    // Perturb the fold-0 test subjects and rerun into the first directory.
    const auto plan = nlohmann::json::parse(slurp(first.output / "folds.json"));
    const auto test_subjects = plan["folds"][0]["test_subjects"].get<std::vector<std::string>>();
    std::vector<std::string> before;
    const std::vector<std::string> guarded{"fold_0/hierarchy.json", "fold_0/repeat_0/checkpoint.json",
                                           "fold_0/repeat_1/checkpoint.json", "fold_0/repeat_0/thresholds.json",
                                           "fold_0/repeat_1/thresholds.json"};
    for (const auto& g : guarded) before.push_back(slurp(first.output / g));
    std::istringstream in(slurp(root / "data.csv"));
    std::string line;
    std::string rewritten;
    std::getline(in, line);
    rewritten = line + "\n";
    Rng rng(1);
    while (std::getline(in, line)) {
        auto f = split(line, ',');
        if (std::find(test_subjects.begin(), test_subjects.end(), f[1]) != test_subjects.end()) {
            for (std::size_t c = 3; c < f.size(); ++c) f[c] = format_double(parse_double(f[c]) * 2.0 + rng.normal());
        }
        for (std::size_t c = 0; c < f.size(); ++c) rewritten += (c ? "," : "") + f[c];
        rewritten += "\n";
    }
    spit(root / "data.csv", rewritten);
    run_pipeline(first);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < guarded.size(); ++i) {
        if (slurp(first.output / guarded[i]) != before[i]) ++changed;
    }
    std::cout.rdbuf(old_buf);
    fs::remove_all(root);
    return {differing_reports == 0 && changed == 0,
            std::to_string(differing_reports) + " of " + std::to_string(reports.size()) +
                " reports differ between identical runs; " + std::to_string(changed) + " of " +
                std::to_string(guarded.size()) + " fold-0 training artifacts changed after perturbing test rows"};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const std::string& name, const std::function<Outcome()>& check) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << o.detail << std::endl;
        failures += o.pass ? 0 : 1;
    };

    report(1, "gradient-check", gradient_check);
    report(2, "path-normalization", path_normalization);
    report(3, "hac-oracle", hac_oracle);
    report(4, "auroc-oracle", auroc_oracle);

    const auto bench = gaussian_benchmark();
    EndToEnd hierarchical;
    bool trained = false;
    report(6, "synthetic-end-to-end", [&]() -> Outcome {
        hierarchical = run_benchmark(bench, HeadMode::hierarchical);
        trained = true;
        const auto& r = hierarchical.report;
        return {r.id_macro_f1 >= 0.95 && r.auroc >= 0.90 && hierarchical.seconds < 120.0,
                "macro-F1 " + num(r.id_macro_f1) + ", AUROC " + num(r.auroc) + ", detection error " +
                    num(r.detection_error) + ", " + num(hierarchical.seconds) + " s"};
    });
    report(5, "entropy-bounds-and-stopping", [&]() -> Outcome {
        if (!trained) return {false, "benchmark model unavailable"};
        return entropy_and_stopping(bench, hierarchical.params);
    });
    report(7, "localization-u-shape", localization_u_shape);
    report(8, "flat-ablation", [&]() -> Outcome {
        if (!trained) return {false, "benchmark model unavailable"};
        return flat_ablation(bench, hierarchical);
    });
    report(9, "determinism-and-leakage", determinism_and_leakage);

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
