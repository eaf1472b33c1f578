#include "hioscar/common.hpp"
#include "hioscar/features.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace hioscar;

namespace {

Window window_of(std::vector<std::vector<double>> data, std::int64_t id = 0) {
    Window w;
    w.data = std::move(data);
    w.window_id = id;
    w.label = "a";
    w.subject_id = "s";
    return w;
}

std::vector<double> random_channel(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal() * 2.0 + rng.uniform(-1, 1) * rng.uniform();
    return v;
}

// Plain two-pass statistics, written independently of the library.
std::vector<double> oracle_stats(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    double mean = 0;
    for (double v : x) mean += v;
    mean /= n;
    double m2 = 0, m3 = 0, m4 = 0, abs_dev = 0;
    for (double v : x) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        abs_dev += std::fabs(d);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    auto sorted = x;
    std::sort(sorted.begin(), sorted.end());
    auto median = [](std::vector<double> s) {
        std::sort(s.begin(), s.end());
        const std::size_t h = s.size() / 2;
        return s.size() % 2 ? s[h] : 0.5 * (s[h - 1] + s[h]);
    };
    const double med = median(x);
    std::vector<double> dev;
    for (double v : x) dev.push_back(std::fabs(v - med));
    const double skew = m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
    const double kurt = m2 > 0 ? m4 / (m2 * m2) - 3.0 : 0.0;
    return {mean, std::sqrt(m2), sorted.back() - sorted.front(), median(dev), kurt, skew, abs_dev / n};
}

}  // namespace

TEST_CASE("constant channel statistics") {
    const auto f = handcrafted_features(window_of({std::vector<double>(9, 3.0)}));
    REQUIRE(f.values.size() == 7);
    CHECK(f.values[0] == 3.0);
    for (std::size_t i = 1; i < 7; ++i) CHECK(f.values[i] == 0.0);
}

TEST_CASE("small channel closed form") {
    const auto f = handcrafted_features(window_of({{1, 2, 3, 4}}), {"acc"});
    CHECK(f.values[0] == 2.5);
    CHECK(f.values[1] == doctest::Approx(1.1180339887));
    CHECK(f.values[2] == 3.0);
    CHECK(f.values[3] == 1.0);
    CHECK(f.values[5] == doctest::Approx(0.0));
    CHECK(f.values[6] == 1.0);
    CHECK(f.feature_names.front() == "acc_mean");
    CHECK_THROWS_AS(handcrafted_features(window_of({{1.0}})), ArgumentError);
}

TEST_CASE("handcrafted statistics agree with a two-pass oracle") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<std::size_t>(2 + rng.below(300));
        const auto channel = random_channel(n, rng);
        const auto got = handcrafted_features(window_of({channel})).values;
        const auto expected = oracle_stats(channel);
        for (std::size_t i = 0; i < 7; ++i) {
            CAPTURE(i);
            CHECK(std::abs(got[i] - expected[i]) <= 1e-9 * (1.0 + std::abs(expected[i])));
        }
    }
}

TEST_CASE("channel permutation permutes feature blocks") {
    Rng rng(5);
    const auto a = random_channel(50, rng);
    const auto b = random_channel(50, rng);
    const auto c = random_channel(50, rng);
    for (int use_ecdf = 0; use_ecdf < 2; ++use_ecdf) {
        auto extract = [&](const Window& w) {
            return use_ecdf ? ecdf_features(w, 15).values : handcrafted_features(w).values;
        };
        const auto fwd = extract(window_of({a, b, c}));
        const auto rev = extract(window_of({c, a, b}));
        const std::size_t block = fwd.size() / 3;
        for (std::size_t i = 0; i < block; ++i) {
            CHECK(fwd[i] == rev[block + i]);
            CHECK(fwd[block + i] == rev[2 * block + i]);
            CHECK(fwd[2 * block + i] == rev[i]);
        }
    }
}

TEST_CASE("positive scaling") {
    Rng rng(6);
    for (int trial = 0; trial < 30; ++trial) {
        const auto x = random_channel(40, rng);
        const double s = rng.uniform(0.1, 10.0);
        auto scaled = x;
        for (auto& v : scaled) v *= s;
        const auto f = handcrafted_features(window_of({x})).values;
        const auto g = handcrafted_features(window_of({scaled})).values;
        for (std::size_t i : {0u, 1u, 2u, 3u, 6u}) CHECK(g[i] == doctest::Approx(s * f[i]).epsilon(1e-9));
        CHECK(g[4] == doctest::Approx(f[4]).epsilon(1e-9));
        CHECK(g[5] == doctest::Approx(f[5]).epsilon(1e-9));
    }
}

TEST_CASE("ecdf reads") {
    std::vector<double> ramp(100);
    std::iota(ramp.begin(), ramp.end(), 0.0);
    const auto f = ecdf_features(window_of({ramp}), 10);
    REQUIRE(f.values.size() == 11);
    for (std::size_t i = 0; i < 10; ++i) CHECK(f.values[i] == static_cast<double>(10 * i + 5));
    CHECK(f.values[10] == 49.5);

    const auto flat = ecdf_features(window_of({std::vector<double>(20, 2.0)}), 15);
    for (double v : flat.values) CHECK(v == 2.0);

    CHECK_THROWS_AS(ecdf_features(window_of({{1.0, 2.0}}), 3), ArgumentError);
}

TEST_CASE("ecdf reads are non-decreasing and come from the sorted sample") {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n_points = static_cast<std::size_t>(1 + rng.below(20));
        const auto len = n_points + static_cast<std::size_t>(rng.below(200));
        const auto x = random_channel(len, rng);
        auto sorted = x;
        std::sort(sorted.begin(), sorted.end());
        const auto f = ecdf_features(window_of({x}), n_points).values;
        for (std::size_t i = 0; i < n_points; ++i) {
            if (i > 0) CHECK(f[i] >= f[i - 1]);
            CHECK(std::binary_search(sorted.begin(), sorted.end(), f[i]));
        }
    }
}

TEST_CASE("embedding import") {
    std::vector<Window> windows;
    for (int i = 0; i < 3; ++i) windows.push_back(window_of({{0.0, 1.0}}, 10 + i));

    std::string text;
    for (int i = 2; i >= 0; --i) {
        text += std::to_string(10 + i);
        for (int f = 0; f < 1024; ++f) text += "," + format_double(i + f * 0.001);
        text += "\n";
    }
    const auto feats = parse_embeddings(text, windows);
    REQUIRE(feats.size() == 3);
    CHECK(feats[0].window_id == 10);
    CHECK(feats[0].values.size() == 1024);
    CHECK(feats[2].values[1] == 2.001);

    try {
        parse_embeddings("10,1,2\n12,1,2\n", windows);
        FAIL("expected a missing-id error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("11") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_embeddings("10,1\n10,2\n11,1\n12,1\n", windows), FormatError);
    CHECK_THROWS_AS(parse_embeddings("10,1\n11,2,3\n12,1\n", windows), FormatError);
}

TEST_CASE("feature export round trip") {
    std::vector<Window> windows;
    Rng rng(1);
    for (int i = 0; i < 5; ++i) windows.push_back(window_of({random_channel(30, rng), random_channel(30, rng)}, i));
    const auto feats = extract_features(windows, FeatureConfig{});
    const auto back = parse_embeddings(format_features(feats), windows);
    for (std::size_t i = 0; i < feats.size(); ++i) CHECK(back[i].values == feats[i].values);

    const auto path = std::filesystem::temp_directory_path() / "hioscar_features.csv";
    export_features(path, feats);
    FeatureConfig external;
    external.kind = FeatureKind::external;
    external.external_path = path;
    const auto imported = extract_features(windows, external);
    CHECK(imported[4].values == feats[4].values);
    std::filesystem::remove(path);
}

TEST_CASE("feature config") {
    CHECK(feature_kind_from_string("ecdf") == FeatureKind::ecdf);
    CHECK_THROWS_AS(feature_kind_from_string("resnet"), ConfigError);
    FeatureConfig cfg;
    cfg.kind = FeatureKind::external;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.kind = FeatureKind::ecdf;
    cfg.ecdf_points = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("feature scaler") {
    std::vector<FeatureVector> feats(3);
    feats[0].values = {1, 5};
    feats[1].values = {2, 5};
    feats[2].values = {3, 5};
    const auto scaler = FeatureScaler::fit(feats);
    auto copy = feats;
    scaler.apply(copy);
    CHECK(copy[0].values[0] == doctest::Approx(-std::sqrt(1.5)));
    CHECK(copy[1].values[0] == 0.0);
    CHECK(copy[2].values[1] == 0.0);
    const auto restored = FeatureScaler::from_moments(scaler.mean(), scaler.scale());
    auto again = feats;
    restored.apply(again);
    CHECK(again[0].values == copy[0].values);
}
