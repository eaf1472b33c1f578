#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hioscar {

// Error taxonomy. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Input data does not match the declared schema (missing column, bad schema file).
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A value could not be parsed; message carries file and row context.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Structurally invalid interchange file (hierarchy, embeddings, checkpoint).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Operation requested on an object that lacks the needed data, e.g. merge
/// distances on an imported hierarchy.
class CapabilityError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

// Warning sink. Defaults to stderr; tests swap it to capture messages.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

std::string trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char delimiter);

// Portable seeded randomness: std distributions are implementation-defined,
// so everything that must be reproducible goes through these helpers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace hioscar
