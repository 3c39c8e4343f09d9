#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "xsec/section.hpp"

namespace xsec::cli {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Command { estimate, oracle, scan, counterexample, mixed_disc, density_check };
enum class OutputFormat { json, csv };

struct RunConfig {
    Command command = Command::estimate;
    std::optional<std::string> subspace_path;
    std::optional<std::string> matrices_path;
    std::vector<double> a;   // --a, positive scales
    std::vector<double> t;   // --t, log scales (exclusive with --a)
    std::vector<double> xs;  // density-check evaluation points
    std::string mode = "codim";
    std::uint64_t samples = 1'000'000;
    int batches = 40;
    std::uint64_t seed = 42;
    bool median_of_means = false;
    double box = 2.0;
    int triples = 100;
    std::string grid = "-5:5:21";
    int points = 2000;
    OutputFormat format = OutputFormat::json;
    std::optional<std::string> output_path;
};

/// Parses argv (without the program name). Throws UsageError on unknown
/// flags, missing required parameters, or malformed values.
RunConfig parse_args(const std::vector<std::string>& args);

/// Executes a validated RunConfig; writes results to output_path or stdout.
/// Returns 0 on success. Module errors surface as exceptions that main()
/// maps to distinct exit codes.
int run(const RunConfig& cfg);

/// Full entry point: parse, run, map errors to exit codes
/// (2 usage, 3 input file, 4 domain/math, 1 internal).
int main(int argc, const char* const* argv);

/// Loads the structured-text subspace file: {"n": int, "given_as":
/// "H"|"complement", "rows": [[...], ...]}.
SubspaceSpec load_subspace(const std::string& path);

}  // namespace xsec::cli
