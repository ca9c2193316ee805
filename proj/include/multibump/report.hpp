#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace multibump {

// Bad run configuration: unknown mode, malformed parameter list, and similar
// problems that occur before any computation starts. The CLI maps this to
// exit code 2, while errors thrown by the solver modules map to exit code 1
// with the error name recorded in the report.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

// One experiment invocation. Defaults are chosen so every mode finishes in
// seconds; heavier grids are opt-in.
struct RunConfig {
    std::string mode;
    std::string system = "two";      // "two" | "three"
    double epsilon = 0.05;
    std::vector<double> epsilons;    // verify-scaling ladder, strictly decreasing
    int ell = 2;
    double mu = 1.0;
    double r_max = 25.0;
    std::size_t radial_n = 5000;
    int grid_n = 48;                 // box nodes per axis for assemble
    int landscape_n = 200;           // landscape sample count per axis
    std::filesystem::path output_dir = "out";
};

// Throws ConfigError on an invalid configuration. Parameter values that only
// a solver module can judge (coupling ranges, window bounds) are left to the
// modules so their error names reach the report.
void validate(const RunConfig& cfg);

// Executes one mode: writes report.json, a meta.json sidecar (the only place
// timestamps appear), and mode-specific artifacts under output_dir/<mode>/.
// Returns 0 on success, 1 when a solver module throws (the report then
// carries {"error": <name>, "message": ...}). ConfigError propagates.
int run(const RunConfig& cfg);

// Stable name of a solver error for reports ("OutOfRange", "BadMu", ...).
std::string error_name(const std::exception& e);

}  // namespace multibump
