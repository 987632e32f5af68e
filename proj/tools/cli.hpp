#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace layerpeel::cli {

enum ExitCode : int {
    kSuccess = 0,
    kInternalError = 1,
    kConfigError = 2,
    kBackendError = 3,
    kNotBlank = 4,
};

/// Invalid flags, config values or inputs.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    int resolution = 512;
    int rho = 20;
    int max_iterations = 50;
    double epsilon = 1.0;
    std::string backend = "oracle"; // oracle | remote
    std::string annotator_url;
    std::string remover_url;
    std::string embed_url;
    int timeout_ms = 120000;
    int max_retries = 3;
    std::uint64_t seed = 0;
    int jobs = 1;
    bool force = false;
};

/// Throws ConfigError. `needs_remote` also demands both model endpoints in
/// remote mode.
void validate(const RunConfig& config, bool needs_remote);

/// `args` excludes the program name. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace layerpeel::cli
