#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "tamesde/config.hpp"

namespace tamesde {

// Flag-level overrides applied on top of the selected config/preset.
struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<long long> paths;
    std::optional<int> threads;
    std::optional<std::string> out;
};

// Exactly one of config_file/preset must be nonempty. The returned config is
// fully validated; no command starts work on an invalid one.
RunConfig load_cli_config(const std::string& config_file,
                          const std::string& preset, const CliOverrides& overrides);

// Exit codes: 0 ok, 2 numerical failure (overflow in a tamed mode, audit
// violations). Validation problems throw std::invalid_argument and the
// frontend maps them to exit 1.
int cmd_converge(const RunConfig& config);
int cmd_simulate(const RunConfig& config, long long n, std::uint64_t path_index,
                 bool zero_noise);
int cmd_moments(const RunConfig& config);
int cmd_audit(const RunConfig& config);

}  // namespace tamesde
