#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include "chirpctl/config.hpp"

namespace chirpctl {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitConvergence = 3,
    kExitPartial = 4,
};

std::span<const std::string_view> figure_ids();

// Defaults a figure starts from before the config file and flags are layered on.
RunConfig figure_preset(std::string_view id);

// Runs an already-resolved configuration and returns an exit code.
int run_config(const RunConfig& config, std::ostream& out, std::ostream& err);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

std::string library_version();

}  // namespace chirpctl
