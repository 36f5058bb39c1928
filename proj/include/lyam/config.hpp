#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lyam/harness.hpp"

namespace lyam {

/// Everything an experiment config file can describe.
///
/// The file is INI-style with sections [task], [optimizer], [noise], [grid],
/// [run] and [bench]; README.md lists every key. Overrides are
/// "section.key=value" strings applied after the file and take precedence.
/// Unknown sections or keys are rejected.
struct ExperimentConfig {
    RunConfig run;
    AblationGrid grid;
    std::vector<OptimizerKind> bench_optimizers;
    std::size_t violation_allowance = 0;
    bool log_scale_loss = true;
    /// Sorted "section.key=value" lines of the effective settings; hashed
    /// into the run manifest.
    std::string canonical;
};

/// Throws ConfigError on malformed input.
ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

/// 64-bit FNV-1a, printed as 16 hex digits in manifests.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

std::vector<double> parse_number_list(std::string_view text);

}  // namespace lyam
