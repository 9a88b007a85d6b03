#pragma once

#include "smfg/config.hpp"

#include <iosfwd>

namespace smfg {

/// Exit codes shared by the CLI and the command layer.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;        // a verification or tolerance check failed
inline constexpr int kExitConfig = 2;      // invalid configuration
inline constexpr int kExitMonotone = 3;    // monotone learning violated its order
inline constexpr int kExitUnconverged = 4; // max_iter exhausted, partial outputs written

/// Learn from below and above, write flows, traces, value/policy dumps and a
/// summary under out_dir.
int cmd_solve(const RunConfig& config, const std::filesystem::path& out_dir,
              std::ostream& log);

/// Submodularity check, best-response monotonicity probe, lattice laws and the
/// DP-vs-brute-force oracle on an embedded tiny instance.
int cmd_verify(const RunConfig& config, std::ostream& report);

/// Riccati oracle comparison across the configured refinement levels.
int cmd_lq_check(const RunConfig& config, const std::filesystem::path& out_dir,
                 std::ostream& report);

/// Common-noise learning from both extremes, order and tower checks, optional
/// continuity comparison against the plain game.
int cmd_common_noise(const RunConfig& config, const std::filesystem::path& out_dir,
                     std::ostream& report);

/// Grid-refinement study over the configured levels.
int cmd_sweep(const RunConfig& config, const std::filesystem::path& out_dir,
              std::ostream& report);

} // namespace smfg
