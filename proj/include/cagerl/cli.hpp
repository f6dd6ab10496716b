#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cagerl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `cagerl` tool; returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Resolves a model argument: a run directory, a checkpoint directory or an
// actor checkpoint file.
std::filesystem::path resolve_actor_path(const std::filesystem::path& model);

}  // namespace cagerl::cli
