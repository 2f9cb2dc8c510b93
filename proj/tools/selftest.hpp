#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sepcov::cli {

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Closed-form oracle checks. `tw1_table` replaces the embedded table in the
/// asset check.
std::vector<SelftestCheck> run_selftest(const std::optional<std::filesystem::path>& tw1_table);

}  // namespace sepcov::cli
