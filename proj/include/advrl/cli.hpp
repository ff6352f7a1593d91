#pragma once

#include <optional>
#include <string>
#include <vector>

#include "advrl/attacks.hpp"
#include "advrl/pgn.hpp"

namespace advrl {

/// Exit codes: 0 success, 1 usage, 2 runtime failure, 3 verification failure.
int cli_main(int argc, const char* const* argv);

/// One bundled row of published per-game attack results (reward/ACR/PSNR
/// inputs plus the expected composite index where the source reports one).
struct PaperRow {
  std::string game;
  std::string method;
  double normal_reward = 0.0;
  double attacked_reward = 0.0;
  double acr = 0.0;  // fraction in [0,1]
  double psnr = 0.0;
  double min_return = 0.0;
  std::optional<double> ar_expected;
};

std::vector<PaperRow> load_paper_table(const std::string& path);

struct ArCheck {
  PaperRow row;
  double computed_ar = 0.0;
  bool pass = false;
};

/// Recomputes AR for every row carrying an expected value.
std::vector<ArCheck> verify_ar_cells(const std::vector<PaperRow>& rows,
                                     double tolerance);

struct MethodSpec {
  AttackKind kind = AttackKind::None;
  std::optional<PgnVariant> variant;
  std::optional<PgnObjective> objective;
};

/// none|fgsm|pgd|cw|t-pgna|t-pgng|u-pgna|u-pgng
MethodSpec parse_method(const std::string& name);

}  // namespace advrl
