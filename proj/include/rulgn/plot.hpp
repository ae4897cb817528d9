#pragma once

#include "rulgn/trainer.hpp"

#include <string>
#include <vector>

namespace rulgn {

/// One SVG per experiment found in the report rows: true RUL, predictive
/// median and the shaded q05-q95 band over time. Returns the written paths.
std::vector<std::string> write_rul_svgs(const std::string& out_dir,
                                        const std::vector<AnchorRow>& rows);

}  // namespace rulgn
