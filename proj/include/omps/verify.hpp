#pragma once

#include <iosfwd>

namespace omps {

/// Runs every module's invariant suite, printing one line per check.
/// Returns the number of failed checks (0 on full pass).
int run_verification(std::ostream& os);

}  // namespace omps
