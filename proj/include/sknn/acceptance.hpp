#pragma once

#include <iosfwd>

namespace sknn {

// Runs the full acceptance suite, printing one PASS/FAIL line per criterion.
// Returns the number of failed criteria.
int run_acceptance(std::ostream& os);

}  // namespace sknn
