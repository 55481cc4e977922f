#pragma once

#include <iosfwd>

namespace baitwatch::cli {

// Entry point of the `baitwatch` tool. Returns 0 on success, 1 on a runtime
// failure and 2 on a usage error; messages go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace baitwatch::cli
