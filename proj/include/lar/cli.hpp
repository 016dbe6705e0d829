#pragma once

#include <iosfwd>

namespace lar {

// Exit codes: 0 ok, 1 unexpected failure, 2 usage or configuration error,
// 3 numerical or degeneracy error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lar
