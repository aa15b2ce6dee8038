// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace kgqa {

/// Exit codes: 0 success, 1 runtime/config/file failure, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace kgqa
