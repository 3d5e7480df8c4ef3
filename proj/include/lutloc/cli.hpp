#pragma once

#include <string>
#include <vector>

namespace lutloc {

/// Runs one CLI invocation. Exit status: 0 on success, 1 on a usage error,
/// 2 on a data error (unreadable/inconsistent inputs).
int cli_dispatch(const std::vector<std::string>& args);

}  // namespace lutloc
