#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "adforge/real.h"

ADFORGE_NAMESPACE_BEGIN

// Runs the adforge command line. `args` includes the program name. Returns 0
// on success, 1 on a module error and 2 on a usage error.
int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

// 131072 → "131,072".
std::string WithThousands(int64_t value);

ADFORGE_NAMESPACE_END
