#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wsiroi {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

// Entry point behind the `wsiroi` executable. `args` excludes the program
// name. Returns 0 on success, 1 on usage or validation errors, 2 on I/O errors.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wsiroi
