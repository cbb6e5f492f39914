#ifndef MAQ_CLI_H_
#define MAQ_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace maq {
namespace cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInputError = 2;

// Runs one subcommand. `args` excludes the program name. Records go to `out`
// (or the --out file), diagnostics to `err`.
int Run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err);

}  // namespace cli
}  // namespace maq

#endif  // MAQ_CLI_H_
