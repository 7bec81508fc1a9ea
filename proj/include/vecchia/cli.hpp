#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vecchia::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitData = 3,
  kExitNumerical = 4,
  kExitIo = 5,
};

// Runs the `vecchia` command line. Diagnostics go to `err` as a single line
// "vecchia: error[<Code>]: <message>".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int main(int argc, char** argv);

}  // namespace vecchia::cli
