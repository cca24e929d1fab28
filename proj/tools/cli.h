// tools/cli.h

// Copyright 2026  The tsadapt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// The tsadapt command line: synth, noise, pair, train, eval, paper-suite,
// defaults and rerun.

#ifndef TSADAPT_TOOLS_CLI_H_
#define TSADAPT_TOOLS_CLI_H_

#include <string>
#include <vector>

namespace tsadapt {
namespace cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default output root.
inline constexpr const char *kOutRootEnv = "TSADAPT_OUT_ROOT";

/// Parses and runs one command; `args` excludes the program name.
int Run(const std::vector<std::string> &args);

}  // namespace cli
}  // namespace tsadapt

#endif  // TSADAPT_TOOLS_CLI_H_
