// tools/run_config.h

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

// Resolved invocation of one subcommand: every flag with its effective
// value, plus the resolved configuration objects it expanded to.  Written
// next to each command's outputs as JSON.

#ifndef TSADAPT_TOOLS_RUN_CONFIG_H_
#define TSADAPT_TOOLS_RUN_CONFIG_H_

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace tsadapt {
namespace cli {

struct RunConfig {
  std::string command;
  // Flag names without leading dashes; an empty value marks a switch.
  std::vector<std::pair<std::string, std::string>> flags;
  nlohmann::ordered_json resolved = nlohmann::ordered_json::object();

  void Add(const std::string &name, const std::string &value);
  void AddSwitch(const std::string &name, bool on);

  /// Arguments after the program name: command, then --flag value pairs.
  std::vector<std::string> ToArgs() const;
  /// Shell-quoted "tsadapt <args>".
  std::string ToCommandLine() const;

  std::string ToJson() const;
  static RunConfig FromJson(const std::string &text);
  void Write(const std::string &path) const;
  static RunConfig Read(const std::string &path);

  bool operator==(const RunConfig &other) const;
};

/// Single-quotes `arg` when it contains anything beyond [A-Za-z0-9_./:=,+-].
std::string ShellQuote(const std::string &arg);

}  // namespace cli
}  // namespace tsadapt

#endif  // TSADAPT_TOOLS_RUN_CONFIG_H_
