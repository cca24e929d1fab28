// tools/run_config.cc

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

#include "run_config.h"

#include <fstream>
#include <sstream>

#include "tsadapt/common.h"

namespace tsadapt {
namespace cli {

void RunConfig::Add(const std::string &name, const std::string &value) {
  flags.emplace_back(name, value);
}

void RunConfig::AddSwitch(const std::string &name, bool on) {
  if (on) flags.emplace_back(name, "");
}

std::vector<std::string> RunConfig::ToArgs() const {
  std::vector<std::string> args = {command};
  for (const auto &[name, value] : flags) {
    args.push_back("--" + name);
    if (!value.empty()) args.push_back(value);
  }
  return args;
}

std::string ShellQuote(const std::string &arg) {
  bool plain = !arg.empty();
  for (char c : arg) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') ||
                    std::string("_./:=,+-").find(c) != std::string::npos;
    if (!ok) plain = false;
  }
  if (plain) return arg;
  std::string out = "'";
  for (char c : arg) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

std::string RunConfig::ToCommandLine() const {
  std::string out = "tsadapt";
  for (const std::string &a : ToArgs()) out += " " + ShellQuote(a);
  return out;
}

std::string RunConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  nlohmann::ordered_json f = nlohmann::ordered_json::array();
  for (const auto &[name, value] : flags) f.push_back({name, value});
  j["flags"] = f;
  j["command_line"] = ToCommandLine();
  j["resolved"] = resolved;
  return j.dump(2) + "\n";
}

RunConfig RunConfig::FromJson(const std::string &text) {
  RunConfig rc;
  try {
    const nlohmann::ordered_json j = nlohmann::ordered_json::parse(text);
    rc.command = j.at("command").get<std::string>();
    for (const auto &pair : j.at("flags"))
      rc.flags.emplace_back(pair.at(0).get<std::string>(),
                            pair.at(1).get<std::string>());
    if (j.contains("resolved")) rc.resolved = j.at("resolved");
  } catch (const nlohmann::json::exception &e) {
    throw Error(Msg() << "run config is malformed: " << e.what());
  }
  TSADAPT_CHECK(!rc.command.empty(), "run config has an empty command");
  return rc;
}

void RunConfig::Write(const std::string &path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  TSADAPT_CHECK(out.good(), "cannot open " << path << " for writing");
  out << ToJson();
  TSADAPT_CHECK(out.good(), "failed writing " << path);
}

RunConfig RunConfig::Read(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  TSADAPT_CHECK(in.good(), "cannot open run config " << path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return FromJson(ss.str());
}

bool RunConfig::operator==(const RunConfig &other) const {
  return command == other.command && flags == other.flags &&
         resolved == other.resolved;
}

}  // namespace cli
}  // namespace tsadapt
