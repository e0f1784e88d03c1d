// Copyright 2026 The bwe-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bwe/run_config.h"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bwe/common.h"

namespace bwe {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& v) {
  T out{};
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

}  // namespace

const std::string& RunConfig::Get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw std::invalid_argument("config: missing '" + key + "'");
  return it->second;
}

int RunConfig::GetInt(const std::string& key) const { return ParseNumber<int>(key, Get(key)); }

std::uint64_t RunConfig::GetU64(const std::string& key) const {
  return ParseNumber<std::uint64_t>(key, Get(key));
}

double RunConfig::GetDouble(const std::string& key) const {
  return ParseNumber<double>(key, Get(key));
}

bool RunConfig::GetBool(const std::string& key) const {
  const std::string& v = Get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::string> RunConfig::GetList(const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream in(Get(key));
  for (std::string item; std::getline(in, item, ',');) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void RunConfig::Merge(const RunConfig& over) {
  for (const auto& [k, v] : over.entries_) entries_[k] = v;
}

std::string RunConfig::ToText() const {
  std::ostringstream os;
  os << "# bwe-lab run config\nversion=" << kVersion << '\n';
  for (const auto& [k, v] : entries_) os << k << '=' << v << '\n';
  return os.str();
}

RunConfig RunConfig::FromText(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  bool versioned = false;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    line = Trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw DataError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = Trim(line.substr(0, eq)), value = Trim(line.substr(eq + 1));
    if (key == "version") {
      if (value != std::to_string(kVersion)) {
        throw DataError("config: unsupported version '" + value + "'");
      }
      versioned = true;
      continue;
    }
    c.entries_[key] = value;
  }
  if (!versioned) throw DataError("config: missing version line");
  return c;
}

RunConfig RunConfig::Load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return FromText(ss.str());
}

void RunConfig::Save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write config " + path);
  f << ToText();
}

}  // namespace bwe
