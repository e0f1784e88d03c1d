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

#ifndef BWE_RUN_CONFIG_H_
#define BWE_RUN_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bwe {

// Flat key=value settings for one command. The text form starts with a
// version line; '#' starts a comment. Keys are the command's long option
// names, so a written file can be fed back with --config.
class RunConfig {
 public:
  static constexpr int kVersion = 1;

  void Set(const std::string& key, const std::string& value) { entries_[key] = value; }
  bool Has(const std::string& key) const { return entries_.count(key) > 0; }
  // Throws std::invalid_argument when the key is missing or malformed.
  const std::string& Get(const std::string& key) const;
  int GetInt(const std::string& key) const;
  std::uint64_t GetU64(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  bool GetBool(const std::string& key) const;
  // Comma-separated list; empty entries dropped.
  std::vector<std::string> GetList(const std::string& key) const;

  // Entries of `over` replace ours.
  void Merge(const RunConfig& over);

  std::string ToText() const;
  // Throws DataError on a missing or unknown version or a malformed line.
  static RunConfig FromText(const std::string& text);
  static RunConfig Load(const std::string& path);
  void Save(const std::string& path) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace bwe

#endif  // BWE_RUN_CONFIG_H_
