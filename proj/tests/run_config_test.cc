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

#include <catch_amalgamated.hpp>

#include <filesystem>

#include "bwe/common.h"
#include "bwe/run_config.h"

TEST_CASE("run config round-trips through text", "[config]") {
  bwe::RunConfig c;
  c.Set("steps", "2500");
  c.Set("lr", "0.001");
  c.Set("models", "null, sbr,,ddsp-mono");
  c.Set("force", "true");
  const auto back = bwe::RunConfig::FromText(c.ToText());
  CHECK(back.entries() == c.entries());
  CHECK(back.GetInt("steps") == 2500);
  CHECK(back.GetDouble("lr") == 0.001);
  CHECK(back.GetBool("force"));
  CHECK(back.GetList("models") == std::vector<std::string>{"null", "sbr", "ddsp-mono"});

  const auto path = (std::filesystem::temp_directory_path() / "bwe_run_config.cfg").string();
  c.Save(path);
  CHECK(bwe::RunConfig::Load(path).entries() == c.entries());
  std::filesystem::remove(path);
}

TEST_CASE("run config merge lets later entries win", "[config]") {
  bwe::RunConfig base, over;
  base.Set("a", "1");
  base.Set("b", "2");
  over.Set("b", "3");
  base.Merge(over);
  CHECK(base.Get("a") == "1");
  CHECK(base.Get("b") == "3");
}

TEST_CASE("run config rejects bad input", "[config]") {
  CHECK_THROWS_AS(bwe::RunConfig::FromText("steps=1\n"), bwe::DataError);
  CHECK_THROWS_AS(bwe::RunConfig::FromText("version=9\n"), bwe::DataError);
  CHECK_THROWS_AS(bwe::RunConfig::FromText("version=1\njunk\n"), bwe::DataError);
  const auto c = bwe::RunConfig::FromText("# note\nversion=1\n steps = 12x \nflag=maybe\n");
  CHECK_THROWS_AS(c.GetInt("steps"), std::invalid_argument);
  CHECK_THROWS_AS(c.GetBool("flag"), std::invalid_argument);
  CHECK_THROWS_AS(c.Get("absent"), std::invalid_argument);
}
