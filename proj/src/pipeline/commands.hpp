// Copyright 2026 The Chartforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include "common/jsonl.hpp"

namespace chartforge::pipeline {

class Engine;

// Names of the single-stage commands. Those marked as needing an engine read
// endpoints, workers and the ledger from a manifest; the rest are pure file
// transformations.
const std::vector<std::string>& command_names();
bool command_needs_engine(const std::string& name);

// Runs one command with JSON arguments and returns a JSON result. `engine`
// may be null for pure commands. Throws chartforge::Error.
Json execute_command(Engine* engine, const std::string& name, const Json& args);

}  // namespace chartforge::pipeline
