/* Copyright 2026 The knnmt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <vector>

#include "cli_support.hpp"

namespace knnmt::cli {

void register_data_commands(CLI::App& app, std::vector<Command>& cmds);       // gen-toy build merge map-fit map-apply
void register_translate_commands(CLI::App& app, std::vector<Command>& cmds);  // translate bleu
void register_analyze_command(CLI::App& app, std::vector<Command>& cmds);
void register_bench_command(CLI::App& app, std::vector<Command>& cmds);

}  // namespace knnmt::cli
