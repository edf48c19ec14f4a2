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

// knnmt: command-line front end.
//
// Exit status: 0 success, 2 input error, 3 incompatible inputs, 4 internal
// error. Every run writes a JSON manifest next to its main output.

#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace knnmt::cli;
  CLI::App app{"Retrieval-augmented translation and transfer analysis toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "knnmt 0.1.0");
  std::vector<Command> cmds;
  register_data_commands(app, cmds);
  register_translate_commands(app, cmds);
  register_analyze_command(app, cmds);
  register_bench_command(app, cmds);

  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config;
  try {
    config = inject_config(app, args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  } catch (const knnmt::Error& e) {
    std::cerr << "knnmt: error: " << e.what() << '\n';
    return exit_code_for(e.code());
  }

  for (auto& cmd : cmds) {
    if (!cmd.app->parsed()) continue;
    RunManifest manifest(cmd.app->get_name());
    manifest.record_config(*cmd.app);
    if (!config.empty()) manifest.config_file(config);
    Stopwatch wall;
    int status = kOk;
    std::string error;
    try {
      cmd.run(manifest);
    } catch (const knnmt::Error& e) {
      status = exit_code_for(e.code());
      error = e.what();
    } catch (const std::exception& e) {
      status = kInternal;
      error = std::string("internal: ") + e.what();
    }
    if (status != kOk) {
      std::cerr << "knnmt " << cmd.app->get_name() << ": error: " << error << '\n';
      manifest["error"] = error;
      manifest["exit_code"] = status;
    }
    try {
      manifest.write(status == kOk ? "ok" : "failed", wall.seconds());
    } catch (const knnmt::Error& e) {
      std::cerr << "knnmt: warning: " << e.what() << '\n';
      if (status == kOk) status = exit_code_for(e.code());
    }
    return status;
  }
  return kInternal;
}
