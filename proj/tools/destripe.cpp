// SPDX-License-Identifier: Apache-2.0
/**
 * @file   destripe.cpp
 * @brief  Command-line front end; see `destripe --help`.
 */

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "destripe/commands.hpp"

namespace {

struct SubcommandOptions {
  const destripe::cli::Command *command = nullptr;
  CLI::App *app = nullptr;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option *> options;
  std::vector<std::string> positional;
  CLI::Option *positional_opt = nullptr;
  std::string config_path;
  bool print_config = false;
};

std::string flag_names(const std::string &key) {
  std::string names = "--" + key;
  std::string dashed = key;
  for (auto &ch : dashed)
    if (ch == '_')
      ch = '-';
  if (dashed != key)
    names += ",--" + dashed;
  return names;
}

} // namespace

int main(int argc, char **argv) {
  namespace cli = destripe::cli;
  CLI::App app{"destripe: column stripe noise synthesis, removal and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", destripe::kVersion);

  std::vector<SubcommandOptions> subs;
  subs.reserve(cli::commands().size());
  for (const auto &cmd : cli::commands()) {
    auto &s = subs.emplace_back();
    s.command = &cmd;
    s.app = app.add_subcommand(cmd.name, cmd.help);
    s.app->add_option("--config", s.config_path, "key=value config file");
    s.app->add_flag("--print-config", s.print_config,
                    "print the resolved settings and exit");
    for (const auto &key : cmd.keys) {
      std::string help = key.help;
      if (!key.default_value.empty())
        help += " [" + key.default_value + "]";
      s.options[key.name] =
          s.app->add_option(flag_names(key.name), s.values[key.name], help);
    }
    if (!cmd.positional.empty())
      s.positional_opt =
          s.app->add_option(cmd.positional + "_list", s.positional,
                            "positional " + cmd.positional);
  }

  std::string manifest;
  auto *replay_app =
      app.add_subcommand("replay", "re-run the command recorded in a manifest");
  replay_app->add_option("manifest", manifest, "run manifest file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kUsage;
  }

  if (replay_app->parsed())
    return cli::replay(manifest, std::cerr, std::cerr);

  for (auto &s : subs) {
    if (!s.app->parsed())
      continue;
    destripe::KeyValues flags;
    for (const auto &[name, opt] : s.options)
      if (opt->count() > 0)
        flags[name] = s.values[name];
    if (s.positional_opt && s.positional_opt->count() > 0) {
      std::string joined;
      for (const auto &p : s.positional)
        joined += (joined.empty() ? "" : ",") + p;
      const auto &key = s.command->positional;
      flags[key] = flags.count(key) && !flags[key].empty()
                       ? flags[key] + "," + joined
                       : joined;
    }
    destripe::KeyValues settings;
    try {
      destripe::KeyValues file;
      if (!s.config_path.empty())
        file = destripe::load_key_values(s.config_path);
      settings = cli::resolve_settings(
          *s.command, file, flags,
          s.config_path.empty() ? "config" : s.config_path);
    } catch (const destripe::ConfigError &e) {
      std::cerr << "destripe " << s.command->name << ": config error: "
                << e.what() << '\n';
      return cli::kConfigError;
    } catch (const destripe::IoError &e) {
      std::cerr << "destripe " << s.command->name << ": " << e.what() << '\n';
      return cli::kIoError;
    }
    if (s.print_config) {
      destripe::write_key_values(std::cout, settings);
      return cli::kOk;
    }
    return cli::run_command(*s.command, settings, std::cerr, std::cerr);
  }
  return cli::kUsage;
}
