// SPDX-License-Identifier: Apache-2.0
/**
 * @file   cli_runner.hpp
 * @brief  Runs the destripe executable and captures its output.
 */
#ifndef DESTRIPE_TESTS_CLI_RUNNER_HPP_
#define DESTRIPE_TESTS_CLI_RUNNER_HPP_

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace destripe::testing {

struct CliResult {
  int exit_code = -1;
  std::string output; ///< stdout and stderr, interleaved
};

inline std::string shell_quote(const std::string &s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

/// Runs the destripe executable with args (already quoted as needed) from
/// working directory cwd.
inline CliResult run_cli(const std::string &args,
                         const std::filesystem::path &cwd,
                         const std::string &env = "") {
  const auto capture = cwd / ".cli_output.txt";
  const std::string cmd = "cd " + shell_quote(cwd.string()) + " && " + env +
                          (env.empty() ? "" : " ") +
                          shell_quote(DESTRIPE_CLI_PATH) + " " + args + " > " +
                          shell_quote(capture.string()) + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(capture);
  result.output.assign(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
  std::filesystem::remove(capture);
  return result;
}

} // namespace destripe::testing

#endif
