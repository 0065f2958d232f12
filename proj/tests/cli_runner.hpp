#pragma once

// Runs the CLI binary through the shell and captures stdout and the exit code.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <string>

#ifndef BELL_LAB_CLI
#error "BELL_LAB_CLI must name the CLI executable"
#endif

namespace cli {

struct Output {
  int status;
  std::string out;
};

inline Output run(const std::string& args, bool keep_stderr = false) {
  const std::string cmd = std::string("'") + BELL_LAB_CLI + "' " + args + (keep_stderr ? " 2>&1" : " 2>/dev/null");
  Output o{-1, {}};
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return o;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) o.out.append(buf.data(), n);
  const int raw = pclose(p);
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return o;
}

}  // namespace cli
