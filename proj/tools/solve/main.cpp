// reqsmith-solve: SMT-LIB2 command-line solver for QF_LRA. Reads commands
// from stdin, answers on stdout, flushing after every command so it can sit
// behind a pipe.
#include <unistd.h>

#include <cstdio>

#include "reqsmith/smt_repl.hpp"

int main() {
  reqsmith::CommandScanner scanner;
  reqsmith::SmtRepl repl;
  char buf[1 << 16];
  for (;;) {
    for (auto cmd = scanner.take(); cmd; cmd = scanner.take()) {
      auto step = repl.handle_text(*cmd);
      if (!step.out.empty()) {
        fwrite(step.out.data(), 1, step.out.size(), stdout);
        fflush(stdout);
      }
      if (step.exit) return 0;
    }
    ssize_t n = read(0, buf, sizeof buf);
    if (n <= 0) return 0;
    scanner.feed(std::string_view(buf, static_cast<size_t>(n)));
  }
}
