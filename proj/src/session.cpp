#include "reqsmith/session.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "reqsmith/parser.hpp"
#include "reqsmith/sexpr.hpp"

namespace reqsmith {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Sat: return "SAT";
    case Verdict::Unsat: return "UNSAT";
    case Verdict::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe_once() {
  // A dying solver must surface as EPIPE on write, not kill the host.
  static const int installed = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return 0;
  }();
  (void)installed;
}

void close_fd(int& fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

void set_nonblocking(int fd) {
  int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

}  // namespace

// --------------------------------------------------------------------------

Session::Session(SolverConfig config, Schema schema)
    : config_(std::move(config)), schema_(std::move(schema)) {
  if (config_.command.empty())
    throw SessionError(SessionError::Kind::SpawnFailure, "solver command is empty");
  if (config_.per_query_timeout_ms <= 0)
    throw SessionError(SessionError::Kind::SpawnFailure, "per-query timeout must be positive");
  ignore_sigpipe_once();
  spawn();
  handshake();
}

Session::~Session() { kill_process(); }

void Session::spawn() {
  int to_child[2], from_child[2], err_pipe[2], status_pipe[2];
  if (::pipe(to_child) < 0 || ::pipe(from_child) < 0 || ::pipe(err_pipe) < 0 ||
      ::pipe(status_pipe) < 0)
    throw SessionError(SessionError::Kind::SpawnFailure,
                       std::string("pipe: ") + std::strerror(errno));
  ::fcntl(status_pipe[1], F_SETFD, FD_CLOEXEC);

  pid_t pid = ::fork();
  if (pid < 0) {
    throw SessionError(SessionError::Kind::SpawnFailure,
                       std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(to_child[0], 0);
    ::dup2(from_child[1], 1);
    ::dup2(err_pipe[1], 2);
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1], err_pipe[0],
                   err_pipe[1], status_pipe[0]})
      ::close(fd);
    std::vector<char*> argv;
    argv.reserve(config_.command.size() + 1);
    for (const std::string& a : config_.command) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    ::execvp(argv[0], argv.data());
    int err = errno;
    (void)!::write(status_pipe[1], &err, sizeof err);
    ::_exit(127);
  }

  ::close(to_child[0]);
  ::close(from_child[1]);
  ::close(err_pipe[1]);
  ::close(status_pipe[1]);

  int exec_errno = 0;
  ssize_t n = ::read(status_pipe[0], &exec_errno, sizeof exec_errno);
  ::close(status_pipe[0]);
  if (n > 0) {
    ::waitpid(pid, nullptr, 0);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(err_pipe[0]);
    throw SessionError(SessionError::Kind::SpawnFailure,
                       "cannot run '" + config_.command[0] + "': " + std::strerror(exec_errno));
  }

  pid_ = pid;
  in_fd_ = to_child[1];
  out_fd_ = from_child[0];
  err_fd_ = err_pipe[0];
  set_nonblocking(out_fd_);
  set_nonblocking(err_fd_);
  out_eof_ = false;
  rx_.clear();
  ++generation_;
}

void Session::handshake() {
  std::string pre;
  pre += "(set-option :print-success false)\n";
  pre += "(set-logic QF_LRA)\n";
  if (config_.produce_models) pre += "(set-option :produce-models true)\n";
  if (config_.produce_unsat_cores) pre += "(set-option :produce-unsat-cores true)\n";
  for (const VarDecl& d : schema_.vars())
    pre += "(declare-const " + d.name + " " + sort_name(d.sort) + ")\n";
  std::string marker = next_marker();
  pre += "(echo \"" + marker + "\")\n";
  send(pre);

  std::string region;
  auto deadline = Clock::now() + std::chrono::milliseconds(config_.per_query_timeout_ms);
  ReadOutcome r = read_until_marker(marker, deadline, region);
  if (r == ReadOutcome::Timeout) {
    kill_process();
    throw SessionError(SessionError::Kind::HandshakeFailure, "solver handshake timed out");
  }
  if (r == ReadOutcome::Eof) {
    kill_process();
    throw SessionError(SessionError::Kind::HandshakeFailure,
                       "solver exited during handshake: " + region);
  }
  if (region.find("(error") != std::string::npos) {
    kill_process();
    throw SessionError(SessionError::Kind::HandshakeFailure,
                       "solver rejected handshake: " + region);
  }
}

void Session::kill_process() {
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
  close_fd(in_fd_);
  if (err_fd_ >= 0) drain(err_fd_, err_log_);
  close_fd(out_fd_);
  close_fd(err_fd_);
}

void Session::recycle() {
  kill_process();
  frames_ = {Frame{}};
  spawn();
  handshake();
}

void Session::send(const std::string& text) {
  size_t off = 0;
  while (off < text.size()) {
    ssize_t n = ::write(in_fd_, text.data() + off, text.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      int err = errno;
      kill_process();
      throw SessionError(SessionError::Kind::Protocol,
                         std::string("write to solver failed: ") + std::strerror(err));
    }
    off += static_cast<size_t>(n);
  }
}

std::string Session::next_marker() { return "rs-sync-" + std::to_string(++marker_counter_); }

bool Session::drain(int fd, std::string& into) {
  char buf[4096];
  for (;;) {
    ssize_t n = ::read(fd, buf, sizeof buf);
    if (n > 0) {
      into.append(buf, static_cast<size_t>(n));
      continue;
    }
    if (n == 0) return true;
    if (errno == EINTR) continue;
    return false;  // EAGAIN
  }
}

Session::ReadOutcome Session::read_until_marker(const std::string& marker,
                                                Clock::time_point deadline,
                                                std::string& region) {
  for (;;) {
    size_t idx = rx_.find(marker);
    while (idx != std::string::npos) {
      bool line_start = idx == 0 || rx_[idx - 1] == '\n';
      size_t end = idx + marker.size();
      bool line_end = end < rx_.size() && rx_[end] == '\n';
      if (line_start && line_end) {
        region = rx_.substr(0, idx);
        rx_.erase(0, end + 1);
        return ReadOutcome::Ready;
      }
      idx = rx_.find(marker, idx + 1);
    }
    if (out_eof_) {
      region = rx_;
      return ReadOutcome::Eof;
    }
    auto now = Clock::now();
    if (now >= deadline) return ReadOutcome::Timeout;
    int wait_ms = static_cast<int>(
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1);
    struct pollfd fds[2] = {{out_fd_, POLLIN, 0}, {err_fd_, POLLIN, 0}};
    int rc = ::poll(fds, 2, wait_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      protocol_error(std::string("poll: ") + std::strerror(errno));
    }
    if (fds[1].revents) drain(err_fd_, err_log_);
    if (fds[0].revents) out_eof_ = drain(out_fd_, rx_);
  }
}

[[noreturn]] void Session::protocol_error(const std::string& msg) {
  // Leave the session in a defined state: fresh process, empty stack.
  recycle();
  throw SessionError(SessionError::Kind::Protocol, msg);
}

std::string Session::sync_or_throw(const std::string& marker, Clock::time_point deadline) {
  std::string region;
  ReadOutcome r = read_until_marker(marker, deadline, region);
  if (r == ReadOutcome::Eof)
    protocol_error("solver exited unexpectedly; output so far: " + region);
  if (r == ReadOutcome::Timeout)
    throw SessionError(SessionError::Kind::Protocol, "internal: unexpected timeout");
  return region;
}

bool Session::label_in_use(const std::string& label) const {
  for (const Frame& f : frames_)
    for (const auto& [l, t] : f.asserts)
      if (l == label) return true;
  return false;
}

void Session::assert_named(const std::string& label, const TermPtr& t) {
  if (!is_simple_symbol(label))
    throw SessionError(SessionError::Kind::Protocol,
                       "assertion label '" + label + "' is not a simple symbol");
  if (label_in_use(label))
    throw SessionError(SessionError::Kind::DuplicateLabel,
                       "assertion label '" + label + "' already used in this scope stack");
  if (t->sort != Sort::Bool)
    throw SessionError(SessionError::Kind::Protocol, "asserted term is not Bool-sorted");
  for (const std::string& v : free_vars(t))
    if (!schema_.find(v))
      throw SessionError(SessionError::Kind::Protocol,
                         "asserted term references undeclared variable '" + v + "'");
  frames_.back().asserts.emplace_back(label, t);
  if (!config_.fresh_process_per_query)
    send("(assert (! " + print_term(t) + " :named " + label + "))\n");
}

void Session::replay_ledger() {
  std::string script;
  for (size_t i = 0; i < frames_.size(); ++i) {
    if (i > 0) script += "(push 1)\n";
    for (const auto& [label, t] : frames_[i].asserts)
      script += "(assert (! " + print_term(t) + " :named " + label + "))\n";
  }
  if (!script.empty()) send(script);
}

CheckResult Session::check() {
  auto started = Clock::now();
  auto deadline = started + std::chrono::milliseconds(config_.per_query_timeout_ms);

  if (config_.fresh_process_per_query) {
    kill_process();
    std::vector<Frame> keep = frames_;
    spawn();
    handshake();
    frames_ = std::move(keep);
    replay_ledger();
  }

  std::string marker = next_marker();
  send("(check-sat)\n(echo \"" + marker + "\")\n");
  std::string region;
  ReadOutcome r = read_until_marker(marker, deadline, region);
  if (r == ReadOutcome::Timeout) {
    recycle();
    CheckResult out;
    out.verdict = Verdict::Unknown;
    out.unknown_reason = UnknownReason::Timeout;
    out.wall_time_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started).count();
    return out;
  }
  if (r == ReadOutcome::Eof)
    protocol_error("solver exited during check-sat; output so far: " + region);

  if (region.find("(error") != std::string::npos)
    protocol_error("solver reported an error: " + region);

  Verdict verdict;
  size_t line_begin = 0;
  std::optional<std::string> word;
  for (size_t i = 0; i <= region.size(); ++i) {
    if (i == region.size() || region[i] == '\n') {
      std::string line = region.substr(line_begin, i - line_begin);
      if (line == "sat" || line == "unsat" || line == "unknown") word = line;
      line_begin = i + 1;
    }
  }
  if (!word) protocol_error("no check-sat verdict in solver output: " + region);

  CheckResult out;
  out.unknown_reason = UnknownReason::None;
  if (*word == "sat") {
    verdict = Verdict::Sat;
  } else if (*word == "unsat") {
    verdict = Verdict::Unsat;
  } else {
    verdict = Verdict::Unknown;
    out.unknown_reason = UnknownReason::SolverReported;
  }
  out.verdict = verdict;

  if (verdict == Verdict::Sat && config_.produce_models) {
    std::string m = next_marker();
    send("(get-model)\n(echo \"" + m + "\")\n");
    out.model = parse_model(sync_or_throw(m, deadline));
  } else if (verdict == Verdict::Unsat && config_.produce_unsat_cores) {
    std::string m = next_marker();
    send("(get-unsat-core)\n(echo \"" + m + "\")\n");
    out.unsat_core = parse_core(sync_or_throw(m, deadline));
  }
  out.wall_time_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started).count();
  return out;
}

Assignment Session::parse_model(const std::string& region) {
  if (region.find("(error") != std::string::npos)
    protocol_error("solver rejected get-model: " + region);
  Assignment parsed;
  try {
    SexprReader reader(region);
    Sexpr top;
    if (!reader.next(top) || !top.is_list())
      protocol_error("malformed model output: " + region);
    size_t first = 0;
    if (!top.items.empty() && top.items[0].is_atom("model")) first = 1;
    Schema empty;
    for (size_t i = first; i < top.items.size(); ++i) {
      const Sexpr& fn = top.items[i];
      if (!fn.is_list() || fn.items.size() != 5 || !fn.items[0].is_atom("define-fun") ||
          fn.items[1].kind != Sexpr::Kind::Atom)
        protocol_error("malformed model entry: " + sexpr_to_string(fn));
      const std::string& name = fn.items[1].atom;
      const VarDecl* decl = schema_.find(name);
      if (!decl) continue;  // solver-internal symbol
      if (decl->sort == Sort::Bool) {
        if (fn.items[4].is_atom("true"))
          parsed.set_bool(name, true);
        else if (fn.items[4].is_atom("false"))
          parsed.set_bool(name, false);
        else
          protocol_error("non-boolean model value for '" + name + "'");
      } else {
        TermPtr v = parse_term_sexpr(fn.items[4], empty);
        if (v->kind != TermKind::RealConst)
          protocol_error("non-constant model value for '" + name + "'");
        parsed.set_real(name, v->num);
      }
    }
  } catch (const SexprError& e) {
    protocol_error(std::string("unparseable model output: ") + e.what() + "; raw: " + region);
  } catch (const TermError& e) {
    protocol_error(std::string("unparseable model value: ") + e.what() + "; raw: " + region);
  }
  // Complete missing entries with sort defaults.
  Assignment full;
  for (const VarDecl& d : schema_.vars()) {
    auto it = parsed.values.find(d.name);
    if (it != parsed.values.end())
      full.values[d.name] = it->second;
    else if (d.sort == Sort::Bool)
      full.set_bool(d.name, false);
    else
      full.set_real(d.name, Rat(0));
  }
  return full;
}

std::set<std::string> Session::parse_core(const std::string& region) {
  if (region.find("(error") != std::string::npos)
    protocol_error("solver rejected get-unsat-core: " + region);
  try {
    SexprReader reader(region);
    Sexpr top;
    if (!reader.next(top) || !top.is_list())
      protocol_error("malformed unsat core output: " + region);
    std::set<std::string> core;
    for (const Sexpr& item : top.items) {
      if (item.kind != Sexpr::Kind::Atom)
        protocol_error("malformed unsat core entry: " + sexpr_to_string(item));
      core.insert(item.atom);
    }
    return core;
  } catch (const SexprError& e) {
    protocol_error(std::string("unparseable unsat core: ") + e.what() + "; raw: " + region);
  }
}

CheckResult Session::scoped(const std::vector<std::pair<std::string, TermPtr>>& extra,
                            const std::function<CheckResult(Session&)>& body) {
  frames_.push_back(Frame{});
  if (!config_.fresh_process_per_query) send("(push 1)\n");
  uint64_t entered = generation_;
  size_t depth = frames_.size();

  struct PopGuard {
    Session* s;
    uint64_t gen;
    size_t depth;
    ~PopGuard() {
      // A recycle (timeout / protocol error) resets the stack to depth 1, so
      // a depth mismatch means the scope is already gone. Fresh-mode respawns
      // bump the generation but keep the ledger, hence the depth test here.
      if (s->frames_.size() != depth) return;
      s->frames_.pop_back();
      if (s->config_.fresh_process_per_query || s->generation_ != gen) return;
      try {
        s->send("(pop 1)\n");
      } catch (...) {
        // Destructor runs during unwinding; a dead pipe here must not
        // escalate. The session is already marked dead by send().
      }
    }
  } guard{this, entered, depth};

  for (const auto& [label, t] : extra) assert_named(label, t);
  return body(*this);
}

CheckResult Session::check_under(const std::vector<std::pair<std::string, TermPtr>>& extra) {
  return scoped(extra, [](Session& s) { return s.check(); });
}

// --------------------------------------------------------------------------

SessionPool::SessionPool(SolverConfig config, Schema schema, size_t capacity)
    : config_(std::move(config)), schema_(std::move(schema)),
      capacity_(capacity == 0 ? 1 : capacity) {}

SessionPool::Lease SessionPool::acquire() {
  std::unique_lock<std::mutex> lock(mu_);
  for (;;) {
    if (!idle_.empty()) {
      Session* s = idle_.back();
      idle_.pop_back();
      return Lease(this, s);
    }
    if (created_ < capacity_) {
      ++created_;
      lock.unlock();
      std::unique_ptr<Session> fresh;
      try {
        fresh = std::make_unique<Session>(config_, schema_);
      } catch (...) {
        lock.lock();
        --created_;
        cv_.notify_one();
        throw;
      }
      lock.lock();
      Session* s = fresh.get();
      owned_.push_back(std::move(fresh));
      return Lease(this, s);
    }
    cv_.wait(lock);
  }
}

void SessionPool::release(Session* session) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    idle_.push_back(session);
  }
  cv_.notify_one();
}

SessionPool::Lease::~Lease() {
  if (pool_ && session_) pool_->release(session_);
}

}  // namespace reqsmith
