// Drives an external SMT-LIB2 solver process: named assertions, check-sat,
// model and unsat-core extraction, scoped push/pop, and wall-clock timeouts.
#pragma once

#include <sys/types.h>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "reqsmith/term.hpp"

namespace reqsmith {

struct SolverConfig {
  std::vector<std::string> command;  // argv; command[0] is the executable
  int per_query_timeout_ms = 10000;
  bool produce_models = true;
  bool produce_unsat_cores = true;
  // Isolation-debugging mode: every check() replays the assertion ledger
  // into a brand-new process instead of reusing one.
  bool fresh_process_per_query = false;
};

enum class Verdict { Sat, Unsat, Unknown };
const char* verdict_name(Verdict v);

enum class UnknownReason { None, Timeout, SolverReported };

struct CheckResult {
  Verdict verdict = Verdict::Unknown;
  UnknownReason unknown_reason = UnknownReason::None;
  std::optional<Assignment> model;                   // SAT + models enabled
  std::optional<std::set<std::string>> unsat_core;   // UNSAT + cores enabled
  long long wall_time_ms = 0;
};

struct SessionError : std::runtime_error {
  enum class Kind { SpawnFailure, HandshakeFailure, DuplicateLabel, Protocol };
  Kind kind;
  SessionError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// One solver process (single-owner; pool below hands out exclusive leases).
// A query timeout kills the process and recycles the session to a fresh,
// empty stack: nothing is replayed, the caller decides how to continue. The
// same applies after a protocol error.
class Session {
 public:
  Session(SolverConfig config, Schema schema);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  void assert_named(const std::string& label, const TermPtr& t);
  CheckResult check();

  // push / assert extras / body / pop, with the pop guaranteed even when the
  // body throws. The body usually calls check().
  CheckResult scoped(const std::vector<std::pair<std::string, TermPtr>>& extra,
                     const std::function<CheckResult(Session&)>& body);

  // scoped() with a body that just checks.
  CheckResult check_under(const std::vector<std::pair<std::string, TermPtr>>& extra);

  const Schema& schema() const { return schema_; }
  const SolverConfig& config() const { return config_; }
  // Everything the solver wrote to stderr so far (kept for the report log).
  const std::string& stderr_log() const { return err_log_; }

 private:
  struct Frame {
    std::vector<std::pair<std::string, TermPtr>> asserts;
  };
  enum class ReadOutcome { Ready, Timeout, Eof };

  void spawn();
  void handshake();
  void kill_process();
  void recycle();  // kill + fresh empty process
  void send(const std::string& text);
  std::string next_marker();
  ReadOutcome read_until_marker(const std::string& marker,
                                std::chrono::steady_clock::time_point deadline,
                                std::string& region);
  std::string sync_or_throw(const std::string& marker,
                            std::chrono::steady_clock::time_point deadline);
  bool drain(int fd, std::string& into);  // true when EOF was seen
  bool label_in_use(const std::string& label) const;
  void replay_ledger();
  Assignment parse_model(const std::string& region);
  std::set<std::string> parse_core(const std::string& region);
  [[noreturn]] void protocol_error(const std::string& msg);

  SolverConfig config_;
  Schema schema_;
  std::vector<Frame> frames_{Frame{}};
  uint64_t generation_ = 0;
  uint64_t marker_counter_ = 0;

  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  int err_fd_ = -1;
  bool out_eof_ = false;
  std::string rx_;
  std::string err_log_;
};

// Fixed-capacity pool of sessions with blocking exclusive leases. Sessions
// are created lazily, up to `capacity`.
class SessionPool {
 public:
  SessionPool(SolverConfig config, Schema schema, size_t capacity = 4);

  class Lease {
   public:
    Lease(Lease&& o) noexcept : pool_(o.pool_), session_(o.session_) {
      o.pool_ = nullptr;
      o.session_ = nullptr;
    }
    Lease& operator=(Lease&&) = delete;
    Lease(const Lease&) = delete;
    ~Lease();
    Session& operator*() const { return *session_; }
    Session* operator->() const { return session_; }

   private:
    friend class SessionPool;
    Lease(SessionPool* pool, Session* session) : pool_(pool), session_(session) {}
    SessionPool* pool_;
    Session* session_;
  };

  Lease acquire();
  size_t capacity() const { return capacity_; }

 private:
  friend class Lease;
  void release(Session* session);

  SolverConfig config_;
  Schema schema_;
  size_t capacity_;
  size_t created_ = 0;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::unique_ptr<Session>> owned_;
  std::vector<Session*> idle_;
};

}  // namespace reqsmith
