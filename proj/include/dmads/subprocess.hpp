#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "dmads/evaluator.hpp"
#include "dmads/json_io.hpp"

namespace dmads {

enum class WorkerMode { Persistent, Oneshot };

struct SubprocessOptions {
  WorkerMode mode = WorkerMode::Persistent;
  double timeout_s = 600.0;
};

/// Request line sent to a worker: {"id":N,"x":{"<name>":value,…}}.
inline std::string protocol_request(std::uint64_t id, const Point& x, const SearchSpace& space) {
  ordered_json j;
  j["id"] = id;
  j["x"] = point_to_json(x, space);
  return j.dump();
}

/// Parses a response line. A present id must match `id`; a missing one is
/// accepted unless `require_id` is set. Anything else malformed is a
/// ProtocolError.
inline Outcome parse_protocol_response(const std::string& line, std::uint64_t id, bool require_id = true) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("response is not a JSON object");
  if (j.contains("id")) {
    if (!j.at("id").is_number_integer() || j.at("id").get<std::int64_t>() < 0 ||
        j.at("id").get<std::uint64_t>() != id) {
      throw ProtocolError("response id does not match request id " + std::to_string(id));
    }
  } else if (require_id) {
    throw ProtocolError("response has no id");
  }
  if (j.contains("status") && j.at("status") == "fail") {
    std::string reason = "failed";
    if (j.contains("reason")) reason = j.at("reason").is_string() ? j.at("reason").get<std::string>() : j.at("reason").dump();
    return Failure{reason};
  }
  if (j.contains("objective") && j.at("objective").is_number()) return Success{j.at("objective").get<double>()};
  throw ProtocolError("response carries neither an objective nor a failure status");
}

namespace detail {

struct Child {
  pid_t pid = -1;
  int in = -1;   // parent writes here
  int out = -1;  // parent reads here
};

/// fork/exec of `/bin/sh -c command [args...]` with stdin and stdout piped.
inline Child spawn(const std::string& command, const std::vector<std::string>& args = {}) {
  int to_child[2];
  int from_child[2];
  if (pipe2(to_child, O_CLOEXEC) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
  if (pipe2(from_child, O_CLOEXEC) != 0) {
    close(to_child[0]);
    close(to_child[1]);
    throw Error(std::string("pipe: ") + std::strerror(errno));
  }
  std::string script = command;
  if (!args.empty()) script += " \"$@\"";
  std::vector<std::string> argv_s = {"sh", "-c", script, "sh"};
  argv_s.insert(argv_s.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_s) argv.push_back(a.data());
  argv.push_back(nullptr);

  const pid_t pid = fork();
  if (pid < 0) throw Error(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    signal(SIGPIPE, SIG_DFL);
    execv("/bin/sh", argv.data());
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  return {pid, to_child[1], from_child[0]};
}

inline void close_fd(int& fd) {
  if (fd >= 0) close(fd);
  fd = -1;
}

/// Waits for the child; returns its exit status (128+signal when killed).
inline int reap(Child& c, bool force) {
  close_fd(c.in);
  close_fd(c.out);
  if (c.pid <= 0) return 0;
  if (force) kill(c.pid, SIGKILL);
  int status = 0;
  for (int i = 0; !force && i < 200; ++i) {
    const pid_t r = waitpid(c.pid, &status, WNOHANG);
    if (r == c.pid) {
      c.pid = -1;
      return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    }
    usleep(5000);
  }
  if (!force) kill(c.pid, SIGKILL);
  waitpid(c.pid, &status, 0);
  c.pid = -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
}

inline bool write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t w = write(fd, data.data() + off, data.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(w);
  }
  return true;
}

enum class ReadStatus { Ok, Eof, Timeout };

/// Reads from `fd` into `buf` until `stop(buf)` or EOF or the deadline.
template <class Stop>
ReadStatus read_until(int fd, std::string& buf, std::chrono::steady_clock::time_point deadline, Stop stop) {
  char chunk[4096];
  while (!stop(buf)) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return ReadStatus::Timeout;
    pollfd p{fd, POLLIN, 0};
    const int r = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (r < 0 && errno != EINTR) return ReadStatus::Eof;
    if (r <= 0) continue;
    const ssize_t n = read(fd, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      return ReadStatus::Eof;
    }
    if (n == 0) return ReadStatus::Eof;
    buf.append(chunk, static_cast<std::size_t>(n));
  }
  return ReadStatus::Ok;
}

inline std::chrono::steady_clock::time_point deadline_after(double seconds) {
  return std::chrono::steady_clock::now() +
         std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(seconds));
}

}  // namespace detail

/// External blackbox speaking the line protocol. One worker process per
/// evaluation slot. A timed-out worker is killed and the call fails with
/// reason "timeout". A persistent worker that dies unexpectedly is respawned
/// once; a second death raises ProtocolError.
class SubprocessBlackbox : public Blackbox {
public:
  SubprocessBlackbox(std::string command, const SearchSpace& space, SubprocessOptions opt = {})
      : command_(std::move(command)), space_(space), opt_(opt) {
    if (!(opt_.timeout_s > 0.0)) throw ConfigError("timeout must be positive");
    if (command_.empty()) throw ConfigError("empty blackbox command");
    signal(SIGPIPE, SIG_IGN);
  }

  ~SubprocessBlackbox() override {
    for (auto& s : slots_) {
      if (s && s->child.pid > 0) detail::reap(s->child, false);
    }
  }

  SubprocessBlackbox(const SubprocessBlackbox&) = delete;
  SubprocessBlackbox& operator=(const SubprocessBlackbox&) = delete;

  Outcome evaluate(const Point& x, std::size_t slot) override {
    Slot& s = slot_for(slot);
    std::lock_guard lock(s.mutex);
    const auto id = ++s.next_id;
    return opt_.mode == WorkerMode::Persistent ? persistent(s, id, x) : oneshot(id, x);
  }

  std::size_t worker_deaths(std::size_t slot) const {
    std::lock_guard lock(slots_mutex_);
    return slot < slots_.size() && slots_[slot] ? slots_[slot]->deaths : 0;
  }

private:
  struct Slot {
    std::mutex mutex;
    detail::Child child;
    std::string buffer;
    std::uint64_t next_id = 0;
    std::size_t deaths = 0;
  };

  Slot& slot_for(std::size_t slot) {
    std::lock_guard lock(slots_mutex_);
    if (slots_.size() <= slot) slots_.resize(slot + 1);
    if (!slots_[slot]) slots_[slot] = std::make_unique<Slot>();
    return *slots_[slot];
  }

  Outcome died(Slot& s, const std::string& why) {
    const int code = detail::reap(s.child, false);
    s.buffer.clear();
    if (++s.deaths > 1) throw ProtocolError("worker died twice: " + why);
    return Failure{"worker died (" + why + ", status " + std::to_string(code) + ")"};
  }

  Outcome persistent(Slot& s, std::uint64_t id, const Point& x) {
    if (s.child.pid <= 0) {
      s.child = detail::spawn(command_);
      s.buffer.clear();
    }
    const auto deadline = detail::deadline_after(opt_.timeout_s);
    if (!detail::write_all(s.child.in, protocol_request(id, x, space_) + "\n")) return died(s, "broken pipe");
    const auto st = detail::read_until(s.child.out, s.buffer, deadline,
                                       [](const std::string& b) { return b.find('\n') != std::string::npos; });
    if (st == detail::ReadStatus::Timeout) {
      detail::reap(s.child, true);
      s.buffer.clear();
      return Failure{"timeout"};
    }
    if (st == detail::ReadStatus::Eof) return died(s, "end of output");
    const auto nl = s.buffer.find('\n');
    std::string line = s.buffer.substr(0, nl);
    s.buffer.erase(0, nl + 1);
    return parse_protocol_response(line, id, false);
  }

  Outcome oneshot(std::uint64_t id, const Point& x) {
    char path[] = "/tmp/dmads-point-XXXXXX";
    const int fd = mkstemp(path);
    if (fd < 0) throw Error(std::string("mkstemp: ") + std::strerror(errno));
    const bool wrote = detail::write_all(fd, protocol_request(id, x, space_) + "\n");
    close(fd);
    struct Unlink {
      const char* p;
      ~Unlink() { std::remove(p); }
    } cleanup{path};
    if (!wrote) throw Error("could not write point file");

    auto child = detail::spawn(command_, {path});
    detail::close_fd(child.in);
    std::string out;
    const auto st = detail::read_until(child.out, out, detail::deadline_after(opt_.timeout_s),
                                       [](const std::string&) { return false; });
    if (st == detail::ReadStatus::Timeout) {
      detail::reap(child, true);
      return Failure{"timeout"};
    }
    const int code = detail::reap(child, false);
    if (code != 0) return Failure{"exit status " + std::to_string(code)};
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r' || out.back() == ' ')) out.pop_back();
    const auto nl = out.rfind('\n');
    const std::string last = nl == std::string::npos ? out : out.substr(nl + 1);
    if (last.empty()) throw ProtocolError("worker produced no output");
    return parse_protocol_response(last, id, false);
  }

  std::string command_;
  const SearchSpace& space_;
  SubprocessOptions opt_;
  mutable std::mutex slots_mutex_;
  std::vector<std::unique_ptr<Slot>> slots_;
};

}  // namespace dmads
