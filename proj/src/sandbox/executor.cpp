#include "caco/sandbox/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>

#include "json.hpp"

namespace caco::sandbox {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::size_t kStderrCap = 16 << 10;
constexpr std::size_t kShimSlack = 64 << 10;

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& other) noexcept : fd_(other.release()) {}
  Fd& operator=(Fd&& other) noexcept {
    reset(other.release());
    return *this;
  }
  ~Fd() { reset(); }

  int get() const { return fd_; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void reset(int fd = -1) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = fd;
  }

 private:
  int fd_ = -1;
};

struct Pipe {
  Fd read;
  Fd write;
};

std::optional<Pipe> make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) return std::nullopt;
  return Pipe{Fd(fds[0]), Fd(fds[1])};
}

class TempDir {
 public:
  explicit TempDir(const std::string& root) {
    std::string pattern = (fs::path(root) / "caco-exec-XXXXXX").string();
    if (::mkdtemp(pattern.data())) path_ = pattern;
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    if (!path_.empty()) {
      std::error_code ec;
      fs::remove_all(path_, ec);
    }
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

std::string temp_root(const ExecutorConfig& config) {
  if (!config.tmp_root.empty()) return config.tmp_root;
  for (const char* var : {"CACO_TMPDIR", "TMPDIR"}) {
    const char* value = std::getenv(var);
    if (value && *value) return value;
  }
  return "/tmp";
}

ExecutionResult setup_failure(std::string detail) {
  ExecutionResult result;
  result.status = ExecStatus::setup_error;
  result.detail = std::move(detail);
  return result;
}

// Moves `fd` onto `target` in the child, clearing close-on-exec.
bool place_fd(int fd, int target) {
  if (fd == target) return ::fcntl(fd, F_SETFD, 0) == 0;
  return ::dup2(fd, target) == target;
}

struct Capture {
  std::string data;
  std::size_t cap = 0;
  bool overflowed = false;
  bool open = true;
};

// Reads what is available; returns false at EOF.
bool drain(int fd, Capture& capture) {
  char buffer[8192];
  while (true) {
    ssize_t n = ::read(fd, buffer, sizeof buffer);
    if (n > 0) {
      std::size_t room = capture.cap > capture.data.size() ? capture.cap - capture.data.size() : 0;
      std::size_t take = std::min(room, static_cast<std::size_t>(n));
      capture.data.append(buffer, take);
      if (take < static_cast<std::size_t>(n)) capture.overflowed = true;
      continue;
    }
    if (n == 0) return false;
    if (errno == EINTR) continue;
    return errno == EAGAIN || errno == EWOULDBLOCK;
  }
}

struct RunOutcome {
  ExecutionResult result;
  Capture out;
  Capture err;
  Capture channel;
  bool timed_out = false;
};

struct Invocation {
  std::vector<std::string> argv;
  bool with_channel = false;
};

RunOutcome run_child(const Invocation& inv, const std::string& workdir, const ExecLimits& limits,
                     const ExecutorConfig& config) {
  RunOutcome outcome;
  outcome.out.cap = limits.max_stdout_bytes;
  outcome.err.cap = kStderrCap;
  outcome.channel.cap = limits.max_stdout_bytes * 6 + kShimSlack;

  auto out = make_pipe();
  auto err = make_pipe();
  auto status_pipe = make_pipe();
  std::optional<Pipe> channel;
  if (inv.with_channel) channel = make_pipe();
  if (!out || !err || !status_pipe || (inv.with_channel && !channel)) {
    outcome.result = setup_failure(std::string("pipe: ") + std::strerror(errno));
    return outcome;
  }
  Fd devnull(::open("/dev/null", O_RDONLY | O_CLOEXEC));

  // Everything the child touches is prepared before fork.
  std::vector<char*> argv;
  for (const auto& a : inv.argv) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  std::vector<std::string> env_storage;
  for (const auto& name : limits.env_allowlist) {
    if (const char* value = std::getenv(name.c_str())) env_storage.push_back(name + "=" + value);
  }
  std::vector<char*> envp;
  for (auto& e : env_storage) envp.push_back(e.data());
  envp.push_back(nullptr);
  rlimit mem{static_cast<rlim_t>(limits.memory_bytes), static_cast<rlim_t>(limits.memory_bytes)};
  rlimit no_core{0, 0};
  int channel_write = channel ? channel->write.get() : -1;

  Clock::time_point start = Clock::now();
  pid_t pid = ::fork();
  if (pid < 0) {
    outcome.result = setup_failure(std::string("fork: ") + std::strerror(errno));
    return outcome;
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    bool ok = ::chdir(workdir.c_str()) == 0 && place_fd(devnull.get(), 0) &&
              place_fd(out->write.get(), 1) && place_fd(err->write.get(), 2) &&
              (channel_write < 0 || place_fd(channel_write, 3));
    if (ok) {
      ::setrlimit(RLIMIT_AS, &mem);
      ::setrlimit(RLIMIT_CORE, &no_core);
      if (config.isolate_network) ::unshare(CLONE_NEWNET);
      ::execve(argv[0], argv.data(), envp.data());
    }
    int code = errno;
    ssize_t ignored = ::write(status_pipe->write.get(), &code, sizeof code);
    (void)ignored;
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  out->write.reset();
  err->write.reset();
  status_pipe->write.reset();
  if (channel) channel->write.reset();

  int exec_errno = 0;
  ssize_t got;
  do {
    got = ::read(status_pipe->read.get(), &exec_errno, sizeof exec_errno);
  } while (got < 0 && errno == EINTR);
  if (got == static_cast<ssize_t>(sizeof exec_errno)) {
    ::waitpid(pid, nullptr, 0);
    outcome.result = setup_failure("cannot start " + inv.argv[0] + ": " + std::strerror(exec_errno));
    return outcome;
  }

  struct Stream {
    int fd;
    Capture* capture;
  };
  std::vector<Stream> streams = {{out->read.get(), &outcome.out}, {err->read.get(), &outcome.err}};
  if (channel) streams.push_back({channel->read.get(), &outcome.channel});
  for (auto& s : streams) ::fcntl(s.fd, F_SETFL, O_NONBLOCK);

  Clock::time_point deadline = start + std::chrono::milliseconds(limits.wall_ms);
  std::optional<int> wait_status;
  bool killed = false;
  auto kill_group = [&] {
    ::kill(-pid, SIGKILL);
    killed = true;
  };

  while (true) {
    if (!wait_status) {
      int st = 0;
      if (::waitpid(pid, &st, WNOHANG) == pid) {
        wait_status = st;
        // Stragglers in the group would keep the pipes open.
        ::kill(-pid, SIGKILL);
      }
    }
    bool any_open = false;
    for (const auto& s : streams) any_open = any_open || s.capture->open;
    if (wait_status && !any_open) break;

    auto now = Clock::now();
    if (now >= deadline) {
      if (!wait_status) outcome.timed_out = true;
      kill_group();
      break;
    }
    if (outcome.out.overflowed || outcome.channel.overflowed) {
      kill_group();
      break;
    }

    std::vector<pollfd> fds;
    std::vector<Stream*> polled;
    for (auto& s : streams) {
      if (!s.capture->open) continue;
      fds.push_back({s.fd, POLLIN, 0});
      polled.push_back(&s);
    }
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    int timeout = static_cast<int>(std::min<long long>(remaining + 1, 20));
    int ready = fds.empty() ? 0 : ::poll(fds.data(), fds.size(), timeout);
    if (fds.empty()) ::usleep(static_cast<useconds_t>(std::min<long long>(remaining, 20)) * 1000);
    if (ready < 0 && errno != EINTR) break;
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) {
        if (!drain(polled[i]->fd, *polled[i]->capture)) polled[i]->capture->open = false;
      }
    }
  }

  if (!wait_status) {
    int st = 0;
    while (::waitpid(pid, &st, 0) < 0 && errno == EINTR) {
    }
    wait_status = st;
  }
  if (killed) {
    for (auto& s : streams) {
      if (s.capture->open) drain(s.fd, *s.capture);
    }
  }
  Clock::time_point end = Clock::now();

  ExecutionResult& r = outcome.result;
  r.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(end - start).count();
  r.stdout_text = outcome.out.data;
  r.stderr_text = outcome.err.data;
  r.truncated = outcome.out.overflowed;
  if (WIFEXITED(*wait_status)) r.exit_code = WEXITSTATUS(*wait_status);

  if (outcome.timed_out) {
    r.status = ExecStatus::timeout;
    r.duration_ms = std::max(r.duration_ms, limits.wall_ms);
  } else if (outcome.out.overflowed || outcome.channel.overflowed) {
    r.status = ExecStatus::output_overflow;
    r.truncated = true;
  } else if (r.exit_code && *r.exit_code == 0) {
    r.status = ExecStatus::ok;
  } else {
    r.status = ExecStatus::runtime_error;
  }
  return outcome;
}

struct Prepared {
  std::unique_ptr<TempDir> dir;
  std::string candidate_path;
  std::string interpreter;
  std::optional<ExecutionResult> failure;
};

Prepared prepare(const CandidateProgram& program, const ExecLimits& limits,
                 const ExecutorConfig& config) {
  Prepared p;
  if (!limits.valid()) {
    p.failure = setup_failure("invalid limits");
    return p;
  }
  p.interpreter = config.interpreter.find('/') == std::string::npos
                      ? find_executable(config.interpreter)
                      : config.interpreter;
  if (p.interpreter.empty() || ::access(p.interpreter.c_str(), X_OK) != 0) {
    p.failure = setup_failure("interpreter not found: " + config.interpreter);
    return p;
  }
  p.dir = std::make_unique<TempDir>(temp_root(config));
  if (p.dir->path().empty()) {
    p.failure = setup_failure("cannot create temp directory under " + temp_root(config));
    return p;
  }
  p.candidate_path = (fs::path(p.dir->path()) / "candidate.py").string();
  std::ofstream file(p.candidate_path, std::ios::binary);
  file << program.source;
  file.close();
  if (!file) p.failure = setup_failure("cannot write candidate file");
  return p;
}

std::vector<std::string> base_argv(const Prepared& p, const ExecutorConfig& config) {
  std::vector<std::string> argv = {p.interpreter};
  argv.insert(argv.end(), config.interpreter_flags.begin(), config.interpreter_flags.end());
  return argv;
}

std::optional<nlohmann::json> parse_shim_line(std::string_view text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.remove_suffix(1);
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto ok = j.find("ok");
  auto out = j.find("stdout");
  if (ok == j.end() || !ok->is_boolean() || out == j.end() || !out->is_string()) return std::nullopt;
  return j;
}

std::string optional_text(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  return it != j.end() && it->is_string() ? it->get<std::string>() : std::string();
}

}  // namespace

std::string find_executable(const std::string& name) {
  const char* path = std::getenv("PATH");
  std::string dirs = path ? path : "/usr/local/bin:/usr/bin:/bin";
  std::size_t start = 0;
  while (start <= dirs.size()) {
    std::size_t end = dirs.find(':', start);
    if (end == std::string::npos) end = dirs.size();
    std::string dir = dirs.substr(start, end - start);
    if (dir.empty()) dir = ".";
    std::string candidate = dir + "/" + name;
    struct stat st {};
    if (::stat(candidate.c_str(), &st) == 0 && S_ISREG(st.st_mode) && ::access(candidate.c_str(), X_OK) == 0) {
      return candidate;
    }
    start = end + 1;
  }
  return {};
}

ExecutionResult execute_plain(const CandidateProgram& program, const ExecLimits& limits,
                              const ExecutorConfig& config) {
  Prepared p = prepare(program, limits, config);
  if (p.failure) return *p.failure;
  Invocation inv;
  inv.argv = base_argv(p, config);
  inv.argv.push_back(p.candidate_path);
  return run_child(inv, p.dir->path(), limits, config).result;
}

ExecutionResult execute_instrumented(const CandidateProgram& program, const ExecLimits& limits,
                                     const ExecutorConfig& config) {
  if (config.shim_path.empty() || ::access(config.shim_path.c_str(), R_OK) != 0) {
    return setup_failure("shim not found: " + config.shim_path);
  }
  Prepared p = prepare(program, limits, config);
  if (p.failure) return *p.failure;
  Invocation inv;
  inv.argv = base_argv(p, config);
  inv.argv.push_back(fs::absolute(config.shim_path).string());
  inv.argv.push_back(p.candidate_path);
  inv.with_channel = true;
  RunOutcome outcome = run_child(inv, p.dir->path(), limits, config);
  ExecutionResult r = std::move(outcome.result);
  if (r.status == ExecStatus::timeout || r.status == ExecStatus::output_overflow ||
      r.status == ExecStatus::setup_error) {
    return r;
  }

  // Descriptor 3 first; the sentinel block on stdout is the fallback.
  std::optional<nlohmann::json> shim;
  std::string_view channel = outcome.channel.data;
  std::size_t line_end = channel.find('\n');
  if (!channel.empty()) shim = parse_shim_line(channel.substr(0, line_end));
  if (!shim) {
    std::size_t marker = r.stdout_text.rfind(std::string(kShimSentinel) + "\n");
    if (marker != std::string::npos && (marker == 0 || r.stdout_text[marker - 1] == '\n')) {
      std::string_view rest = std::string_view(r.stdout_text).substr(marker + kShimSentinel.size() + 1);
      shim = parse_shim_line(rest.substr(0, rest.find('\n')));
    }
  }
  if (!shim) {
    r.status = ExecStatus::setup_error;
    r.detail = "shim result missing or malformed";
    return r;
  }

  r.stdout_text = (*shim)["stdout"].get<std::string>();
  if (r.stdout_text.size() > limits.max_stdout_bytes) {
    r.stdout_text.resize(limits.max_stdout_bytes);
    r.truncated = true;
    r.status = ExecStatus::output_overflow;
    return r;
  }
  bool ok = (*shim)["ok"].get<bool>();
  std::string exception_class = optional_text(*shim, "exception_class");
  if (!ok) {
    r.exception = ExceptionInfo{exception_class, optional_text(*shim, "exception_message")};
    r.status = exception_class == "ShimSetupError" ? ExecStatus::setup_error : ExecStatus::runtime_error;
    if (r.status == ExecStatus::setup_error) r.detail = r.exception->message;
  }
  return r;
}

}  // namespace caco::sandbox
