// SPDX-License-Identifier: Apache-2.0
#include "phaseopt/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <thread>

#include "phaseopt/error.hpp"

extern char** environ;

namespace phaseopt {

CommandTemplate::CommandTemplate(std::vector<std::string> argv) : argv_(std::move(argv)) {}

CommandTemplate CommandTemplate::parse(std::string_view text) {
  std::vector<std::string> argv;
  std::string cur;
  bool in_arg = false;
  char quote = 0;
  for (char c : text) {
    if (quote) {
      if (c == quote) quote = 0;
      else cur.push_back(c);
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
      in_arg = true;
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (in_arg) {
        argv.push_back(std::move(cur));
        cur.clear();
        in_arg = false;
      }
    } else {
      cur.push_back(c);
      in_arg = true;
    }
  }
  if (quote) throw ConfigError("unterminated quote in command \"" + std::string(text) + "\"");
  if (in_arg) argv.push_back(std::move(cur));
  return CommandTemplate(std::move(argv));
}

std::size_t CommandTemplate::count(std::string_view name) const {
  const std::string needle = "{" + std::string(name) + "}";
  std::size_t n = 0;
  for (const auto& a : argv_) {
    for (auto pos = a.find(needle); pos != std::string::npos; pos = a.find(needle, pos + 1)) ++n;
  }
  return n;
}

std::vector<std::string> CommandTemplate::render(
    const std::map<std::string, std::string>& values) const {
  std::vector<std::string> out;
  out.reserve(argv_.size());
  for (const auto& a : argv_) {
    std::string r;
    std::size_t i = 0;
    while (i < a.size()) {
      if (a[i] == '{') {
        const auto close = a.find('}', i);
        if (close != std::string::npos) {
          const auto it = values.find(a.substr(i + 1, close - i - 1));
          if (it != values.end()) {
            r += it->second;
            i = close + 1;
            continue;
          }
        }
      }
      r.push_back(a[i++]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string CommandTemplate::display() const {
  std::string s;
  for (const auto& a : argv_) {
    if (!s.empty()) s.push_back(' ');
    s += a;
  }
  return s;
}

std::string ProcessResult::describe() const {
  if (timed_out) return "timeout";
  if (signal != 0) return "killed by signal " + std::to_string(signal);
  return "exit status " + std::to_string(exit_code);
}

namespace {

std::atomic<std::uint64_t> g_spawns{0};

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

struct Fd {
  int fd = -1;
  Fd() = default;
  explicit Fd(int f) : fd(f) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

void make_pipe(Fd& r, Fd& w) {
  int p[2];
  if (::pipe2(p, O_CLOEXEC) != 0) throw InfraError(std::string("pipe: ") + std::strerror(errno));
  r.fd = p[0];
  w.fd = p[1];
}

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

bool is_executable(const std::string& path) {
  struct stat st{};
  return ::stat(path.c_str(), &st) == 0 && S_ISREG(st.st_mode) && ::access(path.c_str(), X_OK) == 0;
}

constexpr std::size_t kMaxCapture = 64u << 20;

}  // namespace

bool command_exists(std::string_view name) {
  if (name.empty()) return false;
  const std::string n(name);
  if (n.find('/') != std::string::npos) return is_executable(n);
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::string_view p(path);
  std::size_t start = 0;
  while (start <= p.size()) {
    auto end = p.find(':', start);
    if (end == std::string_view::npos) end = p.size();
    std::string dir(p.substr(start, end - start));
    if (dir.empty()) dir = ".";
    if (is_executable(dir + "/" + n)) return true;
    start = end + 1;
  }
  return false;
}

std::uint64_t spawn_count() noexcept { return g_spawns.load(); }

ProcessResult run_process(const std::vector<std::string>& argv, std::string_view input,
                          std::chrono::milliseconds timeout) {
  if (argv.empty()) throw InfraError("empty command");
  ignore_sigpipe();

  Fd in_r, in_w, out_r, out_w, err_r, err_w;
  make_pipe(in_r, in_w);
  make_pipe(out_r, out_w);
  make_pipe(err_r, err_w);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_r.fd, 0);
  posix_spawn_file_actions_adddup2(&actions, out_w.fd, 1);
  posix_spawn_file_actions_adddup2(&actions, err_w.fd, 2);

  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  sigset_t defaults;
  sigemptyset(&defaults);
  sigaddset(&defaults, SIGPIPE);
  sigset_t empty_mask;
  sigemptyset(&empty_mask);
  posix_spawnattr_setsigdefault(&attr, &defaults);
  posix_spawnattr_setsigmask(&attr, &empty_mask);
  posix_spawnattr_setpgroup(&attr, 0);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP | POSIX_SPAWN_SETSIGDEF |
                                      POSIX_SPAWN_SETSIGMASK);

  std::vector<char*> cargv;
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, cargv[0], &actions, &attr, cargv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  if (rc != 0) {
    throw InfraError("cannot spawn \"" + argv[0] + "\": " + std::strerror(rc));
  }
  ++g_spawns;

  in_r.reset();
  out_w.reset();
  err_w.reset();
  set_nonblocking(in_w.fd);
  set_nonblocking(out_r.fd);
  set_nonblocking(err_r.fd);

  ProcessResult res;
  std::size_t written = 0;
  if (input.empty()) in_w.reset();

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  auto remaining_ms = [&] {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    return std::max<long long>(0, left.count());
  };

  char buf[65536];
  while (out_r.fd >= 0 || err_r.fd >= 0 || in_w.fd >= 0) {
    const long long left = remaining_ms();
    if (left == 0) {
      res.timed_out = true;
      break;
    }
    pollfd fds[3];
    int nfds = 0;
    int idx_in = -1, idx_out = -1, idx_err = -1;
    if (in_w.fd >= 0) { idx_in = nfds; fds[nfds++] = {in_w.fd, POLLOUT, 0}; }
    if (out_r.fd >= 0) { idx_out = nfds; fds[nfds++] = {out_r.fd, POLLIN, 0}; }
    if (err_r.fd >= 0) { idx_err = nfds; fds[nfds++] = {err_r.fd, POLLIN, 0}; }
    const int pr = ::poll(fds, static_cast<nfds_t>(nfds), static_cast<int>(std::min<long long>(left, 1000)));
    if (pr < 0) {
      if (errno == EINTR) continue;
      throw InfraError(std::string("poll: ") + std::strerror(errno));
    }
    if (idx_in >= 0 && fds[idx_in].revents) {
      if (fds[idx_in].revents & (POLLERR | POLLHUP)) {
        in_w.reset();
      } else {
        const ssize_t n = ::write(in_w.fd, input.data() + written, input.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        else if (n < 0 && errno != EAGAIN && errno != EINTR) in_w.reset();
        if (written == input.size()) in_w.reset();
      }
    }
    auto drain = [&](int idx, Fd& fd, std::string& sink) {
      if (idx < 0 || !fds[idx].revents) return;
      const ssize_t n = ::read(fd.fd, buf, sizeof buf);
      if (n > 0) {
        if (sink.size() < kMaxCapture) sink.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || (errno != EAGAIN && errno != EINTR)) {
        fd.reset();
      }
    };
    drain(idx_out, out_r, res.out);
    drain(idx_err, err_r, res.err);
  }

  int status = 0;
  if (!res.timed_out) {
    // Pipes are closed; the child may still be running.
    while (true) {
      const pid_t w = ::waitpid(pid, &status, WNOHANG);
      if (w == pid) break;
      if (w < 0 && errno != EINTR) throw InfraError(std::string("waitpid: ") + std::strerror(errno));
      if (remaining_ms() == 0) {
        res.timed_out = true;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }
  if (res.timed_out) {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    return res;
  }
  if (WIFEXITED(status)) {
    res.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    res.signal = WTERMSIG(status);
  }
  return res;
}

}  // namespace phaseopt
