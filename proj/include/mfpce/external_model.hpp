#pragma once

/**
 * @file external_model.hpp
 * @brief Black-box models run as child processes (POSIX).
 *
 * Wire protocol, line oriented: the request is one line of space-separated physical
 * coordinates (17 significant digits) written to the child's stdin; the response is
 * one line on its stdout holding a single decimal. "nan"/"inf" responses are errors.
 *
 *  - oneshot:   one process per request; stdin is closed after the request line.
 *  - streaming: one long-lived process answers request lines in order until its
 *               stdin is closed.
 */

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <memory>
#include <optional>
#include <mutex>
#include <span>
#include <string>
#include <utility>

#include "mfpce/errors.hpp"
#include "mfpce/models.hpp"

namespace mfpce {

enum class ProtocolMode { Oneshot, Streaming };

inline const char* to_string(ProtocolMode mode) {
  return mode == ProtocolMode::Oneshot ? "oneshot" : "streaming";
}

namespace detail {

class ChildProcess {
 public:
  explicit ChildProcess(const std::string& command) {
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe(in_pipe) != 0) throw ModelError("pipe() failed: " + std::string(std::strerror(errno)));
    if (::pipe(out_pipe) != 0) {
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      throw ModelError("pipe() failed: " + std::string(std::strerror(errno)));
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
      throw ModelError("fork() failed: " + std::string(std::strerror(errno)));
    }
    if (pid_ == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ~ChildProcess() {
    close_input();
    if (from_child_ >= 0) ::close(from_child_);
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  bool write_line(const std::string& line) {
    std::string buf = line + '\n';
    const char* p = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
      const ssize_t n = ::write(to_child_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
    return true;
  }

  /// Next line from the child's stdout, or nullopt at EOF.
  std::optional<std::string> read_line() {
    while (true) {
      const auto nl = pending_.find('\n');
      if (nl != std::string::npos) {
        std::string line = pending_.substr(0, nl);
        pending_.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        if (pending_.empty()) return std::nullopt;
        std::string line;
        line.swap(pending_);
        return line;
      }
      pending_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void close_input() {
    if (to_child_ >= 0) {
      ::close(to_child_);
      to_child_ = -1;
    }
  }

  /// Waits for exit; returns the exit status (or 128 + signal).
  int wait() {
    close_input();
    int status = 0;
    if (pid_ > 0 && ::waitpid(pid_, &status, 0) == pid_) {
      pid_ = -1;
      if (WIFEXITED(status)) return WEXITSTATUS(status);
      if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    }
    return -1;
  }

 private:
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string pending_;
};

inline void ignore_sigpipe() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline double parse_response(const std::string& raw, std::span<const double> xi) {
  const std::string text = trim(raw);
  std::size_t used = 0;
  double y = 0.0;
  try {
    y = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ModelError("malformed response '" + raw + "' at (" + format_point(xi) + ")");
  }
  if (used != text.size()) throw ModelError("malformed response '" + raw + "' at (" + format_point(xi) + ")");
  if (!std::isfinite(y)) throw ModelError("non-finite output '" + raw + "' at (" + format_point(xi) + ")");
  return y;
}

}  // namespace detail

/// Evaluates `command` once per call through a fresh process.
inline double external_oneshot(const std::string& command, std::span<const double> xi) {
  detail::ignore_sigpipe();
  detail::ChildProcess child(command);
  const bool wrote = child.write_line(format_point(xi));
  child.close_input();
  auto line = child.read_line();
  const int status = child.wait();
  if (status != 0) {
    throw ModelError("external model '" + command + "' exited with status " + std::to_string(status) +
                     " at (" + format_point(xi) + "); response: '" + line.value_or("") + "'");
  }
  if (!wrote || !line) {
    throw ModelError("external model '" + command + "' produced no response at (" + format_point(xi) + ")");
  }
  return detail::parse_response(*line, xi);
}

/// One long-lived child answering request lines in order. Calls are serialized.
class StreamingModel {
 public:
  explicit StreamingModel(std::string command) : command_(std::move(command)) {}

  double operator()(std::span<const double> xi) {
    std::lock_guard<std::mutex> lock(mutex_);
    detail::ignore_sigpipe();
    if (!child_) child_ = std::make_unique<detail::ChildProcess>(command_);
    auto fail = [&](const std::string& what) {
      child_.reset();
      return ModelError("external model '" + command_ + "' " + what + " at (" + format_point(xi) + ")");
    };
    if (!child_->write_line(format_point(xi))) throw fail("closed its input");
    auto line = child_->read_line();
    if (!line) throw fail("produced no response");
    return detail::parse_response(*line, xi);
  }

 private:
  std::string command_;
  std::mutex mutex_;
  std::unique_ptr<detail::ChildProcess> child_;
};

/// Model backed by an external executable.
inline Model external_model(std::string id, const std::string& command, Fidelity fidelity, ProtocolMode mode,
                            double cost_unit = 1.0) {
  ModelFn fn;
  if (mode == ProtocolMode::Oneshot) {
    fn = [command](std::span<const double> xi) { return external_oneshot(command, xi); };
  } else {
    auto stream = std::make_shared<StreamingModel>(command);
    fn = [stream](std::span<const double> xi) { return (*stream)(xi); };
  }
  return Model{std::move(id), fidelity, std::move(fn), cost_unit};
}

}  // namespace mfpce
