#pragma once

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <mutex>
#include <optional>
#include <poll.h>
#include <string>
#include <string_view>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "smtlog/errors.hpp"

namespace smtlog {

/// A child process with pipes on stdin/stdout and stderr redirected to a log
/// file. Line-oriented reads support a poll(2) deadline so a wedged solver
/// can be detected and killed.
class ChildProcess {
public:
    enum class IoStatus { Ok, Timeout, Eof };

    ChildProcess() = default;
    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;
    ChildProcess(ChildProcess&& o) noexcept { *this = std::move(o); }
    ChildProcess& operator=(ChildProcess&& o) noexcept {
        if (this != &o) {
            dispose();
            pid_ = o.pid_; in_fd_ = o.in_fd_; out_fd_ = o.out_fd_;
            buf_ = std::move(o.buf_); reaped_ = o.reaped_;
            o.pid_ = -1; o.in_fd_ = -1; o.out_fd_ = -1; o.reaped_ = true;
        }
        return *this;
    }
    ~ChildProcess() { dispose(); }

    /// Spawns argv[0] with the given arguments. Throws SpawnError when the
    /// executable cannot be started (reported through a CLOEXEC pipe, so a
    /// missing binary fails here rather than at first write).
    static ChildProcess spawn(const std::vector<std::string>& argv,
                              const std::string& stderr_path = {}) {
        if (argv.empty()) throw SpawnError("empty solver command");
        static std::once_flag sigpipe_once;
        std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });

        int to_child[2], from_child[2], err_pipe[2];
        if (::pipe(to_child) != 0 || ::pipe(from_child) != 0 || ::pipe(err_pipe) != 0)
            throw SpawnError("pipe() failed: " + std::string(std::strerror(errno)));
        ::fcntl(err_pipe[1], F_SETFD, FD_CLOEXEC);

        pid_t pid = ::fork();
        if (pid < 0)
            throw SpawnError("fork() failed: " + std::string(std::strerror(errno)));
        if (pid == 0) {
            ::dup2(to_child[0], 0);
            ::dup2(from_child[1], 1);
            int errfd = ::open(stderr_path.empty() ? "/dev/null" : stderr_path.c_str(),
                               O_WRONLY | O_CREAT | O_APPEND, 0644);
            if (errfd >= 0) ::dup2(errfd, 2);
            ::close(to_child[0]); ::close(to_child[1]);
            ::close(from_child[0]); ::close(from_child[1]);
            ::close(err_pipe[0]);
            std::vector<char*> cargv;
            for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
            cargv.push_back(nullptr);
            ::execvp(cargv[0], cargv.data());
            int err = errno;
            ssize_t ignored = ::write(err_pipe[1], &err, sizeof err);
            (void)ignored;
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        ::close(err_pipe[1]);

        int exec_errno = 0;
        ssize_t n = ::read(err_pipe[0], &exec_errno, sizeof exec_errno);
        ::close(err_pipe[0]);
        if (n > 0) {
            ::close(to_child[1]);
            ::close(from_child[0]);
            int status;
            ::waitpid(pid, &status, 0);
            throw SpawnError("cannot execute '" + argv[0] +
                             "': " + std::strerror(exec_errno));
        }

        ChildProcess p;
        p.pid_ = pid;
        p.in_fd_ = to_child[1];
        p.out_fd_ = from_child[0];
        p.reaped_ = false;
        return p;
    }

    pid_t pid() const { return pid_; }

    bool running() const { return pid_ > 0 && !reaped_; }

    /// False when the pipe is closed (child exited).
    bool write_all(std::string_view data) {
        if (in_fd_ < 0) return false;
        size_t off = 0;
        while (off < data.size()) {
            ssize_t n = ::write(in_fd_, data.data() + off, data.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            off += static_cast<size_t>(n);
        }
        return true;
    }

    /// Reads one LF-terminated line (without the terminator). No deadline
    /// when `deadline` is nullopt.
    IoStatus read_line(std::string& out,
                       std::optional<std::chrono::milliseconds> deadline) {
        auto until = deadline
                         ? std::optional(std::chrono::steady_clock::now() + *deadline)
                         : std::nullopt;
        while (true) {
            size_t nl = buf_.find('\n');
            if (nl != std::string::npos) {
                out = buf_.substr(0, nl);
                if (!out.empty() && out.back() == '\r') out.pop_back();
                buf_.erase(0, nl + 1);
                return IoStatus::Ok;
            }
            IoStatus s = fill(until);
            if (s != IoStatus::Ok) {
                if (s == IoStatus::Eof && !buf_.empty()) {
                    out = std::exchange(buf_, {});
                    return IoStatus::Ok; // final unterminated line
                }
                return s;
            }
        }
    }

    /// Reads text until the parentheses opened by the first '(' balance.
    /// Used for multi-line responses such as get-model.
    IoStatus read_balanced(std::string& out,
                           std::optional<std::chrono::milliseconds> deadline) {
        auto until = deadline
                         ? std::optional(std::chrono::steady_clock::now() + *deadline)
                         : std::nullopt;
        out.clear();
        int depth = 0;
        bool seen_open = false, in_string = false;
        size_t scanned = 0;
        while (true) {
            for (; scanned < buf_.size(); ++scanned) {
                char c = buf_[scanned];
                if (in_string) {
                    if (c == '"') in_string = false;
                    continue;
                }
                if (c == '"') in_string = true;
                else if (c == '(') { ++depth; seen_open = true; }
                else if (c == ')') --depth;
                if (seen_open && depth == 0) {
                    out = buf_.substr(0, scanned + 1);
                    buf_.erase(0, scanned + 1);
                    return IoStatus::Ok;
                }
            }
            IoStatus s = fill(until);
            if (s != IoStatus::Ok) return s;
        }
    }

    /// True while the child has not exited.
    bool alive() {
        if (pid_ <= 0 || reaped_) return false;
        int status;
        pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == pid_ || (r < 0 && errno == ECHILD)) {
            reaped_ = true;
            return false;
        }
        return true;
    }

    /// SIGKILL and reap.
    void kill_now() {
        if (pid_ > 0 && !reaped_) {
            ::kill(pid_, SIGKILL);
            int status;
            ::waitpid(pid_, &status, 0);
            reaped_ = true;
        }
        close_fds();
    }

    /// Closes stdin (the solver should exit on EOF / (exit)), waits up to
    /// `grace`, then kills.
    void shutdown(std::chrono::milliseconds grace) {
        if (in_fd_ >= 0) {
            ::close(in_fd_);
            in_fd_ = -1;
        }
        auto until = std::chrono::steady_clock::now() + grace;
        while (pid_ > 0 && !reaped_) {
            int status;
            pid_t r = ::waitpid(pid_, &status, WNOHANG);
            if (r == pid_ || (r < 0 && errno == ECHILD)) {
                reaped_ = true;
                break;
            }
            if (std::chrono::steady_clock::now() >= until) {
                kill_now();
                break;
            }
            ::usleep(2000);
        }
        close_fds();
    }

private:
    void close_fds() {
        if (in_fd_ >= 0) { ::close(in_fd_); in_fd_ = -1; }
        if (out_fd_ >= 0) { ::close(out_fd_); out_fd_ = -1; }
    }

    void dispose() {
        if (pid_ > 0 && !reaped_) kill_now();
        close_fds();
    }

    IoStatus fill(std::optional<std::chrono::steady_clock::time_point> until) {
        if (out_fd_ < 0) return IoStatus::Eof;
        int wait_ms = -1;
        if (until) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                *until - std::chrono::steady_clock::now());
            wait_ms = static_cast<int>(std::max<int64_t>(0, left.count()));
        }
        struct pollfd pfd{out_fd_, POLLIN, 0};
        int pr = ::poll(&pfd, 1, wait_ms);
        if (pr == 0) return IoStatus::Timeout;
        if (pr < 0) {
            if (errno == EINTR) return IoStatus::Ok; // retry via caller loop
            return IoStatus::Eof;
        }
        char chunk[4096];
        ssize_t n = ::read(out_fd_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR) return IoStatus::Ok;
            return IoStatus::Eof;
        }
        if (n == 0) return IoStatus::Eof;
        buf_.append(chunk, static_cast<size_t>(n));
        return IoStatus::Ok;
    }

    pid_t pid_ = -1;
    int in_fd_ = -1;
    int out_fd_ = -1;
    std::string buf_;
    bool reaped_ = true;
};

} // namespace smtlog
