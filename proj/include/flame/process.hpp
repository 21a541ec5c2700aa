#pragma once

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include "flame/error.hpp"
#include "flame/util.hpp"

namespace flame {

struct ProcessLimits {
    long long wall_time_ms = 0; // 0 = unlimited
    int address_space_mb = 0;   // 0 = unlimited; RLIMIT_AS in the child
};

struct ProcessResult {
    int exit_code = -1;
    int term_signal = 0; // nonzero when killed by a signal
    bool timed_out = false;
    long long wall_time_ms = 0;
    long peak_rss_mb = -1; // sampled VmHWM; -1 when never observed

    bool normal_exit() const { return !timed_out && term_signal == 0; }
};

namespace detail {

// Current RSS metric from /proc/<pid>/status, in kB; -1 when unavailable.
// Prefers the kernel's own high-water mark (VmHWM); kernels that omit it get
// VmRSS, and the caller keeps the max across samples. Sampling is the only
// per-child peak that survives fork inheriting the parent's RSS (exec resets
// the counters for the new image).
inline long read_rss_kb(pid_t pid) {
    std::ifstream in("/proc/" + std::to_string(pid) + "/status");
    if (!in) return -1;
    long vm_rss = -1;
    std::string line;
    while (std::getline(in, line)) {
        long kb = -1;
        if (line.rfind("VmHWM:", 0) == 0 && std::sscanf(line.c_str() + 6, "%ld", &kb) == 1) {
            return kb;
        }
        if (line.rfind("VmRSS:", 0) == 0 && std::sscanf(line.c_str() + 6, "%ld", &kb) == 1) {
            vm_rss = kb;
        }
    }
    return vm_rss;
}

} // namespace detail

// fork/exec with redirected stdio, wall-clock enforcement by polling, and
// peak-RSS accounting via wait4. Throws EnvironmentError when the command
// cannot be spawned (missing binary, bad workdir).
inline ProcessResult run_process(const std::vector<std::string>& argv,
                                 const fs::path& workdir,
                                 const std::optional<fs::path>& stdin_file,
                                 const std::optional<fs::path>& stdout_file,
                                 const std::optional<fs::path>& stderr_file,
                                 const ProcessLimits& limits = {}) {
    if (argv.empty()) throw EnvironmentError("empty command");

    int err_pipe[2];
    if (pipe2(err_pipe, O_CLOEXEC) != 0) throw EnvironmentError("pipe failed");

    pid_t pid = fork();
    if (pid < 0) {
        close(err_pipe[0]);
        close(err_pipe[1]);
        throw EnvironmentError("fork failed");
    }

    if (pid == 0) {
        close(err_pipe[0]);
        auto die = [&](const char* what) {
            int e = errno;
            std::string msg = std::string(what) + ": " + std::strerror(e);
            ssize_t ignored = write(err_pipe[1], msg.data(), msg.size());
            (void)ignored;
            _exit(127);
        };
        setpgid(0, 0); // own process group so the whole tree can be killed
        if (chdir(workdir.c_str()) != 0) die("chdir");

        auto redirect = [&](const std::optional<fs::path>& file, int fd, int flags) {
            if (!file) return;
            int f = open(file->c_str(), flags, 0644);
            if (f < 0) die("open");
            if (dup2(f, fd) < 0) die("dup2");
            close(f);
        };
        redirect(stdin_file, 0, O_RDONLY);
        redirect(stdout_file, 1, O_WRONLY | O_CREAT | O_TRUNC);
        if (stderr_file && stdout_file && *stderr_file == *stdout_file) {
            if (dup2(1, 2) < 0) die("dup2");
        } else {
            redirect(stderr_file, 2, O_WRONLY | O_CREAT | O_TRUNC);
        }

        if (limits.address_space_mb > 0) {
            rlimit rl{};
            rl.rlim_cur = rl.rlim_max =
                static_cast<rlim_t>(limits.address_space_mb) * 1024 * 1024;
            setrlimit(RLIMIT_AS, &rl);
        }
        rlimit core{0, 0};
        setrlimit(RLIMIT_CORE, &core);

        std::vector<char*> cargv;
        cargv.reserve(argv.size() + 1);
        for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);
        execvp(cargv[0], cargv.data());
        die("exec");
    }

    close(err_pipe[1]);
    char buf[256];
    // EOF arrives when exec succeeds (O_CLOEXEC); from here on every VmHWM
    // sample belongs to the new image, not the forked copy of this process.
    ssize_t got = read(err_pipe[0], buf, sizeof(buf) - 1);
    close(err_pipe[0]);
    if (got > 0) {
        buf[got] = '\0';
        waitpid(pid, nullptr, 0);
        throw EnvironmentError("cannot run '" + argv[0] + "': " + buf);
    }

    ProcessResult result;
    const auto start = std::chrono::steady_clock::now();
    auto elapsed_ms = [&]() {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - start)
            .count();
    };

    int status = 0;
    long peak_kb = -1;
    for (;;) {
        pid_t done = waitpid(pid, &status, WNOHANG);
        if (done == pid) break;
        if (done < 0) throw EnvironmentError("wait failed");
        peak_kb = std::max(peak_kb, detail::read_vm_hwm_kb(pid));
        if (limits.wall_time_ms > 0 && elapsed_ms() > limits.wall_time_ms) {
            result.timed_out = true;
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }

    result.wall_time_ms = elapsed_ms();
    result.peak_rss_mb = peak_kb >= 0 ? peak_kb / 1024 : -1;
    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.term_signal = WTERMSIG(status);
    }
    return result;
}

} // namespace flame
