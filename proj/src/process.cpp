#include "cubevid/process.hpp"
#include "cubevid/error.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace cubevid {

namespace {

class Pipe {
public:
    Pipe()
    {
        if (::pipe2(fds_, O_CLOEXEC) != 0) {
            throw Error(std::string("pipe2 failed: ") + std::strerror(errno));
        }
    }
    Pipe(const Pipe&) = delete;
    Pipe& operator=(const Pipe&) = delete;
    ~Pipe()
    {
        close_read();
        close_write();
    }

    int read_end() const { return fds_[0]; }
    int write_end() const { return fds_[1]; }
    void close_read() { close_fd(fds_[0]); }
    void close_write() { close_fd(fds_[1]); }

private:
    static void close_fd(int& fd)
    {
        if (fd >= 0) {
            ::close(fd);
            fd = -1;
        }
    }

    int fds_[2] = {-1, -1};
};

void ignore_sigpipe_once()
{
    // A child that dies early must surface as a failed exit code, not kill us.
    static const bool done = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)done;
}

void set_nonblocking(int fd)
{
    const int flags = ::fcntl(fd, F_GETFL);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

} // namespace

ProcessResult run_process(const std::vector<std::string>& argv, std::span<const char> input, bool capture_stdout)
{
    if (argv.empty()) {
        throw ConfigError("run_process: empty command");
    }
    ignore_sigpipe_once();

    Pipe in, out, err;
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in.read_end(), STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out.write_end(), STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(&actions, err.write_end(), STDERR_FILENO);

    std::vector<char*> args;
    args.reserve(argv.size() + 1);
    for (const auto& a : argv) {
        args.push_back(const_cast<char*>(a.c_str()));
    }
    args.push_back(nullptr);

    const auto start = std::chrono::steady_clock::now();
    pid_t pid = 0;
    const int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) {
        throw NotFoundError("cannot start '" + argv[0] + "': " + std::strerror(rc));
    }
    in.close_read();
    out.close_write();
    err.close_write();

    if (input.empty()) {
        in.close_write();
    } else {
        set_nonblocking(in.write_end());
    }
    set_nonblocking(out.read_end());
    set_nonblocking(err.read_end());

    ProcessResult result;
    std::size_t written = 0;
    bool out_open = true, err_open = true;
    char buffer[1 << 16];
    while (out_open || err_open || in.write_end() >= 0) {
        pollfd fds[3];
        nfds_t n = 0;
        int in_slot = -1, out_slot = -1, err_slot = -1;
        if (in.write_end() >= 0) {
            in_slot = static_cast<int>(n);
            fds[n++] = {in.write_end(), POLLOUT, 0};
        }
        if (out_open) {
            out_slot = static_cast<int>(n);
            fds[n++] = {out.read_end(), POLLIN, 0};
        }
        if (err_open) {
            err_slot = static_cast<int>(n);
            fds[n++] = {err.read_end(), POLLIN, 0};
        }
        if (::poll(fds, n, -1) < 0) {
            if (errno == EINTR) {
                continue;
            }
            break;
        }
        if (in_slot >= 0 && fds[in_slot].revents != 0) {
            if (fds[in_slot].revents & (POLLERR | POLLHUP)) {
                in.close_write();
            } else {
                const std::size_t chunk = std::min<std::size_t>(input.size() - written, 1 << 20);
                const ssize_t w = ::write(in.write_end(), input.data() + written, chunk);
                if (w > 0) {
                    written += static_cast<std::size_t>(w);
                } else if (w < 0 && errno != EAGAIN && errno != EINTR) {
                    in.close_write(); // EPIPE: child stopped reading
                }
                if (written == input.size()) {
                    in.close_write();
                }
            }
        }
        auto drain = [&](int slot, int fd, bool& open, std::string* sink) {
            if (slot < 0 || fds[slot].revents == 0) {
                return;
            }
            for (;;) {
                const ssize_t r = ::read(fd, buffer, sizeof buffer);
                if (r > 0) {
                    if (sink != nullptr) {
                        sink->append(buffer, static_cast<std::size_t>(r));
                    }
                    continue;
                }
                if (r == 0 || (errno != EAGAIN && errno != EINTR)) {
                    open = false;
                }
                return;
            }
        };
        drain(out_slot, out.read_end(), out_open, capture_stdout ? &result.out : nullptr);
        drain(err_slot, err.read_end(), err_open, &result.err);
    }

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = -WTERMSIG(status);
    }
    return result;
}

// --- limiter ---------------------------------------------------------------

ProcessLimiter::Slot::~Slot()
{
    if (owner_ != nullptr) {
        owner_->release();
    }
}

ProcessLimiter::ProcessLimiter(std::size_t limit) : limit_(std::max<std::size_t>(limit, 1)) {}

ProcessLimiter& ProcessLimiter::global()
{
    static ProcessLimiter instance([] {
        if (const char* env = std::getenv("CUBEVID_MAX_PROCS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v > 0) {
                return static_cast<std::size_t>(v);
            }
        }
        return std::max<std::size_t>(std::thread::hardware_concurrency(), 1);
    }());
    return instance;
}

void ProcessLimiter::set_limit(std::size_t limit)
{
    {
        std::lock_guard lock(mutex_);
        limit_ = std::max<std::size_t>(limit, 1);
    }
    cv_.notify_all();
}

std::size_t ProcessLimiter::limit() const
{
    std::lock_guard lock(mutex_);
    return limit_;
}

ProcessLimiter::Slot ProcessLimiter::acquire()
{
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return active_ < limit_; });
    ++active_;
    return Slot(this);
}

void ProcessLimiter::release()
{
    {
        std::lock_guard lock(mutex_);
        --active_;
    }
    cv_.notify_one();
}

// --- executable discovery --------------------------------------------------

std::optional<std::filesystem::path> find_on_path(const std::string& name)
{
    const char* path = std::getenv("PATH");
    if (path == nullptr) {
        return std::nullopt;
    }
    std::string_view rest(path);
    while (!rest.empty()) {
        const auto sep = rest.find(':');
        const auto dir = rest.substr(0, sep);
        if (!dir.empty()) {
            const auto candidate = std::filesystem::path(dir) / name;
            if (::access(candidate.c_str(), X_OK) == 0) {
                return candidate;
            }
        }
        if (sep == std::string_view::npos) {
            break;
        }
        rest.remove_prefix(sep + 1);
    }
    return std::nullopt;
}

std::filesystem::path find_encoder()
{
    if (const char* env = std::getenv("CUBEVID_FFMPEG"); env != nullptr && *env != '\0') {
        if (::access(env, X_OK) != 0) {
            throw NotFoundError(std::string("CUBEVID_FFMPEG points to '") + env + "', which is not an executable");
        }
        return env;
    }
    if (auto found = find_on_path("ffmpeg")) {
        return *found;
    }
#ifdef CUBEVID_CONFIGURED_FFMPEG
    if (::access(CUBEVID_CONFIGURED_FFMPEG, X_OK) == 0) {
        return CUBEVID_CONFIGURED_FFMPEG; // found at build time
    }
#endif
    throw NotFoundError("no ffmpeg executable found: install ffmpeg (built with libx265, libvpx and libopenjpeg) "
                        "or set CUBEVID_FFMPEG to its path");
}

std::optional<std::filesystem::path> find_raster_translator()
{
    if (const char* env = std::getenv("CUBEVID_GDAL_TRANSLATE"); env != nullptr && *env != '\0') {
        if (::access(env, X_OK) == 0) {
            return std::filesystem::path(env);
        }
        return std::nullopt;
    }
    return find_on_path("gdal_translate");
}

} // namespace cubevid
