#pragma once

#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cubevid {

struct ProcessResult {
    int exit_code = -1;       // negative: killed by signal -exit_code
    std::string out;          // captured stdout (empty unless requested)
    std::string err;          // captured stderr
    double wall_seconds = 0.0; // spawn to reap
};

/// Runs argv[0] (looked up on PATH), feeding `input` to its stdin and
/// collecting stdout/stderr concurrently so that neither pipe can stall.
ProcessResult run_process(const std::vector<std::string>& argv, std::span<const char> input = {},
                          bool capture_stdout = true);

/// Caps the number of child processes alive at once across all threads.
class ProcessLimiter {
public:
    class Slot {
    public:
        explicit Slot(ProcessLimiter* owner) : owner_(owner) {}
        Slot(Slot&& other) noexcept : owner_(std::exchange(other.owner_, nullptr)) {}
        Slot& operator=(Slot&&) = delete;
        ~Slot();

    private:
        ProcessLimiter* owner_;
    };

    explicit ProcessLimiter(std::size_t limit);

    /// Shared instance; the cap defaults to the hardware concurrency and can be
    /// overridden with CUBEVID_MAX_PROCS.
    static ProcessLimiter& global();

    void set_limit(std::size_t limit);
    std::size_t limit() const;
    Slot acquire();

private:
    void release();

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t limit_;
    std::size_t active_ = 0;
};

std::optional<std::filesystem::path> find_on_path(const std::string& name);

/// ffmpeg executable from CUBEVID_FFMPEG or PATH. Throws NotFoundError with
/// instructions when neither yields one.
std::filesystem::path find_encoder();

/// gdal_translate from CUBEVID_GDAL_TRANSLATE or PATH, if any.
std::optional<std::filesystem::path> find_raster_translator();

} // namespace cubevid
