#include "cubevid/container.hpp"
#include "cubevid/video.hpp"

#include <atomic>
#include <chrono>
#include <future>
#include <sstream>

#include <unistd.h>

namespace cubevid {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string video_file_name(const std::string& stream, std::size_t index, bool per_frame)
{
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "_%04zu", index);
    return stream + suffix + (per_frame ? "" : ".mkv");
}

struct FilledStream {
    DataCube work;                          // only the stream's variables, filled
    std::map<std::string, Variable> masks;  // mask variable name -> mask
    FillEntry fill;
};

FilledStream fill_stream(const DataCube& cube, const std::vector<std::string>& names, const AxisOrder& axes,
                         double leading_fill)
{
    FilledStream out;
    out.fill.leading_fill = leading_fill;
    for (const auto& name : names) {
        const auto& var = cube.variable(name);
        auto filled = forward_fill_time(var, axes.time, leading_fill);
        const std::size_t synthesized = filled.mask.synthesized_count();
        if (synthesized > 0) {
            const auto mname = mask_name(name);
            Variable mask;
            mask.axes = var.axes;
            mask.dtype = DType::uint8;
            mask.values = NdArray(var.values.shape());
            std::copy(filled.mask.observed.begin(), filled.mask.observed.end(), mask.values.storage().begin());
            mask.attrs["comment"] = std::string("1 where ") + name + " was observed, 0 where it was filled forward";
            out.masks.emplace(mname, std::move(mask));
            out.fill.masks[name] = mname;
            out.fill.synthesized += synthesized;
        }
        out.work.add_variable(name, Variable{var.axes, std::move(filled.values), var.dtype, var.attrs});
    }
    return out;
}

fs::path temp_sibling(const fs::path& target)
{
    static std::atomic<unsigned> counter{0};
    const auto parent = target.has_parent_path() ? target.parent_path() : fs::path(".");
    return parent / ("." + target.filename().string() + ".tmp-" + std::to_string(::getpid()) + "-" +
                     std::to_string(counter++));
}

template <typename T>
std::vector<T> wait_all(std::vector<std::future<T>>& futures)
{
    // Every task is awaited before the first error is rethrown, so no task
    // outlives the data it reads.
    std::vector<T> results;
    std::exception_ptr first;
    for (auto& f : futures) {
        try {
            results.push_back(f.get());
        } catch (...) {
            if (!first) {
                first = std::current_exception();
            }
            results.emplace_back();
        }
    }
    if (first) {
        std::rethrow_exception(first);
    }
    return results;
}

} // namespace

std::string mask_name(const std::string& variable)
{
    return variable + "_valid";
}

CompressResult compress_cube(const DataCube& cube, const std::vector<MappingRule>& rules, const fs::path& out_dir,
                             const CompressOptions& options)
{
    const auto start = Clock::now();
    const ValidatedPlan plan = validate_rules(rules, cube);
    if (fs::exists(out_dir) && !options.overwrite) {
        throw ConfigError("output " + out_dir.string() + " already exists");
    }

    CompressResult result;
    Manifest& manifest = result.manifest;
    manifest.attrs = cube.attrs();

    DataCube residual;
    for (const auto& [name, len] : cube.dims()) {
        residual.declare_dim(name, len);
    }
    for (const auto& [name, coord] : cube.coords()) {
        residual.set_coord(name, coord);
    }
    residual.attrs() = cube.attrs();
    for (const auto& name : plan.residual_variables) {
        residual.add_variable(name, cube.variable(name));
    }

    const fs::path tmp = temp_sibling(out_dir);
    fs::create_directories(tmp);
    std::vector<std::future<EncodeStats>> futures;
    std::vector<std::pair<std::size_t, std::size_t>> owners; // (stream, video) per future
    std::vector<Clock::time_point> stream_start;
    try {
        for (const auto& sp : plan.streams) {
            const auto& rule = sp.rule;
            auto filled = fill_stream(cube, rule.input_vars, rule.axes, rule.leading_fill);
            for (auto& [mname, mask] : filled.masks) {
                if (cube.has_variable(mname) || residual.has_variable(mname)) {
                    throw ConfigError("cannot store the validity mask of stream '" + rule.stream_name + "' as '" +
                                      mname + "': a variable of that name exists");
                }
                residual.add_variable(mname, std::move(mask));
            }

            StreamEntry entry;
            entry.name = rule.stream_name;
            entry.axes = rule.axes;
            entry.channels = sp.channels;
            entry.frames = sp.tyx[0];
            entry.height = sp.tyx[1];
            entry.width = sp.tyx[2];
            entry.bit_depth = rule.bit_depth;
            entry.fill = filled.fill;
            entry.clamp = rule.clamp;
            for (const auto& name : rule.input_vars) {
                const auto& var = cube.variable(name);
                entry.variables.push_back({name, var.axes, var.values.shape(), var.dtype, var.attrs});
            }

            VideoSelection sel = select_for_video(filled.work, rule.input_vars, rule.axes);
            NdArray coded = std::move(sel.array);
            if (rule.n_pcs > 0) {
                PcaModel pca = pca_fit(coded, rule.n_pcs);
                if (!rule.qualities.empty()) {
                    for (std::size_t k = 0; k < pca.n_components(); ++k) {
                        pca.per_component_quality.push_back(rule.qualities[k / 3]);
                    }
                }
                coded = pca_forward(coded, pca);
                entry.pca = std::move(pca);
            }
            entry.quant = fit_quant(coded, rule.bit_depth);
            const SampleArray samples = quantize(coded, entry.quant, rule.clamp);

            const std::size_t s_index = manifest.streams.size();
            stream_start.push_back(Clock::now());
            for (std::size_t v = 0; v < sp.groups.size(); ++v) {
                const auto& group = sp.groups[v];
                const auto& cfg = sp.video_configs[v];
                VideoEntry ve;
                ve.file = video_file_name(rule.stream_name, group.video_index, cfg.per_frame());
                ve.index = group.video_index;
                ve.members = group.members;
                ve.n_real = group.n_real;
                ve.planes = rule.monochrome ? 1 : 3;
                ve.pixel_format = pixel_format(cfg.codec, cfg.bit_depth, ve.planes);
                ve.codec = cfg;
                ve.quality = rule.qualities.empty() ? std::string() : rule.qualities[v];

                std::vector<std::size_t> slots(group.members.begin(), group.members.begin() + ve.planes);
                FrameStack frames = pack_planes(samples, slots, rule.bit_depth);
                VideoTags tags;
                if (options.write_tags) {
                    tags = {{"CUBEVID_STREAM", rule.stream_name},
                            {"CUBEVID_VIDEO_INDEX", std::to_string(group.video_index)},
                            {"CUBEVID_BIT_DEPTH", std::to_string(rule.bit_depth)},
                            {"CUBEVID_FRAMES", std::to_string(entry.frames)},
                            {"CUBEVID_N_REAL", std::to_string(group.n_real)}};
                }
                const fs::path target = tmp / ve.file;
                futures.push_back(std::async(std::launch::async,
                                             [frames = std::move(frames), cfg, target, tags = std::move(tags)] {
                                                 return cfg.per_frame() ? encode_frames_image(frames, cfg, target)
                                                                        : encode_video(frames, cfg, target, tags);
                                             }));
                owners.emplace_back(s_index, v);
                entry.videos.push_back(std::move(ve));
            }
            manifest.streams.push_back(std::move(entry));
            result.timings.push_back({rule.stream_name, 0.0, 0.0});
        }

        write_netcdf(residual, tmp / manifest.residual, options.residual);
        const auto stats = wait_all(futures);
        std::vector<Clock::time_point> stream_end(manifest.streams.size(), Clock::now());
        for (std::size_t i = 0; i < stats.size(); ++i) {
            const auto [s, v] = owners[i];
            manifest.streams[s].videos[v].bytes = stats[i].bytes_written;
            result.timings[s].child_seconds += stats[i].wall_seconds;
        }
        for (std::size_t s = 0; s < manifest.streams.size(); ++s) {
            result.timings[s].wall_seconds =
                std::chrono::duration<double>(stream_end[s] - stream_start[s]).count();
        }
        write_manifest(manifest, tmp / k_manifest_file);
        result.residual_bytes = fs::file_size(tmp / manifest.residual);

        if (fs::exists(out_dir)) {
            fs::remove_all(out_dir);
        }
        fs::rename(tmp, out_dir);
    } catch (...) {
        for (auto& f : futures) {
            if (f.valid()) {
                f.wait();
            }
        }
        std::error_code ec;
        fs::remove_all(tmp, ec);
        throw;
    }
    result.wall_seconds = seconds_since(start);
    return result;
}

DecompressResult decompress_cube_timed(const fs::path& dir)
{
    const auto start = Clock::now();
    if (!fs::is_directory(dir)) {
        throw NotFoundError(dir.string() + " is not a container directory");
    }
    const Manifest manifest = read_manifest(dir / k_manifest_file);
    const fs::path residual_path = dir / manifest.residual;
    if (!fs::is_regular_file(residual_path)) {
        throw NotFoundError("residual store " + residual_path.string() + " is missing");
    }

    // Check every listed file up front so that a missing one is reported by
    // stream before any decoding starts.
    for (const auto& s : manifest.streams) {
        for (const auto& v : s.videos) {
            const fs::path p = dir / v.file;
            if (v.codec.per_frame() ? !fs::is_directory(p) : !fs::is_regular_file(p)) {
                throw NotFoundError("stream '" + s.name + "': video " + v.file + " is missing from " + dir.string());
            }
        }
    }

    DecompressResult result;
    result.cube = read_netcdf(residual_path);
    result.cube.attrs() = manifest.attrs;

    for (const auto& s : manifest.streams) {
        if (s.videos.empty()) {
            throw FormatError("stream '" + s.name + "' lists no videos");
        }
        std::vector<std::future<DecodedFrames>> futures;
        for (const auto& v : s.videos) {
            const FrameGeometry g{s.frames, s.height, s.width, v.planes, v.codec.bit_depth};
            if (v.codec.bit_depth != s.bit_depth) {
                throw FormatError("stream '" + s.name + "': video " + v.file + " is " +
                                  std::to_string(v.codec.bit_depth) + "-bit, stream is " +
                                  std::to_string(s.bit_depth));
            }
            const fs::path p = dir / v.file;
            const bool per_frame = v.codec.per_frame();
            futures.push_back(std::async(std::launch::async, [p, g, per_frame] {
                return per_frame ? decode_frames_image(p, g) : decode_video(p, g);
            }));
        }
        std::vector<DecodedFrames> decoded;
        try {
            decoded = wait_all(futures);
        } catch (const Error& e) {
            throw CodecError("stream '" + s.name + "': " + e.what());
        }

        SampleArray samples({s.frames, s.height, s.width, s.coded_channels()});
        double decode_seconds = 0.0;
        for (std::size_t i = 0; i < s.videos.size(); ++i) {
            const auto& v = s.videos[i];
            std::vector<std::size_t> real(v.members.begin(), v.members.begin() + v.n_real);
            for (const auto c : real) {
                if (c >= s.coded_channels()) {
                    throw FormatError("stream '" + s.name + "': video " + v.file + " maps to channel " +
                                      std::to_string(c) + " of " + std::to_string(s.coded_channels()));
                }
            }
            if (v.planes < real.size()) {
                throw FormatError("stream '" + s.name + "': video " + v.file + " has fewer planes than channels");
            }
            unpack_planes(decoded[i].frames, real, samples);
            decode_seconds += decoded[i].stats.wall_seconds;
        }

        NdArray values = dequantize(samples, s.quant);
        if (s.pca) {
            values = pca_inverse(values, *s.pca);
        }
        std::map<std::string, VariableLayout> layouts;
        for (const auto& var : s.variables) {
            layouts[var.name] = {var.axes, var.shape};
        }
        auto arrays = unstack_channels(values, s.channels, layouts, s.axes);
        for (const auto& var : s.variables) {
            auto it = arrays.find(var.name);
            if (it == arrays.end()) {
                throw FormatError("stream '" + s.name + "' provides no channels for variable '" + var.name + "'");
            }
            NdArray& arr = it->second;
            for (auto& x : arr.values()) {
                x = coerce_to_dtype(x, var.dtype);
            }
            result.cube.add_variable(var.name, Variable{var.axes, std::move(arr), var.dtype, var.attrs});
        }
        result.timings.push_back({s.name, decode_seconds, 0.0});
    }
    result.wall_seconds = seconds_since(start);
    return result;
}

DataCube decompress_cube(const fs::path& dir)
{
    return decompress_cube_timed(dir).cube;
}

DataCube filled_original(const DataCube& cube, const Manifest& manifest)
{
    DataCube out = cube;
    for (const auto& s : manifest.streams) {
        std::vector<std::string> names;
        for (const auto& v : s.variables) {
            names.push_back(v.name);
        }
        auto filled = fill_stream(cube, names, s.axes, s.fill.leading_fill);
        for (const auto& name : names) {
            out.replace_variable(name, filled.work.variable(name));
        }
        for (auto& [mname, mask] : filled.masks) {
            out.replace_variable(mname, std::move(mask));
        }
    }
    return out;
}

std::string inspect(const fs::path& dir)
{
    const Manifest manifest = read_manifest(dir / k_manifest_file);
    std::ostringstream out;
    out << "container " << dir.string() << " (format " << manifest.format_version << ")\n";
    const fs::path residual = dir / manifest.residual;
    out << "residual store: " << manifest.residual << " ("
        << (fs::exists(residual) ? std::to_string(fs::file_size(residual)) + " bytes" : std::string("missing"))
        << ")\n";
    if (manifest.streams.empty()) {
        out << "no video streams\n";
        return out.str();
    }
    char line[256];
    std::snprintf(line, sizeof line, "%-16s %-12s %4s %8s %-10s %12s %10s\n", "Test", "Codec", "Bits", "Channels",
                  "Quality", "bytes", "bpppb");
    out << line;
    for (const auto& s : manifest.streams) {
        const std::size_t c = s.channels.size();
        const double pixels = static_cast<double>(s.frames) * s.height * s.width * c;
        const double bpppb = pixels > 0 ? 8.0 * static_cast<double>(s.bytes()) / pixels : 0.0;
        std::string codecs, qualities;
        for (const auto& v : s.videos) {
            const std::string name(codec_name(v.codec.codec));
            if (codecs.find(name) == std::string::npos) {
                codecs += (codecs.empty() ? "" : ",") + name;
            }
            const std::string q = !v.quality.empty() ? v.quality : (v.codec.lossless() ? "lossless" : "custom");
            if (qualities.find(q) == std::string::npos) {
                qualities += (qualities.empty() ? "" : ",") + q;
            }
        }
        std::snprintf(line, sizeof line, "%-16s %-12s %4d %8zu %-10s %12llu %10.4f\n", s.name.c_str(), codecs.c_str(),
                      s.bit_depth, c, qualities.c_str(), static_cast<unsigned long long>(s.bytes()), bpppb);
        out << line;
        for (const auto& v : s.videos) {
            out << "    " << v.file << ": " << v.pixel_format << ", " << v.bytes << " bytes, planes ->";
            for (std::size_t p = 0; p < 3; ++p) {
                const auto& src = s.pca ? ChannelSource{"PC" + std::to_string(v.members[p] + 1), std::nullopt, 0}
                                        : s.channels.at(v.members[p]);
                out << (p ? ", " : " ") << src.variable;
                if (src.channel_axis) {
                    out << "[" << *src.channel_axis << "=" << src.channel_index << "]";
                }
                if (p >= v.n_real) {
                    out << " (repeat)";
                }
            }
            out << "\n";
        }
        if (s.pca) {
            out << "    PCA: " << s.pca->n_components() << " of " << s.pca->n_channels() << " components kept\n";
        }
        if (s.fill.synthesized > 0) {
            out << "    " << s.fill.synthesized << " missing cells filled forward\n";
        }
    }
    return out.str();
}

} // namespace cubevid
