#include "cubevid/bench.hpp"
#include "cubevid/container.hpp"
#include "cubevid/cube_io.hpp"
#include "cubevid/metrics.hpp"
#include "cubevid/process.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <regex>
#include <sstream>

#include <unistd.h>

namespace cubevid {

namespace fs = std::filesystem;

// --- sweep documents ---------------------------------------------------------

namespace {

std::vector<std::string> names_of(const YAML::Node& node)
{
    std::vector<std::string> out;
    if (node.IsScalar()) {
        out.push_back(node.as<std::string>());
    } else {
        for (const auto& item : node) {
            out.push_back(item.as<std::string>());
        }
    }
    return out;
}

CubeSource parse_cube(const YAML::Node& node, const fs::path& base_dir, std::size_t index)
{
    CubeSource src;
    if (node["synth"]) {
        src.kind = synth_kind_from_name(node["synth"].as<std::string>());
        const auto dims = node["dims"];
        if (!dims || !dims.IsSequence() || dims.size() != 4) {
            throw ConfigError("synthetic cube " + std::to_string(index + 1) + " needs dims: [t, y, x, c]");
        }
        src.dims = {dims[0].as<std::size_t>(), dims[1].as<std::size_t>(), dims[2].as<std::size_t>(),
                    dims[3].as<std::size_t>()};
        src.seed = node["seed"] ? node["seed"].as<std::uint64_t>() : 0;
        src.name = std::string(synth_kind_name(src.kind));
    } else if (node["path"]) {
        fs::path p = node["path"].as<std::string>();
        src.path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
        src.name = p.stem().string();
    } else {
        throw ConfigError("cube " + std::to_string(index + 1) + " needs either 'synth' or 'path'");
    }
    if (node["name"]) {
        src.name = node["name"].as<std::string>();
    }
    if (node["variables"]) {
        src.variables = names_of(node["variables"]);
    }
    if (node["axes"]) {
        const auto axes = names_of(node["axes"]);
        if (axes.size() != 3) {
            throw ConfigError("cube '" + src.name + "': axes must name time, y and x");
        }
        src.axes = {axes[0], axes[1], axes[2]};
    }
    return src;
}

PcaMode parse_pca(const YAML::Node& node)
{
    if (node.IsScalar()) {
        const auto s = node.as<std::string>();
        if (s == "off") {
            return {};
        }
        if (s == "tiered") {
            return {PcaMode::Kind::tiered, 0};
        }
        throw ConfigError("unknown pca mode '" + s + "' (expected off, tiered or {keep: k})");
    }
    if (node.IsMap() && node["keep"]) {
        const auto k = node["keep"].as<std::size_t>();
        if (k == 0) {
            throw ConfigError("pca keep must be at least 1");
        }
        return {PcaMode::Kind::keep, k};
    }
    throw ConfigError("unknown pca mode (expected off, tiered or {keep: k})");
}

} // namespace

SweepSpec parse_sweep(const std::string& text, const fs::path& base_dir)
{
    SweepSpec spec;
    try {
        const YAML::Node root = YAML::Load(text);
        if (!root.IsMap()) {
            throw ConfigError("sweep document must be a mapping");
        }
        static const std::vector<std::string> known = {"cubes", "matrix", "presets", "pca", "era5",
                                                       "repetitions", "jobs", "work_dir", "keep_outputs"};
        for (const auto& kv : root) {
            const auto key = kv.first.as<std::string>();
            if (std::find(known.begin(), known.end(), key) == known.end()) {
                throw ConfigError("sweep document has unknown key '" + key + "'");
            }
        }
        if (!root["cubes"] || !root["cubes"].IsSequence() || root["cubes"].size() == 0) {
            throw ConfigError("sweep needs a non-empty 'cubes' list");
        }
        for (std::size_t i = 0; i < root["cubes"].size(); ++i) {
            spec.cubes.push_back(parse_cube(root["cubes"][i], base_dir, i));
        }
        if (!root["matrix"] || !root["matrix"].IsSequence() || root["matrix"].size() == 0) {
            throw ConfigError("sweep needs a non-empty codec 'matrix'");
        }
        for (const auto& cell : root["matrix"]) {
            if (!cell["codec"] || !cell["bits"]) {
                throw ConfigError("matrix entries need 'codec' and 'bits'");
            }
            CodecCell c{codec_from_name(cell["codec"].as<std::string>()), cell["bits"].as<int>()};
            if (!probe_capabilities(c.codec).supports(c.bits)) {
                throw ConfigError(std::string(codec_name(c.codec)) + " does not support " + std::to_string(c.bits) +
                                  "-bit output");
            }
            spec.matrix.push_back(c);
        }
        if (root["presets"]) {
            spec.presets = names_of(root["presets"]);
            for (const auto& p : spec.presets) {
                if (!preset_index(p)) {
                    throw ConfigError("unknown preset '" + p + "'");
                }
            }
        }
        if (root["pca"]) {
            spec.pca_modes.clear();
            const auto node = root["pca"];
            if (node.IsSequence()) {
                for (const auto& m : node) {
                    spec.pca_modes.push_back(parse_pca(m));
                }
            } else {
                spec.pca_modes.push_back(parse_pca(node));
            }
        }
        spec.era5_mode = root["era5"] && root["era5"].as<bool>();
        if (root["repetitions"]) {
            spec.repetitions = std::max<std::size_t>(1, root["repetitions"].as<std::size_t>());
        }
        if (root["jobs"]) {
            spec.jobs = std::max<std::size_t>(1, root["jobs"].as<std::size_t>());
        }
        if (root["work_dir"]) {
            spec.work_dir = root["work_dir"].as<std::string>();
        }
        spec.keep_outputs = root["keep_outputs"] && root["keep_outputs"].as<bool>();
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("malformed sweep document: ") + e.what());
    }
    return spec;
}

SweepSpec load_sweep(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw NotFoundError("cannot open sweep spec " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_sweep(buffer.str(), path.parent_path());
}

// --- running -----------------------------------------------------------------

namespace {

struct Cell {
    std::size_t cube = 0;
    CodecCell codec;
    PcaMode pca;
    std::size_t preset = 0; // ladder index
};

std::string test_label(const CodecCell& codec, const PcaMode& pca)
{
    std::string label(codec_name(codec.codec));
    if (pca.kind == PcaMode::Kind::keep) {
        label += " (PCA - " + std::to_string(pca.keep) + " bands)";
    } else if (pca.kind == PcaMode::Kind::tiered) {
        label += " (PCA - all bands)";
    }
    return label;
}

std::vector<std::string> stream_variables(const DataCube& cube, const CubeSource& src)
{
    if (!src.variables.empty()) {
        return src.variables;
    }
    std::vector<std::string> out;
    for (const auto& [name, var] : cube.variables()) {
        const std::vector<std::string> want = {src.axes.time, src.axes.y, src.axes.x};
        if (var.axes == want) {
            out.push_back(name);
        }
    }
    if (out.empty()) {
        throw ConfigError("cube '" + src.name + "' has no variables on (" + src.axes.time + ", " + src.axes.y + ", " +
                          src.axes.x + ")");
    }
    return out;
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ReportRow run_cell(const Cell& cell, const DataCube& cube, const CubeSource& src, const SweepSpec& spec,
                   const fs::path& out_dir)
{
    ReportRow row;
    row.test = test_label(cell.codec, cell.pca);
    row.cube = src.name;
    row.bits = cell.codec.bits;
    row.quality = std::string(preset_names()[cell.preset]);
    try {
        MappingRule rule;
        rule.stream_name = "bands";
        rule.input_vars = stream_variables(cube, src);
        rule.axes = src.axes;
        rule.bit_depth = cell.codec.bits;
        const std::size_t channels = resolve_channels(cube, rule.input_vars, rule.axes).size();
        if (cell.pca.kind == PcaMode::Kind::keep) {
            rule.n_pcs = cell.pca.keep;
        } else if (cell.pca.kind == PcaMode::Kind::tiered) {
            rule.n_pcs = channels;
        }
        if (cell.pca.kind == PcaMode::Kind::tiered) {
            // Less important components get progressively cheaper presets.
            const std::size_t videos = (channels + 2) / 3;
            for (std::size_t j = 0; j < videos; ++j) {
                const std::size_t level = std::min<std::size_t>(cell.preset + j, preset_names().size() - 1);
                const auto name = preset_names()[level];
                rule.codec_configs.push_back(resolve_preset(cell.codec.codec, name, spec.era5_mode, cell.codec.bits));
                rule.qualities.emplace_back(name);
            }
        } else {
            rule.codec_configs = {resolve_preset(cell.codec.codec, row.quality, spec.era5_mode, cell.codec.bits)};
        }

        std::vector<double> tc, td;
        for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
            CompressOptions options;
            options.overwrite = true;
            const auto compressed = compress_cube(cube, {rule}, out_dir, options);
            const auto report = evaluate_roundtrip(cube, out_dir, {{rule.stream_name, compressed.timings[0].child_seconds}});
            const auto& m = report.rows.at(0);
            tc.push_back(m.t_c);
            td.push_back(m.t_d);
            if (rep == 0) {
                row.bpppb = m.bpppb;
                row.psnr = m.psnr.mean_db;
                row.psnr_pooled = m.psnr.pooled_db;
                row.ssim = m.ssim;
                row.sa = m.sa.mean_degrees;
                row.videos = compressed.manifest.streams.at(0).videos.size();
            }
        }
        row.t_c = median(tc);
        row.t_d = median(td);
    } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
    }
    if (!spec.keep_outputs) {
        std::error_code ec;
        fs::remove_all(out_dir, ec);
    }
    return row;
}

} // namespace

std::vector<ReportRow> run_sweep(const SweepSpec& spec)
{
    if (spec.cubes.empty() || spec.matrix.empty()) {
        throw ConfigError("sweep needs at least one cube and one codec cell");
    }
    std::vector<std::size_t> ladder;
    if (spec.presets.empty()) {
        for (std::size_t i = 0; i < preset_names().size(); ++i) {
            ladder.push_back(i);
        }
    } else {
        for (const auto& p : spec.presets) {
            const auto idx = preset_index(p);
            if (!idx) {
                throw ConfigError("unknown preset '" + p + "'");
            }
            ladder.push_back(*idx);
        }
        std::sort(ladder.begin(), ladder.end());
        ladder.erase(std::unique(ladder.begin(), ladder.end()), ladder.end());
    }

    // Cubes load up front; a cube that fails to load fails all its cells.
    std::vector<std::optional<DataCube>> cubes;
    std::vector<std::string> load_errors;
    for (const auto& src : spec.cubes) {
        try {
            cubes.emplace_back(src.path ? read_cube(*src.path) : synth_cube(src.kind, src.dims, src.seed));
            load_errors.emplace_back();
        } catch (const std::exception& e) {
            cubes.emplace_back(std::nullopt);
            load_errors.emplace_back(e.what());
        }
    }

    std::vector<Cell> cells;
    for (std::size_t c = 0; c < spec.cubes.size(); ++c) {
        for (const auto& codec : spec.matrix) {
            for (const auto& pca : spec.pca_modes) {
                for (const auto p : ladder) {
                    cells.push_back({c, codec, pca, p});
                }
            }
        }
    }

    const fs::path root = spec.work_dir ? *spec.work_dir
                                        : fs::temp_directory_path() / ("cubevid_sweep_" + std::to_string(::getpid()));
    fs::create_directories(root);

    std::vector<ReportRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            const auto& cell = cells[i];
            const auto& src = spec.cubes[cell.cube];
            if (!cubes[cell.cube]) {
                auto& row = rows[i];
                row.test = test_label(cell.codec, cell.pca);
                row.cube = src.name;
                row.bits = cell.codec.bits;
                row.quality = std::string(preset_names()[cell.preset]);
                row.failed = true;
                row.error = "cannot load cube: " + load_errors[cell.cube];
                continue;
            }
            rows[i] = run_cell(cell, *cubes[cell.cube], src, spec, root / ("cell_" + std::to_string(i + 1)));
        }
    };
    std::vector<std::future<void>> workers;
    for (std::size_t j = 0; j < std::min(spec.jobs, std::max<std::size_t>(cells.size(), 1)); ++j) {
        workers.push_back(std::async(std::launch::async, worker));
    }
    for (auto& w : workers) {
        w.get();
    }
    if (!spec.work_dir && !spec.keep_outputs) {
        std::error_code ec;
        fs::remove_all(root, ec);
    }
    return rows;
}

std::optional<double> measure_effective_qp(const CodecConfig& config)
{
    if (config.codec != CodecId::libx265) {
        return std::nullopt;
    }
    std::vector<std::string> argv = {find_encoder().string(), "-hide_banner", "-nostdin", "-loglevel", "info",
                                     "-f", "lavfi", "-i", "testsrc2=s=128x128:r=1", "-frames:v", "8",
                                     "-pix_fmt", pixel_format(config.codec, config.bit_depth, 3)};
    for (const auto& [key, value] : config.options) {
        argv.push_back("-" + key);
        argv.push_back(value);
    }
    argv.insert(argv.end(), {"-f", "null", "-"});
    const auto result = run_process(argv);
    if (result.exit_code != 0) {
        throw CodecError("QP probe failed: " + result.err);
    }
    static const std::regex summary(R"(encoded \d+ frames.*Avg QP:\s*([0-9.]+))");
    std::smatch m;
    if (!std::regex_search(result.err, m, summary)) {
        return std::nullopt;
    }
    return std::stod(m[1].str());
}

// --- reports -----------------------------------------------------------------

namespace {

std::string number(double v, int precision)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (const char ch : s) {
        out += ch == '"' ? "\"\"" : std::string(1, ch);
    }
    return out + "\"";
}

std::vector<std::string> row_fields(const ReportRow& r, bool extended)
{
    std::vector<std::string> f = {r.test, std::to_string(r.bits), r.quality};
    if (r.failed) {
        f.insert(f.end(), {"", "", "", ""});
    } else {
        f.insert(f.end(), {number(r.bpppb, 4), number(r.psnr, 3), number(r.t_c, 3), number(r.t_d, 3)});
    }
    if (extended) {
        f.push_back(r.cube);
        if (r.failed) {
            f.insert(f.end(), {"", "", "", ""});
        } else {
            f.insert(f.end(), {number(r.psnr_pooled, 3), number(r.ssim, 5), number(r.sa, 4), std::to_string(r.videos)});
        }
        f.push_back(r.failed ? "failed" : "ok");
        f.push_back(r.error);
    }
    return f;
}

const std::vector<std::string>& header(bool extended)
{
    static const std::vector<std::string> base = {"Test", "Bits", "Quality", "bpppb", "PSNR", "t_c", "t_d"};
    static const std::vector<std::string> ext = [] {
        auto h = base;
        h.insert(h.end(), {"Cube", "PSNR_pooled", "SSIM", "SA", "Videos", "Status", "Error"});
        return h;
    }();
    return extended ? ext : base;
}

} // namespace

std::string emit_report(const std::vector<ReportRow>& rows, ReportFormat format, bool extended)
{
    std::ostringstream out;
    const auto& head = header(extended);
    if (format == ReportFormat::csv) {
        for (std::size_t i = 0; i < head.size(); ++i) {
            out << (i ? "," : "") << head[i];
        }
        out << "\n";
        for (const auto& r : rows) {
            const auto f = row_fields(r, extended);
            for (std::size_t i = 0; i < f.size(); ++i) {
                out << (i ? "," : "") << csv_field(f[i]);
            }
            out << "\n";
        }
        return out.str();
    }

    // Markdown: one table per Test, in first-appearance order.
    std::vector<std::string> tests;
    for (const auto& r : rows) {
        if (std::find(tests.begin(), tests.end(), r.test) == tests.end()) {
            tests.push_back(r.test);
        }
    }
    if (tests.empty()) {
        out << "| " << head[0];
        for (std::size_t i = 1; i < head.size(); ++i) {
            out << " | " << head[i];
        }
        out << " |\n|";
        for (std::size_t i = 0; i < head.size(); ++i) {
            out << " --- |";
        }
        out << "\n";
        return out.str();
    }
    for (std::size_t t = 0; t < tests.size(); ++t) {
        out << (t ? "\n" : "") << "### " << tests[t] << "\n\n|";
        for (std::size_t i = 1; i < head.size(); ++i) {
            out << " " << head[i] << " |";
        }
        out << "\n|";
        for (std::size_t i = 1; i < head.size(); ++i) {
            out << (i == 2 ? " :--- |" : " ---: |");
        }
        out << "\n";
        for (const auto& r : rows) {
            if (r.test != tests[t]) {
                continue;
            }
            auto f = row_fields(r, extended);
            out << "|";
            for (std::size_t i = 1; i < f.size(); ++i) {
                std::string cell = f[i];
                if (i == 4 && cell == "inf") {
                    cell = "∞";
                }
                std::replace(cell.begin(), cell.end(), '|', '/');
                out << " " << cell << " |";
            }
            out << "\n";
        }
    }
    return out.str();
}

} // namespace cubevid
