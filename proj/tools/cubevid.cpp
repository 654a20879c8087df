#include "cubevid/bench.hpp"
#include "cubevid/container.hpp"
#include "cubevid/cube_io.hpp"
#include "cubevid/error.hpp"
#include "cubevid/metrics.hpp"
#include "cubevid/process.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace cubevid;

namespace {

constexpr int k_exit_ok = 0;
constexpr int k_exit_failed = 1;
constexpr int k_exit_config = 2;

std::string fmt(double v, int precision)
{
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

void print_metrics(const MetricsReport& report)
{
    for (const auto& r : report.rows) {
        std::cout << r.stream << ": bpppb " << fmt(r.bpppb, 4) << "  PSNR " << fmt(r.psnr.mean_db, 3) << " dB"
                  << "  SSIM " << fmt(r.ssim, 5) << "  SA " << fmt(r.sa.mean_degrees, 4) << " deg";
        if (r.t_c > 0.0) {
            std::cout << "  t_c " << fmt(r.t_c, 3) << " s";
        }
        std::cout << "  t_d " << fmt(r.t_d, 3) << " s\n";
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"cubevid: store labeled data cubes as video files"};
    app.require_subcommand(1);
    std::size_t max_procs = 0;
    app.add_option("--max-procs", max_procs, "Cap on concurrent encoder/decoder processes");

    // compress
    auto* compress = app.add_subcommand("compress", "Encode a cube into a container directory");
    fs::path c_input, c_rules, c_out;
    bool c_overwrite = false, c_report = false;
    int c_deflate = 4;
    compress->add_option("cube", c_input, "Input cube (.nc or .cube)")->required()->check(CLI::ExistingFile);
    compress->add_option("--rules", c_rules, "Mapping rules (YAML or JSON)")->required()->check(CLI::ExistingFile);
    compress->add_option("-o,--output", c_out, "Output directory")->required();
    compress->add_flag("--overwrite", c_overwrite, "Replace an existing output directory");
    compress->add_option("--residual-deflate", c_deflate, "Deflate level for x.nc (0-9)")->check(CLI::Range(0, 9));
    compress->add_flag("--report", c_report, "Decode again and print bpppb, PSNR, SSIM and SA per stream");

    // decompress
    auto* decompress = app.add_subcommand("decompress", "Rebuild a cube from a container directory");
    fs::path d_dir, d_out;
    decompress->add_option("dir", d_dir, "Container directory")->required()->check(CLI::ExistingDirectory);
    decompress->add_option("-o,--output", d_out, "Output cube (.nc or .cube)")->required();

    // inspect
    auto* insp = app.add_subcommand("inspect", "Summarize a container directory");
    fs::path i_dir;
    insp->add_option("dir", i_dir, "Container directory")->required()->check(CLI::ExistingDirectory);

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Compare a container directory with its original cube");
    fs::path e_cube, e_dir;
    eval->add_option("cube", e_cube, "Original cube")->required()->check(CLI::ExistingFile);
    eval->add_option("dir", e_dir, "Container directory")->required()->check(CLI::ExistingDirectory);

    // bench
    auto* bench = app.add_subcommand("bench", "Run a preset-ladder sweep");
    fs::path b_spec, b_out;
    std::string b_format = "csv";
    bool b_extended = false, b_sequential = false;
    std::size_t b_jobs = 0;
    bench->add_option("--spec", b_spec, "Sweep document")->required()->check(CLI::ExistingFile);
    bench->add_option("-o,--output", b_out, "Report file (stdout when omitted)");
    bench->add_option("--format", b_format, "csv or markdown")->check(CLI::IsMember({"csv", "markdown"}));
    bench->add_flag("--extended", b_extended, "Add cube, pooled PSNR, SSIM, SA, video count and status columns");
    bench->add_option("--jobs", b_jobs, "Cells run concurrently (overrides the document)");
    bench->add_flag("--sequential", b_sequential, "Run one cell at a time for cleaner timings");

    // synth
    auto* synth = app.add_subcommand("synth", "Write a synthetic test cube");
    std::string s_kind;
    std::vector<std::size_t> s_dims = {8, 32, 32, 3};
    std::uint64_t s_seed = 0;
    fs::path s_out;
    synth->add_option("kind", s_kind, "smooth-advection, checkerboard, rank1-spectral or noise")->required();
    synth->add_option("--dims", s_dims, "t y x c")->expected(4);
    synth->add_option("--seed", s_seed, "RNG seed");
    synth->add_option("-o,--output", s_out, "Output cube (.nc or .cube)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help exits 0; usage errors count as configuration errors
        return app.exit(e) == 0 ? k_exit_ok : k_exit_config;
    }

    try {
        if (max_procs > 0) {
            ProcessLimiter::global().set_limit(max_procs);
        }
        if (*compress) {
            const auto cube = read_cube(c_input);
            const auto rules = load_rules(c_rules);
            CompressOptions options;
            options.overwrite = c_overwrite;
            options.residual.deflate_level = c_deflate;
            const auto result = compress_cube(cube, rules, c_out, options);
            std::cout << "wrote " << c_out.string() << ": " << result.manifest.streams.size() << " stream(s), "
                      << result.residual_bytes << " residual bytes, " << fmt(result.wall_seconds, 3) << " s\n";
            if (c_report) {
                std::map<std::string, double> t_c;
                for (const auto& t : result.timings) {
                    t_c[t.stream] = t.child_seconds;
                }
                print_metrics(evaluate_roundtrip(cube, c_out, t_c));
            }
        } else if (*decompress) {
            const auto result = decompress_cube_timed(d_dir);
            write_cube(result.cube, d_out);
            std::cout << "wrote " << d_out.string() << " in " << fmt(result.wall_seconds, 3) << " s\n";
        } else if (*insp) {
            std::cout << inspect(i_dir);
        } else if (*eval) {
            print_metrics(evaluate_roundtrip(read_cube(e_cube), e_dir));
        } else if (*bench) {
            auto spec = load_sweep(b_spec);
            if (b_jobs > 0) {
                spec.jobs = b_jobs;
            }
            if (b_sequential) {
                spec.jobs = 1;
            }
            const auto rows = run_sweep(spec);
            const auto text =
                emit_report(rows, b_format == "markdown" ? ReportFormat::markdown : ReportFormat::csv, b_extended);
            if (b_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream out(b_out);
                out << text;
                if (!out) {
                    throw Error("cannot write " + b_out.string());
                }
            }
            std::size_t failed = 0;
            for (const auto& r : rows) {
                if (r.failed) {
                    ++failed;
                    std::cerr << "failed: " << r.test << " / " << r.bits << " / " << r.quality << " on " << r.cube
                              << ": " << r.error << "\n";
                }
            }
            return failed > 0 ? k_exit_failed : k_exit_ok;
        } else if (*synth) {
            const SynthDims dims{s_dims[0], s_dims[1], s_dims[2], s_dims[3]};
            write_cube(synth_cube(synth_kind_from_name(s_kind), dims, s_seed), s_out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return k_exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return k_exit_failed;
    }
    return k_exit_ok;
}
