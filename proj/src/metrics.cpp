#include "cubevid/metrics.hpp"
#include "cubevid/container.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cubevid {

namespace {

constexpr double k_inf = std::numeric_limits<double>::infinity();
constexpr double k_nan = std::numeric_limits<double>::quiet_NaN();

void require_same(const NdArray& a, const NdArray& b, const char* what)
{
    if (a.rank() != 4 || a.shape() != b.shape()) {
        throw ShapeError(std::string(what) + ": shapes " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()) + " must be equal [t, y, x, c]");
    }
}

std::vector<double> channel_peaks(const NdArray& orig)
{
    const std::size_t nc = orig.dim(3);
    std::vector<double> peak(nc, -k_inf);
    const auto v = orig.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        peak[i % nc] = std::max(peak[i % nc], v[i]);
    }
    return peak;
}

double db(double peak, double mse)
{
    return 10.0 * std::log10(peak * peak / mse);
}

} // namespace

double bpppb(std::uint64_t total_bytes, std::size_t t, std::size_t h, std::size_t w, std::size_t c)
{
    if (t == 0 || h == 0 || w == 0 || c == 0) {
        throw ShapeError("bpppb needs non-zero dimensions");
    }
    const double samples = static_cast<double>(t) * static_cast<double>(h) * static_cast<double>(w) *
                           static_cast<double>(c);
    return 8.0 * static_cast<double>(total_bytes) / samples;
}

PsnrResult psnr(const NdArray& orig, const NdArray& recon)
{
    require_same(orig, recon, "psnr");
    const std::size_t nc = orig.dim(3);
    const auto o = orig.values();
    const auto r = recon.values();
    if (o.empty()) {
        throw ShapeError("psnr of an empty array");
    }
    for (const double v : o) {
        if (!std::isfinite(v)) {
            throw DataError("psnr: original contains non-finite values");
        }
    }
    std::vector<double> sse(nc, 0.0);
    double total_sse = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) {
        const double d = o[i] - r[i];
        sse[i % nc] += d * d;
        total_sse += d * d;
    }
    const auto peak = channel_peaks(orig);
    const double per_channel_count = static_cast<double>(o.size() / nc);

    PsnrResult out;
    double sum = 0.0;
    std::size_t finite = 0;
    for (std::size_t k = 0; k < nc; ++k) {
        const double mse = sse[k] / per_channel_count;
        double value;
        if (mse == 0.0 && !std::isnan(sse[k])) {
            value = k_inf;
            out.infinite_channels.push_back(k);
        } else if (peak[k] == 0.0 || std::isnan(mse)) {
            value = k_nan;
            out.undefined_channels.push_back(k);
        } else {
            value = db(peak[k], mse);
            sum += value;
            ++finite;
        }
        out.per_channel.push_back(value);
    }
    if (finite > 0) {
        out.mean_db = sum / static_cast<double>(finite);
    } else {
        out.mean_db = out.infinite_channels.size() == nc ? k_inf : k_nan;
    }
    const double global_peak = *std::max_element(peak.begin(), peak.end());
    const double total_mse = total_sse / static_cast<double>(o.size());
    if (total_mse == 0.0) {
        out.pooled_db = k_inf;
    } else {
        out.pooled_db = global_peak == 0.0 ? k_nan : db(global_peak, total_mse);
    }
    return out;
}

double ssim(const NdArray& orig, const NdArray& recon)
{
    require_same(orig, recon, "ssim");
    const std::size_t nt = orig.dim(0), ny = orig.dim(1), nx = orig.dim(2), nc = orig.dim(3);
    constexpr std::size_t win = k_ssim_window;
    if (ny < win || nx < win) {
        throw ShapeError("ssim needs frames of at least " + std::to_string(win) + "x" + std::to_string(win) +
                         ", got " + std::to_string(ny) + "x" + std::to_string(nx));
    }
    const auto peak = channel_peaks(orig);
    std::vector<double> range(nc);
    {
        std::vector<double> lo(nc, k_inf);
        const auto v = orig.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            lo[i % nc] = std::min(lo[i % nc], v[i]);
        }
        for (std::size_t k = 0; k < nc; ++k) {
            range[k] = peak[k] > 0.0 ? peak[k] : (peak[k] > lo[k] ? peak[k] - lo[k] : 1.0);
        }
    }

    const std::size_t oy = ny - win + 1, ox = nx - win + 1;
    const double n = static_cast<double>(win * win);
    const double cov_norm = n / (n - 1.0);
    // Five quantities per pixel, box-summed first along x (7 taps), then along y.
    std::vector<double> plane(5 * ny * nx), rows(5 * ny * ox);
    double total = 0.0;
    for (std::size_t k = 0; k < nc; ++k) {
        const double c1 = std::pow(k_ssim_k1 * range[k], 2);
        const double c2 = std::pow(k_ssim_k2 * range[k], 2);
        for (std::size_t t = 0; t < nt; ++t) {
            // Shift both images by the same offset to keep the second moments small.
            double shift = 0.0;
            for (std::size_t y = 0; y < ny; ++y) {
                for (std::size_t x = 0; x < nx; ++x) {
                    shift += orig.at(t, y, x, k);
                }
            }
            shift /= static_cast<double>(ny * nx);
            for (std::size_t y = 0; y < ny; ++y) {
                for (std::size_t x = 0; x < nx; ++x) {
                    const double a = orig.at(t, y, x, k) - shift;
                    const double b = recon.at(t, y, x, k) - shift;
                    double* p = &plane[5 * (y * nx + x)];
                    p[0] = a;
                    p[1] = b;
                    p[2] = a * a;
                    p[3] = b * b;
                    p[4] = a * b;
                }
            }
            for (std::size_t y = 0; y < ny; ++y) {
                for (std::size_t x = 0; x < ox; ++x) {
                    double acc[5] = {0, 0, 0, 0, 0};
                    for (std::size_t d = 0; d < win; ++d) {
                        const double* p = &plane[5 * (y * nx + x + d)];
                        for (int q = 0; q < 5; ++q) {
                            acc[q] += p[q];
                        }
                    }
                    std::copy(acc, acc + 5, &rows[5 * (y * ox + x)]);
                }
            }
            double frame_sum = 0.0;
            for (std::size_t y = 0; y < oy; ++y) {
                for (std::size_t x = 0; x < ox; ++x) {
                    double s[5] = {0, 0, 0, 0, 0};
                    for (std::size_t d = 0; d < win; ++d) {
                        const double* p = &rows[5 * ((y + d) * ox + x)];
                        for (int q = 0; q < 5; ++q) {
                            s[q] += p[q];
                        }
                    }
                    const double mx = s[0] / n, my = s[1] / n;
                    const double vx = (s[2] / n - mx * mx) * cov_norm;
                    const double vy = (s[3] / n - my * my) * cov_norm;
                    const double vxy = (s[4] / n - mx * my) * cov_norm;
                    const double ux = mx + shift, uy = my + shift;
                    frame_sum += ((2.0 * ux * uy + c1) * (2.0 * vxy + c2)) /
                                 ((ux * ux + uy * uy + c1) * (vx + vy + c2));
                }
            }
            total += frame_sum / static_cast<double>(oy * ox);
        }
    }
    return total / static_cast<double>(nt * nc);
}

SpectralAngleResult spectral_angle(const NdArray& orig, const NdArray& recon)
{
    require_same(orig, recon, "spectral_angle");
    const std::size_t nc = orig.dim(3);
    const std::size_t pixels = orig.size() / std::max<std::size_t>(nc, 1);
    const auto o = orig.values();
    const auto r = recon.values();
    SpectralAngleResult out;
    double sum = 0.0;
    for (std::size_t p = 0; p < pixels; ++p) {
        const double* a = &o[p * nc];
        const double* b = &r[p * nc];
        double na = 0.0, nb = 0.0;
        for (std::size_t k = 0; k < nc; ++k) {
            na += a[k] * a[k];
            nb += b[k] * b[k];
        }
        na = std::sqrt(na);
        nb = std::sqrt(nb);
        if (na == 0.0 || nb == 0.0) {
            ++out.skipped;
            continue;
        }
        // 2 atan2(|u - v|, |u + v|) for unit u, v: accurate at tiny and near-pi angles.
        double diff = 0.0, plus = 0.0;
        for (std::size_t k = 0; k < nc; ++k) {
            const double u = a[k] / na, v = b[k] / nb;
            diff += (u - v) * (u - v);
            plus += (u + v) * (u + v);
        }
        sum += 2.0 * std::atan2(std::sqrt(diff), std::sqrt(plus));
        ++out.pixels;
    }
    out.mean_degrees = out.pixels > 0 ? sum / static_cast<double>(out.pixels) * 180.0 / std::numbers::pi : k_nan;
    return out;
}

MetricsReport evaluate(const DataCube& filled_orig, const DataCube& recon, const Manifest& manifest)
{
    MetricsReport report;
    for (const auto& s : manifest.streams) {
        std::vector<std::string> names;
        for (const auto& v : s.variables) {
            names.push_back(v.name);
        }
        const auto a = select_for_video(filled_orig, names, s.axes).array;
        const auto b = select_for_video(recon, names, s.axes).array;
        MetricsRow row;
        row.stream = s.name;
        row.t = a.dim(0);
        row.h = a.dim(1);
        row.w = a.dim(2);
        row.c = a.dim(3);
        row.bytes = s.bytes();
        row.bpppb = bpppb(row.bytes, row.t, row.h, row.w, row.c);
        row.psnr = psnr(a, b);
        row.ssim = (row.h >= k_ssim_window && row.w >= k_ssim_window) ? ssim(a, b) : k_nan;
        row.sa = spectral_angle(a, b);
        report.rows.push_back(std::move(row));
    }
    return report;
}

MetricsReport evaluate_roundtrip(const DataCube& orig, const std::filesystem::path& dir,
                                 const std::map<std::string, double>& t_c)
{
    const Manifest manifest = read_manifest(dir / k_manifest_file);
    const auto decoded = decompress_cube_timed(dir);
    auto report = evaluate(filled_original(orig, manifest), decoded.cube, manifest);
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        auto& row = report.rows[i];
        row.t_d = decoded.timings.at(i).child_seconds;
        if (const auto it = t_c.find(row.stream); it != t_c.end()) {
            row.t_c = it->second;
        }
    }
    return report;
}

} // namespace cubevid
