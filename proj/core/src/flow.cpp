#include "comotion/flow.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "comotion/errors.hpp"

namespace comotion {

namespace {

using Grid = std::vector<double>;

inline double at_clamped(const Grid& img, int w, int h, int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return img[static_cast<std::size_t>(y) * w + x];
}

inline double bilerp(const Grid& img, int w, int h, double fx, double fy) {
    fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
    fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(fx);
    const int y0 = static_cast<int>(fy);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double ax = fx - x0;
    const double ay = fy - y0;
    const double top = (1.0 - ax) * img[static_cast<std::size_t>(y0) * w + x0] +
                       ax * img[static_cast<std::size_t>(y0) * w + x1];
    const double bot = (1.0 - ax) * img[static_cast<std::size_t>(y1) * w + x0] +
                       ax * img[static_cast<std::size_t>(y1) * w + x1];
    return (1.0 - ay) * top + ay * bot;
}

// central differences, border replicated
void gradient(const Grid& src, Grid& gx, Grid& gy, int w, int h) {
    gx.resize(src.size());
    gy.resize(src.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            gx[i] = 0.5 * (at_clamped(src, w, h, x + 1, y) - at_clamped(src, w, h, x - 1, y));
            gy[i] = 0.5 * (at_clamped(src, w, h, x, y + 1) - at_clamped(src, w, h, x, y - 1));
        }
    }
}

// separable 5-tap binomial [1 4 6 4 1]/16, border replicated
Grid binomial_blur(const Grid& src, int w, int h) {
    static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    Grid tmp(src.size()), out(src.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int t = -2; t <= 2; ++t) s += k[t + 2] * at_clamped(src, w, h, x + t, y);
            tmp[static_cast<std::size_t>(y) * w + x] = s;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int t = -2; t <= 2; ++t) s += k[t + 2] * at_clamped(tmp, w, h, x, y + t);
            out[static_cast<std::size_t>(y) * w + x] = s;
        }
    }
    return out;
}

// pixel-center aligned bilinear resampling
Grid resample(const Grid& src, int w, int h, int nw, int nh) {
    Grid out(static_cast<std::size_t>(nw) * nh);
    const double sx = static_cast<double>(w) / nw;
    const double sy = static_cast<double>(h) / nh;
    for (int y = 0; y < nh; ++y) {
        for (int x = 0; x < nw; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const double fy = (y + 0.5) * sy - 0.5;
            out[static_cast<std::size_t>(y) * nw + x] = bilerp(src, w, h, fx, fy);
        }
    }
    return out;
}

Grid warp_grid(const Grid& src, int w, int h, const Grid& u, const Grid& v) {
    Grid out(src.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            out[i] = bilerp(src, w, h, x + u[i], y + v[i]);
        }
    }
    return out;
}

double energy_level(const Grid& a, const Grid& b, const Grid& u, const Grid& v, int w,
                    int h, const FlowSolverConfig& cfg) {
    const double eps2 = cfg.psi_epsilon * cfg.psi_epsilon;
    Grid bx, by, ax, ay;
    gradient(b, bx, by, w, h);
    gradient(a, ax, ay, w, h);
    const Grid bw = warp_grid(b, w, h, u, v);
    const Grid bwx = warp_grid(bx, w, h, u, v);
    const Grid bwy = warp_grid(by, w, h, u, v);

    double e_data = 0.0, e_grad = 0.0, e_smooth = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double dt = bw[i] - a[i];
            e_data += std::sqrt(dt * dt + eps2);
            const double dx = bwx[i] - ax[i];
            const double dy = bwy[i] - ay[i];
            e_grad += std::sqrt(dx * dx + dy * dy + eps2);
            // forward differences, zero flux past the border
            const double ux = (x + 1 < w) ? u[i + 1] - u[i] : 0.0;
            const double vx = (x + 1 < w) ? v[i + 1] - v[i] : 0.0;
            const double uy = (y + 1 < h) ? u[i + w] - u[i] : 0.0;
            const double vy = (y + 1 < h) ? v[i + w] - v[i] : 0.0;
            e_smooth += std::sqrt(ux * ux + uy * uy + vx * vx + vy * vy + eps2);
        }
    }
    return e_data + cfg.gradient_weight * e_grad + cfg.alpha * e_smooth;
}

// SOR sweeps per lagged-diffusivity update
constexpr int kSorSweepsPerLag = 5;

// one pyramid level: fixed-point outer loop, lagged-diffusivity SOR inner loop
void solve_level(const Grid& a, const Grid& b, Grid& u, Grid& v, int w, int h,
                 const FlowSolverConfig& cfg) {
    const double eps2 = cfg.psi_epsilon * cfg.psi_epsilon;
    const double gw = cfg.gradient_weight;
    const double alpha = cfg.alpha;
    const double omega = cfg.sor_omega;
    const std::size_t n = static_cast<std::size_t>(w) * h;

    Grid ax, ay, bx, by, bxx, bxy, byx, byy;
    gradient(a, ax, ay, w, h);
    gradient(b, bx, by, w, h);
    gradient(bx, bxx, bxy, w, h);
    gradient(by, byx, byy, w, h);

    Grid du(n), dv(n), it(n), itx(n), ity(n), psi_s(n);

    // monotone fixed-point loop: an outer step that raises the discretized
    // energy is rolled back and the level stops
    double current_energy = energy_level(a, b, u, v, w, h, cfg);
    Grid u_prev, v_prev;

    for (int outer = 0; outer < cfg.outer_iterations; ++outer) {
        u_prev = u;
        v_prev = v;
        const Grid bw = warp_grid(b, w, h, u, v);
        const Grid bwx = warp_grid(bx, w, h, u, v);
        const Grid bwy = warp_grid(by, w, h, u, v);
        const Grid bwxx = warp_grid(bxx, w, h, u, v);
        const Grid bwxy = warp_grid(bxy, w, h, u, v);
        const Grid bwyy = warp_grid(byy, w, h, u, v);
        for (std::size_t i = 0; i < n; ++i) {
            it[i] = bw[i] - a[i];
            itx[i] = bwx[i] - ax[i];
            ity[i] = bwy[i] - ay[i];
        }
        std::fill(du.begin(), du.end(), 0.0);
        std::fill(dv.begin(), dv.end(), 0.0);

        for (int inner = 0; inner < cfg.inner_iterations; ++inner) {
            // smoothness diffusivity lagged on the current total flow
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    const double ut = u[i] + du[i];
                    const double vt = v[i] + dv[i];
                    const double uxd = (x + 1 < w) ? (u[i + 1] + du[i + 1]) - ut : 0.0;
                    const double vxd = (x + 1 < w) ? (v[i + 1] + dv[i + 1]) - vt : 0.0;
                    const double uyd = (y + 1 < h) ? (u[i + w] + du[i + w]) - ut : 0.0;
                    const double vyd = (y + 1 < h) ? (v[i + w] + dv[i + w]) - vt : 0.0;
                    psi_s[i] =
                        1.0 / std::sqrt(uxd * uxd + vxd * vxd + uyd * uyd + vyd * vyd + eps2);
                }
            }

            // a few Gauss-Seidel/SOR sweeps of the coupled 2x2 systems per relag
            for (int sweep = 0; sweep < kSorSweepsPerLag; ++sweep) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;

                    double sum_w = 0.0, nbr_u = 0.0, nbr_v = 0.0;
                    if (x > 0) {
                        const double wgt = 0.5 * (psi_s[i] + psi_s[i - 1]);
                        sum_w += wgt;
                        nbr_u += wgt * (u[i - 1] + du[i - 1]);
                        nbr_v += wgt * (v[i - 1] + dv[i - 1]);
                    }
                    if (x + 1 < w) {
                        const double wgt = 0.5 * (psi_s[i] + psi_s[i + 1]);
                        sum_w += wgt;
                        nbr_u += wgt * (u[i + 1] + du[i + 1]);
                        nbr_v += wgt * (v[i + 1] + dv[i + 1]);
                    }
                    if (y > 0) {
                        const double wgt = 0.5 * (psi_s[i] + psi_s[i - w]);
                        sum_w += wgt;
                        nbr_u += wgt * (u[i - w] + du[i - w]);
                        nbr_v += wgt * (v[i - w] + dv[i - w]);
                    }
                    if (y + 1 < h) {
                        const double wgt = 0.5 * (psi_s[i] + psi_s[i + w]);
                        sum_w += wgt;
                        nbr_u += wgt * (u[i + w] + du[i + w]);
                        nbr_v += wgt * (v[i + w] + dv[i + w]);
                    }

                    const double r = it[i] + bwx[i] * du[i] + bwy[i] * dv[i];
                    const double rx = itx[i] + bwxx[i] * du[i] + bwxy[i] * dv[i];
                    const double ry = ity[i] + bwxy[i] * du[i] + bwyy[i] * dv[i];
                    const double psi_d = 1.0 / std::sqrt(r * r + eps2);
                    const double psi_g = gw / std::sqrt(rx * rx + ry * ry + eps2);

                    const double cross =
                        psi_d * bwx[i] * bwy[i] + psi_g * (bwxx[i] * bwxy[i] + bwxy[i] * bwyy[i]);

                    const double den_u =
                        psi_d * bwx[i] * bwx[i] + psi_g * (bwxx[i] * bwxx[i] + bwxy[i] * bwxy[i]) +
                        alpha * sum_w;
                    const double num_u = -psi_d * it[i] * bwx[i] -
                                         psi_g * (itx[i] * bwxx[i] + ity[i] * bwxy[i]) -
                                         cross * dv[i] +
                                         alpha * (nbr_u - sum_w * u[i]);
                    du[i] = (1.0 - omega) * du[i] + omega * num_u / den_u;

                    const double den_v =
                        psi_d * bwy[i] * bwy[i] + psi_g * (bwxy[i] * bwxy[i] + bwyy[i] * bwyy[i]) +
                        alpha * sum_w;
                    const double num_v = -psi_d * it[i] * bwy[i] -
                                         psi_g * (itx[i] * bwxy[i] + ity[i] * bwyy[i]) -
                                         cross * du[i] +
                                         alpha * (nbr_v - sum_w * v[i]);
                    dv[i] = (1.0 - omega) * dv[i] + omega * num_v / den_v;
                }
            }
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            u[i] += du[i];
            v[i] += dv[i];
        }
        const double next_energy = energy_level(a, b, u, v, w, h, cfg);
        if (next_energy > current_energy) {
            u = std::move(u_prev);
            v = std::move(v_prev);
            break;
        }
        current_energy = next_energy;
    }
}

void validate_config(const FlowSolverConfig& cfg) {
    if (!(cfg.alpha > 0.0) || !(cfg.psi_epsilon > 0.0) || cfg.gradient_weight < 0.0 ||
        !(cfg.pyramid_factor > 0.0 && cfg.pyramid_factor < 1.0) || cfg.pyramid_min_size < 4 ||
        cfg.outer_iterations < 1 || cfg.inner_iterations < 1 ||
        !(cfg.sor_omega > 0.0 && cfg.sor_omega < 2.0)) {
        throw std::invalid_argument("invalid flow solver configuration");
    }
}

}  // namespace

FlowField estimate_flow(const Frame& a, const Frame& b, const FlowSolverConfig& cfg,
                        FlowStats* stats) {
    validate_config(cfg);
    validate_frame(a);
    validate_frame(b);
    if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("estimate_flow: frame dimensions differ");
    }
    if (a.width < cfg.pyramid_min_size || a.height < cfg.pyramid_min_size) {
        throw std::invalid_argument("estimate_flow: frames smaller than pyramid_min_size");
    }
    if (stats) stats->levels.clear();

    // pyramid sizes, finest first
    std::vector<std::pair<int, int>> sizes{{a.width, a.height}};
    while (std::min(sizes.back().first, sizes.back().second) * cfg.pyramid_factor >=
           cfg.pyramid_min_size) {
        const int nw = static_cast<int>(std::lround(sizes.back().first * cfg.pyramid_factor));
        const int nh = static_cast<int>(std::lround(sizes.back().second * cfg.pyramid_factor));
        if (nw >= sizes.back().first || nh >= sizes.back().second) break;
        sizes.emplace_back(nw, nh);
    }

    std::vector<Grid> as(sizes.size()), bs(sizes.size());
    as[0] = a.intensity;
    bs[0] = b.intensity;
    for (std::size_t l = 1; l < sizes.size(); ++l) {
        const auto [pw, ph] = sizes[l - 1];
        const auto [nw, nh] = sizes[l];
        as[l] = resample(binomial_blur(as[l - 1], pw, ph), pw, ph, nw, nh);
        bs[l] = resample(binomial_blur(bs[l - 1], pw, ph), pw, ph, nw, nh);
    }

    Grid u, v;
    for (std::size_t idx = sizes.size(); idx-- > 0;) {
        const auto [w, h] = sizes[idx];
        if (idx + 1 == sizes.size()) {
            u.assign(static_cast<std::size_t>(w) * h, 0.0);
            v.assign(static_cast<std::size_t>(w) * h, 0.0);
        } else {
            const auto [pw, ph] = sizes[idx + 1];
            Grid nu = resample(u, pw, ph, w, h);
            Grid nv = resample(v, pw, ph, w, h);
            const double su = static_cast<double>(w) / pw;
            const double sv = static_cast<double>(h) / ph;
            for (double& x : nu) x *= su;
            for (double& x : nv) x *= sv;
            u = std::move(nu);
            v = std::move(nv);
        }

        FlowLevelStats level{w, h, 0.0, 0.0};
        if (stats) level.initial_energy = energy_level(as[idx], bs[idx], u, v, w, h, cfg);
        solve_level(as[idx], bs[idx], u, v, w, h, cfg);
        if (stats) {
            level.final_energy = energy_level(as[idx], bs[idx], u, v, w, h, cfg);
            stats->levels.push_back(level);
        }
    }

    FlowField flow(a.width, a.height);
    flow.u = std::move(u);
    flow.v = std::move(v);
    return flow;
}

Frame warp(const Frame& b, const FlowField& flow) {
    validate_frame(b);
    if (b.width != flow.width || b.height != flow.height) {
        throw std::invalid_argument("warp: frame/flow dimensions differ");
    }
    Frame out(b.width, b.height);
    out.intensity = warp_grid(b.intensity, b.width, b.height, flow.u, flow.v);
    return out;
}

double flow_energy(const Frame& a, const Frame& b, const FlowField& flow,
                   const FlowSolverConfig& cfg) {
    if (a.width != b.width || a.height != b.height || a.width != flow.width ||
        a.height != flow.height) {
        throw std::invalid_argument("flow_energy: dimensions differ");
    }
    return energy_level(a.intensity, b.intensity, flow.u, flow.v, a.width, a.height, cfg);
}

namespace {
constexpr float kFloMagic = 202021.25f;
static_assert(std::endian::native == std::endian::little,
              "flo I/O assumes a little-endian host");
}  // namespace

FlowField read_flo(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open flo file " + path.string());
    float magic = 0.0f;
    std::int32_t w = 0, h = 0;
    in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
    in.read(reinterpret_cast<char*>(&w), sizeof(w));
    in.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (!in) throw FormatError("truncated flo header in " + path.string());
    if (magic != kFloMagic) throw FormatError("bad flo magic in " + path.string());
    if (w < 1 || w > 99999 || h < 1 || h > 99999) {
        throw FormatError("implausible flo dimensions in " + path.string());
    }
    FlowField flow(w, h);
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<float> raw(n * 2);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != raw.size() * sizeof(float)) {
        throw FormatError("truncated flo data in " + path.string());
    }
    for (std::size_t i = 0; i < n; ++i) {
        flow.u[i] = raw[2 * i];
        flow.v[i] = raw[2 * i + 1];
    }
    return flow;
}

void write_flo(const FlowField& flow, const std::filesystem::path& path) {
    if (flow.width < 1 || flow.height < 1 ||
        flow.u.size() != static_cast<std::size_t>(flow.width) * flow.height ||
        flow.v.size() != flow.u.size()) {
        throw std::invalid_argument("write_flo: invalid flow field");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open flo file for writing " + path.string());
    const std::int32_t w = flow.width, h = flow.height;
    out.write(reinterpret_cast<const char*>(&kFloMagic), sizeof(kFloMagic));
    out.write(reinterpret_cast<const char*>(&w), sizeof(w));
    out.write(reinterpret_cast<const char*>(&h), sizeof(h));
    const std::size_t n = flow.u.size();
    std::vector<float> raw(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        raw[2 * i] = static_cast<float>(flow.u[i]);
        raw[2 * i + 1] = static_cast<float>(flow.v[i]);
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (!out) throw IoError("failed writing flo " + path.string());
}

}  // namespace comotion
