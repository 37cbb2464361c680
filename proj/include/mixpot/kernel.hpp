#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "mixpot/params.hpp"
#include "mixpot/potentials.hpp"

namespace mixpot {

enum class KernelVariant { Model, Scaled, RadialModulated, None };

/// Translation-invariant symmetric kernels K(x,y) = k(|x-y|) |x-y|^{-n-sp}.
/// Scaled: k = kappa. RadialModulated: k(t) = (nu+L)/2 + (L-nu)/2 cos(omega t),
/// which stays in [nu, L]. None disables the nonlocal term.
struct KernelSpec {
    KernelVariant variant = KernelVariant::Model;
    double kappa = 1.0;
    double nu = 1.0, L = 1.0, omega = 1.0;

    static KernelSpec model() { return {}; }
    static KernelSpec scaled(double k) { return {KernelVariant::Scaled, k, 1.0, 1.0, 1.0}; }
    static KernelSpec modulated(double nu, double L, double omega) {
        return {KernelVariant::RadialModulated, 1.0, nu, L, omega};
    }
    static KernelSpec none() { return {KernelVariant::None, 0.0, 1.0, 1.0, 1.0}; }

    double modulation(double t) const {
        switch (variant) {
            case KernelVariant::Model: return 1.0;
            case KernelVariant::Scaled: return kappa;
            case KernelVariant::RadialModulated: return 0.5 * (nu + L) + 0.5 * (L - nu) * std::cos(omega * t);
            case KernelVariant::None: return 0.0;
        }
        return 1.0;
    }

    /// coefficient applied to the far-field mass beyond the grid
    double far_coefficient() const {
        switch (variant) {
            case KernelVariant::Model: return 1.0;
            case KernelVariant::Scaled: return kappa;
            case KernelVariant::RadialModulated: return 0.5 * (nu + L);
            case KernelVariant::None: return 0.0;
        }
        return 1.0;
    }

    std::string key() const {
        std::ostringstream os;
        os.precision(17);
        switch (variant) {
            case KernelVariant::Model: os << "model"; break;
            case KernelVariant::Scaled: os << "scaled:" << kappa; break;
            case KernelVariant::RadialModulated: os << "modulated:" << nu << ':' << L << ':' << omega; break;
            case KernelVariant::None: os << "none"; break;
        }
        return os.str();
    }
};

/// Constant C_{1,s} of the one-dimensional fractional Laplacian, whose
/// Fourier symbol is then |k|^{2s}.
inline double fractional_laplacian_constant_1d(double s) {
    return s * std::pow(2.0, 2.0 * s) * std::tgamma(0.5 + s) / (std::sqrt(std::numbers::pi) * std::tgamma(1.0 - s));
}

inline constexpr std::size_t kDenseNodeLimit = 20000;

/// Cell integrals w_ij = integral over cell j of K(x_i, y) dy, stored as a
/// Toeplitz table over |offset| (the kernel is translation invariant and even),
/// plus the kernel mass beyond the grid for every node.
class KernelWeights {
public:
    static KernelWeights assemble(const GridPtr& grid, const ParamSet& prm, const KernelSpec& spec,
                                  bool dense_ok = false) {
        const GridDomain& g = *grid;
        if (g.size() > kDenseNodeLimit && !dense_ok)
            throw DomainError("grid has " + std::to_string(g.size()) +
                              " nodes; dense kernel assembly above 20000 nodes requires dense_ok");
        KernelWeights W;
        W.grid_ = grid;
        W.s_ = prm.s;
        W.p_ = prm.p;
        W.spec_ = spec;
        W.nx_ = g.nx();
        W.ny_ = g.ny();
        W.table_.assign(static_cast<std::size_t>(W.nx_) * static_cast<std::size_t>(W.ny_), 0.0);
        W.far_.assign(g.size(), 0.0);
        if (spec.variant == KernelVariant::None) return W;
        const double alpha = prm.s * prm.p;
        const double h = g.h();
        const double scale = std::pow(h, -alpha);
        for (int ky = 0; ky < W.ny_; ++ky)
            for (int kx = 0; kx < W.nx_; ++kx) {
                if (kx == 0 && ky == 0) continue;
                W.table_[W.slot(kx, ky)] = scale * unit_cell_integral(g.dim(), kx, ky, alpha, spec, h);
            }
        const double fc = spec.far_coefficient();
        for (std::size_t i = 0; i < g.size(); ++i) W.far_[i] = fc * far_kernel_mass(g, g.coord(i), 0.0, alpha);
        return W;
    }

    /// integral over the unit cell centred at integer offset (kx, ky) of
    /// k(h|y|) |y|^{-n-alpha} dy; exact for the 1D model kernel
    static double unit_cell_integral(int dim, int kx, int ky, double alpha, const KernelSpec& spec, double h) {
        if (dim == 1) {
            const double a = kx - 0.5, b = kx + 0.5;
            if (spec.variant == KernelVariant::Model || spec.variant == KernelVariant::Scaled)
                return spec.modulation(0.0) * (std::pow(a, -alpha) - std::pow(b, -alpha)) / alpha;
            using GL = boost::math::quadrature::gauss<double, 10>;
            const int sub = kx <= 3 ? 16 : 1;
            double acc = 0.0;
            for (int q = 0; q < sub; ++q) {
                const double lo = a + q / static_cast<double>(sub), hi = lo + 1.0 / sub;
                acc += GL::integrate([&](double y) { return spec.modulation(h * y) * std::pow(y, -1.0 - alpha); }, lo, hi);
            }
            return acc;
        }
        using GL = boost::math::quadrature::gauss<double, 4>;
        const auto& xs = GL::abscissa();
        const auto& ws = GL::weights();
        std::array<std::pair<double, double>, 4> nodes{{{-xs[1], ws[1]}, {-xs[0], ws[0]}, {xs[0], ws[0]}, {xs[1], ws[1]}}};
        const int cheb = std::max(kx, ky);
        const int sub = cheb <= 3 ? 16 : 1;
        const double w = 1.0 / sub;
        std::vector<double> parts;
        parts.reserve(static_cast<std::size_t>(sub * sub));
        for (int a = 0; a < sub; ++a)
            for (int b = 0; b < sub; ++b) {
                const double cx = kx - 0.5 + (a + 0.5) * w, cy = ky - 0.5 + (b + 0.5) * w;
                double acc = 0.0;
                for (const auto& [xa, wa] : nodes)
                    for (const auto& [xb, wb] : nodes) {
                        const double x = cx + 0.5 * w * xa, y = cy + 0.5 * w * xb;
                        const double r2 = x * x + y * y;
                        acc += wa * wb * spec.modulation(h * std::sqrt(r2)) * std::pow(r2, -0.5 * (2.0 + alpha));
                    }
                parts.push_back(acc * 0.25 * w * w);
            }
        return pairwise_sum(parts.begin(), parts.end());
    }

    const GridPtr& grid() const { return grid_; }
    double s() const { return s_; }
    double p() const { return p_; }
    const KernelSpec& spec() const { return spec_; }
    bool disabled() const { return spec_.variant == KernelVariant::None; }

    /// weight between nodes i and j (0 on the diagonal)
    double weight(std::size_t i, std::size_t j) const {
        const GridDomain& g = *grid_;
        return table_[slot(std::abs(g.ix(i) - g.ix(j)), std::abs(g.iy(i) - g.iy(j)))];
    }
    double offset_weight(int dx, int dy) const { return table_[slot(std::abs(dx), std::abs(dy))]; }
    const double* table_row(int dy) const { return table_.data() + slot(0, std::abs(dy)); }
    double far(std::size_t i) const { return far_[i]; }
    const std::vector<double>& far_masses() const { return far_; }
    const std::vector<double>& table() const { return table_; }

    /// cache key over (grid geometry, s, p, kernel variant)
    std::string cache_key() const { return cache_key_for(*grid_, s_, p_, spec_); }

    static std::string cache_key_for(const GridDomain& g, double s, double p, const KernelSpec& spec) {
        std::ostringstream os;
        os.precision(17);
        os << hex64(g.geometry_hash()) << '|' << s << '|' << p << '|' << spec.key();
        return hex64(fnv1a(os.str()));
    }

    void save(const std::filesystem::path& file) const {
        std::ostringstream payload;
        write_vec(payload, table_);
        write_vec(payload, far_);
        const std::string body = payload.str();
        const std::string key = cache_key();
        const std::uint64_t sum = fnv1a(body);
        const auto tmp = file.string() + ".tmp";
        {
            std::ofstream os(tmp, std::ios::binary);
            if (!os) throw Error("cannot write kernel cache " + tmp);
            os.write(kMagic, sizeof(kMagic));
            os.write(key.data(), static_cast<std::streamsize>(key.size()));
            os.write(reinterpret_cast<const char*>(&sum), sizeof(sum));
            os.write(body.data(), static_cast<std::streamsize>(body.size()));
        }
        std::filesystem::rename(tmp, file);
    }

    /// Load a cached table; throws Error on key or checksum mismatch.
    static KernelWeights load(const std::filesystem::path& file, const GridPtr& grid, const ParamSet& prm,
                              const KernelSpec& spec) {
        std::ifstream is(file, std::ios::binary);
        if (!is) throw Error("cannot open kernel cache " + file.string());
        std::string all((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        const std::string key = cache_key_for(*grid, prm.s, prm.p, spec);
        const std::size_t head = sizeof(kMagic) + key.size() + sizeof(std::uint64_t);
        if (all.size() < head || std::memcmp(all.data(), kMagic, sizeof(kMagic)) != 0)
            throw Error("kernel cache is corrupted: bad header");
        if (all.compare(sizeof(kMagic), key.size(), key) != 0) throw Error("kernel cache key mismatch");
        std::uint64_t sum;
        std::memcpy(&sum, all.data() + sizeof(kMagic) + key.size(), sizeof(sum));
        const std::string body = all.substr(head);
        if (fnv1a(body) != sum) throw Error("kernel cache is corrupted: checksum mismatch");
        KernelWeights W;
        W.grid_ = grid;
        W.s_ = prm.s;
        W.p_ = prm.p;
        W.spec_ = spec;
        W.nx_ = grid->nx();
        W.ny_ = grid->ny();
        std::istringstream in(body);
        W.table_ = read_vec(in);
        W.far_ = read_vec(in);
        if (W.table_.size() != static_cast<std::size_t>(W.nx_) * static_cast<std::size_t>(W.ny_) ||
            W.far_.size() != grid->size())
            throw Error("kernel cache is corrupted: size mismatch");
        return W;
    }

    /// Load from cache_dir when a valid entry exists, else assemble and store.
    static KernelWeights cached(const std::filesystem::path& cache_dir, const GridPtr& grid, const ParamSet& prm,
                                const KernelSpec& spec, bool dense_ok = false) {
        if (cache_dir.empty()) return assemble(grid, prm, spec, dense_ok);
        std::filesystem::create_directories(cache_dir);
        const auto file = cache_dir / (cache_key_for(*grid, prm.s, prm.p, spec) + ".kw");
        if (std::filesystem::exists(file)) return load(file, grid, prm, spec);
        KernelWeights W = assemble(grid, prm, spec, dense_ok);
        W.save(file);
        return W;
    }

private:
    static constexpr char kMagic[8] = {'M', 'P', 'K', 'W', '0', '0', '0', '1'};

    std::size_t slot(int ax, int ay) const {
        return static_cast<std::size_t>(ay) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(ax);
    }

    static void write_vec(std::ostream& os, const std::vector<double>& v) {
        const std::uint64_t n = v.size();
        os.write(reinterpret_cast<const char*>(&n), sizeof(n));
        os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    }
    static std::vector<double> read_vec(std::istream& is) {
        std::uint64_t n = 0;
        is.read(reinterpret_cast<char*>(&n), sizeof(n));
        if (!is || n > (1ULL << 32)) throw Error("kernel cache is corrupted: bad length");
        std::vector<double> v(n);
        is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
        if (!is) throw Error("kernel cache is corrupted: truncated");
        return v;
    }

    GridPtr grid_;
    double s_ = 0.5, p_ = 2.0;
    KernelSpec spec_;
    int nx_ = 0, ny_ = 0;
    std::vector<double> table_;
    std::vector<double> far_;
};

/// phi(d) = |d|^{p-2} d
inline double phi_p(double d, double p) {
    if (p == 2.0) return d;
    if (d == 0.0) return 0.0;
    return std::pow(std::abs(d), p - 2.0) * d;
}

/// Plain O(N^2) application of the discretised fractional p-Laplacian at
/// every node: sum_j w_ij phi(u_i - u_j) + far_i phi(u_i - g_inf).
inline GridFunction apply_fractional_pLaplacian(const GridFunction& u, const KernelWeights& W, double p) {
    const GridDomain& g = *u.grid;
    if (!g.same_geometry(*W.grid())) throw DomainError("kernel weights belong to a different grid");
    GridFunction out(u.grid, 0.0, 0.0);
    if (W.disabled()) return out;
    const double ginf = u.far();
    std::vector<double> row(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = 0; j < g.size(); ++j) row[j] = i == j ? 0.0 : W.weight(i, j) * phi_p(u.values[i] - u.values[j], p);
        out.values[i] = pairwise_sum(row.begin(), row.end()) + W.far(i) * phi_p(u.values[i] - ginf, p);
    }
    return out;
}

}  // namespace mixpot
