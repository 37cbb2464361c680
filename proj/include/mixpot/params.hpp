#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mixpot/core.hpp"

namespace mixpot {

/// Thrown by ParamSet::validate with every violated constraint listed.
class ParamError : public DomainError {
public:
    ParamError(const std::vector<std::string>& problems) : DomainError(join(problems)), problems_(problems) {}
    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : "; ") + x;
        return s;
    }
    std::vector<std::string> problems_;
};

/// Free exponents of the decay estimates. Defaults: sigma = 0.9,
/// eps1 = min(1 - sigma, 1 - s) / (4p) when p >= 2; for p < 2,
/// m = (1 - sigma)/4 * min{1/(2-p), 1/(p-1), 1-s} and eps1 = m/2.
struct DecayExponents {
    double sigma = 0.9;
    double eps1 = 0.0;
    double m = 0.0;

    static DecayExponents defaults(double s, double p, double sigma = 0.9) {
        DecayExponents d;
        d.sigma = sigma;
        if (p >= 2.0) {
            d.eps1 = std::min(1.0 - sigma, 1.0 - s) / (4.0 * p);
        } else {
            d.m = default_m(s, p, sigma);
            d.eps1 = 0.5 * d.m;
        }
        return d;
    }

    static double default_m(double s, double p, double sigma = 0.9) {
        return (1.0 - sigma) / 4.0 * std::min({1.0 / (2.0 - p), 1.0 / (p - 1.0), 1.0 - s});
    }

    void validate(double s, double p) const {
        std::vector<std::string> bad;
        if (!(sigma > 0.0 && sigma < 1.0)) bad.push_back("requires sigma in (0,1)");
        if (!(eps1 > 0.0 && eps1 < (1.0 - s) / p)) bad.push_back("requires eps1 in (0,(1-s)/p)");
        if (p < 2.0 && !(m > 0.0 && m < 1.0 - s)) bad.push_back("requires m in (0,1-s)");
        if (!bad.empty()) throw ParamError(bad);
    }
};

struct ParamSet {
    int n = 2;
    double s = 0.5;
    double p = 2.0;
    double nu_A = 1.0, L_A = 1.0;
    double nu_K = 1.0, L_K = 1.0;
    /// only meaningful for p < 2; defaults to the sigma = 0.9 choice
    std::optional<double> m;

    double q0() const { return std::max(p - 1.0, 1.0); }
    double p_conj() const { return p / (p - 1.0); }
    double m_value() const { return m.value_or(DecayExponents::default_m(s, p)); }
    double abar1() const { return p >= 2.0 ? (1.0 - s) / (p - 1.0) : m_value(); }
    double abar2() const { return p >= 2.0 ? 1.0 / (p - 1.0) : (1.0 - m_value() * (2.0 - p)) / (p - 1.0); }

    /// Upper end of the admissible gradient-integrability range, n(p-1)/(n-1) capped by p.
    double q_upper() const { return n == 1 ? p : std::min(n * (p - 1.0) / (n - 1.0), p); }
    /// Midpoint of [q0, q_upper).
    double q_default() const { return 0.5 * (q0() + q_upper()); }

    std::vector<std::string> violations() const {
        std::vector<std::string> bad;
        if (n != 1 && n != 2) bad.push_back("requires n in {1,2}");
        if (!(s > 0.0 && s < 1.0)) bad.push_back("requires s in (0,1)");
        if (!(p > 2.0 - 1.0 / std::max(n, 1))) bad.push_back("requires p > 2 - 1/n");
        if (!(nu_A > 0.0 && nu_A <= L_A)) bad.push_back("requires 0 < nu_A <= L_A");
        if (!(nu_K > 0.0 && nu_K <= L_K)) bad.push_back("requires 0 < nu_K <= L_K");
        if (p < 2.0 && m && !(*m > 0.0 && *m < 1.0 - s)) bad.push_back("requires m in (0,1-s)");
        if (bad.empty() && !(abar1() < abar2())) bad.push_back("requires abar1 < abar2");
        return bad;
    }

    void validate() const {
        auto bad = violations();
        if (!bad.empty()) throw ParamError(bad);
    }
};

using Mat2 = std::array<std::array<double, 2>, 2>;

enum class FieldVariant { Model, Regularized, Coefficient };

/// Local vector field A. Model: |z|^{p-2} z. Regularized:
/// (eps^2 + |z|^2)^{(p-2)/2} z. Coefficient: a(x) |z|^{p-2} z.
struct FieldSpec {
    FieldVariant variant = FieldVariant::Model;
    double p = 2.0;
    double eps = 0.0;
    std::function<double(const Point&)> coeff;

    static FieldSpec model(double p) { return {FieldVariant::Model, p, 0.0, {}}; }
    static FieldSpec regularized(double p, double eps) {
        if (!(eps > 0.0)) throw DomainError("regularization eps must be positive");
        return {FieldVariant::Regularized, p, eps, {}};
    }
    static FieldSpec coefficient(double p, std::function<double(const Point&)> a) {
        return {FieldVariant::Coefficient, p, 0.0, std::move(a)};
    }

    /// Same field with a different regularization; eps = 0 means the model field.
    FieldSpec with_eps(double e) const {
        FieldSpec f = *this;
        if (variant == FieldVariant::Coefficient) return f;
        f.variant = e > 0.0 ? FieldVariant::Regularized : FieldVariant::Model;
        f.eps = e;
        return f;
    }

    /// Scalar factor a with A(z) = a * z.
    double factor(double z2, const Point& x = {}) const {
        const double c = variant == FieldVariant::Coefficient ? coeff(x) : 1.0;
        if (p == 2.0) return c;
        if (variant == FieldVariant::Regularized) return std::pow(eps * eps + z2, 0.5 * (p - 2.0));
        if (z2 == 0.0) {
            if (p < 2.0) throw DomainError("degenerate evaluation");
            return 0.0;
        }
        return c * std::pow(z2, 0.5 * (p - 2.0));
    }
};

inline Vec2 vector_field_A(const Vec2& z, const FieldSpec& f, int dim = 2, const Point& x = {}) {
    const double a = f.factor(dot(z, z, dim), x);
    return {a * z[0], dim == 2 ? a * z[1] : 0.0};
}

/// A(z) with the continuous extension A(0) = 0, for diagnostics on sampled
/// gradients (the model field is continuous at 0 for every p > 1).
inline Vec2 vector_field_A_ext(const Vec2& z, const FieldSpec& f, int dim = 2, const Point& x = {}) {
    if (dot(z, z, dim) == 0.0) return {0.0, 0.0};
    return vector_field_A(z, f, dim, x);
}

inline Mat2 jacobian_A(const Vec2& z, const FieldSpec& f, int dim = 2, const Point& x = {}) {
    const double z2 = dot(z, z, dim);
    const double c = f.variant == FieldVariant::Coefficient ? f.coeff(x) : 1.0;
    Mat2 J{};
    if (f.p == 2.0) {
        for (int i = 0; i < dim; ++i) J[i][i] = c;
        return J;
    }
    double a, b;  // J = a I + b z z^T
    if (f.variant == FieldVariant::Regularized) {
        const double t = f.eps * f.eps + z2;
        a = std::pow(t, 0.5 * (f.p - 2.0));
        b = (f.p - 2.0) * std::pow(t, 0.5 * (f.p - 4.0));
    } else {
        if (z2 == 0.0) {
            if (f.p < 2.0) throw DomainError("degenerate evaluation");
            return J;
        }
        a = c * std::pow(z2, 0.5 * (f.p - 2.0));
        b = c * (f.p - 2.0) * std::pow(z2, 0.5 * (f.p - 4.0));
    }
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) J[i][j] = (i == j ? a : 0.0) + b * z[i] * z[j];
    return J;
}

/// V(z) = |z|^{(p-2)/2} z, V(0) = 0.
inline Vec2 v_map(const Vec2& z, double p, int dim = 2) {
    const double z2 = dot(z, z, dim);
    if (z2 == 0.0) return {0.0, 0.0};
    const double a = std::pow(z2, 0.25 * (p - 2.0));
    return {a * z[0], dim == 2 ? a * z[1] : 0.0};
}

/// Inverse of the model field: |w|^{(2-p)/(p-1)} w.
inline Vec2 inverse_A(const Vec2& w, const FieldSpec& f, int dim = 2) {
    if (f.variant != FieldVariant::Model) throw DomainError("inverse_A supports the model field only");
    const double w2 = dot(w, w, dim);
    if (w2 == 0.0) return {0.0, 0.0};
    const double a = std::pow(w2, 0.5 * (2.0 - f.p) / (f.p - 1.0));
    return {a * w[0], dim == 2 ? a * w[1] : 0.0};
}

}  // namespace mixpot
